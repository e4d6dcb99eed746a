"""Path-tree skeletonization: heart, extreme points, weighted chains, smoothing.

Chains run from limb-tip voxels to the growing tree along paths that prefer
the deep interior: stepping onto a voxel at boundary distance d costs 1/d^3
(optionally scaled by the step length to remove diagonal bias).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.ndimage import binary_dilation
from scipy.sparse import csgraph

from .distance import DistanceField
from .errors import EmptyMedialSurfaceError
from .medial import MedialSurface
from .voxel import VoxelGrid, voxel_to_world

_OFFSETS = np.array(
    [(di, dj, dk)
     for di in (-1, 0, 1) for dj in (-1, 0, 1) for dk in (-1, 0, 1)
     if (di, dj, dk) != (0, 0, 0)],
    dtype=np.int64,
)
_STEP_LEN = np.linalg.norm(_OFFSETS, axis=1)


@dataclass(frozen=True)
class Heart:
    """Deepest medial voxel; root of the path tree."""

    voxel: tuple
    dist: float


@dataclass
class Chain:
    voxels: np.ndarray  # (k, 3), ordered extreme -> attachment
    extreme: tuple
    attachment: tuple

    def __len__(self):
        return len(self.voxels)


@dataclass
class PathTree:
    root: Heart
    chains: list
    covered: set            # DMS voxels inside some tree voxel's sphere
    skipped: list = field(default_factory=list)  # (extreme, reason) records


@dataclass
class SmoothChain:
    points: np.ndarray  # (k, 3) world coordinates
    source: Chain


def find_heart(dms: MedialSurface) -> Heart:
    """Medial voxel of maximal boundary distance, lexicographic tie-break."""
    if not len(dms):
        raise EmptyMedialSurfaceError("empty medial surface")
    d = dms.field.dist2[tuple(dms.voxels.T)]
    best = int(np.argmax(d))  # voxels are lex-sorted, argmax takes the first
    return Heart(voxel=tuple(int(c) for c in dms.voxels[best]),
                 dist=float(math.sqrt(int(d[best]))))


def _bfs_depth(dms: MedialSurface, start) -> dict:
    """Hop depth from `start` over 26-connected medial voxels."""
    depth = {start: 0}
    queue = deque([start])
    mask = dms.mask
    while queue:
        v = queue.popleft()
        dv = depth[v]
        for off in _OFFSETS:
            u = (v[0] + off[0], v[1] + off[1], v[2] + off[2])
            if u not in depth and mask[u]:
                depth[u] = dv + 1
                queue.append(u)
    return depth


def find_extreme_points(dms: MedialSurface, heart: Heart) -> list:
    """Local maxima of BFS depth from the heart, deepest first.

    Medial voxels not reachable from the heart over the medial set are not
    candidates; thin-limb gaps are handled later by routing chains through
    any solid voxel.
    """
    if not dms.mask[heart.voxel]:
        raise ValueError("heart is not a medial voxel")
    depth = _bfs_depth(dms, heart.voxel)
    mask = dms.mask
    extremes = []
    for v, dv in depth.items():
        is_max = True
        for off in _OFFSETS:
            u = (v[0] + off[0], v[1] + off[1], v[2] + off[2])
            if mask[u] and depth.get(u, -1) > dv:
                is_max = False
                break
        if is_max:
            extremes.append(tuple(int(c) for c in v))
    extremes.sort(key=lambda v: (-depth[v], v))
    return extremes


def path_weight(path, field: DistanceField) -> float:
    """Sum of 1/dist^3 over the path's voxels (voxel-unit distances)."""
    total = 0.0
    for v in np.asarray(path).reshape(-1, 3):
        d = field.dist[tuple(v)]
        if d <= 0:
            raise ValueError(f"voxel {tuple(v)} on path has zero boundary distance")
        total += 1.0 / d**3
    return total


def _solid_graph(field: DistanceField, cost_mode):
    """Directed 26-neighbor graph over solid voxels; entering voxel v costs
    1/dist(v)^3, times the step length in `weighted` mode."""
    occ = field.grid.occupancy
    coords = np.argwhere(occ)
    n = len(coords)
    index = -np.ones(occ.shape, dtype=np.int64)
    index[tuple(coords.T)] = np.arange(n)
    w = 1.0 / field.dist[tuple(coords.T)] ** 3
    rows, cols, data = [], [], []
    for off, step in zip(_OFFSETS, _STEP_LEN):
        nbr = coords + off
        nbr_idx = index[tuple(nbr.T)]  # padding keeps nbr in-grid
        ok = nbr_idx >= 0
        rows.append(np.arange(n)[ok])
        cols.append(nbr_idx[ok])
        cost = w[nbr_idx[ok]]
        if cost_mode == "weighted":
            cost = cost * step
        data.append(cost)
    graph = sparse.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    return coords, index, graph


def _covered_update(covered_mask, dms: MedialSurface, tree_voxels):
    """Mark DMS voxels inside the sphere of each new tree voxel (radius =
    that voxel's boundary distance; integer comparison, exact)."""
    pts = dms.voxels
    d2 = dms.field.dist2
    for t in np.asarray(tree_voxels).reshape(-1, 3):
        r2 = d2[tuple(t)]
        hit = ((pts - t) ** 2).sum(axis=1) <= r2
        covered_mask[tuple(pts[hit].T)] = True


def _too_close_mask(covered_mask, solid, threshold):
    """Solid voxels whose hop distance to the covered set is < threshold."""
    iters = int(math.ceil(threshold)) - 1
    if iters <= 0:
        return covered_mask.copy()
    struct = np.ones((3, 3, 3), dtype=bool)
    return binary_dilation(covered_mask, structure=struct, iterations=iters,
                           mask=solid)


def build_path_tree(dms: MedialSurface, heart: Heart, extremes,
                    accept_threshold: float = 4.0,
                    cost_mode: str = "weighted") -> PathTree:
    """Grow chains from the deepest uncovered extremes toward the tree.

    Each accepted chain is the minimal-cost voxel path (Dijkstra over solid
    voxels) from the extreme to the nearest tree voxel; its voxels' coverage
    spheres then retire nearby extremes (hop distance < accept_threshold).
    """
    if cost_mode not in ("weighted", "paper"):
        raise ValueError(f"unknown cost mode {cost_mode!r}")
    field = dms.field
    occ = field.grid.occupancy
    coords, index, graph = _solid_graph(field, cost_mode)

    covered_mask = np.zeros(occ.shape, dtype=bool)
    _covered_update(covered_mask, dms, [heart.voxel])
    tree_mask = np.zeros(occ.shape, dtype=bool)
    tree_mask[heart.voxel] = True
    tree_nodes = [int(index[heart.voxel])]

    chains = []
    skipped = []
    reject = _too_close_mask(covered_mask, occ, accept_threshold)
    for ext in extremes:
        ext = tuple(int(c) for c in ext)
        if reject[ext]:
            continue
        src = int(index[ext])
        dist, pred = csgraph.dijkstra(graph, directed=True, indices=src,
                                      return_predecessors=True)
        tree_arr = np.asarray(tree_nodes)
        best = tree_arr[np.argmin(dist[tree_arr])]
        if not np.isfinite(dist[best]):
            skipped.append((ext, "unreachable from the tree (disconnected solid)"))
            continue
        node_path = [int(best)]
        while node_path[-1] != src:
            node_path.append(int(pred[node_path[-1]]))
        node_path.reverse()  # now src (extreme) ... best (attachment)
        voxels = coords[node_path]
        chains.append(Chain(voxels=voxels, extreme=ext,
                            attachment=tuple(int(c) for c in voxels[-1])))
        new_nodes = [i for i in node_path if not tree_mask[tuple(coords[i])]]
        tree_nodes.extend(new_nodes)
        tree_mask[tuple(voxels.T)] = True
        _covered_update(covered_mask, dms, voxels)
        reject = _too_close_mask(covered_mask, occ, accept_threshold)

    covered = {tuple(v) for v in np.argwhere(covered_mask & dms.mask).tolist()}
    return PathTree(root=heart, chains=chains, covered=covered, skipped=skipped)


def smooth_chain(chain: Chain, grid: VoxelGrid, iterations: int = 10) -> SmoothChain:
    """Endpoint-pinned moving-average smoothing of the chain's voxel centers."""
    if len(chain) < 2:
        raise ValueError("chain must have at least 2 voxels")
    pts = voxel_to_world(grid, chain.voxels).astype(np.float64)
    for _ in range(iterations):
        if len(pts) < 3:
            break
        pts[1:-1] = (pts[:-2] + 2.0 * pts[1:-1] + pts[2:]) / 4.0
    return SmoothChain(points=pts, source=chain)


def dump_chains_obj(chains, grid: VoxelGrid, path) -> None:
    """Chains as OBJ polylines (`l` records) for eyeballing in a viewer."""
    lines = []
    polys = []
    base = 1
    for sc in chains:
        pts = sc.points if isinstance(sc, SmoothChain) else voxel_to_world(grid, sc.voxels)
        for x, y, z in pts:
            lines.append(f"v {x:.8f} {y:.8f} {z:.8f}")
        polys.append("l " + " ".join(str(base + i) for i in range(len(pts))))
        base += len(pts)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines + polys) + "\n")
