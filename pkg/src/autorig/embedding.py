"""Template embedding on a sphere-packing graph.

The shape is approximated by greedily packed interior spheres; overlapping
spheres whose connecting segment stays inside the shape become graph edges.
A reduced joint template is then assigned to graph vertices by a beam search
over partial assignments scored with a weighted penalty, and the winning
assignment is relaxed continuously against the distance field.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import distance_matrix

from .distance import DistanceField, query_distances
from .errors import EmptyMedialSurfaceError, InfeasibleEmbeddingError, OutOfBoundsError
from .medial import MedialSurface
from .skeleton import Joint, Skeleton
from .voxel import voxel_to_world

FEATURE_NAMES = ("length_ratio", "direction", "extremity", "asymmetry", "crowding")


@dataclass
class SpherePacking:
    centers: np.ndarray  # (s, 3) world
    radii: np.ndarray    # (s,) world units, non-increasing

    def __len__(self):
        return len(self.radii)


@dataclass
class EmbedGraph:
    centers: np.ndarray        # (n, 3) sphere centers
    edges: np.ndarray          # (e, 2) int, i < j, no duplicates
    lengths: np.ndarray        # (e,) Euclidean center distances
    radii: np.ndarray | None = None
    _geo: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self):
        return len(self.centers)

    def degrees(self):
        deg = np.zeros(self.n, dtype=np.int64)
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg

    def adjacency(self):
        if len(self.edges) == 0:
            return sparse.csr_matrix((self.n, self.n))
        r = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        c = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        d = np.concatenate([self.lengths, self.lengths])
        return sparse.csr_matrix((d, (r, c)), shape=(self.n, self.n))

    def geodesic(self):
        """All-pairs shortest-path lengths along edges (inf if disconnected)."""
        if self._geo is None:
            self._geo = csgraph.shortest_path(self.adjacency(), method="D",
                                              directed=False)
        return self._geo

    def crowding_scale(self):
        if self.radii is not None and len(self.radii):
            return float(self.radii.min())
        if len(self.lengths):
            return float(self.lengths.min())
        return 0.0


@dataclass
class TemplateJoint:
    name: str
    parent: int | None
    position: np.ndarray
    extremity: bool = False
    symmetry: int | None = None


@dataclass
class ReducedTemplate:
    """Reduced skeleton to embed: topologically sorted joints, root first."""

    joints: list
    name: str = "template"

    def __post_init__(self):
        if len(self.joints) < 2:
            raise ValueError("template needs at least 2 joints")
        if self.joints[0].parent is not None:
            raise ValueError("joint 0 must be the root")
        for i, j in enumerate(self.joints):
            j.position = np.asarray(j.position, dtype=np.float64).reshape(3)
            if i and not (j.parent is not None and 0 <= j.parent < i):
                raise ValueError(f"template joint {i} is not topologically sorted")
            if j.symmetry is not None and j.parent is None:
                raise ValueError("root joint cannot carry a symmetry id")

    @property
    def r(self):
        return len(self.joints)

    @property
    def bones(self):
        return [(i, j.parent) for i, j in enumerate(self.joints) if i > 0]

    def rest_lengths(self):
        return np.array([
            np.linalg.norm(self.joints[c].position - self.joints[p].position)
            for c, p in self.bones
        ])

    def bfs_order(self):
        children = {i: [] for i in range(self.r)}
        for c, p in self.bones:
            children[p].append(c)
        order = [0]
        head = 0
        while head < len(order):
            order.extend(sorted(children[order[head]]))
            head += 1
        return order

    def symmetry_pairs(self):
        by_id = {}
        for i, j in enumerate(self.joints):
            if j.symmetry is not None:
                by_id.setdefault(j.symmetry, []).append(i)
        pairs = []
        for sid in sorted(by_id):
            members = by_id[sid]
            if len(members) != 2:
                raise ValueError(f"symmetry id {sid} has {len(members)} joints, need 2")
            pairs.append(tuple(members))
        return pairs


@dataclass
class PenaltyModel:
    """Non-negative feature weights; length equals the feature count."""

    gamma: np.ndarray

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=np.float64).reshape(-1)
        if len(self.gamma) != len(FEATURE_NAMES):
            raise ValueError(f"need {len(FEATURE_NAMES)} weights, got {len(self.gamma)}")
        if np.any(self.gamma < 0):
            raise ValueError("penalty weights must be non-negative")


def default_penalty_model() -> PenaltyModel:
    """Neutral weighting: all features count equally (unit-norm all-ones)."""
    k = len(FEATURE_NAMES)
    return PenaltyModel(gamma=np.full(k, 1.0 / math.sqrt(k)))


@dataclass
class Embedding:
    assignment: tuple  # graph vertex per template joint, template order
    penalty: float


def pack_spheres(dms: MedialSurface, fld: DistanceField,
                 min_radius: float) -> SpherePacking:
    """Greedy interior sphere packing on medial voxel centers.

    Repeatedly accepts the deepest candidate not strictly inside an accepted
    sphere; each sphere's radius is the boundary distance at its center.
    Stops when the best remaining radius drops below min_radius.
    """
    if not len(dms):
        raise EmptyMedialSurfaceError("cannot pack spheres on an empty medial surface")
    centers = voxel_to_world(fld.grid, dms.voxels)
    radii = fld.dist[tuple(dms.voxels.T)] * fld.cell_size
    order = np.lexsort(tuple(dms.voxels.T[::-1]) + (-radii,))
    centers, radii = centers[order], radii[order]

    alive = np.ones(len(radii), dtype=bool)
    chosen = []
    for i in range(len(radii)):
        if radii[i] < min_radius:
            break
        if not alive[i]:
            continue
        chosen.append(i)
        d2 = ((centers - centers[i]) ** 2).sum(axis=1)
        alive &= d2 >= radii[i] ** 2
    idx = np.asarray(chosen, dtype=np.int64)
    return SpherePacking(centers=centers[idx].reshape(-1, 3), radii=radii[idx])


def build_graph(packing: SpherePacking, fld: DistanceField) -> EmbedGraph:
    """Connect intersecting sphere pairs whose midpoint lies inside the shape."""
    n = len(packing)
    if n == 0:
        return EmbedGraph(centers=packing.centers, edges=np.zeros((0, 2), dtype=np.int64),
                          lengths=np.zeros(0), radii=packing.radii)
    c = packing.centers
    d = distance_matrix(c, c)
    rsum = packing.radii[:, None] + packing.radii[None, :]
    ii, jj = np.nonzero(np.triu(d < rsum, k=1))
    if len(ii):
        mid = 0.5 * (c[ii] + c[jj])
        inside = query_distances(fld, mid) > 0
        ii, jj = ii[inside], jj[inside]
    edges = np.stack([ii, jj], axis=1).astype(np.int64)
    return EmbedGraph(centers=c, edges=edges, lengths=d[ii, jj],
                      radii=packing.radii)


class _FeatureContext:
    """Per (template, graph) data for batched feature evaluation over partial
    assignments in template BFS order."""

    def __init__(self, template: ReducedTemplate, graph: EmbedGraph):
        self.template = template
        self.graph = graph
        self.order = template.bfs_order()
        pos_of = {j: t for t, j in enumerate(self.order)}
        # bone written at BFS position t connects column t to column bone_parent[t]
        self.bone_parent = [0] * template.r
        for t in range(1, template.r):
            self.bone_parent[t] = pos_of[template.joints[self.order[t]].parent]
        rest = template.rest_lengths()
        self.rest_len = np.zeros(template.r)
        self.rest_dir = np.zeros((template.r, 3))
        for b, (child, parent) in enumerate(template.bones):
            t = pos_of[child]
            self.rest_len[t] = rest[b]
            d = template.joints[child].position - template.joints[parent].position
            norm = np.linalg.norm(d)
            if norm < 1e-12:
                raise ValueError(f"template bone {child}->{parent} has zero rest length")
            self.rest_dir[t] = d / norm
        self.extremity = np.array([template.joints[j].extremity for j in self.order])
        self.sym_pairs = [(pos_of[a], pos_of[b]) for a, b in template.symmetry_pairs()]
        self.geo = graph.geodesic()
        self.deg = graph.degrees()
        self.rmin = graph.crowding_scale()

    def features(self, assign: np.ndarray) -> np.ndarray:
        """Feature matrix (S, 5) for assignments (S, t), t >= 1. Infeasible
        rows (disconnected bone) get +inf in the length feature."""
        assign = np.asarray(assign)
        S, t = assign.shape
        out = np.zeros((S, len(FEATURE_NAMES)))
        centers = self.graph.centers
        if t > 1:
            L = np.stack(
                [self.geo[assign[:, self.bone_parent[b]], assign[:, b]]
                 for b in range(1, t)], axis=1)
            total = L.sum(axis=1)
            rest = self.rest_len[1:t]
            rest_total = rest.sum()
            with np.errstate(invalid="ignore"):
                ratios = L / np.maximum(total, 1e-300)[:, None]
            out[:, 0] = np.abs(ratios - rest / rest_total).sum(axis=1)
            out[np.isinf(total), 0] = np.inf

            cosines = np.zeros((S, t - 1))
            for b in range(1, t):
                v = centers[assign[:, b]] - centers[assign[:, self.bone_parent[b]]]
                nv = np.linalg.norm(v, axis=1)
                cosines[:, b - 1] = (v @ self.rest_dir[b]) / np.maximum(nv, 1e-300)
            out[:, 1] = (1.0 - cosines).sum(axis=1)

            for a, b in self.sym_pairs:
                if a < t and b < t:
                    out[:, 3] += np.abs(L[:, a - 1] - L[:, b - 1]) / np.maximum(total, 1e-300)

            if self.rmin > 0:
                for i in range(t):
                    for j in range(i + 1, t):
                        dij = np.linalg.norm(centers[assign[:, i]] - centers[assign[:, j]],
                                             axis=1)
                        out[:, 4] += np.maximum(0.0, self.rmin - dij) / self.rmin

        ext_cols = np.flatnonzero(self.extremity[:t])
        if len(ext_cols):
            excess = np.maximum(self.deg[assign[:, ext_cols]] - 1, 0)
            out[:, 2] = excess.mean(axis=1)
        return out


def feature_vector(assignment, template: ReducedTemplate,
                   graph: EmbedGraph) -> np.ndarray:
    """Features of a complete assignment (template joint order)."""
    ctx = _FeatureContext(template, graph)
    assign = np.asarray(assignment, dtype=np.int64)
    if len(assign) != template.r:
        raise ValueError("assignment length must equal the template joint count")
    row = assign[np.asarray(ctx.order)][None, :]
    return ctx.features(row)[0]


def penalty(embedding, template: ReducedTemplate, graph: EmbedGraph,
            model: PenaltyModel) -> float:
    """Weighted feature sum; raises on infeasible assignments."""
    assign = embedding.assignment if isinstance(embedding, Embedding) else embedding
    assign = tuple(int(v) for v in assign)
    if len(set(assign)) != len(assign):
        raise InfeasibleEmbeddingError("assignment repeats a graph vertex")
    f = feature_vector(assign, template, graph)
    if not np.all(np.isfinite(f)):
        raise InfeasibleEmbeddingError("a template bone maps to no graph path")
    return float(model.gamma @ f)


def _select_best(states, penalties, keep):
    """Lowest-penalty states with deterministic (penalty, assignment) order."""
    keys = tuple(states[:, c] for c in range(states.shape[1] - 1, -1, -1))
    order = np.lexsort(keys + (penalties,))
    return order if keep is None else order[:keep]


def embed_template(template: ReducedTemplate, graph: EmbedGraph,
                   model: PenaltyModel, beam: int | None = 512,
                   chunk_rows: int = 500_000) -> Embedding:
    """Priority beam search over partial assignments in template BFS order.

    beam=None explores every feasible assignment and is exactly optimal.
    Extensions are evaluated in chunks of at most chunk_rows candidate rows
    to bound memory on exhaustive runs.
    Raises InfeasibleEmbeddingError when no complete assignment exists.
    """
    r, n = template.r, graph.n
    if r > n:
        raise InfeasibleEmbeddingError(
            f"template has {r} joints but the graph has {n} vertices")
    ctx = _FeatureContext(template, graph)
    gamma = model.gamma

    states = np.arange(n, dtype=np.int64)[:, None]
    pen = ctx.features(states) @ gamma
    if beam is not None:
        order = _select_best(states, pen, beam)
        states, pen = states[order], pen[order]

    verts = np.arange(n, dtype=np.int64)
    for t in range(1, r):
        final = t == r - 1
        step = max(1, chunk_rows // n)
        parts = []
        for s0 in range(0, len(states), step):
            block = states[s0:s0 + step]
            cand = np.empty((len(block) * n, t + 1), dtype=np.int64)
            cand[:, :t] = np.repeat(block, n, axis=0)
            cand[:, t] = np.tile(verts, len(block))
            distinct = np.all(cand[:, :t] != cand[:, t:t + 1], axis=1)
            connected = np.isfinite(ctx.geo[cand[:, ctx.bone_parent[t]], cand[:, t]])
            cand = cand[distinct & connected]
            if not len(cand):
                continue
            p = ctx.features(cand) @ gamma
            if beam is not None or final:
                keep = beam if beam is not None else 1
                order = _select_best(cand, p, keep)
                parts.append((cand[order], p[order]))
            else:
                parts.append((cand, p))
        if not parts:
            raise InfeasibleEmbeddingError(
                f"no feasible assignment at template joint {t + 1}/{r} "
                f"(graph: {n} vertices, {len(graph.edges)} edges)")
        states = np.concatenate([s for s, _ in parts])
        pen = np.concatenate([p for _, p in parts])
        if beam is not None or final:
            keep = beam if beam is not None else 1
            order = _select_best(states, pen, keep)
            states, pen = states[order], pen[order]

    best = states[0]
    assignment = [0] * r
    for col, joint in enumerate(ctx.order):
        assignment[joint] = int(best[col])
    return Embedding(assignment=tuple(assignment), penalty=float(pen[0]))


def _margins(gammas, good, bad):
    """margin(G) = min_i G.q_i  -  min_j G.p_j for each row of `gammas`."""
    return (bad @ gammas.T).min(axis=0) - (good @ gammas.T).min(axis=0)


def learn_gamma(good, bad, starts: int = 64, seed: int = 0):
    """Maximize the margin between worst-good and worst-bad feature scores
    over unit-norm non-negative weight vectors.

    Multi-start projected pattern search. Starts combine the axis basis, the
    all-ones direction, clipped pairwise differences (the margin is a max
    over bad vectors j of min_i G.(q_i - p_j), so those differences point at
    promising corners), the winners of a seeded random pre-sweep, and random
    fill. Each start hill-climbs with a shrinking step over axis-aligned and
    pairwise-oblique probes. Returns (gamma, margin)."""
    if not len(good) or not len(bad):
        raise ValueError("need at least one good and one bad feature vector")
    good = np.asarray(good, dtype=np.float64).reshape(len(good), -1)
    bad = np.asarray(bad, dtype=np.float64).reshape(len(bad), -1)
    if good.shape[1] != bad.shape[1]:
        raise ValueError("good and bad feature vectors disagree in length")
    if np.any(good < 0) or np.any(bad < 0):
        raise ValueError("feature vectors must be non-negative")
    k = good.shape[1]

    if good.shape == bad.shape and np.array_equal(
            good[np.lexsort(good.T)], bad[np.lexsort(bad.T)]):
        warnings.warn("good and bad sets are identical; margin is 0 for every weight")
        return np.full(k, 1.0 / math.sqrt(k)), 0.0

    def normalize(rows):
        rows = np.clip(rows, 0.0, None)
        norms = np.linalg.norm(rows, axis=1)
        keep = norms > 1e-12
        return rows[keep] / norms[keep, None]

    rng = np.random.default_rng(seed)
    pairs = (bad[None, :, :] - good[:, None, :]).reshape(-1, k)
    pool = [np.eye(k), np.full((1, k), 1.0), normalize(pairs)]
    sweep = normalize(np.abs(rng.standard_normal((20_000, k))))
    top = np.argsort(-_margins(sweep, good, bad))[:max(starts // 2, 16)]
    pool.append(sweep[top])
    extra = max(starts - sum(len(p) for p in pool), 0)
    if extra:
        pool.append(np.abs(rng.standard_normal((extra, k))))
    G = normalize(np.concatenate(pool, axis=0))

    probes = [np.eye(k), -np.eye(k)]
    for i in range(k):
        for j in range(i + 1, k):
            d = np.zeros(k)
            d[i], d[j] = 1.0, -1.0
            probes.append(d[None, :] / np.sqrt(2))
            probes.append(-d[None, :] / np.sqrt(2))
    probes = np.concatenate(probes, axis=0)

    m = _margins(G, good, bad)
    h = 1.0
    while h > 1e-6:
        for _ in range(200):
            cand = G[:, None, :] + h * probes[None, :, :]
            np.clip(cand, 0.0, None, out=cand)
            norms = np.linalg.norm(cand, axis=2, keepdims=True)
            ok = norms[..., 0] > 1e-12
            cand = np.where(ok[..., None], cand / np.where(ok[..., None], norms, 1.0),
                            G[:, None, :])
            cm = _margins(cand.reshape(-1, k), good, bad).reshape(len(G), -1)
            best = cm.argmax(axis=1)
            bm = cm[np.arange(len(G)), best]
            improved = bm > m + 1e-15
            if not improved.any():
                break
            G[improved] = cand[improved, best[improved]]
            m[improved] = bm[improved]
        h *= 0.5

    i = int(np.argmax(m))
    return G[i].copy(), float(m[i])


def refine_embedding(embedding: Embedding, graph: EmbedGraph,
                     fld: DistanceField, template: ReducedTemplate,
                     iterations: int = 8,
                     clearance_weight: float = 1.0) -> Skeleton:
    """Continuous per-joint relaxation of the discrete embedding.

    Coordinate descent with a shrinking pattern step: each joint moves to
    reduce bone-length-ratio deviation plus negative boundary clearance,
    never onto a point with zero clearance.
    """
    assign = np.asarray(embedding.assignment, dtype=np.int64)
    X = graph.centers[assign].copy()
    bones = template.bones
    chord = np.array([np.linalg.norm(X[c] - X[p]) for c, p in bones])
    total = float(chord.sum())
    rest = template.rest_lengths()
    targets = rest / rest.sum() * total

    incident = [[] for _ in range(template.r)]
    for b, (c, p) in enumerate(bones):
        incident[c].append((b, p))
        incident[p].append((b, c))

    def cost(j, x):
        acc = 0.0
        for b, other in incident[j]:
            acc += (np.linalg.norm(x - X[other]) - targets[b]) ** 2 / total
        try:
            clear = query_distances(fld, x[None, :])[0]
        except OutOfBoundsError:
            return np.inf
        if clear <= 0.0:
            return np.inf
        return acc - clearance_weight * clear

    cell = fld.cell_size
    for _ in range(iterations):
        for j in range(template.r):
            for scale in (2.0, 1.0, 0.5, 0.25):
                step = scale * cell
                for _ in range(25):
                    here = cost(j, X[j])
                    best_x, best_c = None, here
                    for ax in range(3):
                        for sgn in (1.0, -1.0):
                            x = X[j].copy()
                            x[ax] += sgn * step
                            c = cost(j, x)
                            if c < best_c:
                                best_x, best_c = x, c
                    if best_x is None:
                        break
                    X[j] = best_x

    joints = [Joint(name=tj.name, parent=tj.parent, position=X[i])
              for i, tj in enumerate(template.joints)]
    return Skeleton(joints=joints)


# -- built-in templates and JSON I/O -----------------------------------------

_BUILTINS = {
    "biped7": {
        "name": "biped7",
        "joints": [
            {"name": "hips", "parent": None, "position": [0.0, 1.0, 0.0]},
            {"name": "chest", "parent": 0, "position": [0.0, 1.45, 0.0]},
            {"name": "head", "parent": 1, "position": [0.0, 1.8, 0.0], "extremity": True},
            {"name": "hand_l", "parent": 1, "position": [-0.75, 1.4, 0.0],
             "extremity": True, "symmetry": 1},
            {"name": "hand_r", "parent": 1, "position": [0.75, 1.4, 0.0],
             "extremity": True, "symmetry": 1},
            {"name": "foot_l", "parent": 0, "position": [-0.2, 0.05, 0.0],
             "extremity": True, "symmetry": 2},
            {"name": "foot_r", "parent": 0, "position": [0.2, 0.05, 0.0],
             "extremity": True, "symmetry": 2},
        ],
    },
    "quadruped9": {
        "name": "quadruped9",
        "joints": [
            {"name": "pelvis", "parent": None, "position": [-0.45, 0.0, 0.55]},
            {"name": "spine", "parent": 0, "position": [0.0, 0.0, 0.6]},
            {"name": "chest", "parent": 1, "position": [0.45, 0.0, 0.6]},
            {"name": "head", "parent": 2, "position": [0.8, 0.0, 1.0], "extremity": True},
            {"name": "tail", "parent": 0, "position": [-0.8, 0.0, 0.7], "extremity": True},
            {"name": "foot_fl", "parent": 2, "position": [0.45, 0.2, 0.05],
             "extremity": True, "symmetry": 1},
            {"name": "foot_fr", "parent": 2, "position": [0.45, -0.2, 0.05],
             "extremity": True, "symmetry": 1},
            {"name": "foot_bl", "parent": 0, "position": [-0.45, 0.2, 0.05],
             "extremity": True, "symmetry": 2},
            {"name": "foot_br", "parent": 0, "position": [-0.45, -0.2, 0.05],
             "extremity": True, "symmetry": 2},
        ],
    },
}


def _template_from_dict(doc) -> ReducedTemplate:
    joints = [
        TemplateJoint(
            name=j["name"],
            parent=j["parent"],
            position=np.asarray(j["position"], dtype=np.float64),
            extremity=bool(j.get("extremity", False)),
            symmetry=j.get("symmetry"),
        )
        for j in doc["joints"]
    ]
    return ReducedTemplate(joints=joints, name=doc.get("name", "template"))


def builtin_template(name: str) -> ReducedTemplate:
    if name not in _BUILTINS:
        raise ValueError(f"unknown builtin template {name!r}; have {sorted(_BUILTINS)}")
    return _template_from_dict(_BUILTINS[name])


def load_template(path) -> ReducedTemplate:
    with open(path, "r", encoding="utf-8") as fh:
        return _template_from_dict(json.load(fh))


def save_gamma(gamma, path, margin=None) -> None:
    doc = {"gamma": [float(g) for g in np.asarray(gamma).reshape(-1)]}
    if margin is not None:
        doc["margin"] = float(margin)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_gamma(path) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return np.asarray(doc["gamma"], dtype=np.float64)
