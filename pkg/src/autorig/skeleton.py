"""Control skeleton: recursive chain splitting, joint hierarchy, rigid binding.

Each smoothed chain is approximated by a few straight segments (greedy
min-max splitting), segment endpoints become joints, and every mesh vertex
is bound to its nearest bone segment.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import AttachmentError
from .mesh import TriangleMesh
from .pathtree import PathTree, SmoothChain
from .voxel import VoxelGrid, voxel_to_world


# every joint carries full rotational freedom; poses are rigid transforms
JOINT_ROTATIONAL_DOF = 3


@dataclass
class Joint:
    name: str
    parent: int | None
    position: np.ndarray
    dof: int = JOINT_ROTATIONAL_DOF


@dataclass
class Skeleton:
    joints: list

    def __post_init__(self):
        if not self.joints or self.joints[0].parent is not None:
            raise ValueError("joint 0 must be the single root")
        for i, j in enumerate(self.joints):
            j.position = np.asarray(j.position, dtype=np.float64).reshape(3)
            if i == 0:
                continue
            if j.parent is None:
                raise ValueError(f"second root at joint {i}")
            if not 0 <= j.parent < i:
                raise ValueError(f"joint {i} parent {j.parent} not topologically sorted")
            if np.linalg.norm(j.position - self.joints[j.parent].position) < 1e-9:
                raise ValueError(f"zero-length bone at joint {i} ({j.name})")

    @property
    def bones(self):
        """(child_joint, parent_joint) pairs; bone b is joint b+1's link."""
        return [(i, j.parent) for i, j in enumerate(self.joints) if i > 0]

    @property
    def n_bones(self):
        return len(self.joints) - 1

    def bone_segments(self):
        """(B, 2, 3) array of bone endpoints (parent end, child end)."""
        segs = np.empty((self.n_bones, 2, 3))
        for b, (child, parent) in enumerate(self.bones):
            segs[b, 0] = self.joints[parent].position
            segs[b, 1] = self.joints[child].position
        return segs

    def bone_depths(self):
        depth = [0] * len(self.joints)
        for i, j in enumerate(self.joints):
            if i:
                depth[i] = depth[j.parent] + 1
        return [depth[child] for child, _ in self.bones]


def _max_deviation(pts, i0, i1):
    """Largest distance from interior points to the chord pts[i0]--pts[i1]."""
    if i1 - i0 < 2:
        return 0.0, -1
    a, b = pts[i0], pts[i1]
    ab = b - a
    denom = float(ab @ ab)
    interior = pts[i0 + 1:i1]
    t = np.clip((interior - a) @ ab / denom, 0.0, 1.0) if denom > 0 else np.zeros(len(interior))
    d = np.linalg.norm(interior - (a + t[:, None] * ab), axis=1)
    arg = int(np.argmax(d))
    return float(d[arg]), i0 + 1 + arg


def split_chain(chain, max_segments: int, max_error: float) -> list:
    """Greedy recursive splitting of a chain into straight segments.

    Repeatedly splits the worst-fitting segment at the interior point that
    minimizes the post-split maximum deviation, until the segment budget is
    met or every deviation is within max_error. Returns interior split
    indices, ascending.
    """
    pts = chain.points if isinstance(chain, SmoothChain) else np.asarray(chain, dtype=np.float64)
    n = len(pts)
    if n < 2:
        raise ValueError("chain needs at least 2 points")
    if max_segments < 1:
        raise ValueError("max_segments must be >= 1")
    breaks = [0, n - 1]
    while len(breaks) - 1 < max_segments:
        devs = [_max_deviation(pts, breaks[s], breaks[s + 1]) for s in range(len(breaks) - 1)]
        worst = max(range(len(devs)), key=lambda s: devs[s][0])
        if devs[worst][0] <= max_error:
            break
        i0, i1 = breaks[worst], breaks[worst + 1]
        best_j, best_err = -1, np.inf
        for j in range(i0 + 1, i1):
            err = max(_max_deviation(pts, i0, j)[0], _max_deviation(pts, j, i1)[0])
            if err < best_err:
                best_j, best_err = j, err
        if best_j < 0:
            break
        breaks.append(best_j)
        breaks.sort()
    return [b for b in breaks if b not in (0, n - 1)]


def build_skeleton(tree: PathTree, smoothed, splits, grid: VoxelGrid) -> Skeleton:
    """Joints from chain split points and tips; root at the heart.

    A chain's attachment voxel is resolved to a joint of the chain that owns
    that voxel (the nearer of the two joints bounding its segment, root-side
    on ties), so the joint hierarchy mirrors the path tree.
    """
    if not (len(tree.chains) == len(smoothed) == len(splits)):
        raise AttachmentError("chains, smoothed chains and splits disagree in length")

    root_pos = voxel_to_world(grid, tree.root.voxel)
    joints = [Joint(name="root", parent=None, position=root_pos)]

    ROOT = (-1, -1)
    owner = {tree.root.voxel: ROOT}
    for ci, chain in enumerate(tree.chains):
        for idx, v in enumerate(chain.voxels):
            key = (int(v[0]), int(v[1]), int(v[2]))
            owner.setdefault(key, (ci, idx))

    # per chain: boundary point-index -> joint id, and the chain's parent joint
    boundary_joint = []
    parent_joint_of_chain = []
    for ci, (chain, sm, sp) in enumerate(zip(tree.chains, smoothed, splits)):
        n = len(chain.voxels)
        att = chain.attachment
        if att not in owner:
            raise AttachmentError(f"chain {ci} attachment {att} is not a tree voxel")
        own = owner[att]
        if own == ROOT:
            parent = 0
        else:
            cj, idx = own
            if cj >= ci:
                raise AttachmentError(f"chain {ci} attaches to a later chain {cj}")
            bounds = [0] + list(splits[cj]) + [len(tree.chains[cj].voxels) - 1]
            lo = max(b for b in bounds if b <= idx)
            hi = min(b for b in bounds if b >= idx)
            att_pos = voxel_to_world(grid, np.asarray(att))

            def joint_of(b, cj=cj):
                if b == len(tree.chains[cj].voxels) - 1:
                    return parent_joint_of_chain[cj]
                return boundary_joint[cj][b]

            d_lo = np.linalg.norm(smoothed[cj].points[lo] - att_pos)
            d_hi = np.linalg.norm(smoothed[cj].points[hi] - att_pos)
            parent = joint_of(hi) if d_hi <= d_lo else joint_of(lo)
        parent_joint_of_chain.append(parent)

        bj = {}
        prev = parent
        count = 0
        for b in sorted(sp, reverse=True):  # attachment side first
            count += 1
            joints.append(Joint(name=f"c{ci}_s{count}", parent=prev,
                                position=sm.points[b]))
            prev = len(joints) - 1
            bj[b] = prev
        joints.append(Joint(name=f"c{ci}_tip", parent=prev, position=sm.points[0]))
        bj[0] = len(joints) - 1
        boundary_joint.append(bj)

    return Skeleton(joints=joints)


@dataclass
class SegmentBinding:
    """Rigid per-bone vertex assignment: every vertex to exactly one bone."""

    bone_of_vertex: np.ndarray  # (n,) int64
    n_bones: int

    def vertex_sets(self):
        return [set(np.flatnonzero(self.bone_of_vertex == b).tolist())
                for b in range(self.n_bones)]


def point_segment_distance(points, a, b):
    """Distance from (n, 3) points to the finite segment a--b."""
    points = np.asarray(points, dtype=np.float64)
    ab = np.asarray(b, dtype=np.float64) - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=-1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    return np.linalg.norm(points - (a + t[..., None] * ab), axis=-1)


def bind_segments(mesh: TriangleMesh, skeleton: Skeleton) -> SegmentBinding:
    """Assign each vertex to its nearest bone segment; ties go to the bone
    closer to the root, then to the lower bone index."""
    segs = skeleton.bone_segments()
    nb = len(segs)
    if nb == 0:
        raise ValueError("skeleton has no bones")
    dist = np.empty((len(mesh.vertices), nb))
    for b in range(nb):
        dist[:, b] = point_segment_distance(mesh.vertices, segs[b, 0], segs[b, 1])
    depths = skeleton.bone_depths()
    order = sorted(range(nb), key=lambda b: (depths[b], b))
    picked = np.argmin(dist[:, order], axis=1)  # first minimum in tie-break order
    bone = np.asarray(order, dtype=np.int64)[picked]
    return SegmentBinding(bone_of_vertex=bone, n_bones=nb)


def save_skeleton(skeleton: Skeleton, path) -> None:
    doc = {"joints": [
        {"name": j.name, "parent": j.parent, "position": [float(c) for c in j.position]}
        for j in skeleton.joints
    ]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_skeleton(path) -> Skeleton:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    joints = [Joint(name=j["name"], parent=j["parent"],
                    position=np.asarray(j["position"], dtype=np.float64))
              for j in doc["joints"]]
    return Skeleton(joints=joints)


def save_binding(binding: SegmentBinding, path) -> None:
    doc = {"bone_count": binding.n_bones,
           "vertex_bone": [int(b) for b in binding.bone_of_vertex]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_binding(path) -> SegmentBinding:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    return SegmentBinding(
        bone_of_vertex=np.asarray(doc["vertex_bone"], dtype=np.int64),
        n_bones=int(doc["bone_count"]),
    )
