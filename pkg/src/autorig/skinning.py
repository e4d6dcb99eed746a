"""Heat-equilibrium bone weights and linear blend skinning.

Per bone i the weight field solves (D - A + H) w = H p on the mesh's vertex
graph, where D - A is the uniform Laplacian, H puts c/d^2 heat sources on
vertices whose nearest visible bone is i, and p is the one-hot source value.
Rows of the resulting weight matrix sum to one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import splu

from .distance import DistanceField, query_distances
from .errors import BoneSetMismatchError, SingularSystemError
from .mesh import TriangleMesh
from .skeleton import Skeleton, point_segment_distance

_VIS_SAMPLES = 8


@dataclass
class SkinBinding:
    """Per-vertex bone weights, rows normalized to 1."""

    weights: np.ndarray  # (n_vertices, n_bones) float64
    max_influences: int | None = 4

    @property
    def n_bones(self):
        return self.weights.shape[1]


@dataclass
class Pose:
    """World-space rigid transform per bone: unit quaternion (w,x,y,z) plus
    translation."""

    rotations: np.ndarray     # (B, 4)
    translations: np.ndarray  # (B, 3)

    def __post_init__(self):
        self.rotations = np.asarray(self.rotations, dtype=np.float64).reshape(-1, 4)
        self.translations = np.asarray(self.translations, dtype=np.float64).reshape(-1, 3)
        if len(self.rotations) != len(self.translations):
            raise ValueError("rotation and translation counts differ")
        norms = np.linalg.norm(self.rotations, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("pose quaternions must be unit length (within 1e-9)")
        self.rotations = self.rotations / norms[:, None]

    @property
    def n_bones(self):
        return len(self.rotations)


def identity_pose(n_bones: int) -> Pose:
    q = np.zeros((n_bones, 4))
    q[:, 0] = 1.0
    return Pose(rotations=q, translations=np.zeros((n_bones, 3)))


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def _segment_closest_points(points, a, b):
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.broadcast_to(a, points.shape).copy()
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    return a + t[:, None] * ab


def _uniform_laplacian(mesh: TriangleMesh):
    n = len(mesh.vertices)
    e = mesh.edges
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    adj = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    deg = np.asarray(adj.sum(axis=1)).ravel()
    return sparse.diags(deg) - adj, adj


def assemble_heat_system(mesh: TriangleMesh, skeleton: Skeleton,
                         fld: DistanceField, heat: float = 1.0):
    """Build the equilibrium system shared by every bone solve.

    Returns (K, h, sources) where K = (D - A) + diag(h), h puts heat/d^2 on
    vertices with a visible bone (d = distance to the nearest one, floored at
    half a cell), and sources is the (n, B) row-stochastic matrix splitting
    each vertex's unit source over the bones tied for nearest (so mirror-
    symmetric shapes get mirror-symmetric systems).
    """
    segs = skeleton.bone_segments()
    nb = len(segs)
    if nb == 0:
        raise ValueError("skeleton has no bones")
    V = mesh.vertices
    n = len(V)

    dist = np.empty((n, nb))
    visible = np.empty((n, nb), dtype=bool)
    ts = (np.arange(_VIS_SAMPLES) + 1.0) / (_VIS_SAMPLES + 1.0)
    for b in range(nb):
        a, c = segs[b, 0], segs[b, 1]
        dist[:, b] = point_segment_distance(V, a, c)
        closest = _segment_closest_points(V, a, c)
        vis = np.ones(n, dtype=bool)
        for t in ts:
            samples = V * (1.0 - t) + closest * t
            vis &= query_distances(fld, samples) > 0.0
        visible[:, b] = vis

    masked = np.where(visible, dist, np.inf)
    dmin = masked.min(axis=1)
    sourced = np.isfinite(dmin)
    tied = masked <= (dmin * (1.0 + 1e-9) + 1e-300)[:, None]
    sources = np.zeros((n, nb))
    sources[sourced] = tied[sourced] / tied[sourced].sum(axis=1, keepdims=True)

    d = np.maximum(np.where(sourced, dmin, 1.0), 0.5 * fld.cell_size)
    h = np.where(sourced, heat / d**2, 0.0)

    L, adj = _uniform_laplacian(mesh)
    n_comp, labels = csgraph.connected_components(adj, directed=False)
    for comp in range(n_comp):
        members = labels == comp
        if not np.any(h[members] > 0):
            raise SingularSystemError(
                f"mesh component {comp} ({int(members.sum())} vertices) has no "
                "visible bone; no heat source to pin its weights"
            )
    K = (L + sparse.diags(h)).tocsc()
    return K, h, sources


def compute_heat_weights(mesh: TriangleMesh, skeleton: Skeleton,
                         fld: DistanceField, max_influences: int | None = 4,
                         heat: float = 1.0) -> SkinBinding:
    """Solve the equilibrium system once per bone and normalize.

    max_influences=None keeps the raw solution (useful for residual checks);
    otherwise each vertex keeps its top influences and renormalizes.
    """
    K, h, sources = assemble_heat_system(mesh, skeleton, fld, heat=heat)
    nb = skeleton.n_bones
    n = len(mesh.vertices)
    lu = splu(K)
    W = np.empty((n, nb))
    for b in range(nb):
        W[:, b] = lu.solve(h * sources[:, b])

    if max_influences is not None:
        W = np.clip(W, 0.0, None)
        if nb > max_influences:
            cut = np.argpartition(W, nb - max_influences, axis=1)[:, :nb - max_influences]
            W[np.arange(n)[:, None], cut] = 0.0
        W /= W.sum(axis=1, keepdims=True)
    return SkinBinding(weights=W, max_influences=max_influences)


def lbs_deform(mesh: TriangleMesh, binding: SkinBinding, rest: Pose,
               pose: Pose) -> TriangleMesh:
    """v' = sum_i w_i (T_pose_i . T_rest_i^-1)(v); topology unchanged."""
    nb = binding.n_bones
    if rest.n_bones != nb or pose.n_bones != nb:
        raise BoneSetMismatchError(
            f"bone counts differ: binding {nb}, rest {rest.n_bones}, pose {pose.n_bones}"
        )
    V = mesh.vertices
    out = np.zeros_like(V)
    for b in range(nb):
        Rr = quat_to_matrix(rest.rotations[b])
        Rp = quat_to_matrix(pose.rotations[b])
        # T_pose . T_rest^-1 : x -> Rp Rr^T (x - t_rest) + t_pose
        R = Rp @ Rr.T
        t = pose.translations[b] - R @ rest.translations[b]
        out += binding.weights[:, b:b + 1] * (V @ R.T + t)
    return TriangleMesh(vertices=out, triangles=mesh.triangles.copy(), name=mesh.name)


def rigid_binding(binding_bone_of_vertex, n_bones: int) -> SkinBinding:
    """One-hot weights from a rigid per-bone vertex assignment."""
    n = len(binding_bone_of_vertex)
    W = np.zeros((n, n_bones))
    W[np.arange(n), np.asarray(binding_bone_of_vertex, dtype=np.int64)] = 1.0
    return SkinBinding(weights=W, max_influences=1)


def save_weights(binding: SkinBinding, path) -> None:
    """Per vertex: list of [bone_index, weight] pairs, zeros omitted."""
    rows = []
    for row in binding.weights:
        nz = np.flatnonzero(row)
        rows.append([[int(b), float(row[b])] for b in nz])
    doc = {"bone_count": binding.n_bones, "weights": rows}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_weights(path) -> SkinBinding:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    nb = int(doc["bone_count"])
    rows = doc["weights"]
    W = np.zeros((len(rows), nb))
    for i, row in enumerate(rows):
        for b, w in row:
            W[i, int(b)] = w
    return SkinBinding(weights=W, max_influences=None)


def save_pose(pose: Pose, path) -> None:
    doc = {"bones": [
        {"rotation": [float(c) for c in q], "translation": [float(c) for c in t]}
        for q, t in zip(pose.rotations, pose.translations)
    ]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_pose(path) -> Pose:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    rots = [b["rotation"] for b in doc["bones"]]
    trans = [b["translation"] for b in doc["bones"]]
    return Pose(rotations=np.asarray(rots, dtype=np.float64),
                translations=np.asarray(trans, dtype=np.float64))
