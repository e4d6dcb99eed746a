"""Solid voxelization of a watertight mesh on a uniform padded grid.

A voxel is solid iff its center lies inside the mesh, decided by casting an
axis-aligned ray and counting triangle crossings. Columns whose ray grazes a
triangle edge or vertex exactly are re-cast once with the ray origin nudged
by 1e-7 of a cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotWatertightError, OutOfBoundsError, ResolutionTooSmallError
from .mesh import TriangleMesh


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a voxel grid: cell count comes from `resolution` cells
    along the longest bounding-box axis plus `padding` empty layers."""

    resolution: int
    padding: int
    origin: np.ndarray
    cell_size: float

    def __post_init__(self):
        if self.resolution < 2:
            raise ResolutionTooSmallError(f"resolution {self.resolution} < 2")
        if self.padding < 1:
            raise ValueError("padding must be >= 1")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")


@dataclass
class VoxelGrid:
    spec: GridSpec
    occupancy: np.ndarray  # (nx, ny, nz) bool, True = interior

    @property
    def dims(self):
        return self.occupancy.shape

    @property
    def solid_count(self):
        return int(self.occupancy.sum())


def _grid_layout(mesh, resolution, padding):
    if not len(mesh.vertices):
        raise ResolutionTooSmallError("mesh has no vertices")
    bmin, bmax = mesh.bounds()
    extent = bmax - bmin
    if not extent.max() > 0:
        raise ResolutionTooSmallError("mesh has zero extent")
    cell = extent.max() / resolution
    # tolerance so an extent that is an exact multiple of cell does not gain a layer
    core = np.ceil(extent / cell - 1e-9).astype(int)
    core = np.maximum(core, 1)
    dims = core + 2 * padding
    origin = bmin - padding * cell
    return origin, cell, dims


def _cast_columns(tri_verts, yc, zc, nx_centers):
    """Ray-cast every (y, z) column against all triangles.

    Returns (occupancy slab (nx, ny, nz), dirty (ny, nz)) where dirty marks
    columns with an exact (or near-exact) edge/vertex graze or odd parity.
    """
    ny, nz = len(yc), len(zc)
    col_j, col_k, col_x = [], [], []
    dirty = np.zeros((ny, nz), dtype=bool)

    for a, b, c in tri_verts:
        ys = (a[1], b[1], c[1])
        zs = (a[2], b[2], c[2])
        j0 = np.searchsorted(yc, min(ys), "left")
        j1 = np.searchsorted(yc, max(ys), "right")
        k0 = np.searchsorted(zc, min(zs), "left")
        k1 = np.searchsorted(zc, max(zs), "right")
        if j0 >= j1 or k0 >= k1:
            continue
        Y, Z = np.meshgrid(yc[j0:j1], zc[k0:k1], indexing="ij")
        e0 = (b[1] - a[1]) * (Z - a[2]) - (b[2] - a[2]) * (Y - a[1])
        e1 = (c[1] - b[1]) * (Z - b[2]) - (c[2] - b[2]) * (Y - b[1])
        e2 = (a[1] - c[1]) * (Z - c[2]) - (a[2] - c[2]) * (Y - c[1])
        span = max(max(ys) - min(ys), max(zs) - min(zs))
        eps = 1e-12 * span * span
        area = (b[1] - a[1]) * (c[2] - a[2]) - (b[2] - a[2]) * (c[1] - a[1])
        if area == 0.0:
            # edge-on triangle: projection is a segment; only centers on (or
            # within fp noise of) that segment are ambiguous
            near = np.zeros(Y.shape, dtype=bool)
            for p, q in ((a, b), (b, c), (c, a)):
                py, pz = p[1], p[2]
                qy, qz = q[1] - py, q[2] - pz
                denom = qy * qy + qz * qz
                if denom == 0.0:
                    d2 = (Y - py) ** 2 + (Z - pz) ** 2
                else:
                    t = np.clip(((Y - py) * qy + (Z - pz) * qz) / denom, 0.0, 1.0)
                    d2 = (Y - py - t * qy) ** 2 + (Z - pz - t * qz) ** 2
                near |= d2 <= (1e-9 * span) ** 2
            dirty[j0:j1, k0:k1] |= near
            continue
        if area < 0:
            e0, e1, e2 = -e0, -e1, -e2
        inside = (e0 > eps) & (e1 > eps) & (e2 > eps)
        graze = (
            ((np.abs(e0) <= eps) | (np.abs(e1) <= eps) | (np.abs(e2) <= eps))
            & (e0 >= -eps) & (e1 >= -eps) & (e2 >= -eps)
        )
        if graze.any():
            dirty[j0:j1, k0:k1] |= graze
        if inside.any():
            n = np.cross(b - a, c - a)  # n[0] != 0 since projected area != 0
            jj, kk = np.nonzero(inside)
            xs = a[0] - (n[1] * (Y[jj, kk] - a[1]) + n[2] * (Z[jj, kk] - a[2])) / n[0]
            col_j.append(jj + j0)
            col_k.append(kk + k0)
            col_x.append(xs)

    occ = np.zeros((len(nx_centers), ny, nz), dtype=bool)
    if col_j:
        J = np.concatenate(col_j)
        K = np.concatenate(col_k)
        X = np.concatenate(col_x)
        order = np.lexsort((X, K, J))
        J, K, X = J[order], K[order], X[order]
        starts = np.flatnonzero(np.r_[True, (J[1:] != J[:-1]) | (K[1:] != K[:-1])])
        ends = np.r_[starts[1:], len(J)]
        for s, e in zip(starts, ends):
            j, k = J[s], K[s]
            if (e - s) % 2 == 1:
                dirty[j, k] = True
                continue
            n_le = np.searchsorted(X[s:e], nx_centers, side="right")
            occ[:, j, k] = ((e - s - n_le) % 2) == 1
    return occ, dirty


def voxelize(mesh: TriangleMesh, resolution: int, padding: int = 1,
             ray_axis: int = 0) -> VoxelGrid:
    """Voxelize a watertight mesh; solid = voxel center inside the surface.

    Raises NotWatertightError on open meshes and ResolutionTooSmallError when
    fewer than 2 interior voxels come out.
    """
    if not mesh.watertight:
        raise NotWatertightError(f"{mesh.name}: mesh is not watertight")
    origin, cell, dims = _grid_layout(mesh, resolution, padding)

    perm = (ray_axis, (ray_axis + 1) % 3, (ray_axis + 2) % 3)
    verts_p = mesh.vertices[:, perm]
    tri_verts = verts_p[mesh.triangles]
    centers = [origin[ax] + (np.arange(dims[ax]) + 0.5) * cell for ax in perm]

    occ_p, dirty = _cast_columns(tri_verts, centers[1], centers[2], centers[0])
    if dirty.any():
        delta = 1e-7 * cell
        occ2, dirty2 = _cast_columns(
            tri_verts, centers[1] + delta, centers[2] + 2 * delta, centers[0]
        )
        occ_p[:, dirty] = occ2[:, dirty]
        if (dirty & dirty2).any():
            raise NotWatertightError(
                f"{mesh.name}: ray parity unresolved after perturbation "
                "(surface likely self-intersecting or open)"
            )

    occ = np.transpose(occ_p, np.argsort(perm))

    shell = np.ones(tuple(dims), dtype=bool)
    p = padding
    shell[p:-p, p:-p, p:-p] = False
    if occ[shell].any():
        raise NotWatertightError(f"{mesh.name}: solid voxels leaked into the padding shell")
    if occ.sum() < 2:
        raise ResolutionTooSmallError(
            f"{mesh.name}: {int(occ.sum())} interior voxel(s) at resolution {resolution}"
        )
    spec = GridSpec(resolution=resolution, padding=padding, origin=origin, cell_size=cell)
    return VoxelGrid(spec=spec, occupancy=occ)


def voxel_to_world(grid: VoxelGrid, ijk) -> np.ndarray:
    """Center of voxel (i, j, k) in world units."""
    ijk = np.asarray(ijk)
    if np.any(ijk < 0) or np.any(ijk >= np.asarray(grid.dims)):
        raise OutOfBoundsError(f"voxel index {ijk} outside dims {grid.dims}")
    return grid.spec.origin + (ijk + 0.5) * grid.spec.cell_size


def world_to_voxel(grid: VoxelGrid, p) -> np.ndarray:
    """Voxel containing world point p."""
    ijk = np.floor((np.asarray(p) - grid.spec.origin) / grid.spec.cell_size).astype(int)
    if np.any(ijk < 0) or np.any(ijk >= np.asarray(grid.dims)):
        raise OutOfBoundsError(f"point {p} outside the grid")
    return ijk


def dump_solid_voxels(grid: VoxelGrid, path) -> None:
    """One `i j k` line per solid voxel, lexicographic order."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, k in np.argwhere(grid.occupancy):
            fh.write(f"{i} {j} {k}\n")
