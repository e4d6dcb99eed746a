"""Discrete medial surface: ridge voxels of the distance map.

A solid voxel belongs to the medial set when its distance is at least
`min_dist` and it is a weak local maximum along at least one grid axis.
Weak (>=) comparison keeps integer-distance plateaus intact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import DistanceField
from .errors import EmptyMedialSurfaceError


@dataclass
class MedialSurface:
    voxels: np.ndarray  # (k, 3) int64, lexicographically sorted
    mask: np.ndarray    # bool grid, same shape as the field
    field: DistanceField

    def __len__(self):
        return len(self.voxels)

    def voxel_set(self):
        return {tuple(v) for v in self.voxels.tolist()}


def medial_predicate(field: DistanceField, ijk, min_dist) -> bool:
    """Reference membership test for a single voxel: solid, deep enough and a
    weak directional maximum. Depends only on the voxel and its 6 neighbors."""
    i, j, k = ijk
    if not field.grid.occupancy[i, j, k]:
        return False
    d = field.dist
    if d[i, j, k] < min_dist:
        return False
    for lo, hi in (
        (d[i - 1, j, k], d[i + 1, j, k]),
        (d[i, j - 1, k], d[i, j + 1, k]),
        (d[i, j, k - 1], d[i, j, k + 1]),
    ):
        if d[i, j, k] >= lo and d[i, j, k] >= hi:
            return True
    return False


def extract_dms(field: DistanceField, min_dist: float = 2.0) -> MedialSurface:
    """All voxels passing the ridge test; raises when none qualify."""
    if min_dist < 1:
        raise ValueError("min_dist must be >= 1 voxel")
    d = field.dist
    pad = np.pad(d, 1)  # zero outside = empty
    axis_max = np.zeros(d.shape, dtype=bool)
    core = (slice(1, -1),) * 3
    for ax in range(3):
        lo = [slice(1, -1)] * 3
        hi = [slice(1, -1)] * 3
        lo[ax] = slice(0, -2)
        hi[ax] = slice(2, None)
        axis_max |= (pad[core] >= pad[tuple(lo)]) & (pad[core] >= pad[tuple(hi)])
    mask = field.grid.occupancy & (d >= min_dist) & axis_max
    if not mask.any():
        raise EmptyMedialSurfaceError(
            f"no medial voxel with dist >= {min_dist}; raise the resolution "
            "or lower --dms-min-dist"
        )
    return MedialSurface(voxels=np.argwhere(mask), mask=mask, field=field)


def dump_medial(dms: MedialSurface, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, k in dms.voxels:
            fh.write(f"{i} {j} {k}\n")
