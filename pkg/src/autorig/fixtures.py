"""Synthetic watertight test shapes.

Hand-built primitives (tetrahedron, cube, icosphere, lathes) plus implicit
blob shapes polygonized with marching cubes. Every generator returns a
validated TriangleMesh and asserts watertightness, so downstream stages can
rely on it.
"""

from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh
from .voxel import GridSpec, VoxelGrid


def make_tetrahedron(scale: float = 1.0) -> TriangleMesh:
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=np.float64) * scale
    t = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])
    return TriangleMesh(vertices=v, triangles=t, name="tetrahedron")


def make_cube(edge: float = 1.0, origin=(0.0, 0.0, 0.0)) -> TriangleMesh:
    o = np.asarray(origin, dtype=np.float64)
    v = o + edge * np.array([
        [0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0],
        [0, 0, 1], [1, 0, 1], [0, 1, 1], [1, 1, 1],
    ], dtype=np.float64)
    t = np.array([
        [0, 2, 1], [1, 2, 3], [4, 5, 6], [5, 7, 6],
        [0, 1, 4], [1, 5, 4], [2, 6, 3], [3, 6, 7],
        [0, 4, 2], [2, 4, 6], [1, 3, 5], [3, 7, 5],
    ])
    return TriangleMesh(vertices=v, triangles=t, name="cube")


def make_open_box() -> TriangleMesh:
    """Cube with one face removed; deliberately not watertight."""
    cube = make_cube()
    return TriangleMesh(vertices=cube.vertices, triangles=cube.triangles[:-2],
                        name="open_box")


def make_icosphere(subdivisions: int = 3, radius: float = 1.0) -> TriangleMesh:
    t = (1.0 + 5.0**0.5) / 2.0
    verts = [np.array(v, dtype=np.float64) for v in [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]]
    verts = [v / np.linalg.norm(v) for v in verts]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    for _ in range(subdivisions):
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        nxt = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            nxt += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = nxt
    v = np.array(verts) * radius
    return TriangleMesh(vertices=v, triangles=np.array(faces), name="icosphere")


def make_lathe(profile_x, profile_r, sectors: int = 24,
               name: str = "lathe") -> TriangleMesh:
    """Surface of revolution about the x axis with mirror-symmetric topology.

    profile_r must be 0 at both ends (closed caps). Quad diagonals flip with
    the sign of x so the vertex graph has an exact x -> -x automorphism,
    which symmetric-weight tests rely on.
    """
    px = np.asarray(profile_x, dtype=np.float64)
    pr = np.asarray(profile_r, dtype=np.float64)
    if pr[0] != 0.0 or pr[-1] != 0.0:
        raise ValueError("profile must start and end at radius 0")
    if np.any(pr[1:-1] <= 0):
        raise ValueError("interior profile radii must be positive")

    ang = 2.0 * np.pi * np.arange(sectors) / sectors
    verts = [np.array([px[0], 0.0, 0.0])]
    ring_start = []
    for x, r in zip(px[1:-1], pr[1:-1]):
        ring_start.append(len(verts))
        for a in ang:
            verts.append(np.array([x, r * np.cos(a), r * np.sin(a)]))
    apex_end = len(verts)
    verts.append(np.array([px[-1], 0.0, 0.0]))

    tris = []
    first = ring_start[0]
    for s in range(sectors):
        tris.append((0, first + s, first + (s + 1) % sectors))
    for band in range(len(ring_start) - 1):
        a0, b0 = ring_start[band], ring_start[band + 1]
        xm = px[1 + band] + px[2 + band]
        for s in range(sectors):
            s1 = (s + 1) % sectors
            v0, v1 = a0 + s, a0 + s1
            v2, v3 = b0 + s, b0 + s1
            if xm > 0:
                tris += [(v0, v3, v1), (v0, v2, v3)]
            else:
                tris += [(v0, v2, v1), (v1, v2, v3)]
    last = ring_start[-1]
    for s in range(sectors):
        tris.append((apex_end, last + (s + 1) % sectors, last + s))

    mesh = TriangleMesh(vertices=np.array(verts), triangles=np.array(tris), name=name)
    assert mesh.watertight, "lathe construction must be closed"
    return mesh


def make_capsule(length: float = 2.0, radius: float = 0.4, rings: int = 17,
                 sectors: int = 20, name: str = "capsule") -> TriangleMesh:
    """Capsule along x, centered at the origin. `rings` must be odd so a ring
    sits exactly on the mirror plane x = 0."""
    if rings % 2 == 0:
        raise ValueError("rings must be odd")
    half = length / 2.0
    theta = np.linspace(0.0, np.pi / 2, 5)[1:-1]  # interior cap rings
    cap_x = radius * (1.0 - np.cos(theta))  # 0 at apex side
    cap_r = radius * np.sin(theta)
    xs = np.concatenate([
        [-half - radius],
        -half - radius + cap_x,
        np.linspace(-half, half, rings),
        half + radius - cap_x[::-1],
        [half + radius],
    ])
    rs = np.concatenate([[0.0], cap_r, np.full(rings, radius), cap_r[::-1], [0.0]])
    return make_lathe(xs, rs, sectors=sectors, name=name)


def make_barbell(shaft: float = 1.0, shaft_radius: float = 0.16,
                 bulb_radius: float = 0.34, sectors: int = 20) -> TriangleMesh:
    """Two bulbs joined by a shaft, mirror-symmetric about x = 0."""
    cx = shaft / 2.0 + bulb_radius * 0.55
    s = bulb_radius * 0.7
    xs_right = np.array([shaft / 2, cx - s, cx, cx + s])
    rs_right = np.array([shaft_radius,
                         np.sqrt(bulb_radius**2 - s**2),
                         bulb_radius,
                         np.sqrt(bulb_radius**2 - s**2)])
    xs = np.concatenate([
        [-(cx + bulb_radius)],
        -xs_right[::-1],
        np.linspace(-shaft / 2, shaft / 2, 7)[1:-1],
        xs_right,
        [cx + bulb_radius],
    ])
    rs = np.concatenate([
        [0.0], rs_right[::-1],
        np.full(5, shaft_radius),
        rs_right, [0.0],
    ])
    return make_lathe(xs, rs, sectors=sectors, name="barbell")


# -- implicit shapes ---------------------------------------------------------


def _sdf_sphere(p, center, r):
    return np.linalg.norm(p - np.asarray(center, dtype=np.float64), axis=1) - r


def _sdf_capsule(p, a, b, r):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    t = np.clip((p - a) @ ab / (ab @ ab), 0.0, 1.0)
    return np.linalg.norm(p - (a + t[:, None] * ab), axis=1) - r


def _smooth_union(d1, d2, k=0.06):
    h = np.clip(0.5 + 0.5 * (d2 - d1) / k, 0.0, 1.0)
    return d2 * (1 - h) + d1 * h - k * h * (1 - h)


def mesh_from_sdf(sdf, lo, hi, samples: int = 96, name: str = "blob") -> TriangleMesh:
    """Polygonize sdf < 0 with marching cubes; asserts a closed result."""
    from skimage import measure

    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    axes = [np.linspace(lo[i], hi[i], samples) for i in range(3)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    vol = sdf(pts).reshape(samples, samples, samples)
    spacing = (hi - lo) / (samples - 1)
    verts, faces, _, _ = measure.marching_cubes(vol, level=0.0, spacing=tuple(spacing))
    verts = verts + lo
    mesh = TriangleMesh(vertices=verts, triangles=faces.astype(np.int64), name=name)
    assert mesh.watertight, f"marching cubes produced an open {name}"
    return mesh


def make_star(arm_length: float = 1.0, arm_radius: float = 0.17,
              hub_radius: float = 0.17, samples: int = 72) -> TriangleMesh:
    """Three straight arms 120 degrees apart in the xy plane around a hub.

    Hub and arms share a radius so the medial lines stay straight and the
    default split tolerance leaves each arm a single segment."""

    def sdf(p):
        d = _sdf_sphere(p, (0, 0, 0), hub_radius)
        for ang in (0.0, 2 * np.pi / 3, 4 * np.pi / 3):
            tip = (arm_length * np.cos(ang), arm_length * np.sin(ang), 0.0)
            d = _smooth_union(d, _sdf_capsule(p, (0, 0, 0), tip, arm_radius), 0.03)
        return d

    m = arm_length + arm_radius + 0.15
    zm = max(arm_radius, hub_radius) + 0.15
    return mesh_from_sdf(sdf, (-m, -m, -zm), (m, m, zm), samples, name="star3")


def make_quadruped(samples: int = 48) -> TriangleMesh:
    """Four-legged blob: body along x, legs down in z, head and tail."""

    def sdf(p):
        d = _sdf_capsule(p, (-0.55, 0, 0.55), (0.55, 0, 0.55), 0.19)
        for sx in (-0.38, 0.38):
            for sy in (-0.15, 0.15):
                d = _smooth_union(
                    d, _sdf_capsule(p, (sx, sy, 0.52), (sx, sy, 0.1), 0.09), 0.05)
        d = _smooth_union(d, _sdf_capsule(p, (0.5, 0, 0.62), (0.8, 0, 0.92), 0.1), 0.05)
        d = _smooth_union(d, _sdf_sphere(p, (0.85, 0, 0.98), 0.14), 0.05)
        d = _smooth_union(d, _sdf_capsule(p, (-0.55, 0, 0.62), (-0.85, 0, 0.78), 0.06), 0.05)
        return d

    return mesh_from_sdf(sdf, (-1.1, -0.45, -0.12), (1.2, 0.45, 1.3), samples,
                         name="quadruped")


def make_biped(samples: int = 48) -> TriangleMesh:
    """Humanoid blob: torso up y, two arms, two legs, head."""

    def sdf(p):
        d = _sdf_capsule(p, (0, 0.62, 0), (0, 1.4, 0), 0.19)
        d = _smooth_union(d, _sdf_sphere(p, (0, 1.66, 0), 0.17), 0.05)
        for s in (-1.0, 1.0):
            d = _smooth_union(
                d, _sdf_capsule(p, (s * 0.16, 1.3, 0), (s * 0.7, 1.26, 0), 0.08), 0.05)
            d = _smooth_union(
                d, _sdf_capsule(p, (s * 0.13, 0.66, 0), (s * 0.17, 0.08, 0), 0.09), 0.05)
        return d

    return mesh_from_sdf(sdf, (-0.95, -0.15, -0.4), (0.95, 2.0, 0.4), samples,
                         name="biped")


def make_two_blobs(gap: float = 1.2, radius: float = 0.35,
                   samples: int = 40) -> TriangleMesh:
    """Two disjoint spheres in one mesh; voxelizes into two solid components."""

    def sdf(p):
        return np.minimum(_sdf_sphere(p, (-gap / 2, 0, 0), radius),
                          _sdf_sphere(p, (gap / 2, 0, 0), radius))

    m = gap / 2 + radius + 0.2
    zm = radius + 0.2
    return mesh_from_sdf(sdf, (-m, -zm, -zm), (m, zm, zm), samples, name="two_blobs")


def grid_from_occupancy(occ, cell_size: float = 1.0,
                        origin=(0.0, 0.0, 0.0)) -> VoxelGrid:
    """Wrap a hand-built boolean array as a VoxelGrid (boundary must be empty)."""
    occ = np.asarray(occ, dtype=bool)
    shell = np.ones(occ.shape, dtype=bool)
    shell[1:-1, 1:-1, 1:-1] = False
    if occ[shell].any():
        raise ValueError("hand-built occupancy must keep a 1-voxel empty shell")
    spec = GridSpec(resolution=max(2, max(occ.shape) - 2), padding=1,
                    origin=np.asarray(origin, dtype=np.float64),
                    cell_size=cell_size)
    return VoxelGrid(spec=spec, occupancy=occ)
