"""Triangle mesh container and Wavefront OBJ I/O.

Only the ``v``/``f`` subset of OBJ is understood: vertex positions and
triangular faces with 1-based indices (``a/b/c`` slash suffixes are
stripped). Everything else is skipped, which keeps fixtures hand-authorable.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshIndexError, MeshParseError, MeshTopologyError


@dataclass
class TriangleMesh:
    """Indexed triangle mesh. Vertices (n, 3) float64, triangles (m, 3) int64."""

    vertices: np.ndarray
    triangles: np.ndarray
    name: str = "mesh"
    watertight: bool = field(init=False, default=False)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        n = len(self.vertices)
        if self.triangles.size:
            if self.triangles.min() < 0 or self.triangles.max() >= n:
                raise MeshIndexError(
                    f"{self.name}: face index out of range (0..{n - 1})"
                )
            t = self.triangles
            if np.any((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])):
                raise MeshTopologyError(f"{self.name}: degenerate triangle (repeated index)")
        self.watertight = self._edge_counts_ok()

    def _edge_counts_ok(self):
        if not len(self.triangles):
            return True
        e = self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        e = np.sort(e, axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        return bool(np.all(counts == 2))

    @property
    def edges(self):
        """Unique undirected edges, (k, 2) sorted int array."""
        if not len(self.triangles):
            return np.zeros((0, 2), dtype=np.int64)
        e = self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        return np.unique(np.sort(e, axis=1), axis=0)

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def load_mesh(path) -> TriangleMesh:
    """Parse an OBJ file into a validated TriangleMesh.

    Raises MeshParseError (with line number) on malformed records,
    MeshTopologyError on non-triangle faces and MeshIndexError on
    out-of-range indices.
    """
    verts = []
    faces = []
    face_lines = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            key = tokens[0]
            if key == "v":
                if len(tokens) != 4:
                    raise MeshParseError(path, lineno, f"expected 'v x y z', got {line!r}")
                try:
                    verts.append([float(t) for t in tokens[1:]])
                except ValueError:
                    raise MeshParseError(path, lineno, f"bad coordinate in {line!r}") from None
            elif key == "f":
                idx = []
                for t in tokens[1:]:
                    head = t.split("/")[0]
                    try:
                        idx.append(int(head))
                    except ValueError:
                        raise MeshParseError(path, lineno, f"bad face index {t!r}") from None
                if len(idx) != 3:
                    raise MeshTopologyError(
                        f"{path}:{lineno}: face with {len(idx)} vertices (triangles only)"
                    )
                faces.append(idx)
                face_lines.append(lineno)
            # all other record types skipped

    nv = len(verts)
    tris = []
    for (a, b, c), lineno in zip(faces, face_lines):
        for i in (a, b, c):
            if i < 1 or i > nv:
                raise MeshIndexError(f"{path}:{lineno}: face index {i} out of range 1..{nv}")
        if len({a, b, c}) != 3:
            raise MeshTopologyError(f"{path}:{lineno}: degenerate face {a} {b} {c}")
        tris.append((a - 1, b - 1, c - 1))

    name = os.path.splitext(os.path.basename(str(path)))[0]
    return TriangleMesh(
        vertices=np.array(verts, dtype=np.float64).reshape(-1, 3),
        triangles=np.array(tris, dtype=np.int64).reshape(-1, 3),
        name=name,
    )


def write_mesh(mesh: TriangleMesh, path) -> None:
    """Write OBJ. Coordinates carry 8 decimals so a reload stays within 1e-6."""
    lines = []
    for x, y, z in mesh.vertices:
        lines.append(f"v {x:.8f} {y:.8f} {z:.8f}")
    for a, b, c in mesh.triangles:
        lines.append(f"f {a + 1} {b + 1} {c + 1}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
