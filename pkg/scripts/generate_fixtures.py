#!/usr/bin/env python3
"""Write the synthetic test shapes as OBJ files for manual inspection."""

import argparse
import os

from autorig.fixtures import (
    make_barbell,
    make_biped,
    make_capsule,
    make_cube,
    make_icosphere,
    make_quadruped,
    make_star,
    make_tetrahedron,
    make_two_blobs,
)
from autorig.mesh import write_mesh

GENERATORS = {
    "tetrahedron": make_tetrahedron,
    "cube": make_cube,
    "icosphere": make_icosphere,
    "capsule": make_capsule,
    "barbell": make_barbell,
    "star3": make_star,
    "quadruped": make_quadruped,
    "biped": make_biped,
    "two_blobs": make_two_blobs,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="fixtures", help="output directory")
    ap.add_argument("--only", nargs="*", choices=sorted(GENERATORS),
                    help="subset of shapes to write")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    names = args.only or sorted(GENERATORS)
    for name in names:
        mesh = GENERATORS[name]()
        path = os.path.join(args.out, f"{name}.obj")
        write_mesh(mesh, path)
        print(f"{path}: {len(mesh.vertices)} vertices, {len(mesh.triangles)} "
              f"triangles, watertight={mesh.watertight}")


if __name__ == "__main__":
    main()
