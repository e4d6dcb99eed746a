"""Command-line interface.

Subcommands: method1 (path-tree rig), method2 (template embedding rig),
pose (deform a mesh from saved artifacts), learn-gamma (train penalty
weights). Exit codes: 0 ok, 1 stage failure, 2 infeasible embedding.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import make_config
from .embedding import learn_gamma, save_gamma
from .errors import AutorigError, InfeasibleEmbeddingError
from .pipeline import run_method1, run_method2, run_pose


def _add_shared(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--resolution", type=int, help="voxels along the longest axis")
    p.add_argument("--dms-min-dist", type=float, dest="dms_min_dist",
                   help="medial-surface distance floor (voxels)")
    p.add_argument("--out", dest="out_dir", help="output directory")
    p.add_argument("--dump-debug", action="store_true", default=None,
                   dest="dump_debug", help="also write voxel/distance/medial dumps")


def _build_parser():
    ap = argparse.ArgumentParser(prog="autorig",
                                 description="Automatic mesh rigging pipelines")
    sub = ap.add_subparsers(dest="command", required=True)

    m1 = sub.add_parser("method1", help="path-tree skeleton + rigid binding")
    m1.add_argument("mesh")
    _add_shared(m1)
    m1.add_argument("--extreme-threshold", type=float, dest="extreme_threshold",
                    help="reject extremes this close (voxel hops) to covered space")
    m1.add_argument("--segments", type=int, dest="max_segments",
                    help="segment budget per chain")
    m1.add_argument("--smooth-iters", type=int, dest="smoothing_iterations",
                    help="chain smoothing iterations")
    m1.add_argument("--pathcost", choices=("weighted", "paper"),
                    help="step-length-scaled or plain 1/d^3 path cost")

    m2 = sub.add_parser("method2", help="template embedding + heat skinning")
    m2.add_argument("mesh")
    _add_shared(m2)
    m2.add_argument("--min-radius", type=float, dest="min_radius",
                    help="smallest packed sphere (world units)")
    m2.add_argument("--beam", type=int, help="beam width (0 = exhaustive)")
    m2.add_argument("--template", help="builtin template name or JSON path")
    m2.add_argument("--gamma", help="penalty weight vector JSON")
    m2.add_argument("--seed", type=int, help="seed recorded in the config")
    m2.add_argument("--max-influences", type=int, dest="max_influences",
                    help="bone influences kept per vertex")

    po = sub.add_parser("pose", help="apply a pose to saved rig artifacts")
    po.add_argument("skeleton")
    po.add_argument("weights", help="weights.json or binding.json")
    po.add_argument("pose")
    po.add_argument("mesh")
    po.add_argument("--out", default="posed.obj", help="output OBJ path")

    lg = sub.add_parser("learn-gamma", help="margin-train penalty weights")
    lg.add_argument("good", help="JSON array of good feature vectors")
    lg.add_argument("bad", help="JSON array of bad feature vectors")
    lg.add_argument("--seed", type=int, default=0)
    lg.add_argument("--starts", type=int, default=64)
    lg.add_argument("--out", default="gamma.json")

    return ap


_CONFIG_KEYS = (
    "resolution", "dms_min_dist", "extreme_threshold", "max_segments",
    "smoothing_iterations", "min_radius", "beam", "gamma", "template",
    "max_influences", "out_dir", "seed", "pathcost", "dump_debug",
)


def _config_from_args(args, method):
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    return make_config(file_path=args.config, overrides=overrides, method=method)


def _load_vectors(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "method1":
            config = _config_from_args(args, "pathtree")
            result = run_method1(config, args.mesh)
            print(f"method1: {result['chain_count']} chains, "
                  f"{result['joint_count']} joints -> {config.out_dir}")
        elif args.command == "method2":
            config = _config_from_args(args, "embed")
            result = run_method2(config, args.mesh)
            emb = result["embedding"]
            print(f"method2: embedded {len(emb.assignment)} joints "
                  f"(penalty {emb.penalty:.6g}) -> {config.out_dir}")
        elif args.command == "pose":
            result = run_pose(args.skeleton, args.weights, args.pose,
                              args.mesh, args.out)
            print(f"pose: wrote {result['path']}")
        elif args.command == "learn-gamma":
            gamma, margin = learn_gamma(_load_vectors(args.good),
                                        _load_vectors(args.bad),
                                        starts=args.starts, seed=args.seed)
            save_gamma(gamma, args.out, margin=margin)
            print(f"learn-gamma: margin {margin:.6g} -> {args.out}")
        return 0
    except InfeasibleEmbeddingError as exc:
        print(f"autorig: infeasible embedding: {exc}", file=sys.stderr)
        return 2
    except AutorigError as exc:
        print(f"autorig: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
