"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -s tests/test_acceptance.py` to see the report lines.
"""

import time

import numpy as np

from autorig.cli import main
from autorig.config import PipelineConfig
from autorig.distance import compute_edm
from autorig.embedding import (
    builtin_template,
    default_penalty_model,
    embed_template,
    learn_gamma,
)
from autorig.fixtures import grid_from_occupancy, make_capsule, make_two_blobs
from autorig.medial import extract_dms
from autorig.mesh import write_mesh
from autorig.pathtree import (
    build_path_tree,
    find_extreme_points,
    find_heart,
    path_weight,
)
from autorig.pipeline import run_method1, run_method2
from autorig.skeleton import Joint, Skeleton, split_chain
from autorig.skinning import (
    assemble_heat_system,
    compute_heat_weights,
    identity_pose,
    lbs_deform,
)
from autorig.voxel import voxelize

from test_embedding import humanoid_graph, oracle_best, random_graph
from test_pathtree import exhaustive_min_cost
from test_skeleton import greedy_oracle, quarter_circle
from test_skinning import axis_quat, quat_to_matrix, skeleton_from_points


def report(num, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"\n[ACCEPTANCE] criterion {num} ({name}): {status} {detail}")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


# -- criterion 1 ---------------------------------------------------------------


def brute_dist2(occ):
    """All-pairs nearest-empty scan. Every term is a small integer far below
    2^24, so the float32 |s|^2 + |e|^2 - 2 s.e expansion is exact."""
    solid_idx = np.argwhere(occ)
    solid = solid_idx.astype(np.float32)
    empty_t = np.argwhere(~occ).astype(np.float32).T.copy()
    e2 = (empty_t**2).sum(axis=0)
    out = np.zeros(occ.shape, dtype=np.int64)
    for s0 in range(0, len(solid), 4096):
        block = solid[s0:s0 + 4096]
        g = block @ empty_t
        g *= -2.0
        g += e2[None, :]
        g += (block**2).sum(axis=1)[:, None]
        out[tuple(solid_idx[s0:s0 + 4096].T)] = np.rint(g.min(axis=1)).astype(np.int64)
    return out


def test_criterion_1_edt_oracle():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    ok = True
    for trial in range(50):
        dims = rng.integers(6, 25, size=3)
        occ = rng.random(dims) < rng.uniform(0.2, 0.8)
        occ[0], occ[-1] = False, False
        occ[:, 0], occ[:, -1] = False, False
        occ[:, :, 0], occ[:, :, -1] = False, False
        if not occ.any():
            continue
        field = compute_edm(grid_from_occupancy(occ))
        if not np.array_equal(field.dist2, brute_dist2(occ)):
            ok = False
            break
    elapsed = time.perf_counter() - t0
    report(1, "EDT oracle", ok and elapsed < 5.0,
           f"(50 grids, {elapsed:.2f}s < 5s)")


# -- criterion 2 ---------------------------------------------------------------


def random_thin_shape(rng, max_voxels=120):
    """Branchy random walk with occasional thick nodules, so path costs mix
    deep (cheap) and shallow (expensive) voxels."""
    occ = np.zeros((24, 24, 24), dtype=bool)
    start = (12, 12, 12)
    occ[start] = True
    heads = [start]
    count = 1
    steps = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
    while count < max_voxels and heads:
        i = int(rng.integers(0, len(heads)))
        v = heads[i]
        d = steps[int(rng.integers(0, 6))]
        u = (v[0] + d[0], v[1] + d[1], v[2] + d[2])
        if not all(1 <= c <= 22 for c in u):
            heads.pop(i)
            continue
        if not occ[u]:
            occ[u] = True
            count += 1
        heads.append(u)
        if rng.random() < 0.06 and count + 27 <= max_voxels \
                and all(2 <= c <= 21 for c in u):
            occ[u[0] - 1:u[0] + 2, u[1] - 1:u[1] + 2, u[2] - 1:u[2] + 2] = True
            count = int(occ.sum())
        if rng.random() < 0.25 and len(heads) > 3:
            heads.pop(int(rng.integers(0, len(heads))))
    return occ


def test_criterion_2_path_optimality():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    ok = True
    chains_checked = 0
    for trial in range(20):
        occ = random_thin_shape(rng)
        assert occ.sum() <= 200
        field = compute_edm(grid_from_occupancy(occ))
        dms = extract_dms(field, 1.0)
        heart = find_heart(dms)
        extremes = find_extreme_points(dms, heart)
        tree = build_path_tree(dms, heart, extremes, 2.0, cost_mode="paper")
        tree_voxels = {heart.voxel}
        for chain in tree.chains:
            w = path_weight(chain.voxels, field)
            best = exhaustive_min_cost(field, chain.extreme, tree_voxels,
                                       mode="paper")
            if not abs(w - best) <= 1e-12 * max(abs(best), 1.0):
                ok = False
            chains_checked += 1
            tree_voxels |= {tuple(v) for v in chain.voxels.tolist()}
    elapsed = time.perf_counter() - t0
    report(2, "path optimality", ok and elapsed < 30.0 and chains_checked >= 20,
           f"(20 shapes, {chains_checked} chains, {elapsed:.2f}s < 30s)")


# -- criterion 3 ---------------------------------------------------------------


def test_criterion_3_star_topology(star_obj, tmp_path):
    t0 = time.perf_counter()
    cfg = PipelineConfig(method="pathtree", resolution=48, max_segments=1,
                         out_dir=str(tmp_path))
    result = run_method1(cfg, star_obj)
    elapsed = time.perf_counter() - t0
    ok = (result["chain_count"] == 3 and result["joint_count"] == 4
          and elapsed < 10.0)
    report(3, "star fixture topology", ok,
           f"({result['chain_count']} chains, {result['joint_count']} joints, "
           f"{elapsed:.2f}s < 10s)")


# -- criterion 4 ---------------------------------------------------------------


def test_criterion_4_split_step_optimality():
    t0 = time.perf_counter()
    pts = quarter_circle(17)
    history = greedy_oracle(pts, 4)
    ok = len(history) == 3
    for step, expected in enumerate(history, start=2):
        got = split_chain(pts, max_segments=step, max_error=0.0)
        ok = ok and got == expected
    elapsed = time.perf_counter() - t0
    report(4, "split-step optimality", ok and elapsed < 1.0,
           f"({len(history)} greedy steps re-enumerated, {elapsed:.3f}s < 1s)")


# -- criterion 5 ---------------------------------------------------------------


def test_criterion_5_embedding_oracle():
    t0 = time.perf_counter()
    template = builtin_template("biped7")
    model = default_penalty_model()
    rng = np.random.default_rng(42)
    graphs = [random_graph(rng, 8) for _ in range(8)]
    graphs.append(random_graph(rng, 9))
    graphs.append(humanoid_graph())
    ok = True
    for graph in graphs:
        assert graph.n <= 20
        emb = embed_template(template, graph, model, beam=None)
        best, argmins = oracle_best(template, graph, model.gamma)
        if not abs(emb.penalty - best) <= 1e-12 * max(abs(best), 1.0):
            ok = False
    # beam=512 within 5% of optimal on the humanoid fixture
    hum = graphs[-1]
    full = embed_template(template, hum, model, beam=None)
    beamed = embed_template(template, hum, model, beam=512)
    ok = ok and beamed.penalty <= full.penalty * 1.05 + 1e-12
    elapsed = time.perf_counter() - t0
    report(5, "embedding oracle", ok and elapsed < 60.0,
           f"(10 graphs, beam512/opt = "
           f"{beamed.penalty / max(full.penalty, 1e-300):.3f}, "
           f"{elapsed:.1f}s < 60s)")


# -- criterion 6 ---------------------------------------------------------------


def test_criterion_6_margin_optimizer():
    rng = np.random.default_rng(99)
    t0 = time.perf_counter()
    ok = True
    for trial in range(20):
        k = int(rng.integers(2, 7))
        m = int(rng.integers(1, 6))
        n = int(rng.integers(1, 6))
        good = rng.random((m, k))
        bad = rng.random((n, k))
        gamma, margin = learn_gamma(good, bad, seed=trial)
        sweep = np.abs(rng.standard_normal((10_000, k)))
        sweep /= np.linalg.norm(sweep, axis=1, keepdims=True)
        sweep_best = ((bad @ sweep.T).min(axis=0) - (good @ sweep.T).min(axis=0)).max()
        if margin < sweep_best - 1e-9:
            ok = False
    elapsed = time.perf_counter() - t0
    report(6, "margin optimizer", ok and elapsed < 20.0,
           f"(20 instances x 10k sweep, {elapsed:.1f}s < 20s)")


# -- criterion 7 ---------------------------------------------------------------


def test_criterion_7_skinning_invariants(barbell_mesh, star_rig):
    t0 = time.perf_counter()
    rigs = []

    capsule = make_capsule(length=2.0, radius=0.4)
    f1 = compute_edm(voxelize(capsule, 32))
    rigs.append((capsule, f1, skeleton_from_points([(-0.9, 0, 0), (0.9, 0, 0)])))

    long_capsule = make_capsule(length=4.0, radius=0.35, rings=33)
    f2 = compute_edm(voxelize(long_capsule, 48))
    rigs.append((long_capsule, f2, skeleton_from_points(
        [(-2.1, 0, 0), (-0.7, 0, 0), (0.7, 0, 0), (2.1, 0, 0)])))

    f3 = compute_edm(voxelize(barbell_mesh, 48))
    rigs.append((barbell_mesh, f3, Skeleton(joints=[
        Joint("root", None, np.array([0.0, 0.0, 0.0])),
        Joint("left", 0, np.array([-0.8, 0.0, 0.0])),
        Joint("right", 0, np.array([0.8, 0.0, 0.0])),
    ])))

    from autorig.pathtree import smooth_chain
    from autorig.skeleton import build_skeleton
    tree, grid = star_rig["tree"], star_rig["grid"]
    smoothed = [smooth_chain(c, grid, 10) for c in tree.chains]
    star_skel = build_skeleton(tree, smoothed, [[] for _ in smoothed], grid)
    rigs.append((star_rig["mesh"], star_rig["field"], star_skel))

    ok = True
    notes = []
    for mesh, field, skel in rigs:
        raw = compute_heat_weights(mesh, skel, field, max_influences=None)
        K, h, sources = assemble_heat_system(mesh, skel, field)
        for b in range(skel.n_bones):
            res = np.abs(K @ raw.weights[:, b] - h * sources[:, b]).max()
            ok = ok and res < 1e-8
        ok = ok and raw.weights.min() > -1e-6 and raw.weights.max() < 1 + 1e-6

        binding = compute_heat_weights(mesh, skel, field)
        w = binding.weights
        ok = ok and np.abs(w.sum(axis=1) - 1.0).max() < 1e-9 and (w >= 0).all()

        nb = skel.n_bones
        ident = lbs_deform(mesh, binding, identity_pose(nb), identity_pose(nb))
        ok = ok and np.abs(ident.vertices - mesh.vertices).max() < 1e-7

        q = axis_quat([1, 1, 2], 0.9)
        R = quat_to_matrix(q)
        from autorig.skinning import Pose
        pose = Pose(rotations=np.tile(q, (nb, 1)), translations=np.zeros((nb, 3)))
        rigid = lbs_deform(mesh, binding, identity_pose(nb), pose)
        rigid_err = np.abs(rigid.vertices - mesh.vertices @ R.T).max()
        ok = ok and rigid_err < 1e-7
        notes.append(f"{mesh.name}:{nb}b")
    elapsed = time.perf_counter() - t0
    report(7, "skinning invariants", ok and elapsed < 30.0,
           f"({', '.join(notes)}; {elapsed:.1f}s < 30s)")


# -- criterion 8 ---------------------------------------------------------------


def test_criterion_8_failure_mode_parity(biped_obj, tmp_path):
    code_small = main(["method2", str(biped_obj), "--template", "biped7",
                       "--min-radius", "10.0", "--out", str(tmp_path / "a")])
    blobs = tmp_path / "blobs.obj"
    write_mesh(make_two_blobs(), blobs)
    code_disc = main(["method2", str(blobs), "--template", "biped7",
                      "--out", str(tmp_path / "b")])
    ok = code_small == 2 and code_disc == 2
    ok = ok and not (tmp_path / "a" / "skeleton.json").exists()
    ok = ok and not (tmp_path / "b" / "skeleton.json").exists()
    report(8, "failure-mode parity", ok,
           f"(undersized graph -> exit {code_small}, disconnected -> exit {code_disc})")


# -- criterion 9 ---------------------------------------------------------------


def test_criterion_9_end_to_end_desk_scale(quadruped_mesh, quadruped_obj, tmp_path):
    ok = len(quadruped_mesh.triangles) <= 10_000
    times = {}
    digests = {}
    for method, runner, kwargs in (
        ("method1", run_method1, {"method": "pathtree"}),
        ("method2", run_method2, {"method": "embed", "template": "quadruped9"}),
    ):
        for attempt in ("a", "b"):
            out = tmp_path / f"{method}_{attempt}"
            cfg = PipelineConfig(resolution=64, out_dir=str(out), **kwargs)
            t0 = time.perf_counter()
            result = runner(cfg, quadruped_obj)
            times[(method, attempt)] = time.perf_counter() - t0
            digests[(method, attempt)] = {
                name: open(path, "rb").read() for name, path in result["paths"].items()
            }
        ok = ok and times[(method, "a")] < 60.0 and times[(method, "b")] < 60.0
        ok = ok and digests[(method, "a")] == digests[(method, "b")]
    report(9, "end-to-end desk scale", ok,
           f"({len(quadruped_mesh.triangles)} tris; "
           f"m1 {times[('method1', 'a')]:.1f}s, m2 {times[('method2', 'a')]:.1f}s "
           "< 60s; reruns byte-identical)")
