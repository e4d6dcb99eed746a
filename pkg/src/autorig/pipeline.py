"""End-to-end pipelines behind the CLI: both rigging methods plus posing.

Every stage is wrapped so failures carry the stage name, and artifacts are
written only after the whole pipeline succeeds (no partial output on error).
"""

from __future__ import annotations

import json
import os

from . import distance, medial, pathtree, voxel
from .config import PipelineConfig
from .embedding import (
    PenaltyModel,
    build_graph,
    builtin_template,
    default_penalty_model,
    embed_template,
    load_gamma,
    load_template,
    pack_spheres,
    refine_embedding,
)
from .errors import (
    AutorigError,
    BoneSetMismatchError,
    InfeasibleEmbeddingError,
    StageError,
)
from .mesh import load_mesh, write_mesh
from .skeleton import (
    bind_segments,
    build_skeleton,
    load_binding,
    load_skeleton,
    save_binding,
    save_skeleton,
    split_chain,
)
from .skinning import (
    compute_heat_weights,
    identity_pose,
    lbs_deform,
    load_pose,
    load_weights,
    rigid_binding,
    save_weights,
)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except InfeasibleEmbeddingError:
        raise  # keeps its dedicated exit code
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


class ArtifactSink:
    """Collects artifact files in memory; flush() writes them atomically
    enough that a failed run leaves nothing behind."""

    def __init__(self, out_dir):
        self.out_dir = out_dir
        self.pending = []  # (filename, writer_fn)

    def add(self, filename, writer):
        self.pending.append((filename, writer))

    def flush(self):
        os.makedirs(self.out_dir, exist_ok=True)
        written = []
        paths = {}
        try:
            for filename, writer in self.pending:
                path = os.path.join(self.out_dir, filename)
                writer(path)
                written.append(path)
                paths[filename] = path
        except Exception:
            for path in written:
                try:
                    os.unlink(path)
                except OSError:
                    pass
            raise
        return paths


def _shared_front(config: PipelineConfig, mesh_path):
    mesh = _stage("load", load_mesh, mesh_path)
    grid = _stage("voxelize", voxel.voxelize, mesh, config.resolution)
    fld = _stage("distance", distance.compute_edm, grid)
    dms = _stage("medial", medial.extract_dms, fld, config.dms_min_dist)
    return mesh, grid, fld, dms


def _debug_dumps(sink, grid, fld, dms):
    sink.add("voxels.txt", lambda p: voxel.dump_solid_voxels(grid, p))
    sink.add("distances.txt", lambda p: distance.dump_distances(fld, p))
    sink.add("medial.txt", lambda p: medial.dump_medial(dms, p))


def run_method1(config: PipelineConfig, mesh_path) -> dict:
    """Path-tree pipeline: skeleton.json + binding.json (+ debug dumps)."""
    mesh, grid, fld, dms = _shared_front(config, mesh_path)
    heart = _stage("heart", pathtree.find_heart, dms)
    extremes = _stage("extremes", pathtree.find_extreme_points, dms, heart)
    tree = _stage(
        "pathtree", pathtree.build_path_tree, dms, heart, extremes,
        config.extreme_threshold, config.pathcost,
    )
    smoothed = _stage("smooth", lambda: [
        pathtree.smooth_chain(c, grid, config.smoothing_iterations)
        for c in tree.chains
    ])
    max_err = 1.5 * grid.spec.cell_size
    splits = _stage("split", lambda: [
        split_chain(sc, config.max_segments, max_err) for sc in smoothed
    ])
    skel = _stage("skeleton", build_skeleton, tree, smoothed, splits, grid)
    binding = _stage("bind", bind_segments, mesh, skel)

    sink = ArtifactSink(config.out_dir)
    sink.add("skeleton.json", lambda p: save_skeleton(skel, p))
    sink.add("binding.json", lambda p: save_binding(binding, p))
    if config.dump_debug:
        _debug_dumps(sink, grid, fld, dms)
        sink.add("chains.obj", lambda p: pathtree.dump_chains_obj(smoothed, grid, p))
    paths = _stage("write", sink.flush)
    return {
        "paths": paths,
        "skeleton": skel,
        "binding": binding,
        "tree": tree,
        "chain_count": len(tree.chains),
        "joint_count": len(skel.joints),
    }


def _resolve_template(spec_value):
    if os.path.exists(spec_value):
        return load_template(spec_value)
    return builtin_template(spec_value)


def run_method2(config: PipelineConfig, mesh_path) -> dict:
    """Embedding pipeline: skeleton.json + weights.json (+ debug dumps)."""
    template = _stage("template", _resolve_template, config.template)
    model = (PenaltyModel(gamma=load_gamma(config.gamma)) if config.gamma
             else default_penalty_model())
    mesh, grid, fld, dms = _shared_front(config, mesh_path)
    min_radius = (config.min_radius if config.min_radius is not None
                  else 2.0 * grid.spec.cell_size)
    packing = _stage("pack", pack_spheres, dms, fld, min_radius)
    graph = _stage("graph", build_graph, packing, fld)
    beam = None if config.beam == 0 else config.beam
    embedding = embed_template(template, graph, model, beam)  # exit-2 error passes through
    skel = _stage("refine", refine_embedding, embedding, graph, fld, template)
    binding = _stage("skinning", compute_heat_weights, mesh, skel, fld,
                     config.max_influences)

    sink = ArtifactSink(config.out_dir)
    sink.add("skeleton.json", lambda p: save_skeleton(skel, p))
    sink.add("weights.json", lambda p: save_weights(binding, p))
    if config.dump_debug:
        _debug_dumps(sink, grid, fld, dms)
    paths = _stage("write", sink.flush)
    return {
        "paths": paths,
        "skeleton": skel,
        "weights": binding,
        "embedding": embedding,
        "graph": graph,
        "packing": packing,
    }


def run_pose(skeleton_path, weights_path, pose_path, mesh_path, out_path) -> dict:
    """Pose artifacts from either pipeline into a deformed OBJ."""
    skel = _stage("load", load_skeleton, skeleton_path)
    mesh = _stage("load", load_mesh, mesh_path)
    pose = _stage("pose", load_pose, pose_path)

    with open(weights_path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if "weights" in doc:
        binding = load_weights(weights_path)
    elif "vertex_bone" in doc:
        seg = load_binding(weights_path)
        if len(seg.bone_of_vertex) != len(mesh.vertices):
            raise BoneSetMismatchError(
                f"binding covers {len(seg.bone_of_vertex)} vertices, mesh has "
                f"{len(mesh.vertices)}")
        binding = rigid_binding(seg.bone_of_vertex, seg.n_bones)
    else:
        raise AutorigError(f"{weights_path}: neither a weights nor a binding file")

    nb = skel.n_bones
    if binding.n_bones != nb or pose.n_bones != nb:
        raise BoneSetMismatchError(
            f"bone counts differ: skeleton {nb}, weights {binding.n_bones}, "
            f"pose {pose.n_bones}")
    if binding.weights.shape[0] != len(mesh.vertices):
        raise BoneSetMismatchError(
            f"weights cover {binding.weights.shape[0]} vertices, mesh has "
            f"{len(mesh.vertices)}")

    posed = _stage("deform", lbs_deform, mesh, binding, identity_pose(nb), pose)
    _stage("write", write_mesh, posed, out_path)
    return {"mesh": posed, "path": out_path}
