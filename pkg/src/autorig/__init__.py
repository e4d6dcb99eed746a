"""Automatic skeleton extraction and skinning for closed triangle meshes."""

from .config import PipelineConfig
from .distance import DistanceField, compute_edm, query_distance
from .embedding import (
    EmbedGraph,
    Embedding,
    PenaltyModel,
    ReducedTemplate,
    SpherePacking,
    build_graph,
    embed_template,
    feature_vector,
    learn_gamma,
    pack_spheres,
    penalty,
    refine_embedding,
)
from .medial import MedialSurface, extract_dms
from .mesh import TriangleMesh, load_mesh, write_mesh
from .pathtree import (
    Heart,
    PathTree,
    SmoothChain,
    build_path_tree,
    find_extreme_points,
    find_heart,
    path_weight,
    smooth_chain,
)
from .pipeline import run_method1, run_method2, run_pose
from .skeleton import (
    SegmentBinding,
    Skeleton,
    bind_segments,
    build_skeleton,
    split_chain,
)
from .skinning import Pose, SkinBinding, compute_heat_weights, lbs_deform
from .voxel import GridSpec, VoxelGrid, voxel_to_world, voxelize, world_to_voxel

__version__ = "0.1.0"
