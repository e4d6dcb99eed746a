"""Exception types shared across the rigging pipeline."""


class AutorigError(Exception):
    """Base class for all pipeline errors."""


class MeshParseError(AutorigError):
    """Malformed OBJ record; carries the offending line number."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


class MeshTopologyError(AutorigError):
    """Face record that is not a triangle of three distinct vertices."""


class MeshIndexError(AutorigError):
    """Face references a vertex index outside the vertex table."""


class NotWatertightError(AutorigError):
    """Operation requires a closed surface but the mesh has boundary edges."""


class ResolutionTooSmallError(AutorigError):
    """Voxelization produced too few interior voxels to work with."""


class EmptyGridError(AutorigError):
    """Distance transform requested on a grid with no solid voxels."""


class OutOfBoundsError(AutorigError):
    """Grid coordinate or query point outside the voxel grid."""


class EmptyMedialSurfaceError(AutorigError):
    """No voxel passed the medial-surface test (resolution likely too low)."""


class AttachmentError(AutorigError):
    """Chain attachment does not map onto the existing skeleton."""


class InfeasibleEmbeddingError(AutorigError):
    """No assignment of template joints to graph vertices exists."""


class SingularSystemError(AutorigError):
    """Heat-weight system has a mesh component with no heat source."""


class BoneSetMismatchError(AutorigError):
    """Pose/binding/skeleton artifacts disagree on the bone count."""


class ConfigError(AutorigError):
    """Bad key or out-of-range value in a pipeline configuration."""


class StageError(AutorigError):
    """Wraps an error with the pipeline stage it occurred in."""

    def __init__(self, stage, cause):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause
