"""Exception hierarchy for the plaquemesh pipeline."""

from __future__ import annotations


class PlaquemeshError(Exception):
    """Base class for all plaquemesh errors."""


class FormatError(PlaquemeshError):
    """A file does not conform to the supported format subset.

    Carries the name of the offending header field when known.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class TruncationError(FormatError):
    """Raw data block is shorter than the header promises."""


class ValidationError(PlaquemeshError):
    """Input violates a documented invariant."""


class EmptyMeshError(PlaquemeshError):
    """Isosurface extraction produced no surface (indicator empty or full)."""


class NotWatertightError(PlaquemeshError):
    """Operation requires a closed mesh but boundary edges exist."""


class NonManifoldError(PlaquemeshError):
    """An edge is shared by three or more triangles."""

    def __init__(self, edge: tuple[int, int]):
        super().__init__(f"non-manifold edge {edge} (>= 3 incident triangles)")
        self.edge = edge


class DegenerateThresholdError(PlaquemeshError):
    """Iterative thresholding removed every vertex (pathological input)."""


class NoCorrespondenceError(PlaquemeshError):
    """Projection of the outer plaque region onto the inner wall is empty."""


class DegenerateLoopError(PlaquemeshError):
    """A boundary loop has fewer than 3 vertices."""


class RepairFailureError(PlaquemeshError):
    """Watertight repair cannot proceed (e.g. non-orientable input)."""


class TopologyError(PlaquemeshError):
    """Region has the wrong topology for the requested operation."""


class SolverError(PlaquemeshError):
    """Sparse solve failed or produced a non-finite solution."""


class PipelineStageError(PlaquemeshError):
    """Failure inside one stage of the extraction pipeline, tagged by stage."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}': {cause}")
        self.stage = stage
        self.cause = cause
