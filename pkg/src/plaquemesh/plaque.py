"""Plaque detection and watertight plaque mesh construction.

The pipeline encodes the wall thickness as per-vertex distances from the
outer wall mesh to the inner wall mesh, thresholds them (fixed population
value or iterative per-case value), keeps the largest thick region, projects
it onto the inner wall, shifts both regions toward each other by half the
normal wall thickness, zips the region rims together and closes whatever
holes remain.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .distance import MeshDistanceQuery, distance_to_mesh
from .errors import (
    DegenerateLoopError,
    DegenerateThresholdError,
    NoCorrespondenceError,
    PipelineStageError,
    RepairFailureError,
    ValidationError,
)
from .isosurface import (
    SMOOTH_ITERATIONS_DEFAULT,
    SMOOTH_RELAXATION_DEFAULT,
    laplacian_smooth,
    marching_cubes,
)
from .mesh import (
    Submesh,
    TriangleMesh,
    boundary_loops,
    connected_components,
    drop_unreferenced_vertices,
    orient_consistently,
    weld_vertices,
)
from .volume_io import LABEL_LUMEN, LABEL_WALL, LabelVolume

logger = logging.getLogger(__name__)

GLOBAL_MEAN_VWT_MM = 0.98
GLOBAL_SIGMA_VWT_MM = 0.2
GLOBAL_SIGMA_MULTIPLIER = 2.58
MIN_REGION_AREA_MM2 = 10.0
DEFAULT_K = 3.0
OFFSET_CLAMP_EPS_MM = 0.01
WELD_TOLERANCE_MM = 1e-6

MODE_GLOBAL = "global"
MODE_CASE = "case-specific"


def global_threshold(
    mean: float = GLOBAL_MEAN_VWT_MM,
    sigma: float = GLOBAL_SIGMA_VWT_MM,
    multiplier: float = GLOBAL_SIGMA_MULTIPLIER,
) -> float:
    """Fixed population threshold: mean + multiplier * sigma (1.496 mm default)."""
    return mean + multiplier * sigma


@dataclass(frozen=True)
class DistanceProfile:
    """Per-vertex unsigned distances from a host mesh to the inner wall."""

    host: TriangleMesh
    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != (self.host.n_vertices,):
            raise ValidationError(
                "distance profile length must equal host vertex count"
            )
        if values.size and values.min() < 0:
            raise ValidationError("distances must be nonnegative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.values)


def _distance_values(distances) -> np.ndarray:
    if isinstance(distances, DistanceProfile):
        return distances.values
    return np.asarray(distances, dtype=np.float64)


@dataclass(frozen=True)
class ThresholdState:
    """One step of the iterative case-specific threshold.

    ``normal_set`` holds the indices of vertices currently considered normal
    wall; ``pt`` is always exactly ``mu + k * sigma`` (population sigma).
    """

    iteration: int
    normal_set: np.ndarray
    mu: float
    sigma: float
    pt: float
    k: float
    history: tuple = ()

    def normal_count(self) -> int:
        return len(self.normal_set)


def case_specific_threshold(distances, k: float = DEFAULT_K) -> ThresholdState:
    """Iterate mu + k*sigma over the shrinking normal-vertex set to a fixed point.

    Starts from all vertices, removes those above the current threshold and
    stops when the set no longer changes. Returns the converged state with
    the full iteration trace in ``history``.
    """
    d = _distance_values(distances)
    if d.ndim != 1 or len(d) == 0:
        raise ValidationError("distances must be a non-empty 1D array")
    if k < 0:
        raise ValidationError("k must be >= 0")

    n = len(d)
    normal = np.ones(n, dtype=bool)
    trace: list[ThresholdState] = []
    for iteration in range(n + 1):
        vals = d[normal]
        if len(vals) == 0:
            raise DegenerateThresholdError(
                "every vertex fell above the threshold; input is pathological"
            )
        mu = float(vals.mean())
        sigma = float(vals.std())
        pt = mu + k * sigma
        state = ThresholdState(
            iteration=iteration,
            normal_set=np.flatnonzero(normal),
            mu=mu,
            sigma=sigma,
            pt=pt,
            k=float(k),
        )
        new_normal = d <= pt
        if bool((new_normal == normal).all()):
            return ThresholdState(
                iteration=state.iteration,
                normal_set=state.normal_set,
                mu=state.mu,
                sigma=state.sigma,
                pt=state.pt,
                k=state.k,
                history=tuple(trace),
            )
        trace.append(state)
        normal = new_normal
    raise DegenerateThresholdError("threshold iteration did not converge")


@dataclass(frozen=True)
class ThresholdRecord:
    """How the plaque threshold was obtained for one extraction."""

    mode: str
    pt: float
    half_shift: float
    k: float | None = None
    sigma_multiplier: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "mode": self.mode,
            "pt_mm": self.pt,
            "k": self.k,
            "sigma_multiplier": self.sigma_multiplier,
            "half_shift_mm": self.half_shift,
        }


def detect_plaque_region(
    outer: TriangleMesh,
    distances,
    pt: float,
    min_area_mm2: float = MIN_REGION_AREA_MM2,
    keep_all: bool = False,
):
    """Largest region of triangles whose three vertices all exceed ``pt``.

    Components below ``min_area_mm2`` are discarded. Returns ``None`` (or an
    empty list with ``keep_all``) when nothing qualifies, which is the
    healthy-artery outcome, not an error.
    """
    if pt <= 0:
        raise ValidationError("pt must be > 0")
    d = _distance_values(distances)
    if d.shape != (outer.n_vertices,):
        raise ValidationError("distance profile length must match vertex count")
    comps = connected_components(outer, d > pt)
    comps = [c for c in comps if c.area() >= min_area_mm2]
    if keep_all:
        return comps
    return comps[0] if comps else None


def project_to_inner(
    outer: TriangleMesh, outer_region: Submesh, inner: TriangleMesh
) -> Submesh:
    """Inner-wall counterpart of the outer plaque region (nearest-neighbor rule).

    An inner vertex belongs to the projection when its closest point on the
    outer wall lies on a region triangle; the largest connected component of
    triangles with all three vertices marked is returned.
    """
    if outer_region is None or outer_region.mesh.n_triangles == 0:
        raise ValidationError("outer_region must be non-empty")
    _, tri_idx, _ = MeshDistanceQuery(outer).query(inner.vertices)
    marked = np.isin(tri_idx, outer_region.triangle_indices)
    comps = connected_components(inner, marked)
    if not comps:
        raise NoCorrespondenceError(
            "no inner-wall triangle projects onto the outer plaque region"
        )
    return comps[0]


@dataclass(frozen=True)
class PlaqueRegionPair:
    """Outer/inner plaque regions plus everything needed to offset them."""

    outer_mesh: TriangleMesh
    inner_mesh: TriangleMesh
    outer_region: Submesh
    inner_region: Submesh
    outer_distances: np.ndarray
    half_shift: float

    def __post_init__(self):
        if self.outer_region.mesh.n_triangles == 0 or self.inner_region.mesh.n_triangles == 0:
            raise ValidationError("plaque regions must be non-empty")
        if self.half_shift < 0:
            raise ValidationError("half_shift must be >= 0")


def offset_regions(pair: PlaqueRegionPair) -> tuple[TriangleMesh, TriangleMesh]:
    """Shift the regions toward each other by half the normal wall thickness.

    Vertex normals come from the full parent meshes so rim vertices keep
    well-defined directions. Where the local wall thickness d drops below
    2 * half_shift the move is clamped to d/2 - 0.01 mm so the shells cannot
    cross. Returns (inner_shell, outer_shell).
    """
    hs = pair.half_shift

    def shifted(region: Submesh, parent: TriangleMesh, local_d, sign: float):
        normals = parent.vertex_normals()[region.vertex_indices]
        shift = np.where(
            local_d < 2.0 * hs,
            np.maximum(0.0, local_d / 2.0 - OFFSET_CLAMP_EPS_MM),
            hs,
        )
        verts = region.mesh.vertices + sign * shift[:, None] * normals
        return TriangleMesh(verts, region.mesh.triangles, dict(region.mesh.attributes))

    d_outer = np.asarray(pair.outer_distances)[pair.outer_region.vertex_indices]
    outer_shell = shifted(pair.outer_region, pair.outer_mesh, d_outer, -1.0)

    d_inner = MeshDistanceQuery(pair.outer_mesh).query(
        pair.inner_region.mesh.vertices
    )[0]
    inner_shell = shifted(pair.inner_region, pair.inner_mesh, d_inner, +1.0)
    return inner_shell, outer_shell


@dataclass(frozen=True)
class StitchResult:
    mesh: TriangleMesh
    banded_pairs: int
    open_loops: int  # loops left unstitched (holes for the repair stage)
    band_rejected: bool = False


def _loop_centroid(verts: np.ndarray, loop) -> np.ndarray:
    return verts[np.asarray(loop)].mean(axis=0)


def _zip_loops(verts: np.ndarray, loop_a, loop_b) -> list[tuple[int, int, int]]:
    """Minimal-area triangulated band between two boundary loops.

    ``loop_a`` is traversed in its stored (surface) direction, ``loop_b`` in
    reverse, so the band edges oppose the shells' boundary edges and the
    joined surface stays consistently oriented. The triangulation is the
    dynamic-programming optimum over all monotone zips for the fixed start
    rung (the nearest partner of the first ``loop_a`` vertex); a purely
    greedy walk desynchronizes on staircase-wiggly rims.
    """
    a = np.asarray(loop_a, dtype=np.int64)
    b = np.asarray(list(reversed(list(loop_b))), dtype=np.int64)
    na, nb = len(a), len(b)
    j0 = int(np.argmin(np.linalg.norm(verts[b] - verts[a[0]], axis=1)))
    b = np.roll(b, -j0)

    pa = verts[a[np.arange(na + 1) % na]]  # a[0] repeated at the end
    pb = verts[b[np.arange(nb + 1) % nb]]

    if na * nb > 4_000_000:  # DP table too large; pace by arc length instead
        return _zip_loops_paced(a, b, pa, pb)

    def tri_area(p, q, r):
        return 0.5 * np.linalg.norm(np.cross(q - p, r - p), axis=-1)

    # cost_a[i, j]: triangle (a[i+1], a[i], b[j]) when advancing along A
    cost_a = tri_area(pa[1:, None, :], pa[:-1, None, :], pb[None, :, :])
    # cost_b[i, j]: triangle (a[i], b[j], b[j+1]) when advancing along B
    cost_b = tri_area(pa[:, None, :], pb[None, :-1, :], pb[None, 1:, :])

    dp = np.full((na + 1, nb + 1), np.inf)
    dp[0, 0] = 0.0
    from_a = np.zeros((na + 1, nb + 1), dtype=bool)
    for i in range(na + 1):
        row = dp[i]
        if i > 0:
            via_a = dp[i - 1] + cost_a[i - 1]
            better = via_a < row
            row[better] = via_a[better]
            from_a[i, better] = True
        for j in range(1, nb + 1):
            via_b = row[j - 1] + cost_b[i, j - 1]
            if via_b < row[j]:
                row[j] = via_b
                from_a[i, j] = False

    tris = []
    i, j = na, nb
    while i > 0 or j > 0:
        if i > 0 and (j == 0 or from_a[i, j]):
            tris.append((int(a[i % na]), int(a[i - 1]), int(b[j % nb])))
            i -= 1
        else:
            tris.append((int(a[i % na]), int(b[(j - 1) % nb]), int(b[j % nb])))
            j -= 1
    tris.reverse()
    return tris


def _zip_loops_paced(a, b, pa, pb) -> list[tuple[int, int, int]]:
    """Arc-length-paced zip for very large loops (keeps traversals in step)."""
    na, nb = len(a), len(b)

    def fractions(p):
        seg = np.linalg.norm(np.diff(p, axis=0), axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        return cum / max(cum[-1], 1e-30)

    fa, fb = fractions(pa), fractions(pb)
    tris = []
    i = j = 0
    while i < na or j < nb:
        take_a = i < na and (j >= nb or fa[i + 1] <= fb[j + 1])
        if take_a:
            tris.append((int(a[(i + 1) % na]), int(a[i]), int(b[j % nb])))
            i += 1
        else:
            tris.append((int(a[i % na]), int(b[j]), int(b[(j + 1) % nb])))
            j += 1
    return tris


def combine_shells(
    inner_shell: TriangleMesh, outer_shell: TriangleMesh
) -> TriangleMesh:
    """One mesh from both shells, inner flipped away from the enclosed volume."""
    inner_flipped = inner_shell.flipped()
    shared = sorted(set(inner_flipped.attributes) & set(outer_shell.attributes))
    return TriangleMesh(
        np.vstack([inner_flipped.vertices, outer_shell.vertices]),
        np.vstack(
            [inner_flipped.triangles,
             outer_shell.triangles + inner_flipped.n_vertices]
        ),
        {
            name: np.concatenate(
                [inner_flipped.attributes[name], outer_shell.attributes[name]]
            )
            for name in shared
        },
    )


def stitch_borders(
    inner_shell: TriangleMesh, outer_shell: TriangleMesh
) -> StitchResult:
    """Join shell boundary loops into one surface.

    Loops are paired greedily by centroid distance and zipped with a
    minimal-area band; loops without a partner are left open for the repair
    stage. The inner shell is flipped so both shells face away from the
    enclosed plaque volume.
    """
    loops_inner = boundary_loops(inner_shell)
    loops_outer = boundary_loops(outer_shell)
    if not loops_inner or not loops_outer:
        raise ValidationError("both shells must have at least one boundary loop")
    for loop in loops_inner + loops_outer:
        if len(loop) < 3:
            raise DegenerateLoopError(f"boundary loop of length {len(loop)}")

    # flipping reverses loop direction; recompute on the flipped mesh
    loops_inner = boundary_loops(inner_shell.flipped())

    combined = combine_shells(inner_shell, outer_shell)
    verts = combined.vertices
    tris = combined.triangles
    attrs = dict(combined.attributes)
    n_inner = inner_shell.n_vertices
    loops_outer = [[v + n_inner for v in loop] for loop in loops_outer]

    # greedy pairing by centroid distance
    cin = [_loop_centroid(verts, lp) for lp in loops_inner]
    cout = [_loop_centroid(verts, lp) for lp in loops_outer]
    pairs = []
    free_in = set(range(len(loops_inner)))
    free_out = set(range(len(loops_outer)))
    while free_in and free_out:
        best = None
        for ii in sorted(free_in):
            for oo in sorted(free_out):
                dist = float(np.linalg.norm(cin[ii] - cout[oo]))
                if best is None or dist < best[0]:
                    best = (dist, ii, oo)
        _, ii, oo = best
        pairs.append((ii, oo))
        free_in.remove(ii)
        free_out.remove(oo)

    band = []
    n_banded = 0
    n_rejected = 0
    for ii, oo in pairs:
        tri_band = _zip_loops(verts, loops_outer[oo], loops_inner[ii])
        areas = _triangle_areas(verts, tri_band)
        scale = max(
            float(np.linalg.norm(np.ptp(verts[loops_outer[oo]], axis=0))), 1e-30
        )
        if np.all(areas < 1e-12 * scale * scale):
            n_rejected += 1
            logger.warning("stitch band degenerate (coincident loops); rejected")
            continue
        band.extend(tri_band)
        n_banded += 1

    if band:
        tris = np.vstack([tris, np.asarray(band, dtype=np.int64)])
    # every unpaired loop and both loops of every rejected pair stay open
    open_loops = len(free_in) + len(free_out) + 2 * n_rejected
    mesh = TriangleMesh(verts, tris, attrs)
    return StitchResult(
        mesh=mesh,
        banded_pairs=n_banded,
        open_loops=open_loops,
        band_rejected=n_rejected > 0,
    )


def _triangle_areas(verts: np.ndarray, tris) -> np.ndarray:
    t = np.asarray(tris)
    c = verts[t]
    return 0.5 * np.linalg.norm(
        np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1
    )


@dataclass(frozen=True)
class PlaqueMesh:
    """Closed plaque surface plus repair metadata."""

    mesh: TriangleMesh
    repaired_fraction: float
    threshold_used: ThresholdRecord | None = None

    def volume(self) -> float:
        return self.mesh.volume()

    def area(self) -> float:
        return self.mesh.area()


def _fill_fan(verts: np.ndarray, loop) -> tuple[np.ndarray, list]:
    """Centroid fan fill: returns (new vertex rows, triangles with -1 = centroid)."""
    centroid = verts[np.asarray(loop)].mean(axis=0)
    tris = [(loop[(i + 1) % len(loop)], loop[i], -1) for i in range(len(loop))]
    return centroid[None, :], tris


def _fill_earclip(verts: np.ndarray, loop) -> list:
    """Greedy minimal-area ear clipping of a hole loop."""
    poly = list(loop)
    tris = []
    while len(poly) > 3:
        n = len(poly)
        best = None
        for i in range(n):
            a, b, c = poly[(i - 1) % n], poly[i], poly[(i + 1) % n]
            area = _triangle_areas(verts, [(a, b, c)])[0]
            if best is None or area < best[0]:
                best = (area, i)
        _, i = best
        a, b, c = poly[(i - 1) % n], poly[i], poly[(i + 1) % n]
        tris.append((c, b, a))
        del poly[i]
    a, b, c = poly
    tris.append((c, b, a))
    return tris


def make_watertight(mesh: TriangleMesh) -> PlaqueMesh:
    """Weld, close every hole and orient the result with positive volume.

    Each hole is closed by whichever of centroid-fan or greedy ear-clip adds
    less area. The fraction of final area contributed by fill triangles is
    reported so synthesized surface can be audited.
    """
    welded = drop_unreferenced_vertices(weld_vertices(mesh, WELD_TOLERANCE_MM))
    if not welded.is_oriented():
        try:
            welded = orient_consistently(welded)
        except ValidationError as exc:
            raise RepairFailureError(f"cannot orient surface: {exc}") from exc

    try:
        loops = boundary_loops(welded)
    except Exception as exc:
        raise RepairFailureError(f"non-manifold after welding: {exc}") from exc

    verts = welded.vertices
    new_vert_rows = []
    fill_tris = []
    for loop in loops:
        if len(loop) < 3:
            raise RepairFailureError(f"degenerate hole of {len(loop)} vertices")
        ear = _fill_earclip(verts, loop)
        ear_area = float(_triangle_areas(verts, ear).sum())
        cen_rows, fan = _fill_fan(verts, loop)
        cen_id = len(verts) + len(new_vert_rows)
        fan = [(a, b, cen_id if c == -1 else c) for a, b, c in fan]
        all_rows = np.vstack([verts] + new_vert_rows + [cen_rows])
        fan_area = float(_triangle_areas(all_rows, fan).sum())
        if ear_area <= fan_area:
            fill_tris.extend(ear)
        else:
            new_vert_rows.append(cen_rows)
            fill_tris.extend(fan)

    if new_vert_rows or fill_tris:
        all_verts = (
            np.vstack([verts] + new_vert_rows) if new_vert_rows else verts
        )
        all_tris = np.vstack([welded.triangles, np.asarray(fill_tris, dtype=np.int64)])
        attrs = {}
        for name, vals in welded.attributes.items():
            pad = np.zeros(len(all_verts) - len(vals))
            attrs[name] = np.concatenate([vals, pad])
        repaired = TriangleMesh(all_verts, all_tris, attrs)
    else:
        repaired = welded

    if not repaired.is_oriented():
        try:
            repaired = orient_consistently(repaired)
        except ValidationError as exc:
            raise RepairFailureError(f"fill produced unorientable surface: {exc}") from exc
    if not repaired.is_closed():
        raise RepairFailureError("holes remain after fill")
    if repaired.signed_volume() < 0:
        repaired = repaired.flipped()

    added = float(_triangle_areas(repaired.vertices, fill_tris).sum()) if fill_tris else 0.0
    total = repaired.area()
    return PlaqueMesh(
        mesh=repaired,
        repaired_fraction=added / total if total > 0 else 0.0,
    )


# -- pipeline ---------------------------------------------------------------


@dataclass
class ExtractionResult:
    """Everything one pipeline run produced, including intermediate stages."""

    inner: TriangleMesh
    outer: TriangleMesh
    distances: np.ndarray
    threshold: ThresholdRecord
    threshold_state: ThresholdState | None = None
    region_outer: Submesh | None = None
    region_inner: Submesh | None = None
    shells: tuple[TriangleMesh, TriangleMesh] | None = None
    stitched: StitchResult | None = None
    plaque: PlaqueMesh | None = None
    no_plaque_reason: str | None = None

    @property
    def has_plaque(self) -> bool:
        return self.plaque is not None


def _stage(name: str):
    def wrap(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except PipelineStageError:
            raise
        except Exception as exc:
            raise PipelineStageError(name, exc) from exc

    return wrap


def extract_from_meshes(
    inner: TriangleMesh,
    outer: TriangleMesh,
    mode: str = MODE_CASE,
    k: float = DEFAULT_K,
    min_area_mm2: float = MIN_REGION_AREA_MM2,
) -> ExtractionResult:
    """Run detection through repair on prebuilt inner/outer wall meshes."""
    if mode not in (MODE_GLOBAL, MODE_CASE):
        raise ValidationError(f"unknown threshold mode {mode!r}")

    distances = _stage("distance")(distance_to_mesh, outer.vertices, inner)
    outer = outer.with_attribute("vwt", distances)

    state = None
    if mode == MODE_GLOBAL:
        pt = global_threshold()
        half_shift = GLOBAL_MEAN_VWT_MM / 2.0
        record = ThresholdRecord(
            mode=mode,
            pt=pt,
            half_shift=half_shift,
            sigma_multiplier=GLOBAL_SIGMA_MULTIPLIER,
        )
    else:
        state = _stage("threshold")(case_specific_threshold, distances, k)
        pt = state.pt
        half_shift = float(distances[state.normal_set].mean()) / 2.0
        record = ThresholdRecord(mode=mode, pt=pt, half_shift=half_shift, k=k)

    result = ExtractionResult(
        inner=inner,
        outer=outer,
        distances=distances,
        threshold=record,
        threshold_state=state,
    )

    region = _stage("detect")(
        detect_plaque_region, outer, distances, pt, min_area_mm2
    )
    if region is None:
        result.no_plaque_reason = (
            f"no connected region above pt={pt:.4g} mm with area >= "
            f"{min_area_mm2:.4g} mm^2"
        )
        return result
    result.region_outer = region

    try:
        inner_region = _stage("project")(project_to_inner, outer, region, inner)
    except PipelineStageError as exc:
        if isinstance(exc.cause, NoCorrespondenceError):
            result.no_plaque_reason = str(exc.cause)
            return result
        raise
    result.region_inner = inner_region

    pair = PlaqueRegionPair(
        outer_mesh=outer,
        inner_mesh=inner,
        outer_region=region,
        inner_region=inner_region,
        outer_distances=distances,
        half_shift=half_shift,
    )
    inner_shell, outer_shell = _stage("offset")(offset_regions, pair)
    result.shells = (inner_shell, outer_shell)

    loops_i = boundary_loops(inner_shell)
    loops_o = boundary_loops(outer_shell)
    if loops_i and loops_o:
        stitched = _stage("stitch")(stitch_borders, inner_shell, outer_shell)
    else:
        # closed shells (plaque wraps the whole vessel): nothing to zip, the
        # two shells already bound the excess volume by themselves
        stitched = StitchResult(
            mesh=combine_shells(inner_shell, outer_shell),
            banded_pairs=0,
            open_loops=len(loops_i) + len(loops_o),
        )
    result.stitched = stitched

    plaque = _stage("repair")(make_watertight, stitched.mesh)
    result.plaque = PlaqueMesh(
        mesh=plaque.mesh,
        repaired_fraction=plaque.repaired_fraction,
        threshold_used=record,
    )
    return result


def extract_plaque(
    volume: LabelVolume,
    mode: str = MODE_CASE,
    k: float = DEFAULT_K,
    smooth_iterations: int = SMOOTH_ITERATIONS_DEFAULT,
    smooth_relaxation: float = SMOOTH_RELAXATION_DEFAULT,
    min_area_mm2: float = MIN_REGION_AREA_MM2,
) -> ExtractionResult:
    """Full pipeline from a label volume; see :func:`extract_from_meshes`."""
    present = np.unique(volume.labels)
    if LABEL_LUMEN not in present or LABEL_WALL not in present:
        raise ValidationError("volume must contain both lumen and wall labels")

    inner = _stage("surface")(marching_cubes, volume, {LABEL_LUMEN})
    outer = _stage("surface")(marching_cubes, volume, {LABEL_LUMEN, LABEL_WALL})
    inner = _stage("smooth")(
        laplacian_smooth, inner, smooth_iterations, smooth_relaxation
    )
    outer = _stage("smooth")(
        laplacian_smooth, outer, smooth_iterations, smooth_relaxation
    )
    return extract_from_meshes(
        inner, outer, mode=mode, k=k, min_area_mm2=min_area_mm2
    )
