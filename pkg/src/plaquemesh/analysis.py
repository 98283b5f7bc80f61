"""Geometric plaque parameters, inside-voxel queries and intensity histograms.

The inside test uses the generalized winding number (robust against the
near-degenerate triangles a repair stage can leave behind); a voxel counts as
inside when the winding number of its center exceeds 0.5.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numba import njit, prange

from .errors import NotWatertightError, ValidationError
from .mesh import TriangleMesh
from .plaque import PlaqueMesh, ThresholdRecord
from .volume_io import IntensityVolume

DEFAULT_HISTOGRAM_BINS = 64


@njit(cache=True, parallel=True)
def _winding_kernel(tris, points, out):
    for q in prange(points.shape[0]):
        px, py, pz = points[q, 0], points[q, 1], points[q, 2]
        total = 0.0
        for t in range(tris.shape[0]):
            ax = tris[t, 0, 0] - px
            ay = tris[t, 0, 1] - py
            az = tris[t, 0, 2] - pz
            bx = tris[t, 1, 0] - px
            by = tris[t, 1, 1] - py
            bz = tris[t, 1, 2] - pz
            cx = tris[t, 2, 0] - px
            cy = tris[t, 2, 1] - py
            cz = tris[t, 2, 2] - pz
            la = math.sqrt(ax * ax + ay * ay + az * az)
            lb = math.sqrt(bx * bx + by * by + bz * bz)
            lc = math.sqrt(cx * cx + cy * cy + cz * cz)
            num = ax * (by * cz - bz * cy) + ay * (bz * cx - bx * cz) + az * (
                bx * cy - by * cx
            )
            den = (
                la * lb * lc
                + (ax * bx + ay * by + az * bz) * lc
                + (bx * cx + by * cy + bz * cz) * la
                + (cx * ax + cy * ay + cz * az) * lb
            )
            total += 2.0 * math.atan2(num, den)
        out[q] = total / (4.0 * math.pi)


def winding_numbers(mesh: TriangleMesh, points) -> np.ndarray:
    """Generalized winding number of each query point (about 1 inside, 0 outside)."""
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    out = np.empty(len(pts))
    _winding_kernel(np.ascontiguousarray(mesh.corners()), pts, out)
    return out


def voxels_inside(
    mesh: TriangleMesh,
    dims,
    spacing,
    origin,
) -> np.ndarray:
    """Linear indices (x-fastest) of voxels whose center is strictly inside.

    Only the voxels in the mesh's padded bounding box are tested; the result
    is sorted, so it is independent of evaluation order.
    """
    if not mesh.is_closed():
        raise NotWatertightError("inside test requires a closed mesh")
    dims = tuple(int(d) for d in dims)
    spacing = np.asarray(spacing, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)

    lo, hi = mesh.bounds()
    i_lo = np.maximum(np.floor((lo - origin) / spacing - 1), 0).astype(np.int64)
    i_hi = np.minimum(
        np.ceil((hi - origin) / spacing + 1), np.asarray(dims) - 1
    ).astype(np.int64)
    if (i_hi < i_lo).any():
        return np.empty(0, dtype=np.int64)

    axes = [np.arange(i_lo[a], i_hi[a] + 1) for a in range(3)]
    I, J, K = np.meshgrid(*axes, indexing="ij")
    idx = np.stack([I.ravel(), J.ravel(), K.ravel()], axis=1)
    centers = origin + idx * spacing
    w = winding_numbers(mesh, centers)
    inside = idx[w > 0.5]
    linear = inside[:, 0] + dims[0] * (inside[:, 1] + dims[1] * inside[:, 2])
    return np.sort(linear)


@dataclass(frozen=True)
class Histogram:
    """Fixed-width intensity histogram with bin edges anchored at zero."""

    bin_width: float
    bins: tuple  # (lower, upper, count) rows, contiguous
    flags: tuple = ()

    def total(self) -> int:
        return int(sum(b[2] for b in self.bins))

    def occupied(self) -> int:
        return int(sum(1 for b in self.bins if b[2] > 0))

    def to_rows(self):
        return [(float(lo), float(hi), int(c)) for lo, hi, c in self.bins]


def intensity_histogram(
    voxel_indices,
    intensities: IntensityVolume,
    bin_width: float | None = None,
    reference=None,
) -> Histogram:
    """Histogram of intensities at the given linear voxel indices.

    ``reference`` (a volume) can be passed to enforce that the intensity grid
    matches the label grid the indices came from.
    """
    if reference is not None and not intensities.same_geometry(reference):
        raise ValidationError(
            "intensity volume geometry does not match the label volume"
        )
    idx = np.asarray(voxel_indices, dtype=np.int64)
    n_total = intensities.dims[0] * intensities.dims[1] * intensities.dims[2]
    if idx.size and (idx.min() < 0 or idx.max() >= n_total):
        raise ValidationError("voxel index out of range")
    if idx.size == 0:
        return Histogram(
            bin_width=float(bin_width) if bin_width else 0.0,
            bins=(),
            flags=("empty",),
        )

    values = intensities.values.reshape(-1, order="F")[idx].astype(np.float64)
    vmin, vmax = float(values.min()), float(values.max())
    if bin_width is None:
        bin_width = (vmax - vmin) / DEFAULT_HISTOGRAM_BINS if vmax > vmin else 1.0
    bin_width = float(bin_width)
    if bin_width <= 0:
        raise ValidationError("bin_width must be > 0")

    first = math.floor(vmin / bin_width)
    last = math.floor(vmax / bin_width)
    which = np.floor(values / bin_width).astype(np.int64) - first
    counts = np.bincount(which, minlength=last - first + 1)
    bins = tuple(
        ((first + i) * bin_width, (first + i + 1) * bin_width, int(c))
        for i, c in enumerate(counts)
    )
    return Histogram(bin_width=bin_width, bins=bins)


@dataclass(frozen=True)
class PlaqueReport:
    """All geometric plaque parameters plus extraction metadata."""

    volume_mm3: float
    area_mm2: float
    d_sphere_mm: float
    d_circle_mm: float
    compactness: float
    max_extent_mm: float
    threshold: ThresholdRecord
    repaired_fraction: float
    histogram: Histogram | None = None
    flags: tuple = ()

    def to_json_dict(self) -> dict:
        doc = {
            "plaque": "extracted",
            "volume_mm3": self.volume_mm3,
            "area_mm2": self.area_mm2,
            "d_sphere_mm": self.d_sphere_mm,
            "d_circle_mm": self.d_circle_mm,
            "compactness": self.compactness,
            "max_extent_mm": self.max_extent_mm,
            "threshold": self.threshold.to_json_dict(),
            "repaired_fraction": self.repaired_fraction,
            "flags": list(self.flags),
        }
        if self.histogram is not None:
            doc["histogram"] = {
                "bin_width": self.histogram.bin_width,
                "bins": [list(row) for row in self.histogram.to_rows()],
                "flags": list(self.histogram.flags),
            }
        return doc


def ideal_sphere_diameter(volume: float) -> float:
    """Diameter of the sphere with the given volume."""
    return (6.0 * volume / math.pi) ** (1.0 / 3.0)


def ideal_circle_diameter(area: float) -> float:
    """Diameter of the circle whose area equals the given surface area."""
    return 2.0 * math.sqrt(area / math.pi)


def compactness(volume: float, area: float) -> float:
    """36*pi*V^2 / A^3; equals 1 for the ideal sphere."""
    return 36.0 * math.pi * volume**2 / area**3


def geometric_parameters(
    plaque: PlaqueMesh, histogram: Histogram | None = None, flags=()
) -> PlaqueReport:
    """Assemble the report for a watertight plaque mesh."""
    mesh = plaque.mesh
    volume = mesh.volume()  # raises NotWatertightError on open meshes
    area = mesh.area()
    if plaque.threshold_used is None:
        raise ValidationError("plaque mesh carries no threshold record")
    return PlaqueReport(
        volume_mm3=volume,
        area_mm2=area,
        d_sphere_mm=ideal_sphere_diameter(volume),
        d_circle_mm=ideal_circle_diameter(area),
        compactness=compactness(volume, area),
        max_extent_mm=mesh.max_extent(),
        threshold=plaque.threshold_used,
        repaired_fraction=plaque.repaired_fraction,
        histogram=histogram,
        flags=tuple(flags),
    )


def write_report_json(report_dict: dict, path) -> None:
    Path(path).write_text(
        json.dumps(report_dict, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def write_histogram_csv(histogram: Histogram, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lower", "bin_upper", "count"])
        for lo, hi, count in histogram.to_rows():
            writer.writerow([repr(lo), repr(hi), count])
