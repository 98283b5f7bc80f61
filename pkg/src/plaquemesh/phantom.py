"""Analytic vessel phantoms with quadrature ground truth.

Two tube kinds are supported. ``straight-tube`` runs along +z and is cut by
the volume border (marching cubes later caps the ends). ``curved-tube`` is a
closed circular ring in the xz-plane whose centerline length equals
``length`` (ring radius = length / 2*pi), which avoids end caps entirely and
gives clean wall-thickness statistics.

The wall thickness field t(theta, s) over cross-section angle theta and
axial/arc position s is wall_thickness + optional Gaussian bump + optional
smooth seeded noise. Ground truth is the exact excess volume
integral of max(0, t - wall_thickness) shells, evaluated by fine quadrature
of the same field that drives voxelization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .volume_io import LABEL_LUMEN, LABEL_WALL, LabelVolume

STRAIGHT = "straight-tube"
CURVED = "curved-tube"

_MIN_THICKNESS = 0.05  # mm floor so the wall never vanishes
_FOOTPRINT_LEVEL = 0.1  # mm of excess thickness that counts as bump footprint
_NOISE_CELL_MM = 3.0  # axial noise cell size
_NOISE_CELLS_ANGULAR = 16
# curved tubes are tilted against the voxel grid; an axis-aligned ring keeps
# surface normals locked to grid planes, which is the staircase worst case
_CURVED_TILT = (0.32, 0.21)


@dataclass(frozen=True)
class BumpSpec:
    """Gaussian wall-thickening bump."""

    center_axial: float
    center_angular: float
    amplitude: float
    sigma_axial: float
    sigma_angular: float


@dataclass(frozen=True)
class PhantomSpec:
    kind: str
    lumen_radius: float
    wall_thickness: float
    voxel_size: float
    length: float
    bump: BumpSpec | None = None
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in (STRAIGHT, CURVED):
            raise ValidationError(f"unknown phantom kind {self.kind!r}")
        if self.lumen_radius <= 0:
            raise ValidationError("lumen_radius must be > 0")
        if self.wall_thickness <= 0:
            raise ValidationError("wall_thickness must be > 0")
        if self.voxel_size <= 0:
            raise ValidationError("voxel_size must be > 0")
        if self.length <= 0:
            raise ValidationError("length must be > 0")
        if self.noise_sigma < 0:
            raise ValidationError("noise_sigma must be >= 0")
        if self.bump is not None:
            if self.bump.amplitude < 0:
                raise ValidationError("bump amplitude must be >= 0")
            if self.bump.sigma_axial <= 0 or self.bump.sigma_angular <= 0:
                raise ValidationError("bump sigmas must be > 0")
            if not 0.0 <= self.bump.center_axial <= self.length:
                raise ValidationError("bump center_axial outside the tube")
            if 4.0 * self.bump.sigma_axial > self.length:
                raise ValidationError("bump larger than volume extent")
        if self.kind == CURVED:
            ring = self.length / (2.0 * math.pi)
            if ring <= self.lumen_radius + self.max_thickness():
                raise ValidationError(
                    "curved tube too short: ring radius must exceed outer radius"
                )

    def max_thickness(self) -> float:
        amp = self.bump.amplitude if self.bump else 0.0
        return self.wall_thickness + amp + 6.0 * self.noise_sigma

    def ring_radius(self) -> float:
        if self.kind != CURVED:
            raise ValidationError("ring_radius only defined for curved tubes")
        return self.length / (2.0 * math.pi)


@dataclass(frozen=True)
class PhantomTruth:
    """Analytic ground truth for one generated phantom."""

    excess_volume_mm3: float
    bump_footprint_mm2: float
    spec: PhantomSpec


def _wrap_angle(a):
    return (np.asarray(a) + math.pi) % (2.0 * math.pi) - math.pi


def _curved_rotation() -> np.ndarray:
    rx, ry = _CURVED_TILT
    cx, sx = math.cos(rx), math.sin(rx)
    cy, sy = math.cos(ry), math.sin(ry)
    rot_x = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    rot_y = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    return rot_y @ rot_x


class _NoiseField:
    """Smooth seeded Gaussian thickness jitter on a (theta, s) cell grid.

    Values are drawn per cell corner and interpolated bilinearly; theta wraps
    always, s wraps for closed (curved) tubes and clamps for straight ones.
    """

    def __init__(self, sigma: float, length: float, seed: int, periodic_s: bool):
        self.sigma = sigma
        self.length = length
        self.periodic_s = periodic_s
        self.n_theta = _NOISE_CELLS_ANGULAR
        self.n_s = max(2, int(round(length / _NOISE_CELL_MM)))
        rng = np.random.default_rng(seed)
        self.grid = rng.normal(0.0, 1.0, size=(self.n_s, self.n_theta))

    def __call__(self, theta, s):
        if self.sigma == 0.0:
            return np.zeros(np.broadcast(theta, s).shape)
        ft = (np.asarray(theta) % (2.0 * math.pi)) / (2.0 * math.pi) * self.n_theta
        it0 = np.floor(ft).astype(np.int64)
        wt = ft - it0
        it0 %= self.n_theta
        it1 = (it0 + 1) % self.n_theta

        fs = np.asarray(s) / self.length * self.n_s
        if self.periodic_s:
            is0 = np.floor(fs).astype(np.int64)
            ws = fs - is0
            is0 %= self.n_s
            is1 = (is0 + 1) % self.n_s
        else:
            fs = np.clip(fs, 0.0, self.n_s - 1.0 - 1e-12)
            is0 = np.floor(fs).astype(np.int64)
            ws = fs - is0
            is1 = np.minimum(is0 + 1, self.n_s - 1)
        g = self.grid
        val = (
            g[is0, it0] * (1 - ws) * (1 - wt)
            + g[is1, it0] * ws * (1 - wt)
            + g[is0, it1] * (1 - ws) * wt
            + g[is1, it1] * ws * wt
        )
        return self.sigma * val


def thickness_field(spec: PhantomSpec):
    """Vectorized callable t(theta, s) in mm for this phantom."""
    noise = _NoiseField(
        spec.noise_sigma, spec.length, spec.seed, periodic_s=spec.kind == CURVED
    )
    bump = spec.bump
    periodic_s = spec.kind == CURVED
    length = spec.length

    def thickness(theta, s):
        theta = np.asarray(theta, dtype=np.float64)
        s = np.asarray(s, dtype=np.float64)
        t = np.full(np.broadcast(theta, s).shape, spec.wall_thickness)
        if bump is not None and bump.amplitude > 0:
            dth = _wrap_angle(theta - bump.center_angular)
            ds = s - bump.center_axial
            if periodic_s:
                ds = (ds + length / 2.0) % length - length / 2.0
            t = t + bump.amplitude * np.exp(
                -0.5 * (dth / bump.sigma_angular) ** 2
                - 0.5 * (ds / bump.sigma_axial) ** 2
            )
        if spec.noise_sigma > 0:
            t = t + noise(theta, s)
        return np.maximum(t, _MIN_THICKNESS)

    return thickness


# -- voxelization ----------------------------------------------------------


def tube_volume(
    kind: str,
    lumen_radius: float,
    voxel_size: float,
    length: float,
    thickness,
    max_thickness: float,
    margin_voxels: int = 2,
) -> LabelVolume:
    """Voxelize a tube with an arbitrary thickness callable t(theta, s)."""
    h = voxel_size
    r_out = lumen_radius + max_thickness
    if kind == STRAIGHT:
        half = r_out + margin_voxels * h
        nxy = 2 * int(math.ceil(half / h)) + 1
        nz = int(round(length / h)) + 1
        origin = (-(nxy // 2) * h, -(nxy // 2) * h, 0.0)
        dims = (nxy, nxy, nz)
        x = origin[0] + np.arange(nxy) * h
        y = origin[1] + np.arange(nxy) * h
        z = origin[2] + np.arange(nz) * h
        X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
        rho = np.hypot(X, Y)
        theta = np.arctan2(Y, X)
        s = Z
    elif kind == CURVED:
        ring = length / (2.0 * math.pi)
        rot = _curved_rotation()
        half = [
            ring * math.hypot(rot[i, 0], rot[i, 2]) + r_out + margin_voxels * h
            for i in range(3)
        ]
        n = [2 * int(math.ceil(hf / h)) + 1 for hf in half]
        origin = tuple(-(ni // 2) * h for ni in n)
        dims = tuple(n)
        axes = [origin[i] + np.arange(n[i]) * h for i in range(3)]
        X, Y, Z = np.meshgrid(*axes, indexing="ij")
        # ring-frame coordinates: the centerline circle lives in the q0/q2 plane
        Q0 = X * rot[0, 0] + Y * rot[1, 0] + Z * rot[2, 0]
        Q1 = X * rot[0, 1] + Y * rot[1, 1] + Z * rot[2, 1]
        Q2 = X * rot[0, 2] + Y * rot[1, 2] + Z * rot[2, 2]
        r_plane = np.hypot(Q0, Q2)
        rho = np.hypot(r_plane - ring, Q1)
        theta = np.arctan2(r_plane - ring, Q1)  # 0 at the out-of-plane pole
        alpha = np.arctan2(Q2, Q0) % (2.0 * math.pi)
        s = ring * alpha
    else:
        raise ValidationError(f"unknown phantom kind {kind!r}")

    labels = np.zeros(dims, dtype=np.uint8)
    near = rho <= r_out + h  # only evaluate the thickness field where it matters
    t = np.zeros(dims)
    t[near] = thickness(theta[near], s[near])
    labels[rho <= lumen_radius + t] = LABEL_WALL
    labels[rho <= lumen_radius] = LABEL_LUMEN
    return LabelVolume(dims=dims, spacing=(h, h, h), origin=origin, labels=labels)


# -- quadrature ground truth -------------------------------------------------


def excess_volume_quadrature(
    kind: str,
    lumen_radius: float,
    length: float,
    thickness,
    baseline: float,
    n_angular: int = 2048,
    n_axial: int = 2048,
) -> float:
    """Exact volume of the wall material exceeding ``baseline`` thickness.

    The radial integral of the shell between r = R+baseline and R+t is done
    analytically; theta and s are integrated numerically on a midpoint grid.
    For curved tubes the torus volume element rho * (1 + rho*sin(theta)/ring)
    is used, with theta = 0 at the out-of-plane pole.
    """
    R = lumen_radius
    theta = (np.arange(n_angular) + 0.5) / n_angular * 2.0 * math.pi
    s = (np.arange(n_axial) + 0.5) / n_axial * length
    TH, S = np.meshgrid(theta, s, indexing="ij")
    t = np.maximum(thickness(TH, S), baseline)
    r_hi = R + t
    r_lo = R + baseline
    base = 0.5 * (r_hi**2 - r_lo**2)
    if kind == STRAIGHT:
        integrand = base
    elif kind == CURVED:
        ring = length / (2.0 * math.pi)
        cubic = (r_hi**3 - r_lo**3) / (3.0 * ring)
        integrand = base + np.sin(TH) * cubic
    else:
        raise ValidationError(f"unknown phantom kind {kind!r}")
    cell = (2.0 * math.pi / n_angular) * (length / n_axial)
    return float(integrand.sum() * cell)


def footprint_area_quadrature(
    kind: str,
    lumen_radius: float,
    wall_thickness: float,
    length: float,
    thickness,
    level: float = _FOOTPRINT_LEVEL,
    n_angular: int = 2048,
    n_axial: int = 2048,
) -> float:
    """Lateral area (at the nominal outer radius) where excess thickness > level."""
    r_mid = lumen_radius + wall_thickness
    theta = (np.arange(n_angular) + 0.5) / n_angular * 2.0 * math.pi
    s = (np.arange(n_axial) + 0.5) / n_axial * length
    TH, S = np.meshgrid(theta, s, indexing="ij")
    mask = thickness(TH, S) - wall_thickness > level
    if kind == CURVED:
        ring = length / (2.0 * math.pi)
        weight = r_mid * (1.0 + (r_mid / ring) * np.sin(TH))
    else:
        weight = np.full(TH.shape, r_mid)
    cell = (2.0 * math.pi / n_angular) * (length / n_axial)
    return float((mask * weight).sum() * cell)


def generate_phantom(spec: PhantomSpec) -> tuple[LabelVolume, PhantomTruth]:
    """Voxelized phantom plus its analytic ground truth."""
    thickness = thickness_field(spec)
    volume = tube_volume(
        spec.kind,
        spec.lumen_radius,
        spec.voxel_size,
        spec.length,
        thickness,
        spec.max_thickness(),
    )
    excess = excess_volume_quadrature(
        spec.kind, spec.lumen_radius, spec.length, thickness, spec.wall_thickness
    )
    footprint = 0.0
    if spec.bump is not None and spec.bump.amplitude > _FOOTPRINT_LEVEL:
        footprint = footprint_area_quadrature(
            spec.kind,
            spec.lumen_radius,
            spec.wall_thickness,
            spec.length,
            thickness,
        )
    return volume, PhantomTruth(
        excess_volume_mm3=excess, bump_footprint_mm2=footprint, spec=spec
    )
