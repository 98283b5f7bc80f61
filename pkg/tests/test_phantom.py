import numpy as np
import pytest

from plaquemesh.errors import ValidationError
from plaquemesh.phantom import (
    CURVED,
    STRAIGHT,
    BumpSpec,
    PhantomSpec,
    generate_phantom,
    thickness_field,
)


def _bumped(kind=STRAIGHT, voxel=0.5, amplitude=2.0, seed=0, noise=0.0):
    length = 40.0 if kind == STRAIGHT else 72.0
    radius = 3.0 if kind == STRAIGHT else 5.0
    return PhantomSpec(
        kind=kind,
        lumen_radius=radius,
        wall_thickness=1.0,
        voxel_size=voxel,
        length=length,
        bump=BumpSpec(
            center_axial=length / 2,
            center_angular=0.6,
            amplitude=amplitude,
            sigma_axial=4.0,
            sigma_angular=0.6,
        ),
        noise_sigma=noise,
        seed=seed,
    )


def test_no_bump_no_noise_zero_excess():
    spec = PhantomSpec(
        kind=STRAIGHT, lumen_radius=3.0, wall_thickness=1.0,
        voxel_size=0.5, length=20.0,
    )
    _, truth = generate_phantom(spec)
    assert truth.excess_volume_mm3 == 0.0
    assert truth.bump_footprint_mm2 == 0.0


def test_straight_bump_excess_matches_independent_quadrature():
    spec = _bumped(STRAIGHT)
    _, truth = generate_phantom(spec)

    # independent oracle: 10x the library's quadrature resolution, and
    # integrating the mid-radius form max(0, t - w) * (R + (t + w) / 2)
    th = thickness_field(spec)
    n_a, n_s = 8192, 8192
    theta = (np.arange(n_a) + 0.5) / n_a * 2 * np.pi
    s = (np.arange(n_s) + 0.5) / n_s * spec.length
    TH, S = np.meshgrid(theta, s, indexing="ij")
    t = th(TH, S)
    excess = np.maximum(t - spec.wall_thickness, 0.0)
    r_mid = spec.lumen_radius + (t + spec.wall_thickness) / 2.0
    oracle = float(
        (excess * r_mid).sum() * (2 * np.pi / n_a) * (spec.length / n_s)
    )
    assert truth.excess_volume_mm3 == pytest.approx(oracle, rel=1e-3)


def test_curved_bump_excess_matches_independent_quadrature():
    spec = _bumped(CURVED)
    _, truth = generate_phantom(spec)
    th = thickness_field(spec)
    ring = spec.ring_radius()
    n_a, n_s = 4096, 4096
    theta = (np.arange(n_a) + 0.5) / n_a * 2 * np.pi
    s = (np.arange(n_s) + 0.5) / n_s * spec.length
    TH, S = np.meshgrid(theta, s, indexing="ij")
    t = th(TH, S)
    hi = spec.lumen_radius + t
    lo = spec.lumen_radius + spec.wall_thickness
    base = np.maximum(0.5 * (hi**2 - lo**2), 0.0)
    cubic = np.where(t > spec.wall_thickness, (hi**3 - lo**3) / (3 * ring), 0.0)
    oracle = float(
        ((base + np.sin(TH) * cubic)).sum() * (2 * np.pi / n_a) * (spec.length / n_s)
    )
    assert truth.excess_volume_mm3 == pytest.approx(oracle, rel=1e-3)


def test_voxel_count_scales_with_resolution():
    coarse, _ = generate_phantom(_bumped(STRAIGHT, voxel=0.6))
    fine, _ = generate_phantom(_bumped(STRAIGHT, voxel=0.3))
    n_coarse = int((coarse.labels == 2).sum())
    n_fine = int((fine.labels == 2).sum())
    assert n_fine / n_coarse == pytest.approx(8.0, rel=0.1)


def test_amplitude_monotonicity():
    volumes = []
    for amp in (0.5, 1.0, 2.0, 3.0):
        _, truth = generate_phantom(_bumped(STRAIGHT, amplitude=amp))
        volumes.append(truth.excess_volume_mm3)
    assert all(b > a for a, b in zip(volumes, volumes[1:]))


def test_deterministic_generation():
    a_vol, a_truth = generate_phantom(_bumped(STRAIGHT, noise=0.08, seed=11))
    b_vol, b_truth = generate_phantom(_bumped(STRAIGHT, noise=0.08, seed=11))
    assert a_vol == b_vol
    assert a_truth.excess_volume_mm3 == b_truth.excess_volume_mm3
    c_vol, _ = generate_phantom(_bumped(STRAIGHT, noise=0.08, seed=12))
    assert not (a_vol == c_vol)


def test_noise_included_in_ground_truth():
    _, quiet = generate_phantom(_bumped(STRAIGHT, amplitude=0.0, noise=0.0))
    spec = PhantomSpec(
        kind=STRAIGHT, lumen_radius=3.0, wall_thickness=1.0,
        voxel_size=0.5, length=40.0, noise_sigma=0.1, seed=3,
    )
    _, noisy = generate_phantom(spec)
    assert quiet.excess_volume_mm3 == 0.0
    assert noisy.excess_volume_mm3 > 0.0  # positive noise excursions count


def test_lumen_voxels_within_radius():
    spec = _bumped(STRAIGHT)
    vol, _ = generate_phantom(spec)
    xs = vol.voxel_centers_axis(0)
    ys = vol.voxel_centers_axis(1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    rho = np.hypot(X, Y)
    lumen_mask = vol.labels == 1
    for k in (0, vol.dims[2] // 2, vol.dims[2] - 1):
        sl = lumen_mask[:, :, k]
        assert (rho[sl] <= spec.lumen_radius + 1e-12).all()
        assert ((rho <= spec.lumen_radius) == sl).all()


def test_bump_too_long_for_tube_rejected():
    with pytest.raises(ValidationError):
        PhantomSpec(
            kind=STRAIGHT, lumen_radius=3.0, wall_thickness=1.0,
            voxel_size=0.5, length=10.0,
            bump=BumpSpec(center_axial=5.0, center_angular=0.0,
                          amplitude=1.0, sigma_axial=4.0, sigma_angular=0.5),
        )


def test_curved_tube_needs_room_for_ring():
    with pytest.raises(ValidationError):
        PhantomSpec(
            kind=CURVED, lumen_radius=3.0, wall_thickness=1.0,
            voxel_size=0.5, length=20.0,  # ring radius 3.18 < outer radius
        )


def test_footprint_area_positive_with_bump():
    _, truth = generate_phantom(_bumped(STRAIGHT))
    assert truth.bump_footprint_mm2 > 0.0
