import numpy as np
import pytest
from scipy.spatial import ConvexHull

from geom import icosphere, planar_patch
from plaquemesh.errors import EmptyMeshError, ValidationError
from plaquemesh.isosurface import laplacian_smooth, marching_cubes
from plaquemesh.mesh import boundary_loops
from plaquemesh.volume_io import LabelVolume


def _volume_with(labels, spacing=(1.0, 1.0, 1.0), origin=(0.0, 0.0, 0.0)):
    return LabelVolume(dims=labels.shape, spacing=spacing, origin=origin,
                       labels=labels)


def test_single_voxel_octahedron():
    labels = np.zeros((3, 3, 3), dtype=np.uint8)
    labels[1, 1, 1] = 1
    vol = _volume_with(labels, spacing=(0.7, 0.7, 0.7), origin=(10.0, -4.0, 2.0))
    mesh = marching_cubes(vol, {1})
    assert mesh.is_closed()
    assert mesh.euler_characteristic() == 2
    # oracle: the 0.5-level of the indicator across the 8-cell neighborhood
    # is the octahedron spanning half a voxel along each axis
    center = np.array([10.0 + 0.7, -4.0 + 0.7, 2.0 + 0.7])
    h = 0.7
    apexes = center + np.array(
        [[h / 2, 0, 0], [-h / 2, 0, 0], [0, h / 2, 0],
         [0, -h / 2, 0], [0, 0, h / 2], [0, 0, -h / 2]]
    )
    oracle_volume = ConvexHull(apexes).volume
    # extraction stores vertices in float32, hence the 1e-6 relative bound
    assert mesh.volume() == pytest.approx(oracle_volume, rel=1e-6)
    assert np.allclose(sorted(map(tuple, mesh.vertices)),
                       sorted(map(tuple, apexes)), atol=1e-6)


def test_digitized_ball_volume():
    r = 10
    n = 12
    g = np.arange(2 * n + 1) - n
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    labels = ((X**2 + Y**2 + Z**2) <= r * r).astype(np.uint8)
    vol = _volume_with(labels, spacing=(0.5, 0.5, 0.5))
    mesh = marching_cubes(vol, {1})
    expected = 4.0 / 3.0 * np.pi * (r * 0.5) ** 3
    assert mesh.volume() == pytest.approx(expected, rel=0.02)
    assert mesh.is_closed()


def test_all_background_raises():
    vol = _volume_with(np.zeros((4, 4, 4), dtype=np.uint8))
    with pytest.raises(EmptyMeshError):
        marching_cubes(vol, {1})


def test_full_indicator_raises():
    vol = _volume_with(np.ones((4, 4, 4), dtype=np.uint8))
    with pytest.raises(EmptyMeshError):
        marching_cubes(vol, {1})


def test_empty_label_set_rejected():
    vol = _volume_with(np.ones((2, 2, 2), dtype=np.uint8))
    with pytest.raises(ValidationError):
        marching_cubes(vol, set())


def test_label_union():
    labels = np.zeros((5, 5, 5), dtype=np.uint8)
    labels[2, 2, 2] = 1
    labels[2, 2, 3] = 2
    vol = _volume_with(labels)
    lumen_only = marching_cubes(vol, {1})
    union = marching_cubes(vol, {1, 2})
    assert union.volume() > lumen_only.volume()


def test_border_touching_region_still_closed():
    labels = np.ones((3, 3, 3), dtype=np.uint8)
    labels[0, 0, 0] = 0
    vol = _volume_with(labels)
    mesh = marching_cubes(vol, {1})
    assert mesh.is_closed()
    assert boundary_loops(mesh) == []


def test_anisotropic_spacing_in_world_mm():
    labels = np.zeros((3, 3, 3), dtype=np.uint8)
    labels[1, 1, 1] = 1
    vol = _volume_with(labels, spacing=(0.5, 1.0, 2.0), origin=(0, 0, 0))
    mesh = marching_cubes(vol, {1})
    spans = np.ptp(mesh.vertices, axis=0)
    assert spans == pytest.approx([0.5, 1.0, 2.0], rel=1e-12)


def test_smooth_zero_iterations_is_identity():
    sph = icosphere(2)
    assert laplacian_smooth(sph, 0, 0.2) == sph


def test_smooth_planar_grid_interior_fixed():
    # a uniform-grid vertex sits exactly at its neighbor centroid, so it does
    # not move; boundary motion creeps inward one ring per iteration, so only
    # vertices deeper than the iteration count stay put
    patch = planar_patch(nx=15, ny=15)
    iterations = 3
    smoothed = laplacian_smooth(patch, iterations, 0.3)
    ny = 15
    deep = [
        i * ny + j
        for i in range(iterations + 1, 14 - iterations)
        for j in range(iterations + 1, 14 - iterations)
    ]
    assert deep
    assert np.allclose(
        smoothed.vertices[deep], patch.vertices[deep], atol=1e-12
    )
    # and one iteration leaves every interior vertex exactly fixed
    one = laplacian_smooth(patch, 1, 0.3)
    interior = [i * ny + j for i in range(1, 14) for j in range(1, 14)]
    assert np.allclose(
        one.vertices[interior], patch.vertices[interior], atol=1e-12
    )


def test_smooth_shrinks_icosphere_monotonically():
    mesh = icosphere(3)
    volumes = [mesh.volume()]
    for _ in range(10):
        mesh = laplacian_smooth(mesh, 1, 0.2)
        volumes.append(mesh.volume())
    assert all(b < a for a, b in zip(volumes, volumes[1:]))


def test_smooth_preserves_topology():
    sph = icosphere(3)
    smoothed = laplacian_smooth(sph, 10, 0.2)
    assert smoothed.n_vertices == sph.n_vertices
    assert smoothed.n_triangles == sph.n_triangles
    assert np.array_equal(smoothed.triangles, sph.triangles)
    assert smoothed.euler_characteristic() == sph.euler_characteristic()


def test_smooth_relaxation_bounds():
    sph = icosphere(1)
    with pytest.raises(ValidationError):
        laplacian_smooth(sph, 1, 1.5)
    with pytest.raises(ValidationError):
        laplacian_smooth(sph, -1, 0.2)
