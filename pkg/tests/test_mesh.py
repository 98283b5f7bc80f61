import math

import numpy as np
import pytest

from geom import bumpy_blob, icosphere, open_cylinder, unit_cube
from plaquemesh.errors import NonManifoldError, NotWatertightError, ValidationError
from plaquemesh.mesh import (
    TriangleMesh,
    boundary_loops,
    connected_components,
    orient_consistently,
    submesh_from_triangles,
    weld_vertices,
)


def test_unit_cube_metrics():
    cube = unit_cube()
    assert cube.is_closed()
    assert cube.is_oriented()
    assert cube.area() == pytest.approx(6.0, rel=1e-15)
    assert cube.volume() == pytest.approx(1.0, rel=1e-15)
    assert cube.max_extent() == pytest.approx(math.sqrt(3.0), rel=1e-15)


def test_single_triangle_volume_raises():
    tri = TriangleMesh(np.eye(3), np.array([[0, 1, 2]]))
    with pytest.raises(NotWatertightError):
        tri.volume()


def test_icosphere_volume_and_area():
    sph = icosphere(4)
    assert sph.volume() == pytest.approx(4.0 * math.pi / 3.0, rel=5e-3)
    assert sph.area() == pytest.approx(4.0 * math.pi, rel=5e-3)
    assert sph.euler_characteristic() == 2


def test_volume_translation_invariance(rng):
    blob = bumpy_blob(3)
    v0 = blob.volume()
    for _ in range(5):
        shift = rng.uniform(-50, 50, 3)
        v1 = blob.translated(shift).volume()
        assert abs(v1 - v0) / v0 < 1e-9


def test_max_extent_hull_matches_brute_force(rng):
    # icosphere(4) has 2562 vertices, above the brute-force cutoff
    sph = icosphere(4, radius=2.0)
    assert sph.n_vertices > 2000
    pts = sph.vertices
    best = 0.0
    for i in range(0, len(pts), 256):
        d = ((pts[i : i + 256, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(d.max()))
    assert sph.max_extent() == pytest.approx(math.sqrt(best), rel=1e-12)


def test_degenerate_triangle_rejected():
    with pytest.raises(ValidationError):
        TriangleMesh(np.eye(3), np.array([[0, 1, 1]]))


def test_attribute_length_checked():
    with pytest.raises(ValidationError):
        TriangleMesh(np.eye(3), np.array([[0, 1, 2]]), {"vwt": np.zeros(2)})


def test_connected_components_whole_mesh():
    sph = icosphere(2)
    comps = connected_components(sph, np.ones(sph.n_vertices, dtype=bool))
    assert len(comps) == 1
    assert comps[0].mesh.n_triangles == sph.n_triangles
    assert np.array_equal(np.sort(comps[0].triangle_indices),
                          np.arange(sph.n_triangles))


def test_connected_components_two_caps():
    sph = icosphere(3)
    z = sph.vertices[:, 2]
    mask = np.abs(z) > 0.82  # two polar caps
    comps = connected_components(sph, mask)
    assert len(comps) == 2
    tri_count = sum(c.mesh.n_triangles for c in comps)
    tri_ok = mask[sph.triangles].all(axis=1).sum()
    assert tri_count == tri_ok
    # original-vertex mapping is faithful
    for comp in comps:
        assert np.allclose(
            comp.mesh.vertices, sph.vertices[comp.vertex_indices]
        )


def test_connected_components_isolated_vertices_give_nothing():
    sph = icosphere(2)
    mask = np.zeros(sph.n_vertices, dtype=bool)
    mask[[0, 5, 11]] = True  # no full triangle
    assert connected_components(sph, mask) == []


def test_connected_components_accepts_callable():
    cube = unit_cube()
    comps = connected_components(cube, lambda i: True)
    assert len(comps) == 1


def test_boundary_loops_closed_sphere():
    assert boundary_loops(icosphere(2)) == []


def test_boundary_loops_sphere_minus_triangle():
    sph = icosphere(2)
    mesh = TriangleMesh(sph.vertices, sph.triangles[1:])
    loops = boundary_loops(mesh)
    assert len(loops) == 1
    assert len(loops[0]) == 3
    assert set(loops[0]) == set(int(v) for v in sph.triangles[0])


def test_boundary_loops_cylinder():
    cyl = open_cylinder(n_theta=24, n_z=7)
    loops = boundary_loops(cyl)
    assert len(loops) == 2
    assert sorted(len(lp) for lp in loops) == [24, 24]


def test_boundary_loop_orientation_follows_winding():
    cyl = open_cylinder(n_theta=16, n_z=3)
    for loop in boundary_loops(cyl):
        edges = {(loop[i], loop[(i + 1) % len(loop)]) for i in range(len(loop))}
        directed = {
            (int(a), int(b))
            for tri in cyl.triangles
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0]))
        }
        assert edges <= directed  # loop edges run as the triangles wind them


def test_non_manifold_edge_detected():
    verts = np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [0, -1, 0.5]], dtype=float
    )
    tris = np.array([[0, 1, 2], [0, 1, 3], [0, 1, 4]])  # edge (0,1) used thrice
    mesh = TriangleMesh(verts, tris)
    with pytest.raises(NonManifoldError) as err:
        boundary_loops(mesh)
    assert err.value.edge == (0, 1)


def test_weld_vertices_merges_duplicates():
    cube = unit_cube()
    # duplicate every vertex so each triangle has private corners
    tris = np.arange(36).reshape(12, 3)
    verts = cube.vertices[cube.triangles].reshape(-1, 3)
    exploded = TriangleMesh(verts, tris)
    welded = weld_vertices(exploded, 1e-6)
    assert welded.n_vertices == 8
    assert welded.is_closed()
    assert welded.volume() == pytest.approx(1.0, rel=1e-12)


def test_orient_consistently_fixes_flipped_patch():
    sph = icosphere(2)
    tris = sph.triangles.copy()
    tris[::3] = tris[::3][:, [0, 2, 1]]  # scramble a third of the windings
    broken = TriangleMesh(sph.vertices, tris)
    assert not broken.is_oriented()
    fixed = orient_consistently(broken)
    assert fixed.is_oriented()
    assert fixed.is_closed()
    assert abs(fixed.signed_volume()) == pytest.approx(sph.volume(), rel=1e-12)


def test_submesh_preserves_attributes():
    sph = icosphere(2).with_attribute("vwt", np.arange(162, dtype=float))
    sub = submesh_from_triangles(sph, [0, 1, 2])
    assert "vwt" in sub.mesh.attributes
    assert np.array_equal(
        sub.mesh.attributes["vwt"], sph.attributes["vwt"][sub.vertex_indices]
    )


def test_scaled_area_volume():
    blob = bumpy_blob(1)
    s = 2.5
    scaled = blob.scaled(s)
    assert scaled.area() == pytest.approx(blob.area() * s**2, rel=1e-12)
    assert scaled.volume() == pytest.approx(blob.volume() * s**3, rel=1e-12)
