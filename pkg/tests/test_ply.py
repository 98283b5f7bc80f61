import numpy as np

from geom import bumpy_blob, unit_cube
from plaquemesh.ply import read_ply, write_ply


def test_binary_roundtrip_with_attributes(tmp_path):
    mesh = bumpy_blob(2).with_attribute("vwt", np.linspace(0, 2, 642))
    path = tmp_path / "blob.ply"
    write_ply(mesh, path)
    back = read_ply(path)
    assert np.array_equal(back.vertices, mesh.vertices)  # double precision
    assert np.array_equal(back.triangles, mesh.triangles)
    assert np.array_equal(
        back.attributes["vwt"],
        mesh.attributes["vwt"].astype(np.float32).astype(np.float64),
    )


def test_ascii_roundtrip(tmp_path):
    mesh = unit_cube().with_attribute("vwt", np.arange(8, dtype=float))
    path = tmp_path / "cube.ply"
    write_ply(mesh, path, ascii_format=True)
    back = read_ply(path)
    assert np.allclose(back.vertices, mesh.vertices)
    assert np.array_equal(back.triangles, mesh.triangles)
    assert (tmp_path / "cube.ply").read_bytes().startswith(b"ply\nformat ascii")


def test_write_is_byte_deterministic(tmp_path):
    mesh = bumpy_blob(4).with_attribute("vwt", np.linspace(0, 1, 642))
    write_ply(mesh, tmp_path / "a.ply")
    write_ply(mesh, tmp_path / "b.ply")
    assert (tmp_path / "a.ply").read_bytes() == (tmp_path / "b.ply").read_bytes()


def test_header_declares_channels(tmp_path):
    mesh = unit_cube().with_attribute("vwt", np.zeros(8)).with_attribute(
        "distortion", np.ones(8)
    )
    write_ply(mesh, tmp_path / "c.ply")
    head = (tmp_path / "c.ply").read_bytes().split(b"end_header")[0]
    assert b"property float distortion" in head
    assert b"property float vwt" in head
    assert b"format binary_little_endian 1.0" in head
