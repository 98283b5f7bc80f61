import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plaquemesh.errors import FormatError, TruncationError, ValidationError
from plaquemesh.volume_io import (
    IntensityVolume,
    LabelVolume,
    read_nrrd,
    write_nrrd,
)


def test_empty_uint8_volume_reads_as_labels(tmp_path):
    path = tmp_path / "zeros.nrrd"
    header = (
        "NRRD0004\n"
        "type: uint8\n"
        "dimension: 3\n"
        "sizes: 2 2 2\n"
        "encoding: raw\n"
        "endian: little\n"
        "space origin: (0,0,0)\n"
        "space directions: (1,0,0) (0,1,0) (0,0,1)\n"
        "\n"
    )
    path.write_bytes(header.encode() + bytes(8))
    vol = read_nrrd(path)
    assert isinstance(vol, LabelVolume)
    assert vol.dims == (2, 2, 2)
    assert (vol.labels == 0).all()


def test_gzip_encoding_rejected(tmp_path):
    path = tmp_path / "gz.nrrd"
    header = (
        "NRRD0004\n"
        "type: uint8\n"
        "dimension: 3\n"
        "sizes: 1 1 1\n"
        "encoding: gzip\n"
        "endian: little\n"
        "space origin: (0,0,0)\n"
        "space directions: (1,0,0) (0,1,0) (0,0,1)\n"
        "\n"
    )
    path.write_bytes(header.encode() + bytes(1))
    with pytest.raises(FormatError) as err:
        read_nrrd(path)
    assert err.value.field == "encoding"


def test_missing_field_names_the_field(tmp_path):
    path = tmp_path / "missing.nrrd"
    header = (
        "NRRD0004\n"
        "type: uint8\n"
        "dimension: 3\n"
        "sizes: 1 1 1\n"
        "encoding: raw\n"
        "endian: little\n"
        "space origin: (0,0,0)\n"
        "\n"
    )
    path.write_bytes(header.encode() + bytes(1))
    with pytest.raises(FormatError) as err:
        read_nrrd(path)
    assert err.value.field == "space directions"


def test_truncated_data_rejected(tmp_path):
    path = tmp_path / "short.nrrd"
    header = (
        "NRRD0004\n"
        "type: uint8\n"
        "dimension: 3\n"
        "sizes: 4 4 4\n"
        "encoding: raw\n"
        "endian: little\n"
        "space origin: (0,0,0)\n"
        "space directions: (1,0,0) (0,1,0) (0,0,1)\n"
        "\n"
    )
    path.write_bytes(header.encode() + bytes(10))
    with pytest.raises(TruncationError):
        read_nrrd(path)


def test_bad_label_value_reports_voxel(tmp_path):
    path = tmp_path / "bad.nrrd"
    header = (
        "NRRD0004\n"
        "type: uint8\n"
        "dimension: 3\n"
        "sizes: 2 2 2\n"
        "encoding: raw\n"
        "endian: little\n"
        "space origin: (0,0,0)\n"
        "space directions: (1,0,0) (0,1,0) (0,0,1)\n"
        "\n"
    )
    data = bytearray(8)
    data[3] = 7  # linear index 3 -> voxel (1, 1, 0) in x-fastest order
    path.write_bytes(header.encode() + bytes(data))
    with pytest.raises(ValidationError) as err:
        read_nrrd(path)
    assert "(1, 1, 0)" in str(err.value)


def test_non_axis_aligned_directions_rejected(tmp_path):
    path = tmp_path / "skew.nrrd"
    header = (
        "NRRD0004\n"
        "type: uint8\n"
        "dimension: 3\n"
        "sizes: 1 1 1\n"
        "encoding: raw\n"
        "endian: little\n"
        "space origin: (0,0,0)\n"
        "space directions: (1,0.5,0) (0,1,0) (0,0,1)\n"
        "\n"
    )
    path.write_bytes(header.encode() + bytes(1))
    with pytest.raises(FormatError) as err:
        read_nrrd(path)
    assert err.value.field == "space directions"


def test_label_roundtrip_64cubed(tmp_path):
    rng = np.random.default_rng(7)
    vol = LabelVolume(
        dims=(64, 64, 64),
        spacing=(0.31, 0.52, 0.73),
        origin=(-3.25, 4.125, 0.0625),
        labels=rng.integers(0, 3, size=(64, 64, 64)).astype(np.uint8),
    )
    write_nrrd(vol, tmp_path / "v.nrrd")
    assert read_nrrd(tmp_path / "v.nrrd") == vol


def test_float_roundtrip_bitwise(tmp_path):
    rng = np.random.default_rng(8)
    vol = IntensityVolume(
        dims=(5, 7, 9),
        spacing=(0.4, 0.4, 1.1),
        origin=(0.1, 0.2, 0.3),
        values=rng.normal(size=(5, 7, 9)).astype(np.float32),
    )
    write_nrrd(vol, tmp_path / "f.nrrd")
    back = read_nrrd(tmp_path / "f.nrrd")
    assert isinstance(back, IntensityVolume)
    assert back == vol


def test_int16_roundtrip(tmp_path):
    rng = np.random.default_rng(9)
    vol = IntensityVolume(
        dims=(3, 4, 5),
        spacing=(1.0, 1.0, 1.0),
        origin=(0.0, 0.0, 0.0),
        values=rng.integers(-500, 500, size=(3, 4, 5)).astype(np.int16),
    )
    write_nrrd(vol, tmp_path / "i.nrrd")
    assert read_nrrd(tmp_path / "i.nrrd") == vol


def test_zero_dim_rejected():
    with pytest.raises(ValidationError):
        LabelVolume(dims=(0, 2, 2), spacing=(1, 1, 1), origin=(0, 0, 0),
                    labels=np.zeros((0, 2, 2), np.uint8))


def test_negative_spacing_rejected():
    with pytest.raises(ValidationError):
        LabelVolume(dims=(2, 2, 2), spacing=(1, -1, 1), origin=(0, 0, 0),
                    labels=np.zeros((2, 2, 2), np.uint8))


def test_x_fastest_on_disk(tmp_path):
    vol = LabelVolume(
        dims=(2, 2, 1),
        spacing=(1, 1, 1),
        origin=(0, 0, 0),
        labels=np.array([[[1], [0]], [[2], [0]]], dtype=np.uint8),
    )
    write_nrrd(vol, tmp_path / "o.nrrd")
    raw = (tmp_path / "o.nrrd").read_bytes()
    body = raw.split(b"\n\n", 1)[1]
    # linear order: (0,0,0), (1,0,0), (0,1,0), (1,1,0)
    assert list(body) == [1, 2, 0, 0]


@settings(max_examples=25, deadline=None)
@given(
    dims=st.tuples(*[st.integers(1, 6)] * 3),
    seed=st.integers(0, 2**31),
)
def test_roundtrip_property(tmp_path_factory, dims, seed):
    rng = np.random.default_rng(seed)
    vol = LabelVolume(
        dims=dims,
        spacing=tuple(rng.uniform(0.1, 2.0, 3)),
        origin=tuple(rng.uniform(-5, 5, 3)),
        labels=rng.integers(0, 3, size=dims).astype(np.uint8),
    )
    path = tmp_path_factory.mktemp("rt") / "v.nrrd"
    write_nrrd(vol, path)
    assert read_nrrd(path) == vol
