"""Labeled and intensity voxel volumes and a strict raw-NRRD reader/writer.

The supported file format is a deliberately small NRRD subset: 3D, raw
encoding, little endian, axis-aligned space directions. Voxel (i, j, k)
center sits at ``origin + (i, j, k) * spacing`` in world millimeters and the
raw block is x-fastest.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, TruncationError, ValidationError

LABEL_BACKGROUND = 0
LABEL_LUMEN = 1
LABEL_WALL = 2

_NRRD_MAGIC = "NRRD0004"
_TYPE_TO_DTYPE = {
    "uint8": np.dtype("uint8"),
    "int16": np.dtype("<i2"),
    "float32": np.dtype("<f4"),
}
_DTYPE_TO_TYPE = {v: k for k, v in _TYPE_TO_DTYPE.items()}


def _as_triple(values, name: str, kind=float) -> tuple:
    vals = tuple(kind(v) for v in values)
    if len(vals) != 3:
        raise ValidationError(f"{name} must have 3 components, got {len(vals)}")
    return vals


@dataclass(frozen=True)
class LabelVolume:
    """Dense 3D grid of {0=background, 1=lumen, 2=wall} labels.

    ``labels`` has shape ``dims`` and x-fastest memory layout is used on disk;
    in memory it is indexed as ``labels[i, j, k]``.
    """

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    origin: tuple[float, float, float]
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dims", _as_triple(self.dims, "dims", int))
        object.__setattr__(self, "spacing", _as_triple(self.spacing, "spacing"))
        object.__setattr__(self, "origin", _as_triple(self.origin, "origin"))
        if any(d <= 0 for d in self.dims):
            raise ValidationError(f"dims must be positive, got {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise ValidationError(f"spacing must be positive, got {self.spacing}")
        labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        if labels.size != self.dims[0] * self.dims[1] * self.dims[2]:
            raise ValidationError(
                f"labels size {labels.size} != product of dims {self.dims}"
            )
        labels = labels.reshape(self.dims, order="F") if labels.ndim == 1 else labels
        if labels.shape != self.dims:
            raise ValidationError(f"labels shape {labels.shape} != dims {self.dims}")
        bad = labels > LABEL_WALL
        if bad.any():
            idx = np.unravel_index(np.argmax(bad), labels.shape)
            raise ValidationError(
                f"label value {int(labels[idx])} at voxel {tuple(int(i) for i in idx)}"
                " outside {0,1,2}"
            )
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    def voxel_centers_axis(self, axis: int) -> np.ndarray:
        """World coordinates of voxel centers along one axis."""
        return self.origin[axis] + np.arange(self.dims[axis]) * self.spacing[axis]

    def voxel_volume(self) -> float:
        return self.spacing[0] * self.spacing[1] * self.spacing[2]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelVolume):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and self.origin == other.origin
            and np.array_equal(self.labels, other.labels)
        )


@dataclass(frozen=True)
class IntensityVolume:
    """Dense 3D grid of scalar image intensities on the same geometry model."""

    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]
    origin: tuple[float, float, float]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dims", _as_triple(self.dims, "dims", int))
        object.__setattr__(self, "spacing", _as_triple(self.spacing, "spacing"))
        object.__setattr__(self, "origin", _as_triple(self.origin, "origin"))
        if any(d <= 0 for d in self.dims):
            raise ValidationError(f"dims must be positive, got {self.dims}")
        if any(s <= 0 for s in self.spacing):
            raise ValidationError(f"spacing must be positive, got {self.spacing}")
        values = np.asarray(self.values)
        if values.dtype not in (_TYPE_TO_DTYPE["int16"], _TYPE_TO_DTYPE["float32"]):
            values = values.astype(np.float32)
        if values.size != self.dims[0] * self.dims[1] * self.dims[2]:
            raise ValidationError(
                f"values size {values.size} != product of dims {self.dims}"
            )
        values = values.reshape(self.dims, order="F") if values.ndim == 1 else values
        if values.shape != self.dims:
            raise ValidationError(f"values shape {values.shape} != dims {self.dims}")
        values = np.asfortranarray(values)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def same_geometry(self, other) -> bool:
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and self.origin == other.origin
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntensityVolume):
            return NotImplemented
        return (
            self.dims == other.dims
            and self.spacing == other.spacing
            and self.origin == other.origin
            and self.values.dtype == other.values.dtype
            and np.array_equal(self.values, other.values)
        )


_REQUIRED_FIELDS = (
    "type",
    "dimension",
    "sizes",
    "encoding",
    "endian",
    "space origin",
    "space directions",
)

_VEC_RE = re.compile(r"\(([^)]*)\)")


def _parse_vector(text: str, fieldname: str) -> tuple[float, ...]:
    try:
        return tuple(float(p) for p in text.split(","))
    except ValueError as exc:
        raise FormatError(f"cannot parse vector '{text}'", field=fieldname) from exc


def read_nrrd(path) -> LabelVolume | IntensityVolume:
    """Read a volume from the supported NRRD subset.

    uint8 files are read as :class:`LabelVolume` (values validated against
    {0,1,2}); int16 and float32 files as :class:`IntensityVolume`.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii", errors="replace").rstrip("\r\n")
        if magic != _NRRD_MAGIC:
            raise FormatError(f"bad magic line {magic!r}, expected {_NRRD_MAGIC!r}",
                              field="magic")
        fields: dict[str, str] = {}
        while True:
            raw = fh.readline()
            if raw == b"":
                raise FormatError("header not terminated by blank line", field="header")
            line = raw.decode("ascii", errors="replace").rstrip("\r\n")
            if line == "":
                break
            if line.startswith("#"):
                continue
            if ":" not in line:
                raise FormatError(f"malformed header line {line!r}", field="header")
            key, _, value = line.partition(":")
            fields[key.strip()] = value.strip()
        for name in _REQUIRED_FIELDS:
            if name not in fields:
                raise FormatError("required field missing", field=name)

        if fields["encoding"] != "raw":
            raise FormatError(
                f"unsupported encoding '{fields['encoding']}' (only 'raw')",
                field="encoding",
            )
        if fields["endian"] != "little":
            raise FormatError(
                f"unsupported endian '{fields['endian']}' (only 'little')",
                field="endian",
            )
        if fields["dimension"] != "3":
            raise FormatError(
                f"unsupported dimension '{fields['dimension']}' (only 3)",
                field="dimension",
            )
        if fields["type"] not in _TYPE_TO_DTYPE:
            raise FormatError(
                f"unsupported type '{fields['type']}' "
                f"(supported: {sorted(_TYPE_TO_DTYPE)})",
                field="type",
            )
        dtype = _TYPE_TO_DTYPE[fields["type"]]

        try:
            dims = tuple(int(s) for s in fields["sizes"].split())
        except ValueError as exc:
            raise FormatError(f"cannot parse sizes '{fields['sizes']}'",
                              field="sizes") from exc
        if len(dims) != 3 or any(d <= 0 for d in dims):
            raise FormatError(f"sizes must be 3 positive integers, got {dims}",
                              field="sizes")

        om = _VEC_RE.findall(fields["space origin"])
        if len(om) != 1:
            raise FormatError("expected one (x,y,z) vector", field="space origin")
        origin = _parse_vector(om[0], "space origin")
        if len(origin) != 3:
            raise FormatError("origin must have 3 components", field="space origin")

        dm = _VEC_RE.findall(fields["space directions"])
        if len(dm) != 3:
            raise FormatError("expected three (x,y,z) vectors",
                              field="space directions")
        directions = [_parse_vector(v, "space directions") for v in dm]
        spacing = []
        for axis, vec in enumerate(directions):
            if len(vec) != 3:
                raise FormatError("direction must have 3 components",
                                  field="space directions")
            for other_axis, comp in enumerate(vec):
                if other_axis != axis and comp != 0.0:
                    raise FormatError(
                        "only axis-aligned space directions are supported",
                        field="space directions",
                    )
            if vec[axis] <= 0.0:
                raise FormatError(
                    "diagonal space-direction entries must be positive",
                    field="space directions",
                )
            spacing.append(vec[axis])

        count = dims[0] * dims[1] * dims[2]
        data = fh.read(count * dtype.itemsize)
        if len(data) < count * dtype.itemsize:
            raise TruncationError(
                f"raw block holds {len(data)} bytes, header promises "
                f"{count * dtype.itemsize}",
                field="sizes",
            )
        flat = np.frombuffer(data, dtype=dtype, count=count)
        grid = flat.reshape(dims, order="F")

    if fields["type"] == "uint8":
        return LabelVolume(dims=dims, spacing=tuple(spacing), origin=origin,
                           labels=grid)
    return IntensityVolume(dims=dims, spacing=tuple(spacing), origin=origin,
                           values=grid)


def write_nrrd(volume: LabelVolume | IntensityVolume, path) -> None:
    """Write a volume so that :func:`read_nrrd` reproduces it bit-exactly."""
    if isinstance(volume, LabelVolume):
        data = volume.labels
    elif isinstance(volume, IntensityVolume):
        data = volume.values
    else:
        raise ValidationError(f"unsupported volume type {type(volume).__name__}")
    typename = _DTYPE_TO_TYPE[data.dtype]
    sx, sy, sz = volume.spacing
    ox, oy, oz = volume.origin
    header = (
        f"{_NRRD_MAGIC}\n"
        f"type: {typename}\n"
        "dimension: 3\n"
        f"sizes: {volume.dims[0]} {volume.dims[1]} {volume.dims[2]}\n"
        "encoding: raw\n"
        "endian: little\n"
        f"space origin: ({ox!r},{oy!r},{oz!r})\n"
        f"space directions: ({sx!r},0,0) (0,{sy!r},0) (0,0,{sz!r})\n"
        "\n"
    )
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.asfortranarray(data).tobytes(order="F"))
