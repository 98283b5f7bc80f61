"""Minimal PLY mesh writer/reader.

Binary little-endian by default, ASCII via flag. Vertex positions are stored
as double, per-vertex attribute channels as float32, faces as uchar count +
int32 indices. Output bytes are a pure function of the mesh.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FormatError
from .mesh import TriangleMesh


def write_ply(mesh: TriangleMesh, path, ascii_format: bool = False) -> None:
    path = Path(path)
    channels = sorted(mesh.attributes)
    header = ["ply"]
    header.append(
        "format ascii 1.0" if ascii_format else "format binary_little_endian 1.0"
    )
    header.append(f"element vertex {mesh.n_vertices}")
    header += ["property double x", "property double y", "property double z"]
    for name in channels:
        header.append(f"property float {name}")
    header.append(f"element face {mesh.n_triangles}")
    header.append("property list uchar int vertex_indices")
    header.append("end_header")

    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if ascii_format:
            for i in range(mesh.n_vertices):
                parts = [repr(float(c)) for c in mesh.vertices[i]]
                parts += [repr(float(mesh.attributes[n][i])) for n in channels]
                fh.write((" ".join(parts) + "\n").encode("ascii"))
            for tri in mesh.triangles:
                fh.write(f"3 {tri[0]} {tri[1]} {tri[2]}\n".encode("ascii"))
        else:
            vert_dtype = np.dtype(
                [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
                + [(n, "<f4") for n in channels]
            )
            block = np.empty(mesh.n_vertices, dtype=vert_dtype)
            block["x"], block["y"], block["z"] = mesh.vertices.T
            for n in channels:
                block[n] = mesh.attributes[n].astype(np.float32)
            fh.write(block.tobytes())
            face_dtype = np.dtype(
                [("n", "u1"), ("a", "<i4"), ("b", "<i4"), ("c", "<i4")]
            )
            faces = np.empty(mesh.n_triangles, dtype=face_dtype)
            faces["n"] = 3
            faces["a"], faces["b"], faces["c"] = mesh.triangles.T.astype(np.int32)
            fh.write(faces.tobytes())


def read_ply(path) -> TriangleMesh:
    """Read meshes written by :func:`write_ply` (same subset only)."""
    path = Path(path)
    with open(path, "rb") as fh:
        if fh.readline().strip() != b"ply":
            raise FormatError("not a PLY file", field="magic")
        fmt = fh.readline().strip().decode("ascii")
        if fmt == "format binary_little_endian 1.0":
            ascii_format = False
        elif fmt == "format ascii 1.0":
            ascii_format = True
        else:
            raise FormatError(f"unsupported format line {fmt!r}", field="format")

        n_verts = n_faces = None
        channels: list[str] = []
        element = None
        while True:
            line = fh.readline()
            if not line:
                raise FormatError("header truncated", field="header")
            text = line.strip().decode("ascii")
            if text == "end_header":
                break
            parts = text.split()
            if parts[0] == "element":
                element = parts[1]
                if element == "vertex":
                    n_verts = int(parts[2])
                elif element == "face":
                    n_faces = int(parts[2])
                else:
                    raise FormatError(f"unsupported element {element!r}",
                                      field="element")
            elif parts[0] == "property" and element == "vertex":
                if parts[1] == "double" and parts[2] in ("x", "y", "z"):
                    continue
                if parts[1] == "float":
                    channels.append(parts[2])
                else:
                    raise FormatError(f"unsupported property {text!r}",
                                      field="property")
        if n_verts is None or n_faces is None:
            raise FormatError("missing vertex or face element", field="element")

        if ascii_format:
            verts = np.empty((n_verts, 3))
            attrs = {n: np.empty(n_verts) for n in channels}
            for i in range(n_verts):
                vals = fh.readline().split()
                verts[i] = [float(v) for v in vals[:3]]
                for j, n in enumerate(channels):
                    attrs[n][i] = np.float32(vals[3 + j])
            tris = np.empty((n_faces, 3), dtype=np.int64)
            for i in range(n_faces):
                vals = fh.readline().split()
                if vals[0] != b"3":
                    raise FormatError("only triangles supported", field="face")
                tris[i] = [int(v) for v in vals[1:4]]
        else:
            vert_dtype = np.dtype(
                [("x", "<f8"), ("y", "<f8"), ("z", "<f8")]
                + [(n, "<f4") for n in channels]
            )
            raw = fh.read(n_verts * vert_dtype.itemsize)
            if len(raw) < n_verts * vert_dtype.itemsize:
                raise FormatError("vertex block truncated", field="vertex")
            block = np.frombuffer(raw, dtype=vert_dtype)
            verts = np.stack([block["x"], block["y"], block["z"]], axis=1)
            attrs = {n: block[n].astype(np.float64) for n in channels}
            face_dtype = np.dtype(
                [("n", "u1"), ("a", "<i4"), ("b", "<i4"), ("c", "<i4")]
            )
            raw = fh.read(n_faces * face_dtype.itemsize)
            if len(raw) < n_faces * face_dtype.itemsize:
                raise FormatError("face block truncated", field="face")
            fblock = np.frombuffer(raw, dtype=face_dtype)
            if n_faces and not (fblock["n"] == 3).all():
                raise FormatError("only triangles supported", field="face")
            tris = np.stack([fblock["a"], fblock["b"], fblock["c"]], axis=1)
    return TriangleMesh(verts, tris, attrs)
