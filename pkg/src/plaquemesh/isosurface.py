"""Isosurface extraction from label volumes and mesh fairing.

Surfaces are extracted at iso-level 0.5 of the binary indicator of a label
set, with one layer of zero padding so the result is always closed, and
re-wound so the enclosed volume is positive (outward orientation).
"""

from __future__ import annotations

import numpy as np
from scipy import sparse
from skimage import measure

from .errors import EmptyMeshError, ValidationError
from .mesh import TriangleMesh
from .volume_io import LabelVolume

SMOOTH_ITERATIONS_DEFAULT = 10
SMOOTH_RELAXATION_DEFAULT = 0.2


def marching_cubes(volume: LabelVolume, label_set) -> TriangleMesh:
    """Closed triangle surface around the voxels whose label is in ``label_set``.

    Uses the topology-consistent table method; coordinates come out in world
    millimeters (voxel centers at ``origin + index * spacing``).
    """
    label_set = set(int(v) for v in label_set)
    if not label_set:
        raise ValidationError("label_set must be non-empty")
    indicator = np.isin(volume.labels, sorted(label_set))
    if not indicator.any():
        raise EmptyMeshError(f"no voxel carries a label in {sorted(label_set)}")
    if indicator.all():
        raise EmptyMeshError("indicator covers the whole volume; no surface inside")

    padded = np.pad(indicator, 1).astype(np.float32)
    verts, faces, _, _ = measure.marching_cubes(
        padded, level=0.5, spacing=volume.spacing, allow_degenerate=False
    )
    verts = verts + (np.asarray(volume.origin) - np.asarray(volume.spacing))
    mesh = TriangleMesh(verts, faces.astype(np.int64))
    if mesh.signed_volume() < 0:
        mesh = mesh.flipped()
    return mesh


def laplacian_smooth(
    mesh: TriangleMesh,
    iterations: int = SMOOTH_ITERATIONS_DEFAULT,
    relaxation: float = SMOOTH_RELAXATION_DEFAULT,
) -> TriangleMesh:
    """Uniform Laplacian smoothing: simultaneous moves toward the neighbor centroid.

    Each iteration replaces every vertex v by
    ``v + relaxation * (mean(neighbors) - v)``. Connectivity and attributes
    are untouched; vertices without neighbors stay put.
    """
    if iterations < 0:
        raise ValidationError("iterations must be >= 0")
    if not 0.0 <= relaxation <= 1.0:
        raise ValidationError("relaxation must be in [0, 1]")
    if iterations == 0 or mesh.n_triangles == 0:
        return mesh

    edges = mesh.undirected_edges()
    n = mesh.n_vertices
    adj = sparse.coo_matrix(
        (
            np.ones(2 * len(edges)),
            (
                np.concatenate([edges[:, 0], edges[:, 1]]),
                np.concatenate([edges[:, 1], edges[:, 0]]),
            ),
        ),
        shape=(n, n),
    ).tocsr()
    degree = np.asarray(adj.sum(axis=1)).ravel()
    scale = np.divide(1.0, degree, out=np.zeros(n), where=degree > 0)
    has_neighbors = degree > 0

    verts = mesh.vertices.copy()
    for _ in range(iterations):
        centroid = adj.dot(verts) * scale[:, None]
        delta = np.where(has_neighbors[:, None], centroid - verts, 0.0)
        verts = verts + relaxation * delta
    return TriangleMesh(verts, mesh.triangles, dict(mesh.attributes))
