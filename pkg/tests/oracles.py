"""Independent reference implementations used only to check the library.

These deliberately use different formulations than the production code:
distances come from a candidate-enumeration closest-point routine evaluated
against every triangle, and the inside test is ray-crossing parity rather
than winding numbers.
"""

from __future__ import annotations

import numpy as np

from plaquemesh.mesh import TriangleMesh

# fixed irrational-ish direction so structured meshes don't produce
# edge-grazing rays
RAY_DIRECTION = np.array([0.7548776662466927, 0.5698402909980532, 0.3247179572447461])
RAY_DIRECTION = RAY_DIRECTION / np.linalg.norm(RAY_DIRECTION)


def brute_force_distance(points, mesh: TriangleMesh, chunk: int = 256) -> np.ndarray:
    """Min distance from each point to any triangle, by exhaustive scan.

    Closest point candidates per triangle: the plane projection (if its
    barycentric coordinates are all nonnegative), the three edge-segment
    projections and the three vertices.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    tri = mesh.corners()  # (m, 3, 3)
    a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
    out = np.empty(len(pts))
    for start in range(0, len(pts), chunk):
        p = pts[start : start + chunk]  # (q, 3)
        d2 = np.full((len(p), len(tri)), np.inf)

        # vertices
        for corner in (a, b, c):
            d2 = np.minimum(
                d2, ((p[:, None, :] - corner[None, :, :]) ** 2).sum(axis=2)
            )
        # edges
        for e0, e1 in ((a, b), (b, c), (c, a)):
            ev = e1 - e0  # (m, 3)
            ev2 = (ev**2).sum(axis=1)  # (m,)
            w = p[:, None, :] - e0[None, :, :]  # (q, m, 3)
            t = np.clip((w * ev[None, :, :]).sum(axis=2) / ev2[None, :], 0.0, 1.0)
            closest = e0[None, :, :] + t[:, :, None] * ev[None, :, :]
            d2 = np.minimum(d2, ((p[:, None, :] - closest) ** 2).sum(axis=2))
        # face interior
        ab = b - a
        ac = c - a
        n = np.cross(ab, ac)
        n2 = (n**2).sum(axis=1)
        w = p[:, None, :] - a[None, :, :]
        dist_plane = (w * n[None, :, :]).sum(axis=2)  # (q, m) * |n|
        foot = p[:, None, :] - (dist_plane / n2)[:, :, None] * n[None, :, :]
        # barycentric test for the foot point
        v0 = foot - a[None, :, :]
        d00 = (ab * ab).sum(axis=1)
        d01 = (ab * ac).sum(axis=1)
        d11 = (ac * ac).sum(axis=1)
        d20 = (v0 * ab[None, :, :]).sum(axis=2)
        d21 = (v0 * ac[None, :, :]).sum(axis=2)
        denom = d00 * d11 - d01 * d01
        bv = (d11 * d20 - d01 * d21) / denom
        bw = (d00 * d21 - d01 * d20) / denom
        inside = (bv >= 0) & (bw >= 0) & (bv + bw <= 1)
        face_d2 = dist_plane**2 / n2
        d2 = np.where(inside, np.minimum(d2, face_d2), d2)

        out[start : start + chunk] = np.sqrt(d2.min(axis=1))
    return out


def ray_parity_inside(mesh: TriangleMesh, points, direction=None) -> np.ndarray:
    """Inside/outside classification by counting ray crossings."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    d = RAY_DIRECTION if direction is None else np.asarray(direction, float)
    tri = mesh.corners()
    v0, v1, v2 = tri[:, 0], tri[:, 1], tri[:, 2]
    e1 = v1 - v0
    e2 = v2 - v0
    h = np.cross(d, e2)  # (m, 3)
    det = (e1 * h).sum(axis=1)  # (m,)
    parallel = np.abs(det) < 1e-14
    inv = np.where(parallel, np.nan, 1.0 / det)

    inside = np.zeros(len(pts), dtype=bool)
    for i, p in enumerate(pts):
        s = p - v0
        u = (s * h).sum(axis=1) * inv
        q = np.cross(s, e1)
        v = (q * d).sum(axis=1) * inv
        t = (e2 * q).sum(axis=1) * inv
        hit = (
            ~parallel
            & (u >= 0.0)
            & (v >= 0.0)
            & (u + v <= 1.0)
            & (t > 1e-12)
        )
        inside[i] = bool(hit.sum() % 2 == 1)
    return inside
