"""Exact point-to-mesh distance queries through an AABB tree.

The tree is built once per target mesh (median split on the longest centroid
axis) and traversed with a numba-compiled best-first search, so large query
batches stay cheap. Distances are unsigned closest-point distances to the
triangle set, not to the vertex set.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .errors import EmptyMeshError
from .mesh import TriangleMesh

_LEAF_SIZE = 8


@njit(cache=True, fastmath=False)
def _closest_point_on_triangle(a, b, c, p):
    """Closest point to ``p`` on triangle ``abc`` (Ericson, region tests)."""
    ab0 = b[0] - a[0]
    ab1 = b[1] - a[1]
    ab2 = b[2] - a[2]
    ac0 = c[0] - a[0]
    ac1 = c[1] - a[1]
    ac2 = c[2] - a[2]
    ap0 = p[0] - a[0]
    ap1 = p[1] - a[1]
    ap2 = p[2] - a[2]
    d1 = ab0 * ap0 + ab1 * ap1 + ab2 * ap2
    d2 = ac0 * ap0 + ac1 * ap1 + ac2 * ap2
    if d1 <= 0.0 and d2 <= 0.0:
        return a[0], a[1], a[2]
    bp0 = p[0] - b[0]
    bp1 = p[1] - b[1]
    bp2 = p[2] - b[2]
    d3 = ab0 * bp0 + ab1 * bp1 + ab2 * bp2
    d4 = ac0 * bp0 + ac1 * bp1 + ac2 * bp2
    if d3 >= 0.0 and d4 <= d3:
        return b[0], b[1], b[2]
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        return a[0] + v * ab0, a[1] + v * ab1, a[2] + v * ab2
    cp0 = p[0] - c[0]
    cp1 = p[1] - c[1]
    cp2 = p[2] - c[2]
    d5 = ab0 * cp0 + ab1 * cp1 + ab2 * cp2
    d6 = ac0 * cp0 + ac1 * cp1 + ac2 * cp2
    if d6 >= 0.0 and d5 <= d6:
        return c[0], c[1], c[2]
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        return a[0] + w * ac0, a[1] + w * ac1, a[2] + w * ac2
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return (
            b[0] + w * (c[0] - b[0]),
            b[1] + w * (c[1] - b[1]),
            b[2] + w * (c[2] - b[2]),
        )
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return (
        a[0] + ab0 * v + ac0 * w,
        a[1] + ab1 * v + ac1 * w,
        a[2] + ab2 * v + ac2 * w,
    )


@njit(cache=True)
def _box_sq_distance(bmin, bmax, p):
    d = 0.0
    for i in range(3):
        if p[i] < bmin[i]:
            t = bmin[i] - p[i]
            d += t * t
        elif p[i] > bmax[i]:
            t = p[i] - bmax[i]
            d += t * t
    return d


@njit(cache=True, parallel=True)
def _query_kernel(
    node_min,
    node_max,
    node_left,
    node_right,
    node_start,
    node_count,
    tri_order,
    tris,
    points,
    out_dist,
    out_tri,
    out_point,
):
    for q in prange(points.shape[0]):
        p = points[q]
        best = 1e300
        best_tri = -1
        bx = 0.0
        by = 0.0
        bz = 0.0
        stack = np.empty(128, dtype=np.int64)
        top = 0
        stack[0] = 0
        top = 1
        while top > 0:
            top -= 1
            node = stack[top]
            if _box_sq_distance(node_min[node], node_max[node], p) >= best:
                continue
            if node_left[node] < 0:  # leaf
                start = node_start[node]
                for i in range(start, start + node_count[node]):
                    t = tri_order[i]
                    cx, cy, cz = _closest_point_on_triangle(
                        tris[t, 0], tris[t, 1], tris[t, 2], p
                    )
                    dx = p[0] - cx
                    dy = p[1] - cy
                    dz = p[2] - cz
                    d = dx * dx + dy * dy + dz * dz
                    if d < best:
                        best = d
                        best_tri = t
                        bx, by, bz = cx, cy, cz
            else:
                left = node_left[node]
                right = node_right[node]
                dl = _box_sq_distance(node_min[left], node_max[left], p)
                dr = _box_sq_distance(node_min[right], node_max[right], p)
                # push farther child first so the nearer one is visited next
                if dl <= dr:
                    if dr < best:
                        stack[top] = right
                        top += 1
                    if dl < best:
                        stack[top] = left
                        top += 1
                else:
                    if dl < best:
                        stack[top] = left
                        top += 1
                    if dr < best:
                        stack[top] = right
                        top += 1
        out_dist[q] = np.sqrt(best)
        out_tri[q] = best_tri
        out_point[q, 0] = bx
        out_point[q, 1] = by
        out_point[q, 2] = bz


class MeshDistanceQuery:
    """AABB tree over one target mesh, reusable across query batches."""

    def __init__(self, target: TriangleMesh):
        if target.n_triangles == 0:
            raise EmptyMeshError("distance query target has no triangles")
        self._tris = np.ascontiguousarray(target.corners())
        lo = self._tris.min(axis=1)
        hi = self._tris.max(axis=1)
        centroids = self._tris.mean(axis=1)
        n = len(self._tris)

        order = np.arange(n, dtype=np.int64)
        # every leaf holds >= _LEAF_SIZE/2 triangles, so n + 2 nodes is ample
        max_nodes = n + 2
        node_min = np.empty((max_nodes, 3))
        node_max = np.empty((max_nodes, 3))
        node_left = np.full(max_nodes, -1, dtype=np.int64)
        node_right = np.full(max_nodes, -1, dtype=np.int64)
        node_start = np.zeros(max_nodes, dtype=np.int64)
        node_count = np.zeros(max_nodes, dtype=np.int64)

        n_nodes = 1
        stack = [(0, 0, n)]  # node id, range start, range end
        while stack:
            node, beg, end = stack.pop()
            sel = order[beg:end]
            node_min[node] = lo[sel].min(axis=0)
            node_max[node] = hi[sel].max(axis=0)
            if end - beg <= _LEAF_SIZE:
                node_start[node] = beg
                node_count[node] = end - beg
                continue
            cen = centroids[sel]
            axis = int(np.argmax(cen.max(axis=0) - cen.min(axis=0)))
            mid = (end - beg) // 2
            part = np.argpartition(cen[:, axis], mid)
            order[beg:end] = sel[part]
            left, right = n_nodes, n_nodes + 1
            n_nodes += 2
            node_left[node] = left
            node_right[node] = right
            stack.append((left, beg, beg + mid))
            stack.append((right, beg + mid, end))

        self._node_min = node_min[:n_nodes].copy()
        self._node_max = node_max[:n_nodes].copy()
        self._node_left = node_left[:n_nodes].copy()
        self._node_right = node_right[:n_nodes].copy()
        self._node_start = node_start[:n_nodes].copy()
        self._node_count = node_count[:n_nodes].copy()
        self._tri_order = order

    def query(self, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Distances, closest triangle indices and closest points for ``points``."""
        pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
        out_dist = np.empty(len(pts))
        out_tri = np.empty(len(pts), dtype=np.int64)
        out_point = np.empty((len(pts), 3))
        _query_kernel(
            self._node_min,
            self._node_max,
            self._node_left,
            self._node_right,
            self._node_start,
            self._node_count,
            self._tri_order,
            self._tris,
            pts,
            out_dist,
            out_tri,
            out_point,
        )
        return out_dist, out_tri, out_point


def distance_to_mesh(query_points, target: TriangleMesh) -> np.ndarray:
    """Unsigned closest-point distance from each query point to ``target``."""
    return MeshDistanceQuery(target).query(query_points)[0]
