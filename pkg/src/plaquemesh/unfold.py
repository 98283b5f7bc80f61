"""Least-squares conformal flattening of the outer plaque region.

The region must be an open disk; annular regions (e.g. plaque wrapping the
bifurcation) are first cut along the shortest path between boundary loops.
Two boundary vertices are pinned: the pair at maximal Euclidean distance,
mapped to (0, 0) and (D, 0) where D is their 3D distance, so the 2D
coordinates stay in millimeters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import lsqr, splu

from .errors import SolverError, TopologyError, ValidationError
from .mesh import TriangleMesh, boundary_loops

# above this many vertices the normal equations give way to an iterative solve
_DIRECT_SOLVE_VERTEX_LIMIT = 50_000


@dataclass(frozen=True)
class UnfoldedPatch:
    """Flattened plaque region with thickness and distortion bookkeeping.

    ``distortion`` is the per-triangle quasi-conformal ratio (largest over
    smallest singular value of the 3D-to-2D map, >= 1 for perfect input).
    """

    vertices2d: np.ndarray
    triangles: np.ndarray
    vwt: np.ndarray
    distortion: np.ndarray
    conformal_energy: float
    pinned: tuple[int, int]
    pinned_distance: float
    cut_paths: tuple = ()

    def signed_areas(self) -> np.ndarray:
        p = self.vertices2d[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def flipped_count(self) -> int:
        return int((self.signed_areas() < 0).sum())

    def area2d(self) -> float:
        return float(np.abs(self.signed_areas()).sum())

    def to_mesh(self) -> TriangleMesh:
        """2D patch embedded at z = 0 with vwt and vertex-averaged distortion."""
        verts = np.column_stack(
            [self.vertices2d, np.zeros(len(self.vertices2d))]
        )
        vert_dist = np.zeros(len(verts))
        counts = np.zeros(len(verts))
        for c in range(3):
            np.add.at(vert_dist, self.triangles[:, c], self.distortion)
            np.add.at(counts, self.triangles[:, c], 1.0)
        counts[counts == 0] = 1.0
        return TriangleMesh(
            verts,
            self.triangles,
            {"vwt": self.vwt, "distortion": vert_dist / counts},
        )


def _local_frames(verts: np.ndarray, tris: np.ndarray):
    """Per-triangle 2D coordinates (x1, x2, y2) in an orthonormal tangent frame."""
    p = verts[tris]
    e01 = p[:, 1] - p[:, 0]
    e02 = p[:, 2] - p[:, 0]
    x1 = np.linalg.norm(e01, axis=1)
    if (x1 <= 0).any():
        raise ValidationError("degenerate triangle edge in region")
    u = e01 / x1[:, None]
    n = np.cross(e01, e02)
    n_len = np.linalg.norm(n, axis=1)
    if (n_len <= 0).any():
        raise ValidationError("zero-area triangle in region")
    n = n / n_len[:, None]
    v = np.cross(n, u)
    x2 = np.einsum("ij,ij->i", e02, u)
    y2 = np.einsum("ij,ij->i", e02, v)
    return x1, x2, y2


def _shape_gradients(x1, x2, y2):
    """Gradients of the three linear shape functions in the local frame.

    Local corner coordinates are (0,0), (x1,0), (x2,y2).
    """
    area2 = x1 * y2  # twice the triangle area
    gx = np.stack([-y2, y2, np.zeros_like(y2)], axis=1) / area2[:, None]
    gy = np.stack([x2 - x1, -x2, x1], axis=1) / area2[:, None]
    return gx, gy, 0.5 * area2


def _connected(mesh: TriangleMesh) -> bool:
    edges = mesh.undirected_edges()
    n = mesh.n_vertices
    g = sparse.coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n)
    )
    n_comp, _ = csgraph.connected_components(g, directed=False)
    return n_comp == 1


def _cut_to_disk(mesh: TriangleMesh):
    """Cut along shortest boundary-to-boundary paths until one loop remains."""
    cut_paths = []
    for _ in range(64):  # loop count strictly decreases; bail out just in case
        loops = boundary_loops(mesh)
        if len(loops) == 0:
            raise TopologyError("region is closed; unfolding needs a boundary")
        if len(loops) == 1:
            break
        loops.sort(key=len, reverse=True)
        path = _shortest_loop_to_loop_path(mesh, loops[0], loops[1:])
        cut_paths.append(tuple(int(v) for v in path))
        mesh = _cut_along_path(mesh, path)
    else:
        raise TopologyError("could not reduce region to a disk")
    return mesh, tuple(cut_paths)


def _shortest_loop_to_loop_path(mesh: TriangleMesh, source_loop, other_loops):
    edges = mesh.undirected_edges()
    lengths = np.linalg.norm(
        mesh.vertices[edges[:, 0]] - mesh.vertices[edges[:, 1]], axis=1
    )
    n = mesh.n_vertices
    g = sparse.coo_matrix(
        (
            np.concatenate([lengths, lengths]),
            (
                np.concatenate([edges[:, 0], edges[:, 1]]),
                np.concatenate([edges[:, 1], edges[:, 0]]),
            ),
        ),
        shape=(n, n),
    ).tocsr()
    dist, predecessors, sources = csgraph.dijkstra(
        g, indices=list(source_loop), return_predecessors=True, min_only=True
    )
    targets = np.concatenate([np.asarray(lp) for lp in other_loops])
    target = int(targets[np.argmin(dist[targets])])
    if not np.isfinite(dist[target]):
        raise TopologyError("boundary loops are not connected through the region")
    path = [target]
    while predecessors[path[-1]] >= 0:
        path.append(int(predecessors[path[-1]]))
    return list(reversed(path))


def _cut_along_path(mesh: TriangleMesh, path) -> TriangleMesh:
    """Duplicate the path vertices and detach the triangles on one side."""
    if len(path) < 2:
        raise TopologyError("cut path too short")
    tris = mesh.triangles.copy()
    path_edges = {
        frozenset((path[i], path[i + 1])) for i in range(len(path) - 1)
    }

    # triangle lists per path vertex
    incident: dict[int, list[int]] = {v: [] for v in path}
    for t, tri in enumerate(tris):
        for v in tri:
            if int(v) in incident:
                incident[int(v)].append(t)

    def tri_has_directed(t, a, b):
        tri = tris[t]
        for c in range(3):
            if tri[c] == a and tri[(c + 1) % 3] == b:
                return True
        return False

    # for each path vertex, flood the fan on the 'B side' (the triangles that
    # see the path edge in the direction next->current) without crossing path edges
    side: dict[int, set[int]] = {}
    for i, v in enumerate(path):
        nbr_edges = []
        if i > 0:
            nbr_edges.append((path[i - 1], v))
        if i < len(path) - 1:
            nbr_edges.append((v, path[i + 1]))
        seed = None
        for a, b in nbr_edges:
            for t in incident[v]:
                if tri_has_directed(t, b, a):
                    seed = t
                    break
            if seed is not None:
                break
        if seed is None:
            raise TopologyError("cut path does not lie in the region interior")
        # flood fill around v without crossing the path edges
        reach = {seed}
        frontier = [seed]
        while frontier:
            t = frontier.pop()
            tri = tris[t]
            for c in range(3):
                a, b = int(tri[c]), int(tri[(c + 1) % 3])
                if v not in (a, b):
                    continue
                if frozenset((a, b)) in path_edges:
                    continue
                for t2 in incident[v]:
                    if t2 in reach:
                        continue
                    if tri_has_directed(t2, b, a):
                        reach.add(t2)
                        frontier.append(t2)
        side[v] = reach

    verts = mesh.vertices
    attrs = {k: v.copy() for k, v in mesh.attributes.items()}
    new_rows = []
    new_attr_rows = {k: [] for k in attrs}
    for v in path:
        dup = len(verts) + len(new_rows)
        new_rows.append(mesh.vertices[v])
        for k in attrs:
            new_attr_rows[k].append(mesh.attributes[k][v])
        for t in side[v]:
            tris[t][tris[t] == v] = dup
    all_verts = np.vstack([verts, np.array(new_rows)])
    all_attrs = {
        k: np.concatenate([attrs[k], np.array(new_attr_rows[k])]) for k in attrs
    }
    return TriangleMesh(all_verts, tris, all_attrs)


def _max_distance_pair(points: np.ndarray, candidates: np.ndarray):
    best = (-1.0, 0, 0)
    pts = points[candidates]
    for i in range(len(candidates)):
        d2 = ((pts - pts[i]) ** 2).sum(axis=1)
        j = int(np.argmax(d2))
        if d2[j] > best[0]:
            best = (float(d2[j]), i, j)
    _, i, j = best
    a, b = int(candidates[i]), int(candidates[j])
    return (a, b) if a < b else (b, a)


def lscm_unfold(
    region: TriangleMesh,
    vwt_channel: str = "vwt",
    pin_vertices: tuple[int, int] | None = None,
) -> UnfoldedPatch:
    """Flatten an open, disk-like region by least-squares conformal mapping.

    ``pin_vertices`` overrides the default pin choice (the boundary pair at
    maximal Euclidean distance); both must be boundary vertices of the
    (possibly cut) region.
    """
    if region.n_triangles == 0:
        raise ValidationError("region is empty")
    if not _connected(region):
        raise ValidationError("region must be connected")
    if vwt_channel not in region.attributes:
        raise ValidationError(f"region lacks attribute {vwt_channel!r}")

    mesh, cut_paths = _cut_to_disk(region)
    loops = boundary_loops(mesh)
    genus = (2 - len(loops) - mesh.euler_characteristic()) // 2
    if genus > 0:
        raise TopologyError(f"region has genus {genus}; cannot unfold")

    verts = mesh.vertices
    tris = mesh.triangles
    n = len(verts)
    x1, x2, y2 = _local_frames(verts, tris)
    gx, gy, areas = _shape_gradients(x1, x2, y2)
    w = np.sqrt(areas)

    boundary = np.unique(np.concatenate([np.asarray(lp) for lp in loops]))
    if pin_vertices is None:
        pin_a, pin_b = _max_distance_pair(verts, boundary)
    else:
        pin_a, pin_b = (int(v) for v in pin_vertices)
        if pin_a not in boundary or pin_b not in boundary:
            raise ValidationError("pin vertices must lie on the boundary")
    pin_dist = float(np.linalg.norm(verts[pin_a] - verts[pin_b]))
    if pin_dist <= 0:
        raise ValidationError("pinned vertices coincide")

    # rows: per triangle, real and imaginary Cauchy-Riemann residuals,
    # unknowns ordered [u_0..u_{n-1}, v_0..v_{n-1}]
    t_idx = np.arange(len(tris))
    rows, cols, vals = [], [], []
    for corner in range(3):
        vid = tris[:, corner]
        # real part: du/dx - dv/dy
        rows.append(2 * t_idx)
        cols.append(vid)
        vals.append(w * gx[:, corner])
        rows.append(2 * t_idx)
        cols.append(vid + n)
        vals.append(-w * gy[:, corner])
        # imaginary part: du/dy + dv/dx
        rows.append(2 * t_idx + 1)
        cols.append(vid)
        vals.append(w * gy[:, corner])
        rows.append(2 * t_idx + 1)
        cols.append(vid + n)
        vals.append(w * gx[:, corner])
    matrix = sparse.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * len(tris), 2 * n),
    ).tocsc()

    pinned_cols = np.array([pin_a, pin_b, pin_a + n, pin_b + n])
    pinned_vals = np.array([0.0, pin_dist, 0.0, 0.0])
    free = np.setdiff1d(np.arange(2 * n), pinned_cols)
    rhs = -matrix[:, pinned_cols] @ pinned_vals
    a_free = matrix[:, free]

    if n <= _DIRECT_SOLVE_VERTEX_LIMIT:
        normal = (a_free.T @ a_free).tocsc()
        try:
            solution = splu(normal).solve(a_free.T @ rhs)
        except RuntimeError as exc:
            raise SolverError(f"normal equations are singular: {exc}") from exc
    else:
        solution = lsqr(a_free, rhs, atol=1e-12, btol=1e-12)[0]
    if not np.all(np.isfinite(solution)):
        raise SolverError(
            "non-finite solution; system is rank deficient "
            f"(free unknowns: {len(free)}, triangles: {len(tris)})"
        )

    uv_flat = np.empty(2 * n)
    uv_flat[free] = solution
    uv_flat[pinned_cols] = pinned_vals
    uv = np.column_stack([uv_flat[:n], uv_flat[n:]])

    energy = float(((a_free @ solution - rhs) ** 2).sum())

    # orient the flattening: more positive than negative area means no mirror
    p = uv[tris]
    signed = 0.5 * (
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    )
    if signed.sum() < 0:
        uv[:, 1] = -uv[:, 1]

    distortion = _quasi_conformal_ratio(uv, tris, gx, gy)
    return UnfoldedPatch(
        vertices2d=uv,
        triangles=tris,
        vwt=mesh.attributes[vwt_channel],
        distortion=distortion,
        conformal_energy=energy,
        pinned=(pin_a, pin_b),
        pinned_distance=pin_dist,
        cut_paths=cut_paths,
    )


def _quasi_conformal_ratio(uv, tris, gx, gy) -> np.ndarray:
    """Singular-value ratio of the local-frame to 2D Jacobian per triangle."""
    u = uv[tris, 0]
    v = uv[tris, 1]
    ux = (gx * u).sum(axis=1)
    uy = (gy * u).sum(axis=1)
    vx = (gx * v).sum(axis=1)
    vy = (gy * v).sum(axis=1)
    # singular values of [[ux, uy], [vx, vy]]
    big = ux**2 + uy**2 + vx**2 + vy**2
    det = ux * vy - uy * vx
    disc = np.sqrt(np.maximum(big**2 - 4.0 * det**2, 0.0))
    s1 = np.sqrt(np.maximum((big + disc) / 2.0, 0.0))
    s2 = np.sqrt(np.maximum((big - disc) / 2.0, 0.0))
    with np.errstate(divide="ignore"):
        ratio = np.where(s2 > 0, s1 / np.maximum(s2, 1e-300), np.inf)
    return ratio
