"""Indexed triangle mesh core.

All coordinates are world millimeters. Meshes are immutable after
construction; every operation returns a new mesh. Orientation convention:
triangle winding is counterclockwise seen from outside, so the signed
divergence-theorem volume of a closed mesh is positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.spatial import ConvexHull

from .errors import (
    NonManifoldError,
    NotWatertightError,
    ValidationError,
)

# brute-force diameter above this many vertices is replaced by the hull trick
_EXTENT_BRUTE_LIMIT = 2000


@dataclass(frozen=True)
class TriangleMesh:
    """Triangle surface with optional named per-vertex scalar channels."""

    vertices: np.ndarray
    triangles: np.ndarray
    attributes: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        verts = np.ascontiguousarray(self.vertices, dtype=np.float64)
        tris = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if verts.ndim != 2 or verts.shape[1] != 3:
            raise ValidationError(f"vertices must be (n, 3), got {verts.shape}")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise ValidationError(f"triangles must be (m, 3), got {tris.shape}")
        if tris.size:
            if tris.min() < 0 or tris.max() >= len(verts):
                raise ValidationError("triangle index out of range")
            degen = (
                (tris[:, 0] == tris[:, 1])
                | (tris[:, 1] == tris[:, 2])
                | (tris[:, 2] == tris[:, 0])
            )
            if degen.any():
                raise ValidationError(
                    f"degenerate triangle (repeated index) at row {int(np.argmax(degen))}"
                )
        attrs = {}
        for name, values in self.attributes.items():
            arr = np.ascontiguousarray(values, dtype=np.float64)
            if arr.shape != (len(verts),):
                raise ValidationError(
                    f"attribute '{name}' has length {arr.shape}, expected ({len(verts)},)"
                )
            arr.flags.writeable = False
            attrs[name] = arr
        verts.flags.writeable = False
        tris.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "attributes", attrs)

    # -- basic queries ----------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """(m, 3, 3) array of triangle corner coordinates."""
        return self.vertices[self.triangles]

    def triangle_areas(self) -> np.ndarray:
        c = self.corners()
        return 0.5 * np.linalg.norm(
            np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0]), axis=1
        )

    def triangle_normals(self, normalized: bool = True) -> np.ndarray:
        c = self.corners()
        n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
        if normalized:
            lens = np.linalg.norm(n, axis=1)
            lens[lens == 0.0] = 1.0
            n = n / lens[:, None]
        return n

    def vertex_normals(self) -> np.ndarray:
        """Area-weighted vertex normals (unit length where defined)."""
        n = self.triangle_normals(normalized=False)  # area-weighted by magnitude
        out = np.zeros_like(self.vertices)
        for c in range(3):
            np.add.at(out, self.triangles[:, c], n)
        lens = np.linalg.norm(out, axis=1)
        lens[lens == 0.0] = 1.0
        return out / lens[:, None]

    def directed_edges(self) -> np.ndarray:
        t = self.triangles
        return np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])

    def _edge_keys(self, edges: np.ndarray) -> np.ndarray:
        return edges[:, 0].astype(np.int64) * self.n_vertices + edges[:, 1]

    def undirected_edges(self) -> np.ndarray:
        return np.unique(np.sort(self.directed_edges(), axis=1), axis=0)

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.undirected_edges()) + self.n_triangles

    def is_oriented(self) -> bool:
        """True when no directed edge is used twice (consistent winding)."""
        keys = self._edge_keys(self.directed_edges())
        return len(np.unique(keys)) == len(keys)

    def is_closed(self) -> bool:
        """True when every directed edge has its reverse (and winding is consistent)."""
        edges = self.directed_edges()
        keys = self._edge_keys(edges)
        if len(np.unique(keys)) != len(keys):
            return False
        rkeys = self._edge_keys(edges[:, ::-1])
        return bool(np.isin(keys, rkeys).all())

    def boundary_directed_edges(self) -> np.ndarray:
        """Directed edges with no opposite partner, after manifold check."""
        edges = self.directed_edges()
        und = np.sort(edges, axis=1)
        ukeys = und[:, 0].astype(np.int64) * self.n_vertices + und[:, 1]
        uniq, inv, counts = np.unique(ukeys, return_inverse=True, return_counts=True)
        if (counts > 2).any():
            bad = uniq[np.argmax(counts > 2)]
            raise NonManifoldError((int(bad // self.n_vertices), int(bad % self.n_vertices)))
        return edges[counts[inv] == 1]

    # -- metrics -----------------------------------------------------------

    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def volume(self) -> float:
        """Enclosed volume of a closed, consistently oriented mesh."""
        if not self.is_closed():
            raise NotWatertightError("volume requires a closed, oriented mesh")
        c = self.corners()
        signed = np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])).sum() / 6.0
        return float(abs(signed))

    def signed_volume(self) -> float:
        c = self.corners()
        return float(
            np.einsum("ij,ij->i", c[:, 0], np.cross(c[:, 1], c[:, 2])).sum() / 6.0
        )

    def max_extent(self) -> float:
        """Diameter of the vertex set."""
        pts = self.vertices
        if len(pts) == 0:
            return 0.0
        if len(pts) > _EXTENT_BRUTE_LIMIT:
            try:
                pts = pts[ConvexHull(pts).vertices]
            except Exception:
                pass  # degenerate (planar/collinear) input: fall through to brute force
        return float(np.sqrt(_max_pairwise_sq(pts)))

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    # -- constructive operations -------------------------------------------

    def with_attribute(self, name: str, values: np.ndarray) -> "TriangleMesh":
        attrs = dict(self.attributes)
        attrs[name] = np.asarray(values, dtype=np.float64)
        return TriangleMesh(self.vertices, self.triangles, attrs)

    def translated(self, offset) -> "TriangleMesh":
        return TriangleMesh(self.vertices + np.asarray(offset, dtype=np.float64),
                            self.triangles, dict(self.attributes))

    def scaled(self, factor: float) -> "TriangleMesh":
        return TriangleMesh(self.vertices * float(factor), self.triangles,
                            dict(self.attributes))

    def flipped(self) -> "TriangleMesh":
        return TriangleMesh(self.vertices, self.triangles[:, [0, 2, 1]],
                            dict(self.attributes))

    def __eq__(self, other) -> bool:
        if not isinstance(other, TriangleMesh):
            return NotImplemented
        return (
            np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.triangles, other.triangles)
            and self.attributes.keys() == other.attributes.keys()
            and all(np.array_equal(v, other.attributes[k])
                    for k, v in self.attributes.items())
        )


def _max_pairwise_sq(pts: np.ndarray) -> float:
    best = 0.0
    # chunked O(n^2); n is small here (raw vertices <= 2000 or hull vertices)
    for i in range(0, len(pts), 512):
        block = pts[i : i + 512]
        d = ((block[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(d.max()))
    return best


@dataclass(frozen=True)
class Submesh:
    """A component of a parent mesh with the original-index bookkeeping."""

    mesh: TriangleMesh
    vertex_indices: np.ndarray  # submesh vertex -> parent vertex index
    triangle_indices: np.ndarray  # submesh triangle -> parent triangle index

    def area(self) -> float:
        return self.mesh.area()


def submesh_from_triangles(parent: TriangleMesh, tri_indices) -> Submesh:
    """Extract the triangles ``tri_indices`` of ``parent`` as a compact mesh."""
    tri_indices = np.asarray(tri_indices, dtype=np.int64)
    tris = parent.triangles[tri_indices]
    used = np.unique(tris)
    remap = np.full(parent.n_vertices, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    attrs = {k: v[used] for k, v in parent.attributes.items()}
    mesh = TriangleMesh(parent.vertices[used], remap[tris], attrs)
    return Submesh(mesh=mesh, vertex_indices=used, triangle_indices=tri_indices)


def connected_components(mesh: TriangleMesh, vertex_predicate) -> list[Submesh]:
    """Edge-connected components of triangles whose 3 vertices satisfy a predicate.

    ``vertex_predicate`` is either a boolean array over vertices or a callable
    mapping a vertex index to bool. Components are returned largest area first
    (ties broken by smallest parent triangle index).
    """
    if callable(vertex_predicate):
        mask = np.fromiter(
            (bool(vertex_predicate(i)) for i in range(mesh.n_vertices)),
            count=mesh.n_vertices,
            dtype=bool,
        )
    else:
        mask = np.asarray(vertex_predicate, dtype=bool)
        if mask.shape != (mesh.n_vertices,):
            raise ValidationError("predicate mask length must equal vertex count")

    tri_ok = mask[mesh.triangles].all(axis=1)
    tri_ids = np.flatnonzero(tri_ok)
    if len(tri_ids) == 0:
        return []

    # adjacency: triangles sharing an edge, restricted to selected triangles
    tris = mesh.triangles[tri_ids]
    edges = np.sort(
        np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]), axis=1
    )
    owner = np.tile(np.arange(len(tri_ids)), 3)
    keys = edges[:, 0].astype(np.int64) * mesh.n_vertices + edges[:, 1]
    order = np.argsort(keys, kind="stable")
    keys, owner = keys[order], owner[order]
    same = keys[1:] == keys[:-1]
    a, b = owner[:-1][same], owner[1:][same]
    graph = sparse.coo_matrix(
        (np.ones(len(a)), (a, b)), shape=(len(tri_ids), len(tri_ids))
    )
    n_comp, labels = sparse.csgraph.connected_components(graph, directed=False)

    out = []
    for comp in range(n_comp):
        sel = tri_ids[labels == comp]
        out.append(submesh_from_triangles(mesh, sel))
    out.sort(key=lambda s: (-s.area(), int(s.triangle_indices.min())))
    return out


def boundary_loops(mesh: TriangleMesh) -> list[list[int]]:
    """Closed cycles of boundary vertices, oriented like the triangle winding."""
    bedges = mesh.boundary_directed_edges()
    if len(bedges) == 0:
        return []
    # successor lists keyed by the start vertex; sorted for determinism
    order = np.lexsort((bedges[:, 1], bedges[:, 0]))
    bedges = bedges[order]
    starts = {}
    for idx, (a, b) in enumerate(bedges):
        starts.setdefault(int(a), []).append(idx)
    used = np.zeros(len(bedges), dtype=bool)
    loops = []
    for seed in range(len(bedges)):
        if used[seed]:
            continue
        loop = []
        edge = seed
        while not used[edge]:
            used[edge] = True
            a, b = int(bedges[edge, 0]), int(bedges[edge, 1])
            loop.append(a)
            nxt = None
            for cand in starts.get(b, ()):
                if not used[cand]:
                    nxt = cand
                    break
            if nxt is None:
                break
            edge = nxt
        loops.append(loop)
    return loops


def weld_vertices(mesh: TriangleMesh, tolerance: float = 1e-6) -> TriangleMesh:
    """Merge vertices closer than ``tolerance`` and drop collapsed triangles."""
    if mesh.n_vertices == 0:
        return mesh
    quant = np.round(mesh.vertices / tolerance).astype(np.int64)
    _, first, inverse = np.unique(
        quant, axis=0, return_index=True, return_inverse=True
    )
    order = np.argsort(first, kind="stable")  # keep original vertex order
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    inverse = rank[inverse]
    verts = mesh.vertices[first[order]]
    tris = inverse[mesh.triangles]
    keep = (
        (tris[:, 0] != tris[:, 1])
        & (tris[:, 1] != tris[:, 2])
        & (tris[:, 2] != tris[:, 0])
    )
    attrs = {k: v[first[order]] for k, v in mesh.attributes.items()}
    return TriangleMesh(verts, tris[keep], attrs)


def orient_consistently(mesh: TriangleMesh) -> TriangleMesh:
    """Propagate a consistent winding over each connected component.

    Raises :class:`RepairFailureError` via the caller when the surface is not
    orientable; here a conflict is reported as ``ValidationError``.
    """
    tris = mesh.triangles.copy()
    n_tri = len(tris)
    if n_tri == 0:
        return mesh

    edges = np.sort(
        np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]), axis=1
    )
    owner = np.tile(np.arange(n_tri), 3)
    keys = edges[:, 0].astype(np.int64) * mesh.n_vertices + edges[:, 1]
    order = np.argsort(keys, kind="stable")
    keys_s, owner_s = keys[order], owner[order]
    same = keys_s[1:] == keys_s[:-1]
    pa, pb = owner_s[:-1][same], owner_s[1:][same]

    neighbors: list[list[int]] = [[] for _ in range(n_tri)]
    for a, b in zip(pa, pb):
        neighbors[int(a)].append(int(b))
        neighbors[int(b)].append(int(a))

    def directed_set(t):
        return {(int(t[0]), int(t[1])), (int(t[1]), int(t[2])), (int(t[2]), int(t[0]))}

    visited = np.zeros(n_tri, dtype=bool)
    for seed in range(n_tri):
        if visited[seed]:
            continue
        stack = [seed]
        visited[seed] = True
        while stack:
            cur = stack.pop()
            cur_edges = directed_set(tris[cur])
            for nb in neighbors[cur]:
                nb_edges = directed_set(tris[nb])
                shares_same_direction = bool(cur_edges & nb_edges)
                if not visited[nb]:
                    if shares_same_direction:
                        tris[nb] = tris[nb][[0, 2, 1]]
                    visited[nb] = True
                    stack.append(nb)
                elif shares_same_direction:
                    raise ValidationError("surface is not orientable")
    return TriangleMesh(mesh.vertices, tris, dict(mesh.attributes))


def drop_unreferenced_vertices(mesh: TriangleMesh) -> TriangleMesh:
    used = np.unique(mesh.triangles)
    if len(used) == mesh.n_vertices:
        return mesh
    remap = np.full(mesh.n_vertices, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    attrs = {k: v[used] for k, v in mesh.attributes.items()}
    return TriangleMesh(mesh.vertices[used], remap[mesh.triangles], attrs)
