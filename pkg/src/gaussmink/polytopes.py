"""Exact convex polytopes from half-space data (origin in the interior).

The planar case is built through the polar-dual convex hull: the intersection
of half-planes {x . n_i <= d_i} with all d_i > 0 corresponds to the hull of
the dual points n_i/d_i, and polygon vertices come from adjacent hull facets.
The three-dimensional case wraps scipy's half-space intersection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from .errors import DegenerateBodyError


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Convex polygon in R^2 with the origin interior; vertices CCW."""

    vertices: np.ndarray          # (V, 2)
    facet_normals: np.ndarray     # (V, 2) outward unit normal of edge j: V_j -> V_{j+1}
    facet_offsets: np.ndarray     # (V,) distance of edge line from the origin

    @property
    def dim(self) -> int:
        return 2

    def support(self, dirs: np.ndarray) -> np.ndarray:
        """h(u) = max_V u . V for each row of ``dirs``."""
        return np.max(np.asarray(dirs) @ self.vertices.T, axis=-1)

    def radial(self, dirs: np.ndarray) -> np.ndarray:
        """Exact radial function r(u) = min over edges d_e / (u . n_e)."""
        dots = np.asarray(dirs) @ self.facet_normals.T
        with np.errstate(divide="ignore"):
            ratios = np.where(dots > 1e-14, self.facet_offsets / dots, np.inf)
        return np.min(ratios, axis=-1)

    def contains(self, pts: np.ndarray, tol: float = 0.0) -> np.ndarray:
        vals = np.asarray(pts) @ self.facet_normals.T - self.facet_offsets
        return np.all(vals <= tol, axis=-1)

    def edges(self):
        """Yield (normal, offset, start_vertex, end_vertex) per edge."""
        V = self.vertices
        nxt = np.roll(np.arange(len(V)), -1)
        for j in range(len(V)):
            yield self.facet_normals[j], self.facet_offsets[j], V[j], V[nxt[j]]


def halfplane_intersection(normals: np.ndarray, offsets: np.ndarray) -> ConvexPolygon:
    """Polygon {x : x . n_i <= d_i for all i}; requires every d_i > 0."""
    normals = np.asarray(normals, float)
    offsets = np.asarray(offsets, float)
    if np.any(offsets <= 0):
        raise DegenerateBodyError("half-plane offsets must be positive")
    dual = normals / offsets[:, None]
    try:
        hull = ConvexHull(dual)
    except QhullError as exc:
        raise DegenerateBodyError(f"half-plane intersection is degenerate: {exc}")
    order = hull.vertices              # CCW indices into dual points
    k = order.size
    verts = np.empty((k, 2))
    for j in range(k):
        a, b = order[j], order[(j + 1) % k]
        A = np.array([normals[a], normals[b]])
        d = np.array([offsets[a], offsets[b]])
        det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
        if abs(det) < 1e-300:
            raise DegenerateBodyError("parallel active half-planes")
        verts[j] = np.linalg.solve(A, d)
    # vertex j is the corner between edges order[j] and order[j+1]; edge
    # normals in CCW vertex order are normals[order[j+1]] for edge V_j -> V_{j+1}
    edge_ids = np.roll(order, -1)
    fn = normals[edge_ids]
    fo = offsets[edge_ids]
    return ConvexPolygon(vertices=verts, facet_normals=fn, facet_offsets=fo)


@dataclass(frozen=True, eq=False)
class ConvexPolytope3:
    """Convex polytope in R^3 with the origin interior."""

    vertices: np.ndarray           # (V, 3)
    facet_normals: np.ndarray      # (F, 3) outward unit, one per active facet
    facet_offsets: np.ndarray      # (F,)
    facet_vertices: tuple          # tuple of (m_f, 3) arrays, each ring ordered

    @property
    def dim(self) -> int:
        return 3

    def support(self, dirs: np.ndarray) -> np.ndarray:
        return np.max(np.asarray(dirs) @ self.vertices.T, axis=-1)

    def radial(self, dirs: np.ndarray) -> np.ndarray:
        dots = np.asarray(dirs) @ self.facet_normals.T
        with np.errstate(divide="ignore"):
            ratios = np.where(dots > 1e-14, self.facet_offsets / dots, np.inf)
        return np.min(ratios, axis=-1)

    def contains(self, pts: np.ndarray, tol: float = 0.0) -> np.ndarray:
        vals = np.asarray(pts) @ self.facet_normals.T - self.facet_offsets
        return np.all(vals <= tol, axis=-1)


def halfspace_intersection(normals: np.ndarray, offsets: np.ndarray) -> ConvexPolytope3:
    """Polytope {x : x . n_i <= d_i for all i}; requires every d_i > 0."""
    normals = np.asarray(normals, float)
    offsets = np.asarray(offsets, float)
    if np.any(offsets <= 0):
        raise DegenerateBodyError("half-space offsets must be positive")
    halfspaces = np.column_stack([normals, -offsets])
    try:
        hs = HalfspaceIntersection(halfspaces, np.zeros(3))
    except QhullError as exc:
        raise DegenerateBodyError(f"half-space intersection is degenerate: {exc}")
    pts = hs.intersections
    # dedupe nearly identical intersection points
    scale = float(np.max(np.abs(pts))) or 1.0
    _, idx = np.unique(np.round(pts / scale, 9), axis=0, return_index=True)
    verts = pts[np.sort(idx)]
    active_n, active_d, rings = [], [], []
    for n, d in zip(normals, offsets):
        on = verts[np.abs(verts @ n - d) <= 1e-9 * max(1.0, abs(d))]
        if on.shape[0] >= 3:
            active_n.append(n)
            active_d.append(d)
            rings.append(_order_ring(on, n))
    if not active_n:
        raise DegenerateBodyError("no active facets in half-space intersection")
    return ConvexPolytope3(
        vertices=verts,
        facet_normals=np.array(active_n),
        facet_offsets=np.array(active_d),
        facet_vertices=tuple(rings),
    )


def _order_ring(pts: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Order coplanar points around their centroid (CCW seen from outside)."""
    c = pts.mean(axis=0)
    u = pts[0] - c
    u = u / np.linalg.norm(u)
    v = np.cross(normal, u)
    rel = pts - c
    ang = np.arctan2(rel @ v, rel @ u)
    return pts[np.argsort(ang)]


def plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal in-plane basis for the plane with the given unit normal."""
    a = np.array([1.0, 0.0, 0.0])
    if abs(normal[0]) > 0.9:
        a = np.array([0.0, 1.0, 0.0])
    u = np.cross(normal, a)
    u = u / np.linalg.norm(u)
    v = np.cross(normal, u)
    return u, v
