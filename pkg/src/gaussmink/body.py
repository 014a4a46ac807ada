"""Convex-body calculus on sampled support functions.

A body is encoded by its support function h > 0 on a grid.  From h we derive
the boundary parametrization y = h x + grad h, the principal-radii matrix
b = Hess h + h I, the Gauss curvature K = 1/det b, and the radial function
r = sqrt(h^2 + |grad h|^2).  Positivity of b's smallest eigenvalue is the
uniform-convexity test used by every downstream solver.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.interpolate import (
    CubicSpline,
    LinearNDInterpolator,
    NearestNDInterpolator,
    RegularGridInterpolator,
)

from . import sphere
from .errors import InvalidBodyError
from .polytopes import ConvexPolygon, halfplane_intersection, halfspace_intersection
from .sphere import ScalarField, SphericalGrid

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class BodyGeometry:
    """Support function plus everything derived from it at the grid nodes."""

    h: ScalarField
    grad_h: np.ndarray       # (M, n) tangent-frame components
    hess_h: np.ndarray       # (M, n, n)
    b: np.ndarray            # (M, n, n) principal-radii matrix
    det_b: np.ndarray        # (M,)
    gauss_K: np.ndarray      # (M,)
    radial_r: np.ndarray     # (M,) |y| at the contact point of each normal
    boundary: np.ndarray     # (M, n+1) contact points y = h x + grad h
    min_eig_b: np.ndarray    # (M,)
    max_eig_b: np.ndarray    # (M,)

    @property
    def grid(self) -> SphericalGrid:
        return self.h.grid


@lru_cache(maxsize=64)
def tangent_frame(grid: SphericalGrid):
    """Orthonormal tangent basis vectors at every node, shape (n, M, n+1)."""
    if grid.dim == 1:
        t = np.column_stack([-grid.nodes[:, 1], grid.nodes[:, 0]])
        t.flags.writeable = False
        return (t,)
    th = np.repeat(grid.thetas, grid.phis.size)
    ph = np.tile(grid.phis, grid.thetas.size)
    e_th = np.column_stack(
        [np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)]
    )
    e_ph = np.column_stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)])
    e_th.flags.writeable = False
    e_ph.flags.writeable = False
    return e_th, e_ph


def derive_geometry(h: ScalarField) -> BodyGeometry:
    """Populate all derived fields; raises for nonpositive support data."""
    vals = h.values
    if np.any(vals <= 0):
        k = int(np.argmin(vals))
        raise InvalidBodyError(f"support function must be positive; h[{k}] = {vals[k]}")
    grid = h.grid
    gh = sphere.grad(h)
    hess = sphere.covariant_hessian(h)
    n = grid.dim
    if n == 1:
        det_b = hess[:, 0, 0] + vals
        b = det_b[:, None, None]
        min_eig = det_b
        max_eig = det_b
        r = np.hypot(vals, gh[:, 0])
    else:
        b = hess + vals[:, None, None] * np.eye(n)[None, :, :]
        det_b = b[:, 0, 0] * b[:, 1, 1] - b[:, 0, 1] ** 2
        mean = 0.5 * (b[:, 0, 0] + b[:, 1, 1])
        rad = np.sqrt(0.25 * (b[:, 0, 0] - b[:, 1, 1]) ** 2 + b[:, 0, 1] ** 2)
        min_eig = mean - rad
        max_eig = mean + rad
        r = np.sqrt(vals**2 + gh[:, 0] ** 2 + gh[:, 1] ** 2)
    with np.errstate(divide="ignore"):
        K = 1.0 / det_b
    frame = tangent_frame(grid)
    boundary = vals[:, None] * grid.nodes
    for i, e in enumerate(frame):
        boundary = boundary + gh[:, i][:, None] * e
    return BodyGeometry(
        h=h, grad_h=gh, hess_h=hess, b=b, det_b=det_b, gauss_K=K,
        radial_r=r, boundary=boundary, min_eig_b=min_eig, max_eig_b=max_eig,
    )


class ConvexityReport(NamedTuple):
    uniformly_convex: bool
    min_value: float
    node: int
    node_vector: np.ndarray


def check_uniform_convexity(g: BodyGeometry, eps: float = 1e-8) -> ConvexityReport:
    """True iff the smallest principal radius exceeds ``eps`` everywhere."""
    k = int(np.argmin(g.min_eig_b))
    m = float(g.min_eig_b[k])
    return ConvexityReport(m > eps, m, k, g.grid.nodes[k])


# ---------------------------------------------------------------------------
# radial representation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialBody:
    """Radial function on the standard direction grid, with its gradient."""

    r: ScalarField
    grad_r: np.ndarray
    v_factor: np.ndarray     # r/h = sqrt(1 + |grad log r|^2)

    @property
    def grid(self) -> SphericalGrid:
        return self.r.grid


def periodic_spline(x: np.ndarray, y: np.ndarray) -> CubicSpline:
    """C^2 interpolant of 2*pi-periodic data given over one period."""
    xx = np.append(x, x[0] + TWO_PI)
    yy = np.append(y, y[0])
    return CubicSpline(xx, yy, bc_type="periodic")


def support_to_radial(g: BodyGeometry) -> RadialBody:
    """Resample r = |y| from the normal parametrization onto directions.

    The map x -> y/|y| is injective exactly for uniformly convex bodies; the
    circle case interpolates with a periodic C^2 cubic spline (a merely C^1
    monotone interpolant ruins the second derivatives of whatever is built
    on the resampled values, e.g. the dual body's curvature), the sphere
    case with piecewise-linear interpolation on the (theta, phi) chart.
    """
    grid = g.grid
    y = g.boundary
    if grid.dim == 1:
        xi = np.unwrap(np.arctan2(y[:, 1], y[:, 0]))
        if np.any(np.diff(xi) <= 0):
            raise InvalidBodyError(
                "radial resampling needs an injective normal-to-direction map "
                "(body is not uniformly convex)"
            )
        interp = periodic_spline(xi, g.radial_r)
        targets = xi[0] + (grid.thetas - xi[0]) % TWO_PI
        r_new = interp(targets)
        if np.any(r_new <= 0):
            raise InvalidBodyError("radial resampling produced nonpositive values")
    else:
        norms = np.linalg.norm(y, axis=1)
        xi = y / norms[:, None]
        th = np.arccos(np.clip(xi[:, 2], -1.0, 1.0))
        ph = np.arctan2(xi[:, 1], xi[:, 0]) % TWO_PI
        pts = np.column_stack([th, ph])
        pts_ext = np.vstack([pts, pts + [0, TWO_PI], pts - [0, TWO_PI]])
        vals_ext = np.tile(norms, 3)
        lin = LinearNDInterpolator(pts_ext, vals_ext)
        tgt_t = np.repeat(grid.thetas, grid.phis.size)
        tgt_p = np.tile(grid.phis, grid.thetas.size)
        r_new = lin(np.column_stack([tgt_t, tgt_p]))
        bad = ~np.isfinite(r_new)
        if np.any(bad):
            near = NearestNDInterpolator(pts_ext, vals_ext)
            r_new[bad] = near(np.column_stack([tgt_t[bad], tgt_p[bad]]))
    r_field = ScalarField(grid, r_new)
    gr = sphere.grad(r_field)
    glog = gr / r_new[:, None]
    v = np.sqrt(1.0 + np.sum(glog**2, axis=1))
    return RadialBody(r=r_field, grad_r=gr, v_factor=v)


def radial_curvature(rb: RadialBody) -> np.ndarray:
    """Gauss curvature computed purely from the radial representation."""
    r = rb.r.values
    gr = rb.grad_r
    hess = sphere.covariant_hessian(rb.r)
    n = rb.grid.dim
    A = (r**2)[:, None, None] * np.eye(n)[None, :, :] \
        + 2.0 * gr[:, :, None] * gr[:, None, :] \
        - r[:, None, None] * hess
    if n == 1:
        detA = A[:, 0, 0]
    else:
        detA = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] ** 2
    return rb.v_factor ** (-n - 2) * r ** (-3 * n) * detA


def polar_dual(g: BodyGeometry) -> ScalarField:
    """Support function of the polar body: h*(xi) = 1/r(xi)."""
    rb = support_to_radial(g)
    return ScalarField(g.grid, 1.0 / rb.r.values)


def dual_identity_residual(g: BodyGeometry) -> float:
    """Deviation of h^{n+2} (h*)^{n+2} / (K K*) from 1 along paired points.

    The primal contact point at normal x pairs with the dual contact point at
    normal xi = y/|y|; the pair satisfies p . p* = 1.  The dual curvature is
    interpolated from the dual body's own derived geometry.
    """
    grid = g.grid
    y = g.boundary
    r_exact = g.radial_r
    hstar_paired = 1.0 / r_exact
    hstar = polar_dual(g)
    gstar = derive_geometry(hstar)
    if grid.dim == 1:
        xi = grid.thetas[0] + (np.arctan2(y[:, 1], y[:, 0]) - grid.thetas[0]) % TWO_PI
        K_star = periodic_spline(grid.thetas, gstar.gauss_K)(xi)
    else:
        norms = np.linalg.norm(y, axis=1)
        xin = y / norms[:, None]
        th = np.arccos(np.clip(xin[:, 2], -1.0, 1.0))
        ph = np.arctan2(xin[:, 1], xin[:, 0]) % TWO_PI
        Kv = gstar.gauss_K.reshape(grid.shape)
        ext_phi = np.concatenate([grid.phis - TWO_PI, grid.phis, grid.phis + TWO_PI])
        ext_K = np.tile(Kv, (1, 3))
        rgi = RegularGridInterpolator(
            (grid.thetas, ext_phi), ext_K, bounds_error=False, fill_value=None
        )
        K_star = rgi(np.column_stack([th, ph]))
    n = grid.dim
    lhs = g.h.values ** (n + 2) * hstar_paired ** (n + 2) / (g.gauss_K * K_star)
    return float(np.max(np.abs(lhs - 1.0)))


# ---------------------------------------------------------------------------
# Wulff shapes
# ---------------------------------------------------------------------------

def wulff_polytope(z: ScalarField):
    """Exact polytope bounded by the sampled half-spaces {x . v <= z(v)}."""
    if np.any(z.values <= 0):
        raise InvalidBodyError("Wulff construction needs positive support data")
    if z.grid.dim == 1:
        return halfplane_intersection(z.grid.nodes, z.values)
    return halfspace_intersection(z.grid.nodes, z.values)


def wulff_support(z: ScalarField) -> ScalarField:
    """Support function of the Wulff shape of z, sampled back on z's grid.

    Satisfies h <= z pointwise, with equality exactly at directions whose
    half-space touches the shape.
    """
    poly = wulff_polytope(z)
    return ScalarField(z.grid, poly.support(z.grid.nodes))


# ---------------------------------------------------------------------------
# serialization and simple shapes
# ---------------------------------------------------------------------------

def ball_support(grid: SphericalGrid, radius: float) -> ScalarField:
    return sphere.constant_field(grid, radius)


def ellipse_support(grid: SphericalGrid, a: float, b: float, c: float | None = None) -> ScalarField:
    """Support function of an origin-centered axis-aligned ellipse/ellipsoid."""
    nodes = grid.nodes
    if grid.dim == 1:
        vals = np.sqrt((a * nodes[:, 0]) ** 2 + (b * nodes[:, 1]) ** 2)
    else:
        cc = a if c is None else c
        vals = np.sqrt(
            (a * nodes[:, 0]) ** 2 + (b * nodes[:, 1]) ** 2 + (cc * nodes[:, 2]) ** 2
        )
    return ScalarField(grid, vals)


def perturbed_ball_support(grid: SphericalGrid, radius: float, amp: float, k: int) -> ScalarField:
    """h = radius + amp * cos(k * theta); on S^2 theta is the colatitude.

    On the sphere only even k yields a smooth function, since cos(k theta)
    must be a polynomial in cos(theta).
    """
    if grid.dim == 1:
        vals = radius + amp * np.cos(k * grid.thetas)
    else:
        if k % 2 != 0:
            raise InvalidBodyError("colatitude perturbation needs even k on S^2")
        th = np.repeat(grid.thetas, grid.phis.size)
        vals = radius + amp * np.cos(k * th)
    return ScalarField(grid, vals)


def body_to_json_dict(g: BodyGeometry, include_curvature: bool = True) -> dict:
    grid = g.grid
    desc = {"type": "circle", "N": grid.shape[0]} if grid.dim == 1 else {
        "type": "latlon", "N_lat": grid.shape[0], "N_lon": grid.shape[1]
    }
    out = {"dim": grid.dim, "grid": desc, "h": list(g.h.values)}
    if include_curvature:
        out["K"] = list(g.gauss_K)
    return out


def boundary_curve(g: BodyGeometry) -> np.ndarray:
    """Closed boundary polyline of a planar body (first point repeated)."""
    if g.grid.dim != 1:
        raise InvalidBodyError("boundary curves are only drawn for planar bodies")
    return np.vstack([g.boundary, g.boundary[:1]])
