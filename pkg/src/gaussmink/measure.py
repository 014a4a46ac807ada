"""Gaussian-measure quantities of convex bodies.

Everything is normalized against the standard Gaussian on R^{n+1}: volumes
(gamma), weighted surface-area densities for any exponent p, the two flow
functionals and their stationarity residuals, and a Monte Carlo volume oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _sciint
from scipy import special as _special

from . import sphere
from .body import (
    BodyGeometry,
    RadialBody,
    derive_geometry,
    support_to_radial,
    wulff_polytope,
)
from .errors import DegenerateBodyError, FieldMismatchError, InvalidBodyError
from .polytopes import ConvexPolygon, ConvexPolytope3, plane_basis
from .sphere import ScalarField, SphericalGrid

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class GaussDensityContext:
    """Dimension and matching normalization constant (2 pi)^{-(n+1)/2}."""

    dim: int
    norm_const: float

    @classmethod
    def for_dim(cls, n: int) -> "GaussDensityContext":
        return cls(dim=n, norm_const=(TWO_PI) ** (-(n + 1) / 2.0))

    def __post_init__(self):
        expect = (TWO_PI) ** (-(self.dim + 1) / 2.0)
        if not math.isclose(self.norm_const, expect, rel_tol=1e-12):
            raise ValueError("normalization constant does not match dimension")


def radial_gauss_integral(r, n: int):
    """F_n(r) = integral of s^n e^{-s^2/2} ds from 0 to r (vectorized).

    Closed form through the regularized lower incomplete gamma function; for
    n = 1 this reduces to 1 - e^{-r^2/2}.
    """
    r = np.asarray(r, dtype=float)
    if n == 1:
        return 1.0 - np.exp(-0.5 * r**2)
    a = (n + 1) / 2.0
    return 2.0 ** ((n - 1) / 2.0) * _special.gamma(a) * _special.gammainc(a, 0.5 * r**2)


def radial_gauss_integral_quad(r: float, n: int, tol: float = 1e-12) -> float:
    """Adaptive-quadrature evaluation of F_n; independent cross-check."""
    val, _ = _sciint.quad(lambda s: s**n * np.exp(-0.5 * s * s), 0.0, r,
                          epsabs=tol, epsrel=tol)
    return val


# ---------------------------------------------------------------------------
# Gaussian volume
# ---------------------------------------------------------------------------

def gaussian_volume(body, grid: SphericalGrid | None = None) -> float:
    """Gaussian probability mass of a convex body containing the origin.

    Accepts a derived geometry, a radial body, or an exact polytope (the
    latter needs a direction grid to sample its radial function).
    """
    if isinstance(body, BodyGeometry):
        rb = support_to_radial(body)
        return gaussian_volume(rb)
    if isinstance(body, RadialBody):
        grid = body.grid
        r = body.r.values
    elif isinstance(body, (ConvexPolygon, ConvexPolytope3)):
        if grid is None:
            raise ValueError("polytope volume needs a direction grid")
        r = body.radial(grid.nodes)
        if not np.all(np.isfinite(r)):
            raise DegenerateBodyError("polytope radial function is unbounded")
    else:
        raise TypeError(f"unsupported body type {type(body)!r}")
    n = grid.dim
    ctx = GaussDensityContext.for_dim(n)
    return ctx.norm_const * float(np.dot(grid.weights, radial_gauss_integral(r, n)))


def polygon_gaussian_volume(poly: ConvexPolygon, tol: float = 1e-9) -> float:
    """Exact-structure planar volume: per-edge adaptive angular quadrature.

    Within the angular sector of one edge the radial function is
    d / cos(theta - alpha), so the integrand is smooth on each sector.
    """
    total = 0.0
    n_edges = len(poly.vertices)
    for normal, d, v0, v1 in poly.edges():
        a0 = math.atan2(v0[1], v0[0])
        a1 = math.atan2(v1[1], v1[0])
        span = (a1 - a0) % TWO_PI
        if span < 1e-15:
            continue
        alpha = math.atan2(normal[1], normal[0])

        def integrand(t, d=d, alpha=alpha):
            rr = d / math.cos(t - alpha)
            return 1.0 - math.exp(-0.5 * rr * rr)

        val, _ = _sciint.quad(integrand, a0, a0 + span,
                              epsabs=tol / max(1, n_edges), epsrel=1e-12, limit=200)
        total += val
    return total / TWO_PI


def support_membership(dirs: np.ndarray, values: np.ndarray):
    """Membership test x . v <= h(v) over all sampled directions."""
    dirs = np.asarray(dirs, float)
    values = np.asarray(values, float)

    def member(pts: np.ndarray) -> np.ndarray:
        return np.all(pts @ dirs.T <= values[None, :], axis=1)

    return member


def gaussian_volume_mc(membership, dim: int, samples: int, seed: int,
                       batch: int = 1 << 16):
    """Monte Carlo Gaussian volume: (estimate, binomial standard error).

    ``membership`` maps an (m, dim+1) array of points to booleans; the test is
    exact for polytopes given their support data.
    """
    if samples < 10_000:
        raise ValueError("use at least 1e4 samples")
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        pts = rng.standard_normal((m, dim + 1))
        hits += int(np.count_nonzero(membership(pts)))
        done += m
    p = hits / samples
    se = math.sqrt(max(p * (1.0 - p), 1e-300) / samples)
    return p, se


# ---------------------------------------------------------------------------
# surface-area measures and functionals
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MeasureField:
    """Density of the p-weighted Gaussian surface-area measure on the sphere."""

    density: ScalarField
    p: float

    def total_mass(self) -> float:
        return sphere.integrate(self.density)


def _density_values(g: BodyGeometry, p: float) -> np.ndarray:
    h = g.h.values
    norm_const = TWO_PI ** (-(g.grid.dim + 1) / 2.0)
    return norm_const * np.exp(-0.5 * g.radial_r**2) * h ** (1.0 - p) * g.det_b


def lp_surface_density(g: BodyGeometry, p: float) -> MeasureField:
    """density = (2 pi)^{-(n+1)/2} e^{-r^2/2} h^{1-p} det(b) at every node."""
    if p != 1 and np.any(g.h.values <= 0):
        raise InvalidBodyError("nonpositive support values need p = 1")
    return MeasureField(density=ScalarField(g.grid, _density_values(g, p)), p=p)


@dataclass
class FunctionalRecord:
    """Scalar diagnostics of one body against a prescribed density f."""

    gamma: float
    psi: float
    phi: float          # NaN when p = 0 (undefined there)
    theta: float
    residual_stationary: float
    residual_normalized: float
    c_estimate: float


def functionals(g: BodyGeometry, f: ScalarField, p: float) -> FunctionalRecord:
    return functionals_from_radial(g, support_to_radial(g), f, p)


def functionals_from_radial(g: BodyGeometry, rb: RadialBody, f: ScalarField,
                            p: float) -> FunctionalRecord:
    """Same as :func:`functionals` but reusing an existing radial resampling."""
    grid = g.grid
    if not sphere.same_grid(grid, f.grid):
        raise FieldMismatchError("f lives on a different grid than the body")
    fv = f.values
    if np.any(fv <= 0):
        raise InvalidBodyError("prescribed density must be positive")
    hv = g.h.values
    if np.any(hv <= 0):
        raise InvalidBodyError("support function must be positive")
    n = grid.dim
    w = grid.weights
    ctx = GaussDensityContext.for_dim(n)
    rho = rb.r.values
    gamma = ctx.norm_const * float(np.dot(w, radial_gauss_integral(rho, n)))
    if p == 0:
        psi = float(np.dot(w, fv * np.log(hv)))
        phi = math.nan
    else:
        psi = float(np.dot(w, fv * hv**p)) / p
        phi = psi - gamma
    theta_num = float(np.dot(w, np.exp(-0.5 * rho**2) * rho ** (n + 1)))
    theta_den = float(np.dot(w, hv**p * fv))
    theta = theta_num / theta_den
    dens = lp_surface_density(g, p).density.values
    fmax = float(np.max(fv))
    res_st = float(np.max(np.abs(dens - fv))) / fmax
    scale = (1.0 / theta) / ctx.norm_const
    res_no = float(np.max(np.abs(scale * dens - fv))) / fmax
    return FunctionalRecord(
        gamma=gamma, psi=psi, phi=phi, theta=theta,
        residual_stationary=res_st, residual_normalized=res_no,
        c_estimate=1.0 / theta,
    )


def phi_functional(g: BodyGeometry, f: ScalarField, p: float) -> float:
    """The p != 0 descent functional; undefined (error) at p = 0."""
    if p == 0:
        raise ValueError("the descent functional is only defined for p != 0")
    return functionals(g, f, p).phi


# ---------------------------------------------------------------------------
# boundary (facet) Gaussian integrals for exact polytopes
# ---------------------------------------------------------------------------

def segment_gauss_integral(p0, p1, tol: float = 1e-10) -> float:
    """Line integral of e^{-|x|^2/2} along a segment in the plane."""
    p0 = np.asarray(p0, float)
    p1 = np.asarray(p1, float)
    d = p1 - p0
    L = float(np.linalg.norm(d))
    if L == 0.0:
        return 0.0
    val, _ = _sciint.quad(
        lambda s: math.exp(-0.5 * float(np.sum((p0 + s * d) ** 2))),
        0.0, 1.0, epsabs=tol, epsrel=1e-12, limit=200,
    )
    return val * L


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
_GL01 = 0.5 * (_GL_NODES + 1.0)
_GLW01 = 0.5 * _GL_WEIGHTS


def triangle_gauss_integral(A, B, C) -> float:
    """Integral of e^{-|x|^2/2} over a planar triangle (product quadrature)."""
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    C = np.asarray(C, float)
    area2 = abs((B[0] - A[0]) * (C[1] - B[1]) - (B[1] - A[1]) * (C[0] - B[0]))
    if area2 == 0.0:
        return 0.0
    u = _GL01[:, None]
    v = _GL01[None, :]
    X = A[0] + u * (B[0] - A[0]) + u * v * (C[0] - B[0])
    Y = A[1] + u * (B[1] - A[1]) + u * v * (C[1] - B[1])
    vals = np.exp(-0.5 * (X**2 + Y**2)) * u
    return float(_GLW01 @ vals @ _GLW01) * area2


def polygon_cone_measures(poly: ConvexPolygon, tol: float = 1e-10):
    """Log-weighted (p = 0) Gaussian surface measure of every edge.

    Returns (edge normals, per-edge measure) with measure
    (2 pi)^{-1} * d_e * integral of the Gaussian weight along the edge.
    """
    ctx = GaussDensityContext.for_dim(1)
    normals, values = [], []
    for normal, d, v0, v1 in poly.edges():
        normals.append(normal)
        values.append(ctx.norm_const * d * segment_gauss_integral(v0, v1, tol))
    return np.array(normals), np.array(values)


def facet_cone_measure3(ring: np.ndarray, normal: np.ndarray, offset: float) -> float:
    """p = 0 cone measure of one polygonal facet of a 3D polytope.

    The facet lies in the plane {x . n = d}; in in-plane coordinates the
    Gaussian weight factorizes as e^{-d^2/2} e^{-|u|^2/2}.
    """
    ctx = GaussDensityContext.for_dim(2)
    u, v = plane_basis(normal)
    base = normal * offset
    rel = ring - base
    pts2 = np.column_stack([rel @ u, rel @ v])
    centroid = pts2.mean(axis=0)
    total = 0.0
    m = len(pts2)
    for j in range(m):
        total += triangle_gauss_integral(centroid, pts2[j], pts2[(j + 1) % m])
    return ctx.norm_const * offset * math.exp(-0.5 * offset * offset) * total


# ---------------------------------------------------------------------------
# first variation of the Gaussian volume
# ---------------------------------------------------------------------------

def variational_check(Q, g, step: float = 1e-4, grid: SphericalGrid | None = None,
                      quad_tol: float = 1e-12):
    """Centered difference of gamma under h -> h e^{t g} versus the measure side.

    Returns (lhs, rhs, relative error).  ``g`` may be a ScalarField on the
    body's grid or a callable on direction vectors (required for polytopes,
    whose facet normals need not be grid nodes).
    """
    if isinstance(Q, BodyGeometry):
        grid = Q.grid
        base = Q.h.values
        g_vals = g.values if isinstance(g, ScalarField) else np.asarray(g(grid.nodes), float)
        dens = lp_surface_density(Q, 0.0).density.values
        rhs = float(np.dot(grid.weights, g_vals * dens))
    elif isinstance(Q, (ConvexPolygon, ConvexPolytope3)):
        if grid is None:
            raise ValueError("polytope variation needs a direction grid")
        if not callable(g):
            raise ValueError("polytope variation needs g as a callable on directions")
        base = Q.support(grid.nodes)
        g_vals = np.asarray(g(grid.nodes), float)
        if isinstance(Q, ConvexPolygon):
            normals, measures = polygon_cone_measures(Q)
            g_fac = np.asarray(g(normals), float)
            rhs = float(np.dot(g_fac, measures))
        else:
            g_fac = np.asarray(g(Q.facet_normals), float)
            rhs = float(sum(
                gf * facet_cone_measure3(ring, nrm, off)
                for gf, ring, nrm, off in zip(
                    g_fac, Q.facet_vertices, Q.facet_normals, Q.facet_offsets)
            ))
    else:
        raise TypeError(f"unsupported body type {type(Q)!r}")

    def gamma_of(t: float) -> float:
        z = ScalarField(grid, base * np.exp(t * g_vals))
        poly = wulff_polytope(z)
        if grid.dim == 1:
            return polygon_gaussian_volume(poly, tol=quad_tol)
        return gaussian_volume(poly, grid)

    lhs = (gamma_of(step) - gamma_of(-step)) / (2.0 * step)
    rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    return lhs, rhs, rel
