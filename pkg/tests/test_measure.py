import math

import numpy as np
import pytest
from scipy import integrate as sciint
from scipy.special import erf

from gaussmink import (
    GaussDensityContext,
    ScalarField,
    ball_support,
    constant_field,
    derive_geometry,
    ellipse_support,
    functionals,
    gaussian_volume,
    gaussian_volume_mc,
    integrate,
    lp_surface_density,
    make_circle_grid,
    make_latlon_grid,
    perturbed_ball_support,
    polygon_gaussian_volume,
    radial_gauss_integral,
    support_membership,
    support_to_radial,
    variational_check,
)
from gaussmink.measure import (
    phi_functional,
    polygon_cone_measures,
    radial_gauss_integral_quad,
    segment_gauss_integral,
    triangle_gauss_integral,
)
from gaussmink.polytopes import halfplane_intersection

from conftest import F_CONST, RSTAR


def square_polygon(a=1.0):
    normals = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    return halfplane_intersection(normals, np.full(4, a))


def gamma_square(a):
    """Product of two one-dimensional Gaussian masses."""
    return erf(a / math.sqrt(2.0)) ** 2


def test_density_context_validates():
    ctx = GaussDensityContext.for_dim(1)
    assert ctx.norm_const == pytest.approx(1 / (2 * np.pi))
    with pytest.raises(ValueError):
        GaussDensityContext(dim=2, norm_const=ctx.norm_const)


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("r", [0.3, 1.0, 2.2])
def test_radial_integral_against_quadrature(n, r):
    closed = float(radial_gauss_integral(r, n))
    assert closed == pytest.approx(radial_gauss_integral_quad(r, n), abs=1e-12)


# ---------------------------------------------------------------------------
# Gaussian volume
# ---------------------------------------------------------------------------

def test_gaussian_volume_ball_circle(circle128):
    for R in (0.7, RSTAR, 2.0):
        geom = derive_geometry(ball_support(circle128, R))
        assert gaussian_volume(geom) == pytest.approx(1 - math.exp(-R * R / 2), abs=1e-12)
    big = derive_geometry(ball_support(circle128, 8.0))
    assert gaussian_volume(big) == pytest.approx(1.0, abs=1e-12)


def test_gaussian_volume_half_at_stationary_radius(circle128):
    geom = derive_geometry(ball_support(circle128, RSTAR))
    assert gaussian_volume(geom) == pytest.approx(0.5, abs=1e-14)


def test_gaussian_volume_ball_sphere():
    g = make_latlon_grid(16, 32)
    R = 1.1
    geom = derive_geometry(ball_support(g, R))
    exact = float(radial_gauss_integral_quad(R, 2)) * 4 * np.pi * (2 * np.pi) ** -1.5
    assert gaussian_volume(geom) == pytest.approx(exact, rel=1e-10)


def test_polygon_gaussian_volume_square():
    assert polygon_gaussian_volume(square_polygon(1.0)) == pytest.approx(
        gamma_square(1.0), abs=1e-10)
    assert gamma_square(1.0) == pytest.approx(0.466065, abs=5e-7)


def test_polytope_volume_by_direction_sampling(circle512):
    val = gaussian_volume(square_polygon(1.0), circle512)
    assert val == pytest.approx(gamma_square(1.0), abs=1e-4)


# ---------------------------------------------------------------------------
# Monte Carlo oracle
# ---------------------------------------------------------------------------

def test_mc_matches_closed_forms(circle512):
    member = support_membership(circle512.nodes,
                                ball_support(circle512, RSTAR).values)
    est, se = gaussian_volume_mc(member, 1, 10**6, seed=20240801)
    assert abs(est - 0.5) <= 3 * se

    sq = square_polygon(1.0)
    est2, se2 = gaussian_volume_mc(lambda pts: sq.contains(pts), 1, 10**6,
                                   seed=20240801)
    assert abs(est2 - gamma_square(1.0)) <= 3 * se2


def test_mc_tiny_body(circle128):
    member = support_membership(circle128.nodes,
                                ball_support(circle128, 1e-6).values)
    est, _ = gaussian_volume_mc(member, 1, 10**4, seed=1)
    assert est <= 1e-3


def test_mc_determinism_and_sample_floor(circle128):
    member = support_membership(circle128.nodes, ball_support(circle128, 1.0).values)
    a = gaussian_volume_mc(member, 1, 10**4, seed=7)
    b = gaussian_volume_mc(member, 1, 10**4, seed=7)
    assert a == b
    with pytest.raises(ValueError):
        gaussian_volume_mc(member, 1, 10**3, seed=7)


# ---------------------------------------------------------------------------
# surface-area densities
# ---------------------------------------------------------------------------

def test_ball_density_p1(circle128):
    geom = derive_geometry(ball_support(circle128, 1.0))
    mf = lp_surface_density(geom, 1.0)
    expect = math.exp(-0.5) / (2 * np.pi)
    assert np.allclose(mf.density.values, expect, atol=1e-12)
    assert expect == pytest.approx(0.096532, abs=1e-6)


def test_ball_density_p1_sphere():
    g = make_latlon_grid(16, 32)
    geom = derive_geometry(ball_support(g, 1.0))
    mf = lp_surface_density(geom, 1.0)
    expect = math.exp(-0.5) * (2 * np.pi) ** -1.5
    assert np.allclose(mf.density.values, expect, atol=1e-10)


@pytest.mark.parametrize("p", [0.0, 0.5, 2.0, 3.0])
def test_ball_density_general_p(circle128, p):
    R = 1.3
    geom = derive_geometry(ball_support(circle128, R))
    mf = lp_surface_density(geom, p)
    expect = math.exp(-R * R / 2) * R ** (2 - p) / (2 * np.pi)
    assert np.allclose(mf.density.values, expect, atol=1e-11)


def test_gaussian_surface_mass_vanishes_at_extremes(circle128):
    masses = {}
    for R in (0.01, 1.0, 8.0):
        geom = derive_geometry(ball_support(circle128, R))
        masses[R] = lp_surface_density(geom, 1.0).total_mass()
    assert masses[0.01] < 0.05 * masses[1.0]
    assert masses[8.0] < 1e-10 * masses[1.0]


def test_dimensional_surface_area_bound(circle512):
    bound = 4 * 2 ** 0.25
    for h in (ball_support(circle512, 1.0), ball_support(circle512, 3.0),
              perturbed_ball_support(circle512, 1.0, 0.1, 2),
              ellipse_support(circle512, 1.3, 0.9),
              ellipse_support(circle512, 2.0, 1.0)):
        mass = lp_surface_density(derive_geometry(h), 1.0).total_mass()
        assert mass < bound


def test_p1_mass_matches_boundary_quadrature(circle512):
    # independent route: pull the boundary Gaussian integral to the
    # direction grid, where the area element is r^n * v per unit solid angle
    geom = derive_geometry(perturbed_ball_support(circle512, 1.0, 0.1, 2))
    mass = lp_surface_density(geom, 1.0).total_mass()
    rb = support_to_radial(geom)
    rho = rb.r.values
    boundary_side = float(np.dot(circle512.weights,
                                 np.exp(-0.5 * rho**2) * rho * rb.v_factor)) / (2 * np.pi)
    assert mass == pytest.approx(boundary_side, rel=1e-6)


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------

def test_functionals_on_balls(circle512):
    f = constant_field(circle512, F_CONST)
    for R in (1.0, RSTAR):
        geom = derive_geometry(ball_support(circle512, R))
        rec = functionals(geom, f, 2.0)
        assert rec.theta == pytest.approx(4 * np.pi * math.exp(-R * R / 2), rel=1e-12)
        assert rec.psi == pytest.approx(R * R / 4, rel=1e-12)
        assert 0 < rec.gamma < 1
    rec = functionals(derive_geometry(ball_support(circle512, RSTAR)), f, 2.0)
    assert rec.theta == pytest.approx(2 * np.pi, rel=1e-12)
    assert rec.residual_stationary <= 1e-13
    assert rec.phi == pytest.approx(rec.psi - rec.gamma, rel=1e-12)
    assert rec.c_estimate == pytest.approx(1 / (2 * np.pi), rel=1e-12)


def test_functionals_p0_branch(circle128):
    f = constant_field(circle128, F_CONST)
    geom = derive_geometry(ball_support(circle128, 2.0))
    rec = functionals(geom, f, 0.0)
    assert rec.psi == pytest.approx(0.5 * math.log(2.0), rel=1e-12)
    assert math.isnan(rec.phi)
    with pytest.raises(ValueError):
        phi_functional(geom, f, 0.0)


def test_functionals_need_positive_f(circle128):
    geom = derive_geometry(ball_support(circle128, 1.0))
    with pytest.raises(Exception):
        functionals(geom, constant_field(circle128, -1.0), 2.0)


# ---------------------------------------------------------------------------
# facet Gaussian integrals
# ---------------------------------------------------------------------------

def test_segment_integral_against_closed_form():
    # vertical segment x = a, y in [y0, y1]
    a, y0, y1 = 1.0, -1.0, 1.0
    val = segment_gauss_integral([a, y0], [a, y1])
    exact = math.exp(-a * a / 2) * math.sqrt(2 * np.pi) * (
        0.5 * erf(y1 / math.sqrt(2)) - 0.5 * erf(y0 / math.sqrt(2)))
    assert val == pytest.approx(exact, rel=1e-12)


def test_triangle_integral_against_dblquad():
    A, B, C = (0.1, 0.2), (1.3, 0.4), (0.5, 1.1)
    val = triangle_gauss_integral(A, B, C)
    ref, _ = sciint.dblquad(
        lambda y, x: np.exp(-0.5 * (x * x + y * y)) if _in_triangle(x, y, A, B, C) else 0.0,
        0.0, 1.4, 0.0, 1.2, epsabs=1e-9)
    assert val == pytest.approx(ref, abs=5e-7)


def _in_triangle(x, y, A, B, C):
    p = np.array([x, y])
    sides = []
    for P, Q in ((A, B), (B, C), (C, A)):
        P, Q = np.array(P), np.array(Q)
        sides.append(np.cross(Q - P, p - P))
    s = np.sign(sides)
    return np.all(s >= 0) or np.all(s <= 0)


def test_polygon_cone_measures_square():
    normals, vals = polygon_cone_measures(square_polygon(1.0))
    exact = (1 / (2 * np.pi)) * math.exp(-0.5) * math.sqrt(2 * np.pi) * erf(1 / math.sqrt(2))
    assert np.allclose(vals, exact, rtol=1e-10)
    assert vals.sum() == pytest.approx(4 * exact, rel=1e-10)


# ---------------------------------------------------------------------------
# first variation of gamma
# ---------------------------------------------------------------------------

def test_variation_ball_constant_direction():
    g = make_circle_grid(2048)
    ball = derive_geometry(ball_support(g, 1.0))
    lhs, rhs, rel = variational_check(ball, constant_field(g, 1.0), step=1e-4)
    assert rhs == pytest.approx(math.exp(-0.5), rel=1e-9)
    assert abs(lhs - math.exp(-0.5)) <= 1e-6


def test_variation_odd_mode_vanishes():
    g = make_circle_grid(2048)
    ball = derive_geometry(ball_support(g, 1.0))
    lhs, rhs, _ = variational_check(ball, ScalarField(g, np.cos(2 * g.thetas)),
                                    step=1e-4)
    assert abs(rhs) <= 1e-12
    assert abs(lhs) <= 1e-6


def test_variation_square_vs_facet_quadrature(circle512):
    sq = square_polygon(1.0)
    lhs, rhs, rel = variational_check(sq, lambda d: np.ones(len(d)), step=1e-4,
                                      grid=circle512)
    assert rel <= 1e-3
    exact = 4 * erf(1 / math.sqrt(2)) * math.exp(-0.5) / math.sqrt(2 * np.pi)
    assert rhs == pytest.approx(exact, rel=1e-9)


def test_variation_step_refinement():
    # the centered-difference component shrinks ~4x when the step halves
    g = make_circle_grid(2048)
    ball = derive_geometry(ball_support(g, 1.0))
    gfield = constant_field(g, 1.0)
    base = variational_check(ball, gfield, step=1e-4)[0]
    e1 = abs(variational_check(ball, gfield, step=2e-2)[0] - base)
    e2 = abs(variational_check(ball, gfield, step=1e-2)[0] - base)
    assert 3.5 <= e1 / e2 <= 4.5
