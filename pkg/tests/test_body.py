import json

import numpy as np
import pytest

from gaussmink import (
    InvalidBodyError,
    ScalarField,
    ball_support,
    check_uniform_convexity,
    derive_geometry,
    dual_identity_residual,
    ellipse_support,
    make_circle_grid,
    make_latlon_grid,
    perturbed_ball_support,
    polar_dual,
    radial_curvature,
    support_to_radial,
    wulff_support,
)
from gaussmink.body import body_to_json_dict, boundary_curve, periodic_spline, wulff_polytope


def test_ball_geometry_circle(circle512):
    R = 1.7
    geom = derive_geometry(ball_support(circle512, R))
    assert np.allclose(geom.det_b, R, atol=1e-11)
    assert np.allclose(geom.gauss_K, 1 / R, atol=1e-11)
    assert np.allclose(geom.radial_r, R, atol=1e-12)
    assert np.allclose(geom.boundary, R * circle512.nodes, atol=1e-12)


def test_ball_geometry_sphere():
    g = make_latlon_grid(16, 32)
    R = 0.8
    geom = derive_geometry(ball_support(g, R))
    assert np.allclose(geom.det_b, R**2, atol=1e-10)
    assert np.allclose(geom.gauss_K, 1 / R**2, atol=1e-10)
    assert np.allclose(geom.min_eig_b, R, atol=1e-10)


def test_perturbed_ball_curvature(circle512):
    geom = derive_geometry(perturbed_ball_support(circle512, 1.0, 0.1, 2))
    assert geom.b[0, 0, 0] == pytest.approx(0.7, abs=1e-4)
    assert geom.gauss_K[0] == pytest.approx(1 / 0.7, abs=1e-3)


def test_curvature_det_identity(circle512):
    for h in (perturbed_ball_support(circle512, 1.0, 0.1, 2),
              ellipse_support(circle512, 1.3, 0.9)):
        geom = derive_geometry(h)
        assert np.allclose(geom.gauss_K * geom.det_b, 1.0, atol=1e-12)


def test_radial_dominates_support(circle512):
    geom = derive_geometry(perturbed_ball_support(circle512, 1.0, 0.1, 2))
    assert np.all(geom.radial_r >= geom.h.values - 1e-14)
    flat = np.abs(geom.grad_h[:, 0]) < 1e-12
    assert np.allclose(geom.radial_r[flat], geom.h.values[flat], atol=1e-12)


def test_radial_extrema_match_support(circle512):
    geom = derive_geometry(perturbed_ball_support(circle512, 1.0, 0.1, 2))
    rb = support_to_radial(geom)
    assert np.max(rb.r.values) == pytest.approx(np.max(geom.h.values), abs=1e-6)
    assert np.min(rb.r.values) == pytest.approx(np.min(geom.h.values), abs=1e-6)
    assert np.all(rb.v_factor >= 1.0)


def test_nonpositive_support_rejected(circle128):
    with pytest.raises(InvalidBodyError):
        derive_geometry(ScalarField(circle128, 1 + 1.5 * np.cos(circle128.thetas)))


def test_convexity_reports(circle512):
    ball = derive_geometry(ball_support(circle512, 1.0))
    rep = check_uniform_convexity(ball, 1e-8)
    assert rep.uniformly_convex and rep.min_value == pytest.approx(1.0, abs=1e-11)

    mild = derive_geometry(perturbed_ball_support(circle512, 1.0, 0.1, 2))
    rep = check_uniform_convexity(mild, 1e-8)
    assert rep.uniformly_convex
    assert rep.min_value == pytest.approx(0.7, abs=1e-4)
    theta_min = circle512.thetas[rep.node]
    assert min(theta_min % np.pi, np.pi - theta_min % np.pi) <= circle512.dtheta

    wild = derive_geometry(perturbed_ball_support(circle512, 1.0, 0.6, 2))
    assert not check_uniform_convexity(wild, 1e-8).uniformly_convex


def test_support_to_radial_ball(circle128):
    geom = derive_geometry(ball_support(circle128, 2.5))
    rb = support_to_radial(geom)
    assert np.allclose(rb.r.values, 2.5, atol=1e-12)
    assert np.allclose(rb.v_factor, 1.0, atol=1e-12)


def test_support_to_radial_ellipse(circle512):
    geom = derive_geometry(ellipse_support(circle512, 2.0, 1.0))
    rb = support_to_radial(geom)
    assert rb.r.values[0] == pytest.approx(2.0, abs=1e-3)
    k90 = np.argmin(np.abs(circle512.thetas - np.pi / 2))
    assert rb.r.values[k90] == pytest.approx(1.0, abs=1e-3)
    # radial function of the ellipse: 1/r^2 = cos^2/a^2 + sin^2/b^2
    t = circle512.thetas
    exact = 1.0 / np.sqrt(np.cos(t) ** 2 / 4.0 + np.sin(t) ** 2)
    assert np.max(np.abs(rb.r.values - exact)) <= 1e-3


def test_support_to_radial_rejects_nonconvex(circle512):
    h = perturbed_ball_support(circle512, 1.0, 0.6, 2)
    geom = derive_geometry(h)
    with pytest.raises(InvalidBodyError):
        support_to_radial(geom)


def test_support_to_radial_sphere_ball():
    g = make_latlon_grid(16, 32)
    geom = derive_geometry(ball_support(g, 1.3))
    rb = support_to_radial(geom)
    assert np.allclose(rb.r.values, 1.3, atol=1e-10)


def test_polar_dual_ball(circle128):
    geom = derive_geometry(ball_support(circle128, 2.0))
    assert np.allclose(polar_dual(geom).values, 0.5, atol=1e-12)


def test_polar_dual_involution(circle512):
    h = perturbed_ball_support(circle512, 1.0, 0.1, 2)
    geom = derive_geometry(h)
    hdd = polar_dual(derive_geometry(polar_dual(geom)))
    assert np.max(np.abs(hdd.values - h.values)) <= 2e-3


def test_polar_dual_ellipse(circle512):
    geom = derive_geometry(ellipse_support(circle512, 2.0, 1.0))
    hstar = polar_dual(geom)
    assert hstar.values[0] == pytest.approx(0.5, abs=1e-3)


def test_dual_identity_residual(circle512):
    ball = derive_geometry(ball_support(circle512, 1.0))
    assert dual_identity_residual(ball) <= 1e-10
    for h in (perturbed_ball_support(circle512, 1.0, 0.1, 2),
              ScalarField(circle512, 1 + 0.05 * np.cos(3 * circle512.thetas))):
        assert dual_identity_residual(derive_geometry(h)) <= 1e-3


def test_radial_curvature_formula_consistency(circle512):
    # curvature from the radial representation against the support-side value
    # transported through the normal-to-direction map
    geom = derive_geometry(perturbed_ball_support(circle512, 1.0, 0.1, 2))
    rb = support_to_radial(geom)
    K_rad = radial_curvature(rb)
    y = geom.boundary
    xi = np.unwrap(np.arctan2(y[:, 1], y[:, 0]))
    K_sup_at = periodic_spline(xi, geom.gauss_K)
    t0 = xi[0]
    K_ref = K_sup_at(t0 + (circle512.thetas - t0) % (2 * np.pi))
    assert np.max(np.abs(K_rad - K_ref)) <= 5e-3


def test_radial_curvature_sphere_ball():
    g = make_latlon_grid(16, 32)
    geom = derive_geometry(ball_support(g, 1.4))
    rb = support_to_radial(geom)
    assert np.allclose(radial_curvature(rb), 1 / 1.4**2, atol=1e-9)


# ---------------------------------------------------------------------------
# Wulff shapes
# ---------------------------------------------------------------------------

def test_wulff_of_support_function_is_identity(circle512):
    z = perturbed_ball_support(circle512, 1.0, 0.1, 2)
    hz = wulff_support(z)
    assert np.max(np.abs(hz.values - z.values)) <= 1e-12


def test_wulff_convexifies(circle512):
    z = ScalarField(circle512, 1 + 0.6 * np.cos(2 * circle512.thetas))
    hz = wulff_support(z)
    assert np.all(hz.values <= z.values + 1e-12)
    assert np.any(hz.values < z.values - 1e-3)


def test_wulff_ball(circle128):
    z = ball_support(circle128, 2.0)
    assert np.allclose(wulff_support(z).values, 2.0, atol=1e-12)


def test_wulff_idempotent(circle512):
    z = ScalarField(circle512, 1 + 0.6 * np.cos(2 * circle512.thetas))
    h1 = wulff_support(z)
    h2 = wulff_support(h1)
    assert np.max(np.abs(h2.values - h1.values)) <= 1e-12


def test_wulff_sphere():
    g = make_latlon_grid(8, 16)
    z = ball_support(g, 1.5)
    hz = wulff_support(z)
    assert np.allclose(hz.values, 1.5, atol=1e-12)
    poly = wulff_polytope(z)
    assert poly.contains(np.zeros((1, 3)))[0]


def test_wulff_rejects_nonpositive(circle128):
    with pytest.raises(InvalidBodyError):
        wulff_support(ScalarField(circle128, np.full(128, -1.0)))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def test_body_json_dict(circle128):
    geom = derive_geometry(ball_support(circle128, 1.0))
    obj = body_to_json_dict(geom)
    assert obj["dim"] == 1 and obj["grid"]["N"] == 128
    assert len(obj["h"]) == 128 and len(obj["K"]) == 128
    json.dumps(obj)


def test_boundary_curve_closes(circle128):
    geom = derive_geometry(ellipse_support(circle128, 1.2, 0.8))
    curve = boundary_curve(geom)
    assert curve.shape == (129, 2)
    assert np.allclose(curve[0], curve[-1])
