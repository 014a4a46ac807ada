import numpy as np
import pytest

from gaussmink import (
    InvalidGridError,
    ScalarField,
    constant_field,
    covariant_hessian,
    field_from_csv,
    field_to_csv,
    grad,
    integrate,
    make_circle_grid,
    make_latlon_grid,
    sample,
)
from gaussmink.sphere import is_even, symmetrize


# ---------------------------------------------------------------------------
# grid construction
# ---------------------------------------------------------------------------

def test_circle_grid_nodes_and_weights():
    g = make_circle_grid(8)
    assert np.allclose(g.thetas, np.pi / 4 * np.arange(8))
    assert np.allclose(g.weights, np.pi / 4)


def test_circle_weight_sum():
    g = make_circle_grid(512)
    assert abs(np.sum(g.weights) - 2 * np.pi) <= 1e-12 * 2 * np.pi


@pytest.mark.parametrize("N", [5, 6, 9, 0])
def test_circle_grid_rejects_bad_sizes(N):
    with pytest.raises(InvalidGridError):
        make_circle_grid(N)


def test_latlon_weight_sums():
    for nlat, nlon, tol in [(8, 16, 1e-3), (64, 128, 1e-5)]:
        g = make_latlon_grid(nlat, nlon)
        assert abs(np.sum(g.weights) - 4 * np.pi) <= tol * 4 * np.pi


def test_latlon_no_pole_nodes():
    g = make_latlon_grid(8, 16)
    assert np.max(np.abs(g.nodes[:, 2])) < 1.0


@pytest.mark.parametrize("nlat,nlon", [(7, 16), (8, 15), (8, 17), (8, 8)])
def test_latlon_rejects_bad_sizes(nlat, nlon):
    with pytest.raises(InvalidGridError):
        make_latlon_grid(nlat, nlon)


@pytest.mark.parametrize("maker", [lambda: make_circle_grid(64),
                                   lambda: make_latlon_grid(8, 16)])
def test_nodes_are_unit_and_antipodal_map_is_exact(maker):
    g = maker()
    assert np.max(np.abs(np.linalg.norm(g.nodes, axis=1) - 1.0)) <= 1e-14
    assert np.allclose(g.nodes[g.antipode], -g.nodes, atol=1e-14)


# ---------------------------------------------------------------------------
# differential operators
# ---------------------------------------------------------------------------

def test_operators_annihilate_constants():
    for g in (make_circle_grid(64), make_latlon_grid(8, 16)):
        c = constant_field(g, 3.7)
        assert np.max(np.abs(grad(c))) <= 1e-13
        assert np.max(np.abs(covariant_hessian(c))) <= 1e-12


def test_circle_gradient_of_cos(circle512):
    g = circle512
    f = ScalarField(g, np.cos(g.thetas))
    d = grad(f)[:, 0]
    exact = -np.sin(g.thetas)
    assert abs(d[0]) <= 1e-12
    k = np.argmin(np.abs(g.thetas - np.pi / 2))
    assert abs(d[k] + 1.0) <= g.dtheta**2
    assert np.max(np.abs(d - exact)) <= g.dtheta**2


def test_circle_gradient_perturbed_ball_at_zero(circle512):
    g = circle512
    f = ScalarField(g, 1 + 0.1 * np.cos(2 * g.thetas))
    assert abs(grad(f)[0, 0]) <= 1e-12


def test_circle_hessian_perturbed_ball_at_zero(circle512):
    g = circle512
    f = ScalarField(g, 1 + 0.1 * np.cos(2 * g.thetas))
    h2 = covariant_hessian(f)[0, 0, 0]
    assert abs(h2 + 0.4) <= 2 * g.dtheta**2


def test_sphere_first_harmonic_hessian():
    g = make_latlon_grid(32, 64)
    h = sample(g, lambda x: x[:, 2])
    hess = covariant_hessian(h)
    b = hess + h.values[:, None, None] * np.eye(2)[None, :, :]
    assert np.max(np.abs(b)) <= 5 * g.dtheta**2


def _field_exp_dot(g, a):
    return sample(g, lambda x: np.exp(x @ a))


def _exact_grad_exp_dot(g, a):
    from gaussmink.body import tangent_frame

    vals = np.exp(g.nodes @ a)
    frame = tangent_frame(g)
    return np.stack([vals * (e @ a) for e in frame], axis=1)


def _exact_hess_exp_dot(g, a):
    from gaussmink.body import tangent_frame

    f = g.nodes @ a
    vals = np.exp(f)
    frame = tangent_frame(g)
    fi = np.stack([e @ a for e in frame], axis=1)
    n = g.dim
    outer = fi[:, :, None] * fi[:, None, :]
    return vals[:, None, None] * (outer - f[:, None, None] * np.eye(n)[None, :, :])


@pytest.mark.parametrize("sizes", [((256,), (512,)), ((16, 32), (32, 64))])
def test_second_order_convergence(sizes):
    a = np.array([0.3, -0.2, 0.5])
    coarse, fine = sizes
    errs = []
    for size in (coarse, fine):
        g = make_circle_grid(*size) if len(size) == 1 else make_latlon_grid(*size)
        aa = a[: g.nodes.shape[1]]
        h = _field_exp_dot(g, aa)
        eg = np.max(np.abs(grad(h) - _exact_grad_exp_dot(g, aa)))
        eh = np.max(np.abs(covariant_hessian(h) - _exact_hess_exp_dot(g, aa)))
        errs.append((eg, eh))
    for i in range(2):
        ratio = errs[0][i] / errs[1][i]
        assert 3.5 <= ratio <= 4.5, f"convergence ratio {ratio}"


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

def test_integrate_circle():
    g = make_circle_grid(128)
    assert integrate(constant_field(g, 1.0)) == pytest.approx(2 * np.pi, abs=1e-13)
    cos2 = ScalarField(g, np.cos(g.thetas) ** 2)
    assert abs(integrate(cos2) - np.pi) <= 1e-12
    first = ScalarField(g, np.cos(g.thetas))
    assert abs(integrate(first)) <= 1e-13


def test_integrate_sphere():
    g = make_latlon_grid(64, 128)
    assert abs(integrate(constant_field(g, 1.0)) - 4 * np.pi) <= 1e-5 * 4 * np.pi
    harm = sample(g, lambda x: x[:, 2])
    assert abs(integrate(harm)) <= 1e-12
    harm2 = sample(g, lambda x: x[:, 0])
    assert abs(integrate(harm2)) <= 1e-12


# ---------------------------------------------------------------------------
# fields, symmetry, serialization
# ---------------------------------------------------------------------------

def test_field_length_mismatch():
    from gaussmink import FieldMismatchError

    g = make_circle_grid(16)
    with pytest.raises(FieldMismatchError):
        ScalarField(g, np.ones(17))


def test_even_detection_and_projection(circle128):
    g = circle128
    even = ScalarField(g, 1 + 0.3 * np.cos(2 * g.thetas))
    odd = ScalarField(g, 1 + 0.3 * np.cos(3 * g.thetas))
    assert is_even(even)
    assert not is_even(odd)
    assert is_even(symmetrize(odd))


@pytest.mark.parametrize("gridmaker", [lambda: make_circle_grid(32),
                                       lambda: make_latlon_grid(8, 16)])
def test_csv_round_trip(tmp_path, gridmaker):
    g = gridmaker()
    f = sample(g, lambda x: 1.0 + 0.25 * x[:, 0] + 0.1 * x[:, 1] ** 2)
    path = tmp_path / "field.csv"
    field_to_csv(f, path)
    back = field_from_csv(path)
    assert back.grid.dim == g.dim
    assert np.array_equal(back.values, f.values)
    back2 = field_from_csv(path, g)
    assert np.array_equal(back2.values, f.values)
