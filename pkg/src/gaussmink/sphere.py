"""Grids, sampled fields and finite-difference calculus on S^1 and S^2.

Two grids back everything else in the package:

* the unit circle with N equally spaced angles and trapezoidal (here:
  rectangle-rule, spectrally accurate) quadrature;
* a staggered latitude-longitude grid on the unit sphere whose latitudes sit
  at band midpoints, so neither pole is a node.  Latitude weights use the
  exact band integral of sin(theta), which keeps the total weight at 4*pi to
  rounding.

Derivatives are centered second order throughout.  The longitude direction is
periodic; latitude stencils close over the poles by pairing each longitude
with the one shifted by pi.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import FieldMismatchError, InvalidGridError

TWO_PI = 2.0 * np.pi


@lru_cache(maxsize=64)
def _shift_indices(grid: "SphericalGrid"):
    """Periodic neighbour index arrays for the circle stencils."""
    N = grid.thetas.size
    k = np.arange(N)
    ip = (k + 1) % N
    im = (k - 1) % N
    return ip, im


@dataclass(frozen=True, eq=False)
class SphericalGrid:
    """Quadrature grid on S^n (n = 1 or 2) with antipodal bookkeeping.

    Node storage is flat; on S^2 the order is latitude-major (all longitudes
    of the first latitude band, then the next band, ...).
    """

    dim: int
    thetas: np.ndarray          # S^1: node angles (N,); S^2: latitudes (N_lat,)
    phis: np.ndarray | None     # S^2: longitudes (N_lon,); None on S^1
    nodes: np.ndarray           # (M, dim+1) unit vectors
    weights: np.ndarray         # (M,) quadrature weights
    dtheta: float
    dphi: float | None
    antipode: np.ndarray        # (M,) index of the antipodal node

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    @property
    def shape(self) -> tuple:
        if self.dim == 1:
            return (self.thetas.size,)
        return (self.thetas.size, self.phis.size)

    @property
    def min_spacing(self) -> float:
        """Smallest physical distance between stencil neighbours."""
        if self.dim == 1:
            return self.dtheta
        return min(self.dtheta, self.dphi * float(np.sin(self.thetas[0])))

    def surface_area(self) -> float:
        return TWO_PI if self.dim == 1 else 2.0 * TWO_PI


def same_grid(a: SphericalGrid, b: SphericalGrid) -> bool:
    if a is b:
        return True
    if a.dim != b.dim or a.shape != b.shape:
        return False
    return bool(np.array_equal(a.thetas, b.thetas))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real values sampled at every node of a grid."""

    grid: SphericalGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.node_count,):
            raise FieldMismatchError(
                f"field has {vals.shape} values for {self.grid.node_count} nodes"
            )
        object.__setattr__(self, "values", vals)

    def values2d(self) -> np.ndarray:
        """Latitude-major view on S^2."""
        return self.values.reshape(self.grid.shape)


def make_circle_grid(N: int) -> SphericalGrid:
    """Uniform grid on S^1: theta_k = 2*pi*k/N, weight 2*pi/N each."""
    if N < 8 or N % 2 != 0:
        raise InvalidGridError(f"circle grid needs even N >= 8, got {N}")
    thetas = TWO_PI * np.arange(N) / N
    nodes = np.column_stack([np.cos(thetas), np.sin(thetas)])
    weights = np.full(N, TWO_PI / N)
    antipode = (np.arange(N) + N // 2) % N
    for arr in (thetas, nodes, weights, antipode):
        arr.flags.writeable = False
    return SphericalGrid(
        dim=1, thetas=thetas, phis=None, nodes=nodes, weights=weights,
        dtheta=TWO_PI / N, dphi=None, antipode=antipode,
    )


def make_latlon_grid(N_lat: int, N_lon: int) -> SphericalGrid:
    """Staggered latitude-longitude grid on S^2 (no node at either pole).

    theta_j = (j + 1/2)*pi/N_lat, phi_i = 2*pi*i/N_lon.  The latitude weight
    is the exact band integral of sin(theta), so the weights sum to 4*pi
    exactly; it differs from dtheta*sin(theta_j) by a uniform second-order
    factor.
    """
    if N_lat < 8 or N_lon < 16 or N_lon % 2 != 0:
        raise InvalidGridError(
            f"lat-lon grid needs N_lat >= 8 and even N_lon >= 16, got "
            f"({N_lat}, {N_lon})"
        )
    dtheta = np.pi / N_lat
    dphi = TWO_PI / N_lon
    thetas = (np.arange(N_lat) + 0.5) * dtheta
    phis = dphi * np.arange(N_lon)
    band = np.cos(thetas - 0.5 * dtheta) - np.cos(thetas + 0.5 * dtheta)
    th = np.repeat(thetas, N_lon)
    ph = np.tile(phis, N_lat)
    nodes = np.column_stack(
        [np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)]
    )
    weights = np.repeat(band, N_lon) * dphi
    j = np.repeat(np.arange(N_lat), N_lon)
    i = np.tile(np.arange(N_lon), N_lat)
    antipode = (N_lat - 1 - j) * N_lon + (i + N_lon // 2) % N_lon
    for arr in (thetas, phis, nodes, weights, antipode):
        arr.flags.writeable = False
    return SphericalGrid(
        dim=2, thetas=thetas, phis=phis, nodes=nodes, weights=weights,
        dtheta=dtheta, dphi=dphi, antipode=antipode,
    )


def sample(grid: SphericalGrid, fn) -> ScalarField:
    """Sample ``fn`` (mapping (M, d) node vectors to values) on the grid."""
    return ScalarField(grid, np.asarray(fn(grid.nodes), dtype=float))


def constant_field(grid: SphericalGrid, value: float) -> ScalarField:
    return ScalarField(grid, np.full(grid.node_count, float(value)))


# ---------------------------------------------------------------------------
# differential operators
# ---------------------------------------------------------------------------

def _pole_extend(grid: SphericalGrid, V: np.ndarray, depth: int = 1,
                 parity: float = 1.0) -> np.ndarray:
    """Add ghost latitude rows obtained by crossing the poles (phi -> phi+pi).

    Scalar fields continue evenly (parity +1); phi-frame vector components
    flip sign across a pole (parity -1).
    """
    half = grid.phis.size // 2
    top = [parity * np.roll(V[d], -half) for d in range(depth)]
    bottom = [parity * np.roll(V[-1 - d], -half) for d in range(depth)]
    return np.vstack(top[::-1] + [V] + bottom)


def _dtheta_1(grid, V, parity=1.0):
    E = _pole_extend(grid, V, parity=parity)
    return (E[2:] - E[:-2]) / (2.0 * grid.dtheta)


def _dtheta_2(grid, V):
    E = _pole_extend(grid, V)
    return (E[2:] - 2.0 * V + E[:-2]) / grid.dtheta**2


def _dtheta_1_o4(grid, V):
    E = _pole_extend(grid, V, depth=2)
    return (E[:-4] - 8.0 * E[1:-3] + 8.0 * E[3:-1] - E[4:]) / (12.0 * grid.dtheta)


def _dphi_1(grid, V):
    return (np.roll(V, -1, axis=1) - np.roll(V, 1, axis=1)) / (2.0 * grid.dphi)


def _dphi_2_o4(grid, V):
    return (
        -np.roll(V, 2, axis=1) + 16.0 * np.roll(V, 1, axis=1) - 30.0 * V
        + 16.0 * np.roll(V, -1, axis=1) - np.roll(V, -2, axis=1)
    ) / (12.0 * grid.dphi**2)


def grad(field: ScalarField) -> np.ndarray:
    """Covariant gradient in the orthonormal tangent frame, shape (M, dim).

    S^1: d/dtheta.  S^2: (d/dtheta, (1/sin theta) d/dphi).
    """
    grid = field.grid
    if grid.dim == 1:
        v = field.values
        ip, im = _shift_indices(grid)
        d = (v[ip] - v[im]) / (2.0 * grid.dtheta)
        return d[:, None]
    V = field.values2d()
    sin_t = np.sin(grid.thetas)[:, None]
    g_theta = _dtheta_1(grid, V)
    g_phi = _dphi_1(grid, V) / sin_t
    return np.stack([g_theta.ravel(), g_phi.ravel()], axis=1)


def covariant_hessian(field: ScalarField) -> np.ndarray:
    """Covariant Hessian in the orthonormal frame, shape (M, dim, dim).

    Near the poles the raw component formulas divide small differences by
    sin(theta), which would cost one order of accuracy on the first latitude
    band.  Two rearrangements keep the error second order uniformly: the
    mixed component is the theta-derivative of the phi-frame gradient
    component (odd across the poles), and the two 1/sin(theta)-amplified
    pieces of the phi-phi component use fourth-order centered stencils.
    """
    grid = field.grid
    if grid.dim == 1:
        v = field.values
        ip, im = _shift_indices(grid)
        d2 = (v[ip] - 2.0 * v + v[im]) / grid.dtheta**2
        return d2[:, None, None]
    V = field.values2d()
    sin_t = np.sin(grid.thetas)[:, None]
    cot_t = (np.cos(grid.thetas) / np.sin(grid.thetas))[:, None]
    h_tt = _dtheta_2(grid, V)
    u = _dphi_1(grid, V) / sin_t                      # phi-frame gradient component
    h_tp = _dtheta_1(grid, u, parity=-1.0)
    h_pp = _dphi_2_o4(grid, V) / sin_t**2 + cot_t * _dtheta_1_o4(grid, V)
    M = grid.node_count
    out = np.empty((M, 2, 2))
    out[:, 0, 0] = h_tt.ravel()
    out[:, 0, 1] = out[:, 1, 0] = h_tp.ravel()
    out[:, 1, 1] = h_pp.ravel()
    return out


def integrate(field: ScalarField) -> float:
    """Quadrature of the field over its sphere."""
    return float(np.dot(field.values, field.grid.weights))


def is_even(field: ScalarField, tol: float = 1e-12) -> bool:
    """True when the field agrees with itself at antipodal nodes."""
    v = field.values
    scale = max(1.0, float(np.max(np.abs(v))))
    return float(np.max(np.abs(v - v[field.grid.antipode]))) <= tol * scale


def symmetrize(field: ScalarField) -> ScalarField:
    """Antipodal average; removes rounding-level asymmetry of even fields."""
    v = field.values
    return ScalarField(field.grid, 0.5 * (v + v[field.grid.antipode]))


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return f"{x:.17g}"


def field_to_csv(field: ScalarField, path) -> None:
    """Write ``theta[,phi],value`` rows (radians, grid-canonical order)."""
    grid = field.grid
    lines = []
    if grid.dim == 1:
        lines.append("theta,value")
        for t, v in zip(grid.thetas, field.values):
            lines.append(f"{_fmt(t)},{_fmt(v)}")
    else:
        lines.append("theta,phi,value")
        V = field.values2d()
        for j, t in enumerate(grid.thetas):
            for i, p in enumerate(grid.phis):
                lines.append(f"{_fmt(t)},{_fmt(p)},{_fmt(V[j, i])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def field_from_csv(path, grid: SphericalGrid | None = None) -> ScalarField:
    """Parse the CSV written by :func:`field_to_csv`.

    When no grid is supplied, one is reconstructed from the coordinates and
    checked against them.
    """
    with open(path) as fh:
        header = fh.readline().strip()
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if header == "theta,value":
        thetas = np.array([float(r[0]) for r in rows])
        values = np.array([float(r[1]) for r in rows])
        if grid is None:
            grid = make_circle_grid(len(rows))
        if grid.dim != 1 or not np.allclose(grid.thetas, thetas, atol=1e-9):
            raise FieldMismatchError(f"circle coordinates in {path} do not match grid")
    elif header == "theta,phi,value":
        thetas = np.array([float(r[0]) for r in rows])
        phis = np.array([float(r[1]) for r in rows])
        values = np.array([float(r[2]) for r in rows])
        n_lat = np.unique(np.round(thetas, 12)).size
        n_lon = np.unique(np.round(phis, 12)).size
        if grid is None:
            grid = make_latlon_grid(n_lat, n_lon)
        expect_t = np.repeat(grid.thetas, grid.phis.size)
        expect_p = np.tile(grid.phis, grid.thetas.size)
        if (grid.dim != 2
                or not np.allclose(expect_t, thetas, atol=1e-9)
                or not np.allclose(expect_p, phis, atol=1e-9)):
            raise FieldMismatchError(f"lat-lon coordinates in {path} do not match grid")
    else:
        raise FieldMismatchError(f"unrecognized field CSV header: {header!r}")
    return ScalarField(grid, values)
