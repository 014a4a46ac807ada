"""Explicit time integration of the Gaussian Gauss-curvature flows.

The support function evolves by

    dh/dt = -Theta * e^{r^2/2} * K * h^p * f + h,

where Theta is either recomputed from the current state every step (the
volume-conserving, "normalized" mode) or frozen at (2*pi)^{(n+1)/2}
("unnormalized" mode), whose fixed points solve the stationary measure
equation.  Steps are explicit (Euler or Heun) with a parabolic step-size
bound derived from the linearized diffusion coefficient; convexity is a hard
invariant and its loss is an error, never silently repaired.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import sphere
from .body import BodyGeometry, RadialBody, derive_geometry, polar_dual, support_to_radial, tangent_frame
from .errors import (
    ConvexityLossError,
    FieldMismatchError,
    InvalidBodyError,
    RejectedInputError,
)
from .measure import (
    FunctionalRecord,
    GaussDensityContext,
    _density_values,
    functionals_from_radial,
    gaussian_volume,
)
from .sphere import ScalarField

TWO_PI = 2.0 * np.pi

MODE_NORMALIZED = "normalized"
MODE_UNNORMALIZED = "unnormalized"


@dataclass
class FlowConfig:
    p: float
    f: ScalarField
    mode: str = MODE_UNNORMALIZED
    dt_cfl: float = 0.2
    dt_max: float = 1e-2
    eps_convex: float = 1e-8
    tol_stop: float = 1e-6
    max_steps: int = 200_000
    scheme: str = "euler"
    record_every: int = 50

    def __post_init__(self):
        if self.mode not in (MODE_NORMALIZED, MODE_UNNORMALIZED):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.scheme not in ("euler", "heun"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if not 0.0 < self.dt_cfl < 1.0:
            raise ValueError("dt_cfl must lie in (0, 1)")
        if self.tol_stop <= 0 or self.dt_max <= 0 or self.eps_convex <= 0:
            raise ValueError("tolerances and step bounds must be positive")
        if self.record_every < 1 or self.max_steps < 1:
            raise ValueError("record_every and max_steps must be >= 1")
        if np.any(self.f.values <= 0):
            raise ValueError("prescribed density f must be positive")

    def requires_symmetry(self, n: int) -> bool:
        if self.mode == MODE_NORMALIZED:
            return self.p <= 0
        return 0.0 < self.p < n + 1


@dataclass
class FlowState:
    t: float
    h: ScalarField
    geom: BodyGeometry
    steps: int = 0
    dt_last: float = 0.0
    theta_last: float = math.nan
    _rb: RadialBody | None = None

    def radial(self) -> RadialBody:
        if self._rb is None:
            self._rb = support_to_radial(self.geom)
        return self._rb


@dataclass
class DiagRecord:
    step_index: int
    t: float
    dt: float
    record: FunctionalRecord
    min_eig_b: float
    grad_logr_max: float


@dataclass
class FlowDiagnostics:
    records: list[DiagRecord] = field(default_factory=list)
    status: str = "max_steps"

    def times(self) -> np.ndarray:
        return np.array([r.t for r in self.records])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(r.record, name) for r in self.records])

    def to_csv(self, path) -> None:
        cols = ("t", "gamma", "psi", "phi", "theta", "residual_stationary",
                "residual_normalized", "min_eig_b")
        lines = [",".join(cols)]
        for r in self.records:
            rec = r.record
            row = (r.t, rec.gamma, rec.psi, rec.phi, rec.theta,
                   rec.residual_stationary, rec.residual_normalized, r.min_eig_b)
            lines.append(",".join(f"{x:.17g}" for x in row))
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def theta_constant(n: int) -> float:
    """The frozen normalization (2*pi)^{(n+1)/2} of the unnormalized flow."""
    return TWO_PI ** ((n + 1) / 2.0)


def _theta_of(geom: BodyGeometry, rb: RadialBody, f: ScalarField, p: float) -> float:
    """Conserving normalization: both integrals share the grid quadrature."""
    grid = geom.grid
    n = grid.dim
    rho = rb.r.values
    num = float(np.dot(grid.weights, np.exp(-0.5 * rho**2) * rho ** (n + 1)))
    den = float(np.dot(grid.weights, geom.h.values**p * f.values))
    return num / den


def _speed(geom: BodyGeometry, f_vals: np.ndarray, p: float, theta: float) -> np.ndarray:
    h = geom.h.values
    G = theta * np.exp(0.5 * geom.radial_r**2) * geom.gauss_K * h**p * f_vals
    return h - G


def _cfl_dt(geom: BodyGeometry, f_vals: np.ndarray, p: float, theta: float,
            cfg: FlowConfig) -> float:
    """Parabolic bound dt <= c * dx^2 / (linearized diffusion coefficient)."""
    grid = geom.grid
    n = grid.dim
    h = geom.h.values
    coef = geom.det_b**2 / (
        theta * np.exp(0.5 * geom.radial_r**2) * f_vals * h**p
        * (n * geom.max_eig_b ** (n - 1))
    )
    return min(cfg.dt_max, cfg.dt_cfl * grid.min_spacing**2 * float(np.min(coef)))


def _theta_for(geom: BodyGeometry, rb: RadialBody | None, cfg: FlowConfig) -> float:
    if cfg.mode == MODE_UNNORMALIZED:
        return theta_constant(geom.grid.dim)
    if rb is None:
        rb = support_to_radial(geom)
    return _theta_of(geom, rb, cfg.f, cfg.p)


def _speed_and_dt(geom: BodyGeometry, f_vals: np.ndarray, p: float, theta: float,
                  cfg: FlowConfig):
    """Speed field and parabolic step bound, sharing the common factors."""
    grid = geom.grid
    n = grid.dim
    h = geom.h.values
    drive = theta * np.exp(0.5 * geom.radial_r**2) * f_vals * h**p
    F = h - drive * geom.gauss_K
    denom = drive if n == 1 else drive * (n * geom.max_eig_b ** (n - 1))
    coef = geom.det_b**2 / denom
    dt = min(cfg.dt_max, cfg.dt_cfl * grid.min_spacing**2 * float(coef.min()))
    return F, dt


def step(state: FlowState, cfg: FlowConfig, symmetric: bool = False) -> FlowState:
    """Advance one accepted step; halves dt up to 20 times on convexity loss."""
    geom = state.geom
    f_vals = cfg.f.values
    theta = _theta_for(geom, state._rb, cfg)
    F0, dt = _speed_and_dt(geom, f_vals, cfg.p, theta, cfg)
    worst_node = None
    for _ in range(21):
        try:
            if cfg.scheme == "euler":
                h_new = state.h.values + dt * F0
            else:
                h_pred = state.h.values + dt * F0
                if np.any(h_pred <= 0):
                    raise InvalidBodyError("predictor left the positive cone")
                geom_pred = derive_geometry(ScalarField(geom.grid, h_pred))
                if float(np.min(geom_pred.min_eig_b)) <= cfg.eps_convex:
                    worst_node = int(np.argmin(geom_pred.min_eig_b))
                    raise InvalidBodyError("predictor lost convexity")
                theta_pred = _theta_for(geom_pred, None, cfg)
                F1 = _speed(geom_pred, f_vals, cfg.p, theta_pred)
                h_new = state.h.values + 0.5 * dt * (F0 + F1)
            if symmetric:
                h_new = 0.5 * (h_new + h_new[geom.grid.antipode])
            if np.any(h_new <= 0):
                worst_node = int(np.argmin(h_new))
                raise InvalidBodyError("step left the positive cone")
            geom_new = derive_geometry(ScalarField(geom.grid, h_new))
            m = float(np.min(geom_new.min_eig_b))
            if m <= cfg.eps_convex:
                worst_node = int(np.argmin(geom_new.min_eig_b))
                raise InvalidBodyError("step lost uniform convexity")
        except InvalidBodyError:
            dt *= 0.5
            continue
        return FlowState(
            t=state.t + dt, h=geom_new.h, geom=geom_new,
            steps=state.steps + 1, dt_last=dt, theta_last=theta,
        )
    raise ConvexityLossError(
        f"convexity lost at t = {state.t:.6g} despite 20 step halvings",
        node=worst_node, time=state.t,
    )


def _make_record(state: FlowState, cfg: FlowConfig) -> DiagRecord:
    rb = state.radial()
    rec = functionals_from_radial(state.geom, rb, cfg.f, cfg.p)
    grad_logr = float(np.max(np.linalg.norm(rb.grad_r, axis=1) / rb.r.values))
    return DiagRecord(
        step_index=state.steps, t=state.t, dt=state.dt_last, record=rec,
        min_eig_b=float(np.min(state.geom.min_eig_b)), grad_logr_max=grad_logr,
    )


def _stop_residual(state: FlowState, cfg: FlowConfig) -> float:
    """Mode-appropriate relative sup-norm residual of the current state."""
    dens = _density_values(state.geom, cfg.p)
    fv = cfg.f.values
    fmax = float(np.max(fv))
    if cfg.mode == MODE_UNNORMALIZED:
        return float(np.max(np.abs(dens - fv))) / fmax
    theta = _theta_for(state.geom, state.radial(), cfg)
    scale = (1.0 / theta) / GaussDensityContext.for_dim(state.geom.grid.dim).norm_const
    return float(np.max(np.abs(scale * dens - fv))) / fmax


def run(h0: ScalarField, cfg: FlowConfig):
    """Iterate the flow until the residual drops below tol_stop.

    Returns (final FlowState, FlowDiagnostics).  Inputs are validated against
    every hypothesis the requested regime needs: uniform convexity, evenness
    in the symmetric regimes, and for 0 < p < n+1 in unnormalized mode the
    initial-volume admission inequality
    gamma(Omega_0) > (1/p) * integral of f h_0^p.
    """
    if not sphere.same_grid(h0.grid, cfg.f.grid):
        raise FieldMismatchError("h0 and f must share one grid")
    geom0 = derive_geometry(h0)
    n = h0.grid.dim
    if float(np.min(geom0.min_eig_b)) <= cfg.eps_convex:
        raise InvalidBodyError("initial body is not uniformly convex")
    symmetric = cfg.requires_symmetry(n)
    if symmetric:
        if not sphere.is_even(h0) or not sphere.is_even(cfg.f):
            raise RejectedInputError(
                "this regime requires origin symmetry: h0 and f must be even"
            )
    if cfg.mode == MODE_UNNORMALIZED and 0.0 < cfg.p < n + 1:
        gamma0 = gaussian_volume(geom0)
        psi0 = float(np.dot(h0.grid.weights, cfg.f.values * h0.values**cfg.p)) / cfg.p
        if not gamma0 > psi0:
            raise RejectedInputError(
                f"admission inequality fails: gamma(Omega_0) = {gamma0:.6g} "
                f"<= (1/p) int f h^p = {psi0:.6g}"
            )

    state = FlowState(t=0.0, h=h0, geom=geom0)
    diag = FlowDiagnostics()
    while True:
        if state.steps % cfg.record_every == 0:
            diag.records.append(_make_record(state, cfg))
        residual = _stop_residual(state, cfg)
        if residual <= cfg.tol_stop:
            diag.status = "converged"
            break
        if state.steps >= cfg.max_steps:
            diag.status = "max_steps"
            break
        state = step(state, cfg, symmetric=symmetric)
    if diag.records[-1].step_index != state.steps:
        diag.records.append(_make_record(state, cfg))
    return state, diag


# ---------------------------------------------------------------------------
# diagnostics of completed runs
# ---------------------------------------------------------------------------

@dataclass
class MonotonicityReport:
    quantity: str
    max_increment_rate: float   # largest positive increment per unit time
    at_time: float
    flagged: bool


def monotonicity_audit(diag: FlowDiagnostics, mode: str,
                       budget: float = 1e-8) -> MonotonicityReport:
    """Largest positive per-unit-time increment of the descent quantity.

    Normalized runs must not increase psi, unnormalized runs must not
    increase phi; anything above ``budget`` is flagged.
    """
    name = "psi" if mode == MODE_NORMALIZED else "phi"
    t = diag.times()
    v = diag.series(name)
    worst = 0.0
    at = t[0] if len(t) else 0.0
    for k in range(len(t) - 1):
        dt = t[k + 1] - t[k]
        if dt <= 0:
            continue
        rate = (v[k + 1] - v[k]) / dt
        if rate > worst:
            worst = rate
            at = t[k + 1]
    return MonotonicityReport(
        quantity=name, max_increment_rate=float(worst), at_time=float(at),
        flagged=worst > budget,
    )


@dataclass
class DecayMonitor:
    times: np.ndarray
    values: np.ndarray          # max |grad log r| per record
    rate: float                 # fitted decay rate (positive = decaying)
    r_squared: float
    fit_residual: float
    degenerate: bool


def decay_monitor(diag: FlowDiagnostics) -> DecayMonitor:
    """Log-linear fit of max |grad log r| over the series' second half."""
    if len(diag.records) < 10:
        raise ValueError("decay fit needs at least 10 records")
    t = diag.times()
    v = np.array([r.grad_logr_max for r in diag.records])
    if float(np.max(v)) <= 1e-12:
        return DecayMonitor(times=t, values=v, rate=0.0, r_squared=1.0,
                            fit_residual=0.0, degenerate=True)
    mask = (t >= 0.5 * (t[0] + t[-1])) & (v > 1e-13)
    if np.count_nonzero(mask) < 3:
        raise ValueError("too few usable records in the series' second half")
    tt = t[mask]
    log_v = np.log(v[mask])
    slope, intercept = np.polyfit(tt, log_v, 1)
    fit = slope * tt + intercept
    ss_res = float(np.sum((log_v - fit) ** 2))
    ss_tot = float(np.sum((log_v - log_v.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayMonitor(
        times=t, values=v, rate=float(-slope), r_squared=r2,
        fit_residual=math.sqrt(ss_res / np.count_nonzero(mask)),
        degenerate=False,
    )


# ---------------------------------------------------------------------------
# polar-dual cross-check
# ---------------------------------------------------------------------------

def dual_flow_crosscheck(h0: ScalarField, cfg: FlowConfig, T: float = 0.1,
                         f_fn=None) -> float:
    """Evolve the body and, independently, its polar dual; compare at time T.

    The dual support function satisfies

        dh*/dt = psi(t, xi, h*, grad h*) det(Hess h* + h* I) - h*,
        psi = Theta f(nu) (h*)^{n+3} e^{1/(2 h*^2)} / (h*^2+|grad h*|^2)^{(n+p+1)/2},

    driven by the same Theta(t) sequence as the primal run.  Returns the
    sup-distance between the dual of the evolved body and the evolved dual.
    """
    grid = h0.grid
    if grid.dim != 1:
        raise ValueError("the dual-flow cross-check is implemented on S^1")
    if cfg.mode != MODE_NORMALIZED:
        raise ValueError("the dual-flow cross-check runs in normalized mode")
    if f_fn is None:
        fv = cfg.f.values
        if float(np.ptp(fv)) > 1e-14 * max(1.0, float(np.max(np.abs(fv)))):
            raise ValueError("non-constant f needs an explicit f_fn(directions)")
        const = float(fv[0])
        f_fn = lambda dirs: np.full(len(dirs), const)

    n = grid.dim
    symmetric = cfg.requires_symmetry(n)
    geom = derive_geometry(h0)
    if float(np.min(geom.min_eig_b)) <= cfg.eps_convex:
        raise InvalidBodyError("initial body is not uniformly convex")

    # primal run with a fixed horizon, recording the (theta, dt) sequence
    schedule = []
    state = FlowState(t=0.0, h=h0, geom=geom)
    while state.t < T - 1e-15:
        theta = _theta_for(state.geom, state._rb, cfg)
        F, dt = _speed_and_dt(state.geom, cfg.f.values, cfg.p, theta, cfg)
        dt = min(dt, T - state.t)
        h_new = state.h.values + dt * F
        if symmetric:
            h_new = 0.5 * (h_new + h_new[grid.antipode])
        if np.any(h_new <= 0):
            raise ConvexityLossError("primal flow left the positive cone",
                                     node=int(np.argmin(h_new)), time=state.t)
        geom_new = derive_geometry(ScalarField(grid, h_new))
        if float(np.min(geom_new.min_eig_b)) <= cfg.eps_convex:
            raise ConvexityLossError("primal flow lost convexity",
                                     node=int(np.argmin(geom_new.min_eig_b)),
                                     time=state.t)
        schedule.append((theta, dt))
        state = FlowState(t=state.t + dt, h=geom_new.h, geom=geom_new,
                          steps=state.steps + 1, dt_last=dt, theta_last=theta)

    # replay the dual flow on the same schedule
    hs = polar_dual(geom).values.copy()
    (tangent,) = tangent_frame(grid)
    xi = grid.nodes
    for theta, dt in schedule:
        hs_field = ScalarField(grid, hs)
        ghs = sphere.grad(hs_field)[:, 0]
        hess = sphere.covariant_hessian(hs_field)[:, 0, 0]
        bstar = hess + hs
        if np.any(bstar <= cfg.eps_convex):
            raise ConvexityLossError("dual flow lost convexity",
                                     node=int(np.argmin(bstar)), time=None)
        norm = np.sqrt(hs**2 + ghs**2)
        nu = (hs[:, None] * xi + ghs[:, None] * tangent) / norm[:, None]
        f_val = np.asarray(f_fn(nu), float)
        psi = theta * f_val * hs ** (n + 3) * np.exp(0.5 / hs**2) / norm ** (n + cfg.p + 1)
        hs = hs + dt * (psi * bstar - hs)
        if np.any(hs <= 0):
            raise ConvexityLossError("dual flow left the positive cone",
                                     node=int(np.argmin(hs)), time=None)

    dual_of_final = polar_dual(state.geom).values
    return float(np.max(np.abs(dual_of_final - hs)))
