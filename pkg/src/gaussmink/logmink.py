"""Logarithmic (p = 0) Gaussian Minkowski solver for discrete even measures.

Given antipodal atom pairs (v_i, mu_i), the solver minimizes
sum_i 2 mu_i log h_i over origin-symmetric slab bodies
{x : |x . v_i| <= h_i} subject to the Gaussian half-volume constraint
gamma(Q) = 1/2, working in y = log h so positivity is unconditional.  The
constraint gradient d gamma / d y_i equals the p = 0 Gaussian cone measure
S_i of the facet pair, so the converged Lagrange condition is
2 mu_i = c S_i with one common multiplier c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DegenerateBodyError, RejectedInputError, SolverFailureError
from .measure import (
    GaussDensityContext,
    facet_cone_measure3,
    polygon_gaussian_volume,
    segment_gauss_integral,
)
from .polytopes import halfplane_intersection, halfspace_intersection

DEFAULT_SEED = 20240801


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """Even measure: each listed atom is the pair {+v_i, -v_i}, mass mu_i each."""

    directions: np.ndarray   # (k, n+1) unit vectors
    masses: np.ndarray       # (k,) per-point masses

    def __post_init__(self):
        dirs = np.asarray(self.directions, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if dirs.ndim != 2 or dirs.shape[1] not in (2, 3):
            raise RejectedInputError("directions must be (k, 2) or (k, 3)")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-8):
            raise RejectedInputError("atom directions must be unit vectors")
        dirs = dirs / norms[:, None]
        if masses.shape != (dirs.shape[0],) or np.any(masses <= 0):
            raise RejectedInputError("each atom needs a positive mass")
        gram = np.abs(dirs @ dirs.T)
        np.fill_diagonal(gram, 0.0)
        if np.any(gram >= 1.0 - 1e-12):
            raise RejectedInputError("atom directions must be pairwise non-parallel")
        if np.linalg.matrix_rank(dirs, tol=1e-10) < dirs.shape[1]:
            raise RejectedInputError("atom directions must span the ambient space")
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "masses", masses)

    @property
    def dim(self) -> int:
        """The n of S^n."""
        return self.directions.shape[1] - 1

    @property
    def total_mass(self) -> float:
        return 2.0 * float(np.sum(self.masses))

    def to_json_obj(self) -> list:
        return [
            {"direction": [float(c) for c in v], "mass": float(m)}
            for v, m in zip(self.directions, self.masses)
        ]

    @classmethod
    def from_json_obj(cls, obj) -> "DiscreteMeasure":
        try:
            dirs = np.array([row["direction"] for row in obj], dtype=float)
            masses = np.array([row["mass"] for row in obj], dtype=float)
        except (TypeError, KeyError, ValueError) as exc:
            raise ValueError(f"malformed measure description: {exc}")
        return cls(directions=dirs, masses=masses)


# ---------------------------------------------------------------------------
# subspace concentration
# ---------------------------------------------------------------------------

@dataclass
class SubspaceRecord:
    dim: int
    atom_ids: list
    mass: float
    bound: float

    @property
    def ratio(self) -> float:
        return self.mass / self.bound


@dataclass
class ConcentrationReport:
    strict: bool
    passes: bool
    worst: SubspaceRecord
    records: list = field(default_factory=list)


def subspace_concentration_check(mu: DiscreteMeasure, strict: bool) -> ConcentrationReport:
    """Test mu(xi) <= total * dim(xi)/(n+1) over atom-spanned subspaces.

    Subspaces are deduplicated by span; strict mode requires strict
    inequality on every proper nontrivial subspace.
    """
    d = mu.directions.shape[1]
    total = mu.total_mass
    records = []

    def add_span(dim, member_mask):
        ids = list(np.nonzero(member_mask)[0])
        mass = 2.0 * float(np.sum(mu.masses[member_mask]))
        bound = total * dim / d
        records.append(SubspaceRecord(dim=dim, atom_ids=ids, mass=mass, bound=bound))

    # lines: pairwise non-parallel atoms, so each line holds exactly one pair
    for i in range(len(mu.masses)):
        mask = np.zeros(len(mu.masses), dtype=bool)
        mask[i] = True
        add_span(1, mask)
    if d == 3:
        seen = set()
        for i in range(len(mu.masses)):
            for j in range(i + 1, len(mu.masses)):
                nrm = np.cross(mu.directions[i], mu.directions[j])
                nrm = nrm / np.linalg.norm(nrm)
                if nrm[np.argmax(np.abs(nrm))] < 0:
                    nrm = -nrm
                key = tuple(np.round(nrm, 10))
                if key in seen:
                    continue
                seen.add(key)
                mask = np.abs(mu.directions @ nrm) <= 1e-10
                add_span(2, mask)

    worst = max(records, key=lambda r: r.ratio)
    if strict:
        passes = all(r.ratio < 1.0 - 1e-12 for r in records)
    else:
        passes = all(r.ratio <= 1.0 + 1e-12 for r in records)
    return ConcentrationReport(strict=strict, passes=passes, worst=worst,
                               records=records)


# ---------------------------------------------------------------------------
# slab bodies
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SymmetricSlabBody:
    """Intersection of symmetric slabs {|x . v_i| <= h_i}."""

    directions: np.ndarray
    h: np.ndarray
    polytope: object
    active: np.ndarray      # per-slab: does the body touch the slab boundary?

    @classmethod
    def make(cls, directions: np.ndarray, h: np.ndarray) -> "SymmetricSlabBody":
        directions = np.asarray(directions, float)
        h = np.asarray(h, float)
        if np.any(h <= 0):
            raise DegenerateBodyError("slab widths must be positive")
        normals = np.vstack([directions, -directions])
        offsets = np.concatenate([h, h])
        if directions.shape[1] == 2:
            poly = halfplane_intersection(normals, offsets)
            verts = poly.vertices
        else:
            poly = halfspace_intersection(normals, offsets)
            verts = poly.vertices
        touch = np.abs(verts @ directions.T)
        active = np.any(touch >= h[None, :] * (1.0 - 1e-12), axis=0)
        return cls(directions=directions, h=h, polytope=poly, active=active)

    @property
    def dim(self) -> int:
        return self.directions.shape[1] - 1


def _mc_samples_for(se_target: float) -> int:
    return int(math.ceil(0.25 / se_target**2))


def _slab_gamma_mc(Q: SymmetricSlabBody, se_target: float, seed: int) -> float:
    """Common-random-numbers Monte Carlo volume: per-batch seeds are fixed,
    so repeated evaluations during one solve are smooth in h."""
    samples = _mc_samples_for(se_target)
    batch = 1 << 17
    dirs = Q.directions
    h = Q.h
    hits = 0
    done = 0
    idx = 0
    while done < samples:
        m = min(batch, samples - done)
        rng = np.random.default_rng([seed, idx])
        pts = rng.standard_normal((m, dirs.shape[1]))
        inside = np.all(np.abs(pts @ dirs.T) <= h[None, :], axis=1)
        hits += int(np.count_nonzero(inside))
        done += m
        idx += 1
    return hits / samples


def slab_gaussian_volume(Q: SymmetricSlabBody, tol: float = 1e-9,
                         mc_se: float = 1e-4, seed: int = DEFAULT_SEED) -> float:
    """gamma of a slab body: exact polygon quadrature in the plane, Monte
    Carlo with the exact membership test in space."""
    if Q.dim == 1:
        return polygon_gaussian_volume(Q.polytope, tol=tol)
    return _slab_gamma_mc(Q, mc_se, seed)


def facet_gaussian_cone_measure(Q: SymmetricSlabBody, tol: float = 1e-10):
    """p = 0 Gaussian cone measure of every facet pair (pair totals).

    Returns (S, active); inactive slabs report measure 0 and are flagged.
    """
    k = len(Q.h)
    S = np.zeros(k)
    if Q.dim == 1:
        edges = list(Q.polytope.edges())
        normals = np.array([e[0] for e in edges])
        for i, v in enumerate(Q.directions):
            if not Q.active[i]:
                continue
            match = np.nonzero(normals @ v >= 1.0 - 1e-9)[0]
            if match.size == 0:
                continue
            _, _, p0, p1 = edges[int(match[0])]
            ctx = GaussDensityContext.for_dim(1)
            S[i] = 2.0 * ctx.norm_const * Q.h[i] * segment_gauss_integral(p0, p1, tol)
    else:
        poly = Q.polytope
        for i, v in enumerate(Q.directions):
            if not Q.active[i]:
                continue
            match = np.nonzero(poly.facet_normals @ v >= 1.0 - 1e-9)[0]
            if match.size == 0:
                continue
            f = int(match[0])
            S[i] = 2.0 * facet_cone_measure3(
                poly.facet_vertices[f], poly.facet_normals[f], poly.facet_offsets[f]
            )
    return S, Q.active.copy()


# ---------------------------------------------------------------------------
# the constrained minimization
# ---------------------------------------------------------------------------

@dataclass
class SolveResult:
    body: SymmetricSlabBody
    h: np.ndarray
    c: float
    kkt_residual: float
    gamma: float
    iterations: int
    objective_history: list

    def to_json_obj(self) -> dict:
        return {
            "h": [float(x) for x in self.h],
            "c": float(self.c),
            "kkt_residual": float(self.kkt_residual),
            "gamma": float(self.gamma),
            "iterations": int(self.iterations),
        }


def solve_log_minkowski(mu: DiscreteMeasure, tol: float = 1e-7, *,
                        enforce_strict_check: bool = True,
                        max_iters: int = 2000, seed: int = DEFAULT_SEED,
                        mc_se: float = 1e-4, quad_tol: float = 1e-12) -> SolveResult:
    """Minimize sum 2 mu_i log h_i over gamma = 1/2 slab bodies.

    Projected gradient in y = log h: descent along the tangent component of
    the objective gradient, retraction by uniform log-scaling (gamma is
    monotone under scaling), Armijo-free acceptance on strict objective
    decrease.  Converged when max_i |2 mu_i - c S_i| / (2 mu_i) <= tol with
    c = sum 2 mu_i / sum S_i, and |gamma - 1/2| <= tol.

    The strict subspace concentration gate guards the regime where the
    unrestricted minimization is known to stay bounded; pass
    ``enforce_strict_check=False`` to optimize anyway over the fixed slab
    family (useful for small measures whose restricted problem is coercive
    even though the strict inequality fails structurally, e.g. any two-pair
    measure in the plane).
    """
    report = subspace_concentration_check(mu, strict=True)
    if enforce_strict_check and not report.passes:
        w = report.worst
        raise RejectedInputError(
            f"strict subspace concentration inequality fails: subspace of dim "
            f"{w.dim} spanned by atoms {w.atom_ids} carries {w.mass:.6g} "
            f">= bound {w.bound:.6g}"
        )
    dirs = mu.directions
    m = 2.0 * mu.masses
    k = len(m)

    def gamma_of(y: np.ndarray):
        Q = SymmetricSlabBody.make(dirs, np.exp(y))
        g = slab_gaussian_volume(Q, tol=quad_tol, mc_se=mc_se, seed=seed)
        return g, Q

    def project(y: np.ndarray) -> np.ndarray:
        def fun(delta):
            return gamma_of(y + delta)[0] - 0.5

        lo, hi = -0.25, 0.25
        flo, fhi = fun(lo), fun(hi)
        tries = 0
        while flo > 0.0:
            lo *= 2.0
            flo = fun(lo)
            tries += 1
            if tries > 60:
                raise SolverFailureError("cannot bracket the half-volume scaling")
        tries = 0
        while fhi < 0.0:
            hi *= 2.0
            fhi = fun(hi)
            tries += 1
            if tries > 60:
                raise SolverFailureError("cannot bracket the half-volume scaling")
        delta = brentq(fun, lo, hi, xtol=1e-13)
        return y + delta

    dropped = None
    scale = 1.0
    for _restart in range(4):
        y = project(np.full(k, math.log(scale)))
        eta = 0.25
        history: list = []
        restart_needed = False
        for it in range(max_iters):
            gamma, Q = gamma_of(y)
            S, active = facet_gaussian_cone_measure(Q)
            if not np.all(active):
                dropped = int(np.argmin(active))
                scale *= 2.0
                restart_needed = True
                break
            c_spec = float(np.sum(m) / np.sum(S))
            kkt = float(np.max(np.abs(m - c_spec * S) / m))
            F = float(m @ y)
            history.append(F)
            if kkt <= tol and abs(gamma - 0.5) <= max(tol, 1e-10):
                return SolveResult(
                    body=Q, h=np.exp(y), c=c_spec, kkt_residual=kkt,
                    gamma=gamma, iterations=it, objective_history=history,
                )
            c_tan = float((m @ S) / (S @ S))
            dvec = -(m - c_tan * S)
            dnorm = float(np.linalg.norm(dvec))
            if dnorm == 0.0:
                raise SolverFailureError(
                    "tangent gradient vanished before meeting the tolerance"
                )
            dhat = dvec / dnorm
            eta = min(eta * 2.0, 0.5)
            accepted = False
            while eta > 1e-15:
                y_try = project(y + eta * dhat)
                if float(m @ y_try) < F:
                    y = y_try
                    accepted = True
                    break
                eta *= 0.5
            if not accepted:
                raise SolverFailureError(
                    f"projected-gradient line search stalled (kkt = {kkt:.3g})"
                )
        if restart_needed:
            continue
        raise SolverFailureError("iteration budget exhausted before convergence")
    raise SolverFailureError(
        f"facet {dropped} stayed inactive after 3 restarts from larger bodies",
        dropped_facet=dropped,
    )
