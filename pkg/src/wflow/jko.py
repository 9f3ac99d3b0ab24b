"""Steepest-descent time stepping for degenerate diffusion.

Each step minimizes ``h * W(rho_prev, rho) + E(rho)`` over densities on the
domain, posed in quantile coordinates where the feasible set is the monotone
box ``a <= X_0 <= ... <= X_m <= b`` and the objective

    J(X) = (h/m) sum_i c((P_i - M_i)/h) + sum_i F((1/m)/w_i) w_i
           + (1/m) sum_i V(M_i)

is convex (``P``: fixed previous half-level quantiles, ``M``: current ones,
``w``: cell widths).  A damped Newton method on the banded Hessian does the
work; an accelerated projected-gradient loop with an exact monotone
projection is the fallback.  Optimality is always certified by the
projected-gradient fixed-point residual.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import isotonic_regression

from .convex import (
    AssumptionReport,
    CostSpec,
    EnergySpec,
    PotentialSpec,
    validate_assumptions,
)
from .density import (
    Domain,
    GridDensity,
    QuantileRep,
    from_quantiles,
    normalize,
    to_quantiles,
)
from .errors import (
    ConvergenceError,
    DegeneracyError,
    InvalidDensityError,
    InvalidSpecError,
    ParameterError,
    SchemeAbortError,
)

VACUUM_FLOOR_FACTOR = 1e-14
MAX_STEPS = 10**6


@dataclass(frozen=True)
class JkoProblem:
    """Full description of one evolution problem plus solver options."""

    cost: CostSpec
    energy: EnergySpec
    potential: PotentialSpec
    domain: Domain
    h: float
    m: int
    tol: float = 1e-9
    newton_max_iter: int = 80
    fista_max_iter: int = 100_000
    force: bool = False
    assumptions: AssumptionReport = field(init=False)

    def __post_init__(self):
        if not (self.h > 0.0):
            raise ParameterError(f"time step must be positive, got {self.h}")
        if self.m < 8:
            raise ParameterError(f"need at least 8 mass cells, got {self.m}")
        report = validate_assumptions(self.cost, self.energy, self.potential,
                                      domain=(self.domain.a, self.domain.b))
        if not report.all_pass and not self.force:
            failed = ", ".join(c.name for c in report.failed())
            raise InvalidSpecError(f"standing assumptions fail: {failed}")
        object.__setattr__(self, "assumptions", report)


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step ledger entries, all computed in quantile coordinates."""

    W_value: float
    E_internal_before: float
    E_internal_after: float
    E_free_before: float
    E_free_after: float
    second_moment: float
    dissipation: float
    el_residual_L1: float
    kkt_residual: float
    iterations: int

    def as_dict(self) -> dict:
        return {
            "W_value": self.W_value,
            "E_internal_before": self.E_internal_before,
            "E_internal_after": self.E_internal_after,
            "E_free_before": self.E_free_before,
            "E_free_after": self.E_free_after,
            "second_moment": self.second_moment,
            "dissipation": self.dissipation,
            "el_residual_L1": self.el_residual_L1,
            "kkt_residual": self.kkt_residual,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class SchemeTrajectory:
    """Piecewise-constant-in-time approximate solution.

    ``densities[k]`` is the state on ``(times[k-1], times[k]]``;
    ``densities[0]`` is the initial state.
    """

    times: tuple[float, ...]
    densities: tuple[GridDensity, ...]
    diagnostics: tuple[StepDiagnostics, ...] = ()

    def __post_init__(self):
        if len(self.times) != len(self.densities) or not self.times:
            raise ParameterError("need one density per time")
        if self.times[0] != 0.0:
            raise ParameterError("trajectories start at t = 0")

    @property
    def final(self) -> GridDensity:
        return self.densities[-1]

    def sample(self, t: float) -> GridDensity:
        """State at time ``t`` under the previous-value convention."""
        times = np.asarray(self.times)
        idx = int(np.searchsorted(times, t - 1e-12 * max(times[-1], 1.0),
                                  side="left"))
        return self.densities[min(idx, len(self.densities) - 1)]


# ---------------------------------------------------------------------------
# single-step solver
# ---------------------------------------------------------------------------

class _StepObjective:
    """Objective/gradient/curvature bundle for one step at fixed ``Xprev``."""

    def __init__(self, problem: JkoProblem, Xprev: np.ndarray):
        self.pb = problem
        self.m = problem.m
        self.mu = 1.0 / problem.m
        self.h = problem.h
        self.P = 0.5 * (Xprev[:-1] + Xprev[1:])
        self.wmin = VACUUM_FLOOR_FACTOR * problem.domain.length
        self.has_potential = not problem.potential.is_zero

    def value(self, X: np.ndarray) -> float:
        M = 0.5 * (X[:-1] + X[1:])
        w = np.maximum(np.diff(X), self.wmin)
        out = self.h * self.mu * float(np.sum(self.pb.cost.value((self.P - M) / self.h)))
        out += float(np.sum(self.pb.energy.value(self.mu / w) * w))
        if self.has_potential:
            out += self.mu * float(np.sum(self.pb.potential.value(M)))
        return out

    def gradient(self, X: np.ndarray) -> np.ndarray:
        M = 0.5 * (X[:-1] + X[1:])
        w = np.maximum(np.diff(X), self.wmin)
        u = self.pb.cost.derivative((self.P - M) / self.h)
        gp = -self.pb.energy.pressure(self.mu / w)
        cell = -0.5 * self.mu * u
        if self.has_potential:
            cell = cell + 0.5 * self.mu * self.pb.potential.derivative(M)
        g = np.zeros_like(X)
        g[:-1] += cell - gp
        g[1:] += cell + gp
        return g

    def cell_curvatures(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-cell curvature split: coupling part and width part."""
        M = 0.5 * (X[:-1] + X[1:])
        w = np.maximum(np.diff(X), self.wmin)
        v = (self.P - M) / self.h
        ct = (self.mu / (4.0 * self.h)) * self.pb.cost.second_derivative(v)
        rho = self.mu / w
        ge = self.mu**2 * self.pb.energy.second_derivative(rho) / w**3
        if self.has_potential:
            ct = ct + 0.25 * self.mu * self.pb.potential.second_derivative(M)
        return ct, ge

    def kkt_residual(self, X: np.ndarray, g: np.ndarray | None = None) -> float:
        g = self.gradient(X) if g is None else g
        z = np.clip(isotonic_regression(X - g).x,
                    self.pb.domain.a, self.pb.domain.b)
        return float(np.max(np.abs(X - z)))


def _newton_solve(obj: _StepObjective, X0: np.ndarray
                  ) -> tuple[np.ndarray, int, float] | None:
    """Damped Newton on the banded system; None signals fallback.

    The wall bounds on the two endpoint nodes are handled by an active-set
    rule (pinned while the gradient presses outward, free otherwise); runs
    with interior nodes stacked on a wall are left to the projected-gradient
    fallback.
    """
    pb = obj.pb
    a, b = pb.domain.a, pb.domain.b
    edge = 1e-12 * pb.domain.length
    X = np.clip(X0.copy(), a, b)
    fX = obj.value(X)
    m = obj.m
    for it in range(1, pb.newton_max_iter + 1):
        g = obj.gradient(X)
        r = obj.kkt_residual(X, g)
        if r <= pb.tol:
            return X, it - 1, r
        if X[1] <= a + edge or X[-2] >= b - edge:
            return None
        i0 = 1 if (X[0] <= a + edge and g[0] >= 0.0) else 0
        i1 = m - 1 if (X[-1] >= b - edge and g[-1] <= 0.0) else m
        ct, ge = obj.cell_curvatures(X)
        cell = ct + ge
        ndof = i1 - i0 + 1
        ab = np.zeros((3, ndof))
        diag = np.zeros(m + 1)
        diag[1:] += cell
        diag[:-1] += cell
        ab[1, :] = diag[i0:i1 + 1]
        off = ct[i0:i1] - ge[i0:i1]
        ab[0, 1:] = off
        ab[2, :-1] = off
        try:
            dX = solve_banded((1, 1), ab, -g[i0:i1 + 1])
        except Exception:
            return None
        gdot = float(g[i0:i1 + 1] @ dX)
        if not np.isfinite(gdot) or gdot >= 0.0:
            return None
        step = 1.0
        accepted = False
        for _ in range(60):
            Xn = X.copy()
            Xn[i0:i1 + 1] = X[i0:i1 + 1] + step * dX
            Xn[0] = max(Xn[0], a)
            Xn[-1] = min(Xn[-1], b)
            if np.all(np.diff(Xn) > 0.0):
                fn = obj.value(Xn)
                if fn <= fX + 1e-4 * step * gdot:
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            return None
        X, fX = Xn, fn
    r = obj.kkt_residual(X)
    if r <= pb.tol:
        return X, pb.newton_max_iter, r
    return None


def _fista_solve(obj: _StepObjective, X0: np.ndarray
                 ) -> tuple[np.ndarray, int, float]:
    """Monotone-restart FISTA with exact projection onto the feasible box."""
    pb = obj.pb
    a, b = pb.domain.a, pb.domain.b

    def project(Y):
        return np.clip(isotonic_regression(Y).x, a, b)

    X = project(X0)
    y = X.copy()
    t = 1.0
    L = 1.0
    fX = obj.value(X)
    best_f, best_X, best_r = fX, X.copy(), obj.kkt_residual(X)
    nit = 0
    for nit in range(1, pb.fista_max_iter + 1):
        g = obj.gradient(y)
        fy = obj.value(y)
        while True:
            Xn = project(y - g / L)
            d = Xn - y
            if obj.value(Xn) <= fy + float(g @ d) + 0.5 * L * float(d @ d) + 1e-15:
                break
            L *= 2.0
            if L > 1e18:
                Xn = X
                break
        fn = obj.value(Xn)
        r = obj.kkt_residual(Xn)
        if fn < best_f:
            best_f, best_X, best_r = fn, Xn.copy(), r
        if r <= pb.tol:
            return Xn, nit, r
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        yn = Xn + ((t - 1.0) / tn) * (Xn - X)
        if fn > fX:
            yn, tn = Xn.copy(), 1.0
        X, y, t, fX = Xn, yn, tn, fn
        L = max(L * 0.7, 1e-12)
    return best_X, nit, best_r


def _quantile_el_pieces(problem: JkoProblem, Xprev: np.ndarray, X: np.ndarray
                        ) -> tuple[float, float]:
    """Velocity-matching residual and dissipation integrand on mass cells."""
    mu = 1.0 / problem.m
    P = 0.5 * (Xprev[:-1] + Xprev[1:])
    M = 0.5 * (X[:-1] + X[1:])
    w = np.diff(X)
    rho = mu / w
    wv = problem.energy.derivative(rho)
    if not problem.potential.is_zero:
        wv = wv + problem.potential.value(M)
    dw = np.gradient(wv, M)
    rhs = problem.cost.conjugate_gradient(dw)
    lhs = (P - M) / problem.h
    el = float(np.mean(np.abs(lhs - rhs)))
    dissipation = float(np.mean(np.abs(dw) ** problem.cost.qstar))
    return el, dissipation


def _quantile_energies(problem: JkoProblem, X: np.ndarray) -> tuple[float, float]:
    """(internal, free) energy of the measure induced by nodes ``X``."""
    mu = 1.0 / problem.m
    w = np.diff(X)
    e_int = float(np.sum(problem.energy.value(mu / w) * w))
    e_free = e_int
    if not problem.potential.is_zero:
        M = 0.5 * (X[:-1] + X[1:])
        e_free += mu * float(np.sum(problem.potential.value(M)))
    return e_int, e_free


def jko_step_nodes(problem: JkoProblem, Xprev: np.ndarray
                   ) -> tuple[np.ndarray, StepDiagnostics]:
    """One minimizing-movement step in quantile coordinates."""
    Xprev = np.asarray(Xprev, dtype=float)
    obj = _StepObjective(problem, Xprev)
    result = _newton_solve(obj, Xprev)
    newton_used = 0
    if result is None:
        X, nit, r = _fista_solve(obj, Xprev)
        if r > problem.tol:
            raise ConvergenceError(
                f"step solver stalled at residual {r:.3e} (tol {problem.tol:.1e})",
                best=X, residual=r)
    else:
        X, newton_used, r = result
        nit = 0
    w = np.diff(X)
    if np.any(w <= obj.wmin):
        raise DegeneracyError(
            f"mass cell collapsed to width {float(np.min(w)):.3e}; "
            "the evolution left the positive-density regime")
    if obj.value(X) > obj.value(Xprev) + 1e-12:
        raise ConvergenceError("step increased the objective", best=X, residual=r)

    e_int_prev, e_free_prev = _quantile_energies(problem, Xprev)
    e_int, e_free = _quantile_energies(problem, X)
    P = 0.5 * (Xprev[:-1] + Xprev[1:])
    M = 0.5 * (X[:-1] + X[1:])
    disp = P - M
    W = float(np.mean(problem.cost.value(disp / problem.h)))
    sec = float(np.mean(disp**2))
    el, dissipation = _quantile_el_pieces(problem, Xprev, X)
    diag = StepDiagnostics(
        W_value=W,
        E_internal_before=e_int_prev,
        E_internal_after=e_int,
        E_free_before=e_free_prev,
        E_free_after=e_free,
        second_moment=sec,
        dissipation=dissipation,
        el_residual_L1=el,
        kkt_residual=r,
        iterations=newton_used + nit,
    )
    return X, diag


def jko_step(problem: JkoProblem, rho_prev: GridDensity
             ) -> tuple[GridDensity, StepDiagnostics]:
    """One steepest-descent step between grid densities.

    The previous density is lifted to quantile coordinates, the convex step
    problem is solved there, and the minimizer is rasterized back onto the
    same grid.
    """
    if not rho_prev.strictly_positive:
        raise InvalidDensityError(
            "step solver needs strictly positive densities; "
            "floor degenerate data first")
    X_prev = to_quantiles(rho_prev, problem.m).X
    X, diag = jko_step_nodes(problem, X_prev)
    rho = from_quantiles(QuantileRep(domain=problem.domain, X=X), rho_prev.n)
    return rho, diag


def run_scheme(problem: JkoProblem, rho0: GridDensity, T: float
               ) -> SchemeTrajectory:
    """Iterate the step solver up to the horizon ``T``.

    The evolution state is kept in quantile coordinates across steps; grid
    snapshots are derived views.  A failing step aborts with the partial
    trajectory attached.
    """
    steps = int(round(T / problem.h))
    if steps < 1 or steps > MAX_STEPS:
        raise ParameterError(f"horizon gives {steps} steps, needs 1..{MAX_STEPS}")
    if rho0.domain != problem.domain:
        raise ParameterError("initial density lives on the wrong domain")
    if not rho0.strictly_positive:
        raise InvalidDensityError(
            "the scheme needs strictly positive initial data; "
            "floor degenerate data first")
    X = to_quantiles(rho0, problem.m).X
    times = [0.0]
    densities = [rho0]
    diags: list[StepDiagnostics] = []
    for k in range(1, steps + 1):
        try:
            X, diag = jko_step_nodes(problem, X)
        except (ConvergenceError, DegeneracyError) as exc:
            raise SchemeAbortError(
                f"step {k} failed: {exc}",
                partial=SchemeTrajectory(times=tuple(times),
                                         densities=tuple(densities),
                                         diagnostics=tuple(diags)),
                cause=exc) from exc
        times.append(k * problem.h)
        densities.append(from_quantiles(
            QuantileRep(domain=problem.domain, X=X), rho0.n))
        diags.append(diag)
    return SchemeTrajectory(times=tuple(times), densities=tuple(densities),
                            diagnostics=tuple(diags))


# ---------------------------------------------------------------------------
# Euler-Lagrange residual on grid densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VelocityField:
    """Sampled step velocity: map side and flux side of the optimality law."""

    y: np.ndarray
    map_side: np.ndarray
    flux_side: np.ndarray
    weights: np.ndarray

    def relative_residual(self) -> float:
        num = float(np.sum(np.abs(self.map_side - self.flux_side) * self.weights))
        den = float(np.sum(np.abs(self.flux_side) * self.weights))
        return num / max(den, 1e-300)


def _binomial_smooth(w: np.ndarray, passes: int = 4) -> np.ndarray:
    # damps the cell-scale sawtooth that exact-mass rasterization leaves in
    # neighboring-cell increments; bias is O(dx^2) per pass
    for _ in range(passes):
        w = np.concatenate(([w[0]], 0.25 * w[:-2] + 0.5 * w[1:-1] + 0.25 * w[2:],
                            [w[-1]]))
    return w


def euler_lagrange_residual(problem: JkoProblem, rho_prev: GridDensity,
                            rho_next: GridDensity
                            ) -> tuple[float, VelocityField]:
    """Check the step optimality law between two grid densities.

    The map side ``(S(y) - y)/h`` uses the monotone map pushing ``rho_next``
    to ``rho_prev``, evaluated at the half-level quantile positions where the
    pairing is exact; the flux side applies the conjugate-gradient
    nonlinearity to centered grid differences of ``F'(rho_next) + V``
    interpolated at the same points.  The residual is the density-weighted
    L1 gap, computed by mass quadrature.
    """
    from .transport import monotone_map

    S = monotone_map(rho_prev, rho_next, problem.m)
    y = 0.5 * (S.X_src[:-1] + S.X_src[1:])
    target = 0.5 * (S.X_tgt[:-1] + S.X_tgt[1:])
    lhs = (target - y) / problem.h
    wv = problem.energy.derivative(rho_next.values)
    if not problem.potential.is_zero:
        wv = wv + problem.potential.value(rho_next.centers)
    dw = np.gradient(_binomial_smooth(wv), rho_next.centers)
    rhs = problem.cost.conjugate_gradient(np.interp(y, rho_next.centers, dw))
    weights = np.full(y.size, 1.0 / y.size)
    residual = float(np.sum(np.abs(lhs - rhs) * weights))
    return residual, VelocityField(y=y, map_side=lhs, flux_side=rhs,
                                   weights=weights)


# ---------------------------------------------------------------------------
# floor approximation for degenerate initial data
# ---------------------------------------------------------------------------

def floored_density(rho0: GridDensity, delta: float) -> GridDensity:
    """Raise the density to at least ``delta`` and renormalize."""
    if not (delta > 0.0):
        raise ParameterError(f"floor must be positive, got {delta}")
    values = np.maximum(rho0.values, delta)
    return normalize(values, rho0.domain)[0]


def run_floor_study(problem: JkoProblem, rho0: GridDensity, T: float,
                    deltas: list[float]) -> list[tuple[float, SchemeTrajectory]]:
    """Run the scheme for a decreasing sequence of density floors.

    Reports the per-floor trajectories; no extrapolation in the floor is
    attempted.
    """
    if not deltas or any(d <= 0.0 for d in deltas):
        raise ParameterError("floor sequence must be positive")
    out = []
    for delta in sorted(deltas, reverse=True):
        out.append((delta, run_scheme(problem, floored_density(rho0, delta), T)))
    return out
