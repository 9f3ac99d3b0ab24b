"""Exact optimal transport on the line.

For strictly convex costs of the displacement, the optimal coupling between
two densities pairs their quantiles.  Costs are evaluated at the half-level
quantiles ``s = (i - 1/2)/m`` (second-order accurate for smooth densities);
the brute-force oracle certifies optimality on small discrete instances.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .convex import CostSpec
from .density import GridDensity, QuantileRep, from_quantiles, to_quantiles
from .errors import OracleLimitError, ParameterError

EXHAUSTIVE_LIMIT = 8
ORACLE_LIMIT = 64


@dataclass(frozen=True)
class MonotoneMap:
    """Quantile pairing realizing the monotone optimal map.

    ``S`` pushes the source density forward to the target density; it maps
    the ``i``-th source quantile onto the ``i``-th target quantile and is
    evaluated by piecewise-linear interpolation of the pairing.
    """

    X_src: np.ndarray
    X_tgt: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.X_src, dtype=float)
        xt = np.asarray(self.X_tgt, dtype=float)
        if xs.shape != xt.shape or xs.ndim != 1 or xs.size < 2:
            raise ParameterError("quantile vectors must be 1-D of equal length")
        object.__setattr__(self, "X_src", xs)
        object.__setattr__(self, "X_tgt", xt)

    @property
    def m(self) -> int:
        return self.X_src.size - 1

    def __call__(self, y):
        return np.interp(np.asarray(y, dtype=float), self.X_src, self.X_tgt)

    def slope(self, y):
        """Piecewise-constant derivative of the interpolated map."""
        y = np.asarray(y, dtype=float)
        slopes = np.diff(self.X_tgt) / np.diff(self.X_src)
        idx = np.clip(np.searchsorted(self.X_src, y, side="right") - 1,
                      0, self.m - 1)
        return slopes[idx]

    def interpolate(self, t: float) -> "MonotoneMap":
        """Map onto the displacement interpolant ``(1-t) id + t S``."""
        return MonotoneMap(X_src=self.X_src,
                           X_tgt=(1.0 - t) * self.X_src + t * self.X_tgt)


@dataclass(frozen=True)
class TransportPlan:
    """Discrete coupling: atoms ``(x, y, mass)`` with equal-weight marginals."""

    atoms: tuple[tuple[float, float, float], ...]

    def cost(self, cost: CostSpec, h: float) -> float:
        x = np.array([a[0] for a in self.atoms])
        y = np.array([a[1] for a in self.atoms])
        w = np.array([a[2] for a in self.atoms])
        return float(np.sum(w * cost.value((x - y) / h)))

    def to_csv(self) -> str:
        rows = sorted(self.atoms)
        lines = ["x,y,mass"]
        for x, y, w in rows:
            lines.append(f"{x!r},{y!r},{w!r}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class InterpolantPath:
    """Displacement interpolation data between a base density and a target."""

    rho_base: GridDensity
    map: MonotoneMap


def monotone_map(rho0: GridDensity, rho1: GridDensity, m: int) -> MonotoneMap:
    """Monotone map pushing ``rho1`` forward to ``rho0`` at resolution ``m``."""
    q1 = to_quantiles(rho1, m)
    q0 = to_quantiles(rho0, m)
    return MonotoneMap(X_src=q1.X, X_tgt=q0.X)


def _midquantiles(rho: GridDensity, m: int) -> np.ndarray:
    s = (np.arange(m) + 0.5) / m
    return rho.quantile(s)


def wasserstein_cost(rho0: GridDensity, rho1: GridDensity, cost: CostSpec,
                     h: float, m: int = 512) -> float:
    """Transport work between two densities at time-step scaling ``h``."""
    if not (h > 0.0):
        raise ParameterError(f"scaling h must be positive, got {h}")
    x0 = _midquantiles(rho0, m)
    x1 = _midquantiles(rho1, m)
    return float(np.mean(cost.value((x0 - x1) / h)))


def quantile_cost(X0: np.ndarray, X1: np.ndarray, cost: CostSpec,
                  h: float) -> float:
    """Transport work between two measures given by quantile nodes."""
    if not (h > 0.0):
        raise ParameterError(f"scaling h must be positive, got {h}")
    p0 = 0.5 * (X0[:-1] + X0[1:])
    p1 = 0.5 * (X1[:-1] + X1[1:])
    return float(np.mean(cost.value((p0 - p1) / h)))


def coupling_second_moment(rho0: GridDensity, rho1: GridDensity,
                           m: int = 512) -> float:
    """Second moment ``int |x - y|^2 dgamma`` of the monotone coupling."""
    x0 = _midquantiles(rho0, m)
    x1 = _midquantiles(rho1, m)
    return float(np.mean((x0 - x1) ** 2))


def quantile_second_moment(X0: np.ndarray, X1: np.ndarray) -> float:
    p0 = 0.5 * (X0[:-1] + X0[1:])
    p1 = 0.5 * (X1[:-1] + X1[1:])
    return float(np.mean((p0 - p1) ** 2))


def displacement_interpolate(path: InterpolantPath, t: float,
                             n: int) -> GridDensity:
    """Density of the interpolant ``((1-t) id + t S)`` push-forward."""
    if not (0.0 <= t <= 1.0):
        raise ParameterError(f"interpolation parameter must be in [0, 1], got {t}")
    Xt = (1.0 - t) * path.map.X_src + t * path.map.X_tgt
    rep = QuantileRep(domain=path.rho_base.domain, X=Xt)
    return from_quantiles(rep, n)


def interpolant_quantiles(path: InterpolantPath, t: float) -> np.ndarray:
    if not (0.0 <= t <= 1.0):
        raise ParameterError(f"interpolation parameter must be in [0, 1], got {t}")
    return (1.0 - t) * path.map.X_src + t * path.map.X_tgt


def make_path(rho0: GridDensity, rho1: GridDensity, m: int) -> InterpolantPath:
    """Displacement path from ``rho1`` (t=0) to ``rho0`` (t=1)."""
    return InterpolantPath(rho_base=rho1, map=monotone_map(rho0, rho1, m))


# ---------------------------------------------------------------------------
# brute-force oracle on equal-weight atoms
# ---------------------------------------------------------------------------

def lp_oracle(atoms0, atoms1, cost: CostSpec, h: float
              ) -> tuple[float, TransportPlan]:
    """Exact optimal assignment between equal-weight atom lists.

    Up to 8 atoms every permutation is enumerated; up to 64 atoms an exact
    assignment solve is used.  Exists to certify the monotone solver, not
    for production transport.
    """
    x = np.asarray(atoms0, dtype=float)
    y = np.asarray(atoms1, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size == 0:
        raise ParameterError("atom lists must be nonempty 1-D of equal length")
    k = x.size
    if k > ORACLE_LIMIT:
        raise OracleLimitError(f"oracle certifies at most {ORACLE_LIMIT} atoms, got {k}")
    if not (h > 0.0):
        raise ParameterError(f"scaling h must be positive, got {h}")
    C = cost.value((x[:, None] - y[None, :]) / h)
    if k <= EXHAUSTIVE_LIMIT:
        perms = np.array(list(itertools.permutations(range(k))), dtype=np.intp)
        totals = C[np.arange(k)[None, :], perms].sum(axis=1)
        best = perms[int(np.argmin(totals))]
    else:
        _, best = linear_sum_assignment(C)
    w = 1.0 / k
    plan = TransportPlan(atoms=tuple(
        (float(x[i]), float(y[best[i]]), w) for i in range(k)))
    total = float(C[np.arange(k), best].mean())
    return total, plan


def monotone_atom_cost(atoms0, atoms1, cost: CostSpec, h: float) -> float:
    """Cost of the sorted (monotone) pairing of two atom lists."""
    x = np.sort(np.asarray(atoms0, dtype=float))
    y = np.sort(np.asarray(atoms1, dtype=float))
    if x.shape != y.shape:
        raise ParameterError("atom lists must have equal length")
    return float(np.mean(cost.value((x - y) / h)))


def push_forward_residual(rho_src: GridDensity, rho_tgt: GridDensity,
                          S: MonotoneMap, n: int | None = None) -> float:
    """L1 gap between ``S`` push-forward of the source and the target."""
    from .density import l1_distance

    n = n or rho_tgt.n
    rep = QuantileRep(domain=rho_src.domain, X=S.X_tgt)
    pushed = from_quantiles(rep, n)
    resampled = rho_tgt if rho_tgt.n == n else from_quantiles(
        to_quantiles(rho_tgt, S.m), n)
    return l1_distance(pushed, resampled)
