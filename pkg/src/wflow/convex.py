"""Cost functions, energy densities, potentials, and their convex calculus.

Costs are positive sums of powers ``c(z) = sum_i A_i |z|^{q_i}`` with
``A_i > 0`` and ``q_i > 1``; energies are positive combinations of ``x ln x``
and ``x^m / (m - 1)`` terms.  Everything is immutable after construction and
safe for concurrent reads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import InvalidSpecError, ParameterError

_CONJ_TOL = 1e-12
_CONJ_MAX_ITER = 100
_CONVEXITY_SLACK = -1e-10


# ---------------------------------------------------------------------------
# cost functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CostSpec:
    """Strictly convex radial cost ``c(z) = sum_i A_i |z|^{q_i}``.

    ``q`` is the dominating exponent, ``alpha`` the sum of coefficients and
    ``beta`` the total coefficient at the dominating exponent, so that
    ``beta |z|^q <= c(z) <= alpha (|z|^q + 1)`` on the whole line.
    """

    terms: tuple[tuple[float, float], ...]
    q: float = field(init=False)
    alpha: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        if not self.terms:
            raise InvalidSpecError("cost needs at least one term")
        terms = tuple((float(A), float(qi)) for A, qi in self.terms)
        for A, qi in terms:
            if not (A > 0.0):
                raise InvalidSpecError(f"cost coefficient must be > 0, got {A}")
            if not (qi > 1.0):
                raise InvalidSpecError(f"cost exponent must be > 1, got {qi}")
        object.__setattr__(self, "terms", terms)
        q = max(qi for _, qi in terms)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "alpha", sum(A for A, _ in terms))
        object.__setattr__(self, "beta", sum(A for A, qi in terms if qi == q))

    @classmethod
    def single_power(cls, q: float) -> "CostSpec":
        """The normalized power cost ``|z|^q / q``."""
        if not (q > 1.0):
            raise InvalidSpecError(f"cost exponent must be > 1, got {q}")
        return cls(terms=((1.0 / q, q),))

    @property
    def qstar(self) -> float:
        """Conjugate exponent of ``q``."""
        return self.q / (self.q - 1.0)

    def value(self, z):
        z = np.abs(np.asarray(z, dtype=float))
        out = np.zeros_like(z)
        for A, qi in self.terms:
            out += A * z**qi
        return out if out.ndim else float(out)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        az = np.abs(z)
        out = np.zeros_like(az)
        for A, qi in self.terms:
            out += A * qi * az ** (qi - 1.0)
        out *= np.sign(z)
        return out if out.ndim else float(out)

    def second_derivative(self, z, floor: float = 1e-12):
        """Radial curvature ``c''``; |z| is floored to keep it finite."""
        az = np.maximum(np.abs(np.asarray(z, dtype=float)), floor)
        out = np.zeros_like(az)
        for A, qi in self.terms:
            out += A * qi * (qi - 1.0) * az ** (qi - 2.0)
        return out if out.ndim else float(out)

    def _is_normalized_power(self) -> bool:
        if len(self.terms) != 1:
            return False
        A, qi = self.terms[0]
        return abs(A * qi - 1.0) <= 1e-14

    def conjugate(self, z):
        """Legendre transform value ``c*(z)``, vectorized."""
        return self.conjugate_pair(z)[0]

    def conjugate_gradient(self, z):
        """Gradient ``(c*)'(z)``, the inverse of ``c'``, vectorized."""
        return self.conjugate_pair(z)[1]

    def conjugate_pair(self, z):
        """Return ``(c*(z), (c*)'(z))`` together (shares the inversion)."""
        z = np.asarray(z, dtype=float)
        scalar = z.ndim == 0
        zf = np.atleast_1d(z)
        if self._is_normalized_power():
            qs = self.qstar
            x = np.sign(zf) * np.abs(zf) ** (qs - 1.0)
            val = np.abs(zf) ** qs / qs
        else:
            x = _invert_derivative(self, np.abs(zf)) * np.sign(zf)
            val = x * zf - self.value(x)
        if scalar:
            return float(val[0]), float(x[0])
        return val, x


def _invert_derivative(cost: CostSpec, z: np.ndarray) -> np.ndarray:
    """Solve ``c'(x) = z`` componentwise for ``z >= 0``.

    Safeguarded Newton with a bisection fallback on the strictly increasing
    ``c'``; absolute residual tolerance ``1e-12``.
    """
    z = np.asarray(z, dtype=float)
    x = np.zeros_like(z)
    active = z > 0.0
    if not np.any(active):
        return x
    za = z[active]
    hi = np.ones_like(za)
    for _ in range(200):
        need = cost.derivative(hi) < za
        if not np.any(need):
            break
        hi[need] *= 2.0
    lo = np.zeros_like(za)
    xa = 0.5 * hi
    resid = cost.derivative(xa) - za
    for _ in range(_CONJ_MAX_ITER):
        done = np.abs(resid) <= _CONJ_TOL
        if np.all(done):
            break
        lo = np.where(resid < 0.0, xa, lo)
        hi = np.where(resid > 0.0, xa, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = resid / cost.second_derivative(xa)
        cand = xa - step
        bad = ~np.isfinite(cand) | (cand <= lo) | (cand >= hi)
        cand = np.where(bad, 0.5 * (lo + hi), cand)
        xa = np.where(done, xa, cand)
        resid = cost.derivative(xa) - za
    x[active] = xa
    return x


def cost_eval(cost: CostSpec, z: float) -> tuple[float, float]:
    """Evaluate ``(c(z), c'(z))`` at a point."""
    return float(cost.value(z)), float(cost.derivative(z))


def cost_conjugate(cost: CostSpec, z: float) -> tuple[float, float]:
    """Evaluate ``(c*(z), (c*)'(z))`` at a point."""
    val, grad = cost.conjugate_pair(float(z))
    return val, grad


# ---------------------------------------------------------------------------
# internal energy densities
# ---------------------------------------------------------------------------

class EnergyTerms(NamedTuple):
    F: float
    Fp: float
    Fpp: float
    P: float
    Fstar_of_Fprime: float


@dataclass(frozen=True)
class EnergySpec:
    """Internal energy density: positive combination of admissible terms.

    Each term is ``("entropy", A)`` for ``A x ln x`` or ``("power", A, m)``
    for ``A x^m / (m - 1)`` with ``m > 0``, ``m != 1``.  ``F(0) = 0``, ``F``
    is strictly convex and twice differentiable on the open half line.
    """

    terms: tuple[tuple, ...]

    def __post_init__(self):
        if not self.terms:
            raise InvalidSpecError("energy needs at least one term")
        norm = []
        for term in self.terms:
            kind = term[0]
            if kind == "entropy":
                A = float(term[1])
                if not (A > 0.0):
                    raise InvalidSpecError("entropy coefficient must be > 0")
                norm.append(("entropy", A))
            elif kind == "power":
                A, m = float(term[1]), float(term[2])
                if not (A > 0.0):
                    raise InvalidSpecError("power coefficient must be > 0")
                if not (m > 0.0) or m == 1.0:
                    raise InvalidSpecError(
                        f"power exponent must be positive and != 1, got {m}")
                norm.append(("power", A, m))
            else:
                raise InvalidSpecError(f"unknown energy term kind {kind!r}")
        object.__setattr__(self, "terms", tuple(norm))

    @classmethod
    def entropy(cls, coeff: float = 1.0) -> "EnergySpec":
        return cls(terms=(("entropy", coeff),))

    @classmethod
    def power(cls, m: float, coeff: float = 1.0) -> "EnergySpec":
        """``coeff * x^m / (m - 1)``."""
        return cls(terms=(("power", coeff, m),))

    @property
    def superlinear(self) -> bool:
        """True when ``F(x)/x`` diverges at infinity."""
        return any(t[0] == "entropy" or t[2] > 1.0 for t in self.terms)

    @property
    def negative_slope(self) -> bool:
        """True when ``F' < 0`` on the whole half line (pure fast-diffusion)."""
        return all(t[0] == "power" and t[2] < 1.0 for t in self.terms)

    def value(self, x):
        """``F(x)`` with the continuous extension ``F(0) = 0``."""
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        xv = np.atleast_1d(x)
        out = np.zeros_like(xv)
        pos = xv > 0.0
        xp = xv[pos]
        acc = np.zeros_like(xp)
        for t in self.terms:
            if t[0] == "entropy":
                acc += t[1] * xp * np.log(xp)
            else:
                _, A, m = t
                acc += A * xp**m / (m - 1.0)
        out[pos] = acc
        return float(out[0]) if scalar else out

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for t in self.terms:
            if t[0] == "entropy":
                out += t[1] * (np.log(x) + 1.0)
            else:
                _, A, m = t
                out += A * m * x ** (m - 1.0) / (m - 1.0)
        return out if out.ndim else float(out)

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for t in self.terms:
            if t[0] == "entropy":
                out += t[1] / x
            else:
                _, A, m = t
                out += A * m * x ** (m - 2.0)
        return out if out.ndim else float(out)

    def pressure(self, x):
        """``P(x) = x F'(x) - F(x)``, the quantity driving the flow."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for t in self.terms:
            if t[0] == "entropy":
                out += t[1] * x
            else:
                _, A, m = t
                out += A * x**m
        return out if out.ndim else float(out)

    def derivative_range(self) -> tuple[float, float]:
        """Open range of ``F'`` on ``(0, inf)``."""
        lo = 0.0 if all(t[0] == "power" and t[2] > 1.0 for t in self.terms) else -math.inf
        hi = 0.0 if self.negative_slope else math.inf
        return lo, hi

    def derivative_inverse(self, s):
        """Invert the strictly increasing ``F'`` (0 below its range).

        Vectorized; used to assemble stationary states.
        """
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        lo, hi = self.derivative_range()
        out = np.zeros_like(s)
        inside = (s > lo) & (s < hi)
        if np.any(inside):
            si = s[inside]
            if len(self.terms) == 1 and self.terms[0][0] == "entropy":
                A = self.terms[0][1]
                out[inside] = np.exp(si / A - 1.0)
            elif len(self.terms) == 1:
                _, A, m = self.terms[0]
                out[inside] = ((m - 1.0) * si / (A * m)) ** (1.0 / (m - 1.0))
            else:
                out[inside] = _invert_increasing(self.derivative, si)
        out[s >= hi] = math.inf
        if scalar:
            return float(out[0])
        return out


def _invert_increasing(fp: Callable, s: np.ndarray) -> np.ndarray:
    """Bisection inverse of a strictly increasing map on ``(0, inf)``."""
    lo = np.full_like(s, 1e-300)
    hi = np.ones_like(s)
    for _ in range(2000):
        need = fp(hi) < s
        if not np.any(need):
            break
        hi[need] *= 2.0
    lo = np.where(fp(np.ones_like(s)) < s, np.ones_like(s), lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = fp(mid) < s
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def energy_terms(energy: EnergySpec, x: float) -> EnergyTerms:
    """All pointwise energy quantities at ``x > 0``.

    ``Fstar_of_Fprime`` is the Legendre transform of ``F`` evaluated at
    ``F'(x)``, which collapses to ``x F'(x) - F(x)`` (the envelope identity),
    i.e. the same number as the pressure ``P``.
    """
    if not (x > 0.0):
        raise ParameterError(f"energy terms need x > 0, got {x}")
    F = float(energy.value(x))
    Fp = float(energy.derivative(x))
    Fpp = float(energy.second_derivative(x))
    P = x * Fp - F
    return EnergyTerms(F=F, Fp=Fp, Fpp=Fpp, P=P, Fstar_of_Fprime=P)


# ---------------------------------------------------------------------------
# confining potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PotentialSpec:
    """Nonnegative convex potential on the closed domain.

    ``kind`` is one of ``zero``, ``quadratic`` (``kappa (x - x0)^2 / 2``) or
    ``tabulated`` (piecewise-linear through convex samples).
    """

    kind: str
    kappa: float = 0.0
    center: float = 0.0
    xs: tuple[float, ...] = ()
    vs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "zero":
            return
        if self.kind == "quadratic":
            if self.kappa < 0.0:
                raise InvalidSpecError("quadratic potential needs kappa >= 0")
            return
        if self.kind == "tabulated":
            xs = np.asarray(self.xs, dtype=float)
            vs = np.asarray(self.vs, dtype=float)
            if xs.size < 2 or xs.size != vs.size:
                raise InvalidSpecError("tabulated potential needs matching x/v samples")
            if np.any(np.diff(xs) <= 0):
                raise InvalidSpecError("tabulated potential nodes must increase")
            if np.any(vs < 0):
                raise InvalidSpecError("potential must be nonnegative")
            slopes = np.diff(vs) / np.diff(xs)
            if np.any(np.diff(slopes) < _CONVEXITY_SLACK):
                raise InvalidSpecError("tabulated potential samples are not convex")
            object.__setattr__(self, "xs", tuple(float(v) for v in xs))
            object.__setattr__(self, "vs", tuple(float(v) for v in vs))
            return
        raise InvalidSpecError(f"unknown potential kind {self.kind!r}")

    @classmethod
    def zero(cls) -> "PotentialSpec":
        return cls(kind="zero")

    @classmethod
    def quadratic(cls, kappa: float = 1.0, center: float = 0.0) -> "PotentialSpec":
        return cls(kind="quadratic", kappa=kappa, center=center)

    @classmethod
    def tabulated(cls, xs, vs) -> "PotentialSpec":
        return cls(kind="tabulated", xs=tuple(xs), vs=tuple(vs))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or (self.kind == "quadratic" and self.kappa == 0.0)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(x)
        elif self.kind == "quadratic":
            out = 0.5 * self.kappa * (x - self.center) ** 2
        else:
            out = np.interp(x, self.xs, self.vs)
        return out if out.ndim else float(out)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            out = np.zeros_like(x)
        elif self.kind == "quadratic":
            out = self.kappa * (x - self.center)
        else:
            xs = np.asarray(self.xs)
            slopes = np.diff(np.asarray(self.vs)) / np.diff(xs)
            idx = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(slopes) - 1)
            out = slopes[idx]
        return out if out.ndim else float(out)

    def second_derivative(self, x):
        # Piecewise-linear tables carry no usable curvature; report 0 there.
        x = np.asarray(x, dtype=float)
        if self.kind == "quadratic":
            out = np.full_like(x, self.kappa)
        else:
            out = np.zeros_like(x)
        return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# auxiliary convex function with H'' = x^{1/q*} F''
# ---------------------------------------------------------------------------

def _adaptive_simpson(f: Callable[[float], float], a: float, b: float,
                      rtol: float = 1e-10) -> float:
    """Adaptive Simpson quadrature with relative tolerance ``rtol``."""
    def simpson(lo, flo, hi, fhi, fmid):
        return (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)

    def recurse(lo, flo, hi, fhi, fmid, whole, depth):
        mid = 0.5 * (lo + hi)
        lmid = 0.5 * (lo + mid)
        rmid = 0.5 * (mid + hi)
        flm, frm = f(lmid), f(rmid)
        left = simpson(lo, flo, mid, fmid, flm)
        right = simpson(mid, fmid, hi, fhi, frm)
        if depth <= 0:
            return left + right
        if abs(left + right - whole) <= 15.0 * rtol * (abs(left + right) + 1e-300):
            return left + right + (left + right - whole) / 15.0
        return (recurse(lo, flo, mid, fmid, flm, left, depth - 1)
                + recurse(mid, fmid, hi, fhi, frm, right, depth - 1))

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = simpson(a, fa, b, fb, fm)
    return recurse(a, fa, b, fb, fm, whole, 60)


@dataclass(frozen=True)
class AuxiliaryH:
    """Convex diagnostic companion of an energy: ``H''(x) = x^{1/q*} F''(x)``.

    ``H'`` is integrated from the base point 1 by adaptive Simpson
    quadrature; it is strictly increasing because ``H'' > 0``.
    """

    energy: EnergySpec
    qstar: float

    def __post_init__(self):
        if not (self.qstar > 1.0):
            raise InvalidSpecError("conjugate exponent must exceed 1")

    def h_second(self, x):
        x = np.asarray(x, dtype=float)
        out = x ** (1.0 / self.qstar) * self.energy.second_derivative(x)
        return out if out.ndim else float(out)

    def h_prime(self, x: float) -> float:
        if not (x > 0.0):
            raise ParameterError("h_prime needs x > 0")
        return _adaptive_simpson(lambda s: float(self.h_second(s)), 1.0, float(x))


# ---------------------------------------------------------------------------
# assumption validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    witness: tuple | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "witness": list(self.witness) if self.witness is not None else None,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple[AssumptionCheck, ...]

    @property
    def all_pass(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list[AssumptionCheck]:
        return [c for c in self.checks if not c.passed]

    def as_dict(self) -> dict:
        return {"all_pass": self.all_pass,
                "checks": [c.as_dict() for c in self.checks]}


def _sample_grid(n: int = 1000) -> np.ndarray:
    # Log-spaced over several decades, both tiny and large arguments.
    return np.logspace(-6, 3, n)


def validate_assumptions(cost: CostSpec, energy: EnergySpec,
                         potential: PotentialSpec,
                         domain: tuple[float, float] | None = None,
                         samples: int = 1000) -> AssumptionReport:
    """Sampled validation of every standing assumption.

    Necessary-condition checks on a log-spaced grid; failures are reported
    with the witnessing sample, never raised.
    """
    checks = []
    zs = _sample_grid(samples)

    # cost positivity and value at the origin
    cz = cost.value(zs)
    bad = np.nonzero(cz <= 0.0)[0]
    checks.append(AssumptionCheck(
        name="cost-positivity",
        passed=cost.value(0.0) == 0.0 and bad.size == 0,
        witness=None if bad.size == 0 else (float(zs[bad[0]]), float(cz[bad[0]])),
        detail="c(0)=0 and c(z)>0 for z!=0"))

    # coercivity: c(z)/|z| grows along the tail of the sample grid
    tail = zs[-10:]
    ratios = cost.value(tail) / tail
    coercive = bool(np.all(np.diff(ratios) > 0.0))
    checks.append(AssumptionCheck(
        name="cost-coercivity", passed=coercive,
        witness=None if coercive else (float(tail[0]), float(ratios[0])),
        detail="c(z)/|z| increasing at large |z|"))

    # two-sided growth bound with the cost's own constants
    lowslack = cz - cost.beta * zs**cost.q
    upslack = cost.alpha * (zs**cost.q + 1.0) - cz
    bad = np.nonzero((lowslack < _CONVEXITY_SLACK) | (upslack < _CONVEXITY_SLACK))[0]
    checks.append(AssumptionCheck(
        name="cost-growth-bounds", passed=bad.size == 0,
        witness=None if bad.size == 0 else (float(zs[bad[0]]), float(cz[bad[0]])),
        detail="beta |z|^q <= c(z) <= alpha (|z|^q + 1)"))

    # energy growth alternative
    if energy.superlinear:
        xs = np.logspace(2, 8, 13)
        growth = energy.value(xs) / xs
        ok = bool(np.all(np.diff(growth) > 0.0))
        detail = "F(x)/x diverges at infinity"
        witness = None if ok else (float(xs[0]), float(growth[0]))
    else:
        xs = _sample_grid(samples)
        fp = energy.derivative(xs)
        badi = np.nonzero(fp >= 0.0)[0]
        ok = energy.negative_slope and badi.size == 0
        detail = "F' < 0 on (0, inf) with sublinear growth"
        witness = (float(xs[badi[0]]), float(fp[badi[0]])) if badi.size else None
    checks.append(AssumptionCheck(
        name="energy-superlinear-or-decreasing", passed=ok,
        witness=witness, detail=detail))

    # convexity of x -> x F(1/x): the displacement-convexity workhorse.
    # The grid is log-spaced, so test slope monotonicity (the second
    # differences of the equal-spacing reparametrization), with slack
    # relative to the local slope scale.
    xs = _sample_grid(samples)
    vals = xs * energy.value(1.0 / xs)
    slopes = np.diff(vals) / np.diff(xs)
    scale = np.maximum(np.abs(slopes[1:]), np.abs(slopes[:-1]))
    second = np.diff(slopes)
    badi = np.nonzero(second < _CONVEXITY_SLACK * np.maximum(scale, 1.0))[0]
    checks.append(AssumptionCheck(
        name="energy-displacement-convexity", passed=badi.size == 0,
        witness=None if badi.size == 0 else (float(xs[badi[0] + 1]), float(second[badi[0]])),
        detail="x F(1/x) convex (sampled slope differences)"))

    # admissible exponent window for sublinear power terms (one dimension)
    bad_terms = [t for t in energy.terms
                 if t[0] == "power" and t[2] < 1.0 and t[2] < 1.0 / cost.q]
    checks.append(AssumptionCheck(
        name="energy-power-range", passed=not bad_terms,
        witness=None if not bad_terms else (bad_terms[0][2], 1.0 / cost.q),
        detail="power exponents m < 1 need m >= 1/q"))

    # potential: nonnegative and convex on the working interval
    if domain is not None:
        px = np.linspace(domain[0], domain[1], 257)
    elif potential.kind == "tabulated":
        px = np.linspace(potential.xs[0], potential.xs[-1], 257)
    else:
        px = np.linspace(-10.0, 10.0, 257)
    pv = potential.value(px)
    badi = np.nonzero(pv < 0.0)[0]
    checks.append(AssumptionCheck(
        name="potential-nonnegative", passed=badi.size == 0,
        witness=None if badi.size == 0 else (float(px[badi[0]]), float(pv[badi[0]])),
        detail="V >= 0 on the closed domain"))
    second = pv[:-2] - 2.0 * pv[1:-1] + pv[2:]
    badi = np.nonzero(second < _CONVEXITY_SLACK)[0]
    checks.append(AssumptionCheck(
        name="potential-convexity", passed=badi.size == 0,
        witness=None if badi.size == 0 else (float(px[badi[0] + 1]), float(second[badi[0]])),
        detail="V convex (sampled second differences)"))

    return AssumptionReport(checks=tuple(checks))


# ---------------------------------------------------------------------------
# named problem families
# ---------------------------------------------------------------------------

def preset_specs(name: str, m: float | None = None, p: float | None = None,
                 n: float | None = None) -> tuple[CostSpec, EnergySpec]:
    """Cost/energy pair for the classical model families (one dimension).

    ``fokker-planck``    quadratic cost with ``x ln x``
    ``porous-medium``    quadratic cost with ``x^m/(m-1)``, ``m > 1``
    ``fast-diffusion``   quadratic cost with ``x^m/(m-1)``, ``1/2 <= m < 1``
    ``p-laplacian``      dual-power cost, ``x^m/(m(m-1))`` with
                         ``m = (2p-3)/(p-1)``, ``p >= 3/2``
    ``doubly-degenerate`` dual-power cost, ``n x^m/(m(m-1))`` with
                         ``m = n + (p-2)/(p-1)``
    """
    if name == "fokker-planck":
        return CostSpec.single_power(2.0), EnergySpec.entropy()
    if name == "porous-medium":
        if m is None or not (m > 1.0):
            raise ParameterError("porous-medium preset needs m > 1")
        return CostSpec.single_power(2.0), EnergySpec.power(m)
    if name == "fast-diffusion":
        if m is None or not (0.5 <= m < 1.0):
            raise ParameterError("fast-diffusion preset needs 1/2 <= m < 1")
        return CostSpec.single_power(2.0), EnergySpec.power(m)
    if name == "p-laplacian":
        if p is None or not (p >= 1.5):
            raise ParameterError("p-laplacian preset needs p >= 3/2")
        q = p / (p - 1.0)
        mm = (2.0 * p - 3.0) / (p - 1.0)
        if mm == 1.0:  # p = 2 degenerates to the heat equation
            return CostSpec.single_power(q), EnergySpec.entropy()
        return CostSpec.single_power(q), EnergySpec.power(mm, coeff=1.0 / mm)
    if name == "doubly-degenerate":
        if p is None or n is None:
            raise ParameterError("doubly-degenerate preset needs n and p")
        q = p / (p - 1.0)
        low = (2.0 - p) / (p - 1.0)
        if not (n >= low) or n == 1.0 / (p - 1.0):
            raise ParameterError(
                f"doubly-degenerate preset needs n >= {low} and n != 1/(p-1)")
        mm = n + (p - 2.0) / (p - 1.0)
        return CostSpec.single_power(q), EnergySpec.power(mm, coeff=n / mm)
    raise ParameterError(f"unknown preset {name!r}")
