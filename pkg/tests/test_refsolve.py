import numpy as np
import pytest

from wflow.convex import CostSpec, EnergySpec, PotentialSpec
from wflow.density import Domain, GridDensity, l1_distance, normalize
from wflow.errors import ParameterError
from wflow.refsolve import (
    FdConfig,
    barenblatt,
    barenblatt_density,
    fd_solve,
    gibbs_state,
)

Q2 = CostSpec.single_power(2.0)
ENTROPY = EnergySpec.entropy()
UNIT = Domain(0.0, 1.0)
SYM = Domain(-1.0, 1.0)


def test_fd_config_validation():
    with pytest.raises(ParameterError):
        FdConfig(n=8)
    with pytest.raises(ParameterError):
        FdConfig(dt=0.0)


def test_equilibrium_is_stationary():
    n = 64
    rho, _ = normalize(np.ones(n), UNIT)
    traj = fd_solve(Q2, ENTROPY, PotentialSpec.zero(), UNIT, rho, T=0.01,
                    cfg=FdConfig(n=n, dt=1e-3))
    assert l1_distance(traj.final, rho) <= 1e-10


def test_gibbs_state_is_stationary_under_fd():
    n = 64
    V = PotentialSpec.quadratic(1.0, 0.0)
    rho = gibbs_state(ENTROPY, V, SYM, n)
    traj = fd_solve(Q2, ENTROPY, V, SYM, rho, T=0.01, cfg=FdConfig(n=n, dt=1e-3))
    assert l1_distance(traj.final, rho) <= 1e-8


def test_heat_mode_decay_rate():
    # second Neumann mode on (0,1) decays like exp(-4 pi^2 t)
    n = 256
    T, dt = 0.05, 1e-4
    xc = UNIT.centers(n)
    rho, _ = normalize(1.0 + 0.5 * np.cos(2 * np.pi * xc), UNIT)[0:2]
    traj = fd_solve(Q2, ENTROPY, PotentialSpec.zero(), UNIT, rho, T=T,
                    cfg=FdConfig(n=n, dt=dt))
    mode = lambda r: 2.0 * float(np.sum(r.values * np.cos(2 * np.pi * xc)) * r.dx)
    ratio = mode(traj.final) / mode(rho)
    assert ratio == pytest.approx(np.exp(-4.0 * np.pi**2 * T), rel=1e-2)


def test_fd_mass_conservation():
    n = 128
    xc = UNIT.centers(n)
    rho, _ = normalize(1.0 + 0.8 * np.sin(np.pi * xc) ** 2, UNIT)
    traj = fd_solve(Q2, ENTROPY, PotentialSpec.zero(), UNIT, rho, T=0.02,
                    cfg=FdConfig(n=n, dt=1e-3))
    for r in traj.densities:
        assert abs(r.mass() - 1.0) <= 1e-12


def test_fd_maximum_principle():
    n = 128
    rng = np.random.default_rng(4)
    vals = rng.uniform(0.5, 1.5, n)
    # smooth the random data a little to keep Newton friendly
    for _ in range(3):
        vals = np.convolve(np.r_[vals[0], vals, vals[-1]],
                           [0.25, 0.5, 0.25], mode="valid")
    rho, _ = normalize(vals, UNIT)
    traj = fd_solve(Q2, ENTROPY, PotentialSpec.zero(), UNIT, rho, T=0.02,
                    cfg=FdConfig(n=n, dt=2e-3))
    lo, hi = rho.values.min(), rho.values.max()
    for r in traj.densities:
        assert r.values.max() <= hi + 1e-8
        assert r.values.min() >= lo - 1e-8


# ---------------------------------------------------------------------------
# stationary states
# ---------------------------------------------------------------------------

def test_gibbs_uniform_without_potential():
    rho = gibbs_state(ENTROPY, PotentialSpec.zero(), UNIT, 64)
    assert np.allclose(rho.values, 1.0, atol=1e-10)


def test_gibbs_gaussian_normalization():
    n = 512
    V = PotentialSpec.quadratic(1.0, 0.0)
    rho = gibbs_state(ENTROPY, V, SYM, n)
    xc = SYM.centers(n)
    target = np.exp(-0.5 * xc**2)
    target /= np.sum(target) * rho.dx
    assert np.max(np.abs(rho.values - target)) <= 1e-8
    # partition function of exp(-x^2/2) on (-1,1)
    z = np.sum(np.exp(-0.5 * xc**2)) * rho.dx
    assert z == pytest.approx(1.7113, abs=2e-4)


def test_gibbs_state_has_no_step_velocity():
    # the flux-side field (c*)'(d(F'(rho)+V)) vanishes on the positivity set
    n = 128
    V = PotentialSpec.quadratic(1.0, 0.0)
    for F in (ENTROPY, EnergySpec.power(2.0)):
        rho = gibbs_state(F, V, SYM, n)
        xc = SYM.centers(n)
        pos = rho.values > 1e-10
        w = F.derivative(rho.values[pos]) + V.value(xc[pos])
        dw = np.gradient(w, xc[pos])
        vel = Q2.conjugate_gradient(dw)
        interior = vel[1:-1] if vel.size > 2 else vel
        assert np.max(np.abs(interior)) <= 10.0 * rho.dx


def test_gibbs_quadratic_energy_clamps():
    # F = x^2: stationary profile (lam - V)/2 clamped at zero
    n = 256
    V = PotentialSpec.quadratic(1.0, 0.0)
    F = EnergySpec.power(2.0)
    rho = gibbs_state(F, V, SYM, n)
    xc = SYM.centers(n)
    lam_plus = 2.0 * rho.values + V.value(xc)
    inside = rho.values > 1e-12
    lam = np.mean(lam_plus[inside])
    assert np.allclose(lam_plus[inside], lam, atol=1e-8)
    assert abs(rho.mass() - 1.0) <= 1e-12
    # hand integration: mass = int (lam - x^2/2)/2 over {V < lam}
    r = np.sqrt(2.0 * lam)
    hand = (lam * r - r**3 / 6.0) if r <= 1.0 else (lam - 1.0 / 6.0)
    assert hand == pytest.approx(1.0, abs=1e-3)


# ---------------------------------------------------------------------------
# source-type profile
# ---------------------------------------------------------------------------

def test_barenblatt_symmetry_and_mass():
    from scipy.integrate import quad

    xs = np.linspace(-3, 3, 1001)
    for t in (0.01, 0.1, 1.0):
        vals = barenblatt(2.0, 1.0, t, xs)
        assert np.allclose(vals, vals[::-1], atol=1e-14)
        # support edge where the profile clips to zero
        edge = 0.0
        hi = 10.0
        while barenblatt(2.0, 1.0, t, hi) > 0:
            hi *= 2
        lo = 0.0
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if barenblatt(2.0, 1.0, t, mid) > 0:
                lo = mid
            else:
                hi = mid
        edge = 0.5 * (lo + hi)
        mass, _ = quad(lambda x: barenblatt(2.0, 1.0, t, x),
                       -edge - 1.0, edge + 1.0, points=[-edge, edge], limit=200)
        assert mass == pytest.approx(1.0, abs=1e-10)


def test_barenblatt_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        barenblatt(1.0, 1.0, 0.1, 0.0)
    with pytest.raises(ParameterError):
        barenblatt(2.0, 1.0, 0.0, 0.0)


def test_barenblatt_scaling_invariance():
    # rho(t, x) = t^(-a) G(x t^(-a)): check the self-similar collapse
    a = 1.0 / 3.0
    xs = np.linspace(-1, 1, 201)
    v1 = barenblatt(2.0, 1.0, 0.2, xs)
    v2 = barenblatt(2.0, 1.0, 0.4, xs * (0.4 / 0.2) ** a) * (0.4 / 0.2) ** a
    assert np.allclose(v1, v2, atol=1e-12)


def test_fd_reproduces_barenblatt_flow():
    # porous medium m=2: start at t0, integrate to t1, compare profiles
    n = 512
    dom = Domain(-1.5, 1.5)
    t0, t1 = 0.05, 0.1
    rho0 = barenblatt_density(2.0, t0, dom, n)
    traj = fd_solve(Q2, EnergySpec.power(2.0), PotentialSpec.zero(), dom,
                    rho0, T=t1 - t0, cfg=FdConfig(n=n, dt=1e-3))
    target = barenblatt_density(2.0, t1, dom, n)
    assert l1_distance(traj.final, target) <= 5e-2
