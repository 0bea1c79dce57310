import math

import numpy as np
import pytest
from scipy import integrate

from jpmcount.circuit import (
    FLUX_QUANTUM, HBAR, TWO_PI, barrier_top, derive_levels, table1_config,
    washboard_potential,
)
from jpmcount.semiclassics import (
    action_integral, count_levels, cubic_action, device_rates, level_energies,
    level_energy, turning_points, two_level_bias, two_level_gamma1, wkb_rates,
)


@pytest.fixture(scope="module")
def cfg():
    return table1_config()


@pytest.fixture(scope="module")
def levels(cfg):
    return derive_levels(cfg)


@pytest.fixture(scope="module")
def wkb(cfg):
    return wkb_rates(cfg)


def well_height(cfg):
    phi_min = math.asin(cfg.beta)
    return float(washboard_potential(barrier_top(cfg), cfg) - washboard_potential(phi_min, cfg))


# --- level energies --------------------------------------------------------

def test_level_spacings_match_transition_frequencies(levels):
    e0, e1, e2 = level_energies(levels)
    assert e1 - e0 == pytest.approx(HBAR * levels.omega10, rel=1e-12)
    assert e2 - e0 == pytest.approx(HBAR * levels.omega20, rel=1e-12)
    assert e1 - e0 == pytest.approx(HBAR * (levels.omega + levels.Delta), rel=1e-12)
    assert e2 - e1 < e1 - e0


def test_levels_against_perturbation_sum(cfg, levels):
    """Second-order energies of the cubic well from an explicit sum over states."""
    size = 60
    a = np.diag(np.sqrt(np.arange(1, size)), 1)
    mass = cfg.C * (FLUX_QUANTUM / TWO_PI) ** 2
    zpf = math.sqrt(HBAR / (2 * mass * levels.omega_p))
    x = zpf * (a + a.T)
    v3 = -levels.WJ * cfg.beta / 6 * np.linalg.matrix_power(x, 3)
    bare = HBAR * levels.omega_p * (np.arange(size) + 0.5)
    for n in range(3):
        shift = sum(v3[k, n] ** 2 / (bare[n] - bare[k]) for k in range(size - 5) if k != n)
        assert level_energy(n, levels) == pytest.approx(bare[n] + shift, rel=1e-9)


def test_ground_energy_anchor(levels):
    e0 = level_energy(0, levels)
    assert e0 == pytest.approx(HBAR * levels.omega_p * (0.5 - 11 / (432 * levels.n0)), rel=1e-12)


def test_harmonic_limit_equal_spacing(cfg):
    lv = derive_levels(cfg.with_beta(0.2))
    e = level_energies(lv, 4)
    gaps = np.diff(e) / (HBAR * lv.omega_p)
    assert np.allclose(gaps, 1.0, atol=1e-3)


def test_too_few_levels_rejected(cfg):
    with pytest.raises(ValueError, match="level"):
        level_energies(derive_levels(cfg.with_beta(0.999)))


# --- turning points ----------------------------------------------------------

def bisect_root(f, lo, hi, steps=200):
    flo = f(lo)
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if (f(mid) > 0) == (flo > 0):
            lo, flo = mid, f(mid)
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_turning_points_for_second_level(cfg, levels):
    e2 = level_energies(levels)[2]
    inner, outer = turning_points(e2, cfg)
    top = barrier_top(cfg)
    assert levels.phi_min < inner < top < outer < levels.phi_min + 1.5 * levels.delta_max
    w0 = float(washboard_potential(levels.phi_min, cfg))
    f = lambda p: float(washboard_potential(p, cfg)) - (w0 + e2)
    assert abs(f(inner)) < 1e-12 * levels.WJ
    assert abs(f(outer)) < 1e-12 * levels.WJ
    assert inner == pytest.approx(bisect_root(f, levels.phi_min, top), abs=1e-12)
    assert outer == pytest.approx(bisect_root(f, top, top + 2), abs=1e-12)


def test_turning_points_separate_as_energy_drops(cfg):
    h = well_height(cfg)
    widths = [np.diff(turning_points(frac * h, cfg))[0] for frac in (0.99, 0.8, 0.5, 0.2, 0.01)]
    assert all(a < b for a, b in zip(widths, widths[1:]))


def test_turning_points_at_barrier_top(cfg):
    inner, outer = turning_points(well_height(cfg), cfg)
    assert inner == pytest.approx(barrier_top(cfg), abs=1e-6)
    assert outer == pytest.approx(barrier_top(cfg), abs=1e-6)


def test_turning_points_near_bottom(cfg, levels):
    inner, _ = turning_points(1e-6 * well_height(cfg), cfg)
    assert inner - levels.phi_min < 0.01


@pytest.mark.parametrize("frac", [-0.1, 0.0, 1.1])
def test_turning_points_out_of_range(cfg, frac):
    with pytest.raises(ValueError):
        turning_points(frac * well_height(cfg), cfg)


# --- actions and rates -------------------------------------------------------

def test_table_tunneling_rates_within_factor_five(wkb):
    for result, ref in zip(wkb, (37.0, 54e3, 41e6)):
        assert 1 / 5 < result.rate_hz / ref < 5


def test_tunneling_hierarchy(wkb):
    rates = [r.rate for r in wkb]
    assert rates[1] / rates[0] > 1e2
    assert rates[2] / rates[1] > 1e2
    assert all(r.action > 0 and r.rate > 0 for r in wkb)
    actions = [r.action for r in wkb]
    assert actions[0] > actions[1] > actions[2]
    # the spread in exponents carries the hierarchy
    assert 2 * (actions[0] - actions[2]) == pytest.approx(math.log(rates[2] / rates[0]))


def test_wkb_rate_formula(levels, wkb):
    for r in wkb:
        assert r.rate == pytest.approx(levels.omega_p / TWO_PI * math.exp(-2 * r.action))
        assert r.rate_hz == pytest.approx(r.rate / TWO_PI)


def test_action_additivity(cfg, levels):
    for e in level_energies(levels):
        a, b = turning_points(e, cfg)
        mid = 0.5 * (a + b)
        whole = action_integral(e, cfg)
        parts = action_integral(e, cfg, hi=mid) + action_integral(e, cfg, lo=mid)
        assert parts == pytest.approx(whole, rel=1e-9)


def test_action_against_plain_quadrature(cfg, levels):
    e = level_energies(levels)[1]
    a, b = turning_points(e, cfg)
    w0 = float(washboard_potential(levels.phi_min, cfg)) + e
    mass = cfg.C * (FLUX_QUANTUM / TWO_PI) ** 2
    # substitution phi = a + (b - a) sin^2(u) removes both endpoint singularities
    def f(u):
        phi = a + (b - a) * math.sin(u) ** 2
        return math.sqrt(max(float(washboard_potential(phi, cfg)) - w0, 0.0)) * (b - a) * math.sin(2 * u)
    val, _ = integrate.quad(f, 0, math.pi / 2, epsabs=0, epsrel=1e-12, limit=200)
    assert action_integral(e, cfg) == pytest.approx(math.sqrt(2 * mass) / HBAR * val, rel=1e-8)


def test_rate_increases_with_energy(cfg):
    h = well_height(cfg)
    actions = [action_integral(frac * h, cfg) for frac in (0.1, 0.3, 0.5, 0.7, 0.9)]
    assert all(a > b for a, b in zip(actions, actions[1:]))


def test_cubic_closed_form_against_quadrature(levels):
    """The elliptic-integral action reproduces direct quadrature on the cubic."""
    beta, wj = levels.beta, levels.WJ
    e = level_energies(levels)[1]
    c2, c3 = math.sqrt(1 - beta ** 2) / 2, beta / 6
    roots = np.sort(np.roots([c3, -c2, 0.0, e / wj]).real)
    x2, x3 = roots[1], roots[2]
    v = lambda d: wj * (c2 * d * d - c3 * d ** 3) - e
    def f(u):
        d = x2 + (x3 - x2) * math.sin(u) ** 2
        return math.sqrt(max(v(d), 0.0)) * (x3 - x2) * math.sin(2 * u)
    val, _ = integrate.quad(f, 0, math.pi / 2, epsabs=0, epsrel=1e-12)
    mass = 2e-12 * (FLUX_QUANTUM / TWO_PI) ** 2
    assert cubic_action(e, wj, beta, 2e-12) == pytest.approx(math.sqrt(2 * mass) / HBAR * val, rel=1e-9)


def test_action_close_to_cubic_oracle(cfg, levels):
    for e in level_energies(levels):
        exact = action_integral(e, cfg)
        oracle = cubic_action(e, levels.WJ, cfg.beta, cfg.C)
        assert abs(exact - oracle) / oracle < 0.10


# --- bias points --------------------------------------------------------------

def test_level_counts(cfg):
    assert count_levels(derive_levels(cfg)) == 3
    assert count_levels(derive_levels(cfg.with_beta(0.98473))) == 2
    assert count_levels(derive_levels(cfg.with_beta(0.999))) < 2


def test_two_level_bias(cfg):
    assert two_level_bias(cfg) == 0.98473
    with pytest.raises(ValueError, match="level"):
        two_level_bias(table1_config(beta_two_level=0.97987))
    with pytest.raises(ValueError, match="level"):
        two_level_bias(table1_config(beta_two_level=0.999))


def test_two_level_gamma1(cfg):
    wkb_value = two_level_gamma1(cfg, tunneling="wkb") / TWO_PI
    assert 19e6 / 5 < wkb_value < 19e6 * 5
    assert two_level_gamma1(cfg) == pytest.approx(TWO_PI * 19e6)


# --- rate sources ---------------------------------------------------------------

def test_device_rates_sources(cfg, wkb):
    configured = device_rates(cfg)
    assert configured.gamma0 == pytest.approx(TWO_PI * 37.0)
    computed = device_rates(cfg, tunneling="wkb")
    assert computed.gamma2 == pytest.approx(wkb[2].rate)
    bare = table1_config(gamma0=None, gamma1=None, gamma2=None)
    assert device_rates(bare).gamma1 == pytest.approx(wkb[1].rate)
    with pytest.raises(ValueError):
        device_rates(bare, tunneling="config")
    with pytest.raises(ValueError):
        device_rates(cfg, tunneling="guess")
