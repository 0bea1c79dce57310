"""Acceptance criteria 1-7, one test each, each reporting a single verdict line."""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from jpmcount import liouville as lv
from jpmcount.circuit import TWO_PI, derive_levels, n_max, table1_config
from jpmcount.harness import cross_check_rate_vs_lindblad, lambda_scaling_study
from jpmcount.rates import (
    FAST_DECOHERENCE_ONSET, RateSystemState, discrimination_error,
    integrate_rate_equations, optimal_time, p_bright, p_false, two_step_error,
)
from jpmcount.semiclassics import device_rates, two_level_gamma1, wkb_rates


@pytest.fixture(scope="module")
def cfg():
    return table1_config()


@pytest.fixture(scope="module")
def rates(cfg):
    return device_rates(cfg)


def verdict(number: int, checks: dict[str, bool], detail: str, elapsed: float):
    ok = all(checks.values())
    failed = [name for name, passed in checks.items() if not passed]
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.3g} s]"
    if failed:
        line += "  failed: " + ", ".join(failed)
    ACCEPTANCE_LINES[number] = line
    print(line)
    assert ok, line


def test_criterion_1_structure(cfg):
    start = time.perf_counter()
    levels = derive_levels(cfg)
    rates = device_rates(cfg)
    delta = levels.Delta / TWO_PI / 1e6
    omega = levels.omega / TWO_PI / 1e9
    b20 = rates.B20 / TWO_PI / 1e6
    nmax, nmax_unit = n_max(rates), n_max(rates, 1.0)
    elapsed = time.perf_counter() - start
    verdict(1, {
        "Delta": abs(delta / 194 - 1) <= 0.01,
        "omega": abs(omega / 8.2 - 1) <= 0.01,
        "B20": abs(b20 / 0.35 - 1) <= 0.05,
        "N_max": nmax == 14,
        "N_max at margin 1": nmax_unit == 22,
        "runtime": elapsed < 1.0,
    }, f"Delta/2pi={delta:.4g} MHz omega/2pi={omega:.4g} GHz B20/2pi={b20:.4g} MHz "
       f"N_max={nmax} (margin 1: {nmax_unit})", elapsed)


def test_criterion_2_performance(rates):
    start = time.perf_counter()
    t_opt = optimal_time(rates).t_opt
    pf = 100 * float(p_false(t_opt, rates.gamma0))
    pb = 100 * float(p_bright(t_opt, rates).value)
    elapsed = time.perf_counter() - start
    verdict(2, {
        "t_opt": abs(t_opt / 4.2e-6 - 1) <= 0.05,
        "P_false": abs(pf - 0.1) <= 0.02,
        "P_bright": abs(pb - 98.6) <= 0.2,
        "branching floor": abs(100 * rates.branching - 1.3) <= 0.1,
        "runtime": elapsed < 1.0,
    }, f"t_opt={t_opt * 1e6:.4g} us P_false={pf:.4g}% P_bright={pb:.4g}% "
       f"floor={100 * rates.branching:.3g}%", elapsed)


def test_criterion_3_protocol(cfg, rates):
    start = time.perf_counter()
    report = two_step_error(rates, two_level_gamma1(cfg))
    p01, eps2 = 100 * report.p_bright_01, 100 * report.eps2
    elapsed = time.perf_counter() - start
    verdict(3, {
        "P_bright 0/1": abs(p01 - 98.3) <= 0.2,
        "eps2": abs(eps2 - 1.1) <= 0.2,
        "runtime": elapsed < 1.0,
    }, f"P_bright01={p01:.4g}% eps2={eps2:.4g}%", elapsed)


def test_criterion_4_wkb_rates(cfg):
    start = time.perf_counter()
    hz = [r.rate_hz for r in wkb_rates(cfg)]
    elapsed = time.perf_counter() - start
    checks = {f"gamma{k}": 1 / 5 <= value / ref <= 5
              for k, (value, ref) in enumerate(zip(hz, (37.0, 54e3, 41e6)))}
    checks["hierarchy"] = hz[1] / hz[0] > 1e2 and hz[2] / hz[1] > 1e2
    checks["runtime"] = elapsed < 1.0
    verdict(4, checks, f"gamma/2pi = {hz[0]:.4g} Hz, {hz[1]:.4g} Hz, {hz[2]:.4g} Hz", elapsed)


def test_criterion_5_master_equation_oracle(cfg, rates):
    start = time.perf_counter()
    cross = cross_check_rate_vs_lindblad(cfg)
    t = np.linspace(0, 3 * optimal_time(rates).t_opt, 1000)
    ode = integrate_rate_equations(RateSystemState.fock(2), rates, t)
    lap = integrate_rate_equations(RateSystemState.fock(2), rates, t, method="laplace")
    laplace_gap = float(np.abs(ode.p_click - lap.p_click).max())
    elapsed = time.perf_counter() - start
    verdict(5, {
        "Lindblad vs formula": cross.formula_deviation < 0.02,
        "Lindblad vs rate ODE": cross.deviation < 0.02,
        "Laplace vs rate ODE": laplace_gap < 1e-6,
        "runtime": elapsed < 120,
    }, f"max|Lindblad-formula|={100 * cross.formula_deviation:.3g} pp "
       f"max|Lindblad-ODE|={100 * cross.deviation:.3g} pp max|Laplace-ODE|={laplace_gap:.2g}",
        elapsed)


def test_criterion_6_perturbative_order(cfg):
    start = time.perf_counter()
    study = lambda_scaling_study(cfg, [0.025, 0.05, 0.1])
    elapsed = time.perf_counter() - start
    verdict(6, {
        "Hamiltonian residual slope": abs(study.hamiltonian_slope - 2) <= 0.2,
        "dressed Lindbladian residual slope": abs(study.dissipator_slope - 2) <= 0.2,
        "runtime": elapsed < 60,
    }, f"slopes: Hamiltonian={study.hamiltonian_slope:.3f} "
       f"(sign-matched={study.matched_slope:.3f}) dressed={study.dissipator_slope:.3f}",
        elapsed)


@pytest.mark.slow
def test_criterion_7_invariants(rates):
    start = time.perf_counter()
    layout = lv.HilbertLayout(6)
    liou = lv.build_lindbladian(rates, layout, lv.build_hamiltonian_rotating(rates, layout))
    opt = optimal_time(rates)
    times = np.linspace(0, 2 * opt.t_opt, 201)
    traj = lv.evolve(lv.JointState.basis(layout, 2, 0), liou, times[-1], times)
    drift = float(np.abs(traj.traces() - 1).max())
    herm = float(max(np.abs(rho - rho.conj().T).max() for rho in traj.rhos))
    min_eig = float(min(np.linalg.eigvalsh(rho).min() for rho in traj.rhos))

    grid = np.linspace(0, 3 * opt.t_opt, 1000)
    totals = integrate_rate_equations(RateSystemState.fock(2), rates, grid).totals()
    conservation = float(np.abs(totals - 1).max())

    window = np.linspace(FAST_DECOHERENCE_ONSET / rates.width2, 10 * opt.t_opt, 500)
    monotone = bool(np.all(np.diff(p_false(window, rates.gamma0)) > 0)
                    and np.all(np.diff(p_bright(window, rates).value) > 0))
    eps_at_topt = float(discrimination_error(opt.t_opt, rates).value)
    elapsed = time.perf_counter() - start
    verdict(7, {
        "trace drift": drift < 1e-7,
        "Hermiticity": herm < 1e-12,
        "positivity": min_eig > -1e-8,
        "rate conservation": conservation < 1e-9,
        "monotone probabilities": monotone,
        "argmin at t_opt": abs(opt.t_numeric / opt.t_opt - 1) < 0.02,
        "error minimum": abs(eps_at_topt / opt.eps_min - 1) < 0.02,
        "runtime": elapsed < 60,
    }, f"trace drift={drift:.2g} hermiticity={herm:.2g} min eig={min_eig:.2g} "
       f"rate totals={conservation:.2g} argmin/t_opt={opt.t_numeric / opt.t_opt:.4f}", elapsed)
