"""WKB tunneling rates out of the metastable washboard well."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .circuit import (
    FLUX_QUANTUM, HBAR, TWO_PI, CouplingRates, DeviceConfig, LevelStructure,
    barrier_top, derive_couplings, derive_levels, effective_capacitance,
    washboard_potential, washboard_slope,
)


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class TunnelingResult:
    level_index: int
    energy: float           # J above the well minimum
    turning_points: tuple[float, float]
    action: float           # units of hbar
    rate: float             # 1/s

    @property
    def rate_hz(self) -> float:
        """The rate divided by 2pi, as quoted in tables."""
        return self.rate / TWO_PI


def _level_shift(n: int, levels: LevelStructure) -> float:
    # second order cubic correction -k (n^2 + n + 11/30), k fixed by omega10
    k = 5 / (72 * levels.n0)
    return -k * (n * n + n + 11 / 30)


def level_energy(n: int, levels: LevelStructure) -> float:
    """Perturbative energy of level n above the well minimum (J)."""
    return HBAR * levels.omega_p * (n + 0.5 + _level_shift(n, levels))


def count_levels(levels: LevelStructure) -> int:
    """Number of perturbative levels lying below the barrier n0 * hbar omega_p."""
    top = levels.n0 * HBAR * levels.omega_p
    n = 0
    prev = -math.inf
    while True:
        e = level_energy(n, levels)
        if e >= top or e <= prev:
            return n
        prev = e
        n += 1


def level_energies(levels: LevelStructure, count: int = 3) -> list[float]:
    available = count_levels(levels)
    if available < count:
        raise ValueError(
            f"only {available} level(s) fit below the barrier (n0 = {levels.n0:.3f}), "
            f"{count} requested"
        )
    return [level_energy(n, levels) for n in range(count)]


def turning_points(E: float, cfg: DeviceConfig) -> tuple[float, float]:
    """Classical turning points bracketing the barrier for energy ``E``.

    ``E`` is measured from the bottom of the well. Returns the inner point
    (inside the well, before the barrier top) and the outer one (beyond it).
    """
    phi_min = math.asin(cfg.beta)
    phi_top = barrier_top(cfg)
    w_min = float(washboard_potential(phi_min, cfg))
    w_top = float(washboard_potential(phi_top, cfg))
    height = w_top - w_min
    if E <= 0:
        raise ValueError("energy must lie above the well minimum")
    if E > height * (1 + 1e-12):
        raise ValueError("energy lies above the barrier top")
    if E >= height * (1 - 1e-14):
        return phi_top, phi_top

    target = w_min + E

    def f(phi):
        return float(washboard_potential(phi, cfg)) - target

    xtol = 1e-15
    inner = optimize.brentq(f, phi_min, phi_top, xtol=xtol, rtol=4 * np.finfo(float).eps)
    far = phi_top + (phi_top - phi_min)
    while f(far) > 0:
        far += phi_top - phi_min
    outer = optimize.brentq(f, phi_top, far, xtol=xtol, rtol=4 * np.finfo(float).eps)
    return inner, outer


def _action_prefactor(cfg: DeviceConfig) -> float:
    mass = effective_capacitance(cfg) * (FLUX_QUANTUM / TWO_PI) ** 2
    return math.sqrt(2 * mass) / HBAR


def action_integral(E: float, cfg: DeviceConfig, lo: float | None = None,
                    hi: float | None = None) -> float:
    """Under-barrier action in units of hbar over [lo, hi].

    Defaults to the full span between the turning points. Endpoints that
    coincide with a turning point get a square-root algebraic weight so the
    quadrature sees a smooth integrand.
    """
    a, b = turning_points(E, cfg)
    if b <= a:
        return 0.0
    lo = a if lo is None else lo
    hi = b if hi is None else hi
    alpha = 0.5 if lo == a else 0.0
    beta_w = 0.5 if hi == b else 0.0
    w0 = float(washboard_potential(math.asin(cfg.beta), cfg)) + E

    def integrand(phi):
        excess = float(washboard_potential(phi, cfg)) - w0
        denom = 1.0
        if alpha:
            denom *= phi - a
        if beta_w:
            denom *= b - phi
        if denom <= 0:
            # endpoint limit of (W - E) / (phi - a)(b - phi)
            if phi - a <= 0:
                return math.sqrt(abs(washboard_slope(a, cfg)) / (b - a))
            return math.sqrt(abs(washboard_slope(b, cfg)) / (b - a))
        return math.sqrt(max(excess, 0.0) / denom)

    value, err, *rest = integrate.quad(
        integrand, lo, hi, weight="alg", wvar=(alpha, beta_w),
        epsabs=0.0, epsrel=1e-10, limit=200, full_output=1,
    )
    if len(rest) > 1 and abs(err) > 1e-6 * abs(value):
        raise QuadratureError(f"action quadrature did not converge: {rest[1]}")
    return _action_prefactor(cfg) * value


def tunneling_rate(level_index: int, levels: LevelStructure, cfg: DeviceConfig) -> TunnelingResult:
    """WKB escape rate (omega_p / 2pi) * exp(-2 sigma) of a metastable level."""
    E = level_energies(levels, level_index + 1)[level_index]
    points = turning_points(E, cfg)
    sigma = action_integral(E, cfg)
    rate = levels.omega_p / TWO_PI * math.exp(-2 * sigma)
    return TunnelingResult(level_index, E, points, sigma, rate)


def wkb_rates(cfg: DeviceConfig, count: int = 3) -> list[TunnelingResult]:
    levels = derive_levels(cfg)
    return [tunneling_rate(n, levels, cfg) for n in range(count)]


def cubic_action(E: float, WJ: float, beta: float, C: float) -> float:
    """Closed-form under-barrier action of the cubic well, via elliptic integrals.

    The cubic V - E = (WJ beta / 6)(x - x1)(x - x2)(x3 - x) is integrated
    between its two upper roots.
    """
    a2 = math.sqrt(1 - beta ** 2) / 2
    roots = np.sort(np.roots([beta / 6, -a2, 0.0, E / WJ]).real)
    x1, x2, x3 = roots
    u, v = x2 - x1, x3 - x2
    m = v / (x3 - x1)
    shape = 2 / 15 * math.sqrt(x3 - x1) * (
        2 * (u * u + u * v + v * v) * special.ellipe(m) - u * (2 * u + v) * special.ellipk(m)
    )
    mass = C * (FLUX_QUANTUM / TWO_PI) ** 2
    return math.sqrt(2 * mass * WJ * beta / 6) / HBAR * shape


def two_level_bias(cfg: DeviceConfig) -> float:
    """Bias of the one-photon mode, checked to host exactly two levels."""
    beta = cfg.beta_two_level
    levels = derive_levels(cfg.with_beta(beta))
    n = count_levels(levels)
    if n != 2:
        raise ValueError(f"bias {beta} hosts {n} level(s) in the well, expected 2")
    return beta


def device_rates(cfg: DeviceConfig, tunneling: str = "auto") -> CouplingRates:
    """Full rate set for ``cfg``.

    ``tunneling`` selects the source of gamma0..gamma2: ``"wkb"`` always
    computes them, ``"config"`` requires the overrides in ``cfg``, and
    ``"auto"`` uses each override when present and WKB otherwise.
    """
    levels = derive_levels(cfg)
    overrides = (cfg.gamma0, cfg.gamma1, cfg.gamma2)
    if tunneling not in ("auto", "wkb", "config"):
        raise ValueError(f"unknown tunneling source {tunneling!r}")
    if tunneling == "config" and any(g is None for g in overrides):
        raise ValueError("tunneling='config' needs gamma0, gamma1 and gamma2 in the config")
    need_wkb = tunneling == "wkb" or any(g is None for g in overrides)
    wkb = [r.rate for r in wkb_rates(cfg)] if need_wkb else [0.0] * 3
    gammas = []
    for override, computed in zip(overrides, wkb):
        if tunneling != "wkb" and override is not None:
            gammas.append(TWO_PI * override)
        else:
            gammas.append(computed)
    return derive_couplings(levels, cfg, tuple(gammas))


def two_level_gamma1(cfg: DeviceConfig, tunneling: str = "auto") -> float:
    """Excited-level tunneling rate (1/s) in the one-photon mode."""
    if tunneling != "wkb" and cfg.gamma1_two_level is not None:
        return TWO_PI * cfg.gamma1_two_level
    beta = two_level_bias(cfg)
    c2 = cfg.with_beta(beta)
    return tunneling_rate(1, derive_levels(c2), c2).rate
