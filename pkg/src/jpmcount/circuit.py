"""Static device quantities of a current-biased Josephson photomultiplier.

Everything here is derived from the raw circuit description held in
:class:`DeviceConfig`: the washboard potential, the perturbative level
structure of the metastable well, the resonator couplings and the
capacitances renormalized by the coupling capacitor.

Unit conventions: :class:`DeviceConfig` stores rates as ordinary
frequencies (Hz, i.e. the ``Gamma/2pi`` values quoted in tables). All
derived records use angular units (rad/s) and SI energies (J).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants

E_CHARGE = constants.e
PLANCK = constants.h
HBAR = constants.hbar
FLUX_QUANTUM = constants.h / (2 * constants.e)
K_BOLTZMANN = constants.k

TWO_PI = 2 * math.pi

DEFAULT_GAMMA11_HZ = 1.0e6
DEFAULT_TWO_LEVEL_BETA = 0.98473
DEFAULT_NMAX_MARGIN = 0.65


@dataclass(frozen=True)
class DeviceConfig:
    """Raw circuit inputs.

    Capacitances in F, currents in A, inductance in H and every rate in Hz
    (ordinary frequency). ``gamma0``/``gamma1``/``gamma2`` are optional
    tunneling-rate overrides in Hz; when ``None`` the rates come from the
    WKB calculation. ``Gamma21`` defaults to ``2 * Gamma10``.
    """

    C: float
    I0: float
    beta: float
    Gamma10: float
    Gamma22: float
    Gamma11: float = DEFAULT_GAMMA11_HZ
    lambda2: float = 0.1
    Cres: float = 0.0
    Lres: float = 0.0
    Ccoup: float = 0.0
    gap_frequency: float = 82e9
    Gamma21: float | None = None
    gamma0: float | None = None
    gamma1: float | None = None
    gamma2: float | None = None
    temperature: float | None = None
    beta_two_level: float = DEFAULT_TWO_LEVEL_BETA
    gamma1_two_level: float | None = None

    def __post_init__(self):
        nonneg = ["C", "I0", "Gamma10", "Gamma22", "Gamma11", "lambda2", "Cres",
                  "Lres", "Ccoup", "gap_frequency", "Gamma21", "gamma0", "gamma1",
                  "gamma2", "temperature", "gamma1_two_level"]
        for name in nonneg:
            value = getattr(self, name)
            if value is None:
                continue
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite non-negative number, got {value!r}")
        for name in ("beta", "beta_two_level"):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {value!r}")
        if self.C <= 0:
            raise ValueError(f"C must be positive, got {self.C!r}")

    def with_beta(self, beta: float) -> "DeviceConfig":
        return replace(self, beta=beta)


def table1_config(**overrides) -> DeviceConfig:
    """Junction and decoherence parameters of the reference two-photon device.

    The tabulated tunneling rates (37 Hz, 54 kHz, 41 MHz) are included as
    overrides; pass ``gamma0=None`` etc. to fall back to WKB values.
    """
    params = dict(
        C=2e-12, I0=10e-6, beta=0.97987, Gamma10=318e3, Gamma22=2.1e6,
        Gamma11=DEFAULT_GAMMA11_HZ, lambda2=0.1, gap_frequency=82e9,
        gamma0=37.0, gamma1=54e3, gamma2=41e6, gamma1_two_level=19e6,
    )
    params.update(overrides)
    return DeviceConfig(**params)


@dataclass(frozen=True)
class LevelStructure:
    """Well quantities in SI energies and angular frequencies."""

    WJ: float
    WC: float
    beta: float
    omega_p: float
    n0: float
    omega10: float
    omega20: float
    omega: float
    Delta: float
    phi_min: float
    delta_max: float


@dataclass(frozen=True)
class RenormalizedCapacitances:
    C_t: float
    Cres_t: float
    Ccoup_t: float

    def impedance(self, Lres: float) -> float:
        """Renormalized resonator impedance sqrt(Lres / Cres_t)."""
        return math.sqrt(Lres / self.Cres_t)

    def resonator_frequency(self, Lres: float) -> float:
        return 1.0 / math.sqrt(Lres * self.Cres_t)


@dataclass(frozen=True)
class CouplingRates:
    """Couplings and incoherent rates, all in angular units (1/s).

    Composite quantities (Stark shifts, effective two-photon coupling,
    total level widths and the full decoherence rates) are derived on access
    so they can never fall out of step with the primary fields.
    """

    Delta: float
    lambda1: float
    lambda2: float
    Gamma10: float
    Gamma21: float
    Gamma11: float
    Gamma22: float
    gamma0: float = 0.0
    gamma1: float = 0.0
    gamma2: float = 0.0

    @property
    def g1(self) -> float:
        return self.lambda1 * self.Delta

    @property
    def g2(self) -> float:
        return self.lambda2 * self.Delta

    @property
    def g_tilde(self) -> float:
        return self.g1 * self.g2 / self.Delta if self.Delta else 0.0

    @property
    def chi1(self) -> float:
        return self.g1 ** 2 / self.Delta if self.Delta else 0.0

    @property
    def chi2(self) -> float:
        return self.g2 ** 2 / self.Delta if self.Delta else 0.0

    @property
    def GammaT1(self) -> float:
        return self.gamma1 + self.Gamma10

    @property
    def GammaT2(self) -> float:
        return self.gamma2 + self.Gamma21

    @property
    def d01(self) -> float:
        return self.gamma0 + self.gamma1 + self.Gamma10 + self.Gamma11

    @property
    def d12(self) -> float:
        return self.gamma1 + self.gamma2 + self.Gamma10 + self.Gamma21 + self.Gamma22

    @property
    def d02(self) -> float:
        return self.gamma0 + self.gamma2 + self.Gamma21 + self.Gamma22

    @property
    def width2(self) -> float:
        """Linewidth of the two-photon transition, GammaT2 + Gamma22."""
        return self.GammaT2 + self.Gamma22

    @property
    def branching(self) -> float:
        """Probability to relax 2 -> 1 -> 0 instead of tunneling."""
        b2 = self.Gamma21 / self.GammaT2 if self.GammaT2 else 0.0
        b1 = self.Gamma10 / self.GammaT1 if self.GammaT1 else 0.0
        return b2 * b1

    def absorption_rate(self, n: int) -> float:
        """Two-photon absorption rate out of the n-photon Fock state."""
        if n < 2:
            return 0.0
        return 4 * self.g_tilde ** 2 * n * (n - 1) / self.width2

    @property
    def B20(self) -> float:
        return self.absorption_rate(2)

    def with_tunneling(self, gamma0: float, gamma1: float, gamma2: float) -> "CouplingRates":
        return replace(self, gamma0=gamma0, gamma1=gamma1, gamma2=gamma2)

    def with_lambda2(self, lambda2: float) -> "CouplingRates":
        return replace(self, lambda2=lambda2, lambda1=lambda2 / math.sqrt(2))

    def scaled(self, factor: float) -> "CouplingRates":
        """Multiply every frequency and rate by ``factor``.

        Probabilities as functions of ``factor * t`` are unchanged, which makes
        this a stiffness knob for the full master-equation runs.
        """
        return replace(
            self, Delta=self.Delta * factor,
            Gamma10=self.Gamma10 * factor, Gamma21=self.Gamma21 * factor,
            Gamma11=self.Gamma11 * factor, Gamma22=self.Gamma22 * factor,
            gamma0=self.gamma0 * factor, gamma1=self.gamma1 * factor,
            gamma2=self.gamma2 * factor,
        )


def josephson_energy(I0: float) -> float:
    """W_J = I0 * Phi0 / 2pi."""
    if I0 < 0:
        raise ValueError(f"critical current must be non-negative, got {I0!r}")
    return I0 * FLUX_QUANTUM / TWO_PI


def charging_energy(C: float) -> float:
    if C <= 0:
        raise ValueError(f"capacitance must be positive, got {C!r}")
    return E_CHARGE ** 2 / (2 * C)


def effective_capacitance(cfg: DeviceConfig) -> float:
    """Junction capacitance entering the kinetic term.

    Bare ``C`` unless a coupling capacitor and resonator are specified, in
    which case the renormalized value is used.
    """
    if cfg.Ccoup > 0 and cfg.Cres > 0:
        return renormalized_capacitances(cfg.C, cfg.Ccoup, cfg.Cres).C_t
    return cfg.C


def washboard_potential(phi, cfg: DeviceConfig):
    """Tilted-cosine potential -W_J cos(phi) - W_J beta phi in joules."""
    wj = josephson_energy(cfg.I0)
    phi = np.asarray(phi, dtype=float)
    return -wj * np.cos(phi) - wj * cfg.beta * phi


def washboard_slope(phi, cfg: DeviceConfig):
    wj = josephson_energy(cfg.I0)
    return wj * (np.sin(phi) - cfg.beta)


def barrier_top(cfg: DeviceConfig) -> float:
    """Phase of the exact local maximum following the well minimum."""
    return math.pi - math.asin(cfg.beta)


def cubic_potential(delta, WJ: float, beta: float):
    """Cubic expansion of the washboard around its minimum (J)."""
    delta = np.asarray(delta, dtype=float)
    return WJ * (math.sqrt(1 - beta ** 2) / 2 * delta ** 2 - beta / 6 * delta ** 3)


def levels_from_energies(WJ: float, WC: float, beta: float) -> LevelStructure:
    """Perturbative level structure of the cubic well."""
    if not 0 < beta < 1:
        raise ValueError(f"beta must lie in (0, 1), got {beta!r}")
    root = 1 - beta ** 2
    omega_p = math.sqrt(8 * WJ * WC) * root ** 0.25 / HBAR
    n0 = root ** 1.25 / (3 * beta ** 2) * math.sqrt(WJ / (2 * WC))
    omega10 = omega_p * (1 - 5 / (36 * n0))
    omega20 = omega_p * (2 - 5 / (12 * n0))
    omega = omega20 / 2
    Delta = 5 / 72 * omega_p / n0
    phi_min = math.asin(beta)
    return LevelStructure(
        WJ=WJ, WC=WC, beta=beta, omega_p=omega_p, n0=n0, omega10=omega10,
        omega20=omega20, omega=omega, Delta=Delta, phi_min=phi_min,
        delta_max=2 / math.tan(phi_min),
    )


def derive_levels(cfg: DeviceConfig) -> LevelStructure:
    return levels_from_energies(
        josephson_energy(cfg.I0), charging_energy(effective_capacitance(cfg)), cfg.beta
    )


def derive_couplings(levels: LevelStructure, cfg: DeviceConfig,
                     gammas: tuple[float, float, float] | None = None) -> CouplingRates:
    """Couplings from the design knob lambda2 and the detuning.

    g2 = lambda2 * Delta and g1 = g2 / sqrt(2) (harmonic matrix-element ratio).
    ``gammas`` are angular tunneling rates; zero when not supplied.
    """
    if levels.Delta <= 0:
        raise ValueError("detuning must be positive")
    g0, g1, g2 = gammas if gammas is not None else (0.0, 0.0, 0.0)
    gamma21 = cfg.Gamma21 if cfg.Gamma21 is not None else 2 * cfg.Gamma10
    return CouplingRates(
        Delta=levels.Delta,
        lambda1=cfg.lambda2 / math.sqrt(2),
        lambda2=cfg.lambda2,
        Gamma10=TWO_PI * cfg.Gamma10,
        Gamma21=TWO_PI * gamma21,
        Gamma11=TWO_PI * cfg.Gamma11,
        Gamma22=TWO_PI * cfg.Gamma22,
        gamma0=g0, gamma1=g1, gamma2=g2,
    )


def renormalized_capacitances(C: float, Ccoup: float, Cres: float) -> RenormalizedCapacitances:
    if C <= 0 or Cres <= 0:
        raise ValueError("C and Cres must be positive")
    if Ccoup < 0:
        raise ValueError("Ccoup must be non-negative")
    C_t = (C + Ccoup * (1 + C / Cres)) / (1 + Ccoup / Cres)
    Cres_t = (Cres + Ccoup * (1 + Cres / C)) / (1 + Ccoup / C)
    Ccoup_t = 0.0 if Ccoup == 0 else 1 / (1 / Ccoup + 1 / C + 1 / Cres)
    return RenormalizedCapacitances(C_t=C_t, Cres_t=Cres_t, Ccoup_t=Ccoup_t)


def circuit_couplings(levels: LevelStructure, cfg: DeviceConfig) -> tuple[float, float]:
    """g1, g2 (rad/s) from the charge matrix elements in harmonic approximation.

    Only available when the coupling capacitor and the resonator are given;
    serves as a consistency check on the lambda2-based design route.
    """
    if cfg.Ccoup <= 0 or cfg.Cres <= 0 or cfg.Lres <= 0:
        raise ValueError("circuit couplings need Ccoup, Cres and Lres")
    caps = renormalized_capacitances(cfg.C, cfg.Ccoup, cfg.Cres)
    rho = caps.impedance(cfg.Lres)
    q10 = math.sqrt(HBAR * caps.C_t * levels.omega_p / 2)
    prefactor = caps.Ccoup_t / (cfg.C * cfg.Cres) * math.sqrt(HBAR / (2 * rho)) / HBAR
    g1 = prefactor * q10
    return g1, math.sqrt(2) * g1


def n_max(rates: CouplingRates, margin: float = DEFAULT_NMAX_MARGIN) -> int:
    """Largest photon number keeping the Stark shift inside the linewidth.

    ``margin`` turns the much-less-than condition into a number; the default
    0.65 is a calibration, not a derivation.
    """
    if rates.chi2 <= 0:
        raise ValueError("n_max needs a positive Stark shift chi2")
    if math.isinf(rates.chi2):
        return 0
    return int(math.floor(margin * rates.width2 / rates.chi2))
