"""Joint resonator + JPM density-matrix dynamics.

Basis ordering is (jpm, fock): the joint index of JPM level ``j`` and Fock
state ``n`` is ``j * n_fock + n``. JPM levels are 0, 1, 2 and the absorbing
measured level m (index 3). All operators are expressed in angular
frequency units, i.e. H / hbar in rad/s, in a frame rotating at the
resonator frequency.

Superoperators act on row-major flattened density matrices, so that
``vec(A @ rho @ B) == kron(A, B.T) @ vec(rho)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .circuit import CouplingRates

JPM_LABELS = ("0", "1", "2", "m")
M = 3


class StiffnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class HilbertLayout:
    n_fock: int = 6

    def __post_init__(self):
        if self.n_fock < 3:
            raise ValueError("n_fock must be at least 3 for two-photon studies")

    @property
    def dim(self) -> int:
        return 4 * self.n_fock

    def index(self, jpm: int, fock: int) -> int:
        return jpm * self.n_fock + fock

    def label(self, k: int) -> str:
        jpm, fock = divmod(k, self.n_fock)
        return f"n{fock}_{JPM_LABELS[jpm]}"

    @cached_property
    def a_fock(self) -> np.ndarray:
        return np.diag(np.sqrt(np.arange(1, self.n_fock, dtype=float)), 1)

    @cached_property
    def a(self) -> np.ndarray:
        """Resonator annihilation operator on the joint space."""
        return np.kron(np.eye(4), self.a_fock)

    @cached_property
    def number(self) -> np.ndarray:
        return self.a.T @ self.a

    def proj(self, i: int, j: int) -> np.ndarray:
        """|i><j| on the JPM times the resonator identity."""
        p = np.zeros((4, 4))
        p[i, j] = 1.0
        return np.kron(p, np.eye(self.n_fock))

    def excitation_number(self) -> np.ndarray:
        return self.number + self.proj(1, 1) + 2 * self.proj(2, 2)

    def block(self, rho: np.ndarray, i: int, j: int) -> np.ndarray:
        n = self.n_fock
        return rho[i * n:(i + 1) * n, j * n:(j + 1) * n]

    def interior(self, margin: int = 2) -> np.ndarray:
        """Joint indices whose Fock number sits ``margin`` below the cutoff."""
        return np.array([self.index(j, f) for j in range(4)
                         for f in range(self.n_fock - margin)])


@dataclass
class JointState:
    rho: np.ndarray
    time: float = 0.0

    @classmethod
    def basis(cls, layout: HilbertLayout, fock: int, jpm: int = 0) -> "JointState":
        rho = np.zeros((layout.dim, layout.dim), dtype=complex)
        k = layout.index(jpm, fock)
        rho[k, k] = 1.0
        return cls(rho)

    def check(self, herm_tol=1e-10, trace_tol=1e-8, psd_tol=1e-8) -> None:
        rho = self.rho
        if np.abs(rho - rho.conj().T).max() > herm_tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho) - 1) > trace_tol:
            raise ValueError(f"trace {np.trace(rho).real} differs from 1")
        if np.linalg.eigvalsh((rho + rho.conj().T) / 2).min() < -psd_tol:
            raise ValueError("density matrix has a negative eigenvalue")


@dataclass(frozen=True)
class Superoperator:
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return math.isqrt(self.matrix.shape[0])

    def apply(self, rho: np.ndarray) -> np.ndarray:
        return (self.matrix @ rho.reshape(-1)).reshape(rho.shape)

    def __add__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix + other.matrix)

    def __sub__(self, other: "Superoperator") -> "Superoperator":
        return Superoperator(self.matrix - other.matrix)

    def __mul__(self, factor: float) -> "Superoperator":
        return Superoperator(self.matrix * factor)

    __rmul__ = __mul__

    def trace_functional_residual(self) -> float:
        """Max |column sum over diagonal rows|; zero for trace preservation."""
        d = self.dim
        diag_rows = np.arange(d) * (d + 1)
        return float(np.abs(self.matrix[diag_rows].sum(axis=0)).max())

    @classmethod
    def from_map(cls, fn, dim: int) -> "Superoperator":
        """Materialize a linear map on dim x dim matrices."""
        cols = np.empty((dim * dim, dim * dim), dtype=complex)
        basis = np.zeros((dim, dim), dtype=complex)
        for k in range(dim * dim):
            basis.flat[k] = 1.0
            cols[:, k] = fn(basis).reshape(-1)
            basis.flat[k] = 0.0
        return cls(cols)


def _commutator_super(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def _dissipator_super(op: np.ndarray) -> np.ndarray:
    eye = np.eye(op.shape[0])
    ada = op.conj().T @ op
    return (np.kron(op, op.conj()) - 0.5 * np.kron(ada, eye) - 0.5 * np.kron(eye, ada.T))


def dissipate(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """D[op] rho = op rho op^dag - {op^dag op, rho} / 2."""
    ada = op.conj().T @ op
    return op @ rho @ op.conj().T - 0.5 * (ada @ rho + rho @ ada)


# --- Hamiltonians ---------------------------------------------------------

def build_hamiltonian_rotating(rates: CouplingRates, layout: HilbertLayout) -> np.ndarray:
    """Resonator-JPM Hamiltonian in the frame rotating at the photon frequency."""
    a = layout.a
    c1 = layout.proj(1, 0) @ a
    c2 = layout.proj(2, 1) @ a
    h = rates.Delta * layout.proj(1, 1)
    h = h + rates.g1 * (c1 + c1.T) + rates.g2 * (c2 + c2.T)
    return h.astype(complex)


def schrieffer_wolff_generator(rates: CouplingRates, layout: HilbertLayout) -> np.ndarray:
    a = layout.a
    x = -rates.lambda1 * layout.proj(1, 0) @ a + rates.lambda2 * layout.proj(2, 1) @ a
    return (x - x.conj().T).astype(complex)


def schrieffer_wolff_unitary(rates: CouplingRates, layout: HilbertLayout) -> np.ndarray:
    """exp(G) with G = -lambda1 |1><0| a + lambda2 |2><1| a - h.c.

    Exactly unitary on the truncated space; the frame it defines is only
    faithful away from the top Fock states (see ``HilbertLayout.interior``).
    """
    return expm(schrieffer_wolff_generator(rates, layout))


def build_effective_hamiltonian(rates: CouplingRates, layout: HilbertLayout,
                                two_photon_sign: float = 1.0) -> np.ndarray:
    """Dispersive two-photon Hamiltonian after eliminating level 1.

    ``two_photon_sign`` multiplies the effective two-photon coupling. The
    conjugation U^dag H U with the generator above produces -g_tilde; the
    default +1 follows the conventional form. The sign is a phase on |2> and
    drops out of every population.
    """
    a = layout.a
    n = layout.number
    sz01 = layout.proj(1, 1) - layout.proj(0, 0)
    sz12 = layout.proj(2, 2) - layout.proj(1, 1)
    two = layout.proj(2, 0) @ a @ a
    h = (rates.Delta + rates.chi1) * layout.proj(1, 1) - rates.chi2 * layout.proj(2, 2)
    h = h + two_photon_sign * rates.g_tilde * (two + two.T)
    h = h + (rates.chi1 * sz01 - rates.chi2 * sz12) @ n
    return h.astype(complex)


def interaction_frame_generator(rates: CouplingRates, layout: HilbertLayout):
    """The diagonal phase-rate operator r and its ground-level reduction r0.

    r = chi1 (N - 2 sz01) - chi2 (1 + N - 2 sz12). Returns ``(r0, r)`` with
    ``r0`` the vector of <0|r|0> over Fock states (N counting photons left
    after a two-photon absorption) and ``r`` the joint-space matrix.
    """
    n = layout.number
    eye = np.eye(layout.dim)
    sz01 = layout.proj(1, 1) - layout.proj(0, 0)
    sz12 = layout.proj(2, 2) - layout.proj(1, 1)
    r = rates.chi1 * (n - 2 * sz01) - rates.chi2 * (eye + n - 2 * sz12)
    photons = np.arange(layout.n_fock, dtype=float)
    r0 = rates.chi1 * (photons + 2) - rates.chi2 * (1 + photons)
    return r0, r


# --- Lindbladians -------------------------------------------------------------

def jump_operators(rates: CouplingRates, layout: HilbertLayout) -> list[tuple[float, np.ndarray]]:
    p = layout.proj
    return [
        (rates.gamma0, p(M, 0)),
        (rates.Gamma10, p(0, 1)),
        (rates.Gamma11, p(1, 1)),
        (rates.gamma1, p(M, 1)),
        (rates.Gamma21, p(1, 2)),
        (rates.Gamma22, p(2, 2)),
        (rates.gamma2, p(M, 2)),
    ]


def build_dissipator(rates: CouplingRates, layout: HilbertLayout,
                     frame: np.ndarray | None = None) -> Superoperator:
    """Sum of the bare dissipators; ``frame`` conjugates each jump as U A U^dag."""
    total = np.zeros((layout.dim ** 2, layout.dim ** 2), dtype=complex)
    for rate, op in jump_operators(rates, layout):
        if rate == 0:
            continue
        if frame is not None:
            op = frame @ op @ frame.conj().T
        total += rate * _dissipator_super(op)
    return Superoperator(total)


def build_lindbladian(rates: CouplingRates, layout: HilbertLayout,
                      hamiltonian: np.ndarray | None = None) -> Superoperator:
    """-i[H, .] plus the tunneling, relaxation and dephasing dissipators."""
    if hamiltonian is None:
        hamiltonian = build_hamiltonian_rotating(rates, layout)
    return Superoperator(_commutator_super(hamiltonian)) + build_dissipator(rates, layout)


def transformed_dissipator(rates: CouplingRates, layout: HilbertLayout,
                           convention: str = "density") -> Superoperator:
    """Bare dissipators seen from the Schrieffer-Wolff frame, to all orders.

    ``convention="density"`` maps the state as rho -> U rho U^dag, so jumps
    become U A U^dag. ``"operator"`` uses U^dag A U instead.
    """
    u = schrieffer_wolff_unitary(rates, layout)
    if convention == "density":
        return build_dissipator(rates, layout, frame=u)
    if convention == "operator":
        return build_dissipator(rates, layout, frame=u.conj().T)
    raise ValueError(f"unknown convention {convention!r}")


def _dressed_terms(rates: CouplingRates, layout: HilbertLayout):
    """Terms ``(coef, left, (k, l), right)`` of every block of the correction.

    A term contributes ``coef * left @ rho_kl @ right`` to its block. The
    conjugate completions are written out using rho_kl^dag = rho_lk so the
    map stays complex-linear on arbitrary (non-Hermitian) inputs.
    """
    l1, l2 = rates.lambda1, rates.lambda2
    g0, g1, g2 = rates.gamma0, rates.gamma1, rates.gamma2
    G10, G11, G21, G22 = rates.Gamma10, rates.Gamma11, rates.Gamma21, rates.Gamma22
    a = layout.a_fock.astype(complex)
    ad = a.T.copy()
    one = np.eye(layout.n_fock)

    # recurring rate combinations
    s_a = g1 - g0 + G11 + G10
    s_b = g2 - g1 + G22 + G21 - G11 - G10
    s_c = g2 - g1 - G22 + G21 - G11 - G10
    s_d = -g1 + g0 - G11 - G10
    s_e = g2 - g1 + G22 + G21 + G11 - G10

    stated = {
        (0, 0): [(l2 * G10, ad, (2, 1), one), (-0.5 * l1 * s_a, ad, (1, 0), one),
                 (l1 * G10, a, (0, 1), one)],
        (1, 1): [(0.5 * l2 * s_e, ad, (2, 1), one), (-l2 * G21, a, (1, 2), one),
                 (0.5 * l1 * (-g1 + g0 + G11 - G10), a, (0, 1), one)],
        (2, 2): [(0.5 * l2 * s_c, a, (1, 2), one)],
        (M, M): [(l2 * g1, ad, (2, 1), one), (-l1 * g0, ad, (1, 0), one),
                 (-l2 * g2, a, (1, 2), one), (l1 * g1, a, (0, 1), one)],
        (0, 1): [(l1 * G21, ad, (2, 2), one),
                 (-0.5 * l1 * (g1 - g0 - G11 + G10), ad, (1, 1), one),
                 (-l1 * G10, one, (1, 1), ad), (0.5 * l1 * s_d, one, (0, 0), ad),
                 (0.5 * l2 * s_b, one, (0, 2), a)],
        (1, 2): [(0.5 * l2 * s_c, ad, (2, 2), one), (-0.5 * l1 * s_a, a, (0, 2), one),
                 (l2 * G21, one, (2, 2), ad), (0.5 * l2 * s_e, one, (1, 1), ad)],
        (0, 2): [(0.5 * l2 * s_b, one, (0, 1), ad), (-0.5 * l1 * s_a, ad, (1, 2), one)],
        (M, 0): [(0.5 * l1 * s_d, one, (M, 1), a)],
        (M, 1): [(0.5 * l2 * s_b, one, (M, 2), a), (-0.5 * l1 * s_a, one, (M, 0), ad)],
        (M, 2): [(0.5 * l2 * s_b, one, (M, 1), ad)],
    }
    terms: dict[tuple[int, int], list] = {}
    for (i, j), block_terms in stated.items():
        for coef, left, (k, l), right in block_terms:
            if coef == 0:
                continue
            conj = (np.conj(coef), right.conj().T, (l, k), left.conj().T)
            terms.setdefault((i, j), []).append((coef, left, (k, l), right))
            # diagonal blocks carry "+ c.c."; off-diagonal ones fix their partner
            terms.setdefault((j, i), []).append(conj)
    return terms


def _dressed_map(rates: CouplingRates, layout: HilbertLayout):
    terms = _dressed_terms(rates, layout)
    n = layout.n_fock

    def fn(rho):
        out = np.zeros(rho.shape, dtype=complex)
        for (i, j), block_terms in terms.items():
            acc = out[i * n:(i + 1) * n, j * n:(j + 1) * n]
            for coef, left, (k, l), right in block_terms:
                acc += coef * left @ rho[k * n:(k + 1) * n, l * n:(l + 1) * n] @ right
        return out

    return fn


def apply_dressed_correction(rates: CouplingRates, layout: HilbertLayout,
                             rho: np.ndarray) -> np.ndarray:
    return _dressed_map(rates, layout)(rho)


def dressed_correction(rates: CouplingRates, layout: HilbertLayout) -> Superoperator:
    """First-order (in lambda) dressing of the dissipators by the frame change.

    Built block by block from the ten JPM matrix elements; each off-diagonal
    block fixes its transpose partner through Hermiticity.
    """
    return Superoperator.from_map(_dressed_map(rates, layout), layout.dim)


# --- time evolution -------------------------------------------------------

@dataclass
class Trajectory:
    times: np.ndarray
    rhos: np.ndarray
    layout: HilbertLayout
    edge_tolerance: float = 1e-6

    def __len__(self):
        return len(self.times)

    def __getitem__(self, k) -> JointState:
        return JointState(self.rhos[k], float(self.times[k]))

    def populations(self) -> np.ndarray:
        return np.einsum("tii->ti", self.rhos).real

    def click_probabilities(self) -> np.ndarray:
        return np.array([click_probability(JointState(r)) for r in self.rhos])

    def traces(self) -> np.ndarray:
        return np.einsum("tii->t", self.rhos).real

    def edge_population(self) -> np.ndarray:
        top = self.layout.n_fock - 1
        idx = [self.layout.index(j, top) for j in range(4)]
        return self.populations()[:, idx].sum(axis=1)

    @property
    def edge_flagged(self) -> bool:
        return bool(self.edge_population().max() > self.edge_tolerance)


def _stiffness_ratio(liouvillian: Superoperator) -> float:
    rates = np.abs(np.diag(liouvillian.matrix))
    rates = rates[rates > 0]
    return float(rates.max() / rates.min()) if rates.size else 1.0


def evolve(state: JointState, liouvillian: Superoperator, t_final: float,
           t_eval=None, rtol: float = 1e-8, atol: float = 1e-12,
           method: str = "DOP853", layout: HilbertLayout | None = None,
           max_steps: float = 1e7) -> Trajectory:
    """Integrate d rho/dt = L rho from ``state.time`` to ``t_final``.

    Adaptive explicit Runge-Kutta with embedded error control. The right-hand
    side acts on the Hermitian part of its argument, so anti-Hermitian
    round-off cannot feed back. ``method="expm"`` propagates exactly with the
    matrix exponential on the output grid.

    An explicit integrator needs roughly ``t * ||L||`` steps; when that
    estimate exceeds ``max_steps`` a ``StiffnessError`` is raised up front
    rather than grinding through the run.
    """
    d = state.rho.shape[0]
    layout = layout or HilbertLayout(d // 4)
    t0 = state.time
    if t_eval is None:
        t_eval = np.array([t0, t_final])
    t_eval = np.asarray(t_eval, dtype=float)
    if t_final == t0:
        return Trajectory(np.array([t0]), state.rho[None].copy(), layout)

    mat = liouvillian.matrix
    if not np.all(np.isfinite(mat)):
        raise ValueError("Liouvillian has non-finite entries")
    if method == "expm":
        return _evolve_expm(state, liouvillian, t_eval, layout)

    steps = abs(t_final - t0) * np.abs(mat).sum(axis=0).max()
    if steps > max_steps:
        raise StiffnessError(
            f"about {steps:.3g} explicit steps needed (limit {max_steps:.3g}); stiffness "
            f"ratio of the Liouvillian diagonal {_stiffness_ratio(liouvillian):.3g}. "
            "Rescale the rates or use method='expm'."
        )

    def rhs(t, y):
        r = y.reshape(d, d)
        r = 0.5 * (r + r.conj().T)
        return mat @ r.reshape(-1)

    sol = solve_ivp(rhs, (t0, t_final), state.rho.reshape(-1).astype(complex),
                    method=method, t_eval=t_eval, rtol=rtol, atol=atol)
    if sol.status != 0:
        raise StiffnessError(
            f"{sol.message} (stiffness ratio of the Liouvillian diagonal "
            f"{_stiffness_ratio(liouvillian):.3g})"
        )
    rhos = sol.y.T.reshape(-1, d, d)
    rhos = 0.5 * (rhos + rhos.conj().transpose(0, 2, 1))
    return Trajectory(sol.t, rhos, layout)


def _evolve_expm(state, liouvillian, t_eval, layout):
    d = state.rho.shape[0]
    vec = state.rho.reshape(-1).astype(complex)
    out = []
    t_prev = state.time
    cache = {}
    for t in t_eval:
        # uniform grids reuse one propagator
        step = float(np.format_float_scientific(t - t_prev, precision=12))
        if step not in cache:
            cache[step] = expm(liouvillian.matrix * step)
        vec = cache[step] @ vec
        t_prev = t
        out.append(vec.reshape(d, d))
    rhos = np.array(out)
    rhos = 0.5 * (rhos + rhos.conj().transpose(0, 2, 1))
    return Trajectory(np.asarray(t_eval), rhos, layout)


def click_probability(state: JointState) -> float:
    """Total population of the measured level, summed over Fock states."""
    d = state.rho.shape[0]
    n = d // 4
    p = float(np.trace(state.rho[M * n:, M * n:]).real)
    if p < -1e-8 or p > 1 + 1e-8:
        raise ValueError(f"click probability {p} outside [0, 1]")
    return min(max(p, 0.0), 1.0)
