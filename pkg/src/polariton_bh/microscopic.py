"""Exact single-cavity check of the polariton mapping.

The N four-level atoms enter only through permutation-symmetric states, so
a basis state is ``(m, n2, n3, n4)``: photon number and the number of atoms
in levels 2, 3 and 4 (the rest sit in level 1).  Collective transitions
``sum_j |k_j><l_j|`` act as ``b_k^dag b_l`` with amplitude
``sqrt(n_l (n_k + 1))``.  Everything is in the rotating frame where a photon
and levels 2, 3 carry one excitation and level 4 carries two.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .polariton_params import PhysicalParams, effective_parameters, validity_report

OVERLAP_THRESHOLD = 0.5


class RegimeError(ValueError):
    """The dark branch cannot be identified; the effective model does not apply."""


@dataclass(frozen=True)
class SymBasis:
    n_atoms: int
    n_ex: int
    states: tuple[tuple[int, int, int, int], ...]
    index: dict = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.states)


def symmetric_basis(n_atoms: int, n_ex: int) -> SymBasis:
    """All ``(m, n2, n3, n4)`` with ``m + n2 + n3 + 2 n4 = n_ex`` and ``n2 + n3 + n4 <= N``.

    Ordered by ascending n4, then descending m, then descending n2.
    """
    if n_atoms < 1:
        raise ValueError("need at least one atom")
    if n_ex < 0:
        raise ValueError("excitation number must be non-negative")
    states = []
    for n4 in range(n_ex // 2 + 1):
        rest = n_ex - 2 * n4
        for m in range(rest, -1, -1):
            for n2 in range(rest - m, -1, -1):
                n3 = rest - m - n2
                if n2 + n3 + n4 <= n_atoms:
                    states.append((m, n2, n3, n4))
    return SymBasis(n_atoms, n_ex, tuple(states), {s: k for k, s in enumerate(states)})


def build_hi(basis: SymBasis, p: PhysicalParams) -> np.ndarray:
    """Matrix of the single-cavity atom-photon Hamiltonian on ``basis``."""
    if p.n_atoms != basis.n_atoms:
        raise ValueError(f"params have N={p.n_atoms}, basis has N={basis.n_atoms}")
    d = basis.dim
    H = np.zeros((d, d))
    idx = basis.index
    for col, (m, n2, n3, n4) in enumerate(basis.states):
        n1 = basis.n_atoms - n2 - n3 - n4
        H[col, col] = p.epsilon * n2 + p.delta_small * n3 + (p.delta_cap + p.epsilon) * n4
        # each lowering move below; its Hermitian partner is filled symmetrically
        if n3 > 0:
            # Omega_L sigma_23: level 3 -> level 2
            row = idx.get((m, n2 + 1, n3 - 1, n4))
            if row is not None:
                H[row, col] += p.omega_l * math.sqrt(n3 * (n2 + 1))
            # g13 sigma_13 a^dag: level 3 -> level 1, photon created
            row = idx.get((m + 1, n2, n3 - 1, n4))
            if row is not None:
                H[row, col] += p.g13 * math.sqrt(n3 * (n1 + 1) * (m + 1))
        if n4 > 0:
            # g24 sigma_24 a^dag: level 4 -> level 2, photon created
            row = idx.get((m + 1, n2 + 1, n3, n4 - 1))
            if row is not None:
                H[row, col] += p.g24 * math.sqrt(n4 * (n2 + 1) * (m + 1))
    off = np.triu(H, 1) + np.tril(H, -1)
    return np.diag(np.diag(H)) + off + off.T


def _apply_dark_creation(vec: dict, n_atoms: int, g: float, omega_l: float, B: float) -> dict:
    # (g S12^dag - Omega_L a^dag) / B with S12^dag = b2^dag b1 / sqrt(N)
    out: dict = {}
    for (m, n2, n3, n4), amp in vec.items():
        n1 = n_atoms - n2 - n3 - n4
        if n1 > 0:
            key = (m, n2 + 1, n3, n4)
            out[key] = out.get(key, 0.0) + amp * g / B * math.sqrt(n1 * (n2 + 1) / n_atoms)
        key = (m + 1, n2, n3, n4)
        out[key] = out.get(key, 0.0) - amp * omega_l / B * math.sqrt(m + 1)
    return out


def dark_excitation_state(basis: SymBasis, p: PhysicalParams, n_p: int) -> np.ndarray:
    """Normalised ``(p0^dag)^n_p |vac>`` expanded exactly at finite N."""
    if n_p != basis.n_ex:
        raise ValueError(f"{n_p} dark polaritons do not live in the N_ex={basis.n_ex} sector")
    if n_p > basis.n_atoms:
        raise ValueError(f"cannot place {n_p} atomic excitations on {basis.n_atoms} atoms")
    eff = effective_parameters(p)
    vec = {(0, 0, 0, 0): 1.0}
    for _ in range(n_p):
        vec = _apply_dark_creation(vec, basis.n_atoms, eff.g, p.omega_l, eff.B)
    out = np.zeros(basis.dim)
    for key, amp in vec.items():
        out[basis.index[key]] = amp
    return out / np.linalg.norm(out)


@dataclass(frozen=True)
class ShiftComparison:
    n_p: int
    n_atoms: int
    measured: float
    predicted: float
    overlap: float

    @property
    def abs_error(self) -> float:
        return abs(self.measured - self.predicted)

    @property
    def rel_error(self) -> float:
        if self.predicted == 0:
            return 0.0 if self.measured == 0 else math.inf
        return self.abs_error / abs(self.predicted)


def predicted_shift(p: PhysicalParams, n_p: int) -> float:
    eff = effective_parameters(p)
    return n_p * (n_p - 1) * eff.kappa + n_p * eff.chem_shift


def compare_kappa_shift(p: PhysicalParams, n_p: int = 2) -> ShiftComparison:
    """Diagonalise the ``N_ex = n_p`` sector and locate the dark branch by overlap."""
    if n_p < 1:
        raise ValueError("n_p must be at least 1")
    rep = validity_report(p, n_p)
    if rep.perturbative >= 1:
        raise RegimeError(
            f"sqrt(n_p(n_p-1)) g24/|Delta| = {rep.perturbative:.3g} >= 1; shift is not perturbative")
    basis = symmetric_basis(p.n_atoms, n_p)
    w, v = np.linalg.eigh(build_hi(basis, p))
    dark = dark_excitation_state(basis, p, n_p)
    overlaps = np.abs(v.T @ dark) ** 2
    k = int(np.argmax(overlaps))
    if overlaps[k] < OVERLAP_THRESHOLD:
        raise RegimeError(
            f"largest dark-state overlap is {overlaps[k]:.3f} < {OVERLAP_THRESHOLD}; "
            "no eigenstate can be identified as the dark branch")
    return ShiftComparison(n_p, p.n_atoms, float(w[k]), predicted_shift(p, n_p), float(overlaps[k]))


def extract_kappa_shift(p: PhysicalParams, n_p: int = 2) -> float:
    """Exact energy of the dark ``n_p``-polariton eigenstate, in 1/s."""
    return compare_kappa_shift(p, n_p).measured


def one_excitation_spectrum(p: PhysicalParams) -> np.ndarray:
    return np.linalg.eigvalsh(build_hi(symmetric_basis(p.n_atoms, 1), p))
