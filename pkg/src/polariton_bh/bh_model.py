"""Effective Bose-Hubbard and bare photonic Hamiltonians on a cavity graph.

The on-site term keeps the ``kappa (p^dag)^2 p^2 = kappa n (n - 1)`` form,
so the textbook ``U/2 n(n-1)`` convention corresponds to ``U = 2 kappa``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fock_space import (
    CavityGraph,
    FockBasis,
    hopping_operator,
    number_operator,
    total_number_operator,
)
from .polariton_params import EffectiveParams

DENSE_LIMIT = 512
EIGEN_TOL = 1e-10
NORM_TOL = 1e-8


class EigensolverError(RuntimeError):
    def __init__(self, msg: str, residual: float):
        super().__init__(f"{msg} (residual norm {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class BHParams:
    kappa: float
    J: float
    mu: float = 0.0

    @classmethod
    def from_effective(cls, eff: EffectiveParams, with_chemical: bool = True) -> "BHParams":
        return cls(eff.kappa, eff.J, eff.chem_shift if with_chemical else 0.0)


@dataclass(frozen=True)
class SiteStatistics:
    mean_n: float
    fluctuation: float


def _check_graph(basis: FockBasis, graph: CavityGraph) -> None:
    if graph.site_count != basis.site_count:
        raise ValueError(
            f"graph has {graph.site_count} sites but basis has {basis.site_count}"
        )


def interaction_operator(basis: FockBasis) -> sp.csr_matrix:
    """sum_i n_i (n_i - 1), diagonal."""
    n = basis.states.astype(float)
    return sp.diags((n * (n - 1)).sum(axis=1), format="csr")


def hopping_sum(basis: FockBasis, graph: CavityGraph) -> sp.csr_matrix:
    _check_graph(basis, graph)
    out = sp.csr_matrix((basis.dim, basis.dim), dtype=float)
    for edge in graph.edges:
        out = out + hopping_operator(basis, edge)
    return out.tocsr()


def build_bh_hamiltonian(basis: FockBasis, graph: CavityGraph, bh: BHParams) -> sp.csr_matrix:
    _check_graph(basis, graph)
    H = bh.kappa * interaction_operator(basis) + bh.J * hopping_sum(basis, graph)
    if bh.mu != 0:
        H = H + bh.mu * total_number_operator(basis)
    H = H.tocsr()
    H.eliminate_zeros()
    return H


def build_photonic_hamiltonian(basis: FockBasis, graph: CavityGraph, omega_c: float,
                               two_omega_alpha: float) -> sp.csr_matrix:
    """Tight-binding photon array including the M/2 zero-point offset."""
    _check_graph(basis, graph)
    diag = omega_c * (basis.totals + 0.5 * basis.site_count)
    H = sp.diags(diag.astype(float), format="csr") + two_omega_alpha * hopping_sum(basis, graph)
    H = H.tocsr()
    H.eliminate_zeros()
    return H


def _fix_phase(vec: np.ndarray) -> np.ndarray:
    mags = np.abs(vec)
    k = int(np.argmax(mags > 1e-12 * mags.max()))
    return vec * (abs(vec[k]) / vec[k])


def ground_state(H, basis: FockBasis, sector: int) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of ``H`` within the fixed particle-number block ``sector``.

    The returned vector lives on the full basis (zero outside the block), is
    normalised, and has its first non-negligible amplitude real and positive.
    """
    idx = basis.sector(sector)
    if idx.size == 0:
        raise ValueError(f"no basis states with {sector} particles")
    H = sp.csr_matrix(H)
    block = H[idx][:, idx]
    if idx.size < DENSE_LIMIT:
        w, v = np.linalg.eigh(block.toarray())
        energy, vec = float(w[0]), v[:, 0]
    else:
        v0 = np.ones(idx.size) / np.sqrt(idx.size)
        w, v = spla.eigsh(block, k=1, which="SA", v0=v0, tol=EIGEN_TOL, maxiter=20 * idx.size)
        energy, vec = float(w[0]), v[:, 0]
    residual = float(np.linalg.norm(block @ vec - energy * vec))
    scale = max(1.0, abs(energy), float(abs(block).max()) if block.nnz else 0.0)
    if residual > 10 * EIGEN_TOL * scale:
        raise EigensolverError("ground state did not converge", residual)
    full = np.zeros(basis.dim, dtype=vec.dtype)
    full[idx] = _fix_phase(vec)
    return energy, full


def site_statistics(state: np.ndarray, basis: FockBasis, site: int) -> SiteStatistics:
    """Mean and variance of the occupation of ``site`` for a pure state or density matrix."""
    if not 0 <= site < basis.site_count:
        raise IndexError(f"site {site} out of range")
    n = basis.states[:, site].astype(float)
    state = np.asarray(state)
    if state.ndim == 1:
        probs = np.abs(state) ** 2
        norm = probs.sum()
        what = "state norm"
    elif state.ndim == 2:
        probs = np.real(np.diagonal(state))
        norm = np.real(np.trace(state))
        what = "trace"
    else:
        raise ValueError("expected a state vector or a density matrix")
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"{what} is {norm!r}, expected 1 within {NORM_TOL}")
    mean = float(probs @ n)
    return SiteStatistics(mean, float(probs @ (n * n)) - mean * mean)


def all_site_statistics(state: np.ndarray, basis: FockBasis) -> list[SiteStatistics]:
    return [site_statistics(state, basis, i) for i in range(basis.site_count)]


def number_operators(basis: FockBasis) -> list[sp.csr_matrix]:
    return [number_operator(basis, i) for i in range(basis.site_count)]
