"""Dissipative dark-polariton dynamics under a time-dependent drive.

The density matrix obeys

    d rho/dt = -i [H(t), rho] + Gamma(t) sum_i (p_i rho p_i^dag - 1/2 {p_i^dag p_i, rho})

with ``H(t)`` the effective Bose-Hubbard Hamiltonian at the instantaneous
Rabi frequency and one polariton-loss channel per cavity.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .bh_model import hopping_sum, interaction_operator
from .fock_space import CavityGraph, FockBasis, ladder_operator, state_index, total_number_operator
from .polariton_params import (
    PhysicalParams,
    RampSchedule,
    params_at_time,
    validity_report,
)

log = logging.getLogger(__name__)

DENSE_DYNAMICS_LIMIT = 2000
TRACE_TOL = 1e-8


class IntegrationError(RuntimeError):
    pass


class PositivityError(IntegrationError):
    pass


class ValidityWarning(UserWarning):
    pass


@dataclass(frozen=True)
class IntegratorControl:
    rtol: float = 1e-8
    atol: float = 1e-12
    samples: int = 200
    max_step: float | None = None
    first_step: float | None = None
    max_steps: int = 10_000_000
    positivity_tol: float = 1e-6
    include_chemical: bool = True
    n_p: int = 2


@dataclass
class ObservableSeries:
    times: np.ndarray
    omega_l: np.ndarray
    kappa: np.ndarray
    J: np.ndarray
    gamma: np.ndarray
    mean_n: np.ndarray  # (samples, sites)
    fluctuation: np.ndarray  # (samples, sites)
    trace: np.ndarray
    purity: np.ndarray
    min_eigenvalue: np.ndarray
    hermiticity: np.ndarray
    info: dict = field(default_factory=dict)

    @property
    def site_count(self) -> int:
        return self.mean_n.shape[1]

    def __len__(self) -> int:
        return self.times.shape[0]

    def columns(self) -> list[str]:
        m = self.site_count
        return (["t", "omega_l", "kappa", "j", "gamma"]
                + [f"n_{i + 1}" for i in range(m)]
                + [f"f_{i + 1}" for i in range(m)]
                + ["trace", "purity"])

    def rows(self):
        for k in range(len(self)):
            yield ([self.times[k], self.omega_l[k], self.kappa[k], self.J[k], self.gamma[k]]
                   + list(self.mean_n[k]) + list(self.fluctuation[k])
                   + [self.trace[k], self.purity[k]])


def initial_mott_state(basis: FockBasis, occ: Sequence[int]) -> np.ndarray:
    """Pure Fock-state projector |occ><occ|."""
    k = state_index(basis, occ)
    rho = np.zeros((basis.dim, basis.dim), dtype=np.complex128)
    rho[k, k] = 1.0
    return rho


def _dense(op) -> np.ndarray:
    return np.asarray(op.toarray() if sp.issparse(op) else op, dtype=np.complex128)


def pack_jumps(ops: Sequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Stack operators as padded COO arrays of shape (K, nnz_max)."""
    coos = [sp.coo_matrix(op) for op in ops]
    width = max([c.nnz for c in coos] + [1])
    k = len(coos)
    rows = np.zeros((k, width), dtype=np.int64)
    cols = np.zeros((k, width), dtype=np.int64)
    vals = np.zeros((k, width), dtype=np.complex128)
    for q, c in enumerate(coos):
        rows[q, :c.nnz] = c.row
        cols[q, :c.nnz] = c.col
        vals[q, :c.nnz] = c.data
    return rows, cols, vals


def lindblad_derivative(H, jumps: Sequence[tuple], rho: np.ndarray) -> np.ndarray:
    """Right-hand side of the Lindblad equation for jump list ``[(L_k, gamma_k), ...]``."""
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    d = rho.shape[0]
    h_eff = _dense(H)
    if h_eff.shape != (d, d):
        raise ValueError(f"H has shape {h_eff.shape}, rho has {rho.shape}")
    ops, rates = [], []
    for L, rate in jumps:
        if rate < 0:
            raise ValueError(f"negative jump rate {rate}")
        Ld = _dense(L)
        if Ld.shape != (d, d):
            raise ValueError("jump operator dimension mismatch")
        h_eff = h_eff - 0.5j * rate * (Ld.conj().T @ Ld)
        ops.append(L)
        rates.append(rate)
    if ops:
        rows, cols, vals = pack_jumps(ops)
    else:
        rows = cols = np.zeros((0, 1), dtype=np.int64)
        vals = np.zeros((0, 1), dtype=np.complex128)
    out = np.empty_like(rho)
    _kernels.lindblad_rhs(rho, np.ascontiguousarray(h_eff), rows, cols, vals,
                          np.asarray(rates, dtype=float), out)
    return out


def _pack_coefficients(p: PhysicalParams, ramp: RampSchedule, include_chemical: bool) -> np.ndarray:
    c = np.zeros(_kernels.N_COEFFS)
    c[_kernels.C_SHAPE] = ramp.shape_code
    c[_kernels.C_W0] = ramp.omega_start
    c[_kernels.C_W1] = ramp.omega_end
    c[_kernels.C_T] = ramp.duration
    c[_kernels.C_GSQ] = p.g_sq
    c[_kernels.C_G24] = p.g24
    c[_kernels.C_DELTA] = p.delta_cap
    c[_kernels.C_TOA] = p.two_omega_alpha
    c[_kernels.C_EPS] = p.epsilon
    c[_kernels.C_GC] = p.gamma_c
    c[_kernels.C_GD] = p.gamma_dephase
    c[_kernels.C_CHEM] = 1.0 if include_chemical else 0.0
    return c


def _check_rho(rho: np.ndarray, dim: int) -> np.ndarray:
    rho = np.ascontiguousarray(rho, dtype=np.complex128)
    if rho.shape != (dim, dim):
        raise ValueError(f"rho0 has shape {rho.shape}, expected ({dim}, {dim})")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("rho0 is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > TRACE_TOL:
        raise ValueError(f"rho0 has trace {np.trace(rho).real!r}")
    return rho


def evolve(rho0: np.ndarray, params: PhysicalParams, ramp: RampSchedule, graph: CavityGraph,
           basis: FockBasis, control: IntegratorControl | None = None,
           integrator=None) -> ObservableSeries:
    """Integrate the lossy ramp and record per-site observables on a uniform time grid.

    ``integrator`` overrides the kernel (``_kernels.integrate_ramp_numpy`` or
    ``_kernels.integrate_ramp_numba``); by default the module-selected one runs.
    """
    control = control or IntegratorControl()
    if basis.dim > DENSE_DYNAMICS_LIMIT:
        raise ValueError(f"{basis.dim} states is too many for dense master-equation dynamics")
    if control.samples < 2:
        raise ValueError("need at least two samples (start and end of the ramp)")
    rho0 = _check_rho(rho0, basis.dim)

    for t in (0.0, ramp.duration):
        rep = validity_report(params.with_omega_l(ramp.omega_at(t)), control.n_p)
        if not rep.passed:
            warnings.warn(
                f"polariton mapping {rep.level} at t={t:g}: {', '.join(rep.failures())}",
                ValidityWarning, stacklevel=2)

    h_int = _dense(interaction_operator(basis))
    h_hop = _dense(hopping_sum(basis, graph))
    h_num = _dense(total_number_operator(basis))
    ladders = [ladder_operator(basis, i) for i in range(basis.site_count)]
    loss_gen = sum((_dense(L.conj().T @ L) for L in ladders), np.zeros_like(h_num))
    rows, cols, vals = pack_jumps(ladders)
    coeffs = _pack_coefficients(params, ramp, control.include_chemical)
    t_out = np.linspace(0.0, ramp.duration, control.samples)
    first_step = control.first_step or 1e-3 * (t_out[1] - t_out[0])
    max_step = control.max_step or np.inf

    run = integrator or _kernels.integrate_ramp
    rhos, n_acc, n_rej, status = run(
        rho0, h_int, h_hop, h_num, loss_gen, rows, cols, vals, np.ones(len(ladders)),
        coeffs, t_out, float(control.rtol), float(control.atol), float(max_step),
        float(first_step), int(control.max_steps))
    if status == _kernels.STATUS_UNDERFLOW:
        raise IntegrationError(f"step size underflow after {n_acc} accepted steps")
    if status == _kernels.STATUS_MAX_STEPS:
        raise IntegrationError(f"exceeded {control.max_steps} integrator steps")
    log.debug("ramp integrated: %d accepted, %d rejected steps", n_acc, n_rej)

    series = _observe(rhos, t_out, params, ramp, basis, control)
    series.info.update(accepted_steps=int(n_acc), rejected_steps=int(n_rej),
                       backend="numba" if run is _kernels.integrate_ramp_numba else "numpy")
    drift = float(np.max(np.abs(series.trace - 1.0)))
    if drift > TRACE_TOL:
        warnings.warn(f"trace drift {drift:.2e} exceeds {TRACE_TOL:g}", RuntimeWarning, stacklevel=2)
    return series


def _observe(rhos, t_out, params, ramp, basis, control) -> ObservableSeries:
    n_s, m = len(t_out), basis.site_count
    occ = basis.states.astype(float)
    series = ObservableSeries(
        times=t_out.copy(),
        omega_l=np.empty(n_s), kappa=np.empty(n_s), J=np.empty(n_s), gamma=np.empty(n_s),
        mean_n=np.empty((n_s, m)), fluctuation=np.empty((n_s, m)),
        trace=np.empty(n_s), purity=np.empty(n_s), min_eigenvalue=np.empty(n_s),
        hermiticity=np.empty(n_s),
    )
    for k, (t, rho) in enumerate(zip(t_out, rhos)):
        eff = params_at_time(params, ramp, float(t))
        series.omega_l[k] = ramp.omega_at(float(t))
        series.kappa[k] = eff.kappa
        series.J[k] = eff.J
        series.gamma[k] = eff.gamma
        probs = np.real(np.diagonal(rho))
        tr = probs.sum()
        mean = probs @ occ
        series.mean_n[k] = mean
        series.fluctuation[k] = probs @ (occ * occ) - mean * mean
        series.trace[k] = tr
        series.purity[k] = float(np.real(np.vdot(rho.conj().T, rho)))
        series.hermiticity[k] = float(np.max(np.abs(rho - rho.conj().T)))
        lam = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        series.min_eigenvalue[k] = lam
        if lam < -control.positivity_tol:
            raise PositivityError(
                f"density matrix lost positivity at t={t:.6g}: min eigenvalue {lam:.3e}")
    return series
