"""Hot loops of the master-equation integration, in two interchangeable flavours.

``*_numpy`` functions are vectorised numpy; ``*_numba`` are the same
algorithms compiled with ``numba.njit``.  The module-level aliases
(``lindblad_rhs``, ``integrate_ramp``) point at the compiled versions unless
numba is missing or ``POLARITON_BH_NO_NUMBA`` is set to a non-empty value
other than ``0``.

Conventions shared by both flavours:

* ``rho`` is a dense complex ``(d, d)`` array.
* ``h_eff`` is the non-Hermitian generator ``H - i/2 sum_k gamma_k L_k^dag L_k``.
* Jump operators are stacked COO triples ``rows, cols, vals`` of shape
  ``(K, nnz)``; padding entries carry ``vals == 0``.
"""
from __future__ import annotations

import math
import os
import types

import numpy as np

from .polariton_params import (
    chem_shift_value,
    dark_loss_value,
    hopping_value,
    kappa_value,
    ramp_omega,
)

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("POLARITON_BH_NO_NUMBA", "0") in ("", "0")

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAX_STEPS = 2

# index layout of the packed coefficient array handed to ramp_coefficients
C_SHAPE, C_W0, C_W1, C_T, C_GSQ, C_G24, C_DELTA, C_TOA, C_EPS, C_GC, C_GD, C_CHEM = range(12)
N_COEFFS = 12

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


def _ramp_coefficients(t, c):
    """(kappa, J, mu, Gamma) at time ``t`` for the packed parameter array ``c``."""
    omega = ramp_omega(t, int(c[C_SHAPE]), c[C_W0], c[C_W1], c[C_T])
    kappa = kappa_value(omega, c[C_GSQ], c[C_G24], c[C_DELTA])
    hop = hopping_value(omega, c[C_GSQ], c[C_TOA])
    mu = chem_shift_value(omega, c[C_GSQ], c[C_EPS]) if c[C_CHEM] != 0.0 else 0.0
    gamma = dark_loss_value(omega, c[C_GSQ], c[C_GC], c[C_GD])
    return kappa, hop, mu, gamma


# -- numpy flavour -----------------------------------------------------------

def lindblad_rhs_numpy(rho, h_eff, rows, cols, vals, rates, out):
    out[:] = -1j * (h_eff @ rho - rho @ h_eff.conj().T)
    for k in range(rows.shape[0]):
        if rates[k] == 0.0:
            continue
        r, c, v = rows[k], cols[k], vals[k]
        block = rates[k] * np.outer(v, v.conj()) * rho[np.ix_(c, c)]
        np.add.at(out, (r[:, None], r[None, :]), block)
    return out


# -- numba-compatible scalar loop flavour (compiled below) -------------------

def _lindblad_rhs_loops(rho, h_eff, rows, cols, vals, rates, out):
    d = rho.shape[0]
    hr = h_eff @ rho
    rh = rho @ np.ascontiguousarray(np.conj(h_eff).T)
    for i in range(d):
        for j in range(d):
            out[i, j] = -1j * (hr[i, j] - rh[i, j])
    nnz = rows.shape[1]
    for k in range(rows.shape[0]):
        g = rates[k]
        if g == 0.0:
            continue
        for a in range(nnz):
            va = vals[k, a]
            if va == 0.0:
                continue
            ra = rows[k, a]
            ca = cols[k, a]
            for b in range(nnz):
                vb = vals[k, b]
                if vb == 0.0:
                    continue
                out[ra, rows[k, b]] += g * va * np.conj(vb) * rho[ca, cols[k, b]]
    return out


_rhs = lindblad_rhs_numpy
_coefficients = _ramp_coefficients


def _integrate_template(rho0, h_int, h_hop, h_num, loss_gen, rows, cols, vals, base_rates,
                        coeffs, t_out, rtol, atol, max_step, first_step, max_steps):
    """Adaptive Dormand-Prince 5(4) integration of the ramp, sampled at ``t_out``.

    Calls the globals ``_rhs`` and ``_coefficients``; the numpy and numba
    entry points below bind them to their own flavour.
    Returns ``(rho_samples, accepted, rejected, status)``.
    """
    d = rho0.shape[0]
    n_out = t_out.shape[0]
    out = np.empty((n_out, d, d), dtype=np.complex128)
    y = rho0.copy()
    out[0] = y
    t = t_out[0]
    h = first_step
    rates = np.empty(base_rates.shape[0])
    h_eff = np.empty((d, d), dtype=np.complex128)
    k1 = np.empty((d, d), dtype=np.complex128)
    k2 = np.empty_like(k1)
    k3 = np.empty_like(k1)
    k4 = np.empty_like(k1)
    k5 = np.empty_like(k1)
    k6 = np.empty_like(k1)
    k7 = np.empty_like(k1)
    n_acc = 0
    n_rej = 0

    def stage(ts, ys, dst):
        kap, hop, mu, gam = _coefficients(ts, coeffs)
        h_eff[:, :] = kap * h_int + hop * h_hop + mu * h_num - 0.5j * gam * loss_gen
        for q in range(base_rates.shape[0]):
            rates[q] = gam * base_rates[q]
        _rhs(ys, h_eff, rows, cols, vals, rates, dst)

    stage(t, y, k1)
    for s in range(1, n_out):
        t_target = t_out[s]
        while t < t_target:
            if n_acc + n_rej >= max_steps:
                return out, n_acc, n_rej, STATUS_MAX_STEPS
            h = min(h, max_step)
            # absorb a rounding-sized remainder so it never becomes its own step
            clipped = t + h * (1.0 + 1e-8) >= t_target
            hs = t_target - t if clipped else h
            if hs <= 1e-14 * max(abs(t), abs(t_target)):
                return out, n_acc, n_rej, STATUS_UNDERFLOW
            stage(t + _C2 * hs, y + hs * (_A21 * k1), k2)
            stage(t + _C3 * hs, y + hs * (_A31 * k1 + _A32 * k2), k3)
            stage(t + _C4 * hs, y + hs * (_A41 * k1 + _A42 * k2 + _A43 * k3), k4)
            stage(t + _C5 * hs, y + hs * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), k5)
            stage(t + hs, y + hs * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), k6)
            y_new = y + hs * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
            t_new = t_target if clipped else t + hs
            stage(t_new, y_new, k7)
            err_mat = hs * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
            scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = math.sqrt(np.mean((np.abs(err_mat) / scale) ** 2))
            if err <= 1.0:
                t = t_new
                y = y_new
                k1[:, :] = k7
                n_acc += 1
                fac = 10.0 if err == 0.0 else min(10.0, 0.9 * err ** -0.2)
                # a step shortened to hit a sample time does not shrink h
                h = max(h, hs * fac) if clipped else hs * fac
            else:
                n_rej += 1
                h = hs * max(0.2, 0.9 * err ** -0.2)
        out[s] = y
    return out, n_acc, n_rej, STATUS_OK


def _bind(func, name, **names):
    g = dict(func.__globals__)
    g.update(names)
    out = types.FunctionType(func.__code__, g, name, func.__defaults__, func.__closure__)
    out.__doc__ = func.__doc__
    return out


ramp_coefficients_numpy = _ramp_coefficients
integrate_ramp_numpy = _bind(_integrate_template, "integrate_ramp_numpy",
                             _rhs=lindblad_rhs_numpy, _coefficients=_ramp_coefficients)

if HAVE_NUMBA:
    _jit = numba.njit(cache=True)
    lindblad_rhs_numba = _jit(_lindblad_rhs_loops)
    _kappa_nb = _jit(kappa_value)
    _hop_nb = _jit(hopping_value)
    _chem_nb = _jit(chem_shift_value)
    _loss_nb = _jit(dark_loss_value)
    _omega_nb = _jit(ramp_omega)

    @numba.njit(cache=True)
    def ramp_coefficients_numba(t, c):
        omega = _omega_nb(t, int(c[C_SHAPE]), c[C_W0], c[C_W1], c[C_T])
        kappa = _kappa_nb(omega, c[C_GSQ], c[C_G24], c[C_DELTA])
        hop = _hop_nb(omega, c[C_GSQ], c[C_TOA])
        mu = _chem_nb(omega, c[C_GSQ], c[C_EPS]) if c[C_CHEM] != 0.0 else 0.0
        gamma = _loss_nb(omega, c[C_GSQ], c[C_GC], c[C_GD])
        return kappa, hop, mu, gamma

    _rhs = lindblad_rhs_numba
    _coefficients = ramp_coefficients_numba
    integrate_ramp_numba = _jit(_integrate_template)
else:  # pragma: no cover
    lindblad_rhs_numba = None
    ramp_coefficients_numba = None
    integrate_ramp_numba = None

if USE_NUMBA:
    lindblad_rhs = lindblad_rhs_numba
    integrate_ramp = integrate_ramp_numba
else:
    lindblad_rhs = lindblad_rhs_numpy
    integrate_ramp = integrate_ramp_numpy


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
