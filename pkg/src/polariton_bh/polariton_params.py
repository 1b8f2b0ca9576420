"""Microscopic atom-cavity parameters -> effective dark-polariton Bose-Hubbard parameters.

All rates and frequencies are angular, in 1/s, with hbar = 1.  The scalar
helpers at the top (``kappa_value`` and friends) are plain arithmetic so the
dynamics kernels can compile them unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

SHAPE_LINEAR = 0
SHAPE_EXPONENTIAL = 1
_SHAPES = {"linear": SHAPE_LINEAR, "exponential": SHAPE_EXPONENTIAL}

DEFAULT_VALIDITY_THRESHOLD = 0.25
VALIDITY_WARN_LIMIT = 1.0


class SingularDetuningError(ValueError):
    """Delta = 0 with g24 != 0: the level-4 shift is not perturbative."""


class DegenerateCouplingError(ValueError):
    """B = sqrt(g^2 + Omega_L^2) vanishes, so the dark polariton is undefined."""


# -- scalar formulas (shared with the compiled kernels) --------------------

def kappa_value(omega_l, g_sq, g24, delta_cap):
    if g24 == 0.0:
        return 0.0
    b_sq = g_sq + omega_l * omega_l
    return -(g24 * g24 / delta_cap) * g_sq * omega_l * omega_l / (b_sq * b_sq)


def hopping_value(omega_l, g_sq, two_omega_alpha):
    w_sq = omega_l * omega_l
    return two_omega_alpha * w_sq / (g_sq + w_sq)


def dark_loss_value(omega_l, g_sq, gamma_c, gamma_dephase):
    # photonic weight * cavity decay + atomic weight * optional dephasing
    w_sq = omega_l * omega_l
    b_sq = g_sq + w_sq
    return (w_sq * gamma_c + g_sq * gamma_dephase) / b_sq


def chem_shift_value(omega_l, g_sq, epsilon):
    return epsilon * g_sq / (g_sq + omega_l * omega_l)


def ramp_omega(t, shape, omega_start, omega_end, duration):
    s = t / duration
    if shape == SHAPE_EXPONENTIAL:
        return omega_start * math.exp(s * math.log(omega_end / omega_start))
    return omega_start + s * (omega_end - omega_start)


# -- parameter containers --------------------------------------------------

@dataclass(frozen=True)
class PhysicalParams:
    """Microscopic parameters of one cavity and its coupling to neighbours.

    ``two_omega_alpha`` is the photon hopping prefactor 2*omega_C*alpha, taken
    as a single number.  ``delta_cap`` is the level-4 detuning, ``delta_small``
    the level-3 detuning.
    """

    g13: float
    g24: float
    omega_l: float
    delta_cap: float
    two_omega_alpha: float
    n_atoms: int = 1
    delta_small: float = 0.0
    epsilon: float = 0.0
    gamma_c: float = 0.0
    gamma3: float = 0.0
    gamma4: float = 0.0
    gamma_dephase: float = 0.0
    omega_c: float = 0.0

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be an integer >= 1, got {self.n_atoms}")
        for name in ("gamma_c", "gamma3", "gamma4", "gamma_dephase"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.omega_l < 0:
            raise ValueError("omega_l must be non-negative")

    @property
    def g_sq(self) -> float:
        return self.n_atoms * self.g13 ** 2

    def with_omega_l(self, omega_l: float) -> "PhysicalParams":
        return replace(self, omega_l=omega_l)


@dataclass(frozen=True)
class EffectiveParams:
    g: float
    B: float
    A: float
    mu0: float
    mu_plus: float
    mu_minus: float
    kappa: float
    J: float
    gamma: float
    chem_shift: float
    dark_atomic_amp: float
    dark_photonic_amp: float

    @property
    def kappa_over_gamma(self) -> float:
        return math.inf if self.gamma == 0 else self.kappa / self.gamma


def effective_parameters(p: PhysicalParams) -> EffectiveParams:
    if p.g24 != 0 and p.delta_cap == 0:
        raise SingularDetuningError("Delta = 0 with g24 != 0; level-4 shift is singular")
    g_sq = p.g_sq
    g = math.sqrt(g_sq)
    B = math.hypot(g, p.omega_l)
    if B == 0:
        raise DegenerateCouplingError("g = Omega_L = 0: dark polariton undefined")
    A = math.hypot(2 * B, p.delta_small)
    return EffectiveParams(
        g=g,
        B=B,
        A=A,
        mu0=0.0,
        mu_plus=(p.delta_small - A) / 2,
        mu_minus=(p.delta_small + A) / 2,
        kappa=kappa_value(p.omega_l, g_sq, p.g24, p.delta_cap),
        J=hopping_value(p.omega_l, g_sq, p.two_omega_alpha),
        gamma=dark_loss_value(p.omega_l, g_sq, p.gamma_c, p.gamma_dephase),
        chem_shift=chem_shift_value(p.omega_l, g_sq, p.epsilon),
        dark_atomic_amp=g / B,
        dark_photonic_amp=-p.omega_l / B,
    )


@dataclass(frozen=True)
class ValidityReport:
    """Smallness ratios behind the polariton mapping; each must be << 1.

    species_mixing   max(|g24|, |eps|, |Delta|) / min |mu_pm|
    perturbative     sqrt(n_p (n_p - 1)) |g24| / |Delta|
    hopping_mixing   |2 omega_C alpha| / min |mu_pm|
    pair_resonance   (g24^2 / |Delta|) / |delta|; the bright pair p+ p- sits at
                     energy delta and is degenerate with two dark polaritons
                     when delta = 0.  Zero when n_p < 2 or g24 = 0.
    """

    species_mixing: float
    perturbative: float
    hopping_mixing: float
    pair_resonance: float
    threshold: float = DEFAULT_VALIDITY_THRESHOLD
    ratios: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ratios", {
            "species_mixing": self.species_mixing,
            "perturbative": self.perturbative,
            "hopping_mixing": self.hopping_mixing,
            "pair_resonance": self.pair_resonance,
        })

    @property
    def worst(self) -> float:
        return max(self.ratios.values())

    @property
    def passed(self) -> bool:
        return self.worst <= self.threshold

    @property
    def level(self) -> str:
        if self.passed:
            return "ok"
        return "marginal" if self.worst <= VALIDITY_WARN_LIMIT else "invalid"

    def failures(self) -> list[str]:
        return [k for k, v in self.ratios.items() if v > self.threshold]


def validity_report(p: PhysicalParams, n_p: int = 2,
                    threshold: float = DEFAULT_VALIDITY_THRESHOLD) -> ValidityReport:
    eff = effective_parameters(p)
    gap = min(abs(eff.mu_plus), abs(eff.mu_minus))
    species = max(abs(p.g24), abs(p.epsilon), abs(p.delta_cap)) / gap
    if n_p < 2 or p.g24 == 0:
        perturbative = 0.0
        pair = 0.0
    else:
        perturbative = math.sqrt(n_p * (n_p - 1)) * abs(p.g24) / abs(p.delta_cap)
        scale = p.g24 ** 2 / abs(p.delta_cap)
        pair = math.inf if p.delta_small == 0 else scale / abs(p.delta_small)
    return ValidityReport(species, perturbative, abs(p.two_omega_alpha) / gap, pair, threshold)


def adiabatic_margin(p: PhysicalParams, domega_dt: float) -> float:
    """(g / B^2) |dOmega_L/dt| / min |mu_pm|; the laser switch-off is adiabatic when << 1."""
    eff = effective_parameters(p)
    return (eff.g / eff.B ** 2) * abs(domega_dt) / min(abs(eff.mu_plus), abs(eff.mu_minus))


@dataclass(frozen=True)
class RampSchedule:
    omega_start: float
    omega_end: float
    duration: float
    shape: str = "exponential"

    @property
    def shape_code(self) -> int:
        return _SHAPES[self.shape]

    def omega_at(self, t: float) -> float:
        if not 0.0 <= t <= self.duration:
            raise ValueError(f"t = {t} outside ramp window [0, {self.duration}]")
        if t == self.duration:
            return self.omega_end
        return ramp_omega(t, self.shape_code, self.omega_start, self.omega_end, self.duration)

    def slope_at(self, t: float) -> float:
        omega = self.omega_at(t)
        if self.shape == "exponential":
            return omega * math.log(self.omega_end / self.omega_start) / self.duration
        return (self.omega_end - self.omega_start) / self.duration


def make_ramp(omega_start: float, omega_end: float, duration: float = 1e-6,
              shape: str = "exponential") -> RampSchedule:
    if duration <= 0:
        raise ValueError(f"ramp duration must be positive, got {duration}")
    if omega_start <= 0 or omega_end <= 0:
        raise ValueError("ramp endpoints must be positive Rabi frequencies")
    if shape not in _SHAPES:
        raise ValueError(f"unknown ramp shape {shape!r}; expected one of {sorted(_SHAPES)}")
    return RampSchedule(float(omega_start), float(omega_end), float(duration), shape)


def params_at_time(p: PhysicalParams, ramp: RampSchedule, t: float) -> EffectiveParams:
    return effective_parameters(p.with_omega_l(ramp.omega_at(t)))


# -- presets ---------------------------------------------------------------

def toroidal_2005(omega_l: float = 7.8e10) -> PhysicalParams:
    """Toroidal micro-cavity values used for the three-cavity ramp.

    ``delta_small`` is not fixed by the cavity data; -1e10 /s (half of Delta) keeps
    the bright pair p+ p- away from both the dark pair and level 4.
    """
    return PhysicalParams(
        g13=2.5e9,
        g24=2.5e9,
        omega_l=omega_l,
        delta_cap=-2.0e10,
        two_omega_alpha=1.1e7,
        n_atoms=1000,
        delta_small=-1.0e10,
        epsilon=0.0,
        gamma_c=0.4e5,
        gamma3=1.6e7,
        gamma4=1.6e7,
    )


TOROIDAL_RAMP = (7.8e10, 1.1e12)
