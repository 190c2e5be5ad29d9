"""Semiclassical linear-response model: IBM-dressed dot polarizability plus a cavity.

The dot response comes from the one-sided transform of the decaying polarization
exp(-Gamma_x t/2 + phi(t) - phi(0)); the cavity enters through the usual
non-rotating-wave rational forms in absolute frequency.  Offsets on the grid
are measured from the polaron-shifted exciton line.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularDenominator, ZeroLinewidth
from .phonon_bath import PhononBathParams, shared_bath
from .photonic_reservoir import REFERENCE, LorentzianCavity
from .units_numerics import (CorrelationTrace, FrequencyGrid, Spectrum, one_sided_transform,
                             uev_to_radps)


@dataclass(frozen=True)
class SusceptibilityParams:
    gamma_x: float                     # gamma0 + gamma_d, rad/ps
    cavity: LorentzianCavity | None = None
    exciton: float = REFERENCE         # absolute polaron-shifted exciton frequency

    def __post_init__(self):
        if not self.gamma_x > 0:
            raise ZeroLinewidth("Gamma_x must be positive")

    @classmethod
    def from_uev(cls, gamma0, gamma_d, cavity=None):
        return cls(uev_to_radps(gamma0 + gamma_d), cavity)


def _offsets(grid):
    return grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)


def rotating_susceptibility(grid, p: PhononBathParams, s: SusceptibilityParams,
                            window: float = 40.0, dt: float = 0.005) -> np.ndarray:
    """chi(d) = i int_0^inf exp(-Gamma t/2 + phi(t) - phi(0)) exp(i d t) dt.

    The slowly decaying zero-phonon part is done analytically; only the
    short-lived exp(phi) - 1 piece is transformed numerically.
    """
    det = _offsets(grid)
    hw = 0.5 * s.gamma_x
    lorentz = 1.0 / (hw - 1j * det)            # int exp(-hw t + i d t)
    if p.alpha == 0:
        return 1j * lorentz
    bath = shared_bath(p)
    b2 = np.exp(-bath.phi0)
    t = np.arange(0.0, window + dt / 2, dt)
    side = np.exp(-hw * t) * np.expm1(bath.phi(t))
    # int g exp(+i d t) = conj(int conj(g) exp(-i d t))
    sb = np.conj(one_sided_transform(CorrelationTrace(t, np.conj(side)), det, floor=1e-2))
    return 1j * b2 * (lorentz + sb)


def bare_susceptibility(grid, p: PhononBathParams, s: SusceptibilityParams) -> Spectrum:
    """Complex chi on the grid; Im chi is the absorption lineshape."""
    det = _offsets(grid)
    chi = rotating_susceptibility(det, p, s)
    return Spectrum(det, chi, "chi", {"gamma_x": s.gamma_x})


def _bare_denominator(w, s):
    wx = s.exciton
    return wx * wx - w * w - 1j * w * s.gamma_x


def phonon_self_energy(grid, p: PhononBathParams, s: SusceptibilityParams) -> np.ndarray:
    """Sigma(w) such that 2 w_x / (w_x^2 - w^2 - i w Gamma_x - w Sigma) carries the phonon dressing.

    The dressing is read off as the change of 2 w_x / chi between the phonon
    and phonon-free rotating transforms, so Sigma vanishes without phonons.
    """
    det = _offsets(grid)
    w = s.exciton + det
    chi = rotating_susceptibility(det, p, s)
    chi0 = rotating_susceptibility(det, PhononBathParams(0.0, p.omega_p, p.temperature), s)
    return -2.0 * s.exciton * (1.0 / chi - 1.0 / chi0) / w


def dressed_denominator(det, p, s):
    w = s.exciton + det
    return _bare_denominator(w, s) - w * phonon_self_energy(det, p, s)


def full_susceptibility(grid, p: PhononBathParams, s: SusceptibilityParams) -> np.ndarray:
    """chi(w) including the cavity, in the non-rotating-wave form."""
    det = _offsets(grid)
    w = s.exciton + det
    D = dressed_denominator(det, p, s)
    if s.cavity is not None:
        wc = s.exciton + s.cavity.center
        cav_den = wc * wc - w * w - 1j * w * s.cavity.kappa
        D = D - 4.0 * s.cavity.g ** 2 * s.exciton * wc / cav_den
    if np.any(D == 0):
        raise SingularDenominator("susceptibility denominator vanishes on the grid")
    return 2.0 * s.exciton / D


def cavity_spectrum(grid, p: PhononBathParams, s: SusceptibilityParams) -> Spectrum:
    """Cavity-emitted spectrum of an initially excited dot, peak-normalized."""
    if s.cavity is None:
        raise ValueError("cavity_spectrum needs a cavity")
    det = _offsets(grid)
    w = s.exciton + det
    wx = s.exciton
    wc = wx + s.cavity.center
    g = s.cavity.g
    cav_den = wc * wc - w * w - 1j * w * s.cavity.kappa
    D = dressed_denominator(det, p, s) - 4.0 * g * g * wx * wc / cav_den
    num = 2.0 * g * wc * (w + wx) / cav_den
    if np.any(D == 0) or np.any(cav_den == 0):
        raise SingularDenominator("cavity spectrum denominator vanishes on the grid")
    vals = s.cavity.kappa * np.abs(num / D) ** 2
    return Spectrum(det, vals, "G-sus").normalized()
