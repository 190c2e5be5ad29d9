"""Photon reservoirs: a Lorentzian cavity and a tight-binding coupled-cavity waveguide band.

All frequencies are offsets (rad/ps) from one common origin; `reference` is
the absolute angular frequency of that origin, only needed where a formula
depends on the absolute optical frequency (1/w^2 in the waveguide projector,
w^3 in the background decay rate).
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .units_numerics import HBAR_MEV_PS, mev_to_radps, uev_to_radps

REFERENCE_MEV = 1440.0
REFERENCE = mev_to_radps(REFERENCE_MEV)


@dataclass(frozen=True)
class LorentzianCavity:
    center: float          # cavity offset from the origin
    kappa: float           # FWHM
    g: float
    reference: float = REFERENCE

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("cavity kappa must be positive")
        if self.g < 0:
            raise ValueError("coupling g must be non-negative")

    def with_g(self, g):
        return replace(self, g=g)

    @classmethod
    def from_uev(cls, detuning_meV, kappa_ueV, g_ueV):
        return cls(mev_to_radps(detuning_meV), uev_to_radps(kappa_ueV), uev_to_radps(g_ueV))


@dataclass(frozen=True)
class CrowBand:
    lower: float
    upper: float
    kappa_lower: float
    kappa_upper: float
    g: float
    # True: edges pushed off the real axis by i*kappa (damped singularity).
    # False: kappa read as a plain real shift of the edges.
    imaginary_damping: bool = True
    reference: float = REFERENCE

    def __post_init__(self):
        if not self.upper > self.lower:
            raise ValueError("upper band edge must lie above the lower one")
        if not (self.kappa_lower > 0 and self.kappa_upper > 0):
            raise ValueError("edge damping must be positive")
        if self.g < 0:
            raise ValueError("coupling g must be non-negative")

    @property
    def center(self):
        return 0.5 * (self.lower + self.upper)

    @property
    def width(self):
        return self.upper - self.lower

    def with_g(self, g):
        return replace(self, g=g)

    @property
    def complex_edges(self):
        """(conj of damped lower edge, damped upper edge)."""
        if self.imaginary_damping:
            return self.lower - 1j * self.kappa_lower, self.upper + 1j * self.kappa_upper
        return self.lower + self.kappa_lower + 0j, self.upper + self.kappa_upper + 0j

    @classmethod
    def default(cls, center=0.0, width_meV=8.0, edge_width_ueV=14.0, g_ueV=85.0, **kw):
        # edge peak of |1/sqrt(x + i k)|^2 has FWHM 2 sqrt(3) k
        k = uev_to_radps(edge_width_ueV) / (2.0 * np.sqrt(3.0))
        half = 0.5 * mev_to_radps(width_meV)
        return cls(center - half, center + half, k, k, uev_to_radps(g_ueV), **kw)


def _crow_root(w, r: CrowBand):
    lo, hi = r.complex_edges
    w = np.asarray(w, dtype=float)
    return np.sqrt((w - lo) * (hi - w) + 0j)


def photon_spectral_function(w, r):
    """J_ph(w) in rad/ps (so that 2 pi J_ph is a golden-rule rate)."""
    w = np.asarray(w, dtype=float)
    if isinstance(r, LorentzianCavity):
        hw = 0.5 * r.kappa
        out = (r.g ** 2 / np.pi) * hw / ((w - r.center) ** 2 + hw ** 2)
    else:
        out = (r.g ** 2 / np.pi) * np.real(1.0 / _crow_root(w, r))
        out = np.maximum(out, 0.0)  # real-shift reading can give tiny negatives off-band
    return out if out.ndim else float(out)


def _support(r, pad=20.0):
    if isinstance(r, LorentzianCavity):
        return r.center - pad * r.kappa, r.center + pad * r.kappa, [r.center]
    k = max(r.kappa_lower, r.kappa_upper)
    return r.lower - pad * k, r.upper + pad * k, [r.lower, r.upper]


def bath_correlation_fn(tau, r, qd: float, method: str = "auto"):
    """J_ph(tau) = int dw J_ph(w) exp(i (qd - w) tau).

    The cavity uses its exact transform unless `method="quadrature"`; the
    waveguide always goes through quadrature over the band plus margins.
    """
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=float))
    if isinstance(r, LorentzianCavity) and method != "quadrature":
        out = r.g ** 2 * np.exp(1j * (qd - r.center) * tau_arr - 0.5 * r.kappa * tau_arr)
    else:
        pad = 20.0 if method != "quadrature" or not isinstance(r, LorentzianCavity) else 4000.0
        lo, hi, marks = _support(r, pad)
        edges = np.unique(np.concatenate([[lo, hi], [m for m in marks if lo < m < hi]]))
        f = lambda w: photon_spectral_function(w, r)
        out = np.empty(tau_arr.size, dtype=complex)
        for k, t in enumerate(tau_arr):
            re = im = 0.0
            for a, b in zip(edges[:-1], edges[1:]):
                if t == 0.0:
                    re += integrate.quad(f, a, b, limit=800, epsrel=1e-10)[0]
                    continue
                # exp(i(qd - w)t) = exp(i qd t) exp(-i w t); shift to interval start for stability
                c = integrate.quad(lambda x: f(x + a), 0.0, b - a, weight="cos", wvar=t, limit=800)[0]
                s = integrate.quad(lambda x: f(x + a), 0.0, b - a, weight="sin", wvar=t, limit=800)[0]
                z = complex(c, -s) * np.exp(1j * (qd - a) * t)
                re += z.real
                im += z.imag
            out[k] = complex(re, im)
    return out if np.ndim(tau) else complex(out[0])


def propagator(w, r):
    """Detector filter; arbitrary overall scale (spectra get peak-normalized)."""
    w = np.asarray(w, dtype=float)
    if isinstance(r, LorentzianCavity):
        hw = 0.5 * r.kappa
        out = hw / ((w - r.center) ** 2 + hw ** 2)
    else:
        lo, hi = r.complex_edges
        w_abs = r.reference + w
        out = (r.reference / w_abs) ** 2 / np.abs((w - lo) * (w - hi))
    return out if out.ndim else float(out)


def golden_rule_rate(qd, r):
    """Phonon-free SE rate 2 pi J_ph at the emitter frequency."""
    return 2.0 * np.pi * photon_spectral_function(qd, r)


@dataclass(frozen=True)
class BackgroundDecay:
    dipole_debye: float = 50.0
    background_index: float = 3.5
    frequency: float = REFERENCE       # absolute, rad/ps

    @property
    def rate(self):
        """d^2 n w^3 / (6 pi hbar eps0 c^3) in 1/ps."""
        d = self.dipole_debye * 3.33564e-30
        w = self.frequency * 1e12
        hbar, eps0, c = 1.054571817e-34, 8.8541878128e-12, 2.99792458e8
        return d * d * self.background_index * w ** 3 / (6 * np.pi * hbar * eps0 * c ** 3) * 1e-12


def purcell_factor(qd, r, bg: BackgroundDecay | None = None):
    bg = bg or BackgroundDecay(frequency=r.reference)
    gamma_b = BackgroundDecay(bg.dipole_debye, bg.background_index,
                              r.reference + np.asarray(qd, dtype=float)).rate
    return golden_rule_rate(qd, r) / gamma_b


def crow_coupling_from_dipole(dipole_debye, index, v_eff_m3, band_center_abs=REFERENCE):
    """g = sqrt(d^2 w0 / (2 hbar eps0 eps V)) in rad/ps."""
    d = dipole_debye * 3.33564e-30
    w0 = band_center_abs * 1e12
    hbar, eps0 = 1.054571817e-34, 8.8541878128e-12
    return np.sqrt(d * d * w0 / (2 * hbar * eps0 * index ** 2 * v_eff_m3)) * 1e-12


def describe(r) -> dict:
    to_uev = lambda x: x * HBAR_MEV_PS * 1e3
    if isinstance(r, LorentzianCavity):
        return {"kind": "cavity", "center_ueV": to_uev(r.center), "kappa_ueV": to_uev(r.kappa),
                "g_ueV": to_uev(r.g)}
    return {"kind": "crow", "lower_ueV": to_uev(r.lower), "upper_ueV": to_uev(r.upper),
            "kappa_lower_ueV": to_uev(r.kappa_lower), "kappa_upper_ueV": to_uev(r.kappa_upper),
            "g_ueV": to_uev(r.g), "imaginary_damping": r.imaginary_damping}
