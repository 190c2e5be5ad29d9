"""LA-phonon deformation-potential bath.

Everything downstream needs the phase function phi(t); it is cheap to tabulate
once per (alpha, omega_p, T) and interpolate, so `PhononBath` caches a table.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import InsufficientModes, NegativeFrequency
from .units_numerics import HBAR_MEV_PS, KB_MEV_PER_K

ALPHA_INAS_PS2 = 0.06
OMEGA_P_INAS = 1.0 / HBAR_MEV_PS    # 1 meV in rad/ps


@dataclass(frozen=True)
class PhononBathParams:
    alpha: float = ALPHA_INAS_PS2     # ps^2
    omega_p: float = OMEGA_P_INAS     # rad/ps
    temperature: float = 4.0          # K

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if not self.omega_p > 0:
            raise ValueError("omega_p must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")

    @classmethod
    def from_microscopic(cls, deformation_eV, density_kg_m3, sound_velocity_m_s,
                         omega_p=OMEGA_P_INAS, temperature=4.0):
        # alpha = D^2 / (4 pi^2 hbar rho c^5); SI gives s^2.  No material defaults on purpose.
        hbar_si = 1.054571817e-34
        d_j = deformation_eV * 1.602176634e-19
        alpha_s2 = d_j ** 2 / (4 * np.pi ** 2 * hbar_si * density_kg_m3 * sound_velocity_m_s ** 5)
        return cls(alpha=alpha_s2 * 1e24, omega_p=omega_p, temperature=temperature)

    def with_temperature(self, T):
        return PhononBathParams(self.alpha, self.omega_p, T)

    @property
    def frozen(self):
        # below ~1e-11 K every Boltzmann factor that matters underflows to zero
        return KB_MEV_PER_K * self.temperature < 1e-12

    @property
    def half_beta(self):
        """hbar / (2 k_B T) in ps; inf at T = 0."""
        if self.frozen:
            return np.inf
        return HBAR_MEV_PS / (2.0 * KB_MEV_PER_K * self.temperature)


def spectral_density(w, p: PhononBathParams):
    w_arr = np.asarray(w, dtype=float)
    if np.any(w_arr < 0):
        raise NegativeFrequency("phonon spectral density needs w >= 0")
    out = p.alpha * w_arr ** 3 * np.exp(-w_arr ** 2 / (2 * p.omega_p ** 2))
    return out if np.ndim(w) else float(out)


def _w_coth(w, p):
    """w * coth(hbar w / 2kT), finite at w -> 0 (limit 2kT/hbar)."""
    w = np.asarray(w, dtype=float)
    if p.frozen:
        return w.copy()
    hb = p.half_beta
    x = hb * w
    small = x < 1e-6
    safe = np.where(small, 1.0, x)
    val = w / np.tanh(safe)
    xs = np.where(small, x, 0.0)
    series = (1.0 + xs ** 2 / 3.0) / hb
    return np.where(small, series, val)


def thermal_factor(w, p):
    """coth(hbar w / 2 k_B T)."""
    w = np.asarray(w, dtype=float)
    if p.frozen:
        return np.ones_like(w)
    return 1.0 / np.tanh(p.half_beta * w)


def bose_occupation(w, p):
    w = np.asarray(w, dtype=float)
    if p.frozen:
        return np.zeros_like(w)
    with np.errstate(over="ignore"):       # exp overflow is an occupation of exactly 0
        return 1.0 / np.expm1(2.0 * p.half_beta * w)


def _phase_integrands(p):
    a, wp = p.alpha, p.omega_p

    def re(w, t):
        return a * _w_coth(w, p) * np.exp(-w * w / (2 * wp * wp)) * np.cos(w * t)

    def im(w, t):
        return -a * w * np.exp(-w * w / (2 * wp * wp)) * np.sin(w * t)

    return re, im


def phase_function_quad(t, p: PhononBathParams, rtol=1e-9):
    """phi(t) straight from its defining integral (adaptive quadrature, scalar t)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    if p.alpha == 0:
        return 0j
    re, im = _phase_integrands(p)
    hi = 12.0 * p.omega_p
    # split the range so the oscillation never outruns the subdivision budget
    n_split = max(1, int(hi * t / (2 * np.pi) / 8) + 1)
    edges = np.linspace(0.0, hi, n_split + 1)
    r = sum(integrate.quad(re, lo, up, args=(t,), epsrel=rtol, epsabs=1e-14, limit=400)[0]
            for lo, up in zip(edges[:-1], edges[1:]))
    i = sum(integrate.quad(im, lo, up, args=(t,), epsrel=rtol, epsabs=1e-14, limit=400)[0]
            for lo, up in zip(edges[:-1], edges[1:]))
    return complex(r, i)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _composite_nodes(p, panels=120):
    hi = 12.0 * p.omega_p
    edges = np.linspace(0.0, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    w = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wt = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return w, wt


def phase_function(t, p: PhononBathParams):
    """phi(t) = int dw J(w)/w^2 [coth(hbar w/2kT) cos wt - i sin wt], vectorized over t.

    Composite Gauss-Legendre over [0, 12 omega_p]; agrees with the adaptive
    version to ~1e-12 for t up to a few hundred ps.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    if p.alpha == 0:
        out = np.zeros(t_arr.shape, dtype=complex)
    else:
        w, wt = _composite_nodes(p)
        env = p.alpha * np.exp(-w * w / (2 * p.omega_p ** 2))
        amp_re = wt * env * _w_coth(w, p)
        amp_im = wt * env * w
        out = np.empty(t_arr.shape, dtype=complex)
        for s in range(0, t_arr.size, 512):
            ph = np.outer(t_arr[s:s + 512], w)
            out[s:s + 512] = np.cos(ph) @ amp_re - 1j * (np.sin(ph) @ amp_im)
    return out if np.ndim(t) else complex(out[0])


def phase_zero(p: PhononBathParams) -> float:
    """phi(0), real."""
    if p.alpha == 0:
        return 0.0
    return float(phase_function(0.0, p).real)


def bath_correlation(t, p: PhononBathParams):
    return np.exp(phase_function(t, p) - phase_zero(p))


def displacement_average(p: PhononBathParams) -> float:
    return float(np.exp(-0.5 * phase_zero(p)))


def polaron_shift(p: PhononBathParams) -> float:
    if p.alpha == 0:
        return 0.0
    val, _ = integrate.quad(lambda w: p.alpha * w * w * np.exp(-w * w / (2 * p.omega_p ** 2)),
                            0.0, np.inf, epsrel=1e-12)
    return float(val)


def polaron_shift_closed_form(p: PhononBathParams) -> float:
    return p.alpha * p.omega_p ** 3 * np.sqrt(np.pi / 2)


def polaron_green_functions(t, p: PhononBathParams):
    phi = phase_function(t, p)
    b2 = np.exp(-phase_zero(p))
    return b2 * (np.cosh(phi) - 1.0), b2 * np.sinh(phi)


@dataclass(frozen=True)
class DiscretizedPhononModes:
    omega: np.ndarray       # rad/ps
    coupling: np.ndarray    # sqrt(J(w_q) dw), volume factor absorbed
    occupation: np.ndarray

    @property
    def n_modes(self):
        return self.omega.size

    def phase(self, t):
        """phi(t) rebuilt from the discrete modes."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lam2 = self.coupling ** 2 / self.omega ** 2
        coth = 2.0 * self.occupation + 1.0
        ph = np.outer(t, self.omega)
        return np.cos(ph) @ (lam2 * coth) - 1j * (np.sin(ph) @ lam2)


def discretize_modes(p: PhononBathParams, n_modes: int = 200, w_max: float | None = None):
    if n_modes < 10:
        raise InsufficientModes(f"need at least 10 phonon modes, got {n_modes}")
    if w_max is None:
        w_max = 5.0 * p.omega_p
    if w_max < 4.0 * p.omega_p:
        raise ValueError("w_max should be at least 4 omega_p")
    dw = w_max / n_modes
    w = (np.arange(n_modes) + 0.5) * dw
    lam = np.sqrt(spectral_density(w, p) * dw)
    return DiscretizedPhononModes(w, lam, bose_occupation(w, p))


class PhononBath:
    """Cached phase-function table plus derived quantities for one parameter set."""

    def __init__(self, params: PhononBathParams, t_max: float = 40.0, dt: float = 0.005):
        self.params = params
        self.t_max = t_max
        self._dt = dt

    @cached_property
    def _table(self):
        t = np.arange(0.0, self.t_max + self._dt / 2, self._dt)
        phi = phase_function(t, self.params)
        return (CubicSpline(t, phi.real), CubicSpline(t, phi.imag))

    @cached_property
    def phi0(self) -> float:
        return phase_zero(self.params)

    @cached_property
    def mean_displacement(self) -> float:
        return float(np.exp(-0.5 * self.phi0))

    @cached_property
    def shift(self) -> float:
        return polaron_shift(self.params)

    def phi(self, t):
        """Interpolated phi(t); falls back to direct quadrature past the table."""
        t_arr = np.asarray(t, dtype=float)
        if self.params.alpha == 0:
            return np.zeros(t_arr.shape, dtype=complex) if t_arr.ndim else 0j
        re, im = self._table
        inside = t_arr <= self.t_max
        if np.all(inside):
            out = re(t_arr) + 1j * im(t_arr)
        else:
            out = np.asarray(phase_function(np.atleast_1d(t_arr), self.params))
            idx = np.atleast_1d(inside)
            ta = np.atleast_1d(t_arr)
            out[idx] = re(ta[idx]) + 1j * im(ta[idx])
            out = out.reshape(t_arr.shape)
        return complex(out) if t_arr.ndim == 0 else out

    def correlation(self, t):
        return np.exp(self.phi(t) - self.phi0)

    def green_functions(self, t):
        ph = self.phi(t)
        b2 = np.exp(-self.phi0)
        return b2 * (np.cosh(ph) - 1.0), b2 * np.sinh(ph)


_BATHS: dict = {}


def shared_bath(params: PhononBathParams) -> PhononBath:
    """One cached PhononBath per parameter set; tables are expensive-ish."""
    bath = _BATHS.get(params)
    if bath is None:
        bath = _BATHS.setdefault(params, PhononBath(params))
    return bath


def _sideband_transform(bath: PhononBath, deltas, damping=0.0, t_cut=None, dt=0.005, sign=1):
    """int_0^t_cut (e^{sign phi} - 1) e^{-damping t/2 - i d t} dt by dense Simpson."""
    t_cut = bath.t_max if t_cut is None else t_cut
    n = int(round(t_cut / dt))
    n += n % 2
    t = np.linspace(0.0, t_cut, n + 1)
    f = np.expm1(sign * bath.phi(t)) * np.exp(-0.5 * damping * t)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    f = f * w * (t[1] - t[0]) / 3.0
    d = np.atleast_1d(np.asarray(deltas, dtype=float))
    out = np.empty(d.size, dtype=complex)
    for s in range(0, d.size, 256):
        out[s:s + 256] = np.exp(-1j * np.outer(d[s:s + 256], t)) @ f
    return out


class SidebandKernel:
    """K(d) = int_0^inf (e^{s phi(t)} - 1) e^{-i d t} dt, s = +-1, tabulated and spline-interpolated.

    Outside the table the value is taken as zero; the table spans +-15 meV,
    far beyond where the Gaussian cutoff leaves anything.
    """

    def __init__(self, bath: PhononBath, span=15.0 / HBAR_MEV_PS, n=4001, sign=1):
        self.bath = bath
        self.span = span
        self.sign = sign
        grid = np.linspace(-span, span, n)
        vals = _sideband_transform(bath, grid, sign=sign)
        self._re = CubicSpline(grid, vals.real)
        self._im = CubicSpline(grid, vals.imag)

    def __call__(self, d):
        d = np.asarray(d, dtype=float)
        inside = np.abs(d) <= self.span
        dc = np.clip(d, -self.span, self.span)
        out = np.where(inside, self._re(dc) + 1j * self._im(dc), 0j)
        return complex(out) if out.ndim == 0 else out


_KERNELS: dict = {}


def shared_kernel(params: PhononBathParams, sign: int = 1) -> SidebandKernel:
    key = (params, sign)
    k = _KERNELS.get(key)
    if k is None:
        k = _KERNELS.setdefault(key, SidebandKernel(shared_bath(params), sign=sign))
    return k
