"""Units, half-line quadrature, one-sided Fourier transforms and a fixed-step RK4.

Internally every frequency and rate is an angular frequency in rad/ps and every
time is in ps.  Conversion to meV / ueV / K only happens at the I/O boundary.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import EmptyGrid, NonDecayingTrace, NonFiniteState, SlowDecay

HBAR_MEV_PS = 0.6582119569      # meV ps
KB_MEV_PER_K = 0.08617333262    # meV / K


def _scale(x, f):
    if np.ndim(x):
        return np.asarray(x, dtype=float) * f
    return float(x) * f


def mev_to_radps(e_mev):
    return _scale(e_mev, 1.0 / HBAR_MEV_PS)


def radps_to_mev(w):
    return _scale(w, HBAR_MEV_PS)


def uev_to_radps(e_uev):
    return _scale(e_uev, 1e-3 / HBAR_MEV_PS)


def radps_to_uev(w):
    return _scale(w, 1e3 * HBAR_MEV_PS)


def kelvin_to_mev(T):
    return _scale(T, KB_MEV_PER_K)


@dataclass(frozen=True)
class EnergyConvention:
    hbar: float = HBAR_MEV_PS
    kb: float = KB_MEV_PER_K

    def to_internal(self, e_mev):
        return np.asarray(e_mev) / self.hbar

    def to_mev(self, w):
        return np.asarray(w) * self.hbar


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform detuning grid in rad/ps (offsets from the rotating-frame origin)."""
    w_min: float
    w_max: float
    n_points: int

    def __post_init__(self):
        if self.n_points < 1:
            raise EmptyGrid("frequency grid has no points")
        if self.n_points > 1 and not self.w_max > self.w_min:
            raise ValueError("w_max must exceed w_min")

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.w_min, self.w_max, self.n_points)

    @classmethod
    def from_mev(cls, lo_mev, hi_mev, n):
        return cls(lo_mev / HBAR_MEV_PS, hi_mev / HBAR_MEV_PS, int(n))


@dataclass
class CorrelationTrace:
    tau: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.tau = np.asarray(self.tau, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.tau.ndim != 1 or self.tau.size < 2:
            raise EmptyGrid("correlation trace needs at least two samples")
        if self.tau[0] != 0.0:
            raise ValueError("tau grid must start at 0")
        steps = np.diff(self.tau)
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
            raise ValueError("tau grid must be uniform")
        if self.values.shape != self.tau.shape:
            raise ValueError("values and tau differ in length")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteState("correlation trace has non-finite samples")

    @property
    def dt(self) -> float:
        return float(self.tau[1] - self.tau[0])

    def scaled(self, factor) -> "CorrelationTrace":
        return CorrelationTrace(self.tau, self.values * factor)

    def conj(self) -> "CorrelationTrace":
        return CorrelationTrace(self.tau, np.conj(self.values))


@dataclass
class Spectrum:
    detuning: np.ndarray          # rad/ps offsets
    values: np.ndarray
    label: str = ""
    meta: dict = field(default_factory=dict)

    @property
    def detuning_mev(self):
        return self.detuning * HBAR_MEV_PS

    def normalized(self) -> "Spectrum":
        peak = np.max(np.abs(self.values))
        if peak == 0:
            return self
        return Spectrum(self.detuning, self.values / peak, self.label, dict(self.meta))


def endpoint_window(n, fraction=0.05):
    """Ones everywhere except a half-cosine roll-off to zero over the last `fraction` of samples."""
    w = np.ones(n)
    m = max(int(round(n * fraction)), 1)
    if m >= n:
        m = n - 1
    x = np.arange(1, m + 1) / m
    w[n - m:] = 0.5 * (1.0 + np.cos(np.pi * x))
    return w


def one_sided_transform(trace: CorrelationTrace, grid, floor: float = 1e-2,
                        window_fraction: float = 0.05, chunk: int = 256) -> np.ndarray:
    """Complex int_0^inf g(tau) exp(-i d tau) dtau on the grid (windowed trapezoid)."""
    det = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    if det.size == 0:
        raise EmptyGrid("empty detuning grid")
    g = trace.values
    peak = np.max(np.abs(g))
    if peak == 0:
        return np.zeros(det.size, dtype=complex)
    if abs(g[-1]) > floor * peak:
        raise NonDecayingTrace(
            f"|g(tau_end)|/max|g| = {abs(g[-1]) / peak:.3g} exceeds floor {floor:g}")
    gw = g * endpoint_window(g.size, window_fraction) * trapezoid_weights(g.size, trace.dt)
    out = np.empty(det.size, dtype=complex)
    for s in range(0, det.size, chunk):
        d = det[s:s + chunk]
        out[s:s + chunk] = np.exp(-1j * np.outer(d, trace.tau)) @ gw
    return out


def half_fourier(trace: CorrelationTrace, grid, floor: float = 1e-2,
                 window_fraction: float = 0.05, chunk: int = 256) -> Spectrum:
    """Re of int_0^inf g(tau) exp(-i d tau) dtau for each offset d on the grid.

    Offsets are lab frequency minus the rotating-frame origin, so a trace
    oscillating as exp(+i W tau) gives a peak at offset +W.
    """
    det = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    vals = one_sided_transform(trace, det, floor, window_fraction, chunk)
    return Spectrum(det, vals.real)


def _tail_cutoff(kernel, tail_tol, tau_max, start=2.0):
    probe = np.linspace(0.0, min(start, tau_max), 400)
    peak = np.max(np.abs([kernel(t) for t in probe]))
    if peak == 0:
        return 0.0, 0.0
    tc = start
    while True:
        # look at a short stretch after the candidate, not a single point
        tail = np.linspace(tc, 1.5 * tc, 64)
        if np.max(np.abs([kernel(t) for t in tail])) < tail_tol * peak:
            return tc, peak
        tc *= 1.5
        if tc > tau_max:
            raise SlowDecay(f"kernel tail above {tail_tol:g} of peak beyond {tau_max:g} ps")


def phonon_kernel_integral(kernel: Callable[[float], complex], delta: float,
                           rtol: float = 1e-8, tail_tol: float = 1e-10,
                           tau_max: float = 100.0) -> complex:
    """int_0^inf kernel(tau) exp(-i delta tau) dtau by adaptive quadrature on [0, cutoff]."""
    tc, peak = _tail_cutoff(kernel, tail_tol, tau_max)
    if tc == 0.0:
        return 0j
    kr = lambda t: complex(kernel(t)).real
    ki = lambda t: complex(kernel(t)).imag
    opts = dict(epsrel=rtol, epsabs=rtol * peak * 1e-3, limit=2000)
    if delta == 0.0:
        re = integrate.quad(kr, 0.0, tc, **opts)[0]
        im = integrate.quad(ki, 0.0, tc, **opts)[0]
        return complex(re, im)
    # QAWO handles the oscillatory weight; e^{-i d t} = cos - i sin
    c_r = integrate.quad(kr, 0.0, tc, weight="cos", wvar=delta, **opts)[0]
    s_r = integrate.quad(kr, 0.0, tc, weight="sin", wvar=delta, **opts)[0]
    c_i = integrate.quad(ki, 0.0, tc, weight="cos", wvar=delta, **opts)[0]
    s_i = integrate.quad(ki, 0.0, tc, weight="sin", wvar=delta, **opts)[0]
    return complex(c_r + s_i, c_i - s_r)


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray     # rows are stored samples (state or observation)


def integrate_ode(rhs, y0, t_end: float, dt: float, observe=None,
                  store_every: int = 1) -> Trajectory:
    """Classic RK4 with a fixed step.

    `observe(y)` maps the full state to whatever should be recorded; handy when
    the state is a large hierarchy and only a couple of moments matter.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_end < dt:
        raise ValueError("t_end must be at least dt")
    n_steps = int(round(t_end / dt))
    y = np.array(y0, dtype=complex if np.iscomplexobj(y0) else float, copy=True)
    obs = observe if observe is not None else (lambda s: s.copy())
    ts = [0.0]
    rec = [np.asarray(obs(y))]
    h = dt
    t = 0.0
    for k in range(1, n_steps + 1):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = k * h
        if k % store_every == 0 or k == n_steps:
            if not np.all(np.isfinite(y)):
                raise NonFiniteState(f"state blew up at t = {t:.4g} ps")
            ts.append(t)
            rec.append(np.asarray(obs(y)))
    if not np.all(np.isfinite(y)):
        raise NonFiniteState("non-finite final state")
    return Trajectory(np.asarray(ts), np.asarray(rec))


def trapezoid_weights(n, dx):
    w = np.full(n, dx)
    w[0] = w[-1] = 0.5 * dx
    return w
