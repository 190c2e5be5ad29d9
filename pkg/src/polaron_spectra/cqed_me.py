"""Cavity-QED polaron master equation.

Two levels of description live here:

* closed-form phonon scattering rates, Lamb shifts, cross dephasing and the
  M couplings, plus the analytic weak-excitation cavity spectrum built on them;
* the full time-local generator on a six-state space (two-level dot times a
  cavity truncated at two photons), steady states, regression-theorem
  correlations and the spectra derived from them.

The rotating frame sits at the polaron-shifted exciton; the cavity offset is
`cav.center` (so the QD-cavity detuning is cav.center).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import NoSteadyState, SingularDenominator
from .phonon_bath import PhononBathParams, shared_bath, shared_kernel
from .photonic_reservoir import LorentzianCavity, propagator
from .reservoir_me import ZplRates
from .units_numerics import (CorrelationTrace, FrequencyGrid, Spectrum, half_fourier,
                             phonon_kernel_integral)


@dataclass(frozen=True)
class RateSet:
    exciton_to_cavity: float      # Gamma^{a+ s-}
    cavity_to_exciton: float      # Gamma^{s+ a}
    lamb_exciton: float           # Delta^{a+ s-}
    lamb_cavity: float            # Delta^{s+ a}
    cross_dephasing: complex
    m1: complex
    m2: complex
    g_eff: float                  # <B> g
    rabi: float                   # sqrt(Delta^2 + 4 g'^2)

    @classmethod
    def zero(cls, g_eff, rabi):
        return cls(0.0, 0.0, 0.0, 0.0, 0j, 0j, 0j, g_eff, rabi)


def _transforms(params, deltas, route):
    """Half-line transforms of e^{phi}-1, e^{-phi}-1 at the requested offsets."""
    if route == "table":
        kp, km = shared_kernel(params, 1), shared_kernel(params, -1)
        return {d: (kp(d), km(d)) for d in deltas}
    bath = shared_bath(params)
    fp = lambda t: np.expm1(bath.phi(t))
    fm = lambda t: np.expm1(-bath.phi(t))
    return {d: (phonon_kernel_integral(fp, d), phonon_kernel_integral(fm, d)) for d in deltas}


def scattering_rates(cav: LorentzianCavity, params: PhononBathParams,
                     route: str = "adaptive") -> RateSet:
    bath = shared_bath(params)
    gp = bath.mean_displacement * cav.g
    det = cav.center
    rabi = np.sqrt(det * det + 4 * gp * gp)
    if gp == 0 or params.alpha == 0:
        return RateSet.zero(gp, rabi)
    if rabi == 0:
        raise ValueError("Rabi frequency must be positive")
    K = _transforms(params, (0.0, rabi, -rabi), route)

    def pieces(idx):
        one = K[0.0][idx]
        cos = 0.5 * (K[rabi][idx] + K[-rabi][idx])
        sin = (K[-rabi][idx] - K[rabi][idx]) / 2j
        return one, cos, sin

    p_one, p_cos, p_sin = pieces(0)      # e^{phi} - 1
    m_one, m_cos, m_sin = pieces(1)      # e^{-phi} - 1
    A = 2 * gp * gp / rabi ** 2
    g2 = gp * gp
    bracket = A * (m_one - m_cos) + A * (p_one - p_cos) + p_cos
    s_term = det / rabi * p_sin
    feed_xc = 2 * g2 * bracket.real + 2 * g2 * s_term.imag
    feed_cx = 2 * g2 * bracket.real - 2 * g2 * s_term.imag
    lamb_x = g2 * bracket.imag - g2 * s_term.real
    lamb_c = g2 * bracket.imag + g2 * s_term.real
    cd_inner = (A * (m_one - m_cos) + m_cos) + A * (p_one - p_cos)
    gamma_cd = 2 * g2 * cd_inner.real - 2j * g2 * (det / rabi * m_sin).real
    # cosh(phi)-1 and sinh(phi) from the two exponentials
    c_one, c_cos = 0.5 * (p_one + m_one), 0.5 * (p_cos + m_cos)
    s_sin = 0.5 * (p_sin - m_sin)
    m1 = -2 * g2 * (gp * det / rabi ** 2) * (c_cos - c_one)
    m2 = -2j * g2 * (gp / rabi) * s_sin
    return RateSet(float(feed_xc), float(feed_cx), float(lamb_x), float(lamb_c),
                   complex(gamma_cd), complex(m1), complex(m2), gp, rabi)


def weak_coupling_rates(cav: LorentzianCavity, params: PhononBathParams, route: str = "adaptive"):
    """(Gamma0^{a+s-}, Gamma0^{s+a}, Delta0^{a+s-}, Delta0^{s+a})."""
    if params.alpha == 0 or cav.g == 0:
        return 0.0, 0.0, 0.0, 0.0
    bath = shared_bath(params)
    g2 = (bath.mean_displacement * cav.g) ** 2
    det = cav.center
    if route == "table":
        k = shared_kernel(params, 1)
        kx, kc = k(det), k(-det)
    else:
        f = lambda t: np.expm1(bath.phi(t))
        kx, kc = phonon_kernel_integral(f, det), phonon_kernel_integral(f, -det)
    return 2 * g2 * kx.real, 2 * g2 * kc.real, g2 * kx.imag, g2 * kc.imag


def gamma_tilde_P(cav: LorentzianCavity, params: PhononBathParams, width_correction: bool = False,
                  route: str = "adaptive"):
    g_xc, g_cx, _, _ = weak_coupling_rates(cav, params, route)
    gp = shared_bath(params).mean_displacement * cav.g
    k = cav.kappa + (g_cx - g_xc if width_correction else 0.0)
    return g_xc + 2 * gp * gp * (0.5 * k) / (cav.center ** 2 + (0.5 * k) ** 2)


# ---------------------------------------------------------------- analytic WEA

@dataclass(frozen=True)
class EffectiveBlochCoefficients:
    cavity_width: float     # kappa + Gamma^{s+a}
    exciton_width: float    # gamma0 + gamma_d + P + Gamma^{a+s-}
    g_cavity: complex       # i g' - M1 - M2
    g_exciton: complex      # i g' + M1 - M2

    @classmethod
    def build(cls, rates: RateSet, cav: LorentzianCavity, z: ZplRates):
        return cls(cav.kappa + rates.cavity_to_exciton,
                   z.gamma0 + z.gamma_d + z.pump + rates.exciton_to_cavity,
                   1j * rates.g_eff - rates.m1 - rates.m2,
                   1j * rates.g_eff + rates.m1 - rates.m2)


def wea_steady_state(rates: RateSet, cav: LorentzianCavity, z: ZplRates):
    """(<a+a>, <a+ s->) in steady state, weak excitation."""
    eff = EffectiveBlochCoefficients.build(rates, cav, z)
    P, g0, kap = z.pump, z.gamma0, cav.kappa
    gp = rates.g_eff
    total = eff.exciton_width + eff.cavity_width
    dprime = cav.center + rates.lamb_cavity - rates.lamb_exciton
    m1r, m1i = rates.m1.real, rates.m1.imag
    m2r, m2i = rates.m2.real, rates.m2.imag
    g1 = 2 * m1r - 1j * (gp - 2 * m2i)
    g3 = 2 * m2r - 1j * (gp + 2 * m1i)
    g4 = 2 * m2r + 1j * (gp - 2 * m1i)
    gcd = rates.cross_dephasing
    n1 = np.conj(gcd) * np.conj(g3) + g3 * (0.5 * total + 1j * dprime)
    n2 = np.conj(gcd) * np.conj(g4) + g4 * (0.5 * total + 1j * dprime)
    common = dprime ** 2 - abs(gcd) ** 2 + 0.25 * total ** 2
    big_d = common * (eff.cavity_width * (P + g0) + kap * rates.exciton_to_cavity) \
        - 2 * (g1 * (n1 * (P + g0) - kap * n2)).real
    scale = max(abs(common * eff.cavity_width * (P + g0)), 1e-300)
    if abs(big_d) < 1e-13 * scale or big_d == 0:
        raise SingularDenominator("steady-state denominator vanishes")
    n = P * (common * rates.exciton_to_cavity + 2 * (g1 * n2).real) / big_d
    m = ((n1 * (P + g0) - kap * n2) * n + P * n2) / ((P + g0) * common)
    return float(np.real(n)), complex(m)


def wea_spectrum(rates: RateSet, cav: LorentzianCavity, z: ZplRates, grid,
                 steady=None) -> Spectrum:
    """Cavity-emitted spectrum from the weak-excitation Bloch equations (real part)."""
    det = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    eff = EffectiveBlochCoefficients.build(rates, cav, z)
    n, m = wea_steady_state(rates, cav, z) if steady is None else steady
    D = (det - rates.lamb_exciton) + 0.5j * eff.exciton_width
    C = (det - cav.center - rates.lamb_cavity) + 0.5j * eff.cavity_width
    den = D * C + eff.g_cavity * eff.g_exciton
    if np.any(np.abs(den) == 0):
        raise SingularDenominator("spectrum denominator vanishes on the grid")
    vals = ((1j * n * D + eff.g_cavity * m) / den).real
    return Spectrum(det, vals, "CM-cQED-WEA", {"n_ss": n}).normalized()


def polariton_poles(rates: RateSet, cav: LorentzianCavity, z: ZplRates) -> np.ndarray:
    """Complex zeros of the WEA spectrum denominator, sorted by real part.

    Real parts are the dressed-state frequencies (offsets), imaginary parts
    minus their half widths.  Overlapping broad peaks pull the visible maxima
    together, so the pole separation is the cleaner measure of the splitting.
    """
    eff = EffectiveBlochCoefficients.build(rates, cav, z)
    a = rates.lamb_exciton - 0.5j * eff.exciton_width
    b = cav.center + rates.lamb_cavity - 0.5j * eff.cavity_width
    # (x - a)(x - b) + g_c g_x = 0
    roots = np.roots([1.0, -(a + b), a * b + eff.g_cavity * eff.g_exciton])
    return roots[np.argsort(roots.real)]


# ---------------------------------------------------------------- full generator

N_PHOTON = 3      # cavity Fock states 0, 1, 2
DIM = 2 * N_PHOTON


def _ops():
    sm2 = np.array([[0, 1], [0, 0]], dtype=complex)     # |g><e| with |0>=g, |1>=e
    a3 = np.diag(np.sqrt(np.arange(1, N_PHOTON)), 1).astype(complex)
    sm = np.kron(sm2, np.eye(N_PHOTON))
    a = np.kron(np.eye(2), a3)
    return sm, a


SIGMA_MINUS, A_OP = _ops()


def basis_index(exciton: int, photons: int) -> int:
    return exciton * N_PHOTON + photons


def _spre(A):
    return np.kron(A, np.eye(A.shape[0]))


def _spost(B):
    return np.kron(np.eye(B.shape[0]), B.T)


def _dissipator(c, rate):
    cd = c.conj().T
    cdc = cd @ c
    return rate * (np.kron(c, c.conj()) - 0.5 * _spre(cdc) - 0.5 * _spost(cdc))


@dataclass
class Generator:
    matrix: np.ndarray
    hamiltonian: np.ndarray
    cavity: LorentzianCavity
    params: PhononBathParams
    zpl: ZplRates

    def apply(self, rho):
        return (self.matrix @ rho.reshape(-1)).reshape(rho.shape)


def build_liouvillian(cav: LorentzianCavity, params: PhononBathParams, z: ZplRates,
                      phonons: bool = True, route: str = "table") -> Generator:
    sm, a = SIGMA_MINUS, A_OP
    sp, ad = sm.conj().T, a.conj().T
    bath = shared_bath(params)
    B = bath.mean_displacement if phonons else 1.0
    gp = B * cav.g
    H = cav.center * (ad @ a) + gp * (sp @ a + ad @ sm)
    L = -1j * (_spre(H) - _spost(H))
    L += _dissipator(a, cav.kappa)
    L += _dissipator(sm, z.gamma0)
    L += _dissipator(sp @ sm, z.gamma_d)
    L += _dissipator(sp, z.pump)
    if phonons and params.alpha > 0 and cav.g > 0:
        L += _phonon_superoperator(H, cav.g, params, route)
    return Generator(L, H, cav, params, z)


def _phonon_superoperator(H, g, params, route):
    sm, a = SIGMA_MINUS, A_OP
    sp, ad = sm.conj().T, a.conj().T
    X = {"g": g * (sp @ a + ad @ sm), "u": 1j * g * (sp @ a - ad @ sm)}
    E, V = np.linalg.eigh(H)
    bohr = E[:, None] - E[None, :]
    keys = np.unique(np.round(bohr.ravel(), 12))
    tr = _transforms(params, [float(k) for k in keys], route)
    kp = np.vectorize(lambda d: tr[float(np.round(d, 12))][0])(bohr)
    km = np.vectorize(lambda d: tr[float(np.round(d, 12))][1])(bohr)
    b2 = np.exp(-shared_bath(params).phi0)
    hat = {"g": 0.5 * b2 * (kp + km), "u": 0.5 * b2 * (kp - km)}
    S = np.zeros((DIM * DIM, DIM * DIM), dtype=complex)
    for m, Xm in X.items():
        Xe = V.conj().T @ Xm @ V
        Y = V @ (Xe * hat[m]) @ V.conj().T        # int G_m(t) X_m(-t) dt
        Yd = Y.conj().T
        # -( [X, Y rho] + h.c. )
        S -= _spre(Xm @ Y) - np.kron(Y, Xm.T) + _spost(Yd @ Xm) - np.kron(Xm, Yd.T)
    return S


def steady_state(gen: Generator, tol: float = 1e-10, h0: float = 1.0, max_doublings: int = 60):
    """Propagate from the ground state with repeated squaring of exp(L h)."""
    rho = np.zeros((DIM, DIM), dtype=complex)
    rho[0, 0] = 1.0
    x = rho.reshape(-1)
    step = expm(gen.matrix * h0)
    scale = max(np.abs(gen.matrix).max(), 1e-30)
    for _ in range(max_doublings):
        x = step @ x
        x = x / np.trace(x.reshape(DIM, DIM))
        if np.abs(gen.matrix @ x).max() < tol * scale:
            r = x.reshape(DIM, DIM)
            return 0.5 * (r + r.conj().T)
        step = step @ step
    raise NoSteadyState("propagation did not settle")


def expectation(op, rho):
    return complex(np.trace(op @ rho))


def two_time_correlation(gen: Generator, A, B, rho_ss, dt: float = 0.02, tau_max: float = 20000.0,
                         decay_floor: float = 1e-4, chunk: float = 200.0) -> CorrelationTrace:
    """<A(t+tau) B(t)> in steady state via the regression theorem.

    Propagates B rho with exp(L dt) until |C| stays below decay_floor * max|C|
    over a whole chunk, or tau_max is hit.
    """
    step = expm(gen.matrix * dt)
    x = (B @ rho_ss).reshape(-1)
    aT = A.T.reshape(-1)                  # Tr(A X) = sum A_ij X_ji
    n_chunk = int(round(chunk / dt))
    vals = [aT @ x]
    peak = abs(vals[0])
    while True:
        block = np.empty(n_chunk, dtype=complex)
        for k in range(n_chunk):
            x = step @ x
            block[k] = aT @ x
        vals.extend(block)
        peak = max(peak, np.abs(block).max())
        if peak == 0 or np.abs(block).max() < decay_floor * peak:
            break
        if len(vals) * dt > tau_max:
            break
    v = np.asarray(vals)
    return CorrelationTrace(np.arange(v.size) * dt, v)


def _split_transform(trace: CorrelationTrace, det, params, with_phonon_factor, window=40.0):
    base = half_fourier(trace, det, floor=1e-2).values
    if not with_phonon_factor or params.alpha == 0:
        return base
    n = min(trace.tau.size, int(round(window / trace.dt)) + 1)
    t = trace.tau[:n]
    side = trace.values[:n] * np.expm1(shared_bath(params).phi(t))
    return base + half_fourier(CorrelationTrace(t, side), det, floor=1e-2).values


def coupled_mode_spectrum(gen: Generator, grid, rho_ss=None, dt: float = 0.02) -> Spectrum:
    """Transform of <a+(t+tau) a(t)>; the cavity operator needs no polaron factor."""
    det = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    rho = steady_state(gen) if rho_ss is None else rho_ss
    tr = two_time_correlation(gen, A_OP.conj().T, A_OP, rho, dt=dt)
    vals = half_fourier(tr, det, floor=1e-2).values
    return Spectrum(det, vals, "CM-cQED", {"n_ss": expectation(A_OP.conj().T @ A_OP, rho).real}).normalized()


def polarization_spectrum_cqed(gen: Generator, grid, rho_ss=None, dt: float = 0.02,
                               phonon_factor: bool = True) -> Spectrum:
    det = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    rho = steady_state(gen) if rho_ss is None else rho_ss
    tr = two_time_correlation(gen, SIGMA_MINUS.conj().T, SIGMA_MINUS, rho, dt=dt)
    vals = _split_transform(tr, det, gen.params, phonon_factor)
    return Spectrum(det, vals, "S0-cQED")


def green_function_spectrum(gen: Generator, grid, rho_ss=None, dt: float = 0.02) -> Spectrum:
    """Polarization spectrum (with the e^{phi} factor) seen through the cavity filter."""
    s0 = polarization_spectrum_cqed(gen, grid, rho_ss, dt)
    vals = propagator(s0.detuning, gen.cavity) * s0.values
    return Spectrum(s0.detuning, vals, "G-cQED").normalized()


def _integrated_step(L, h):
    """exp(L h) and int_0^h exp(L s) ds from one block exponential."""
    n = L.shape[0]
    big = np.zeros((2 * n, 2 * n), dtype=complex)
    big[:n, :n] = L * h
    big[:n, n:] = np.eye(n) * h
    e = expm(big)
    return e[:n, :n], e[:n, n:]


def inverted_atom_spectrum(gen: Generator, grid, dt: float = 0.02, t_step: float = 5.0,
                           tol: float = 1e-12, t_max: float = 50000.0) -> Spectrum:
    """Emission of an initially inverted dot into the empty cavity, no pump.

    By linearity the t integral can be taken first: rho_int = int_0^inf rho(t) dt,
    after which a single regression run from a rho_int gives the tau dependence.
    """
    det = grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float)
    if gen.zpl.pump != 0:
        gen = build_liouvillian(gen.cavity, gen.params, ZplRates(gen.zpl.gamma0, gen.zpl.gamma_d, 0.0))
    rho = np.zeros((DIM, DIM), dtype=complex)
    rho[basis_index(1, 0), basis_index(1, 0)] = 1.0
    x = rho.reshape(-1)
    prop, integ = _integrated_step(gen.matrix, t_step)
    acc = np.zeros_like(x)
    ground = basis_index(0, 0) * DIM + basis_index(0, 0)
    t = 0.0
    while True:
        acc += integ @ x
        x = prop @ x
        t += t_step
        if 1.0 - x[ground].real < tol or t > t_max:
            break
    rho_int = acc.reshape(DIM, DIM)
    tr = two_time_correlation(gen, A_OP.conj().T, A_OP, rho_int, dt=dt)
    vals = half_fourier(tr, det, floor=1e-2).values
    return Spectrum(det, vals, "inverted").normalized()
