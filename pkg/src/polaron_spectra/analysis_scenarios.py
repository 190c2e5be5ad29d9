"""Peak bookkeeping, engine comparisons, waveguide feeding ratios and figure runners.

Each figure runner is a plain function of a parameter table (FIGURE_PRESETS)
returning a FigureBundle of named spectra/tables.  Writing to disk is a
separate step so tests can inspect results without touching the filesystem.
"""
from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import cqed_me
from .correlation_expansion import ExpansionConfig, two_time_spectrum
from .linear_susceptibility import (SusceptibilityParams, bare_susceptibility,
                                    cavity_spectrum)
from .phonon_bath import ALPHA_INAS_PS2, OMEGA_P_INAS, PhononBathParams
from .photonic_reservoir import (CrowBand, LorentzianCavity, purcell_factor,
                                 propagator)
from .reservoir_me import (ZplRates, absorption_spectrum, emission_spectrum_projected,
                           polarization_spectrum, se_rate)
from .units_numerics import (HBAR_MEV_PS, FrequencyGrid, Spectrum, mev_to_radps,
                             uev_to_radps)


# ---------------------------------------------------------------- peaks

@dataclass
class PeakReport:
    positions_meV: np.ndarray
    heights: np.ndarray
    named: dict = field(default_factory=dict)     # e.g. I0, U0, L0

    @property
    def count(self):
        return int(self.positions_meV.size)


def _refine(x, y, k):
    """Vertex of the parabola through samples k-1, k, k+1 (non-uniform spacing allowed)."""
    x0, x1, x2 = x[k - 1:k + 2]
    y0, y1, y2 = y[k - 1:k + 2]
    den = (x0 - x1) * (x0 - x2) * (x1 - x2)
    a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / den
    b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / den
    if a >= 0:
        return x1, y1
    xv = -b / (2 * a)
    if not x0 <= xv <= x2:
        return x1, y1
    c = y1 - a * x1 * x1 - b * x1
    return xv, a * xv * xv + b * xv + c


def find_peaks_refined(spec: Spectrum, rel_threshold: float = 0.01) -> PeakReport:
    """Local maxima above rel_threshold of the global max, with parabolic refinement."""
    x = np.asarray(spec.detuning_mev, dtype=float)
    y = np.asarray(spec.values, dtype=float)
    top = np.max(y)
    if not top > 0:
        return PeakReport(np.empty(0), np.empty(0))
    y = y / top
    inner = np.arange(1, y.size - 1)
    is_max = (y[inner] > y[inner - 1]) & (y[inner] >= y[inner + 1]) & (y[inner] > rel_threshold)
    pos, hts = [], []
    for k in inner[is_max]:
        xv, yv = _refine(x, y, k)
        pos.append(xv)
        hts.append(min(yv, 1.0))
    return PeakReport(np.asarray(pos), np.asarray(hts))


def local_maxima_count(spec: Spectrum, rel_threshold: float = 0.01) -> int:
    return find_peaks_refined(spec, rel_threshold).count


def value_at(spec: Spectrum, offset, window=None):
    """Spectrum value at an offset (rad/ps); with `window`, the local maximum near it."""
    x, y = spec.detuning, np.asarray(spec.values, dtype=float)
    if window is not None:
        sel = np.abs(x - offset) <= window
        if np.count_nonzero(sel) >= 3:
            idx = np.flatnonzero(sel)
            k = idx[np.argmax(y[idx])]
            if 0 < k < y.size - 1 and k not in (idx[0], idx[-1]):
                return _refine(x, y, k)[1]
    return float(np.interp(offset, x, y))


# ---------------------------------------------------------------- comparison

@dataclass(frozen=True)
class ComparisonMetric:
    max_abs: float
    l2: float
    maxima_a: int
    maxima_b: int


def compare_spectra(a: Spectrum, b: Spectrum, rel_threshold: float = 0.01) -> ComparisonMetric:
    if a.detuning.shape != b.detuning.shape or not np.allclose(a.detuning, b.detuning):
        raise ValueError("spectra must share one detuning grid")
    na, nb = a.normalized(), b.normalized()
    d = np.asarray(na.values, dtype=float) - np.asarray(nb.values, dtype=float)
    return ComparisonMetric(float(np.max(np.abs(d))), float(np.sqrt(np.mean(d * d))),
                            local_maxima_count(na, rel_threshold),
                            local_maxima_count(nb, rel_threshold))


# ---------------------------------------------------------------- waveguide feeding

def linear_dephasing_ueV(T):
    """Pure dephasing growing linearly with temperature, 1 ueV at 1 K."""
    return 1.0 + 0.95 * (np.asarray(T, dtype=float) - 1.0)


def crow_grid(crow: CrowBand, qd: float, half_span_meV: float = 6.0, n: int = 2401,
              edge_points: int = 201, edge_halfwidth: float | None = None):
    """Offsets from the emitter: a uniform grid plus dense patches at both band edges and the ZPL."""
    base = np.linspace(-mev_to_radps(half_span_meV), mev_to_radps(half_span_meV), n)
    hw = edge_halfwidth if edge_halfwidth is not None else 12.0 * max(crow.kappa_lower,
                                                                       crow.kappa_upper)
    patches = [np.linspace(c - hw, c + hw, edge_points)
               for c in (crow.lower - qd, crow.upper - qd, 0.0)]
    return np.unique(np.concatenate([base] + patches))


def crow_spectrum(crow: CrowBand, params: PhononBathParams, z: ZplRates, qd: float,
                  grid=None, use_phonon_rate: bool = True) -> Spectrum:
    det = crow_grid(crow, qd) if grid is None else (
        grid.values if isinstance(grid, FrequencyGrid) else np.asarray(grid, dtype=float))
    return emission_spectrum_projected(crow, z, params, det, qd=qd, use_phonon_rate=use_phonon_rate)


def feeding_ratios(spec: Spectrum, crow: CrowBand, qd: float):
    """(R_U, R_L): upper/lower edge intensity over the ZPL intensity.

    Intensities are local maxima within a few edge widths of the nominal
    positions, or the interpolated value there when no peak is resolved.
    """
    k = max(crow.kappa_lower, crow.kappa_upper)
    zpl = value_at(spec, 0.0, window=4 * k)
    up = value_at(spec, crow.upper - qd, window=4 * k)
    lo = value_at(spec, crow.lower - qd, window=4 * k)
    return up / zpl, lo / zpl


def _feeding_cell(args):
    crow, T, qd, gamma_d_ueV, gamma0_ueV, alpha, omega_p = args
    params = PhononBathParams(alpha, omega_p, T)
    z = ZplRates.from_uev(gamma0_ueV, gamma_d_ueV)
    spec = crow_spectrum(crow, params, z, qd)
    ru, rl = feeding_ratios(spec, crow, qd)
    return ru + rl


@dataclass
class FeedingMap:
    temperatures: np.ndarray
    detunings_meV: np.ndarray
    ratio: np.ndarray             # [T, detuning]
    dephasing: str

    def rows(self):
        for i, T in enumerate(self.temperatures):
            for j, d in enumerate(self.detunings_meV):
                yield float(T), float(d), float(self.ratio[i, j])


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("POLARON_SPECTRA_THREADS")
    n = requested if requested is not None else (int(cap) if cap else 1)
    if cap:
        n = min(n, int(cap))
    return max(int(n), 1)


def sweep_feeding_map(crow: CrowBand, temperatures, detunings_meV, dephasing: str = "constant",
                      gamma0_ueV: float = 1.0, gamma_d_ueV: float = 1.0,
                      params: PhononBathParams | None = None, workers: int | None = 1) -> FeedingMap:
    """R_U + R_L over (T, emitter offset from band centre).

    dephasing="constant" keeps gamma_d fixed; "linear" uses linear_dephasing_ueV(T).
    Cells are independent; results are assembled in grid order either way.
    """
    if dephasing not in ("constant", "linear"):
        raise ValueError(f"unknown dephasing model {dephasing!r}")
    base = params or PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, 4.0)
    Ts = np.asarray(temperatures, dtype=float)
    ds = np.asarray(detunings_meV, dtype=float)
    cells = []
    for T in Ts:
        gd = float(linear_dephasing_ueV(T)) if dephasing == "linear" else gamma_d_ueV
        for d in ds:
            cells.append((crow, float(T), crow.center + mev_to_radps(d), gd, gamma0_ueV,
                          base.alpha, base.omega_p))
    n = worker_count(workers)
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as pool:
            vals = list(pool.map(_feeding_cell, cells))
    else:
        vals = [_feeding_cell(c) for c in cells]
    return FeedingMap(Ts, ds, np.asarray(vals).reshape(Ts.size, ds.size), dephasing)


def se_enhancement_scan(crow: CrowBand, params: PhononBathParams, offsets_meV):
    """chi = phonon-dressed / bare SE rate across emitter positions (offsets from band centre)."""
    out = []
    for d in offsets_meV:
        r = se_rate(crow, params, crow.center + mev_to_radps(d))
        out.append(r.modification)
    return np.asarray(out)


# ---------------------------------------------------------------- figure presets

# Off-resonant cavities (fig6, fig7) sit on the red side of the dot: that is
# where phonon emission feeds them at 4 K.

FIGURE_PRESETS = {
    "fig3": dict(T_K=4.0, gamma0_ueV=5.0, gamma_d_ueV=5.0, span_meV=3.0, n=1201),
    "fig4": dict(T_K=4.0, g_ueV=100.0, kappa_ueV=65.0, gamma0_ueV=5.0, gamma_d_ueV=55.0,
                 detuning_meV=0.0, span_meV=0.4, n=321, n_modes=150),
    "fig5": dict(T_K=4.0, g_ueV=(50.0, 100.0), kappa_ueV=65.0, gamma0_ueV=5.0, gamma_d_ueV=55.0,
                 detuning_meV=0.0, span_meV=0.4, n=321, n_modes=150),
    "fig6": dict(T_K=4.0, g_ueV=100.0, kappa_ueV=180.0, gamma0_ueV=5.0, gamma_d_ueV=55.0,
                 detuning_meV=-2.0, lo_meV=-3.0, hi_meV=1.0, n=801, n_modes=150),
    "fig7": dict(T_K=4.0, g_ueV=100.0, kappa_ueV=2400.0, gamma0_ueV=5.0, gamma_d_ueV=55.0,
                 detuning_meV=-2.0, lo_meV=-5.0, hi_meV=3.0, n=801, n_modes=150),
    "fig8": dict(T_K=4.0, g_ueV=100.0, kappa_ueV=65.0, gamma0_ueV=5.0, gamma_d_ueV=55.0,
                 detunings_meV=(1.0, 2.0, 3.0, 4.0, -1.0, -2.0, -3.0, -4.0), n=2001),
    "fig9": dict(g_ueV=85.0, width_meV=8.0, edge_width_ueV=14.0, span_meV=5.0, n=4001),
    "fig10": dict(g_ueV=85.0, gamma0_ueV=1.0, gamma_d_ueV=1.0,
                  cases=((4.0, 0.0), (40.0, 0.0), (40.0, 1.0))),
    "fig11": dict(g_ueV=85.0, gamma0_ueV=1.0, gamma_d_ueV=1.0, T_K=40.0,
                  upper_edge_offsets_meV=(1.0, -0.3)),
    "fig12": dict(g_ueV=85.0, gamma0_ueV=1.0, gamma_d_ueV=1.0, T_K=40.0,
                  offsets_meV=tuple(np.round(np.linspace(-5.0, 5.0, 81), 6))),
    "fig13": dict(g_ueV=85.0, gamma0_ueV=1.0, gamma_d_ueV=1.0,
                  temperatures_K=(4.0, 10.0, 20.0, 30.0, 40.0),
                  detunings_meV=tuple(np.round(np.linspace(-3.5, 3.5, 15), 6))),
    "fig15": dict(T_K=4.0, g_ueV=100.0, kappa_ueV=65.0, gamma0_ueV=5.0, gamma_d_ueV=55.0,
                  detuning_meV=1.0, lo_meV=-0.6, hi_meV=1.6, n=881,
                  pumps_ueV=(0.05, 1.0)),
}


@dataclass
class FigureBundle:
    name: str
    spectra: dict = field(default_factory=dict)         # label -> Spectrum
    tables: dict = field(default_factory=dict)          # label -> (header, rows)
    scalars: dict = field(default_factory=dict)


def _bath(pr):
    return PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, pr.get("T_K", 4.0))


def _cavity(pr, g=None):
    return LorentzianCavity.from_uev(pr.get("detuning_meV", 0.0), pr["kappa_ueV"],
                                     pr["g_ueV"] if g is None else g)


def _grid(pr):
    if "span_meV" in pr:
        return FrequencyGrid.from_mev(-pr["span_meV"], pr["span_meV"], pr["n"])
    return FrequencyGrid.from_mev(pr["lo_meV"], pr["hi_meV"], pr["n"])


def _fig3(pr, **kw):
    p = _bath(pr)
    grid = _grid(pr)
    z = ZplRates.from_uev(pr["gamma0_ueV"], pr["gamma_d_ueV"])
    b = FigureBundle("fig3")
    b.spectra["emission"] = polarization_spectrum(z, None, p, grid).normalized()
    b.spectra["absorption"] = absorption_spectrum(z, None, p, grid).normalized()
    no_ph = PhononBathParams(0.0, p.omega_p, p.temperature)
    b.spectra["polaron_zpl"] = polarization_spectrum(z, None, no_ph, grid).normalized()
    return b


def _cqed_pair(cav, p, z, grid, pump_ueV=0.05):
    zp = ZplRates(z.gamma0, z.gamma_d, uev_to_radps(pump_ueV))
    gen = cqed_me.build_liouvillian(cav, p, zp)
    rho = cqed_me.steady_state(gen)
    return (cqed_me.coupled_mode_spectrum(gen, grid, rho),
            cqed_me.green_function_spectrum(gen, grid, rho))


def _fig4(pr, include_ce=True, n_modes=None, **kw):
    p = _bath(pr)
    p0 = PhononBathParams(0.0, p.omega_p, p.temperature)
    cav = _cavity(pr)
    grid = _grid(pr)
    z = ZplRates.from_uev(pr["gamma0_ueV"], pr["gamma_d_ueV"])
    zp = ZplRates.from_uev(pr["gamma0_ueV"], pr["gamma_d_ueV"], 0.05)
    b = FigureBundle("fig4")
    b.spectra["cqed_wea_nophonon"] = cqed_me.wea_spectrum(
        cqed_me.scattering_rates(cav, p0), cav, zp, grid).normalized()
    b.spectra["cqed_wea"] = cqed_me.wea_spectrum(
        cqed_me.scattering_rates(cav, p), cav, zp, grid).normalized()
    b.spectra["cqed_full"] = cqed_me.coupled_mode_spectrum(cqed_me.build_liouvillian(cav, p, zp), grid)
    b.spectra["susceptibility"] = cavity_spectrum(
        grid, p, SusceptibilityParams(z.gamma0 + z.gamma_d, cav))
    if include_ce:
        cfg = ExpansionConfig(n_modes=n_modes or pr["n_modes"], route="resolvent")
        b.spectra["corr_exp"] = two_time_spectrum(p, cav, z, grid, config=cfg).cavity
    return b


def _fig5(pr, include_ce=False, n_modes=None, **kw):
    p = _bath(pr)
    grid = _grid(pr)
    z = ZplRates.from_uev(pr["gamma0_ueV"], pr["gamma_d_ueV"])
    b = FigureBundle("fig5")
    for g in pr["g_ueV"]:
        cav = _cavity(pr, g)
        cm, gf = _cqed_pair(cav, p, z, grid)
        b.spectra[f"CM_cqed_g{g:g}"] = cm
        b.spectra[f"G_cqed_g{g:g}"] = gf
        if include_ce:
            cfg = ExpansionConfig(n_modes=n_modes or pr["n_modes"], route="resolvent")
            res = two_time_spectrum(p, cav, z, grid, config=cfg)
            b.spectra[f"CM_ce_g{g:g}"] = res.cavity
            b.spectra[f"G_ce_g{g:g}"] = res.green
    return b


def _off_resonant(name, pr, include_ce=True, n_modes=None):
    p = _bath(pr)
    p0 = PhononBathParams(0.0, p.omega_p, p.temperature)
    cav = _cavity(pr)
    grid = _grid(pr)
    z = ZplRates.from_uev(pr["gamma0_ueV"], pr["gamma_d_ueV"])
    b = FigureBundle(name)
    b.spectra["CM_cqed"] = _cqed_pair(cav, p, z, grid)[0]
    b.spectra["CM_cqed_nophonon"] = _cqed_pair(cav, p0, z, grid)[0]
    # a far-detuned cavity pulls the line by a few ueV, visible next to the CE result
    b.spectra["G_res"] = emission_spectrum_projected(cav, z, p, grid, shift_lamb=True)
    b.spectra["S0_res"] = polarization_spectrum(z, se_rate(cav, p), p, grid).normalized()
    b.spectra["G_sus"] = cavity_spectrum(grid, p, SusceptibilityParams(z.gamma0 + z.gamma_d, cav))
    if include_ce:
        cfg = ExpansionConfig(n_modes=n_modes or pr["n_modes"], route="resolvent")
        b.spectra["CM_ce"] = two_time_spectrum(p, cav, z, grid, config=cfg).cavity
    return b


def cavity_to_zpl_ratio(spec: Spectrum, cav_offset: float, kappa: float) -> float:
    """Cavity-peak over ZPL-peak intensity for an off-resonant cavity."""
    return value_at(spec, cav_offset, window=kappa) / value_at(spec, 0.0, window=0.3 * kappa)


def _fig8(pr, **kw):
    p = _bath(pr)
    p0 = PhononBathParams(0.0, p.omega_p, p.temperature)
    z = ZplRates.from_uev(pr["gamma0_ueV"], pr["gamma_d_ueV"])
    b = FigureBundle("fig8")
    rows = []
    for d in pr["detunings_meV"]:
        cav = LorentzianCavity.from_uev(d, pr["kappa_ueV"], pr["g_ueV"])
        lo, hi = min(0.0, d) - 1.0, max(0.0, d) + 1.0
        grid = FrequencyGrid.from_mev(lo, hi, pr["n"])
        s = SusceptibilityParams(z.gamma0 + z.gamma_d, cav)
        sus = cavity_spectrum(grid, p, s)
        res = emission_spectrum_projected(cav, z, p, grid)
        b.spectra[f"G_sus_{d:+g}"] = sus
        b.spectra[f"G_sus_nophonon_{d:+g}"] = cavity_spectrum(grid, p0, s)
        b.spectra[f"G_res_{d:+g}"] = res
        b.spectra[f"G_res_nophonon_{d:+g}"] = emission_spectrum_projected(cav, z, p0, grid)
        rows.append((d, cavity_to_zpl_ratio(res, cav.center, cav.kappa),
                     cavity_to_zpl_ratio(sus, cav.center, cav.kappa)))
    b.tables["feeding"] = (("detuning_meV", "ratio_res", "ratio_sus"), rows)
    return b


def _crow(pr):
    return CrowBand.default(g_ueV=pr.get("g_ueV", 85.0))


def _fig9(pr, **kw):
    crow = CrowBand.default(width_meV=pr["width_meV"], edge_width_ueV=pr["edge_width_ueV"],
                            g_ueV=pr["g_ueV"])
    w = np.linspace(-mev_to_radps(pr["span_meV"]), mev_to_radps(pr["span_meV"]), pr["n"])
    b = FigureBundle("fig9")
    pf = purcell_factor(w, crow)
    prop = propagator(w, crow)
    rows = [(x, a, c) for x, a, c in zip(w * HBAR_MEV_PS, pf, prop / prop.max())]
    b.tables["crow"] = (("omega_meV", "purcell", "projector"), rows)
    return b


def _fig10(pr, **kw):
    crow = _crow(pr)
    z = ZplRates.from_uev(pr["gamma0_ueV"], pr["gamma_d_ueV"])
    b = FigureBundle("fig10")
    rows = []
    for T, off in pr["cases"]:
        p = PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, T)
        qd = crow.center + mev_to_radps(off)
        spec = crow_spectrum(crow, p, z, qd)
        b.spectra[f"T{T:g}_qd{off:+g}"] = spec
        ru, rl = feeding_ratios(spec, crow, qd)
        rows.append((T, off, ru, rl))
    b.tables["ratios"] = (("T_K", "qd_meV", "R_U", "R_L"), rows)
    return b


def _fig11(pr, **kw):
    crow = _crow(pr)
    z = ZplRates.from_uev(pr["gamma0_ueV"], pr["gamma_d_ueV"])
    p = PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, pr["T_K"])
    b = FigureBundle("fig11")
    for off in pr["upper_edge_offsets_meV"]:
        qd = crow.upper + mev_to_radps(off)
        b.spectra[f"dressed_{off:+g}"] = crow_spectrum(crow, p, z, qd, use_phonon_rate=True)
        b.spectra[f"bare_{off:+g}"] = crow_spectrum(crow, p, z, qd, use_phonon_rate=False)
        b.scalars[f"chi_{off:+g}"] = se_rate(crow, p, qd).modification
    return b


def _fig12(pr, **kw):
    crow = _crow(pr)
    z = ZplRates.from_uev(pr["gamma0_ueV"], pr["gamma_d_ueV"])
    p = PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, pr["T_K"])
    b = FigureBundle("fig12")
    rows = []
    for off in pr["offsets_meV"]:
        qd = crow.center + mev_to_radps(off)
        se = se_rate(crow, p, qd)
        det = crow_grid(crow, qd)
        dressed = emission_spectrum_projected(crow, z, p, det, qd=qd, use_phonon_rate=True, se=se)
        bare = emission_spectrum_projected(crow, z, p, det, qd=qd, use_phonon_rate=False, se=se)
        ru, rl = feeding_ratios(dressed, crow, qd)
        ru0, rl0 = feeding_ratios(bare, crow, qd)
        rows.append((off, se.modification, ru0, rl0, ru, rl))
    b.tables["scan"] = (("qd_meV", "chi", "R_U_bare", "R_L_bare", "R_U", "R_L"), rows)
    return b


def _fig13(pr, workers=None, **kw):
    crow = _crow(pr)
    b = FigureBundle("fig13")
    for model in ("constant", "linear"):
        fmap = sweep_feeding_map(crow, pr["temperatures_K"], pr["detunings_meV"], model,
                                 pr["gamma0_ueV"], pr["gamma_d_ueV"], workers=workers)
        b.tables[f"map_{model}"] = (("T_K", "detuning_meV", "ratio"), list(fmap.rows()))
    return b


def _fig15(pr, **kw):
    p = _bath(pr)
    cav = _cavity(pr)
    grid = _grid(pr)
    b = FigureBundle("fig15")
    z = ZplRates.from_uev(pr["gamma0_ueV"], pr["gamma_d_ueV"])
    gen0 = cqed_me.build_liouvillian(cav, p, z)
    b.spectra["inverted"] = cqed_me.inverted_atom_spectrum(gen0, grid)
    for P in pr["pumps_ueV"]:
        gen = cqed_me.build_liouvillian(cav, p, ZplRates.from_uev(pr["gamma0_ueV"], pr["gamma_d_ueV"], P))
        rho = cqed_me.steady_state(gen)
        b.spectra[f"pumped_{P:g}"] = cqed_me.coupled_mode_spectrum(gen, grid, rho)
        b.scalars[f"exciton_population_{P:g}"] = cqed_me.expectation(
            cqed_me.SIGMA_MINUS.conj().T @ cqed_me.SIGMA_MINUS, rho).real
    return b


_RUNNERS = {"fig3": _fig3, "fig4": _fig4, "fig5": _fig5,
            "fig6": lambda pr, **kw: _off_resonant("fig6", pr, kw.get("include_ce", True),
                                                   kw.get("n_modes")),
            "fig7": lambda pr, **kw: _off_resonant("fig7", pr, kw.get("include_ce", True),
                                                   kw.get("n_modes")),
            "fig8": _fig8, "fig9": _fig9, "fig10": _fig10, "fig11": _fig11, "fig12": _fig12,
            "fig13": _fig13, "fig15": _fig15}

FIGURES = tuple(_RUNNERS)


def run_figure(name: str, overrides: dict | None = None, **options) -> FigureBundle:
    if name not in _RUNNERS:
        raise KeyError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    pr = dict(FIGURE_PRESETS[name])
    pr.update(overrides or {})
    return _RUNNERS[name](pr, **options)


# ---------------------------------------------------------------- output

def format_number(x) -> str:
    return f"{float(x):.9g}"


def spectrum_csv(spec: Spectrum) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("omega_meV", "S_norm"))
    for x, y in zip(spec.detuning_mev, np.asarray(spec.values, dtype=float)):
        w.writerow((format_number(x), format_number(y)))
    return buf.getvalue()


def table_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format_number(v) for v in r])
    return buf.getvalue()


_PLOT_SCRIPT = '''"""Plot every CSV in this directory (needs matplotlib)."""
import csv, glob, os
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
for path in sorted(glob.glob(os.path.join(here, "*.csv"))):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    head, data = rows[0], [[float(v) for v in r] for r in rows[1:]]
    if not data:
        continue
    cols = list(zip(*data))
    fig, ax = plt.subplots()
    for k in range(1, len(head)):
        ax.plot(cols[0], cols[k], label=head[k])
    ax.set_xlabel(head[0])
    ax.legend()
    fig.savefig(path[:-4] + ".png", dpi=120)
    plt.close(fig)
'''


def write_bundle(bundle: FigureBundle, outdir) -> list:
    os.makedirs(outdir, exist_ok=True)
    written = []
    for label, spec in sorted(bundle.spectra.items()):
        path = os.path.join(outdir, f"{bundle.name}_{label}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(spectrum_csv(spec))
        written.append(path)
    for label, (header, rows) in sorted(bundle.tables.items()):
        path = os.path.join(outdir, f"{bundle.name}_{label}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(table_csv(header, rows))
        written.append(path)
    script = os.path.join(outdir, "plot.py")
    with open(script, "w", encoding="utf-8", newline="") as fh:
        fh.write(_PLOT_SCRIPT)
    written.append(script)
    return written
