"""Self-convergence of the correlation-expansion cavity spectrum.

Reference: resonant doublet (g = 100 ueV, kappa = 65 ueV, 4 K) with N modes
up to 5 omega_p.  Perturbations: doubled N, cutoff raised by 2 omega_p, and,
on the RK4 time route at a smaller N, a halved step.  Prints the max
normalized difference of each against its reference.
"""
import argparse
import time

from polaron_spectra.analysis_scenarios import compare_spectra
from polaron_spectra.correlation_expansion import ExpansionConfig, two_time_spectrum
from polaron_spectra.phonon_bath import ALPHA_INAS_PS2, OMEGA_P_INAS, PhononBathParams
from polaron_spectra.photonic_reservoir import LorentzianCavity
from polaron_spectra.reservoir_me import ZplRates
from polaron_spectra.units_numerics import FrequencyGrid


def spectrum(cfg, args):
    p = PhononBathParams(ALPHA_INAS_PS2, OMEGA_P_INAS, args.T)
    cav = LorentzianCavity.from_uev(args.detuning, args.kappa, args.g)
    grid = FrequencyGrid.from_mev(args.lo, args.hi, args.n_grid)
    t0 = time.perf_counter()
    s = two_time_spectrum(p, cav, ZplRates.from_uev(5.0, 55.0), grid, config=cfg).cavity
    return s, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-modes", type=int, default=150)
    ap.add_argument("--time-route-modes", type=int, default=40)
    ap.add_argument("--T", type=float, default=4.0)
    ap.add_argument("--g", type=float, default=100.0)
    ap.add_argument("--kappa", type=float, default=65.0)
    ap.add_argument("--detuning", type=float, default=0.0)
    ap.add_argument("--lo", type=float, default=-0.4)
    ap.add_argument("--hi", type=float, default=0.4)
    ap.add_argument("--n-grid", type=int, default=321)
    args = ap.parse_args()

    n, w5 = args.n_modes, 5.0 * OMEGA_P_INAS
    ref, t = spectrum(ExpansionConfig(n_modes=n, route="resolvent"), args)
    print(f"reference N={n}: {t:.1f} s")
    for label, cfg in (("N x 2", ExpansionConfig(n_modes=2 * n, route="resolvent")),
                       ("w_max + 2 w_p", ExpansionConfig(n_modes=n, w_max=w5 + 2 * OMEGA_P_INAS,
                                                         route="resolvent"))):
        s, t = spectrum(cfg, args)
        print(f"{label:14s} max |dS| = {compare_spectra(ref, s).max_abs:.2e}  ({t:.1f} s)")

    m = args.time_route_modes
    coarse, t1 = spectrum(ExpansionConfig(n_modes=m, dt=0.004), args)
    fine, t2 = spectrum(ExpansionConfig(n_modes=m, dt=0.002), args)
    print(f"dt / 2 (N={m}) max |dS| = {compare_spectra(coarse, fine).max_abs:.2e}  ({t1:.1f} s, {t2:.1f} s)")


if __name__ == "__main__":
    main()
