"""polaron-spectra command line.

Exit codes: 0 ok, 2 bad scenario, 3 numerical failure, 4 no convergence.
Errors are also printed to stderr as one JSON line with a `category` key.
"""
from __future__ import annotations

import csv
import hashlib
import itertools
import json
import os
import platform
import sys
import time

import click
import numpy as np
import scipy

from . import __version__, cqed_me
from .analysis_scenarios import (FIGURES, compare_spectra, crow_grid, run_figure, spectrum_csv,
                                 sweep_feeding_map, table_csv, worker_count, write_bundle)
from .correlation_expansion import two_time_spectrum
from .errors import PolaronSpectraError, SchemaError
from .linear_susceptibility import SusceptibilityParams, cavity_spectrum
from .reservoir_me import ZplRates, emission_spectrum_projected
from .scenario import Scenario, load_scenario
from .units_numerics import FrequencyGrid, HBAR_MEV_PS, Spectrum, mev_to_radps, radps_to_uev, uev_to_radps

EXIT_CODES = {"schema": 2, "numeric": 3, "convergence": 4}


class _Failure(click.ClickException):
    def __init__(self, exc: Exception):
        cat = getattr(exc, "category", "numeric")
        super().__init__(str(exc))
        self.exit_code = EXIT_CODES.get(cat, 3)
        self.payload = {"category": cat, "error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "field", None):
            self.payload["field"] = exc.field

    def show(self, file=None):
        click.echo(json.dumps(self.payload, sort_keys=True), err=True)


def _guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PolaronSpectraError as exc:
        raise _Failure(exc) from exc
    except json.JSONDecodeError as exc:
        raise _Failure(SchemaError(f"not valid JSON: {exc}")) from exc


# ---------------------------------------------------------------- engines

def _default_grid(s: Scenario):
    if s.grid is not None:
        return s.grid
    if s.crow is not None:
        return crow_grid(s.crow, s.crow.center + s.qd_offset)
    c = s.cavity.center
    pad = max(mev_to_radps(0.4), 3 * s.cavity.kappa)
    return FrequencyGrid(min(0.0, c) - pad, max(0.0, c) + pad, 801)


def _cqed_generator(s: Scenario):
    return cqed_me.build_liouvillian(s.cavity, s.phonon, s.zpl)


def run_engine(engine: str, s: Scenario, grid) -> Spectrum:
    """One cavity-emitted (or waveguide-projected) spectrum, peak-normalized."""
    z = s.zpl
    if engine == "reservoir":
        if s.crow is not None:
            qd = s.crow.center + s.qd_offset
            return emission_spectrum_projected(s.crow, z, s.phonon, grid, qd=qd)
        return emission_spectrum_projected(s.cavity, z, s.phonon, grid)
    if engine == "cqed-wea":
        zw = z if z.pump > 0 else ZplRates(z.gamma0, z.gamma_d, uev_to_radps(0.05))
        return cqed_me.wea_spectrum(cqed_me.scattering_rates(s.cavity, s.phonon), s.cavity, zw, grid)
    if engine == "cqed-full":
        gen = _cqed_generator(s)
        if z.pump > 0:
            return cqed_me.coupled_mode_spectrum(gen, grid, cqed_me.steady_state(gen))
        return cqed_me.inverted_atom_spectrum(gen, grid)
    if engine == "corr-exp":
        init = "steady-pump" if (s.init == "steady-pump" and z.pump > 0) else "inverted-atom"
        return two_time_spectrum(s.phonon, s.cavity, z, grid, init=init, config=s.expansion).cavity
    if engine == "susceptibility":
        return cavity_spectrum(grid, s.phonon, SusceptibilityParams(z.gamma0 + z.gamma_d, s.cavity))
    raise SchemaError(f"engine: unknown engine {engine!r}", field="engine")


# ---------------------------------------------------------------- output helpers

def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _manifest(outdir, command, s: Scenario | None, outputs, timings, extra=None):
    doc = {
        "command": command,
        "scenario": None if s is None else s.document,
        "versions": {"polaron_spectra": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "click": _click_version(),
                     "python": platform.python_version()},
        "platform": platform.platform(),
        "threads_cap": os.environ.get("POLARON_SPECTRA_THREADS"),
        "timings_s": {k: round(v, 4) for k, v in timings.items()},
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
    }
    if extra:
        doc.update(extra)
    return _write(os.path.join(outdir, "manifest.json"), json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _click_version():
    from importlib.metadata import version
    try:
        return version("click")
    except Exception:
        return "unknown"


def _outdir(s: Scenario, override):
    d = override or s.output_dir
    os.makedirs(d, exist_ok=True)
    return d


# ---------------------------------------------------------------- commands

@click.group()
@click.version_option(__version__, prog_name="polaron-spectra")
def main():
    """Phonon-dressed emission spectra of a quantum dot in a cavity or waveguide."""


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out", default=None, help="Output directory (overrides output_dir).")
def simulate(scenario_path, out):
    """Run every engine listed in the scenario and compare them pairwise."""
    s = _guard(load_scenario, scenario_path)
    outdir = _outdir(s, out)
    grid = _default_grid(s)
    written, timings, spectra = [], {}, {}
    for engine in s.engines:
        t0 = time.perf_counter()
        spec = _guard(run_engine, engine, s, grid)
        timings[engine] = time.perf_counter() - t0
        spectra[engine] = spec
        written.append(_write(os.path.join(outdir, f"spectrum_{engine}.csv"), spectrum_csv(spec)))
        click.echo(f"{engine}: {timings[engine]:.2f} s")
    if len(spectra) > 1:
        rows = []
        for a, b in itertools.combinations(spectra, 2):
            m = compare_spectra(spectra[a], spectra[b])
            rows.append((a, b, m.max_abs, m.l2, m.maxima_a, m.maxima_b))
            click.echo(f"{a} vs {b}: max |dS| = {m.max_abs:.4f}, L2 = {m.l2:.4f}, "
                       f"maxima {m.maxima_a}/{m.maxima_b}")
        buf = [("engine_a", "engine_b", "max_abs", "l2", "maxima_a", "maxima_b")]
        buf += [(a, b, f"{x:.9g}", f"{y:.9g}", p, q) for a, b, x, y, p, q in rows]
        written.append(_write(os.path.join(outdir, "comparison.csv"), _rows_to_csv(buf)))
    _manifest(outdir, "simulate", s, written, timings)


def _rows_to_csv(rows):
    import io
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out", default=None)
def rates(scenario_path, out):
    """Phonon-mediated scattering rates and shifts (ueV) for a cavity scenario."""
    s = _guard(load_scenario, scenario_path)
    if s.cavity is None:
        raise _Failure(SchemaError("rates needs a cavity reservoir", field="reservoir"))
    outdir = _outdir(s, out)
    t0 = time.perf_counter()
    r = _guard(cqed_me.scattering_rates, s.cavity, s.phonon)
    u = radps_to_uev
    rows = [("quantity", "value_ueV"),
            ("Gamma_exciton_to_cavity", u(r.exciton_to_cavity)),
            ("Gamma_cavity_to_exciton", u(r.cavity_to_exciton)),
            ("Delta_exciton", u(r.lamb_exciton)),
            ("Delta_cavity", u(r.lamb_cavity)),
            ("gamma_cd_re", u(r.cross_dephasing.real)), ("gamma_cd_im", u(r.cross_dephasing.imag)),
            ("M1_re", u(r.m1.real)), ("M1_im", u(r.m1.imag)),
            ("M2_re", u(r.m2.real)), ("M2_im", u(r.m2.imag)),
            ("g_eff", u(r.g_eff)), ("rabi", u(r.rabi))]
    text = _rows_to_csv([rows[0]] + [(k, f"{float(v) + 0.0:.9g}") for k, v in rows[1:]])
    path = _write(os.path.join(outdir, "rates.csv"), text)
    click.echo(text, nl=False)
    _manifest(outdir, "rates", s, [path], {"rates": time.perf_counter() - t0})


@main.command()
@click.option("--scenario", "scenario_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--parallel", "parallel", default=1, show_default=True, type=click.IntRange(min=1),
              help="Worker processes (capped by POLARON_SPECTRA_THREADS).")
@click.option("--out", "out", default=None)
def sweep(scenario_path, parallel, out):
    """Waveguide feeding map R_U + R_L over temperature and emitter position."""
    s = _guard(load_scenario, scenario_path)
    if s.crow is None or s.sweep is None:
        raise _Failure(SchemaError("sweep needs a crow reservoir and a sweep section", field="sweep"))
    outdir = _outdir(s, out)
    n = worker_count(parallel)
    t0 = time.perf_counter()
    fmap = _guard(sweep_feeding_map, s.crow, s.sweep.temperatures_K, s.sweep.detunings_meV,
                  s.sweep.dephasing, radps_to_uev(s.zpl.gamma0), radps_to_uev(s.zpl.gamma_d),
                  s.phonon, workers=n)
    path = _write(os.path.join(outdir, "feeding_map.csv"),
                  table_csv(("T_K", "detuning_meV", "ratio"), fmap.rows()))
    _manifest(outdir, "sweep", s, [path], {"sweep": time.perf_counter() - t0}, {"workers": n})
    click.echo(f"feeding map {fmap.ratio.shape} written with {n} worker(s)")


@main.command()
@click.argument("name", type=click.Choice(FIGURES))
@click.option("--out", "out", default="figures", show_default=True)
@click.option("--no-ce", is_flag=True, help="Skip correlation-expansion curves.")
@click.option("--n-modes", default=None, type=click.IntRange(min=10))
@click.option("--parallel", default=1, type=click.IntRange(min=1))
def figure(name, out, no_ce, n_modes, parallel):
    """Regenerate one figure's data and a plot script."""
    os.makedirs(out, exist_ok=True)
    opts = {}
    if name in ("fig4", "fig5", "fig6", "fig7"):
        opts["include_ce"] = not no_ce
        opts["n_modes"] = n_modes
    if name == "fig13":
        opts["workers"] = worker_count(parallel)
    t0 = time.perf_counter()
    bundle = _guard(run_figure, name, None, **opts)
    paths = write_bundle(bundle, out)
    if bundle.scalars:
        paths.append(_write(os.path.join(out, f"{name}_scalars.json"),
                            json.dumps({k: float(v) for k, v in bundle.scalars.items()},
                                       indent=2, sort_keys=True) + "\n"))
    _manifest(out, f"figure {name}", None, paths, {name: time.perf_counter() - t0},
              {"options": {k: v for k, v in opts.items()}})
    click.echo(f"{name}: {len(paths)} files in {out}")


def _read_spectrum_csv(path):
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["omega_meV", "S_norm"]:
        raise SchemaError(f"{path}: expected header omega_meV,S_norm", field=path)
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}", field=path) from exc
    if data.ndim != 2 or data.shape[0] < 3:
        raise SchemaError(f"{path}: need at least three rows", field=path)
    return Spectrum(data[:, 0] / HBAR_MEV_PS, data[:, 1])


@main.command()
@click.argument("a", type=click.Path(exists=True, dir_okay=False))
@click.argument("b", type=click.Path(exists=True, dir_okay=False))
def compare(a, b):
    """Max pointwise and L2 difference of two spectrum CSVs on the same grid."""
    sa, sb = _guard(_read_spectrum_csv, a), _guard(_read_spectrum_csv, b)
    try:
        m = compare_spectra(sa, sb)
    except ValueError as exc:
        raise _Failure(SchemaError(str(exc))) from exc
    click.echo(json.dumps({"max_abs": m.max_abs, "l2": m.l2, "maxima_a": m.maxima_a,
                           "maxima_b": m.maxima_b}, sort_keys=True))


if __name__ == "__main__":
    sys.exit(main())
