"""JSON scenario documents -> validated run configuration.

Keys are flat within each section and carry their unit as a suffix
(`kappa_ueV`, `T_K`, `alpha_ps2`, ...).  A quantity may be given in any of
the listed units; it is stored internally in rad/ps (energies), K or ps^2.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .correlation_expansion import ExpansionConfig
from .errors import RangeError, SchemaError
from .phonon_bath import ALPHA_INAS_PS2, OMEGA_P_INAS, PhononBathParams
from .photonic_reservoir import CrowBand, LorentzianCavity
from .reservoir_me import ZplRates
from .units_numerics import FrequencyGrid, mev_to_radps, radps_to_mev, radps_to_uev, uev_to_radps

ENGINES = ("reservoir", "cqed-wea", "cqed-full", "corr-exp", "susceptibility")
CAVITY_ONLY = ("cqed-wea", "cqed-full", "corr-exp", "susceptibility")

_ENERGY = {"meV": mev_to_radps, "ueV": uev_to_radps}


def _energy(doc, base, path, default=None):
    """Read `base_meV` or `base_ueV` (not both); returns rad/ps or default."""
    hits = [(u, doc[f"{base}_{u}"]) for u in _ENERGY if f"{base}_{u}" in doc]
    if len(hits) > 1:
        raise SchemaError(f"{path}.{base}: give one unit only", field=f"{path}.{base}")
    if not hits:
        if default is None:
            raise SchemaError(f"{path}.{base}_meV: required field missing", field=f"{path}.{base}_meV")
        return default, f"{path}.{base}_meV"
    unit, val = hits[0]
    name = f"{path}.{base}_{unit}"
    return _ENERGY[unit](_number(val, name)), name


def _number(val, name):
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise SchemaError(f"{name}: expected a number, got {type(val).__name__}", field=name)
    if not np.isfinite(val):
        raise RangeError(name, val, "must be finite")
    return float(val)


def _check_keys(doc, allowed, path):
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected an object", field=path)
    for k in doc:
        if k not in allowed:
            where = f"{path}.{k}" if path else k
            raise SchemaError(f"{where}: unknown key", field=where)


def _energy_keys(*bases):
    return {f"{b}_{u}" for b in bases for u in _ENERGY}


# ---------------------------------------------------------------- sections

def _parse_cavity(doc, path="cavity"):
    _check_keys(doc, _energy_keys("detuning", "kappa", "g"), path)
    det, _ = _energy(doc, "detuning", path, default=0.0)
    kappa, kname = _energy(doc, "kappa", path)
    g, gname = _energy(doc, "g", path)
    if not kappa > 0:
        raise RangeError(kname, doc[kname.split(".")[-1]], "must be positive")
    if g < 0:
        raise RangeError(gname, doc[gname.split(".")[-1]], "must be non-negative")
    return LorentzianCavity(det, kappa, g)


def _parse_crow(doc, path="crow"):
    _check_keys(doc, _energy_keys("width", "edge_width", "g", "qd_offset") | {"imaginary_damping"}, path)
    width, wname = _energy(doc, "width", path, default=mev_to_radps(8.0))
    edge, ename = _energy(doc, "edge_width", path, default=uev_to_radps(14.0))
    g, gname = _energy(doc, "g", path, default=uev_to_radps(85.0))
    qd, _ = _energy(doc, "qd_offset", path, default=0.0)
    for name, v in ((wname, width), (ename, edge)):
        if not v > 0:
            raise RangeError(name, doc.get(name.split(".")[-1]), "must be positive")
    if g < 0:
        raise RangeError(gname, doc.get(gname.split(".")[-1]), "must be non-negative")
    damp = doc.get("imaginary_damping", True)
    if not isinstance(damp, bool):
        raise SchemaError(f"{path}.imaginary_damping: expected true/false", field=f"{path}.imaginary_damping")
    crow = CrowBand.default(width_meV=radps_to_mev(width), edge_width_ueV=radps_to_uev(edge),
                            g_ueV=radps_to_uev(g), imaginary_damping=damp)
    return crow, qd


def _parse_phonon(doc, path="phonon"):
    _check_keys(doc, {"alpha_ps2", "T_K"} | _energy_keys("omega_p"), path)
    alpha = _number(doc.get("alpha_ps2", ALPHA_INAS_PS2), f"{path}.alpha_ps2")
    T = _number(doc.get("T_K", 4.0), f"{path}.T_K")
    wp, wname = _energy(doc, "omega_p", path, default=OMEGA_P_INAS)
    if alpha < 0:
        raise RangeError(f"{path}.alpha_ps2", alpha, "must be non-negative")
    if T < 0:
        raise RangeError(f"{path}.T_K", T, "must be non-negative")
    if not wp > 0:
        raise RangeError(wname, doc.get(wname.split(".")[-1]), "must be positive")
    return PhononBathParams(alpha, wp, T)


def _parse_zpl(doc, path="zpl"):
    _check_keys(doc, _energy_keys("gamma0", "gamma_d", "pump"), path)
    vals = {}
    for base, dflt in (("gamma0", 5.0), ("gamma_d", 55.0), ("pump", 0.0)):
        v, name = _energy(doc, base, path, default=uev_to_radps(dflt))
        if v < 0:
            raise RangeError(name, doc.get(name.split(".")[-1]), "must be non-negative")
        vals[base] = v
    return ZplRates(vals["gamma0"], vals["gamma_d"], vals["pump"])


def _parse_grid(doc, path="grid"):
    _check_keys(doc, _energy_keys("lo", "hi") | {"n"}, path)
    lo, _ = _energy(doc, "lo", path, default=mev_to_radps(-0.4))
    hi, hname = _energy(doc, "hi", path, default=mev_to_radps(0.4))
    n = doc.get("n", 321)
    if isinstance(n, bool) or not isinstance(n, int):
        raise SchemaError(f"{path}.n: expected an integer", field=f"{path}.n")
    if n < 3:
        raise RangeError(f"{path}.n", n, "need at least 3 points")
    if not hi > lo:
        raise RangeError(hname, doc.get(hname.split(".")[-1]), "upper limit must exceed the lower one")
    return FrequencyGrid(lo, hi, n)


@dataclass(frozen=True)
class SweepSpec:
    temperatures_K: tuple
    detunings_meV: tuple
    dephasing: str = "constant"


def _float_list(val, name):
    if not isinstance(val, list) or not val:
        raise SchemaError(f"{name}: expected a non-empty list of numbers", field=name)
    return tuple(_number(v, f"{name}[{i}]") for i, v in enumerate(val))


def _parse_sweep(doc, path="sweep"):
    _check_keys(doc, {"temperatures_K", "detunings_meV", "dephasing"}, path)
    Ts = _float_list(doc.get("temperatures_K", [4.0, 10.0, 20.0, 30.0, 40.0]), f"{path}.temperatures_K")
    ds = _float_list(doc.get("detunings_meV", [0.0]), f"{path}.detunings_meV")
    for i, T in enumerate(Ts):
        if T < 0:
            raise RangeError(f"{path}.temperatures_K[{i}]", T, "must be non-negative")
    model = doc.get("dephasing", "constant")
    if model not in ("constant", "linear"):
        raise SchemaError(f"{path}.dephasing: expected 'constant' or 'linear'", field=f"{path}.dephasing")
    return SweepSpec(Ts, ds, model)


def _parse_expansion(doc, path="correlation_expansion"):
    _check_keys(doc, {"n_modes", "route", "init", "dt_ps"}, path)
    n = doc.get("n_modes", 150)
    if isinstance(n, bool) or not isinstance(n, int):
        raise SchemaError(f"{path}.n_modes: expected an integer", field=f"{path}.n_modes")
    if n < 10:
        raise RangeError(f"{path}.n_modes", n, "need at least 10 modes")
    route = doc.get("route", "resolvent")
    if route not in ("resolvent", "time"):
        raise SchemaError(f"{path}.route: expected 'resolvent' or 'time'", field=f"{path}.route")
    init = doc.get("init", "inverted-atom")
    if init not in ("inverted-atom", "steady-pump"):
        raise SchemaError(f"{path}.init: expected 'inverted-atom' or 'steady-pump'", field=f"{path}.init")
    dt = _number(doc.get("dt_ps", 0.002), f"{path}.dt_ps")
    if not dt > 0:
        raise RangeError(f"{path}.dt_ps", dt, "must be positive")
    return ExpansionConfig(n_modes=n, dt=dt, route=route), init


# ---------------------------------------------------------------- presets

PRESETS = {
    "fig4": {"engine": ["cqed-wea", "cqed-full", "corr-exp", "susceptibility"],
             "cavity": {"g_ueV": 100, "kappa_ueV": 65, "detuning_meV": 0},
             "zpl": {"gamma0_ueV": 5, "gamma_d_ueV": 55},
             "grid": {"lo_meV": -0.4, "hi_meV": 0.4, "n": 321}},
    "fig5": {"engine": ["cqed-full"],
             "cavity": {"g_ueV": 50, "kappa_ueV": 65, "detuning_meV": 0},
             "zpl": {"gamma0_ueV": 5, "gamma_d_ueV": 55, "pump_ueV": 0.05},
             "grid": {"lo_meV": -0.4, "hi_meV": 0.4, "n": 321}},
    "fig6": {"engine": ["reservoir", "cqed-full", "susceptibility"],
             "cavity": {"g_ueV": 100, "kappa_ueV": 180, "detuning_meV": -2},
             "zpl": {"gamma0_ueV": 5, "gamma_d_ueV": 55},
             "grid": {"lo_meV": -3, "hi_meV": 1, "n": 801}},
    "fig7": {"engine": ["reservoir", "cqed-full", "susceptibility"],
             "cavity": {"g_ueV": 100, "kappa_meV": 2.4, "detuning_meV": -2},
             "zpl": {"gamma0_ueV": 5, "gamma_d_ueV": 55},
             "grid": {"lo_meV": -5, "hi_meV": 3, "n": 801}},
    "fig8": {"engine": ["reservoir", "susceptibility"],
             "cavity": {"g_ueV": 100, "kappa_ueV": 65, "detuning_meV": -2},
             "zpl": {"gamma0_ueV": 5, "gamma_d_ueV": 55},
             "grid": {"lo_meV": -3, "hi_meV": 1, "n": 2001}},
    "fig10": {"engine": ["reservoir"], "reservoir": "crow", "phonon": {"T_K": 40},
              "crow": {"g_ueV": 85, "qd_offset_meV": 0},
              "zpl": {"gamma0_ueV": 1, "gamma_d_ueV": 1},
              "grid": {"lo_meV": -6, "hi_meV": 6, "n": 2401}},
    "fig13": {"engine": ["reservoir"], "reservoir": "crow",
              "crow": {"g_ueV": 85},
              "zpl": {"gamma0_ueV": 1, "gamma_d_ueV": 1},
              "sweep": {"temperatures_K": [4, 10, 20, 30, 40],
                        "detunings_meV": [-3.5, -3.0, -2.5, -2.0, -1.0, 0.0, 1.0, 2.0, 2.5, 3.0, 3.5],
                        "dephasing": "linear"}},
    "fig15": {"engine": ["cqed-full"],
              "cavity": {"g_ueV": 100, "kappa_ueV": 65, "detuning_meV": 1},
              "zpl": {"gamma0_ueV": 5, "gamma_d_ueV": 55, "pump_ueV": 0.05},
              "grid": {"lo_meV": -0.6, "hi_meV": 1.6, "n": 881}},
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


# ---------------------------------------------------------------- scenario

@dataclass
class Scenario:
    engines: tuple
    phonon: PhononBathParams
    zpl: ZplRates
    grid: FrequencyGrid | None
    cavity: LorentzianCavity | None = None
    crow: CrowBand | None = None
    qd_offset: float = 0.0                 # emitter offset from the CROW band centre
    sweep: SweepSpec | None = None
    expansion: ExpansionConfig = field(default_factory=lambda: ExpansionConfig(route="resolvent"))
    init: str = "inverted-atom"
    output_dir: str = "out"
    name: str = "scenario"
    document: dict = field(default_factory=dict)     # resolved input, echoed to the manifest

    @property
    def reservoir(self):
        return self.cavity if self.cavity is not None else self.crow


_TOP = {"name", "preset", "engine", "reservoir", "cavity", "crow", "phonon", "zpl", "grid",
        "sweep", "correlation_expansion", "output_dir"}


def parse_scenario(document) -> Scenario:
    """Validate a scenario mapping (or JSON text) and fill defaults."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"not valid JSON: {exc}") from exc
    _check_keys(document, _TOP, "")
    doc = dict(document)
    preset = doc.pop("preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise SchemaError(f"preset: unknown preset {preset!r} (known: {', '.join(PRESETS)})",
                              field="preset")
        doc = _merge(PRESETS[preset], doc)
        doc.setdefault("name", preset)

    kind = doc.get("reservoir", "crow" if "crow" in doc and "cavity" not in doc else "cavity")
    if kind not in ("cavity", "crow"):
        raise SchemaError("reservoir: expected 'cavity' or 'crow'", field="reservoir")

    engines = doc.get("engine", ["reservoir"])
    if isinstance(engines, str):
        engines = [engines]
    if not isinstance(engines, list) or not engines:
        raise SchemaError("engine: expected a name or a non-empty list", field="engine")
    for i, e in enumerate(engines):
        if e not in ENGINES:
            raise SchemaError(f"engine[{i}]: unknown engine {e!r} (known: {', '.join(ENGINES)})",
                              field=f"engine[{i}]")
        if kind == "crow" and e in CAVITY_ONLY:
            raise SchemaError(f"engine[{i}]: {e} needs a cavity reservoir", field=f"engine[{i}]")

    cavity = crow = None
    qd = 0.0
    if kind == "cavity":
        if "cavity" not in doc:
            raise SchemaError("cavity: required section missing", field="cavity")
        cavity = _parse_cavity(doc["cavity"])
    else:
        crow, qd = _parse_crow(doc.get("crow", {}))

    expansion, init = _parse_expansion(doc.get("correlation_expansion", {}))
    out = doc.get("output_dir", "out")
    if not isinstance(out, str) or not out:
        raise SchemaError("output_dir: expected a path string", field="output_dir")
    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        raise SchemaError("name: expected a string", field="name")
    return Scenario(
        engines=tuple(engines),
        phonon=_parse_phonon(doc.get("phonon", {})),
        zpl=_parse_zpl(doc.get("zpl", {})),
        grid=_parse_grid(doc["grid"]) if "grid" in doc else None,
        cavity=cavity, crow=crow, qd_offset=qd,
        sweep=_parse_sweep(doc["sweep"]) if "sweep" in doc else None,
        expansion=expansion, init=init, output_dir=out, name=name, document=doc)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return parse_scenario(text)
