"""Sectioned key = value run configuration.

A config file has a ``[physical]`` section, an optional ``[numerics]`` and
``[output]`` section, and one section named after the experiment.  Every
key is validated against ``SCHEMA``; unknown keys, missing required keys and
out-of-range values raise ConfigError naming the key.
"""
import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .units import BE9_MASS, DerivedParams

EXPERIMENTS = ("otoc", "scatter", "smatrix", "squeeze", "measure", "rwa", "duality")
REQUIRED = object()


def _float(v):
    return float(v)


def _int(v):
    f = float(v)
    if f != int(f):
        raise ValueError("not an integer")
    return int(f)


def _floats(v):
    """Comma list, or start:stop:count for an inclusive linspace."""
    v = v.strip()
    if ":" in v:
        a, b, n = v.split(":")
        return [float(u) for u in np.linspace(float(a), float(b), _int(n))]
    return [float(u) for u in v.split(",") if u.strip()]


def _ints(v):
    return [_int(u) for u in v.split(",") if u.strip()]


def _choice(*opts):
    def conv(v):
        v = v.strip().lower()
        if v not in opts:
            raise ValueError(f"expected one of {', '.join(opts)}")
        return v
    return conv


def _opt_float(v):
    return None if v.strip().lower() in ("", "none") else float(v)


def _pos(x):
    return all(u > 0 for u in x) if isinstance(x, list) else x > 0


def _nonneg(x):
    return all(u >= 0 for u in x) if isinstance(x, list) else x >= 0


def _pow2(x):
    return x >= 2 and (x & (x - 1)) == 0


# key -> (converter, default, check, constraint text)
SCHEMA = {
    "physical": {
        "omega0_hz": (_float, 10e6, _pos, "> 0"),
        "xi": (_float, 0.01, lambda x: 0 < x < 1, "in (0,1)"),
        "phi": (_float, 0.0, math.isfinite, "finite"),
        "mass_kg": (_float, BE9_MASS, _pos, "> 0"),
    },
    "numerics": {
        "dim": (_int, REQUIRED, lambda x: x >= 2, ">= 2"),
        "x_max": (_float, 200.0, _pos, "> 0"),
        "n_points": (_int, 32768, _pow2, "a power of two"),
        "dt": (_float, 0.005, _pos, "> 0"),
        "times": (_floats, "0:3:301", lambda x: len(x) >= 2 and np.all(np.diff(x) > 0),
                  "strictly increasing with >= 2 entries"),
    },
    "output": {
        "directory": (str, "iho_out", lambda x: len(x) > 0, "nonempty"),
        "format": (_choice("csv", "json"), "csv", lambda x: True, ""),
        "deterministic": (_choice("true", "false"), "true", lambda x: True, ""),
    },
    "otoc": {
        "levels": (_ints, "0,1,2,4", lambda x: len(x) > 0 and min(x) >= 0, "nonnegative"),
        "window": (_floats, "1.5,3.0", lambda x: len(x) == 2 and x[0] < x[1], "t_min,t_max"),
        "fit_method": (_choice("hyperbolic", "loglinear"), "hyperbolic", lambda x: True, ""),
        "driven_xi": (_floats, "", lambda x: all(0 < u < 1 for u in x), "each in (0,1)"),
        "driven_dim": (_int, 2048, lambda x: x >= 2, ">= 2"),
        "driven_lambda_t": (_float, 3.0, _pos, "> 0"),
        "driven_samples": (_int, 601, lambda x: x >= 4, ">= 4"),
    },
    "scatter": {
        "eps0": (_float, -0.5, math.isfinite, "finite"),
        "width": (_float, 2.0, _pos, "> 0"),
        "t_start": (_float, -3.0, lambda x: x < 0, "< 0"),
        "t_final": (_float, 10.0, math.isfinite, "finite"),
        "absorber": (_opt_float, "80", lambda x: x is None or x > 0, "> 0 or none"),
        "snapshot_time_s": (_float, 2.86e-6, _nonneg, ">= 0"),
        "probe_x_m": (_float, 1.35e-9, math.isfinite, "finite"),
        "overlay_width": (_float, 1.0, _pos, "> 0"),
        "sweep_eps0": (_floats, "-2:2:17", lambda x: len(x) >= 2, ">= 2 energies"),
        "sweep_width": (_float, 0.25, _pos, "> 0"),
        "spectrum_t_record": (_float, 36.0, _pos, "> 0"),
    },
    "smatrix": {
        "eps": (_floats, "-3:3:121", lambda x: len(x) >= 1, "nonempty"),
    },
    "squeeze": {
        "lambda_t": (_float, 0.88, _nonneg, ">= 0"),
        "nbar": (_float, 0.02, _nonneg, ">= 0"),
        "n_show": (_int, 9, lambda x: x >= 1, ">= 1"),
        "n_curve": (_int, 41, lambda x: x >= 2, ">= 2"),
    },
    "measure": {
        "state": (_choice("fock", "scattered"), "fock", lambda x: True, ""),
        "levels": (_ints, "0,1", lambda x: len(x) > 0 and min(x) >= 0, "nonnegative"),
        "rabi": (_float, 1.0, _pos, "> 0"),
        "t_max": (_float, 10.0, _pos, "> 0"),
        "n_times": (_int, 2001, lambda x: x >= 3, ">= 3"),
        "apodization": (_opt_float, "none", lambda x: x is None or x > 0, "> 0 or none"),
        "scatter_time": (_float, 2.0, math.isfinite, "finite"),
    },
    "rwa": {
        "lambda_t_max": (_float, 1.0, _pos, "> 0"),
        "n_samples": (_int, 51, lambda x: x >= 2, ">= 2"),
    },
    "duality": {
        "fprime": (_floats, "1,4", lambda x: len(x) > 0 and _pos(x), "each > 0"),
        "gprime": (_floats, "1,4", lambda x: len(x) > 0 and _pos(x), "each > 0"),
        "eps": (_floats, "-2:2:20", lambda x: len(x) > 0, "nonempty"),
    },
}

# which numerics keys each experiment needs to be stated explicitly
NEEDS = {
    "otoc": ("dim",),
    "squeeze": ("dim",),
    "rwa": ("dim",),
    "scatter": (),
    "measure": (),
    "smatrix": (),
    "duality": (),
}


@dataclass
class RunConfig:
    experiment: str
    physical: dict
    numerics: dict
    params: dict
    output: dict
    source: str = ""
    raw: dict = field(default_factory=dict)

    @property
    def derived(self):
        p = self.physical
        return DerivedParams.from_frequency(p["omega0_hz"], p["xi"], p["mass_kg"])

    def resolved(self):
        """Plain-data view for manifests: resolved values plus derived SI and dimensionless forms."""
        d = self.derived
        return {
            "experiment": self.experiment,
            "physical": dict(self.physical),
            "numerics": dict(self.numerics),
            self.experiment: dict(self.params),
            "output": dict(self.output),
            "derived": {
                "omega0_rad_s": d.omega0, "m_eff_kg": d.m_eff, "alpha_kg_s2": d.alpha,
                "lambda_L_s": d.lambda_L, "T_H_K": d.hawking_temperature, "x0_m": d.x0,
                "t_unit_s": d.t_unit, "energy_unit_J": d.energy_unit,
                "lambda_dimless": 1.0, "T_dimless": 1.0 / (2.0 * math.pi),
            },
        }


def _convert(section, key, text):
    conv, _, check, constraint = SCHEMA[section][key]
    try:
        val = conv(text)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"[{section}] {key} = {text!r}: {exc}") from None
    if not check(val):
        name = "ξ" if key == "xi" else key
        raise ConfigError(f"[{section}] {key} = {text!r}: {name} must be {constraint}")
    return val


def build_config(experiment, sections, source=""):
    """Validate a {section: {key: text}} mapping into a RunConfig."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
    run = sections.get("run", {})
    for key in run:
        if key != "experiment":
            raise ConfigError(f"[run] unknown key {key!r}")
    if "experiment" in run and run["experiment"].strip() != experiment:
        raise ConfigError(f"[run] experiment = {run['experiment']!r} does not match {experiment!r}")
    allowed = {"physical", "numerics", "output", experiment, "run"}
    for sec in sections:
        if sec not in allowed:
            raise ConfigError(f"unknown or foreign section [{sec}] for experiment {experiment!r}")
    out = {}
    for sec in ("physical", "numerics", "output", experiment):
        given = sections.get(sec, {})
        for key in given:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"[{sec}] unknown key {key!r}")
        vals = {}
        for key, (conv, default, _, _) in SCHEMA[sec].items():
            if key in given:
                vals[key] = _convert(sec, key, given[key])
            elif sec == "numerics" and key in NEEDS[experiment]:
                raise ConfigError(f"[numerics] missing required key {key!r}")
            elif default is REQUIRED:
                vals[key] = None
            else:
                vals[key] = _convert(sec, key, default) if isinstance(default, str) else default
        out[sec] = vals
    raw = {s: dict(v) for s, v in sections.items()}
    return RunConfig(experiment, out["physical"], out["numerics"], out[experiment], out["output"],
                     source, raw)


def read_sections(path):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: malformed config: {exc}") from None
    return {s: dict(parser.items(s)) for s in parser.sections()}


def parse_config(path, experiment=None):
    sections = read_sections(path)
    if experiment is None:
        experiment = sections.get("run", {}).get("experiment", "").strip()
        if not experiment:
            raise ConfigError(f"{path}: no experiment given ([run] experiment = ...)")
    return build_config(experiment, sections, str(path))


def apply_override(sections, key, value):
    """Set ``section.key`` (or a bare key that is unique across sections) to text ``value``."""
    if "." in key:
        sec, k = key.split(".", 1)
    else:
        owners = [s for s, keys in SCHEMA.items() if key in keys]
        present = [s for s in owners if s in sections or s in ("physical", "numerics")]
        if len(owners) == 1:
            sec = owners[0]
        elif len(present) == 1:
            sec = present[0]
        else:
            raise ConfigError(f"sweep key {key!r} is ambiguous; use section.key")
        k = key
    if sec not in SCHEMA or k not in SCHEMA[sec]:
        raise ConfigError(f"sweep key {key!r} is not a known config key")
    new = {s: dict(v) for s, v in sections.items()}
    new.setdefault(sec, {})[k] = value
    return new
