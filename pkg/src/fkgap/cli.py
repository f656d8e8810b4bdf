"""Scenario-driven command line.

Subcommands: `fkgap run <scenario> [--out DIR] [--threads N]` executes a
declared pipeline and writes report.json, gap.csv, and meta.json;
`fkgap plotdata <report.json> [--out DIR]` extracts plot-ready CSV series;
`fkgap check-aubry <scenario>` and `fkgap diophantine <scenario>` run the
two certificates standalone.

A scenario is a TOML file with `schema_version = 1`, a `kind` of "kam",
"anti_integrable" or "custom_window", and the tables listed in the README.
Bundled scenarios ship inside the package and can be referenced by bare
name (`fkgap run ai_integer_lambda20`).

report.json is deterministic: identical scenario input yields byte
identical output (sorted keys, no timestamps; wall-clock metadata goes to
meta.json).  gap.csv repeats report.json numbers verbatim.  Exit codes:
0 run completed, 2 numeric failure (convergence, degeneracy, capacity),
3 schema or precondition failure.  Errors are also recorded inside
report.json under a machine-readable code.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings
from importlib import resources
from pathlib import Path
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10: same parser, published separately
    import tomli as tomllib

import numpy as np

from .errors import (
    CapacityError,
    ConvergenceError,
    DegeneracyError,
    PreconditionError,
    SchemaError,
)
from .model import (
    INTERACTION_REGISTRY,
    WELL_REGISTRY,
    Clamped,
    Configuration,
    FrequencyModule,
    Lagrangian,
    QuasiPeriodicPotential,
    scalar_fk_lagrangian,
)
from .hull import (
    diophantine_check,
    hull_newton_solve,
    hull_residual,
    nondegeneracy_report,
    sample_configuration,
)
from .phonon import ai_gap_bound, gap_sweep, kam_eta_bound, kam_truncation_data
from .equilibrium import (
    SeparableLattice,
    anti_integrable_solve,
    check_aubry_criterion,
    newton_solve_window,
    residual_sup,
    uniqueness_probe,
)

SCHEMA_VERSION = 1

KINDS = ("kam", "anti_integrable", "custom_window")


# ---------------------------------------------------------------------------
# scenario loading and validation


def _check_keys(table: dict, allowed, where: str) -> None:
    unknown = sorted(set(table) - set(allowed))
    if unknown:
        raise SchemaError("%s: unknown key(s): %s" % (where, ", ".join(unknown)))


_CHECKS = {
    "table": lambda v: isinstance(v, dict),
    "array": lambda v: isinstance(v, list),
    "string": lambda v: isinstance(v, str),
    "bool": lambda v: isinstance(v, bool),
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
}


def _get(table: dict, key: str, where: str, expect: str, required=True, default=None):
    if key not in table:
        if required:
            raise SchemaError("%s: missing required key '%s'" % (where, key))
        return default
    v = table[key]
    if not _CHECKS[expect](v):
        raise SchemaError("%s: key '%s' must be a %s" % (where, key, expect))
    return v


def _num_list(table, key, where, required=True, default=None, min_len=0):
    v = _get(table, key, where, "array", required, None)
    if v is None:
        return default
    if not all(_CHECKS["number"](x) for x in v):
        raise SchemaError("%s: '%s' must contain only numbers" % (where, key))
    if len(v) < min_len:
        raise SchemaError("%s: '%s' needs at least %d entries" % (where, key, min_len))
    return [float(x) for x in v]


def _int_list(table, key, where, required=True, default=None, minimum=None):
    v = _get(table, key, where, "array", required, None)
    if v is None:
        return default
    if not all(_CHECKS["int"](x) for x in v):
        raise SchemaError("%s: '%s' must contain only integers" % (where, key))
    if minimum is not None and any(x < minimum for x in v):
        raise SchemaError("%s: '%s' entries must be >= %d" % (where, key, minimum))
    return [int(x) for x in v]


def _vector(value, d: int, where: str) -> list:
    """Accept a scalar (d = 1 convenience) or a length-d number list."""
    if _CHECKS["number"](value):
        if d != 1:
            raise SchemaError("%s: scalar given where a %d-vector is needed" % (where, d))
        return [float(value)]
    if isinstance(value, list) and all(_CHECKS["number"](x) for x in value):
        if len(value) != d:
            raise SchemaError("%s: expected %d components, got %d" % (where, d, len(value)))
        return [float(x) for x in value]
    raise SchemaError("%s: expected a number or a list of %d numbers" % (where, d))


def _req_vector(table: dict, key: str, d: int, where: str) -> list:
    if key not in table:
        raise SchemaError("%s: missing required key '%s'" % (where, key))
    return _vector(table[key], d, "%s.%s" % (where, key))


def _positive(x: float, where: str) -> float:
    if not x > 0:
        raise SchemaError("%s must be positive" % where)
    return float(x)


def _validate_sweep(raw: dict, where: str, require_windows=True, allow_quotients=False) -> dict:
    allowed = ["windows", "tol", "decay_factor", "stability", "floor"]
    if allow_quotients:
        allowed.append("quotient_ks")
    _check_keys(raw, allowed, where)
    windows = _int_list(raw, "windows", where, required=require_windows, default=[], minimum=3)
    if any(b <= a for a, b in zip(windows, windows[1:])):
        raise SchemaError("%s: windows must be strictly increasing" % where)
    out = {
        "windows": windows,
        "tol": _positive(_get(raw, "tol", where, "number", False, 1e-10), where + ".tol"),
        "decay_factor": float(_get(raw, "decay_factor", where, "number", False, 2.0)),
        "stability": float(_get(raw, "stability", where, "number", False, 0.10)),
        "floor": float(_get(raw, "floor", where, "number", False, 1e-6)),
    }
    if allow_quotients:
        out["quotient_ks"] = _int_list(raw, "quotient_ks", where, False, [], minimum=1)
    return out


def _validate_solve(raw: dict, where: str, tol_default: float) -> dict:
    _check_keys(raw, ["tol", "max_iter", "damping"], where)
    max_iter = _get(raw, "max_iter", where, "int", False, 50)
    if max_iter < 0:
        raise SchemaError("%s.max_iter must be >= 0" % where)
    damping = _get(raw, "damping", where, "number", False, 1.0)
    if not 0 < damping <= 1:
        raise SchemaError("%s.damping must be in (0, 1]" % where)
    return {
        "tol": _positive(_get(raw, "tol", where, "number", False, tol_default), where + ".tol"),
        "max_iter": int(max_iter),
        "damping": float(damping),
    }


def _validate_well(raw: dict, where: str) -> dict:
    _check_keys(raw, ["type", "dimension", "coupling", "terms"], where)
    kind = _get(raw, "type", where, "string")
    if kind not in WELL_REGISTRY:
        raise SchemaError(
            "%s: unknown well type %r (available: %s)"
            % (where, kind, ", ".join(sorted(WELL_REGISTRY)))
        )
    d = _get(raw, "dimension", where, "int", False, 1)
    if d < 1:
        raise SchemaError("%s.dimension must be >= 1" % where)
    out = {
        "type": kind,
        "dimension": int(d),
        "coupling": _positive(_get(raw, "coupling", where, "number", False, 1.0), where + ".coupling"),
        "terms": None,
    }
    if kind == "trig_polynomial":
        terms = _get(raw, "terms", where, "array")
        parsed = []
        for i, t in enumerate(terms):
            tw = "%s.terms[%d]" % (where, i)
            if not isinstance(t, dict):
                raise SchemaError(tw + ": each term must be a table")
            _check_keys(t, ["c", "k", "phase"], tw)
            parsed.append(
                {
                    "c": float(_get(t, "c", tw, "number")),
                    "k": _req_vector(t, "k", d, tw),
                    "phase": float(_get(t, "phase", tw, "number", False, 0.0)),
                }
            )
        if not parsed:
            raise SchemaError(where + ".terms must not be empty")
        out["terms"] = parsed
    elif "terms" in raw:
        raise SchemaError("%s: 'terms' only applies to trig_polynomial wells" % where)
    return out


def _validate_interaction(raw: dict, where: str) -> dict:
    _check_keys(raw, ["type", "dimension"], where)
    kind = _get(raw, "type", where, "string")
    if kind not in INTERACTION_REGISTRY:
        raise SchemaError(
            "%s: unknown interaction type %r (available: %s)"
            % (where, kind, ", ".join(sorted(INTERACTION_REGISTRY)))
        )
    d = _get(raw, "dimension", where, "int", False, 1)
    if d < 1:
        raise SchemaError("%s.dimension must be >= 1" % where)
    return {"type": kind, "dimension": int(d)}


def _validate_kam(raw: dict, name: str) -> dict:
    _check_keys(raw, ["schema_version", "kind", "name", "frequency", "potential", "hull", "diophantine", "sweep"], "scenario")
    freq_raw = _get(raw, "frequency", "scenario", "table")
    _check_keys(freq_raw, ["alphas"], "[frequency]")
    alphas = _num_list(freq_raw, "alphas", "[frequency]", min_len=1)
    rank = len(alphas)

    pot_raw = _get(raw, "potential", "scenario", "table")
    _check_keys(pot_raw, ["modes"], "[potential]")
    modes_raw = _get(pot_raw, "modes", "[potential]", "array")
    modes = []
    for i, mode in enumerate(modes_raw):
        mw = "[potential].modes[%d]" % i
        if not isinstance(mode, dict):
            raise SchemaError(mw + ": each mode must be a table")
        _check_keys(mode, ["k", "amplitude", "phase"], mw)
        k = _int_list(mode, "k", mw)
        if len(k) != rank:
            raise SchemaError("%s: k must have %d components" % (mw, rank))
        modes.append(
            {
                "k": k,
                "amplitude": float(_get(mode, "amplitude", mw, "number")),
                "phase": float(_get(mode, "phase", mw, "number", False, 0.0)),
            }
        )

    hull_raw = _get(raw, "hull", "scenario", "table")
    _check_keys(hull_raw, ["omega", "cutoff", "tol", "max_iter", "damping", "oversample", "betas"], "[hull]")
    cutoff = _get(hull_raw, "cutoff", "[hull]", "int")
    if cutoff < 1:
        raise SchemaError("[hull].cutoff must be >= 1")
    oversample = _get(hull_raw, "oversample", "[hull]", "int", False, 4)
    if oversample < 1:
        raise SchemaError("[hull].oversample must be >= 1")
    hull = {
        "omega": _positive(_get(hull_raw, "omega", "[hull]", "number"), "[hull].omega"),
        "cutoff": int(cutoff),
        "tol": _positive(_get(hull_raw, "tol", "[hull]", "number", False, 1e-10), "[hull].tol"),
        "max_iter": int(_get(hull_raw, "max_iter", "[hull]", "int", False, 40)),
        "damping": float(_get(hull_raw, "damping", "[hull]", "number", False, 1.0)),
        "oversample": int(oversample),
        "betas": _num_list(hull_raw, "betas", "[hull]", False, [0.0], min_len=0) or [0.0],
    }

    dio_raw = _get(raw, "diophantine", "scenario", "table", False, {})
    _check_keys(dio_raw, ["nu", "tau", "k_max", "weights"], "[diophantine]")
    dio = {
        "nu": _positive(_get(dio_raw, "nu", "[diophantine]", "number", False, 0.01), "[diophantine].nu"),
        "tau": _positive(_get(dio_raw, "tau", "[diophantine]", "number", False, 1.0), "[diophantine].tau"),
        "k_max": int(_get(dio_raw, "k_max", "[diophantine]", "int", False, max(10, cutoff))),
        "weights": _num_list(dio_raw, "weights", "[diophantine]", False, None),
    }
    if dio["weights"] is not None and len(dio["weights"]) != rank:
        raise SchemaError("[diophantine].weights must have one entry per frequency")

    sweep = _validate_sweep(_get(raw, "sweep", "scenario", "table"), "[sweep]", allow_quotients=True)
    if not sweep["windows"] and not sweep["quotient_ks"]:
        raise SchemaError("[sweep]: need windows, quotient_ks, or both")
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "kam",
        "name": name,
        "frequency": {"alphas": alphas},
        "potential": {"modes": modes},
        "hull": hull,
        "diophantine": dio,
        "sweep": sweep,
    }


def _validate_ai(raw: dict, name: str) -> dict:
    _check_keys(
        raw,
        ["schema_version", "kind", "name", "well", "interaction", "addresses", "zero_set", "aubry", "uniqueness", "solve", "sweep"],
        "scenario",
    )
    well = _validate_well(_get(raw, "well", "scenario", "table"), "[well]")
    interaction = _validate_interaction(_get(raw, "interaction", "scenario", "table"), "[interaction]")
    d = well["dimension"]
    if interaction["dimension"] != d:
        raise SchemaError("[interaction].dimension must match [well].dimension")

    addr_raw = _get(raw, "addresses", "scenario", "table")
    _check_keys(addr_raw, ["rho", "window", "offset", "substitutions", "periodic_substitutions"], "[addresses]")
    window = _int_list(addr_raw, "window", "[addresses]")
    if len(window) != 2 or window[1] - window[0] + 1 < 3:
        raise SchemaError("[addresses].window must be [n0, n1] with at least 3 sites")
    subs = []
    for i, s in enumerate(_get(addr_raw, "substitutions", "[addresses]", "array", False, [])):
        sw = "[addresses].substitutions[%d]" % i
        if not isinstance(s, dict):
            raise SchemaError(sw + ": must be a table")
        _check_keys(s, ["site", "value"], sw)
        subs.append({"site": _get(s, "site", sw, "int"), "value": _req_vector(s, "value", d, sw)})
    periodic = []
    for i, p in enumerate(_get(addr_raw, "periodic_substitutions", "[addresses]", "array", False, [])):
        pw = "[addresses].periodic_substitutions[%d]" % i
        if not isinstance(p, dict):
            raise SchemaError(pw + ": must be a table")
        _check_keys(p, ["offset", "period", "shift"], pw)
        period = _get(p, "period", pw, "int")
        if period < 1:
            raise SchemaError(pw + ".period must be >= 1")
        periodic.append(
            {
                "offset": _get(p, "offset", pw, "int"),
                "period": int(period),
                "shift": _req_vector(p, "shift", d, pw),
            }
        )
    addresses = {
        "rho": _req_vector(addr_raw, "rho", d, "[addresses]"),
        "window": [int(window[0]), int(window[1])],
        "offset": _vector(addr_raw["offset"], d, "[addresses].offset") if "offset" in addr_raw else None,
        "substitutions": subs,
        "periodic_substitutions": periodic,
    }

    zs_raw = _get(raw, "zero_set", "scenario", "table")
    _check_keys(zs_raw, ["spacings", "offsets"], "[zero_set]")
    spacings = _num_list(zs_raw, "spacings", "[zero_set]", min_len=1)
    if len(spacings) != d:
        raise SchemaError("[zero_set].spacings must have %d components" % d)
    offsets = None
    if "offsets" in zs_raw:
        offsets = [_vector(o, d, "[zero_set].offsets[%d]" % i) for i, o in enumerate(_get(zs_raw, "offsets", "[zero_set]", "array"))]

    ab_raw = _get(raw, "aubry", "scenario", "table")
    _check_keys(ab_raw, ["R", "r", "m", "grid_step", "domain", "zero_tol", "pair_samples", "seed"], "[aubry]")
    dom_raw = _get(ab_raw, "domain", "[aubry]", "array")
    if len(dom_raw) != 2:
        raise SchemaError("[aubry].domain must be [lo, hi]")
    dom = [_vector(dom_raw[0], d, "[aubry].domain[0]"), _vector(dom_raw[1], d, "[aubry].domain[1]")]
    zero_tol = _get(ab_raw, "zero_tol", "[aubry]", "number", False, None)
    aubry = {
        "R": _positive(_get(ab_raw, "R", "[aubry]", "number"), "[aubry].R"),
        "r": _positive(_get(ab_raw, "r", "[aubry]", "number"), "[aubry].r"),
        "m": _positive(_get(ab_raw, "m", "[aubry]", "number"), "[aubry].m"),
        "grid_step": _positive(_get(ab_raw, "grid_step", "[aubry]", "number", False, 1e-3), "[aubry].grid_step"),
        "domain": dom,
        "zero_tol": None if zero_tol is None else float(zero_tol),
        "pair_samples": int(_get(ab_raw, "pair_samples", "[aubry]", "int", False, 4000)),
        "seed": int(_get(ab_raw, "seed", "[aubry]", "int", False, 0)),
    }

    uniq = None
    if "uniqueness" in raw:
        uq_raw = _get(raw, "uniqueness", "scenario", "table")
        _check_keys(uq_raw, ["trials", "delta", "seed"], "[uniqueness]")
        trials = _get(uq_raw, "trials", "[uniqueness]", "int", False, 5)
        if trials < 0:
            raise SchemaError("[uniqueness].trials must be >= 0")
        uniq = {
            "trials": int(trials),
            "delta": _positive(_get(uq_raw, "delta", "[uniqueness]", "number"), "[uniqueness].delta"),
            "seed": int(_get(uq_raw, "seed", "[uniqueness]", "int", False, 0)),
        }

    solve = _validate_solve(_get(raw, "solve", "scenario", "table", False, {}), "[solve]", 1e-12)
    sweep = _validate_sweep(_get(raw, "sweep", "scenario", "table"), "[sweep]")
    if not sweep["windows"]:
        raise SchemaError("[sweep].windows must not be empty")
    if max(sweep["windows"]) > window[1] - window[0] + 1:
        raise SchemaError("[sweep]: windows exceed the solve window size")
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "anti_integrable",
        "name": name,
        "well": well,
        "interaction": interaction,
        "addresses": addresses,
        "zero_set": {"spacings": spacings, "offsets": offsets},
        "aubry": aubry,
        "uniqueness": uniq,
        "solve": solve,
        "sweep": sweep,
    }


def _validate_custom(raw: dict, name: str) -> dict:
    _check_keys(raw, ["schema_version", "kind", "name", "well", "interaction", "window", "solve", "sweep"], "scenario")
    interaction = _validate_interaction(_get(raw, "interaction", "scenario", "table"), "[interaction]")
    d = interaction["dimension"]
    well = None
    if "well" in raw:
        well = _validate_well(_get(raw, "well", "scenario", "table"), "[well]")
        if well["dimension"] != d:
            raise SchemaError("[well].dimension must match [interaction].dimension")

    w_raw = _get(raw, "window", "scenario", "table")
    _check_keys(w_raw, ["start", "values", "left", "right", "rho"], "[window]")
    values_raw = _get(w_raw, "values", "[window]", "array")
    if len(values_raw) < 3:
        raise SchemaError("[window].values needs at least 3 sites")
    values = [_vector(v, d, "[window].values[%d]" % i) for i, v in enumerate(values_raw)]
    win = {
        "start": int(_get(w_raw, "start", "[window]", "int", False, 0)),
        "values": values,
        "left": _req_vector(w_raw, "left", d, "[window]"),
        "right": _req_vector(w_raw, "right", d, "[window]"),
        "rho": _req_vector(w_raw, "rho", d, "[window]"),
    }

    solve = _validate_solve(_get(raw, "solve", "scenario", "table", False, {}), "[solve]", 1e-10)
    sweep = None
    if "sweep" in raw:
        sweep = _validate_sweep(_get(raw, "sweep", "scenario", "table"), "[sweep]")
        if sweep["windows"] and max(sweep["windows"]) > len(values):
            raise SchemaError("[sweep]: windows exceed the configured window size")
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "custom_window",
        "name": name,
        "well": well,
        "interaction": interaction,
        "window": win,
        "solve": solve,
        "sweep": sweep,
    }


def validate_scenario(raw: dict, default_name: str = "scenario") -> dict:
    """Normalize a parsed scenario; raises SchemaError on any shape problem."""
    if not isinstance(raw, dict):
        raise SchemaError("scenario root must be a table")
    version = _get(raw, "schema_version", "scenario", "int")
    if version != SCHEMA_VERSION:
        raise SchemaError("unsupported schema_version %r (expected %d)" % (version, SCHEMA_VERSION))
    kind = _get(raw, "kind", "scenario", "string")
    name = _get(raw, "name", "scenario", "string", False, default_name)
    if kind == "kam":
        return _validate_kam(raw, name)
    if kind == "anti_integrable":
        return _validate_ai(raw, name)
    if kind == "custom_window":
        return _validate_custom(raw, name)
    raise SchemaError("kind must be one of %s, got %r" % (", ".join(KINDS), kind))


def resolve_scenario(arg: str):
    """Path or bundled name -> (display name, traversable to read)."""
    p = Path(arg)
    if p.exists():
        return p.stem, p
    if not p.suffix and os.sep not in arg and "/" not in arg:
        candidate = resources.files(__package__).joinpath("scenarios", arg + ".toml")
        if candidate.is_file():
            return arg, candidate
    raise SchemaError("scenario not found: %s (no such file or bundled name)" % arg)


def load_scenario(arg: str) -> dict:
    name, source = resolve_scenario(arg)
    try:
        raw = tomllib.loads(source.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError("parse error in %s: %s" % (arg, exc)) from exc
    return validate_scenario(raw, name)


# ---------------------------------------------------------------------------
# pipeline execution


def _build_well(cfg: dict):
    factory = WELL_REGISTRY[cfg["type"]]
    if cfg["type"] == "trig_polynomial":
        terms = [(t["c"], tuple(t["k"]), t["phase"]) for t in cfg["terms"]]
        return factory(cfg["dimension"], terms, cfg["coupling"])
    return factory(cfg["dimension"], cfg["coupling"])


def _build_interaction(cfg: dict):
    return INTERACTION_REGISTRY[cfg["type"]](cfg["dimension"])


def _row_dict(row) -> dict:
    return {
        "window": row.window,
        "abs_min": row.abs_min,
        "lambda_min": row.lambda_min,
        "lambda_max": row.lambda_max,
        "gap_ratio": row.gap_ratio,
    }


def _run_kam(sc: dict) -> dict:
    module = FrequencyModule(tuple(sc["frequency"]["alphas"]))
    V = QuasiPeriodicPotential(
        module, tuple((tuple(m["k"]), m["amplitude"], m["phase"]) for m in sc["potential"]["modes"])
    )
    hp, dp, sp = sc["hull"], sc["diophantine"], sc["sweep"]
    dio = diophantine_check(
        hp["omega"], module, nu=dp["nu"], tau=dp["tau"], k_max=dp["k_max"], weights=dp["weights"]
    )
    h = hull_newton_solve(
        V,
        hp["omega"],
        hp["cutoff"],
        tol=hp["tol"],
        max_iter=hp["max_iter"],
        damping=hp["damping"],
        oversample=hp["oversample"],
        nu=dp["nu"],
        tau=dp["tau"],
    )
    _, res_sup = hull_residual(h, V, oversample=hp["oversample"])
    nd = nondegeneracy_report(h)
    a_sup = 2.0 + V.derivative_sup_bound(2)
    M = kam_eta_bound(a_sup, nd.n_plus_bound)
    L = scalar_fk_lagrangian(V)

    sweeps = []
    for beta in hp["betas"]:
        qrows = [kam_truncation_data(L, h, beta, k) for k in sp["quotient_ks"]]

        def source(size, beta=beta):
            n0 = -(size // 2)
            return sample_configuration(h, beta, n0, n0 + size - 1)

        rep = gap_sweep(
            L,
            source,
            sp["windows"],
            tol=sp["tol"],
            quotients=qrows or None,
            decay_factor=sp["decay_factor"],
            stability=sp["stability"],
            floor=sp["floor"],
        )
        sweeps.append(
            {
                "beta": beta,
                "verdict": rep.verdict,
                "rows": [_row_dict(r) for r in rep.rows],
                "quotients": [
                    {
                        "k": q.k,
                        "q": q.q,
                        "eta_norm": q.eta_norm,
                        "xi_norm": q.xi_norm,
                        "eta_within_bound": bool(q.eta_norm <= M + 1e-12),
                    }
                    for q in qrows
                ],
                "ai_bound": None,
                "bound_ok": None,
            }
        )
    return {
        "diophantine": {
            "nu": dio.nu,
            "tau": dio.tau,
            "k_max": dio.k_max,
            "n_max": dio.n_max,
            "weights": list(dio.weights),
            "worst_ratio": dio.worst_ratio,
            "worst_k": list(dio.worst_k),
            "worst_n": dio.worst_n,
            "passed": dio.passed,
        },
        "hull": {
            "omega": h.omega,
            "cutoff": h.cutoff,
            "residual_sup": res_sup,
            "norm_l2": h.norm_l2(),
            "coefficients": [
                {"k": list(k), "re": c.real, "im": c.imag} for k, c in h.coefficient_table()
            ],
        },
        "nondegeneracy": {
            "n_plus": nd.n_plus,
            "n_minus": nd.n_minus,
            "c_value": nd.c_value,
            "grid_size": nd.grid_size,
            "l_min_abs": nd.l_min_abs,
            "n_plus_bound": nd.n_plus_bound,
        },
        "eta_bound": {"a_sup": a_sup, "n_plus_bound": nd.n_plus_bound, "M": M},
        "ai_bound": None,
        "sweeps": sweeps,
    }


def _generate_addresses(sc: dict, zero_set) -> np.ndarray:
    a = sc["addresses"]
    n0, n1 = a["window"]
    rho = np.asarray(a["rho"], dtype=float)
    sites = np.arange(n0 - 1, n1 + 2)
    base = sites[:, None] * rho[None, :]
    if a["offset"] is not None:
        base = base + np.asarray(a["offset"], dtype=float)
    z = zero_set.nearest(base)
    for p in a["periodic_substitutions"]:
        mask = np.mod(sites - p["offset"], p["period"]) == 0
        z[mask] = z[mask] + np.asarray(p["shift"], dtype=float)
    for s in a["substitutions"]:
        if not sites[0] <= s["site"] <= sites[-1]:
            raise SchemaError(
                "[addresses].substitutions: site %d outside the padded window [%d, %d]"
                % (s["site"], sites[0], sites[-1])
            )
        z[s["site"] - sites[0]] = np.asarray(s["value"], dtype=float)
    return z


def _certificate_dict(cert) -> dict:
    return {
        "R": cert.R,
        "r": cert.r,
        "m": cert.m,
        "grid_step": cert.grid_step,
        "domain": [list(cert.domain[0]), list(cert.domain[1])],
        "covering_ok": cert.covering_ok,
        "covering_worst": cert.covering_worst,
        "covering_witness": list(cert.covering_witness),
        "zeros_ok": cert.zeros_ok,
        "zeros_worst": cert.zeros_worst,
        "zeros_witness": list(cert.zeros_witness),
        "expansion_ok": cert.expansion_ok,
        "expansion_worst": cert.expansion_worst,
        "expansion_witness": list(cert.expansion_witness),
        "method": cert.method,
        "zero_points_checked": cert.zero_points_checked,
        "zero_tol": cert.zero_tol,
        "jacobian_min_singular": cert.jacobian_min_singular,
        "norm": cert.norm,
        "passed": cert.passed,
    }


def _build_certificate(sc: dict, well):
    ab = sc["aubry"]
    zero_set = SeparableLattice(
        np.asarray(sc["zero_set"]["spacings"], dtype=float),
        None if sc["zero_set"]["offsets"] is None else np.asarray(sc["zero_set"]["offsets"], dtype=float),
    )
    cert = check_aubry_criterion(
        well.gradient,
        zero_set,
        ab["R"],
        ab["r"],
        ab["m"],
        (np.asarray(ab["domain"][0]), np.asarray(ab["domain"][1])),
        grid_step=ab["grid_step"],
        psi_jacobian=well.hessian,
        zero_tol=ab["zero_tol"],
        pair_samples=ab["pair_samples"],
        seed=ab["seed"],
    )
    return zero_set, cert


def _run_ai(sc: dict) -> dict:
    well = _build_well(sc["well"])
    interaction = _build_interaction(sc["interaction"])
    zero_set, cert = _build_certificate(sc, well)
    if not cert.passed:
        warnings.warn("expansivity certificate failed; continuing without guarantees")
    addresses = _generate_addresses(sc, zero_set)
    n0, n1 = sc["addresses"]["window"]
    report = anti_integrable_solve(
        interaction,
        well,
        addresses,
        np.asarray(sc["addresses"]["rho"], dtype=float),
        cert,
        (n0, n1),
        tol=sc["solve"]["tol"],
        max_iter=sc["solve"]["max_iter"],
    )
    uniq = None
    if sc["uniqueness"] is not None and sc["uniqueness"]["trials"] > 0:
        uniq = dict(sc["uniqueness"])
        uniq["unique"] = uniqueness_probe(
            report, sc["uniqueness"]["delta"], sc["uniqueness"]["trials"], sc["uniqueness"]["seed"]
        )

    # operator-norm bound for the on-site block at the solved sites
    M_v = float(np.max(np.abs(np.linalg.eigvalsh(np.asarray(well.hessian(report.configuration.values))))))
    bound_info = None
    bound_value = None
    try:
        b = ai_gap_bound(well.coupling, cert.m, max(M_v, cert.m), report.K)
        bound_value = b.value
        bound_info = {
            "value": b.value,
            "interaction_norm_bound": b.interaction_norm_bound,
            "onsite_inverse_norm_bound": b.onsite_inverse_norm_bound,
            "m": cert.m,
            "M_v": max(M_v, cert.m),
            "K": report.K,
            "coupling": well.coupling,
        }
    except ValueError as exc:
        bound_info = {"error": str(exc)}
    sp = sc["sweep"]
    rep = gap_sweep(
        report.lagrangian,
        report.configuration,
        sp["windows"],
        tol=sp["tol"],
        ai_bound=bound_value,
        decay_factor=sp["decay_factor"],
        stability=sp["stability"],
        floor=sp["floor"],
    )
    return {
        "aubry": _certificate_dict(cert),
        "solve": {
            "window": [n0, n1],
            "residual_sup": report.residual_sup,
            "address_deviation": report.address_deviation,
            "distance_to_zero_set": report.distance_to_zero_set,
            "rotation_deviation": report.rotation_deviation,
            "bond_curvature_max": report.bond_curvature_max,
            "onsite_curvature_min": report.onsite_curvature_min,
            "K": report.K,
            "coupling": report.coupling,
            "threshold": report.threshold,
            "lambda_meets_threshold": report.lambda_meets_threshold,
            "compatible_with_rho": report.compatible_with_rho,
            "postconditions_ok": report.postconditions_ok,
            "warnings": list(report.warnings),
        },
        "uniqueness": uniq,
        "ai_bound": bound_info,
        "sweeps": [
            {
                "beta": None,
                "verdict": rep.verdict,
                "rows": [_row_dict(r) for r in rep.rows],
                "quotients": [],
                "ai_bound": rep.ai_bound,
                "bound_ok": list(rep.bound_ok) if rep.bound_ok is not None else None,
            }
        ],
    }


def _run_custom(sc: dict) -> dict:
    interaction = _build_interaction(sc["interaction"])
    well = _build_well(sc["well"]) if sc["well"] is not None else None
    L = Lagrangian(interaction, well)
    w = sc["window"]
    cfg = Configuration(
        w["start"],
        np.asarray(w["values"], dtype=float),
        np.asarray(w["rho"], dtype=float),
        Clamped(np.asarray(w["left"], dtype=float), np.asarray(w["right"], dtype=float)),
    )
    solved = newton_solve_window(
        L, cfg, tol=sc["solve"]["tol"], max_iter=sc["solve"]["max_iter"], damping=sc["solve"]["damping"]
    )
    sweeps = []
    if sc["sweep"] is not None and sc["sweep"]["windows"]:
        sp = sc["sweep"]
        rep = gap_sweep(
            L,
            solved,
            sp["windows"],
            tol=sp["tol"],
            decay_factor=sp["decay_factor"],
            stability=sp["stability"],
            floor=sp["floor"],
        )
        sweeps.append(
            {
                "beta": None,
                "verdict": rep.verdict,
                "rows": [_row_dict(r) for r in rep.rows],
                "quotients": [],
                "ai_bound": None,
                "bound_ok": None,
            }
        )
    return {
        "solve": {
            "residual_sup": residual_sup(L, solved),
            "values": solved.values.tolist(),
            "start": solved.start,
        },
        "ai_bound": None,
        "sweeps": sweeps,
    }


_PIPELINES = {"kam": _run_kam, "anti_integrable": _run_ai, "custom_window": _run_custom}


def execute(scenario: dict) -> dict:
    """Run the pipeline for a validated scenario; returns the results tree."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        results = _PIPELINES[scenario["kind"]](scenario)
    results["warnings"] = [str(w.message) for w in caught]
    return results


# ---------------------------------------------------------------------------
# serialization


def _pyify(x):
    if isinstance(x, dict):
        return {k: _pyify(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_pyify(v) for v in x]
    if isinstance(x, np.ndarray):
        return _pyify(x.tolist())
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _write_bytes(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _write_json(path: Path, obj) -> None:
    _write_bytes(path, (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8"))


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    lines.extend(",".join(_fmt(x) for x in row) for row in rows)
    _write_bytes(path, ("\n".join(lines) + "\n").encode("utf-8"))


GAP_CSV_HEADER = "window_or_k,abs_min,lambda_min,lambda_max,G,quotient_q,bound"


def _gap_csv_rows(report: dict):
    """CSV rows lifted verbatim from the report tree (no recomputation)."""
    rows = []
    results = report.get("results") or {}
    for sweep in results.get("sweeps", []):
        bound = sweep.get("ai_bound")
        for r in sweep.get("rows", []):
            rows.append(
                [r["window"], r["abs_min"], r["lambda_min"], r["lambda_max"], r["gap_ratio"], None, bound]
            )
        for q in sweep.get("quotients", []):
            rows.append([q["k"], None, None, None, None, q["q"], None])
    return rows


def _overall_verdict(results: Optional[dict]) -> Optional[str]:
    if not results:
        return None
    verdicts = [s["verdict"] for s in results.get("sweeps", [])]
    if not verdicts:
        return None
    return verdicts[0] if all(v == verdicts[0] for v in verdicts) else "mixed"


def _error_info(exc: BaseException):
    if isinstance(exc, DegeneracyError):
        return "degeneracy_error", 2
    if isinstance(exc, ConvergenceError):
        return "convergence_error", 2
    if isinstance(exc, CapacityError):
        return "capacity_error", 2
    if isinstance(exc, PreconditionError):
        return "precondition_error", 3
    if isinstance(exc, SchemaError):
        return "schema_error", 3
    if isinstance(exc, ValueError):
        return "invalid_parameter", 3
    if isinstance(exc, OSError):
        return "io_error", 3
    raise exc


def run_scenario(scenario_arg: str, out_dir: Optional[str] = None, threads: int = 1) -> int:
    """Execute a scenario and write report.json, gap.csv, and meta.json.

    Returns the process exit code; errors of the documented classes are
    recorded inside report.json and mapped to exit codes 2 (numeric) or
    3 (schema/precondition).
    """
    started = time.time()
    try:
        display_name, _ = resolve_scenario(scenario_arg)
    except SchemaError:
        display_name = Path(scenario_arg).stem or "scenario"
    out = Path(out_dir) if out_dir is not None else Path.cwd() / (display_name + ".out")

    scenario = None
    results = None
    error = None
    code = 0
    try:
        scenario = load_scenario(scenario_arg)
        results = execute(scenario)
    except Exception as exc:  # noqa: BLE001 - unexpected types re-raised below
        error_code, code = _error_info(exc)
        error = {"code": error_code, "message": str(exc)}
        if isinstance(exc, ConvergenceError) and exc.residual_history is not None:
            error["residual_history"] = [float(x) for x in exc.residual_history]

    report = _pyify(
        {
            "schema_version": SCHEMA_VERSION,
            "kind": scenario["kind"] if scenario else None,
            "name": scenario["name"] if scenario else display_name,
            "scenario": scenario,
            "results": results,
            "verdict": _overall_verdict(results),
            "error": error,
        }
    )
    _write_json(out / "report.json", report)
    _write_csv(out / "gap.csv", GAP_CSV_HEADER, _gap_csv_rows(report))
    _write_json(
        out / "meta.json",
        {
            "elapsed_seconds": time.time() - started,
            "generated_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
            "scenario_argument": scenario_arg,
            "threads_requested": threads,
            "versions": {
                "python": sys.version.split()[0],
                "numpy": np.__version__,
                "scipy": _scipy_version(),
                "package": _package_version(),
            },
        },
    )
    if error is not None:
        print("error [%s]: %s" % (error["code"], error["message"]), file=sys.stderr)
    else:
        verdict = report["verdict"] or "no sweep requested"
        print("%s: %s" % (report["name"], verdict))
    print("wrote %s" % (out / "report.json"))
    return code


def _package_version() -> str:
    from . import __version__

    return __version__


def _scipy_version() -> str:
    import scipy

    return scipy.__version__


def emit_plotdata(report_arg: str, out_dir: Optional[str] = None) -> int:
    """Extract plot-ready CSV series from a report.json.

    Writes qk.csv (k, q_k, reference 2/sqrt(2k+1)), absmin_vs_N.csv, and
    gap_vs_N.csv (with the constant bound overlay when present).  Missing
    series yield header-only files.
    """
    path = Path(report_arg)
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        print("error [schema_error]: cannot read %s: %s" % (report_arg, exc), file=sys.stderr)
        return 3
    except json.JSONDecodeError as exc:
        print("error [parse_error]: %s is not valid JSON: %s" % (report_arg, exc), file=sys.stderr)
        return 3
    out = Path(out_dir) if out_dir is not None else path.parent

    qk_rows = []
    absmin_rows = []
    gap_rows = []
    results = report.get("results") or {}
    for sweep in results.get("sweeps", []):
        bound = sweep.get("ai_bound")
        for q in sweep.get("quotients", []):
            qk_rows.append([q["k"], q["q"], 2.0 / math.sqrt(2.0 * q["k"] + 1.0)])
        for r in sweep.get("rows", []):
            absmin_rows.append([r["window"], r["abs_min"]])
            gap_rows.append([r["window"], r["gap_ratio"], bound])
    _write_csv(out / "qk.csv", "k,q_k,reference", qk_rows)
    _write_csv(out / "absmin_vs_N.csv", "N,abs_min", absmin_rows)
    _write_csv(out / "gap_vs_N.csv", "N,G,bound", gap_rows)
    print("wrote %s" % (out / "qk.csv"))
    return 0


def check_aubry_command(scenario_arg: str) -> int:
    """Run only the expansivity certificate of an anti-integrable scenario."""
    try:
        scenario = load_scenario(scenario_arg)
        if scenario["kind"] != "anti_integrable":
            raise SchemaError("check-aubry needs an anti_integrable scenario, got kind %r" % scenario["kind"])
        well = _build_well(scenario["well"])
        _, cert = _build_certificate(scenario, well)
    except Exception as exc:  # noqa: BLE001
        error_code, code = _error_info(exc)
        print("error [%s]: %s" % (error_code, exc), file=sys.stderr)
        return code
    print("condition 1 covering (R=%g): %s (worst %.6g at %s)" % (cert.R, "PASS" if cert.covering_ok else "FAIL", cert.covering_worst, list(cert.covering_witness)))
    print("condition 2 zeros (tol=%g): %s (worst %.6g at %s)" % (cert.zero_tol, "PASS" if cert.zeros_ok else "FAIL", cert.zeros_worst, list(cert.zeros_witness)))
    print("condition 3 expansion (m=%g): %s (worst %.6g, method %s)" % (cert.m, "PASS" if cert.expansion_ok else "FAIL", cert.expansion_worst, cert.method))
    print("certificate: %s" % ("PASS" if cert.passed else "FAIL"))
    return 0


def diophantine_command(scenario_arg: str) -> int:
    """Run only the small-divisor scan of a kam scenario."""
    try:
        scenario = load_scenario(scenario_arg)
        if scenario["kind"] != "kam":
            raise SchemaError("diophantine needs a kam scenario, got kind %r" % scenario["kind"])
        module = FrequencyModule(tuple(scenario["frequency"]["alphas"]))
        dp = scenario["diophantine"]
        dio = diophantine_check(
            scenario["hull"]["omega"], module, nu=dp["nu"], tau=dp["tau"], k_max=dp["k_max"], weights=dp["weights"]
        )
    except Exception as exc:  # noqa: BLE001
        error_code, code = _error_info(exc)
        print("error [%s]: %s" % (error_code, exc), file=sys.stderr)
        return code
    print(
        "worst scaled ratio %.6g at k=%s, n=%d (nu=%g, tau=%g, k_max=%d)"
        % (dio.worst_ratio, list(dio.worst_k), dio.worst_n, dio.nu, dio.tau, dio.k_max)
    )
    print("diophantine: %s" % ("PASS" if dio.passed else "FAIL"))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fkgap",
        description="Equilibria and phonon-gap certificates for quasi-periodic chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write report.json / gap.csv / meta.json")
    p_run.add_argument("scenario", help="scenario file path, or a bundled scenario name")
    p_run.add_argument("--out", default=None, help="output directory (default ./<scenario>.out)")
    p_run.add_argument(
        "--threads",
        type=int,
        default=1,
        help="accepted for interface compatibility; execution is sequential for determinism",
    )

    p_plot = sub.add_parser("plotdata", help="extract plot-ready CSV series from a report.json")
    p_plot.add_argument("report", help="path to a report.json produced by `fkgap run`")
    p_plot.add_argument("--out", default=None, help="output directory (default: next to the report)")

    p_aubry = sub.add_parser("check-aubry", help="run only the expansivity certificate of a scenario")
    p_aubry.add_argument("scenario")

    p_dio = sub.add_parser("diophantine", help="run only the small-divisor scan of a scenario")
    p_dio.add_argument("scenario")

    args = parser.parse_args(argv)
    if args.command == "run":
        return run_scenario(args.scenario, args.out, threads=args.threads)
    if args.command == "plotdata":
        return emit_plotdata(args.report, args.out)
    if args.command == "check-aubry":
        return check_aubry_command(args.scenario)
    return diophantine_command(args.scenario)


if __name__ == "__main__":
    sys.exit(main())
