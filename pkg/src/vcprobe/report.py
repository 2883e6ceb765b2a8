"""Configuration handling and the estimate / sweep pipelines behind the CLI."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from importlib import resources

import jsonschema
import numpy as np
from referencing import Registry, Resource

from . import __version__
from .bounds import compute_constants, delta_threshold, estimator_deviation_bound
from .classifiers import make_family
from .errors import ConfigError, DomainError
from .estimator import FitConfig, fit_h, residual_curve
from .simulation import DataSpec, DesignGrid, SimulationPlan, XiSamples, mix64, simulate_xi

DEFAULTS = {
    "p": 1,
    "data": {"features": "uniform", "label_prob": 0.5},
    "grid": None,
    "h_guess": 10.0,
    "k": 10,
    "M": 50.0,
    "h_lo": 0.1,
    "coarse_step": 0.25,
    "tol": 1e-4,
    "master_seed": 0,
    "delta_factor": 1.05,
}
#: keys that only affect how a run executes, never what it computes; kept out of reports
EXECUTION_KEYS = ("workers", "out")


def load_schema(name):
    return json.loads(resources.files("vcprobe").joinpath("schemas", name).read_text("utf-8"))


def _registry():
    cfg = load_schema("config.schema.json")
    return Registry().with_resource("vcprobe/config.schema.json", Resource.from_contents(cfg))


def _validate(instance, schema_name):
    schema = load_schema(schema_name)
    validator = jsonschema.Draft202012Validator(schema, registry=_registry())
    errors = sorted(validator.iter_errors(instance), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"{schema_name}: {where}: {err.message}")


def validate_report(report: dict):
    _validate(report, "report.schema.json")


def resolve_config(raw: dict) -> dict:
    """Validate `raw` and return a copy with every default materialised."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object")
    _validate(raw, "config.schema.json")
    cfg = copy.deepcopy(DEFAULTS)
    for key, value in raw.items():
        if key == "data":
            cfg["data"].update(value)
        else:
            cfg[key] = copy.deepcopy(value)
    family = dict(cfg["family"])
    if family["name"] == "halfspace":
        if "p" in family and "p" in raw and family["p"] != raw["p"]:
            raise ConfigError(f"family p={family['p']} disagrees with top-level p={raw['p']}")
        family.setdefault("p", cfg["p"])
        cfg["p"] = family["p"]
        family.setdefault("restarts", 32)
        family.setdefault("epochs", 200)
    elif family["name"] == "interval1d":
        family.setdefault("polarity", "both")
    elif family["name"] == "constant":
        family.setdefault("label", 0)
    elif family["name"] == "external":
        family.setdefault("timeout", 60.0)
        family.setdefault("vc_dimension", None)
    cfg["family"] = family
    for key in ("M", "h_lo", "h_guess", "coarse_step", "tol", "delta_factor"):
        cfg[key] = float(cfg[key])
    if cfg["grid"] is None:
        cfg["grid"] = list(DesignGrid.geometric(cfg["h_guess"], cfg["k"]).points)
    try:
        grid = DesignGrid(tuple(cfg["grid"]))
        FitConfig(cfg["M"], cfg["coarse_step"], cfg["tol"])
        make_family(family)
        DataSpec.from_dict(cfg["data"])
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    cfg["k"] = grid.k
    if cfg["h_lo"] >= cfg["M"]:
        raise ConfigError(f"h_lo={cfg['h_lo']} must be below M={cfg['M']}")
    return cfg


def report_config(cfg: dict) -> dict:
    return {k: v for k, v in cfg.items() if k not in EXECUTION_KEYS}


def plan_from_config(cfg: dict) -> SimulationPlan:
    return SimulationPlan(
        grid=DesignGrid(tuple(cfg["grid"])),
        m=cfg["m"],
        family=make_family(cfg["family"]),
        p=cfg["p"],
        master_seed=cfg["master_seed"],
        data_spec=DataSpec.from_dict(cfg["data"]),
    )


def jsonable(obj):
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def build_report(cfg: dict, xi: XiSamples, constants=None) -> dict:
    """Fit, constants, delta selection and deviation bound for one set of samples."""
    fit = fit_h(xi, cfg["grid"], FitConfig(cfg["M"], cfg["coarse_step"], cfg["tol"]))
    if constants is None:
        constants = compute_constants(cfg["grid"], cfg["M"], cfg["h_lo"])
    m, k = xi.m, xi.k
    delta = cfg["delta_factor"] * delta_threshold(m, k, constants.c1.value)
    dev = estimator_deviation_bound(delta, m, k, constants.c2, constants.c1.value)
    family = make_family(cfg["family"])

    warnings = []
    if fit.boundary_flag:
        side = "M" if fit.h_hat >= cfg["M"] - cfg["coarse_step"] else "0"
        warnings.append(f"h_hat={fit.h_hat:.6g} is at the search boundary {side}"
                        + ("; the assumption h* <= M may be violated" if side == "M" else ""))
    if fit.on_plateau:
        warnings.append("h_hat lies on the plateau where Phi is 1 at every design point; "
                        "it is only a lower bound on the dimension")
    if dev.prob >= 1.0:
        warnings.append("deviation bound is vacuous (probability clamped to 1)")

    resid = residual_curve(fit, xi)
    curve = [{"n": n, "xi": float(x), "phi": float(f), "residual": float(r)}
             for n, x, f, r in zip(xi.points, xi.means, fit.fitted_curve, resid)]
    fit_dict = fit.to_dict()
    fit_dict.update(curve=curve, warnings=warnings,
                    known_vc_dimension=family.known_vc_dimension)
    deviation = dev.to_dict()
    deviation["delta_factor"] = cfg["delta_factor"]
    report = {
        "config": report_config(cfg),
        "xi": {
            "m": m, "k": k, "points": list(xi.points), "summary": xi.summary(),
            "samples_sha256": hashlib.sha256(xi.to_csv().encode()).hexdigest(),
        },
        "fit": fit_dict,
        "constants": constants.to_dict(),
        "deviation": deviation,
        "varphi": dev.prob,
        "version": __version__,
    }
    return jsonable(report)


def run_estimate(cfg: dict, workers=None, constants=None):
    """Simulate, fit and bound. Returns (report dict, samples)."""
    xi = simulate_xi(plan_from_config(cfg), workers)
    return build_report(cfg, xi, constants), xi


def curve_csv(report: dict) -> str:
    lines = ["n,xi,phi,residual"]
    for row in report["fit"]["curve"]:
        lines.append(f"{row['n']},{row['xi']!r},{row['phi']!r},{row['residual']!r}")
    return "\n".join(lines) + "\n"


def sweep_seed(master_seed: int, r: int) -> int:
    return mix64(master_seed ^ mix64(r))


def run_sweep(cfg: dict, repeats: int, workers=None) -> dict:
    """Repeat the estimate with derived seeds and compare the spread of h_hat to
    the concentration bound at the report's delta."""
    if repeats < 2:
        raise ConfigError(f"a sweep needs at least 2 repeats, got {repeats}")
    constants = compute_constants(cfg["grid"], cfg["M"], cfg["h_lo"])
    seeds, h_hats, deviation = [], [], None
    for r in range(repeats):
        sub = dict(cfg, master_seed=sweep_seed(cfg["master_seed"], r))
        rep, _ = run_estimate(sub, workers, constants)
        seeds.append(sub["master_seed"])
        h_hats.append(rep["fit"]["h_hat"])
        deviation = rep["deviation"]
    h = np.asarray(h_hats)
    mean = float(h.mean())
    delta = deviation["delta"]
    exceed = int(np.count_nonzero(np.abs(h - mean) > delta))
    freq = exceed / repeats
    prob = deviation["prob"]
    note = ("bound is vacuous at this scale (clamped to 1); the comparison only checks "
            "non-violation" if prob >= 1.0 else "bound is informative")
    return jsonable({
        "config": report_config(cfg),
        "repeats": repeats,
        "seeds": seeds,
        "h_hats": h_hats,
        "mean": mean,
        "std": float(h.std(ddof=1)),
        "delta": delta,
        "exceed_count": exceed,
        "exceed_frequency": freq,
        "bound": {"prob_raw": deviation["prob_raw"], "prob": prob, "valid": deviation["valid"]},
        "within_bound": bool(freq <= prob),
        "tightness_gap": prob - freq,
        "note": note,
        "version": __version__,
    })
