"""TOML experiment configuration: loading, validation and object construction.

See ``README.md`` for the schema.  Validation never raises; it returns a
list of diagnostics, each prefixed with the dotted path of the offending
key.
"""
from __future__ import annotations

import copy
import hashlib
import json
import math
import sys
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import dynamics
from .errors import ConfigError

__all__ = [
    "MAP_FAMILIES",
    "POTENTIAL_FAMILIES",
    "SAMPLING_SUBCOMMANDS",
    "load_config",
    "parse_config",
    "validate",
    "config_hash",
    "build_map",
    "build_potential",
    "build_pair",
    "observable",
    "set_path",
    "get_path",
    "section",
]

MAP_FAMILIES = ("doubling", "manneville_pomeau", "shifted_doubling", "pitchfork")
POTENTIAL_FAMILIES = ("constant", "geometric", "fourier")
SAMPLING_SUBCOMMANDS = ("clt", "cones", "random-stability")

DEFAULTS: dict[str, dict[str, Any]] = {
    "numerics": {"N": 1024, "tol": 1e-12, "max_iter": 100000, "check_grid": 4096},
    "constants": {"delta": 0.5, "kappa": 20.0, "gamma": 0.9, "r": 1},
    "correlations": {"n_max": 20, "observable": [[1, 1.0, 0.0]]},
    "clt": {"n": 1000, "samples": 100000, "J": 50, "observable": [[1, 1.0, 0.0]]},
    "cones": {"pairs": 25, "n_iter": 8, "samples": 50, "grid": 256},
    "density": {"n_max": 60, "floor": 1e-12},
    "sweep": {"parameter": "map.t", "values": [0.04, 0.02, 0.01, 0.005], "reference": 0.0},
    "random_stability": {"parameter": "map.alpha", "epsilons": [0.02, 0.01, 0.005],
                         "support_size": 5},
    "discontinuity": {"n_list": [1, 10, 100], "grid": 8192},
}


def parse_config(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("configuration is not valid TOML", [str(exc)]) from exc


def load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}", [str(exc)]) from exc
    return parse_config(text)


def section(cfg: dict, name: str) -> dict:
    """Section merged over its defaults."""
    out = dict(DEFAULTS.get(name, {}))
    out.update(cfg.get(name, {}))
    return out


def get_path(cfg: dict, dotted: str, default=None):
    node = cfg
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            return default
        node = node[part]
    return node


def set_path(cfg: dict, dotted: str, value) -> dict:
    """Copy of ``cfg`` with ``dotted`` set to ``value``."""
    out = copy.deepcopy(cfg)
    node = out
    parts = dotted.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return out


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


# --------------------------------------------------------------- validation

def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _check_coeffs(value, path, diags):
    if not isinstance(value, list) or not value:
        diags.append(f"{path}: expected a nonempty list of [k, a_k, b_k] triples")
        return
    for i, row in enumerate(value):
        if (not isinstance(row, list) or len(row) != 3 or not all(_is_number(v) for v in row)
                or int(row[0]) != row[0] or row[0] < 0):
            diags.append(f"{path}[{i}]: expected [k, a_k, b_k] with integer k >= 0")


def validate(cfg: dict, subcommand: str | None = None) -> list[str]:
    """Diagnostics for ``cfg``; empty exactly when it can be run."""
    diags: list[str] = []
    m = cfg.get("map")
    if not isinstance(m, dict):
        diags.append("map: section missing")
        m = {}
    fam = m.get("family")
    if fam not in MAP_FAMILIES:
        diags.append(f"map.family: expected one of {', '.join(MAP_FAMILIES)}, got {fam!r}")
    if "sigma" in m and not (_is_number(m["sigma"]) and m["sigma"] > 1):
        diags.append("map.sigma: must be a number above 1")
    if fam == "manneville_pomeau":
        a = m.get("alpha")
        if not (_is_number(a) and 0 < a < 1):
            diags.append("map.alpha: must lie in (0, 1)")
    if fam == "shifted_doubling":
        n = m.get("n")
        if not (isinstance(n, int) and not isinstance(n, bool) and n >= 1):
            diags.append("map.n: must be a positive integer")
    if fam == "pitchfork":
        t = m.get("t", 0.0)
        lo, hi = dynamics.pitchfork_safe_range(m.get("strength", 1.05))
        if not (_is_number(t) and lo < t < hi):
            diags.append(f"map.t: must lie in ({lo:.4f}, {hi:.4f})")
    if "region" in m:
        reg = m["region"]
        if not isinstance(reg, list) or not all(
                isinstance(r, list) and len(r) == 2 and all(_is_number(v) for v in r) and r[0] <= r[1]
                for r in reg):
            diags.append("map.region: expected a list of [start, end] arcs")

    p = cfg.get("potential", {"family": "constant"})
    pfam = p.get("family")
    if pfam not in POTENTIAL_FAMILIES:
        diags.append(f"potential.family: expected one of {', '.join(POTENTIAL_FAMILIES)}, got {pfam!r}")
    if pfam == "geometric" and not _is_number(p.get("t")):
        diags.append("potential.t: required number for the geometric family")
    if pfam == "fourier":
        _check_coeffs(p.get("coeffs"), "potential.coeffs", diags)
    for key in ("c", "offset"):
        if key in p and not _is_number(p[key]):
            diags.append(f"potential.{key}: must be a number")

    num = section(cfg, "numerics")
    N = num["N"]
    if not (isinstance(N, int) and not isinstance(N, bool) and N >= 4 and N & (N - 1) == 0):
        diags.append("numerics.N: must be a power of two, at least 4")
    if not (_is_number(num["tol"]) and num["tol"] > 0):
        diags.append("numerics.tol: must be positive")

    const = section(cfg, "constants")
    if "hoelder_exponent" in const:
        a = const["hoelder_exponent"]
        if not (_is_number(a) and 0 < a <= 1):
            diags.append("constants.hoelder_exponent: must lie in (0, 1]")
    for key in ("delta", "kappa"):
        if not (_is_number(const[key]) and const[key] > 0):
            diags.append(f"constants.{key}: must be positive")
    if not (_is_number(const["gamma"]) and 0 < const["gamma"] < 1):
        diags.append("constants.gamma: must lie in (0, 1)")
    if "c" in const and not (_is_number(const["c"]) and const["c"] > 0):
        diags.append("constants.c: must be positive")
    if const["r"] not in (0, 1, 2):
        diags.append("constants.r: must be 0, 1 or 2")

    seed = get_path(cfg, "run.seed")
    if seed is not None and not (isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0):
        diags.append("run.seed: must be a nonnegative integer")
    if subcommand in SAMPLING_SUBCOMMANDS and seed is None:
        diags.append(f"run.seed: required by the {subcommand} subcommand")

    if subcommand in ("correlations", "clt"):
        name = subcommand
        _check_coeffs(section(cfg, name)["observable"], f"{name}.observable", diags)
    if subcommand == "sweep":
        sw = section(cfg, "sweep")
        if not isinstance(sw["values"], list) or not all(_is_number(v) for v in sw["values"]):
            diags.append("sweep.values: expected a list of numbers")
        if not isinstance(sw["parameter"], str) or sw["parameter"].split(".")[0] not in ("map", "potential"):
            diags.append("sweep.parameter: expected a dotted path into map or potential")
    if subcommand == "random-stability":
        rs = section(cfg, "random_stability")
        if not isinstance(rs["epsilons"], list) or not all(_is_number(v) and v >= 0 for v in rs["epsilons"]):
            diags.append("random_stability.epsilons: expected a list of nonnegative numbers")
        if not (isinstance(rs["support_size"], int) and rs["support_size"] >= 1):
            diags.append("random_stability.support_size: must be a positive integer")
    return diags


# ------------------------------------------------------------ construction

def build_map(cfg: dict) -> dynamics.CircleMap:
    m = cfg["map"]
    fam = m["family"]
    kwargs = {}
    if "sigma" in m:
        kwargs["sigma"] = float(m["sigma"])
    if fam == "doubling":
        fmap = dynamics.make_doubling(**kwargs)
    elif fam == "shifted_doubling":
        fmap = dynamics.make_shifted_doubling(int(m["n"]), **kwargs)
    elif fam == "manneville_pomeau":
        fmap = dynamics.make_manneville_pomeau(float(m["alpha"]), **kwargs)
    elif fam == "pitchfork":
        fmap = dynamics.make_pitchfork_perturbed(
            float(m.get("t", 0.0)), width=float(m.get("width", 0.1)),
            strength=float(m.get("strength", 1.05)), **kwargs)
    else:
        raise ConfigError("unknown map family", [f"map.family: {fam!r}"])
    if "region" in m:
        fmap = fmap.with_region([tuple(r) for r in m["region"]])
    return fmap


def build_potential(cfg: dict, fmap: dynamics.CircleMap) -> dynamics.PotentialSpec:
    p = cfg.get("potential", {"family": "constant"})
    fam = p.get("family", "constant")
    if fam == "constant":
        pot = dynamics.make_potential_constant(float(p.get("c", 0.0)))
    elif fam == "geometric":
        pot = dynamics.make_potential_geometric(fmap, float(p["t"]), offset=float(p.get("offset", 0.0)))
    elif fam == "fourier":
        pot = dynamics.make_potential_fourier(p["coeffs"])
    else:
        raise ConfigError("unknown potential family", [f"potential.family: {fam!r}"])
    return pot


def build_pair(cfg: dict):
    fmap = build_map(cfg)
    return fmap, build_potential(cfg, fmap)


def observable(coeffs):
    """Callable trigonometric polynomial from ``[k, a_k, b_k]`` rows."""
    return dynamics.make_potential_fourier(coeffs).evaluator
