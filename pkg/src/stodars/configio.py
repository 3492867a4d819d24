"""Flat key=value configuration files with module-prefixed keys.

Solver settings use the prefix ``solver.`` (one key per SolverConfig
field); benchmark plans add ``plan.`` keys and per-solver sections spelled
``solver.<name>.<field>``.  The format is line-oriented, order-free, and
trivially parseable from any language; ``#`` starts a comment.
"""

from __future__ import annotations

import dataclasses

from .bench import ExperimentPlan
from .problems import default_suite, get_instance
from .solver import ConfigError, SolverConfig

__all__ = [
    "parse_kv",
    "config_from_kv",
    "parse_config_text",
    "dump_config",
    "parse_plan_text",
]

_BOOL_WORDS = {"true": True, "yes": True, "on": True, "1": True,
               "false": False, "no": False, "off": False, "0": False}


def parse_kv(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected key = value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _coerce(key: str, raw: str, target_type):
    try:
        if target_type is bool:
            word = raw.lower()
            if word not in _BOOL_WORDS:
                raise ValueError(f"not a boolean: {raw!r}")
            return _BOOL_WORDS[word]
        if target_type is int:
            return int(raw)
        if target_type is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(key, str(exc)) from None


def config_from_kv(kv: dict, prefix: str = "solver.",
                   base: SolverConfig | None = None) -> SolverConfig:
    # field types follow the defaults, so new config fields parse without
    # touching this module (bool checked before int: bool is an int subtype)
    types = {f.name: (bool if isinstance(f.default, bool) else type(f.default))
             for f in dataclasses.fields(SolverConfig)}
    updates = {}
    for key, raw in kv.items():
        if not key.startswith(prefix):
            continue
        name = key[len(prefix):]
        if name not in types:
            raise ConfigError(key, "unknown configuration key")
        updates[name] = _coerce(key, raw, types[name])
    cfg = dataclasses.replace(base or SolverConfig(), **updates)
    cfg.validate()
    return cfg


def parse_config_text(text: str) -> SolverConfig:
    return config_from_kv(parse_kv(text))


def dump_config(cfg: SolverConfig) -> str:
    lines = []
    for f in dataclasses.fields(SolverConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"solver.{f.name} = {value}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# benchmark plans

def _parse_seeds(raw: str) -> list:
    seeds = []
    for tok in raw.replace(",", " ").split():
        if ".." in tok:
            lo, hi = tok.split("..", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(tok))
    if not seeds:
        raise ConfigError("plan.seeds", "no seeds given")
    return seeds


def parse_plan_text(text: str) -> ExperimentPlan:
    """Build an experiment plan from a flat key=value description.

    plan.problems   "desk", "paper-like", or comma-separated instance names
    plan.seeds      comma/space list, ranges as lo..hi
    plan.budget_multiplier, plan.tolerances, plan.sigma
    solver.<name>.<field>  per-solver configuration overrides
    """
    kv = parse_kv(text)
    sigma = float(kv.get("plan.sigma", "1e-3"))
    raw_problems = kv.get("plan.problems", "desk")
    if raw_problems in ("desk", "paper-like"):
        problems = default_suite(raw_problems, sigma=sigma)
    else:
        try:
            problems = [get_instance(tok.strip(), sigma=sigma)
                        for tok in raw_problems.split(",") if tok.strip()]
        except KeyError as exc:
            raise ConfigError("plan.problems", str(exc)) from None
    seeds = _parse_seeds(kv.get("plan.seeds", "0..19"))
    multiplier = _coerce("plan.budget_multiplier",
                         kv.get("plan.budget_multiplier", "1500"), int)
    tolerances = tuple(float(tok) for tok in
                       kv.get("plan.tolerances", "1e-2,1e-3").split(","))

    solver_names = []
    for key in kv:
        parts = key.split(".")
        if len(parts) == 3 and parts[0] == "solver":
            if parts[1] not in solver_names:
                solver_names.append(parts[1])
    if not solver_names:
        raise ConfigError("solver", "plan defines no solver sections")
    solvers = []
    for name in solver_names:
        cfg = config_from_kv(kv, prefix=f"solver.{name}.")
        solvers.append((name, cfg))

    try:
        return ExperimentPlan(problems=problems, solvers=solvers, seeds=seeds,
                              budget_multiplier=multiplier,
                              tolerances=tolerances)
    except ValueError as exc:
        raise ConfigError("plan", str(exc)) from None
