"""Scenario configuration: schema, defaults, validation, resolution.

A scenario is a YAML mapping with an explicit ``schema_version``, the
phase space and grid resolution, the map family with probabilities, a
root seed, and an ordered task list.  Validation is strict: unknown keys
are rejected everywhere, and family invariants (probability simplex,
|b| < 1, unimodular integer matrices) are checked before any computation.
``resolve`` returns the fully-defaulted config dict that gets embedded in
every report for provenance.
"""

from __future__ import annotations

import copy
from importlib import resources

import yaml

from .errors import ConfigInvariantError, ConfigParseError, ErgolabError, UsageError
from .grid_measures import BoxSet, Grid
from .phase_maps import (
    CIRCLE,
    TORUS2,
    CircleDiffeo,
    IFSystem,
    Rotation,
    ToralAutomorphism,
    ToralTranslation,
)

SCHEMA_VERSION = 1

TASK_NAMES = (
    "stationary",
    "components",
    "minimality",
    "cover",
    "witness",
    "skew-sim",
    "okk",
    "sweep",
)

# Single source of defaults; resolved values are echoed into every report.
TASK_DEFAULTS: dict[str, dict] = {
    "stationary": {"tol": 1e-8, "max_iter": 200_000, "export_measure_csv": True,
                   "export_matrix_csv": False},
    "components": {"tol": 1e-10},
    "minimality": {"direction": "inverse", "eps": 0.05, "max_len": 40, "sample": 16,
                   "mode": "auto"},
    "cover": {"u": None, "max_len": 12, "max_words": 100_000},
    "witness": {"u": None, "w": None, "max_len": 24, "max_words": 50_000,
                "cylinder": [], "cylinder2": [], "v": None},
    "skew-sim": {"n": 1_000_000, "trials": 32, "tol": 0.02, "observables": "auto",
                 "orbit_histogram": False},
    "okk": {"n": 1_000_000, "trials": 32, "tol": 0.02, "observables": "auto",
            "score_margin": 0.1, "score_tol": None, "stationary_tol": 1e-8,
            "support_tol": 1e-10, "max_union": 12},
    "sweep": {"delta": 1e-3, "samples": 20, "n": 100_000, "trials": 16, "tol": 0.02,
              "observables": "auto", "eps": 0.05, "max_len": 40, "minimality_sample": 4,
              "minimality_direction": "inverse", "stationary_tol": 1e-8,
              "support_tol": 1e-10},
}

_MAP_FIELDS = {
    "rotation": {"alpha"},
    "circle_diffeo": {"a", "b", "frequency"},
    "toral_translation": {"v"},
    "toral_automorphism": {"matrix"},
}

_TOP_KEYS = {"schema_version", "name", "description", "space", "resolution", "seed",
             "maps", "probs", "tasks"}


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigParseError(message)


def _check_keys(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    _require(not unknown, f"unknown keys {sorted(unknown)} in {where}")


def load_config(path) -> dict:
    """Parse a YAML scenario file (structure errors raise ConfigParseError)."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigParseError(f"config is not valid YAML: {exc}") from exc
    _require(isinstance(raw, dict), "config root must be a mapping")
    return raw


def resolve(raw: dict) -> dict:
    """Validate a parsed config and return it with all defaults filled in."""
    _check_keys(raw, _TOP_KEYS, "config root")
    _require(raw.get("schema_version") == SCHEMA_VERSION,
             f"schema_version must be {SCHEMA_VERSION}")
    for key in ("name", "space", "resolution", "seed", "maps", "tasks"):
        _require(key in raw, f"missing required key {key!r}")
    _require(raw["space"] in ("circle", "torus"), "space must be 'circle' or 'torus'")
    _require(isinstance(raw["resolution"], int) and not isinstance(raw["resolution"], bool),
             "resolution must be an integer")
    _require(isinstance(raw["seed"], int) and not isinstance(raw["seed"], bool),
             "seed must be an integer")
    _require(isinstance(raw["maps"], list) and raw["maps"], "maps must be a nonempty list")
    _require(isinstance(raw["tasks"], list) and raw["tasks"], "tasks must be a nonempty list")

    maps_resolved = []
    for i, spec in enumerate(raw["maps"]):
        _require(isinstance(spec, dict) and "family" in spec, f"maps[{i}] needs a 'family'")
        family = spec["family"]
        _require(family in _MAP_FIELDS, f"maps[{i}] has unknown family {family!r}")
        _check_keys(spec, _MAP_FIELDS[family] | {"family"}, f"maps[{i}]")
        entry = dict(spec)
        if family == "circle_diffeo":
            entry.setdefault("frequency", 1)
        maps_resolved.append(entry)

    k = len(maps_resolved)
    probs = raw.get("probs", [1.0 / k] * k)
    _require(isinstance(probs, list) and len(probs) == k,
             f"probs must list one probability per map ({k})")

    tasks_resolved = []
    for i, task in enumerate(raw["tasks"]):
        _require(isinstance(task, dict) and "task" in task, f"tasks[{i}] needs a 'task'")
        name = task["task"]
        _require(name in TASK_NAMES, f"tasks[{i}] has unknown task {name!r}")
        defaults = TASK_DEFAULTS[name]
        _check_keys(task, set(defaults) | {"task"}, f"tasks[{i}] ({name})")
        merged = copy.deepcopy(defaults)
        merged.update({k2: v for k2, v in task.items() if k2 != "task"})
        merged["task"] = name
        tasks_resolved.append(merged)

    return {
        "schema_version": SCHEMA_VERSION,
        "name": str(raw["name"]),
        "description": str(raw.get("description", "")),
        "space": raw["space"],
        "resolution": raw["resolution"],
        "seed": raw["seed"],
        "maps": maps_resolved,
        "probs": [float(p) for p in probs],
        "tasks": tasks_resolved,
    }


def build_system(resolved: dict) -> tuple[IFSystem, Grid]:
    """Construct the map family and grid; invariant violations raise ConfigInvariantError."""
    space = CIRCLE if resolved["space"] == "circle" else TORUS2
    maps = []
    try:
        for spec in resolved["maps"]:
            family = spec["family"]
            if family == "rotation":
                maps.append(Rotation(alpha=float(spec["alpha"])))
            elif family == "circle_diffeo":
                maps.append(CircleDiffeo(a=float(spec["a"]), b=float(spec["b"]),
                                         freq=int(spec["frequency"])))
            elif family == "toral_translation":
                v = spec["v"]
                maps.append(ToralTranslation(v1=float(v[0]), v2=float(v[1])))
            else:
                maps.append(ToralAutomorphism(matrix=tuple(tuple(int(x) for x in row)
                                                           for row in spec["matrix"])))
        ifs = IFSystem(space=space, maps=tuple(maps), probs=tuple(resolved["probs"]))
        grid = Grid(space, resolved["resolution"])
    except (UsageError, KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigInvariantError(f"invalid scenario parameters: {exc}") from exc
    return ifs, grid


def boxset_from_spec(spec, grid: Grid, where: str) -> BoxSet:
    """Box set from config syntax: [lo, hi] on the circle, {x: [..], y: [..]} on the torus."""
    try:
        if grid.space.dim == 1:
            lo, hi = float(spec[0]), float(spec[1])
            return BoxSet.from_interval(grid, lo, hi)
        xs, ys = spec["x"], spec["y"]
        return BoxSet.from_rect(grid, float(xs[0]), float(xs[1]), float(ys[0]), float(ys[1]))
    except ErgolabError:
        raise
    except Exception as exc:
        raise ConfigInvariantError(f"bad box-set spec in {where}: {spec!r} ({exc})") from exc


def bundled_scenarios() -> dict[str, dict]:
    """Name -> parsed config for every scenario file shipped with the package."""
    out = {}
    for entry in resources.files("ergolab.scenarios").iterdir():
        if entry.name.endswith(".yaml"):
            raw = yaml.safe_load(entry.read_text())
            out[entry.name[: -len(".yaml")]] = raw
    return dict(sorted(out.items()))


def load_scenario(name_or_path) -> dict:
    """Load a config from a path, or by bundled scenario name."""
    name = str(name_or_path)
    bundled = bundled_scenarios()
    if name in bundled:
        return bundled[name]
    return load_config(name)
