"""Scenario orchestration: run tasks in order, write machine-readable reports.

Each task writes one JSON report (plus CSV side files where the task
produces tabular data); a top-level ``summary.json`` aggregates verdicts.
Reports embed the fully-resolved config and are byte-identical across
re-runs with the same seed; wall-clock metadata is segregated into
``run_meta.json`` so determinism checks can ignore it.

Exit codes: 0 success, 2 config parse error, 3 invariant violation,
4 budget exhaustion (partial reports are kept).
"""

from __future__ import annotations

import json
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import boxset_from_spec, build_system, load_scenario, resolve
from .errors import BudgetError, ConfigInvariantError, ConfigParseError, UsageError
from .grid_measures import annealed_matrix, measure_to_csv, tv_distance, ulam_to_csv
from .grid_measures import GridMeasure
from .phase_maps import IFSystem
from .semigroup_topology import finite_cover, minimality_check, skew_transitivity_word, strong_transitivity_witness
from .skew_product import (
    Cylinder,
    Observable,
    ergodicity_verdict,
    okk_equivalence_check,
    robustness_sweep,
    standard_observables,
)
from .stationary import component_is_open_mod0, ergodic_components, stationary_from_matrix

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_INVARIANT = 3
EXIT_BUDGET = 4


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _write_json(path: Path, payload: dict) -> None:
    text = json.dumps(_jsonable(payload), sort_keys=True, indent=2)
    path.write_text(text + "\n")


def _observables_from(params, ifs: IFSystem, grid):
    spec = params.get("observables", "auto")
    if spec == "auto":
        return standard_observables(ifs.space, grid)
    out = []
    for entry in spec:
        if entry == "cos2pix":
            out.append(Observable("cos2pix", "cos_x"))
        elif entry == "sin2pix":
            out.append(Observable("sin2pix", "sin_x"))
        elif entry == "cos2pix_cos2piy":
            out.append(Observable("cos2pix_cos2piy", "cos_x_cos_y"))
        elif isinstance(entry, dict) and set(entry) == {"indicator"}:
            boxes = boxset_from_spec(entry["indicator"], grid, "observables")
            out.append(Observable(f"indicator{entry['indicator']!r}", "indicator", boxset=boxes))
        else:
            raise ConfigInvariantError(f"unknown observable spec {entry!r}")
    return tuple(out)


class _ScenarioRun:
    """Mutable state shared by the tasks of one scenario run."""

    def __init__(self, resolved: dict, out_dir: Path, threads: int):
        self.resolved = resolved
        self.out_dir = out_dir
        self.threads = threads
        self.ifs, self.grid = build_system(resolved)
        self.seed = int(resolved["seed"])
        self.cache: dict = {}

    # -- shared intermediates -------------------------------------------------

    def annealed(self):
        if "annealed" not in self.cache:
            self.cache["annealed"] = annealed_matrix(self.ifs, self.grid, seed=self.seed)
        return self.cache["annealed"]

    def stationary(self, tol=1e-8, max_iter=200_000):
        if "stationary" not in self.cache:
            self.cache["stationary"] = stationary_from_matrix(
                self.annealed(), tol=tol, max_iter=max_iter
            )
        return self.cache["stationary"]

    # -- tasks ----------------------------------------------------------------

    def task_stationary(self, params, report_path: Path) -> dict:
        result = stationary_from_matrix(
            self.annealed(), tol=params["tol"], max_iter=params["max_iter"]
        )
        self.cache["stationary"] = result
        uniform = GridMeasure.uniform(self.grid)
        report = result.to_dict()
        report["tv_to_uniform"] = tv_distance(result.measure, uniform)
        if params["export_measure_csv"]:
            measure_to_csv(result.measure, report_path.with_name("stationary_measure.csv"))
            report["measure_csv"] = "stationary_measure.csv"
        if params["export_matrix_csv"]:
            ulam_to_csv(self.annealed(), report_path.with_name("annealed_matrix.csv"))
            report["matrix_csv"] = "annealed_matrix.csv"
        return report

    def task_components(self, params, report_path: Path) -> dict:
        stat = self.stationary()
        comps = ergodic_components(self.annealed(), stat.measure, tol=params["tol"])
        entries = []
        for comp in comps:
            open_report = component_is_open_mod0(comp, self.grid)
            entries.append(
                {
                    "boxes": [int(b) for b in comp.as_array()],
                    "measure": stat.measure.mass(comp),
                    "open_mod0": open_report.to_dict(),
                }
            )
        self.cache["components"] = comps
        return {"n_components": len(comps), "support_tol": params["tol"], "components": entries}

    def task_minimality(self, params, report_path: Path) -> dict:
        result = minimality_check(
            self.ifs,
            direction=params["direction"],
            eps=params["eps"],
            max_len=params["max_len"],
            sample=params["sample"],
            seed=self.seed,
            grid=self.grid,
            mode=params["mode"],
        )
        return result.to_dict()

    def task_cover(self, params, report_path: Path) -> dict:
        if params["u"] is None:
            raise ConfigInvariantError("cover task needs 'u'")
        u = boxset_from_spec(params["u"], self.grid, "cover.u")
        result = finite_cover(self.ifs, u, max_len=params["max_len"], max_words=params["max_words"])
        report = result.to_dict()
        report["u_boxes"] = [int(b) for b in u.as_array()]
        return report

    def task_witness(self, params, report_path: Path) -> dict:
        if params["u"] is None or params["w"] is None:
            raise ConfigInvariantError("witness task needs 'u' and 'w'")
        u = boxset_from_spec(params["u"], self.grid, "witness.u")
        w = boxset_from_spec(params["w"], self.grid, "witness.w")
        result = strong_transitivity_witness(
            self.ifs, u, w, max_len=params["max_len"], max_words=params["max_words"]
        )
        report = {"witness": result.to_dict()}
        if params["cylinder"] or params["cylinder2"] or params["v"] is not None:
            v_spec = params["v"] if params["v"] is not None else params["w"]
            v = boxset_from_spec(v_spec, self.grid, "witness.v")
            skew = skew_transitivity_word(
                self.ifs,
                Cylinder(tuple(params["cylinder"])),
                u,
                Cylinder(tuple(params["cylinder2"])),
                v,
                max_len=params["max_len"],
                max_words=params["max_words"],
            )
            report["skew_word"] = skew.to_dict()
        return report

    def task_skew_sim(self, params, report_path: Path) -> dict:
        observables = _observables_from(params, self.ifs, self.grid)
        mu = self.cache["stationary"].measure if "stationary" in self.cache else None
        report = ergodicity_verdict(
            self.ifs,
            observables=observables,
            n=params["n"],
            trials=params["trials"],
            tol=params["tol"],
            seed=self.seed,
            grid=self.grid,
            mu=mu,
        )
        report.dispersion_to_csv(report_path.with_name("dispersion.csv"))
        payload = report.to_dict()
        payload["dispersion_csv"] = "dispersion.csv"
        return payload

    def task_okk(self, params, report_path: Path) -> dict:
        observables = _observables_from(params, self.ifs, self.grid)
        report = okk_equivalence_check(
            self.ifs,
            self.grid,
            seed=self.seed,
            n=params["n"],
            trials=params["trials"],
            tol=params["tol"],
            observables=observables,
            score_margin=params["score_margin"],
            score_tol=params["score_tol"],
            stationary_tol=params["stationary_tol"],
            support_tol=params["support_tol"],
            max_union=params["max_union"],
        )
        return report.to_dict()

    def task_sweep(self, params, report_path: Path) -> dict:
        observables = _observables_from(params, self.ifs, self.grid)
        report = robustness_sweep(
            self.ifs,
            self.grid,
            delta=params["delta"],
            samples=params["samples"],
            seed=self.seed,
            eps=params["eps"],
            max_len=params["max_len"],
            minimality_sample=params["minimality_sample"],
            minimality_direction=params["minimality_direction"],
            n=params["n"],
            trials=params["trials"],
            tol=params["tol"],
            observables=observables,
            stationary_tol=params["stationary_tol"],
            support_tol=params["support_tol"],
            threads=self.threads,
        )
        report.to_csv(report_path.with_name("sweep.csv"))
        payload = report.to_dict()
        payload["sweep_csv"] = "sweep.csv"
        return payload


_TASK_FN = {
    "stationary": _ScenarioRun.task_stationary,
    "components": _ScenarioRun.task_components,
    "minimality": _ScenarioRun.task_minimality,
    "cover": _ScenarioRun.task_cover,
    "witness": _ScenarioRun.task_witness,
    "skew-sim": _ScenarioRun.task_skew_sim,
    "okk": _ScenarioRun.task_okk,
    "sweep": _ScenarioRun.task_sweep,
}

_HEADLINE_KEYS = (
    "verdict",
    "residual",
    "converged",
    "n_components",
    "agreement",
    "semigroup_ergodic",
    "skew_ergodic",
    "m",
    "survival",
    "steps",
)


def run_scenario(
    config: str | dict,
    out_dir,
    seed: int | None = None,
    threads: int = 1,
) -> int:
    """Execute a scenario config (path, bundled name, or parsed dict); returns exit code."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.time()
    try:
        raw = load_scenario(config) if not isinstance(config, dict) else config
        resolved = resolve(raw)
        if seed is not None:
            resolved["seed"] = int(seed)
        run = _ScenarioRun(resolved, out, threads)
    except ConfigParseError as exc:
        _write_json(out / "summary.json", {"ok": False, "error": str(exc), "exit_code": EXIT_PARSE})
        return EXIT_PARSE
    except (ConfigInvariantError, UsageError) as exc:
        _write_json(
            out / "summary.json", {"ok": False, "error": str(exc), "exit_code": EXIT_INVARIANT}
        )
        return EXIT_INVARIANT

    summary_tasks = []
    exit_code = EXIT_OK
    task_counts: dict[str, int] = {}
    for params in resolved["tasks"]:
        name = params["task"]
        task_counts[name] = task_counts.get(name, 0) + 1
        stem = name if task_counts[name] == 1 else f"{name}_{task_counts[name]}"
        report_path = out / f"{stem}.json"
        entry = {"task": name, "file": report_path.name, "params": params}
        try:
            body = _TASK_FN[name](run, params, report_path)
            entry["status"] = "ok"
            entry["headline"] = {k: body[k] for k in _HEADLINE_KEYS if k in body}
            _write_json(report_path, {"scenario": resolved, "task": name, "result": body})
        except BudgetError as exc:
            entry["status"] = "budget_error"
            entry["error"] = str(exc)
            entry["info"] = _jsonable(exc.info)
            _write_json(report_path, {"scenario": resolved, "task": name,
                                      "error": str(exc), "info": _jsonable(exc.info)})
            exit_code = EXIT_BUDGET
            break
        except (ConfigInvariantError, UsageError) as exc:
            entry["status"] = "invariant_error"
            entry["error"] = str(exc)
            exit_code = EXIT_INVARIANT
            break
        finally:
            summary_tasks.append(entry)

    _write_json(
        out / "summary.json",
        {
            "ok": exit_code == EXIT_OK,
            "exit_code": exit_code,
            "scenario": resolved,
            "tasks": summary_tasks,
        },
    )
    _write_json(
        out / "run_meta.json",
        {
            "elapsed_seconds": time.time() - started,
            "finished_at_unix": time.time(),
            "version": __version__,
            "threads": threads,
        },
    )
    return exit_code
