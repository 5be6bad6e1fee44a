"""Step skew product simulation and ergodicity diagnostics.

The random system is driven as a skew product over the one-sided Bernoulli
shift: a seeded ``SymbolStream`` emits i.i.d. symbols in 1..k, and the
fiber point moves by the map the symbol selects.  Time averages of bounded
observables along such orbits are the workhorse statistic: under
ergodicity they concentrate on the space average, so the across-trial
dispersion of Birkhoff averages gives a necessary-condition battery for
ergodicity ("consistent with ergodic" / "ergodicity rejected" - verdicts
are statistical, never proofs).

``okk_equivalence_check`` runs the two sides of the ergodicity equivalence
at grid scale: the annealed-operator side (is there a candidate invariant
box set of intermediate measure with vanishing symmetric-difference
score?) against the skew-orbit side (Birkhoff dispersion), and reports
whether the Boolean outcomes agree.

``robustness_sweep`` perturbs the continuous map parameters in a box of
radius delta, re-runs the pipeline per sample (stationarity, components,
minimality budget check, ergodicity verdict), and reports the fraction of
samples retaining each baseline property.  Evaluation seeds are held fixed
across samples so a zero-radius sweep reproduces the baseline exactly.

Orbits are evaluated in vectorized time chunks across all trials at once;
systems consisting solely of rigid rotations/translations take a closed
form (modular cumulative sums of per-symbol displacements) instead of
stepping.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from .errors import BudgetError, UsageError
from .grid_measures import BoxSet, Grid, GridMeasure, UlamMatrix, annealed_matrix, ulam_matrix
from .phase_maps import (
    FORWARD,
    INVERSE,
    TWO_PI,
    CircleDiffeo,
    IFSystem,
    Rotation,
    ToralAutomorphism,
    ToralTranslation,
)
from .stationary import ergodic_components, stationary_from_matrix
from . import semigroup_topology

VERDICT_CONSISTENT = "consistent with ergodic"
VERDICT_REJECTED = "ergodicity rejected"

_CHUNK = 8192


@dataclass(frozen=True)
class Cylinder:
    """One-sided cylinder fixing the first ``len(word)`` symbols; empty = whole space."""

    word: tuple[int, ...] = ()

    def __post_init__(self):
        word = tuple(int(s) for s in self.word)
        if any(s < 1 for s in word):
            raise UsageError("cylinder symbols are 1-based")
        object.__setattr__(self, "word", word)

    def __len__(self) -> int:
        return len(self.word)

    def contains_prefix(self, symbols) -> bool:
        symbols = tuple(int(s) for s in symbols)
        return symbols[: len(self.word)] == self.word


class SymbolStream:
    """Seeded i.i.d. symbol source over 1..k with probability vector p."""

    def __init__(self, probs, seed):
        probs = tuple(float(p) for p in probs)
        if len(probs) < 1 or abs(sum(probs) - 1.0) > 1e-12 or any(p <= 0 for p in probs):
            raise UsageError(f"invalid probability vector {probs!r}")
        self.probs = probs
        self.seed = seed
        self._cum = np.cumsum(probs)
        self._rng = np.random.default_rng(seed)

    @classmethod
    def for_system(cls, ifs: IFSystem, seed) -> "SymbolStream":
        return cls(ifs.probs, seed)

    @property
    def k(self) -> int:
        return len(self.probs)

    def draw0(self, n: int) -> np.ndarray:
        """n internal 0-based symbols."""
        u = self._rng.random(n)
        return np.minimum(np.searchsorted(self._cum, u, side="right"), self.k - 1)

    def draw(self, n: int) -> np.ndarray:
        """n symbols in 1..k."""
        return self.draw0(n) + 1


@dataclass(frozen=True)
class Observable:
    """Named bounded test function on the phase space (|values| <= 1)."""

    name: str
    kind: str  # cos_x | sin_x | cos_x_cos_y | indicator
    boxset: BoxSet | None = None

    def __post_init__(self):
        if self.kind not in ("cos_x", "sin_x", "cos_x_cos_y", "indicator"):
            raise UsageError(f"unknown observable kind {self.kind!r}")
        if self.kind == "indicator":
            if self.boxset is None:
                raise UsageError("indicator observable needs a box set")
            object.__setattr__(self, "_mask", self.boxset.membership_mask())

    def evaluate(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self.kind == "indicator":
            return self._mask[self.boxset.grid.box_index(pts)].astype(float)
        x = pts if pts.ndim <= 1 or pts.shape[-1] != 2 else pts[..., 0]
        if self.kind == "cos_x":
            return np.cos(TWO_PI * x)
        if self.kind == "sin_x":
            return np.sin(TWO_PI * x)
        return np.cos(TWO_PI * pts[..., 0]) * np.cos(TWO_PI * pts[..., 1])

    @property
    def space_average(self) -> float:
        """Exact integral against normalized volume."""
        if self.kind == "indicator":
            return len(self.boxset) / self.boxset.grid.n_boxes
        return 0.0

    def integrate(self, mu: GridMeasure) -> float:
        """Integral against a grid measure (box-center quadrature for the trig menu)."""
        if self.kind == "indicator":
            if mu.grid != self.boxset.grid:
                raise UsageError("indicator grid differs from measure grid")
            return mu.mass(self.boxset)
        return float(mu.weights @ self.evaluate(mu.grid.centers()))


def standard_observables(space, grid: Grid | None = None) -> tuple[Observable, ...]:
    """The default trig menu for a phase space."""
    obs = [Observable("cos2pix", "cos_x"), Observable("sin2pix", "sin_x")]
    if space.dim == 2:
        obs.append(Observable("cos2pix_cos2piy", "cos_x_cos_y"))
    return tuple(obs)


def _translation_deltas(ifs: IFSystem) -> np.ndarray | None:
    """Per-symbol displacement matrix when every map is a rigid rotation/translation."""
    deltas = []
    for m in ifs.maps:
        if isinstance(m, Rotation):
            deltas.append([m.alpha if m.direction == FORWARD else -m.alpha])
        elif isinstance(m, ToralTranslation):
            v = m.vector if m.direction == FORWARD else -m.vector
            deltas.append(list(v))
        else:
            return None
    arr = np.asarray(deltas, dtype=float)
    return arr[:, 0] if ifs.space.dim == 1 else arr


def _ensemble_chunks(ifs: IFSystem, starts: np.ndarray, streams, n: int, chunk: int = _CHUNK):
    """Yield time-major trajectory chunks for all trials simultaneously.

    Circle chunks have shape (c, m); torus chunks (c, m, 2).  Trial t's
    symbols come from streams[t], so trials are statistically independent.
    """
    pts = np.array(starts, dtype=float)
    deltas = _translation_deltas(ifs)
    k = ifs.k
    done = 0
    while done < n:
        c = min(chunk, n - done)
        syms = np.stack([s.draw0(c) for s in streams], axis=1)  # (c, m)
        if deltas is not None:
            step = deltas[syms]  # (c, m) or (c, m, 2)
            np.cumsum(step, axis=0, out=step)
            traj = (pts[None, ...] + step) % 1.0
            pts = traj[-1].copy()
        else:
            traj = np.empty((c,) + pts.shape)
            for t in range(c):
                if k == 1:
                    pts = ifs.maps[0].apply_points(pts)
                else:
                    col = syms[t]
                    for i in range(k):
                        mask = col == i
                        if mask.any():
                            pts[mask] = ifs.maps[i].apply_points(pts[mask])
                traj[t] = pts
        done += c
        yield traj


@dataclass(frozen=True)
class SkewOrbitSummary:
    n: int
    final_point: float | np.ndarray
    visit_counts: np.ndarray | None
    grid: Grid | None

    def visit_measure(self) -> GridMeasure:
        if self.visit_counts is None:
            raise UsageError("orbit was run without a grid")
        return GridMeasure(self.grid, self.visit_counts / self.visit_counts.sum())


def skew_orbit(
    ifs: IFSystem,
    stream: SymbolStream,
    x,
    n: int,
    grid: Grid | None = None,
) -> SkewOrbitSummary:
    """Iterate x_{t+1} = f_{w_t}(x_t); returns final point and grid visit histogram."""
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    if stream.k != ifs.k:
        raise UsageError("stream symbol count differs from system size")
    starts = np.asarray([x], dtype=float) if ifs.space.dim == 1 else np.asarray([x], dtype=float)
    counts = np.zeros(grid.n_boxes, dtype=np.int64) if grid is not None else None
    final = None
    for traj in _ensemble_chunks(ifs, starts, [stream], n):
        if counts is not None:
            idx = grid.box_index(traj.reshape(-1) if ifs.space.dim == 1 else traj.reshape(-1, 2))
            counts += np.bincount(idx, minlength=grid.n_boxes)
        final = traj[-1, 0]
    final_point = float(final) if ifs.space.dim == 1 else np.asarray(final)
    return SkewOrbitSummary(n=n, final_point=final_point, visit_counts=counts, grid=grid)


def birkhoff_average(
    ifs: IFSystem,
    obs: Observable,
    x,
    stream: SymbolStream,
    n: int,
) -> float:
    """Time average (1/n) * sum_{t=1..n} obs(x_t) along one random orbit."""
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    starts = np.asarray([x], dtype=float)
    total = 0.0
    for traj in _ensemble_chunks(ifs, starts, [stream], n):
        total += float(obs.evaluate(traj).sum())
    return total / n


def _birkhoff_table(
    ifs: IFSystem,
    observables,
    starts: np.ndarray,
    streams,
    n: int,
) -> np.ndarray:
    """Birkhoff averages, shape (n_trials, n_observables)."""
    sums = np.zeros((len(streams), len(observables)))
    for traj in _ensemble_chunks(ifs, starts, streams, n):
        for j, obs in enumerate(observables):
            sums[:, j] += obs.evaluate(traj).sum(axis=0)
    return sums / n


def _sample_starts(mu: GridMeasure, rng: np.random.Generator, count: int) -> np.ndarray:
    """Points distributed as mu: box by weight, then uniform inside the box."""
    grid = mu.grid
    cum = np.cumsum(mu.weights)
    boxes = np.minimum(np.searchsorted(cum, rng.random(count), side="right"), grid.n_boxes - 1)
    if grid.space.dim == 1:
        return (boxes + rng.random(count)) / grid.resolution
    coords = grid.box_coords(boxes).astype(float)
    return (coords + rng.random((count, 2))) / grid.resolution


@dataclass(frozen=True)
class ObservableStats:
    name: str
    mean: float
    std: float
    expected: float
    consistent: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "mean": self.mean,
            "std": self.std,
            "expected": self.expected,
            "consistent": self.consistent,
        }


@dataclass(frozen=True)
class ErgodicityReport:
    verdict: str
    tol: float
    n: int
    trials: int
    start_distribution: str
    stats: tuple[ObservableStats, ...]
    separating_observable: str | None
    averages: np.ndarray  # (trials, n_observables)

    @property
    def consistent(self) -> bool:
        return self.verdict == VERDICT_CONSISTENT

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "tol": self.tol,
            "n": self.n,
            "trials": self.trials,
            "start_distribution": self.start_distribution,
            "separating_observable": self.separating_observable,
            "observables": [s.to_dict() for s in self.stats],
        }

    def dispersion_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trial", "observable", "average"])
            for t in range(self.averages.shape[0]):
                for j, s in enumerate(self.stats):
                    writer.writerow([t, s.name, repr(float(self.averages[t, j]))])


def ergodicity_verdict(
    ifs: IFSystem,
    observables=None,
    n: int = 1_000_000,
    trials: int = 32,
    tol: float = 0.02,
    seed: int = 0,
    grid: Grid | None = None,
    mu: GridMeasure | None = None,
    start_from: str = "auto",
) -> ErgodicityReport:
    """Across-trial dispersion test of Birkhoff averages.

    Starts are drawn from normalized volume for volume-preserving systems
    and from the stationary measure otherwise ("auto"); the verdict is
    "consistent with ergodic" iff every observable has across-trial sample
    std <= tol and mean within tol of its integral against the start
    distribution.
    """
    if trials < 8:
        raise UsageError(f"need at least 8 trials, got {trials}")
    if observables is None:
        observables = standard_observables(ifs.space, grid)
    observables = tuple(observables)
    if start_from == "auto":
        start_from = "volume" if ifs.volume_preserving else "stationary"
    if start_from == "stationary":
        if mu is None:
            if grid is None:
                raise UsageError("stationary starts need a measure or a grid to compute one")
            mu = stationary_from_matrix(annealed_matrix(ifs, grid)).measure
        expected = [obs.integrate(mu) for obs in observables]
    elif start_from == "volume":
        expected = [obs.space_average for obs in observables]
    else:
        raise UsageError(f"unknown start distribution {start_from!r}")

    start_rng = np.random.default_rng([seed, 1])
    if start_from == "volume":
        shape = (trials,) if ifs.space.dim == 1 else (trials, 2)
        starts = start_rng.random(shape)
    else:
        starts = _sample_starts(mu, start_rng, trials)
    streams = [SymbolStream.for_system(ifs, [seed, 2, t]) for t in range(trials)]

    averages = _birkhoff_table(ifs, observables, starts, streams, n)
    stats = []
    separating = None
    for j, obs in enumerate(observables):
        col = averages[:, j]
        std = float(col.std(ddof=1))
        mean = float(col.mean())
        ok = std <= tol and abs(mean - expected[j]) <= tol
        if not ok and separating is None:
            separating = obs.name
        stats.append(ObservableStats(obs.name, mean, std, float(expected[j]), ok))
    verdict = VERDICT_CONSISTENT if separating is None else VERDICT_REJECTED
    return ErgodicityReport(
        verdict=verdict,
        tol=tol,
        n=n,
        trials=trials,
        start_distribution=start_from,
        stats=tuple(stats),
        separating_observable=separating,
        averages=averages,
    )


def _candidate_sets(components: list[BoxSet], grid: Grid, max_union: int) -> tuple[list[BoxSet], bool]:
    """Components and their unions.

    All unions are enumerated up to ``max_union`` components; beyond that
    the list is truncated to singles, cumulative prefix unions (which sweep
    through intermediate masses), and their complements.
    """
    m = len(components)
    if m <= max_union:
        out = []
        for size in range(1, m + 1):
            for combo in combinations(range(m), size):
                merged = components[combo[0]]
                for c in combo[1:]:
                    merged = merged.union(components[c])
                out.append(merged)
        return out, False
    seen: dict[frozenset, BoxSet] = {}
    prefix = None
    for comp in components:
        seen.setdefault(comp.indices, comp)
        prefix = comp if prefix is None else prefix.union(comp)
        seen.setdefault(prefix.indices, prefix)
    for cand in list(seen.values()):
        comp = cand.complement()
        seen.setdefault(comp.indices, comp)
    return list(seen.values()), True


def _scores(mu: GridMeasure, candidates, per_map_ulams, theta: float = 0.5) -> list[float]:
    out = []
    for cand in candidates:
        mask = cand.membership_mask()
        score = 0.0
        for ulam in per_map_ulams:
            into = ulam.matrix @ mask.astype(float)
            pre = into >= theta
            score += float(mu.weights[pre ^ mask].sum())
        out.append(score)
    return out


@dataclass(frozen=True)
class OkkReport:
    semigroup_ergodic: bool | None
    skew_ergodic: bool
    agreement: bool | None
    inconclusive: bool
    reason: str | None
    min_score: float | None
    score_tol: float
    best_candidate_boxes: tuple[int, ...] | None
    best_candidate_mass: float | None
    candidates_examined: int
    candidates_truncated: bool
    n_components: int
    stationary_residual: float
    skew_report: ErgodicityReport

    def to_dict(self) -> dict:
        return {
            "semigroup_ergodic": self.semigroup_ergodic,
            "skew_ergodic": self.skew_ergodic,
            "agreement": self.agreement,
            "inconclusive": self.inconclusive,
            "reason": self.reason,
            "min_score": self.min_score,
            "score_tol": self.score_tol,
            "best_candidate_boxes": (
                list(self.best_candidate_boxes) if self.best_candidate_boxes is not None else None
            ),
            "best_candidate_mass": self.best_candidate_mass,
            "candidates_examined": self.candidates_examined,
            "candidates_truncated": self.candidates_truncated,
            "n_components": self.n_components,
            "stationary_residual": self.stationary_residual,
            "skew": self.skew_report.to_dict(),
        }


def okk_equivalence_check(
    ifs: IFSystem,
    grid: Grid,
    seed: int = 0,
    n: int = 1_000_000,
    trials: int = 32,
    tol: float = 0.02,
    observables=None,
    score_margin: float = 0.1,
    score_tol: float | None = None,
    stationary_tol: float = 1e-8,
    max_iter: int = 200_000,
    support_tol: float = 1e-10,
    max_union: int = 12,
) -> OkkReport:
    """Compare semigroup-level and skew-product-level ergodicity at grid scale.

    Side 1 scans candidate invariant box sets (closed classes of the
    annealed operator and their unions) whose stationary mass is at least
    ``score_margin`` away from 0 and 1; ergodicity is rejected on this side
    when some candidate's symmetric-difference score is <= score_tol
    (default 2k/resolution, the boundary-box scale).  Side 2 is the
    Birkhoff dispersion verdict.  The report states whether the sides agree.
    """
    if score_tol is None:
        score_tol = 2.0 * ifs.k / grid.resolution
    annealed = annealed_matrix(ifs, grid)
    stat = stationary_from_matrix(annealed, tol=stationary_tol, max_iter=max_iter)
    mu = stat.measure
    components = ergodic_components(annealed, mu, tol=support_tol)
    candidates, truncated = _candidate_sets(components, grid, max_union)
    eligible = [c for c in candidates if score_margin <= mu.mass(c) <= 1.0 - score_margin]
    per_map = [ulam_matrix(m, grid, seed=seed) for m in ifs.maps]
    scores = _scores(mu, eligible, per_map)
    if scores:
        best = int(np.argmin(scores))
        min_score = float(scores[best])
        best_boxes = tuple(int(b) for b in eligible[best].as_array())
        best_mass = mu.mass(eligible[best])
        side1 = min_score > score_tol
    else:
        min_score, best_boxes, best_mass = None, None, None
        side1 = True  # no invariant candidate of intermediate mass at this resolution

    skew = ergodicity_verdict(
        ifs,
        observables=observables,
        n=n,
        trials=trials,
        tol=tol,
        seed=seed,
        grid=grid,
        mu=mu,
        start_from="auto",
    )
    inconclusive = not stat.converged
    reason = "stationary measure did not converge within budget" if inconclusive else None
    agreement = None if inconclusive else (side1 == skew.consistent)
    return OkkReport(
        semigroup_ergodic=None if inconclusive else side1,
        skew_ergodic=skew.consistent,
        agreement=agreement,
        inconclusive=inconclusive,
        reason=reason,
        min_score=min_score,
        score_tol=float(score_tol),
        best_candidate_boxes=best_boxes,
        best_candidate_mass=best_mass,
        candidates_examined=len(eligible),
        candidates_truncated=truncated,
        n_components=len(components),
        stationary_residual=stat.residual,
        skew_report=skew,
    )


def _perturbed_system(ifs: IFSystem, delta: float, rng: np.random.Generator) -> IFSystem:
    """Uniform parameter-box perturbation; only continuous parameters move.

    Family invariants are preserved: |b| stays below 1 and integer
    automorphism matrices are left untouched.
    """
    new_maps = []
    for m in ifs.maps:
        if isinstance(m, Rotation):
            new_maps.append(replace(m, alpha=m.alpha + rng.uniform(-delta, delta)))
        elif isinstance(m, CircleDiffeo):
            b = m.b + rng.uniform(-delta, delta)
            b = min(max(b, -1.0 + 1e-9), 1.0 - 1e-9)
            new_maps.append(replace(m, a=m.a + rng.uniform(-delta, delta), b=b))
        elif isinstance(m, ToralTranslation):
            new_maps.append(
                replace(m, v1=m.v1 + rng.uniform(-delta, delta), v2=m.v2 + rng.uniform(-delta, delta))
            )
        elif isinstance(m, ToralAutomorphism):
            new_maps.append(m)
        else:
            raise UsageError(f"cannot perturb map family {type(m).__name__}")
    return IFSystem(ifs.space, tuple(new_maps), ifs.probs)


_SWEEP_PROPERTIES = (
    "stationary_converged",
    "n_components",
    "minimality_verdict",
    "ergodicity_verdict",
    "quasi_invariant",
)


@dataclass(frozen=True)
class SweepReport:
    delta: float
    samples: int
    baseline: dict
    results: tuple[dict, ...]
    survival: dict
    errors: int

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "samples": self.samples,
            "baseline": self.baseline,
            "results": list(self.results),
            "survival": self.survival,
            "errors": self.errors,
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample", "property", "value", "retained"])
            for i, res in enumerate(self.results):
                for prop in _SWEEP_PROPERTIES:
                    value = res.get(prop)
                    retained = res.get("error") is None and value == self.baseline[prop]
                    writer.writerow([i, prop, value, int(retained)])


def _pipeline(
    ifs: IFSystem,
    grid: Grid,
    seed: int,
    stationary_tol: float,
    max_iter: int,
    support_tol: float,
    eps: float,
    max_len: int,
    minimality_sample: int,
    minimality_direction: str,
    n: int,
    trials: int,
    tol: float,
    observables,
) -> dict:
    annealed = annealed_matrix(ifs, grid)
    stat = stationary_from_matrix(annealed, tol=stationary_tol, max_iter=max_iter)
    comps = ergodic_components(annealed, stat.measure, tol=support_tol)
    try:
        minim = semigroup_topology.minimality_check(
            ifs,
            direction=minimality_direction,
            eps=eps,
            max_len=max_len,
            sample=minimality_sample,
            seed=seed,
        )
        minimality = minim.verdict
    except BudgetError as exc:
        minimality = f"budget: {exc}"
    verdict = ergodicity_verdict(
        ifs,
        observables=observables,
        n=n,
        trials=trials,
        tol=tol,
        seed=seed,
        grid=grid,
        mu=stat.measure,
    )
    quasi_ok = all(
        _quasi_ok(stat.measure, m) for m in ifs.maps
    )
    return {
        "stationary_converged": stat.converged,
        "stationary_residual": stat.residual,
        "n_components": len(comps),
        "minimality_verdict": minimality,
        "ergodicity_verdict": verdict.verdict,
        "quasi_invariant": quasi_ok,
        "error": None,
    }


def _quasi_ok(mu: GridMeasure, m) -> bool:
    from .grid_measures import quasi_invariance_check

    return quasi_invariance_check(mu, m, eps=1e-12).ok


def robustness_sweep(
    ifs: IFSystem,
    grid: Grid,
    delta: float,
    samples: int,
    seed: int = 0,
    eps: float = 0.05,
    max_len: int = 40,
    minimality_sample: int = 4,
    minimality_direction: str = INVERSE,
    n: int = 100_000,
    trials: int = 16,
    tol: float = 0.02,
    observables=None,
    stationary_tol: float = 1e-8,
    max_iter: int = 200_000,
    support_tol: float = 1e-10,
    threads: int = 1,
) -> SweepReport:
    """Survival fractions of pipeline properties under parameter perturbation.

    Per-sample failures are recorded, never raised; evaluation seeds are the
    same for every sample so delta = 0 repeats the baseline bit for bit.
    """
    if delta < 0:
        raise UsageError(f"delta must be >= 0, got {delta}")
    pipeline_seed = int(np.random.default_rng([seed, 3]).integers(2**31))
    run = lambda system: _pipeline(
        system,
        grid,
        pipeline_seed,
        stationary_tol,
        max_iter,
        support_tol,
        eps,
        max_len,
        minimality_sample,
        minimality_direction,
        n,
        trials,
        tol,
        observables,
    )
    baseline = run(ifs)

    def one_sample(i: int) -> dict:
        rng = np.random.default_rng([seed, 4, i])
        try:
            system = _perturbed_system(ifs, delta, rng)
            return run(system)
        except Exception as exc:  # per-sample failures never abort the sweep
            return {prop: None for prop in _SWEEP_PROPERTIES} | {"error": f"{type(exc).__name__}: {exc}"}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one_sample, range(samples)))
    else:
        results = [one_sample(i) for i in range(samples)]

    survival = {}
    for prop in _SWEEP_PROPERTIES:
        kept = sum(
            1 for r in results if r.get("error") is None and r.get(prop) == baseline[prop]
        )
        survival[prop] = kept / samples if samples else 1.0
    errors = sum(1 for r in results if r.get("error") is not None)
    return SweepReport(
        delta=float(delta),
        samples=samples,
        baseline=baseline,
        results=tuple(results),
        survival=survival,
        errors=errors,
    )
