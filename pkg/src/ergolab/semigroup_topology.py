"""Word search over the forward and backward semigroups.

Four closely related searches live here, all over finite compositions of
the map family enumerated in length-lexicographic order (shorter words
first, ties broken by smallest symbol):

  * ``minimality_check``           is every orbit of words up to max_len
                                   eps-dense?  A semi-decision: positive
                                   verdicts hold "up to (eps, max_len)",
                                   negative verdicts are certified only
                                   when a finite invariant orbit closes.
  * ``strong_transitivity_witness`` first word T with T(U) meeting W.
  * ``finite_cover``               greedy set cover of the whole space by
                                   word images of U.
  * ``skew_transitivity_word``     symbol prefix steering a cylinder-and-set
                                   rectangle into another, assembled from a
                                   connecting witness word.

Box-set images are exact on the circle (monotone lifts map arcs to arcs)
and sampled on the torus (8x8 stratified lattice per box, dilated by one
box to absorb sampling gaps).  Every returned witness, cover, and symbol
prefix is re-verified by direct forward evaluation before it is returned.
All searches are deterministic: sampling lattices are fixed and start
points come from explicit seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import BudgetError, NumericalError, UsageError
from .grid_measures import BoxSet, Grid, ulam_matrix
from .phase_maps import FORWARD, IFSystem, Word, apply_word

_EXHAUSTIVE_CAP = 200_000  # max enumerated words for exhaustive minimality
_CLOSURE_CELL = 1e-9  # dedup resolution for detecting finite invariant orbits


# ---------------------------------------------------------------------------
# box-set geometry helpers


def _boxset_arcs(boxes: BoxSet) -> list[tuple[float, float]]:
    """Maximal arcs [lo, hi) of a circle box set (hi may exceed 1 when wrapping)."""
    n = boxes.grid.resolution
    idx = sorted(boxes.indices)
    if not idx:
        return []
    if len(idx) == n:
        return [(0.0, 1.0)]
    runs = [[idx[0], idx[0]]]
    for b in idx[1:]:
        if b == runs[-1][1] + 1:
            runs[-1][1] = b
        else:
            runs.append([b, b])
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] == n - 1:
        runs[0][0] = runs.pop()[0] - n  # merge across the wrap point
    return [(lo / n, (hi + 1) / n) for lo, hi in runs]


def _image_arcs(arcs, maps_in_order) -> list[tuple[float, float]]:
    """Arc images under a composition of monotone circle lifts, lengths capped at 1."""
    out = []
    for lo, hi in arcs:
        for m in maps_in_order:
            lo, hi = float(m.lift(lo)), float(m.lift(hi))
        out.append((lo, min(hi, lo + 1.0)))
    return out


def _arcs_to_boxset(grid: Grid, arcs) -> BoxSet:
    from .grid_measures import _arc_boxes

    idx: set[int] = set()
    for lo, hi in arcs:
        idx.update(_arc_boxes(grid.resolution, lo, hi - lo))
    return BoxSet(grid, frozenset(idx))


def _box_lattice_points(boxes: BoxSet, per_side: int) -> np.ndarray:
    """Deterministic stratified lattice inside every box of the set."""
    grid = boxes.grid
    n = grid.resolution
    idx = boxes.as_array()
    offs = (np.arange(per_side) + 0.5) / per_side
    if grid.space.dim == 1:
        return ((idx[:, None] + offs[None, :]) / n).ravel()
    ox, oy = np.meshgrid(offs, offs, indexing="ij")
    cell = np.column_stack([ox.ravel(), oy.ravel()])
    coords = grid.box_coords(idx).astype(float)
    pts = (coords[:, None, :] + cell[None, :, :]) / n
    return pts.reshape(-1, 2)


def _dilate(boxes: BoxSet) -> BoxSet:
    """One-box dilation (8-neighborhood on the torus, +-1 on the circle)."""
    grid = boxes.grid
    n = grid.resolution
    idx = boxes.as_array()
    if grid.space.dim == 1:
        out = set(idx.tolist()) | set(((idx + 1) % n).tolist()) | set(((idx - 1) % n).tolist())
        return BoxSet(grid, frozenset(out))
    coords = grid.box_coords(idx)
    out = set()
    for dx in (-1, 0, 1):
        for dy in (-1, 0, 1):
            shifted = (coords + np.array([dx, dy])) % n
            out.update((shifted[:, 0] * n + shifted[:, 1]).tolist())
    return BoxSet(grid, frozenset(int(i) for i in out))


def image_boxset(ifs: IFSystem, word: Word, boxes: BoxSet, torus_samples_per_side: int = 8) -> BoxSet:
    """Image of a box set under a word: exact arcs on the circle, sampled+dilated on the torus."""
    maps = [ifs.map_for(s, d) for s, d in word.letters]
    if boxes.grid.space.dim == 1:
        return _arcs_to_boxset(boxes.grid, _image_arcs(_boxset_arcs(boxes), maps))
    pts = _box_lattice_points(boxes, torus_samples_per_side)
    for m in maps:
        pts = m.apply_points(pts)
    hit = BoxSet.from_indices(boxes.grid, np.unique(boxes.grid.box_index(pts)))
    return _dilate(hit)


# ---------------------------------------------------------------------------
# minimality


@dataclass(frozen=True)
class StartDiagnostics:
    start: tuple[float, ...]
    covering_radius: float
    orbit_points: int
    closed_orbit: bool


@dataclass(frozen=True)
class MinimalityResult:
    verdict: str  # "minimal" | "not_minimal" | "inconclusive"
    direction: str
    eps: float
    max_len: int
    mode: str
    worst_start: tuple[float, ...]
    worst_radius: float
    n_starts: int
    closed_orbit_size: int | None

    @property
    def minimal(self) -> bool:
        return self.verdict == "minimal"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "direction": self.direction,
            "eps": self.eps,
            "max_len": self.max_len,
            "mode": self.mode,
            "worst_start": list(self.worst_start),
            "worst_radius": self.worst_radius,
            "n_starts": self.n_starts,
            "closed_orbit_size": self.closed_orbit_size,
        }


def _circle_covering_radius(pts: np.ndarray) -> float:
    pts = np.sort(pts % 1.0)
    gaps = np.diff(np.concatenate([pts, [pts[0] + 1.0]]))
    return float(gaps.max() / 2.0)


def _torus_covering_radius(pts: np.ndarray, eval_step: float) -> float:
    """Upper bound on the covering radius via a KD-tree over wrapped replicas."""
    reps = [pts + np.array([dx, dy]) for dx in (-1, 0, 1) for dy in (-1, 0, 1)]
    tree = cKDTree(np.concatenate(reps))
    g = int(math.ceil(1.0 / eval_step))
    centers = (np.arange(g) + 0.5) / g
    xx, yy = np.meshgrid(centers, centers, indexing="ij")
    dists, _ = tree.query(np.column_stack([xx.ravel(), yy.ravel()]))
    return float(dists.max() + math.sqrt(2.0) / (2.0 * g))


def _orbit_exhaustive(maps, x0: np.ndarray, max_len: int, cap: int):
    """All word images of x0 up to max_len, deduplicated; reports orbit closure."""
    dim = x0.shape[-1] if x0.ndim else 1
    seen: dict[tuple, None] = {}

    def keys(pts):
        cells = np.round(np.atleast_2d(pts if dim > 1 else pts[:, None]) / _CLOSURE_CELL)
        return [tuple(row) for row in cells.astype(np.int64)]

    frontier = np.atleast_1d(x0) if dim == 1 else x0[None, :]
    all_pts = []
    closed = False
    total = 0
    for _ in range(max_len):
        children = np.concatenate([m.apply_points(frontier) for m in maps], axis=0)
        total += len(children)
        if total > cap:
            raise BudgetError(
                f"exhaustive orbit enumeration exceeded {cap} points; rerun with mode='greedy'",
                cap=cap,
            )
        fresh = []
        for pt, key in zip(children, keys(children)):
            if key not in seen:
                seen[key] = None
                fresh.append(pt)
        if not fresh:
            closed = True
            break
        frontier = np.stack(fresh)
        all_pts.append(frontier)
    pts = np.concatenate(all_pts) if all_pts else frontier
    return pts, closed


def _orbit_greedy(maps, x0: np.ndarray, eps: float, max_len: int, dim: int):
    """Reachable-set BFS with cell deduplication at eps/4 (points stay exact)."""
    cell = eps / 4.0
    g = int(math.ceil(1.0 / cell))
    frontier = np.atleast_1d(x0) if dim == 1 else x0[None, :]
    seen: set[int] = set()
    acc = []
    for _ in range(max_len):
        children = np.concatenate([m.apply_points(frontier) for m in maps], axis=0)
        if dim == 1:
            ids = np.minimum((children * g).astype(np.int64), g - 1)
        else:
            ij = np.minimum((children * g).astype(np.int64), g - 1)
            ids = ij[:, 0] * g + ij[:, 1]
        keep = []
        for i, cid in enumerate(ids.tolist()):
            if cid not in seen:
                seen.add(cid)
                keep.append(i)
        if not keep:
            break
        frontier = children[keep]
        acc.append(frontier)
    return (np.concatenate(acc) if acc else frontier), False


def minimality_check(
    ifs: IFSystem,
    direction: str = FORWARD,
    eps: float = 0.05,
    max_len: int = 40,
    sample: int = 16,
    seed: int = 0,
    grid: Grid | None = None,
    mode: str = "auto",
    exhaustive_cap: int = _EXHAUSTIVE_CAP,
) -> MinimalityResult:
    """Is every word orbit up to ``max_len`` eps-dense, over sampled start points?

    Start points: ``sample`` seeded uniform draws, plus all box centers when
    a grid with at most 256 boxes is supplied.  In "auto" mode the search is
    exhaustive when the word count fits ``exhaustive_cap`` and switches to
    the deduplicating greedy frontier otherwise; forcing "exhaustive" over
    budget raises a budget error that points at greedy mode.
    """
    if eps <= 0:
        raise UsageError(f"eps must be > 0, got {eps}")
    if sample < 1:
        raise UsageError("need at least one start point")
    maps = ifs.directed_maps(direction)
    dim = ifs.space.dim

    total_words = sum(ifs.k**length for length in range(1, max_len + 1))
    if mode == "auto":
        mode = "exhaustive" if total_words <= exhaustive_cap else "greedy"
    elif mode == "exhaustive" and total_words > exhaustive_cap:
        raise BudgetError(
            f"{total_words} words exceed the exhaustive cap {exhaustive_cap}; "
            "use mode='greedy'",
            total_words=total_words,
            cap=exhaustive_cap,
        )
    elif mode not in ("exhaustive", "greedy"):
        raise UsageError(f"unknown mode {mode!r}")

    rng = np.random.default_rng([seed, 5])
    starts = rng.random((sample,) if dim == 1 else (sample, 2))
    if grid is not None and grid.n_boxes <= 256:
        starts = np.concatenate([starts, grid.centers()], axis=0)

    worst_radius = -1.0
    worst_start = None
    worst_closed = False
    worst_orbit = 0
    for x0 in starts:
        x0 = np.asarray(x0, dtype=float)
        if mode == "exhaustive":
            pts, closed = _orbit_exhaustive(maps, x0, max_len, exhaustive_cap)
        else:
            pts, closed = _orbit_greedy(maps, x0, eps, max_len, dim)
        if dim == 1:
            radius = _circle_covering_radius(pts)
        else:
            radius = _torus_covering_radius(pts, eval_step=eps / 8.0)
        if radius > worst_radius:
            worst_radius = radius
            worst_start = x0
            worst_closed = closed
            worst_orbit = len(pts)

    if worst_radius <= eps:
        verdict = "minimal"
    elif worst_closed:
        verdict = "not_minimal"
    else:
        verdict = "inconclusive"
    return MinimalityResult(
        verdict=verdict,
        direction=direction,
        eps=eps,
        max_len=max_len,
        mode=mode,
        worst_start=tuple(np.atleast_1d(worst_start).tolist()),
        worst_radius=worst_radius,
        n_starts=len(starts),
        closed_orbit_size=worst_orbit if worst_closed else None,
    )


# ---------------------------------------------------------------------------
# strong transitivity witness


@dataclass(frozen=True)
class WitnessResult:
    word: Word
    words_searched: int
    hit_boxes: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "word": list(self.word.symbols),
            "length": len(self.word),
            "words_searched": self.words_searched,
            "hit_boxes": list(self.hit_boxes),
        }


def _witness_points(boxes: BoxSet, min_points: int = 64) -> np.ndarray:
    per_box = max(1, math.ceil(min_points / max(len(boxes), 1)))
    if boxes.grid.space.dim == 1:
        return _box_lattice_points(boxes, max(8, per_box))
    return _box_lattice_points(boxes, max(3, math.ceil(math.sqrt(per_box))))


def _witness_from_points(
    ifs: IFSystem,
    pts0: np.ndarray,
    target_mask: np.ndarray,
    grid: Grid,
    max_len: int,
    max_words: int,
):
    """Breadth-first word search from explicit seed points, length-lex order."""
    frontier: list[tuple[tuple[int, ...], np.ndarray]] = [((), pts0)]
    searched = 0
    for _ in range(max_len):
        nxt = []
        for symbols, pts in frontier:
            for s in range(1, ifs.k + 1):
                searched += 1
                if searched > max_words:
                    raise BudgetError(
                        f"witness search exhausted {max_words} words without a hit "
                        f"(inconclusive, not a disproof)",
                        words_searched=searched - 1,
                        max_len=max_len,
                    )
                child = ifs.maps[s - 1].apply_points(pts)
                word = symbols + (s,)
                hits = target_mask[grid.box_index(child)]
                if hits.any():
                    return word, searched, child[hits]
                nxt.append((word, child))
        frontier = nxt
    raise BudgetError(
        f"no witness word of length <= {max_len} found (inconclusive, not a disproof)",
        words_searched=searched,
        max_len=max_len,
    )


def strong_transitivity_witness(
    ifs: IFSystem,
    u: BoxSet,
    w: BoxSet,
    max_len: int = 24,
    max_words: int = 100_000,
) -> WitnessResult:
    """First forward word T (length-lex order) with T(U) meeting W.

    The hit is established on a dense deterministic sample of U and
    re-verified through ``apply_word`` before returning.
    """
    if len(u) == 0 or len(w) == 0:
        raise UsageError("witness search needs nonempty U and W")
    if u.grid != w.grid:
        raise UsageError("U and W live on different grids")
    pts0 = _witness_points(u)
    symbols, searched, _ = _witness_from_points(
        ifs, pts0, w.membership_mask(), u.grid, max_len, max_words
    )
    word = Word.forward(symbols)
    images = apply_word(word, ifs, pts0)
    hit_mask = w.membership_mask()[u.grid.box_index(images)]
    if not hit_mask.any():
        raise NumericalError("witness verification failed after search")  # pragma: no cover
    hit_boxes = np.unique(u.grid.box_index(images[hit_mask]))
    return WitnessResult(word=word, words_searched=searched, hit_boxes=tuple(int(b) for b in hit_boxes))


# ---------------------------------------------------------------------------
# finite cover


@dataclass(frozen=True)
class CoverResult:
    words: tuple[Word, ...]
    covered: BoxSet
    coverage_fraction: float

    def to_dict(self) -> dict:
        return {
            "words": [list(w.symbols) for w in self.words],
            "m": len(self.words),
            "coverage_fraction": self.coverage_fraction,
            "covered_boxes": [int(b) for b in self.covered.as_array()],
        }


def _enumerate_words(k: int, max_len: int, max_words: int):
    """(symbols,) tuples in length-lexicographic order, up to max_words."""
    frontier = [()]
    emitted = 0
    for _ in range(max_len):
        nxt = []
        for symbols in frontier:
            for s in range(1, k + 1):
                word = symbols + (s,)
                emitted += 1
                if emitted > max_words:
                    return
                yield word
                nxt.append(word)
        frontier = nxt


def _verify_cover_circle(ifs: IFSystem, words, u: BoxSet) -> BoxSet:
    """Independent image computation through per-map Ulam support propagation."""
    grid = u.grid
    mats = {}
    covered = np.zeros(grid.n_boxes, dtype=bool)
    for word in words:
        vec = u.membership_mask().astype(float)
        for s, d in word.letters:
            m = ifs.map_for(s, d)
            key = (s, d)
            if key not in mats:
                mats[key] = ulam_matrix(m, grid).matrix
            vec = vec @ mats[key]
        covered |= vec > 1e-12
    return BoxSet.from_indices(grid, np.nonzero(covered)[0])


def _verify_cover_torus(ifs: IFSystem, words, u: BoxSet) -> BoxSet:
    covered = BoxSet.empty(u.grid)
    for word in words:
        covered = covered.union(image_boxset(ifs, word, u, torus_samples_per_side=16))
    return covered


def finite_cover(
    ifs: IFSystem,
    u: BoxSet,
    max_len: int = 12,
    max_words: int = 100_000,
) -> CoverResult:
    """Greedy cover of the whole space by word images of U.

    Candidates are enumerated length-lexicographically; the greedy step
    picks the word covering the most uncovered boxes (ties to the earlier
    word).  The returned cover is re-verified with independently computed
    images; an incomplete cover raises a budget error carrying the achieved
    coverage fraction.
    """
    if len(u) == 0:
        raise UsageError("cover needs a nonempty U")
    grid = u.grid
    candidates: list[tuple[Word, np.ndarray]] = []
    for symbols in _enumerate_words(ifs.k, max_len, max_words):
        word = Word.forward(symbols)
        candidates.append((word, image_boxset(ifs, word, u).membership_mask()))

    covered = np.zeros(grid.n_boxes, dtype=bool)
    chosen: list[Word] = []
    while not covered.all():
        best_gain, best_idx = 0, None
        for i, (_, mask) in enumerate(candidates):
            gain = int((mask & ~covered).sum())
            if gain > best_gain:
                best_gain, best_idx = gain, i
        if best_idx is None:
            raise BudgetError(
                f"cover incomplete within budget (max_len={max_len}): "
                f"covered {covered.mean():.4f} of boxes",
                coverage_fraction=float(covered.mean()),
                max_len=max_len,
            )
        word, mask = candidates.pop(best_idx)
        chosen.append(word)
        covered |= mask

    verified = (
        _verify_cover_circle(ifs, chosen, u)
        if grid.space.dim == 1
        else _verify_cover_torus(ifs, chosen, u)
    )
    if len(verified) != grid.n_boxes:
        raise NumericalError(
            f"cover verification found {grid.n_boxes - len(verified)} uncovered boxes"
        )  # pragma: no cover
    return CoverResult(
        words=tuple(chosen),
        covered=BoxSet.from_indices(grid, np.nonzero(covered)[0]),
        coverage_fraction=1.0,
    )


# ---------------------------------------------------------------------------
# skew-product transitivity word


@dataclass(frozen=True)
class SkewWordResult:
    symbols: tuple[int, ...]
    steps: int
    connecting_word: Word
    landing_boxes: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "symbols": list(self.symbols),
            "steps": self.steps,
            "connecting_word": list(self.connecting_word.symbols),
            "landing_boxes": list(self.landing_boxes),
        }


def skew_transitivity_word(
    ifs: IFSystem,
    cylinder,
    u: BoxSet,
    cylinder2,
    v: BoxSet,
    max_len: int = 24,
    max_words: int = 100_000,
) -> SkewWordResult:
    """Symbol prefix steering (cylinder, U) into (cylinder2, V).

    The prefix is cylinder's word, then a connecting witness word found from
    the exact image points of U, then cylinder2's word; the step count is
    the length of the first two blocks.  Verified by direct iteration of a
    dense sample of U.
    """
    if len(u) == 0 or len(v) == 0:
        raise UsageError("skew word needs nonempty U and V")
    c_word = tuple(int(s) for s in getattr(cylinder, "word", cylinder))
    c2_word = tuple(int(s) for s in getattr(cylinder2, "word", cylinder2))
    for s in c_word + c2_word:
        if not 1 <= s <= ifs.k:
            raise UsageError(f"cylinder symbol {s} outside 1..{ifs.k}")

    pts = _witness_points(u)
    for s in c_word:
        pts = ifs.maps[s - 1].apply_points(pts)
    connecting, _, _ = _witness_from_points(
        ifs, pts, v.membership_mask(), u.grid, max_len, max_words
    )
    symbols = c_word + connecting + c2_word
    steps = len(c_word) + len(connecting)

    # direct verification from the original set
    check = _witness_points(u)
    for s in symbols[:steps]:
        check = ifs.maps[s - 1].apply_points(check)
    hit_mask = v.membership_mask()[u.grid.box_index(check)]
    if not hit_mask.any():
        raise NumericalError("skew word verification failed")  # pragma: no cover
    landing = np.unique(u.grid.box_index(check[hit_mask]))
    return SkewWordResult(
        symbols=symbols,
        steps=steps,
        connecting_word=Word.forward(connecting),
        landing_boxes=tuple(int(b) for b in landing),
    )
