"""Stationary measures of the averaged operator and their ergodic components.

The averaged Ulam operator P of a map family is row stochastic, so fixed
probability row vectors (mu = mu P) always exist; they discretize the
stationary measures of the random system.  We compute one by power
iteration from the uniform vector, keeping a Cesaro running average of the
iterates alongside the raw iterate: the raw iterate converges geometrically
for aperiodic operators while the average damps oscillation in periodic
(permutation-like) cases.  Whichever first meets the residual tolerance is
returned.  Starting from uniform makes doubly stochastic operators (all
volume-preserving menu families under exact discretization) converge
immediately.

Ergodic components are approximated by the closed communicating classes of
the thresholded support graph: restrict P to boxes carrying mu-mass above
``tol``, draw an edge i -> j when P[i,j] > tol, and return the strongly
connected classes with no outgoing edges.  For permutation dynamics this
is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import maximum_filter
from scipy.sparse.csgraph import connected_components

from .errors import UsageError
from .grid_measures import BoxSet, Grid, GridMeasure, UlamMatrix, annealed_matrix, tv_distance
from .phase_maps import IFSystem

DEFAULT_FIXED_POINT_TOL = 1e-8
DEFAULT_SUPPORT_TOL = 1e-10
_AVG_CHECK_EVERY = 64


@dataclass(frozen=True)
class StationaryResult:
    measure: GridMeasure
    residual: float
    iterations: int
    converged: bool
    operator: UlamMatrix

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "operator": self.operator.provenance,
        }


def _tv_vec(a: np.ndarray, b: np.ndarray) -> float:
    return float(0.5 * np.abs(a - b).sum())


def stationary_from_matrix(
    ulam: UlamMatrix,
    tol: float = DEFAULT_FIXED_POINT_TOL,
    max_iter: int = 200_000,
) -> StationaryResult:
    """Fixed probability vector of a row-stochastic operator, from uniform.

    Iterates to a quarter of the requested tolerance (success still means
    residual <= tol), so two operators sharing their fixed vectors, such as
    P and the half-lazy (I+P)/2, return measures within 2*tol of each other
    on well-conditioned problems.
    """
    if tol <= 0:
        raise UsageError(f"tol must be > 0, got {tol}")
    P = ulam.matrix
    n = ulam.grid.n_boxes
    stop = tol / 4.0
    v = np.full(n, 1.0 / n)
    avg = v.copy()
    best, best_resid = v, np.inf
    for t in range(1, max_iter + 1):
        v_next = v @ P
        resid = _tv_vec(v, v_next)
        if resid < best_resid:
            best, best_resid = v, resid
        if resid <= stop:
            return StationaryResult(GridMeasure(ulam.grid, v / v.sum()), resid, t, True, ulam)
        avg += (v_next - avg) / (t + 1.0)
        if t % _AVG_CHECK_EVERY == 0:
            avg_resid = _tv_vec(avg, avg @ P)
            if avg_resid < best_resid:
                best, best_resid = avg.copy(), avg_resid
            if avg_resid <= stop:
                return StationaryResult(
                    GridMeasure(ulam.grid, avg / avg.sum()), avg_resid, t, True, ulam
                )
        v = v_next
    converged = best_resid <= tol
    return StationaryResult(
        GridMeasure(ulam.grid, best / best.sum()), float(best_resid), max_iter, converged, ulam
    )


def stationary_measure(
    ifs: IFSystem,
    grid: Grid,
    tol: float = DEFAULT_FIXED_POINT_TOL,
    max_iter: int = 200_000,
    method: str = "auto",
    samples: int = 256,
    seed: int = 0,
) -> StationaryResult:
    """Stationary measure of the averaged operator of ``ifs`` on ``grid``."""
    ulam = annealed_matrix(ifs, grid, method=method, samples=samples, seed=seed)
    return stationary_from_matrix(ulam, tol=tol, max_iter=max_iter)


def ergodic_components(
    ulam: UlamMatrix,
    mu: GridMeasure,
    tol: float = DEFAULT_SUPPORT_TOL,
) -> list[BoxSet]:
    """Closed communicating classes of the support graph, as candidate components.

    Components are disjoint and returned sorted by smallest box index.
    """
    if mu.grid != ulam.grid:
        raise UsageError("measure and operator grids differ")
    support = np.nonzero(mu.weights > tol)[0]
    if support.size == 0:
        raise UsageError("measure has empty support at this threshold")
    sub = ulam.matrix[np.ix_(support, support)]
    graph = sub > tol
    n_scc, labels = connected_components(graph, directed=True, connection="strong")
    coo = graph.tocoo()
    has_exit = np.zeros(n_scc, dtype=bool)
    for i, j in zip(labels[coo.row], labels[coo.col]):
        if i != j:
            has_exit[i] = True
    closed = [c for c in range(n_scc) if not has_exit[c]]
    comps = [BoxSet.from_indices(mu.grid, support[labels == c]) for c in closed]
    comps.sort(key=lambda b: min(b.indices))
    return comps


@dataclass(frozen=True)
class PositivityReport:
    ok: bool
    block_size: int
    largest_null_run: int
    null_run_start: int | None

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "block_size": self.block_size,
            "largest_null_run": self.largest_null_run,
            "null_run_start": self.null_run_start,
        }


def _largest_circular_zero_run(positive: np.ndarray) -> tuple[int, int | None]:
    n = positive.size
    if positive.all():
        return 0, None
    if not positive.any():
        return n, 0
    doubled = np.concatenate([positive, positive])
    best_len, best_start, run = 0, None, 0
    for i in range(2 * n):
        if not doubled[i]:
            run += 1
            if run > best_len and i - run + 1 < n:
                best_len, best_start = min(run, n), i - run + 1
        else:
            run = 0
    return best_len, best_start


def open_positivity_check(
    mu: GridMeasure,
    min_ball_boxes: int,
    pos_tol: float = 0.0,
) -> PositivityReport:
    """Does every ball of ``min_ball_boxes`` boxes carry positive mass?

    Balls are contiguous circular runs on the circle and wrap-around square
    blocks on the torus; a box counts as positive when its weight exceeds
    ``pos_tol``.
    """
    if min_ball_boxes < 1:
        raise UsageError(f"min_ball_boxes must be >= 1, got {min_ball_boxes}")
    positive = mu.weights > pos_tol
    if mu.grid.space.dim == 1:
        run, start = _largest_circular_zero_run(positive)
        return PositivityReport(run < min_ball_boxes, min_ball_boxes, run, start)
    n = mu.grid.resolution
    field = positive.reshape(n, n)
    # a fully-null s x s block exists iff the s-window maximum hits 0 somewhere
    has_null_block = lambda s: bool((maximum_filter(field, size=s, mode="wrap") == 0).any())
    lo, hi = 0, n  # largest null block size is in [lo, hi]
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if has_null_block(mid):
            lo = mid
        else:
            hi = mid - 1
    largest = lo
    start = None
    if largest > 0:
        nulls = np.argwhere(maximum_filter(field, size=largest, mode="wrap") == 0)
        anchor = nulls[0]
        start = int(anchor[0]) * n + int(anchor[1])
    return PositivityReport(largest < min_ball_boxes, min_ball_boxes, largest, start)


@dataclass(frozen=True)
class OpenModZeroReport:
    interior_boxes: int
    boundary_boxes: int
    boundary_fraction: float
    threshold: float
    grid_open: bool

    def to_dict(self) -> dict:
        return {
            "interior_boxes": self.interior_boxes,
            "boundary_boxes": self.boundary_boxes,
            "boundary_fraction": self.boundary_fraction,
            "threshold": self.threshold,
            "grid_open": self.grid_open,
        }


def component_is_open_mod0(component: BoxSet, grid: Grid) -> OpenModZeroReport:
    """Interior/boundary box counts and the grid-open declaration.

    A box is interior when all its grid neighbors (2 on the circle, 4 on
    the torus) belong to the component.  The component is declared
    grid-open when boundary_count <= 4 * dim * |C| / N, i.e. the boundary
    stays at the perimeter scale of a genuinely open set discretized at
    resolution N.
    """
    if component.grid != grid:
        raise UsageError("component lives on a different grid")
    if len(component) == 0:
        raise UsageError("component must be nonempty")
    mask = component.membership_mask()
    n = grid.resolution
    if grid.space.dim == 1:
        interior = mask & np.roll(mask, 1) & np.roll(mask, -1)
    else:
        field = mask.reshape(n, n)
        interior = (
            field
            & np.roll(field, 1, axis=0)
            & np.roll(field, -1, axis=0)
            & np.roll(field, 1, axis=1)
            & np.roll(field, -1, axis=1)
        ).ravel()
    n_interior = int((interior & mask).sum())
    n_boundary = len(component) - n_interior
    fraction = n_boundary / len(component)
    threshold = 4.0 * grid.space.dim * len(component) / n
    return OpenModZeroReport(
        interior_boxes=n_interior,
        boundary_boxes=n_boundary,
        boundary_fraction=fraction,
        threshold=threshold,
        grid_open=n_boundary <= threshold,
    )


def lazy_operator(ulam: UlamMatrix) -> UlamMatrix:
    """The half-lazy operator (I + P) / 2, sharing P's fixed vectors."""
    n = ulam.grid.n_boxes
    lazy = (sp.identity(n, format="csr") + ulam.matrix) * 0.5
    return UlamMatrix(ulam.grid, lazy.tocsr(), provenance=f"lazy({ulam.provenance})")
