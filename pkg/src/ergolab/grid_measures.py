"""Uniform box partitions, discretized measures/sets, and Ulam matrices.

A ``Grid`` partitions the circle into N half-open boxes (the torus into
N x N), a ``GridMeasure`` is a probability vector over boxes, a ``BoxSet``
is a union of boxes, and an ``UlamMatrix`` is the row-stochastic
discretization of a map's pushforward: entry (i, j) is the fraction of
box i's volume mapped into box j.  The averaged operator of a whole map
family (probability-weighted sum of the per-map matrices) discretizes the
one-step transfer operator of the random system, so its fixed probability
vectors approximate stationary measures.

Two discretization methods are available:

  * ``exact``    circle maps via monotone lift interval images; toral
                 translations via the 4-way product overlap split; toral
                 automorphisms via the lattice-periodic offset weights of
                 the image parallelogram of a single box.
  * ``sampling`` stratified midpoint-jittered sample points per box with
                 per-row seeds derived from a root seed, so assembly is
                 reproducible (and could be parallelized per row).

Exactness matters: volume-preserving maps get exactly doubly stochastic
matrices, hence the uniform vector is an exact fixed point, and
grid-aligned rotations produce exact permutation matrices.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import UsageError
from .phase_maps import (
    CIRCLE,
    FORWARD,
    CircleDiffeo,
    IFSystem,
    PhaseSpace,
    Rotation,
    SmoothMap,
    ToralAutomorphism,
    ToralTranslation,
)

# overlaps shorter than this (in units of box side) are treated as empty,
# so float dust on arc endpoints cannot create spurious matrix entries
_SLIVER_TOL = 1e-9

_ALIGN_TOL = 1e-12  # snap-to-grid tolerance for detecting grid-aligned shifts


@dataclass(frozen=True)
class Grid:
    """Uniform partition: N boxes on the circle, N x N boxes on the torus."""

    space: PhaseSpace
    resolution: int

    def __post_init__(self):
        if self.resolution < 2:
            raise UsageError(f"grid resolution must be >= 2, got {self.resolution}")

    @property
    def n_boxes(self) -> int:
        return self.resolution ** self.space.dim

    @property
    def box_volume(self) -> float:
        return 1.0 / self.n_boxes

    def box_index(self, pts) -> np.ndarray:
        """Box index of each point; torus boxes are indexed ix * N + iy."""
        pts = np.asarray(pts, dtype=float) % 1.0
        n = self.resolution
        if self.space.dim == 1:
            return np.minimum((pts * n).astype(np.int64), n - 1)
        ij = np.minimum((pts * n).astype(np.int64), n - 1)
        return ij[..., 0] * n + ij[..., 1]

    def centers(self) -> np.ndarray:
        """Box centers: shape (N,) on the circle, (N*N, 2) on the torus."""
        n = self.resolution
        c = (np.arange(n) + 0.5) / n
        if self.space.dim == 1:
            return c
        xx, yy = np.meshgrid(c, c, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    def box_coords(self, indices) -> np.ndarray:
        """(ix, iy) pairs for torus box indices."""
        idx = np.asarray(indices, dtype=np.int64)
        n = self.resolution
        return np.stack([idx // n, idx % n], axis=-1)


@dataclass(frozen=True)
class GridMeasure:
    """Nonnegative weights over grid boxes summing to 1."""

    grid: Grid
    weights: np.ndarray

    MASS_TOL = 1e-9

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).copy()
        if w.shape != (self.grid.n_boxes,):
            raise UsageError(f"weights shape {w.shape} != ({self.grid.n_boxes},)")
        if np.any(w < 0.0):
            raise UsageError(f"negative weight {w.min()!r}")
        if abs(w.sum() - 1.0) > self.MASS_TOL:
            raise UsageError(f"weights sum to {w.sum()!r}, expected 1")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, grid: Grid) -> "GridMeasure":
        return cls(grid, np.full(grid.n_boxes, 1.0 / grid.n_boxes))

    @classmethod
    def point_mass(cls, grid: Grid, box: int) -> "GridMeasure":
        w = np.zeros(grid.n_boxes)
        w[box] = 1.0
        return cls(grid, w)

    def mass(self, boxes: "BoxSet") -> float:
        if boxes.grid != self.grid:
            raise UsageError("box set lives on a different grid")
        return float(self.weights[boxes.as_array()].sum())


@dataclass(frozen=True)
class BoxSet:
    """A union of grid boxes, stored as a deduplicated frozen index set."""

    grid: Grid
    indices: frozenset[int]

    def __post_init__(self):
        idx = frozenset(int(i) for i in self.indices)
        for i in idx:
            if not 0 <= i < self.grid.n_boxes:
                raise UsageError(f"box index {i} outside 0..{self.grid.n_boxes - 1}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_indices(cls, grid: Grid, indices) -> "BoxSet":
        return cls(grid, frozenset(int(i) for i in np.asarray(list(indices)).ravel()))

    @classmethod
    def all_boxes(cls, grid: Grid) -> "BoxSet":
        return cls(grid, frozenset(range(grid.n_boxes)))

    @classmethod
    def empty(cls, grid: Grid) -> "BoxSet":
        return cls(grid, frozenset())

    @classmethod
    def from_interval(cls, grid: Grid, lo: float, hi: float) -> "BoxSet":
        """Circle boxes overlapping the arc [lo, hi) (positive-length overlap only)."""
        if grid.space.dim != 1:
            raise UsageError("from_interval is for circle grids; use from_rect on the torus")
        return cls(grid, frozenset(_arc_boxes(grid.resolution, lo, hi - lo)))

    @classmethod
    def from_rect(cls, grid: Grid, x0: float, x1: float, y0: float, y1: float) -> "BoxSet":
        """Torus boxes overlapping [x0,x1) x [y0,y1)."""
        if grid.space.dim != 2:
            raise UsageError("from_rect is for torus grids")
        n = grid.resolution
        xs = _arc_boxes(n, x0, x1 - x0)
        ys = _arc_boxes(n, y0, y1 - y0)
        return cls(grid, frozenset(ix * n + iy for ix in xs for iy in ys))

    def as_array(self) -> np.ndarray:
        return np.array(sorted(self.indices), dtype=np.int64)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, box: int) -> bool:
        return int(box) in self.indices

    def _binop(self, other: "BoxSet", op) -> "BoxSet":
        if other.grid != self.grid:
            raise UsageError("box sets live on different grids")
        return BoxSet(self.grid, op(self.indices, other.indices))

    def union(self, other: "BoxSet") -> "BoxSet":
        return self._binop(other, frozenset.union)

    def intersection(self, other: "BoxSet") -> "BoxSet":
        return self._binop(other, frozenset.intersection)

    def symmetric_difference(self, other: "BoxSet") -> "BoxSet":
        return self._binop(other, frozenset.symmetric_difference)

    def complement(self) -> "BoxSet":
        return BoxSet(self.grid, frozenset(range(self.grid.n_boxes)) - self.indices)

    def membership_mask(self) -> np.ndarray:
        mask = np.zeros(self.grid.n_boxes, dtype=bool)
        if self.indices:
            mask[self.as_array()] = True
        return mask


def _arc_boxes(n: int, lo: float, length: float) -> list[int]:
    """Boxes of an N-partition overlapping the arc [lo, lo+length) mod 1."""
    if length <= 0.0:
        return []
    if length >= 1.0:
        return list(range(n))
    lo = lo % 1.0
    hi = lo + length
    out: set[int] = set()
    segments = [(lo, min(hi, 1.0))]
    if hi > 1.0:
        segments.append((0.0, hi - 1.0))
    for seg_lo, seg_hi in segments:
        j0 = int(math.floor(seg_lo * n))
        j1 = int(math.ceil(seg_hi * n))
        for j in range(j0, j1):
            overlap = min(seg_hi, (j + 1) / n) - max(seg_lo, j / n)
            if overlap * n > _SLIVER_TOL:
                out.add(j % n)
    return sorted(out)


@dataclass(frozen=True)
class UlamMatrix:
    """Row-stochastic sparse discretization of a map's pushforward."""

    grid: Grid
    matrix: sp.csr_matrix
    provenance: str

    ROW_SUM_TOL = 1e-9

    def __post_init__(self):
        m = self.matrix.tocsr()
        n = self.grid.n_boxes
        if m.shape != (n, n):
            raise UsageError(f"matrix shape {m.shape} != ({n},{n})")
        row_sums = np.asarray(m.sum(axis=1)).ravel()
        if np.max(np.abs(row_sums - 1.0), initial=0.0) > self.ROW_SUM_TOL:
            raise UsageError("Ulam matrix rows must sum to 1")
        if m.nnz and (m.data.min() < -1e-15 or m.data.max() > 1.0 + 1e-12):
            raise UsageError("Ulam entries must lie in [0,1]")
        object.__setattr__(self, "matrix", m)


def _normalize_rows(m: sp.csr_matrix) -> sp.csr_matrix:
    sums = np.asarray(m.sum(axis=1)).ravel()
    if np.any(sums <= 0):
        raise UsageError("empty Ulam row (map image missed the grid?)")
    return (sp.diags(1.0 / sums) @ m).tocsr()


def _circle_lift_values(m: SmoothMap, grid: Grid) -> np.ndarray:
    """Monotone lift of the (possibly inverted) circle map at grid nodes 0..N."""
    nodes = np.arange(grid.resolution + 1) / grid.resolution
    return np.asarray(m.lift(nodes), dtype=float)


def _ulam_exact_circle(m: SmoothMap, grid: Grid) -> sp.csr_matrix:
    n = grid.resolution
    if isinstance(m, Rotation):
        # snap to an exact permutation when the shift is grid-aligned
        shift = m.alpha if m.direction == FORWARD else -m.alpha
        scaled = shift * n
        if abs(scaled - round(scaled)) <= _ALIGN_TOL * max(1.0, abs(scaled)):
            k = int(round(scaled)) % n
            cols = (np.arange(n) + k) % n
            return sp.csr_matrix((np.ones(n), (np.arange(n), cols)), shape=(n, n))
    lifts = _circle_lift_values(m, grid)
    rows, cols, vals = [], [], []
    for i in range(n):
        lo, hi = lifts[i], lifts[i + 1]
        arc = hi - lo
        j0 = int(math.floor(lo * n))
        j1 = int(math.ceil(hi * n))
        for j in range(j0, j1):
            overlap = min(hi, (j + 1) / n) - max(lo, j / n)
            if overlap * n > _SLIVER_TOL:
                rows.append(i)
                cols.append(j % n)
                vals.append(overlap / arc)
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return _normalize_rows(mat)


def _split_shift(shift: float, n: int) -> tuple[int, float]:
    """Integer and fractional parts of a shift measured in box widths."""
    scaled = (shift % 1.0) * n
    base = math.floor(scaled)
    frac = scaled - base
    if frac < _ALIGN_TOL:
        frac = 0.0
    elif frac > 1.0 - _ALIGN_TOL:
        base, frac = base + 1, 0.0
    return int(base) % n, frac


def _ulam_exact_translation(m: ToralTranslation, grid: Grid) -> sp.csr_matrix:
    n = grid.resolution
    vec = m.vector if m.direction == FORWARD else -m.vector
    kx, fx = _split_shift(float(vec[0]), n)
    ky, fy = _split_shift(float(vec[1]), n)
    pieces = [
        (0, 0, (1.0 - fx) * (1.0 - fy)),
        (1, 0, fx * (1.0 - fy)),
        (0, 1, (1.0 - fx) * fy),
        (1, 1, fx * fy),
    ]
    ix = np.arange(n * n, dtype=np.int64) // n
    iy = np.arange(n * n, dtype=np.int64) % n
    rows, cols, vals = [], [], []
    for dx, dy, w in pieces:
        if w <= 0.0:
            continue
        jx = (ix + kx + dx) % n
        jy = (iy + ky + dy) % n
        rows.append(np.arange(n * n, dtype=np.int64))
        cols.append(jx * n + jy)
        vals.append(np.full(n * n, w))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n * n, n * n)
    ).tocsr()
    mat.sum_duplicates()
    return _normalize_rows(mat)


def _clip_convex(poly: list[tuple[float, float]], axis: int, c: float, keep_below: bool):
    """Sutherland-Hodgman clip of a convex polygon against an axis-aligned halfplane."""
    out: list[tuple[float, float]] = []
    for i, p in enumerate(poly):
        q = poly[(i + 1) % len(poly)]
        p_in = (p[axis] <= c) if keep_below else (p[axis] >= c)
        q_in = (q[axis] <= c) if keep_below else (q[axis] >= c)
        if p_in:
            out.append(p)
        if p_in != q_in:
            t = (c - p[axis]) / (q[axis] - p[axis])
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def _poly_area(poly) -> float:
    area = 0.0
    for i, (x0, y0) in enumerate(poly):
        x1, y1 = poly[(i + 1) % len(poly)]
        area += x0 * y1 - x1 * y0
    return abs(area) / 2.0


def _automorphism_offsets(m: ToralAutomorphism) -> list[tuple[int, int, float]]:
    """Offsets (p, q) and area weights of the image parallelogram of one box.

    The image of any box under z -> L z is a translate (by a lattice vector)
    of L [0,1)^2, so the overlap weights with the box lattice are the same
    for every box; they sum to |det L| = 1.
    """
    L = m.array if m.direction == FORWARD else m.inverse_array
    verts = [
        (0.0, 0.0),
        (L[0, 0], L[1, 0]),
        (L[0, 0] + L[0, 1], L[1, 0] + L[1, 1]),
        (L[0, 1], L[1, 1]),
    ]
    xs = [v[0] for v in verts]
    ys = [v[1] for v in verts]
    out: list[tuple[int, int, float]] = []
    for p in range(int(math.floor(min(xs))), int(math.ceil(max(xs)))):
        for q in range(int(math.floor(min(ys))), int(math.ceil(max(ys)))):
            piece = _clip_convex(verts, 0, float(p), keep_below=False)
            if piece:
                piece = _clip_convex(piece, 0, float(p + 1), keep_below=True)
            if piece:
                piece = _clip_convex(piece, 1, float(q), keep_below=False)
            if piece:
                piece = _clip_convex(piece, 1, float(q + 1), keep_below=True)
            if piece:
                area = _poly_area(piece)
                if area > _SLIVER_TOL:
                    out.append((p, q, area))
    total = sum(w for _, _, w in out)
    return [(p, q, w / total) for p, q, w in out]


def _ulam_exact_automorphism(m: ToralAutomorphism, grid: Grid) -> sp.csr_matrix:
    n = grid.resolution
    L = (m.array if m.direction == FORWARD else m.inverse_array).astype(np.int64)
    offsets = _automorphism_offsets(m)
    ix = np.arange(n * n, dtype=np.int64) // n
    iy = np.arange(n * n, dtype=np.int64) % n
    base_x = L[0, 0] * ix + L[0, 1] * iy
    base_y = L[1, 0] * ix + L[1, 1] * iy
    rows, cols, vals = [], [], []
    for p, q, w in offsets:
        jx = (base_x + p) % n
        jy = (base_y + q) % n
        rows.append(np.arange(n * n, dtype=np.int64))
        cols.append(jx * n + jy)
        vals.append(np.full(n * n, w))
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n * n, n * n)
    ).tocsr()
    mat.sum_duplicates()
    return _normalize_rows(mat)


def _stratified_offsets(dim: int, s: int, rng: np.random.Generator) -> np.ndarray:
    """Midpoint-jittered stratified offsets in [0,1)^dim (s strata per axis in 1D, ~sqrt(s) in 2D)."""
    if dim == 1:
        u = (np.arange(s) + rng.random(s)) / s
        return u[:, None]
    side = max(2, int(round(math.sqrt(s))))
    g = np.arange(side)
    xx, yy = np.meshgrid(g, g, indexing="ij")
    u = np.column_stack([xx.ravel(), yy.ravel()]).astype(float)
    return (u + rng.random(u.shape)) / side


def _ulam_sampling(m: SmoothMap, grid: Grid, samples: int, seed: int) -> sp.csr_matrix:
    n_boxes = grid.n_boxes
    n = grid.resolution
    dim = grid.space.dim
    rows, cols, vals = [], [], []
    for i in range(n_boxes):
        rng = np.random.default_rng([seed, i])
        offs = _stratified_offsets(dim, samples, rng)
        if dim == 1:
            pts = (i + offs[:, 0]) / n
        else:
            pts = (np.array([i // n, i % n])[None, :] + offs) / n
        images = m.apply_points(pts)
        dest = grid.box_index(images)
        counts = np.bincount(dest, minlength=n_boxes)
        nz = np.nonzero(counts)[0]
        rows.extend([i] * len(nz))
        cols.extend(nz.tolist())
        vals.extend((counts[nz] / len(offs)).tolist())
    mat = sp.coo_matrix((vals, (rows, cols)), shape=(n_boxes, n_boxes)).tocsr()
    return _normalize_rows(mat)


def _supports_exact(m: SmoothMap, grid: Grid) -> bool:
    if grid.space.dim == 1:
        return isinstance(m, (Rotation, CircleDiffeo))
    return isinstance(m, (ToralTranslation, ToralAutomorphism))


def ulam_matrix(
    m: SmoothMap,
    grid: Grid,
    method: str = "auto",
    samples: int = 256,
    seed: int = 0,
) -> UlamMatrix:
    """Discretize a map's pushforward on the grid.

    ``method`` is one of "exact", "sampling", or "auto" (exact whenever the
    family supports it).  Sampling requires ``samples`` >= 16 points per box.
    """
    if m.space != grid.space:
        raise UsageError(f"map on {m.space.kind} cannot be discretized on a {grid.space.kind} grid")
    if method == "auto":
        method = "exact" if _supports_exact(m, grid) else "sampling"
    if method == "exact":
        if not _supports_exact(m, grid):
            raise UsageError(f"no exact discretization for {type(m).__name__} on {grid.space.kind}")
        if grid.space.dim == 1:
            mat = _ulam_exact_circle(m, grid)
        elif isinstance(m, ToralTranslation):
            mat = _ulam_exact_translation(m, grid)
        else:
            mat = _ulam_exact_automorphism(m, grid)
        tag = "exact"
    elif method == "sampling":
        if samples < 16:
            raise UsageError(f"sampling needs >= 16 points per box, got {samples}")
        mat = _ulam_sampling(m, grid, samples, seed)
        tag = f"sampling({samples})"
    else:
        raise UsageError(f"unknown Ulam method {method!r}")
    return UlamMatrix(grid, mat, provenance=f"{type(m).__name__}[{m.direction}]/{tag}")


def annealed_matrix(
    ifs: IFSystem,
    grid: Grid,
    method: str = "auto",
    samples: int = 256,
    seed: int = 0,
) -> UlamMatrix:
    """Probability-weighted average of the per-map Ulam matrices."""
    if ifs.space != grid.space:
        raise UsageError("system and grid phase spaces differ")
    total = None
    for p, m in zip(ifs.probs, ifs.maps):
        part = ulam_matrix(m, grid, method=method, samples=samples, seed=seed).matrix * p
        total = part if total is None else total + part
    return UlamMatrix(grid, total.tocsr(), provenance=f"annealed(k={ifs.k})")


def pushforward(mu: GridMeasure, ulam: UlamMatrix) -> GridMeasure:
    """Push a measure forward one step: row vector times matrix."""
    if mu.grid != ulam.grid:
        raise UsageError("measure and matrix grids differ")
    w = mu.weights @ ulam.matrix
    return GridMeasure(mu.grid, w / w.sum())


def tv_distance(mu: GridMeasure, nu: GridMeasure) -> float:
    """Total variation distance, in [0, 1]."""
    if mu.grid != nu.grid:
        raise UsageError("measures live on different grids")
    return float(0.5 * np.abs(mu.weights - nu.weights).sum())


def preimage_boxset(
    m: SmoothMap,
    a: BoxSet,
    grid: Grid,
    theta: float = 0.5,
    method: str = "auto",
    samples: int = 256,
    seed: int = 0,
) -> BoxSet:
    """Boxes sending at least ``theta`` of their Ulam row mass into ``a``.

    With theta = 0.5 (majority rule) and an exact permutation matrix this
    is the exact preimage.  A row whose mass into ``a`` is exactly theta
    keeps its current membership, so majority preimages commute with
    complements: preimage(a^c) is exactly preimage(a)^c.
    """
    if not 0.0 < theta <= 1.0:
        raise UsageError(f"theta must be in (0,1], got {theta}")
    if a.grid != grid:
        raise UsageError("box set lives on a different grid")
    ulam = ulam_matrix(m, grid, method=method, samples=samples, seed=seed)
    mask = a.membership_mask()
    into = ulam.matrix @ mask.astype(float)
    pre = (into > theta) | ((into == theta) & mask)
    return BoxSet.from_indices(grid, np.nonzero(pre)[0])


def symmetric_difference_score(
    ifs: IFSystem,
    mu: GridMeasure,
    a: BoxSet,
    theta: float = 0.5,
    method: str = "auto",
    samples: int = 256,
    seed: int = 0,
) -> float:
    """Sum over the family of mu(preimage(f, a) symdiff a).

    Zero (up to grid-boundary effects) characterizes invariant sets; with a
    stationary mu this feeds the ergodicity test, with a merely
    quasi-invariant mu the term-ergodicity test.
    """
    if mu.grid != a.grid:
        raise UsageError("measure and box set grids differ")
    score = 0.0
    for m in ifs.maps:
        pre = preimage_boxset(m, a, mu.grid, theta=theta, method=method, samples=samples, seed=seed)
        score += mu.mass(pre.symmetric_difference(a))
    return float(score)


@dataclass(frozen=True)
class QuasiInvarianceReport:
    ok: bool
    eps: float
    violating_boxes: tuple[int, ...]
    pushed_mass_on_violations: float

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "eps": self.eps,
            "violating_boxes": list(self.violating_boxes),
            "pushed_mass_on_violations": self.pushed_mass_on_violations,
        }


def quasi_invariance_check(
    mu: GridMeasure,
    m: SmoothMap,
    eps: float,
    method: str = "auto",
    samples: int = 256,
    seed: int = 0,
) -> QuasiInvarianceReport:
    """Absolute-continuity proxy: pushed mass > eps must land where mu > 0."""
    if eps < 0:
        raise UsageError(f"eps must be >= 0, got {eps}")
    ulam = ulam_matrix(m, mu.grid, method=method, samples=samples, seed=seed)
    pushed = mu.weights @ ulam.matrix
    bad = np.nonzero((pushed > eps) & (mu.weights <= 0.0))[0]
    return QuasiInvarianceReport(
        ok=bad.size == 0,
        eps=float(eps),
        violating_boxes=tuple(int(i) for i in bad),
        pushed_mass_on_violations=float(pushed[bad].sum()),
    )


def ulam_to_csv(ulam: UlamMatrix, path) -> None:
    """Coordinate-list export: one (row, col, value) line per nonzero."""
    coo = ulam.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "value"])
        for i in order:
            writer.writerow([int(coo.row[i]), int(coo.col[i]), repr(float(coo.data[i]))])


def measure_to_csv(mu: GridMeasure, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["box", "weight"])
        for i, w in enumerate(mu.weights):
            writer.writerow([i, repr(float(w))])
