"""Phase spaces and the parametric map menu.

Two compact phase spaces are supported: the circle S^1 = R/Z and the
2-torus T^2 = (R/Z)^2, with coordinates normalized to [0,1) per dimension.
The map menu is a fixed parametric family so that inverses are either in
closed form or provably convergent:

  * ``Rotation(alpha)``            x -> x + alpha  (mod 1)
  * ``CircleDiffeo(a, b, freq)``   x -> x + a + b/(2*pi*freq) * sin(2*pi*freq*x)  (mod 1),
                                   a diffeomorphism iff |b| < 1
  * ``ToralTranslation(v1, v2)``   (x,y) -> (x+v1, y+v2)  (mod 1)
  * ``ToralAutomorphism(L)``       z -> L z  (mod 1) for an integer matrix with |det L| = 1

Every map value carries a ``direction``; the inverse of a map is the same
parameter tuple with the direction flipped, so families are closed under
inversion and finite compositions can be written as words over a map list.
Words compose left to right: the first letter is applied first.

All values are immutable after construction and all operations are pure,
so everything here is safe to evaluate concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError, UsageError

TWO_PI = 2.0 * math.pi

FORWARD = "forward"
INVERSE = "inverse"

_CIRCLE = "circle"
_TORUS = "torus"


@dataclass(frozen=True)
class PhaseSpace:
    """The circle (dim 1) or the 2-torus (dim 2), coordinates in [0,1)."""

    kind: str

    def __post_init__(self):
        if self.kind not in (_CIRCLE, _TORUS):
            raise UsageError(f"unknown phase space kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return 1 if self.kind == _CIRCLE else 2

    def wrap(self, x):
        return np.asarray(x, dtype=float) % 1.0

    def distance(self, x, y):
        """Quotient metric: per-coordinate min(|dx|, 1-|dx|), Euclidean on the torus."""
        dx = (np.asarray(x, dtype=float) - np.asarray(y, dtype=float) + 0.5) % 1.0 - 0.5
        if self.kind == _CIRCLE:
            return np.abs(dx)
        return np.linalg.norm(dx, axis=-1)


CIRCLE = PhaseSpace(_CIRCLE)
TORUS2 = PhaseSpace(_TORUS)


def _check_direction(direction: str) -> None:
    if direction not in (FORWARD, INVERSE):
        raise UsageError(f"direction must be {FORWARD!r} or {INVERSE!r}, got {direction!r}")


class _MapBase:
    """Shared behaviour of the menu families (not a public type)."""

    space: PhaseSpace = CIRCLE
    volume_preserving: bool = False

    def inverse(self):
        flipped = INVERSE if self.direction == FORWARD else FORWARD
        return replace(self, direction=flipped)

    # Family-specific hooks, always phrased for the *forward* map.
    def _forward(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _backward(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _forward_jacobian(self, pts: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_points(self, pts: np.ndarray) -> np.ndarray:
        """Vectorized map evaluation in the map's own direction."""
        return self._forward(pts) if self.direction == FORWARD else self._backward(pts)

    def invert_points(self, pts: np.ndarray) -> np.ndarray:
        return self._backward(pts) if self.direction == FORWARD else self._forward(pts)

    def jacobian(self, pts: np.ndarray) -> np.ndarray:
        if self.direction == FORWARD:
            return self._forward_jacobian(pts)
        return 1.0 / self._forward_jacobian(self._backward(pts))


@dataclass(frozen=True)
class Rotation(_MapBase):
    """Rigid circle rotation by ``alpha``."""

    alpha: float
    direction: str = FORWARD
    space: PhaseSpace = field(default=CIRCLE, init=False, repr=False)
    volume_preserving = True

    def __post_init__(self):
        _check_direction(self.direction)

    def _forward(self, pts):
        return (pts + self.alpha) % 1.0

    def _backward(self, pts):
        return (pts - self.alpha) % 1.0

    def _forward_jacobian(self, pts):
        return np.ones_like(np.asarray(pts, dtype=float))

    def lift(self, x):
        """Monotone lift of the map in its direction (lift(x+1) = lift(x)+1)."""
        a = self.alpha if self.direction == FORWARD else -self.alpha
        return np.asarray(x, dtype=float) + a


@dataclass(frozen=True)
class CircleDiffeo(_MapBase):
    """Sine perturbation of a rotation; orientation-preserving diffeo iff |b| < 1.

    The lift is x + a + b/(2*pi*freq) * sin(2*pi*freq*x) with derivative
    1 + b*cos(2*pi*freq*x) > 0.  ``freq`` is a positive integer harmonic;
    freq >= 2 gives maps with several hyperbolic fixed points (the control
    scenarios use freq=2 for a map with sinks near 1/4 and 3/4).
    """

    a: float
    b: float
    freq: int = 1
    direction: str = FORWARD
    space: PhaseSpace = field(default=CIRCLE, init=False, repr=False)
    volume_preserving = False

    _BISECT_STEPS = 32  # bracket width 2b/(2 pi freq) < 1/pi down to ~1e-10
    _NEWTON_STEPS = 10
    _INVERSE_TOL = 1e-12

    def __post_init__(self):
        _check_direction(self.direction)
        if not abs(self.b) < 1.0:
            raise UsageError(f"CircleDiffeo requires |b| < 1 for invertibility, got b={self.b}")
        if int(self.freq) != self.freq or self.freq < 1:
            raise UsageError(f"CircleDiffeo frequency must be a positive integer, got {self.freq}")

    def _forward_lift(self, x):
        w = TWO_PI * self.freq
        return x + self.a + (self.b / w) * np.sin(w * x)

    def _forward_lift_deriv(self, x):
        return 1.0 + self.b * np.cos(TWO_PI * self.freq * x)

    def _solve_lift(self, y):
        """Solve forward_lift(x) = y on the real line (monotone bisection + Newton)."""
        y = np.asarray(y, dtype=float)
        beta = abs(self.b) / (TWO_PI * self.freq)
        lo = y - self.a - beta
        hi = y - self.a + beta
        for _ in range(self._BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            above = self._forward_lift(mid) > y
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        x = 0.5 * (lo + hi)
        for _ in range(self._NEWTON_STEPS):
            x = x - (self._forward_lift(x) - y) / self._forward_lift_deriv(x)
        resid = np.max(np.abs(self._forward_lift(x) - y), initial=0.0)
        if resid > self._INVERSE_TOL:
            raise NumericalError(
                f"CircleDiffeo inverse did not converge (residual {resid:.3e})", residual=float(resid)
            )
        return x

    def _forward(self, pts):
        return self._forward_lift(np.asarray(pts, dtype=float)) % 1.0

    def _backward(self, pts):
        return self._solve_lift(np.asarray(pts, dtype=float)) % 1.0

    def _forward_jacobian(self, pts):
        return self._forward_lift_deriv(np.asarray(pts, dtype=float))

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        if self.direction == FORWARD:
            return self._forward_lift(x)
        return self._solve_lift(x)


@dataclass(frozen=True)
class ToralTranslation(_MapBase):
    """Translation of the 2-torus by (v1, v2)."""

    v1: float
    v2: float
    direction: str = FORWARD
    space: PhaseSpace = field(default=TORUS2, init=False, repr=False)
    volume_preserving = True

    def __post_init__(self):
        _check_direction(self.direction)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.v1, self.v2])

    def _forward(self, pts):
        return (pts + self.vector) % 1.0

    def _backward(self, pts):
        return (pts - self.vector) % 1.0

    def _forward_jacobian(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.ones(pts.shape[:-1])


@dataclass(frozen=True)
class ToralAutomorphism(_MapBase):
    """Linear automorphism z -> L z (mod 1) for an integer matrix with |det L| = 1."""

    matrix: tuple[tuple[int, int], tuple[int, int]]
    direction: str = FORWARD
    space: PhaseSpace = field(default=TORUS2, init=False, repr=False)
    volume_preserving = True

    def __post_init__(self):
        _check_direction(self.direction)
        m = np.asarray(self.matrix)
        if m.shape != (2, 2) or not np.all(m == np.round(m)):
            raise UsageError("ToralAutomorphism needs a 2x2 integer matrix")
        det = int(round(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]))
        if abs(det) != 1:
            raise UsageError(f"ToralAutomorphism requires |det L| = 1, got det = {det}")
        # normalize to a hashable tuple-of-tuples of python ints
        object.__setattr__(
            self, "matrix", tuple(tuple(int(v) for v in row) for row in np.round(m).astype(int))
        )

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)

    @property
    def inverse_array(self) -> np.ndarray:
        (p, q), (r, s) = self.matrix
        det = p * s - q * r
        return np.asarray([[s, -q], [-r, p]], dtype=float) * det  # det in {1,-1}

    def _forward(self, pts):
        return (np.asarray(pts, dtype=float) @ self.array.T) % 1.0

    def _backward(self, pts):
        return (np.asarray(pts, dtype=float) @ self.inverse_array.T) % 1.0

    def _forward_jacobian(self, pts):
        pts = np.asarray(pts, dtype=float)
        return np.ones(pts.shape[:-1])  # |det L| = 1


SmoothMap = Rotation | CircleDiffeo | ToralTranslation | ToralAutomorphism

_CIRCLE_FAMILIES = (Rotation, CircleDiffeo)
_TORUS_FAMILIES = (ToralTranslation, ToralAutomorphism)


def _as_points(m: SmoothMap, x):
    """Validate and coerce a point (or batch) for the map's phase space."""
    pts = np.asarray(x, dtype=float)
    if m.space.dim == 1:
        if pts.ndim > 1:
            raise UsageError(f"circle points must have shape () or (n,), got {pts.shape}")
    else:
        if pts.ndim == 0 or pts.shape[-1] != 2:
            raise UsageError(f"torus points must have shape (2,) or (n,2), got {pts.shape}")
    if np.any(pts < 0.0) or np.any(pts >= 1.0):
        pts = pts % 1.0
    return pts


def apply(m: SmoothMap, x):
    """Evaluate the map at x (scalar, (2,) point, or a batch along the first axis)."""
    pts = _as_points(m, x)
    out = m.apply_points(pts)
    if np.isscalar(x) and out.ndim == 0:
        return float(out)
    return out


def apply_inverse(m: SmoothMap, y):
    """Evaluate the inverse map at y; exact for affine families, iterative for CircleDiffeo."""
    pts = _as_points(m, y)
    out = m.invert_points(pts)
    if np.isscalar(y) and out.ndim == 0:
        return float(out)
    return out


def map_derivative(m: SmoothMap, x):
    """Jacobian determinant of the map (in its direction) at x."""
    pts = _as_points(m, x)
    out = m.jacobian(pts)
    if np.ndim(out) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Word:
    """A finite composition over an indexed map family.

    ``letters`` is a sequence of (symbol, direction) with symbols in 1..k.
    Composition is left to right: the first letter acts first.  A word with
    all directions forward lives in the forward semigroup; all-inverse words
    live in the backward semigroup.
    """

    letters: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if len(self.letters) == 0:
            raise UsageError("words must have length >= 1")
        letters = tuple((int(s), d) for s, d in self.letters)
        for s, d in letters:
            _check_direction(d)
            if s < 1:
                raise UsageError(f"word symbols are 1-based, got {s}")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def forward(cls, symbols) -> "Word":
        return cls(tuple((int(s), FORWARD) for s in symbols))

    @classmethod
    def inverse(cls, symbols) -> "Word":
        return cls(tuple((int(s), INVERSE) for s in symbols))

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def symbols(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.letters)

    def concat(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters)


@dataclass(frozen=True)
class IFSystem:
    """A finite family of maps on one phase space with a probability vector."""

    space: PhaseSpace
    maps: tuple[SmoothMap, ...]
    probs: tuple[float, ...]

    PROB_SUM_TOL = 1e-12

    def __post_init__(self):
        maps = tuple(self.maps)
        probs = tuple(float(p) for p in self.probs)
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "probs", probs)
        if len(maps) < 1:
            raise UsageError("IFSystem needs at least one map")
        if len(probs) != len(maps):
            raise UsageError(f"{len(maps)} maps but {len(probs)} probabilities")
        for m in maps:
            if m.space != self.space:
                raise UsageError(f"map {m!r} does not live on {self.space.kind}")
            if m.direction != FORWARD:
                raise UsageError("IFSystem maps must be stored in forward direction")
        if abs(sum(probs) - 1.0) > self.PROB_SUM_TOL:
            raise UsageError(f"probabilities must sum to 1 (got {sum(probs)!r})")
        if len(probs) > 1 and not all(0.0 < p < 1.0 for p in probs):
            raise UsageError("probabilities must lie strictly in (0,1) when k > 1")
        if len(probs) == 1 and not 0.0 < probs[0] <= 1.0:
            raise UsageError("single-map probability must be in (0,1]")

    @property
    def k(self) -> int:
        return len(self.maps)

    @property
    def volume_preserving(self) -> bool:
        return all(m.volume_preserving for m in self.maps)

    def map_for(self, symbol: int, direction: str = FORWARD) -> SmoothMap:
        """Map for a 1-based symbol, flipped when direction is inverse."""
        if not 1 <= symbol <= self.k:
            raise UsageError(f"symbol {symbol} outside 1..{self.k}")
        m = self.maps[symbol - 1]
        return m if direction == FORWARD else m.inverse()

    def directed_maps(self, direction: str) -> tuple[SmoothMap, ...]:
        return tuple(self.map_for(s, direction) for s in range(1, self.k + 1))


def uniform_ifs(maps) -> IFSystem:
    """IFSystem with equal probabilities over the given maps."""
    maps = tuple(maps)
    k = len(maps)
    if k == 0:
        raise UsageError("need at least one map")
    return IFSystem(space=maps[0].space, maps=maps, probs=tuple([1.0 / k] * k))


def apply_word(word: Word, ifs: IFSystem, x):
    """Apply a word left-to-right: the first letter acts first."""
    pts = _as_points(ifs.maps[0], x)
    for symbol, direction in word.letters:
        pts = ifs.map_for(symbol, direction).apply_points(pts)
    if np.isscalar(x) and pts.ndim == 0:
        return float(pts)
    return pts
