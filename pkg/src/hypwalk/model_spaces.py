"""Groups acting by isometries on two model hyperbolic spaces.

``TreeSpace(rank)``
    The free group F_r acting on its Cayley tree.  Vertices are identified with
    reduced words, the basepoint is the empty word, and every distance and
    Gromov product is an exact integer or half-integer.

``PlaneSpace(delta)``
    2x2 real matrices of determinant one acting on the upper half-plane by
    z -> (az + b)/(cz + d), basepoint i.  Integer matrices carry their exact
    entries so traces and products stay exact.

Word syntax: lowercase letter = generator (a = 1, b = 2, ...), uppercase = its
inverse, ``1`` = identity.  So ``aB`` is a.b^-1.
"""
from __future__ import annotations

import math
import string
from abc import ABC, abstractmethod
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from .errors import IndeterminateClassification, NumericError, UsageError

EPS_GEOM = 1e-9
EPS_DET = 1e-9
DET_DRIFT_LIMIT = 1e-6
MAX_RANK = 26

_LETTERS = string.ascii_lowercase


# ----------------------------------------------------------------------------
# Free group


def _reduce_into(stack: list[int], letters: Iterable[int]) -> list[int]:
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return stack


def _common_prefix(u: Sequence[int], v: Sequence[int]) -> int:
    n = min(len(u), len(v))
    i = 0
    while i < n and u[i] == v[i]:
        i += 1
    return i


@dataclass(frozen=True, slots=True)
class FreeWord:
    """A reduced word in F_rank; letters are signed generator indices (+i / -i)."""

    letters: tuple[int, ...]
    rank: int

    def __post_init__(self) -> None:
        if not 1 <= self.rank <= MAX_RANK:
            raise UsageError(f"rank must be in 1..{MAX_RANK}, got {self.rank}")
        prev = 0
        for x in self.letters:
            if x == 0 or abs(x) > self.rank:
                raise UsageError(f"generator index {abs(x)} out of range for rank {self.rank}")
            if x == -prev:
                raise UsageError(f"letters {self.letters} are not reduced")
            prev = x

    @classmethod
    def _trusted(cls, letters: tuple[int, ...], rank: int) -> "FreeWord":
        # skips validation; callers guarantee a reduced tuple
        w = object.__new__(cls)
        object.__setattr__(w, "letters", letters)
        object.__setattr__(w, "rank", rank)
        return w

    @classmethod
    def identity(cls, rank: int) -> "FreeWord":
        return cls((), rank)

    @classmethod
    def generator(cls, index: int, rank: int) -> "FreeWord":
        return cls((index,), rank)

    @classmethod
    def parse(cls, text: str, rank: int) -> "FreeWord":
        """Parse ``"aB"``-style text; unreduced input is freely reduced."""
        letters = []
        for ch in text.strip():
            if ch.isspace() or ch == "1":
                continue
            if ch.lower() not in _LETTERS:
                raise UsageError(f"bad letter {ch!r} in word {text!r}")
            idx = _LETTERS.index(ch.lower()) + 1
            letters.append(idx if ch.islower() else -idx)
        return reduce(letters, rank)

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return "".join(_LETTERS[x - 1] if x > 0 else _LETTERS[-x - 1].upper() for x in self.letters)

    def __repr__(self) -> str:
        return f"FreeWord({str(self)!r}, rank={self.rank})"

    def __len__(self) -> int:
        return len(self.letters)

    def is_identity(self) -> bool:
        return not self.letters

    def inverse(self) -> "FreeWord":
        return FreeWord._trusted(tuple(-x for x in reversed(self.letters)), self.rank)

    def __mul__(self, other: "FreeWord") -> "FreeWord":
        if not isinstance(other, FreeWord):
            return NotImplemented
        if other.rank != self.rank:
            raise UsageError(f"cannot multiply words of rank {self.rank} and {other.rank}")
        u, v = self.letters, other.letters
        k = 0
        n = min(len(u), len(v))
        while k < n and u[-1 - k] == -v[k]:
            k += 1
        return FreeWord._trusted(u[: len(u) - k] + v[k:], self.rank)

    def __pow__(self, p: int) -> "FreeWord":
        base = self if p >= 0 else self.inverse()
        out = FreeWord.identity(self.rank)
        for _ in range(abs(p)):
            out = out * base
        return out


def reduce(letters: Iterable[int], rank: int) -> FreeWord:
    """Free reduction of a sequence of signed generator indices."""
    letters = list(letters)
    for x in letters:
        if x == 0 or abs(x) > rank:
            raise UsageError(f"generator index {abs(x)} out of range for rank {rank}")
    return FreeWord(tuple(_reduce_into([], letters)), rank)


def enumerate_reduced_words(rank: int, max_len: int, min_len: int = 0) -> Iterator[FreeWord]:
    """All reduced words of length min_len..max_len, shortlex order."""
    symbols = [i for g in range(1, rank + 1) for i in (g, -g)]
    layer: list[tuple[int, ...]] = [()]
    for length in range(max_len + 1):
        if length >= min_len:
            for w in layer:
                yield FreeWord._trusted(w, rank)
        layer = [w + (s,) for w in layer for s in symbols if not (w and w[-1] == -s)]


def random_word(rng: np.random.Generator, rank: int, length: int) -> FreeWord:
    """Uniformly random reduced word of the given length."""
    if length == 0:
        return FreeWord.identity(rank)
    symbols = [s for i in range(1, rank + 1) for s in (i, -i)]
    # symbols[j ^ 1] is the inverse of symbols[j]
    draws = rng.integers(0, 2 * rank - 1, size=length).tolist()
    j = int(rng.integers(0, 2 * rank))
    idx = [j]
    for r in draws[1:]:
        forbidden = j ^ 1
        j = r + (r >= forbidden)
        idx.append(j)
    return FreeWord._trusted(tuple(symbols[j] for j in idx), rank)


# ----------------------------------------------------------------------------
# Upper half-plane


@dataclass(frozen=True, slots=True)
class PlanePoint:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)) or self.y <= 0:
            raise UsageError(f"not a point of the upper half-plane: ({self.x}, {self.y})")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


def _to_float(v: int) -> float:
    try:
        return float(v)
    except OverflowError:
        return math.copysign(math.inf, v)


@dataclass(frozen=True)
class Moebius:
    """Matrix [[a, b], [c, d]] with ad - bc = 1, acting on the upper half-plane."""

    a: float
    b: float
    c: float
    d: float
    exact: tuple[int, int, int, int] | None = None

    def __post_init__(self) -> None:
        if self.exact is not None:
            a, b, c, d = self.exact
            if a * d - b * c != 1:
                raise UsageError(f"integer matrix {self.exact} has determinant {a * d - b * c}, not 1")
            return
        vals = (self.a, self.b, self.c, self.d)
        if not all(math.isfinite(v) for v in vals):
            raise NumericError(f"non-finite matrix entries {vals}")
        if abs(self.det - 1.0) > EPS_DET * _det_scale(*vals):
            raise UsageError(f"matrix {vals} has determinant {self.det}, not 1")

    @classmethod
    def from_ints(cls, a: int, b: int, c: int, d: int) -> "Moebius":
        ex = (int(a), int(b), int(c), int(d))
        return cls(*(_to_float(v) for v in ex), exact=ex)

    @classmethod
    def identity(cls) -> "Moebius":
        return cls.from_ints(1, 0, 0, 1)

    @classmethod
    def parse(cls, text: str) -> "Moebius":
        parts = text.split()
        if len(parts) != 4:
            raise UsageError(f"matrix needs four numbers 'a b c d', got {text!r}")
        try:
            return cls.from_ints(*(int(p) for p in parts))
        except ValueError:
            pass
        try:
            return cls(*(float(p) for p in parts))
        except ValueError as exc:
            raise UsageError(f"bad matrix entries {text!r}") from exc

    def __str__(self) -> str:
        if self.exact is not None:
            return " ".join(str(v) for v in self.exact)
        return " ".join(repr(v) for v in (self.a, self.b, self.c, self.d))

    @property
    def det(self) -> float:
        if self.exact is not None:
            return 1.0
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> Union[int, float]:
        if self.exact is not None:
            return self.exact[0] + self.exact[3]
        return self.a + self.d

    def inverse(self) -> "Moebius":
        if self.exact is not None:
            a, b, c, d = self.exact
            return Moebius.from_ints(d, -b, -c, a)
        return Moebius(self.d, -self.b, -self.c, self.a)

    def __matmul__(self, other: "Moebius") -> "Moebius":
        if not isinstance(other, Moebius):
            return NotImplemented
        if self.exact is not None and other.exact is not None:
            a, b, c, d = self.exact
            e, f, g, h = other.exact
            return Moebius.from_ints(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        det = a * d - b * c
        if not math.isfinite(det) or abs(det - 1.0) > DET_DRIFT_LIMIT * _det_scale(a, b, c, d):
            raise NumericError(f"determinant drifted to {det!r} in matrix product")
        s = math.sqrt(det)
        return Moebius(a / s, b / s, c / s, d / s)

    def __pow__(self, p: int) -> "Moebius":
        base = self if p >= 0 else self.inverse()
        out = Moebius.identity() if self.exact is not None else Moebius(1.0, 0.0, 0.0, 1.0)
        for _ in range(abs(p)):
            out = out @ base
        return out


def _det_scale(a: float, b: float, c: float, d: float) -> float:
    return max(1.0, abs(a * d), abs(b * c))


GroupElement = Union[FreeWord, Moebius]
SpacePoint = Union[FreeWord, PlanePoint]


# ----------------------------------------------------------------------------
# Group law, action and metric


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    if isinstance(g, FreeWord) and isinstance(h, FreeWord):
        return g * h
    if isinstance(g, Moebius) and isinstance(h, Moebius):
        return g @ h
    raise UsageError(f"cannot multiply {type(g).__name__} by {type(h).__name__}")


def invert(g: GroupElement) -> GroupElement:
    if isinstance(g, (FreeWord, Moebius)):
        return g.inverse()
    raise UsageError(f"not a group element: {g!r}")


def apply(g: GroupElement, p: SpacePoint) -> SpacePoint:
    """Isometric action g.p (left multiplication on the tree, Moebius map on the plane)."""
    if isinstance(g, FreeWord) and isinstance(p, FreeWord):
        return g * p
    if isinstance(g, Moebius) and isinstance(p, PlanePoint):
        z = p.z
        den = g.c * z + g.d
        den2 = den.real * den.real + den.imag * den.imag
        num = (g.a * z + g.b) * den.conjugate()
        # Im of the image is y/|cz+d|^2 because det = 1
        y = p.y / den2 if den2 > 0 else math.nan
        x = num.real / den2 if den2 > 0 else math.nan
        if not (math.isfinite(x) and math.isfinite(y)) or y <= 0:
            raise NumericError(f"image of ({p.x}, {p.y}) left the upper half-plane")
        return PlanePoint(x, y)
    raise UsageError(f"cannot apply {type(g).__name__} to {type(p).__name__}")


def plane_distance(p: PlanePoint, q: PlanePoint) -> float:
    # 2 asinh(|z-w| / (2 sqrt(Im z Im w))) equals arccosh(1 + |z-w|^2 / (2 Im z Im w))
    # and keeps full precision for both tiny and huge separations.
    return 2.0 * math.asinh(math.hypot(p.x - q.x, p.y - q.y) / (2.0 * math.sqrt(p.y * q.y)))


def distance(p: SpacePoint, q: SpacePoint) -> Union[int, float]:
    if isinstance(p, FreeWord) and isinstance(q, FreeWord):
        if p.rank != q.rank:
            raise UsageError("tree vertices of different ranks")
        cp = _common_prefix(p.letters, q.letters)
        return len(p.letters) + len(q.letters) - 2 * cp
    if isinstance(p, PlanePoint) and isinstance(q, PlanePoint):
        return plane_distance(p, q)
    raise UsageError(f"mixed space variants: {type(p).__name__} and {type(q).__name__}")


@dataclass(frozen=True)
class Classification:
    kind: str  # "elliptic" | "parabolic" | "loxodromic"
    translation_length: float
    trace: Union[int, float]


def classify_isometry(m: Moebius) -> Classification:
    """Trace classification; |trace| exactly 2 (identity included) reports as parabolic."""
    tr = abs(m.trace)
    if m.exact is not None:
        if tr > 2:
            return Classification("loxodromic", _translation_length(tr), m.trace)
        return Classification("parabolic" if tr == 2 else "elliptic", 0.0, m.trace)
    if tr - 2.0 > EPS_GEOM:
        return Classification("loxodromic", _translation_length(tr), m.trace)
    if 2.0 - tr > EPS_GEOM:
        return Classification("elliptic", 0.0, m.trace)
    raise IndeterminateClassification(f"|trace| = {tr!r} is within {EPS_GEOM} of 2")


def _translation_length(abs_trace: Union[int, float]) -> float:
    t = _to_float(abs_trace) if isinstance(abs_trace, int) else abs_trace
    if t < 1e150:
        return 2.0 * math.acosh(t / 2.0)
    return 2.0 * math.log(abs_trace)


# ----------------------------------------------------------------------------
# Spaces


class ModelSpace(ABC):
    """A pointed metric space with a group action and a hyperbolicity constant."""

    kind: str
    exact: bool

    @property
    @abstractmethod
    def delta(self) -> float | None: ...

    @property
    @abstractmethod
    def basepoint(self) -> SpacePoint: ...

    @abstractmethod
    def identity(self) -> GroupElement: ...

    @abstractmethod
    def check_point(self, p: SpacePoint) -> None: ...

    @abstractmethod
    def check_element(self, g: GroupElement) -> None: ...

    @abstractmethod
    def displacement(self, g: GroupElement) -> float:
        """d(x0, g x0)."""

    @abstractmethod
    def parse_element(self, text: str) -> GroupElement: ...

    @abstractmethod
    def is_identity(self, g: GroupElement) -> bool:
        """True when g acts trivially."""

    def multiply(self, g: GroupElement, h: GroupElement) -> GroupElement:
        return multiply(g, h)

    def invert(self, g: GroupElement) -> GroupElement:
        return invert(g)

    def product(self, elements: Iterable[GroupElement]) -> GroupElement:
        out = self.identity()
        for g in elements:
            out = multiply(out, g)
        return out

    def apply(self, g: GroupElement, p: SpacePoint) -> SpacePoint:
        self.check_element(g)
        self.check_point(p)
        return apply(g, p)

    def distance(self, p: SpacePoint, q: SpacePoint) -> float:
        self.check_point(p)
        self.check_point(q)
        return distance(p, q)

    def orbit_point(self, g: GroupElement) -> SpacePoint:
        return apply(g, self.basepoint)

    def orbit_key(self, g: GroupElement):
        """Exact hashable label of the point g x0, or None when g is only known in floats."""
        return None

    def orbit_distance(self, g: GroupElement, h: GroupElement) -> float:
        """d(g x0, h x0), computed as the displacement of g^-1 h."""
        return self.displacement(multiply(invert(g), h))

    def orbit_product(self, g: GroupElement, h: GroupElement) -> float:
        """Gromov product (g x0 . h x0) based at x0."""
        return 0.5 * (self.displacement(g) + self.displacement(h) - self.orbit_distance(g, h))

    def format_element(self, g: GroupElement) -> str:
        return str(g)

    def key(self, g: GroupElement):
        """Hashable normal form used to merge equal elements in distribution tables."""
        return g


@dataclass(frozen=True)
class TreeSpace(ModelSpace):
    rank: int = 2

    kind = "tree"
    exact = True

    def __post_init__(self) -> None:
        if not 1 <= self.rank <= MAX_RANK:
            raise UsageError(f"rank must be in 1..{MAX_RANK}, got {self.rank}")

    @property
    def delta(self) -> float:
        return 0.0

    @property
    def basepoint(self) -> FreeWord:
        return FreeWord.identity(self.rank)

    def identity(self) -> FreeWord:
        return FreeWord.identity(self.rank)

    def check_point(self, p) -> None:
        if not isinstance(p, FreeWord):
            raise UsageError(f"expected a tree vertex, got {type(p).__name__}")
        if p.rank != self.rank:
            raise UsageError(f"vertex of rank {p.rank} in a rank {self.rank} tree")

    check_element = check_point

    def displacement(self, g: FreeWord) -> int:
        return len(g.letters)

    def orbit_distance(self, g: FreeWord, h: FreeWord) -> int:
        return distance(g, h)

    def orbit_product(self, g: FreeWord, h: FreeWord) -> float:
        return float(_common_prefix(g.letters, h.letters))

    def orbit_point(self, g: FreeWord) -> FreeWord:
        return g

    def orbit_key(self, g: FreeWord):
        return g.letters

    def product(self, elements: Iterable[FreeWord]) -> FreeWord:
        stack: list[int] = []
        for g in elements:
            _reduce_into(stack, g.letters)
        return FreeWord._trusted(tuple(stack), self.rank)

    def parse_element(self, text: str) -> FreeWord:
        return FreeWord.parse(text, self.rank)

    def is_identity(self, g: FreeWord) -> bool:
        return not g.letters


@dataclass(frozen=True)
class PlaneSpace(ModelSpace):
    """Upper half-plane; ``delta`` is the hyperbolicity constant to certify against."""

    delta_value: float | None = None

    kind = "plane"
    exact = False

    def __post_init__(self) -> None:
        if self.delta_value is not None and self.delta_value < 0:
            raise UsageError("delta must be >= 0")

    @property
    def delta(self) -> float | None:
        return self.delta_value

    @property
    def basepoint(self) -> PlanePoint:
        return PlanePoint(0.0, 1.0)

    def identity(self) -> Moebius:
        return Moebius.identity()

    def check_point(self, p) -> None:
        if not isinstance(p, PlanePoint):
            raise UsageError(f"expected a half-plane point, got {type(p).__name__}")

    def check_element(self, g) -> None:
        if not isinstance(g, Moebius):
            raise UsageError(f"expected a matrix, got {type(g).__name__}")

    def displacement(self, g: Moebius) -> float:
        # cosh d(i, g i) = (a^2 + b^2 + c^2 + d^2) / 2, so sinh^2(d/2) = (N - 2) / 4
        if g.exact is not None:
            excess = sum(v * v for v in g.exact) - 2
            if excess < 10**300:
                return 2.0 * math.asinh(math.sqrt(excess) / 2.0)
            return math.log(excess)
        excess = max(0.0, g.a * g.a + g.b * g.b + g.c * g.c + g.d * g.d - 2.0)
        if not math.isfinite(excess):
            raise NumericError("matrix entries overflowed")
        return 2.0 * math.asinh(math.sqrt(excess) / 2.0)

    def parse_element(self, text: str) -> Moebius:
        return Moebius.parse(text)

    def is_identity(self, g: Moebius) -> bool:
        if g.exact is not None:
            return g.exact in ((1, 0, 0, 1), (-1, 0, 0, -1))
        return abs(g.b) <= EPS_GEOM and abs(g.c) <= EPS_GEOM and abs(abs(g.a) - 1) <= EPS_GEOM

    def key(self, g: Moebius):
        if g.exact is not None:
            return g.exact
        return tuple(round(v, 12) for v in (g.a, g.b, g.c, g.d))

    def orbit_key(self, g: Moebius):
        # g i = ((ac + bd) + i) / (c^2 + d^2) for det 1
        if g.exact is None:
            return None
        a, b, c, d = g.exact
        return (a * c + b * d, c * c + d * d)


def make_space(kind: str, rank: int = 2, delta: float | None = None) -> ModelSpace:
    if kind == "tree":
        return TreeSpace(rank)
    if kind == "plane":
        return PlaneSpace(delta)
    raise UsageError(f"unknown space {kind!r} (expected 'tree' or 'plane')")


def iter_data_lines(source: Union[str, Path, Iterable[str]]) -> Iterator[tuple[int, str]]:
    """(line number, stripped text) of non-blank, non-comment lines."""
    if isinstance(source, (str, Path)):
        try:
            lines = Path(source).read_text().splitlines()
        except OSError as exc:
            raise UsageError(f"cannot read {source}: {exc}") from exc
    else:
        lines = list(source)
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if line and not line.startswith("#"):
            yield lineno, line


def read_generators(source, space: ModelSpace) -> list[GroupElement]:
    """Generator file: one element per line, '#' comments."""
    out = []
    for lineno, line in iter_data_lines(source):
        try:
            out.append(space.parse_element(line))
        except UsageError as exc:
            raise UsageError(f"line {lineno}: {exc}") from exc
    if not out:
        raise UsageError("generator file contains no elements")
    return out
