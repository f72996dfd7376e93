"""Depth-truncated Cantor unit spaces.

Points are words of a fixed length over ``{0, ..., alphabet-1}``, indexed by
their position in lexicographic order.  The metric is the dyadic ultrametric
``d(x, y) = 2**-lcp(x, y)``, so every distance is a power of two and the
fattening ``A^eps`` and shrinking ``A^-eps`` of a set are exact unions of
prefix cylinders.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, total_ordering
from typing import Iterable, Iterator

import numpy as np

from .errors import ResourceError, UsageError, ValidationError

_DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"

MAX_POINTS = 1 << 16
MAX_DEPTH = 24


@dataclass(frozen=True)
class UnitSpace:
    """Words of length ``depth``; ``admissible`` restricts to a subset (path spaces)."""

    alphabet: int
    depth: int
    admissible: tuple[str, ...] | None = None

    def __post_init__(self):
        if not 2 <= self.alphabet <= len(_DIGITS):
            raise ValidationError(f"alphabet size must be in [2, {len(_DIGITS)}], got {self.alphabet}")
        if self.depth < 1:
            raise ValidationError(f"depth must be >= 1, got {self.depth}")
        if self.depth > MAX_DEPTH:
            raise ResourceError(f"depth {self.depth} exceeds cap {MAX_DEPTH}")
        if self.admissible is None:
            if self.alphabet**self.depth > MAX_POINTS:
                raise ResourceError(f"{self.alphabet}**{self.depth} points exceeds cap {MAX_POINTS}")
        else:
            words = tuple(sorted(set(self.admissible)))
            if not words:
                raise ValidationError("admissible word list is empty")
            if len(words) > MAX_POINTS:
                raise ResourceError(f"{len(words)} points exceeds cap {MAX_POINTS}")
            for w in words:
                self._check_word(w)
            object.__setattr__(self, "admissible", words)

    def _check_word(self, w: str) -> None:
        if len(w) != self.depth or any(c not in _DIGITS[: self.alphabet] for c in w):
            raise ValidationError(f"{w!r} is not a word of length {self.depth} over {self.alphabet} symbols")

    @cached_property
    def words(self) -> tuple[str, ...]:
        if self.admissible is not None:
            return self.admissible
        symbols = _DIGITS[: self.alphabet]
        return tuple("".join(p) for p in itertools.product(symbols, repeat=self.depth))

    @property
    def size(self) -> int:
        return len(self.words)

    def __len__(self) -> int:
        return self.size

    @cached_property
    def _index(self) -> dict[str, int]:
        return {w: i for i, w in enumerate(self.words)}

    def index(self, word: str) -> int:
        try:
            return self._index[word]
        except KeyError:
            raise ValidationError(f"{word!r} is not a point of {self}") from None

    def word(self, i: int) -> str:
        return self.words[i]

    @cached_property
    def prefix_classes(self) -> tuple[np.ndarray, ...]:
        """``prefix_classes[L][x]`` numbers the length-``L`` cylinder containing ``x``."""
        out = []
        for L in range(self.depth + 1):
            ids: dict[str, int] = {}
            out.append(np.array([ids.setdefault(w[:L], len(ids)) for w in self.words], dtype=np.int64))
        return tuple(out)

    def lcp(self, x: int, y: int) -> int:
        a, b = self.words[x], self.words[y]
        n = 0
        while n < self.depth and a[n] == b[n]:
            n += 1
        return n

    def metric(self, x: int | str, y: int | str) -> Fraction:
        x, y = self._point(x), self._point(y)
        if x == y:
            return Fraction(0)
        return Fraction(1, 2 ** self.lcp(x, y))

    def _point(self, x: int | str) -> int:
        if isinstance(x, str):
            return self.index(x)
        if not 0 <= x < self.size:
            raise ValidationError(f"point index {x} out of range")
        return int(x)

    def full(self) -> ClopenSet:
        return ClopenSet(self, (1 << self.size) - 1)

    def empty(self) -> ClopenSet:
        return ClopenSet(self, 0)

    def cylinder(self, prefix: str) -> ClopenSet:
        bits = 0
        for i, w in enumerate(self.words):
            if w.startswith(prefix):
                bits |= 1 << i
        return ClopenSet(self, bits)

    def __repr__(self):
        extra = "" if self.admissible is None else f", {self.size} admissible"
        return f"UnitSpace(alphabet={self.alphabet}, depth={self.depth}{extra})"


@dataclass(frozen=True)
class ClopenSet:
    """A subset of a unit space stored as a bitmask over point indices."""

    space: UnitSpace
    bits: int

    @classmethod
    def from_indices(cls, space: UnitSpace, points: Iterable[int]) -> ClopenSet:
        bits = 0
        for p in points:
            bits |= 1 << space._point(p)
        return cls(space, bits)

    @classmethod
    def from_words(cls, space: UnitSpace, words: Iterable[str]) -> ClopenSet:
        return cls.from_indices(space, (space.index(w) for w in words))

    @classmethod
    def from_mask(cls, space: UnitSpace, mask: np.ndarray) -> ClopenSet:
        packed = np.packbits(np.asarray(mask, dtype=bool), bitorder="little")
        return cls(space, int.from_bytes(packed.tobytes(), "little"))

    def mask(self) -> np.ndarray:
        n = self.space.size
        raw = np.frombuffer(self.bits.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[:n].astype(bool)

    def __contains__(self, x) -> bool:
        if isinstance(x, str):
            x = self.space.index(x)
        return bool(self.bits >> x & 1)

    def __iter__(self) -> Iterator[int]:
        bits, i = self.bits, 0
        while bits:
            if bits & 1:
                yield i
            bits >>= 1
            i += 1

    def __len__(self) -> int:
        return self.bits.bit_count()

    def __bool__(self) -> bool:
        return self.bits != 0

    def words(self) -> list[str]:
        return [self.space.words[i] for i in self]

    def _same(self, other: ClopenSet) -> None:
        if not isinstance(other, ClopenSet) or other.space != self.space:
            raise UsageError("clopen sets live in different unit spaces")

    def __or__(self, other: ClopenSet) -> ClopenSet:
        self._same(other)
        return ClopenSet(self.space, self.bits | other.bits)

    def __and__(self, other: ClopenSet) -> ClopenSet:
        self._same(other)
        return ClopenSet(self.space, self.bits & other.bits)

    def __sub__(self, other: ClopenSet) -> ClopenSet:
        self._same(other)
        return ClopenSet(self.space, self.bits & ~other.bits)

    def __invert__(self) -> ClopenSet:
        return ClopenSet(self.space, self.space.full().bits & ~self.bits)

    def complement(self) -> ClopenSet:
        return ~self

    def issubset(self, other: ClopenSet) -> bool:
        self._same(other)
        return self.bits & ~other.bits == 0

    __le__ = issubset

    def isdisjoint(self, other: ClopenSet) -> bool:
        self._same(other)
        return self.bits & other.bits == 0

    def __repr__(self):
        return "ClopenSet{" + ",".join(self.words()) + "}"


@total_ordering
@dataclass(frozen=True)
class DyadicRadius:
    """A radius ``2**-exponent``, or one of the two limiting values ZERO and ONE_PLUS.

    ONE_PLUS stands for any radius strictly larger than the diameter (which is at most 1).
    """

    exponent: int | None
    kind: str = "dyadic"

    ZERO = None  # type: DyadicRadius
    ONE_PLUS = None  # type: DyadicRadius

    def __post_init__(self):
        if self.kind == "dyadic" and (self.exponent is None or self.exponent < 0):
            raise ValidationError(f"dyadic exponent must be a nonnegative integer, got {self.exponent}")

    @classmethod
    def of(cls, exponent: int) -> DyadicRadius:
        return cls(int(exponent))

    @property
    def value(self) -> Fraction:
        if self.kind == "zero":
            return Fraction(0)
        if self.kind == "one_plus":
            return Fraction(2)
        return Fraction(1, 2**self.exponent)

    @classmethod
    def round_up(cls, q: Fraction) -> DyadicRadius:
        """Smallest admissible radius that is >= q."""
        q = Fraction(q)
        if q <= 0:
            return cls.ZERO
        if q > 1:
            return cls.ONE_PLUS
        j = 0
        while Fraction(1, 2 ** (j + 1)) >= q:
            j += 1
        return cls(j)

    def __lt__(self, other: DyadicRadius) -> bool:
        return self.value < other.value

    def __repr__(self):
        if self.kind != "dyadic":
            return f"DyadicRadius.{self.kind.upper()}"
        return f"DyadicRadius(2**-{self.exponent})"


DyadicRadius.ZERO = DyadicRadius(None, "zero")
DyadicRadius.ONE_PLUS = DyadicRadius(None, "one_plus")


def _as_radius(eps) -> DyadicRadius:
    if isinstance(eps, DyadicRadius):
        return eps
    raise ValidationError(f"expected a DyadicRadius, got {eps!r}")


def fatten(A: ClopenSet, eps: DyadicRadius) -> ClopenSet:
    """``{x : d(x, A) < eps}``."""
    eps = _as_radius(eps)
    space = A.space
    if not A or eps.kind == "zero":
        return space.empty()
    if eps.kind == "one_plus":
        return space.full()
    # d(x, a) < 2**-j  iff  lcp(x, a) >= j + 1
    L = eps.exponent + 1
    if L >= space.depth:
        return A
    cls = space.prefix_classes[L]
    hit = np.zeros(cls.max() + 1, dtype=bool)
    hit[cls[A.mask()]] = True
    return ClopenSet.from_mask(space, hit[cls])


def shrink(A: ClopenSet, eps: DyadicRadius) -> ClopenSet:
    """``{x : d(x, complement of A) > eps}``; the distance to the empty set is infinite."""
    eps = _as_radius(eps)
    space = A.space
    if eps.kind == "zero":
        return A
    if eps.kind == "one_plus":
        return A if A.bits == space.full().bits else space.empty()
    # d(x, y) > 2**-j  iff  lcp(x, y) < j: the length-j cylinder of x must lie in A
    L = eps.exponent
    if L >= space.depth:
        return A
    cls = space.prefix_classes[L]
    bad = np.zeros(cls.max() + 1, dtype=bool)
    bad[cls[~A.mask()]] = True
    return ClopenSet.from_mask(space, ~bad[cls])


def distance_to_set(space: UnitSpace, x: int, Y: ClopenSet) -> Fraction | float:
    """Brute-force ``d(x, Y)``; ``inf`` for empty ``Y``."""
    if not Y:
        return float("inf")
    return min(space.metric(x, y) for y in Y)
