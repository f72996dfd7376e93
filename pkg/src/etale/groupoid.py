"""Explicit finite groupoids over a truncated unit space.

Arrows are integers ``0..n-1``.  Composition follows the convolution
convention: ``compose(g, h)`` is defined iff ``source(g) == range(h)`` and
then ``source(gh) = source(h)``, ``range(gh) = range(g)``.

The generating set ``K`` never contains units; word length is 0 on units and
otherwise the least ``n`` with the arrow in ``K^n``.
"""

from __future__ import annotations

import hashlib
from functools import cached_property
from typing import Callable, Hashable, Iterable, NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, GenerationError, InvariantViolation, ResourceError, UsageError, ValidationError
from .unitspace import ClopenSet, UnitSpace

MAX_ARROWS = 400_000
EXHAUSTIVE_TRIPLE_LIMIT = 300_000


class Arrow(NamedTuple):
    id: int
    source: int
    range: int
    label: Hashable


def _csr(keys: np.ndarray, n_rows: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(keys, kind="stable")
    counts = np.bincount(keys, minlength=n_rows)
    indptr = np.zeros(n_rows + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, order.astype(np.int64)


class FiniteGroupoid:
    """A finite groupoid given by arrow tables and a product callback.

    ``mul(g, h)`` is only ever called on composable pairs.
    """

    def __init__(
        self,
        space: UnitSpace,
        source: Sequence[int],
        range_: Sequence[int],
        inverse: Sequence[int],
        labels: Sequence[Hashable],
        units: Sequence[int],
        mul: Callable[[int, int], int],
        generators: Iterable[int],
        kind: str = "",
        meta: dict | None = None,
    ):
        self.space = space
        self.source = np.asarray(source, dtype=np.int64)
        self.range = np.asarray(range_, dtype=np.int64)
        self.inverse = np.asarray(inverse, dtype=np.int64)
        self.labels = list(labels)
        self.units = np.asarray(units, dtype=np.int64)
        self._mul = mul
        self.kind = kind
        self.meta = dict(meta or {})
        n = len(self.source)
        if n > MAX_ARROWS:
            raise ResourceError(f"{n} arrows exceeds cap {MAX_ARROWS}")
        if not (len(self.range) == len(self.inverse) == len(self.labels) == n):
            raise ValidationError("arrow tables have inconsistent lengths")
        if len(self.units) != space.size:
            raise ValidationError("need exactly one unit arrow per point")
        self.is_unit = np.zeros(n, dtype=bool)
        self.is_unit[self.units] = True
        gens = sorted(set(int(k) for k in generators))
        if any(self.is_unit[k] for k in gens):
            raise ValidationError("generating set must not contain units")
        gset = set(gens)
        if any(int(self.inverse[k]) not in gset for k in gens):
            raise ValidationError("generating set is not symmetric")
        self.generators = tuple(gens)

    # -- basic structure ---------------------------------------------------

    @property
    def n_arrows(self) -> int:
        return len(self.source)

    def __len__(self) -> int:
        return self.n_arrows

    def arrow(self, a: int) -> Arrow:
        return Arrow(int(a), int(self.source[a]), int(self.range[a]), self.labels[a])

    def arrows(self) -> list[Arrow]:
        return [self.arrow(a) for a in range(self.n_arrows)]

    def unit(self, x: int) -> int:
        return int(self.units[x])

    def composable(self, g: int, h: int) -> bool:
        return self.source[g] == self.range[h]

    def compose(self, g: int, h: int) -> int:
        if self.source[g] != self.range[h]:
            raise ValidationError(f"arrows {g} and {h} are not composable")
        return int(self._mul(int(g), int(h)))

    def inv(self, g: int) -> int:
        return int(self.inverse[g])

    @cached_property
    def source_fibers(self) -> tuple[np.ndarray, np.ndarray]:
        """CSR ``(indptr, arrows)`` of ``G_x`` in arrow-id order."""
        return _csr(self.source, self.space.size)

    @cached_property
    def range_fibers(self) -> tuple[np.ndarray, np.ndarray]:
        return _csr(self.range, self.space.size)

    def source_fiber(self, x: int) -> np.ndarray:
        indptr, members = self.source_fibers
        return members[indptr[x] : indptr[x + 1]]

    def range_fiber(self, x: int) -> np.ndarray:
        indptr, members = self.range_fibers
        return members[indptr[x] : indptr[x + 1]]

    def is_principal(self) -> bool:
        return bool(np.all((self.source != self.range) | self.is_unit))

    def products(self, left: Iterable[int], right: Iterable[int]) -> set[int]:
        """The product set ``LR`` of composable pairs."""
        by_range: dict[int, list[int]] = {}
        for h in right:
            by_range.setdefault(int(self.range[h]), []).append(int(h))
        out = set()
        for g in left:
            for h in by_range.get(int(self.source[g]), ()):
                out.add(self._mul(int(g), h))
        return out

    # -- word length -------------------------------------------------------

    def left_action(self, gens: Sequence[int] | None = None) -> tuple[np.ndarray, np.ndarray]:
        """CSR graph with an edge ``a -> k a`` for every ``k`` in ``gens`` with ``s(k) = r(a)``."""
        if gens is None:
            return self._left_action_K
        return self._left_action(tuple(int(k) for k in gens))

    @cached_property
    def _left_action_K(self):
        return self._left_action(self.generators)

    def _left_action(self, gens):
        by_source: dict[int, list[int]] = {}
        for k in gens:
            by_source.setdefault(int(self.source[k]), []).append(k)
        indptr = np.zeros(self.n_arrows + 1, dtype=np.int64)
        indices = []
        rng = self.range.tolist()
        for a in range(self.n_arrows):
            ks = by_source.get(rng[a], ())
            indices.extend(self._mul(k, a) for k in ks)
            indptr[a + 1] = indptr[a] + len(ks)
        return indptr, np.asarray(indices, dtype=np.int64)

    def word_lengths(self, gens: Sequence[int] | None = None) -> np.ndarray:
        """Word length of every arrow; ``-1`` where the arrow is not generated."""
        if gens is None:
            return self.lengths
        gens = [int(k) for k in gens if not self.is_unit[k]]
        indptr, indices = self._left_action(tuple(gens))
        return kernels.bfs_distances(indptr, indices, self.units, self.n_arrows)

    @cached_property
    def lengths(self) -> np.ndarray:
        indptr, indices = self._left_action_K
        return kernels.bfs_distances(indptr, indices, self.units, self.n_arrows)

    def word_length(self, g: int) -> int:
        n = int(self.lengths[g])
        if n < 0:
            raise GenerationError(f"arrow {g} is not a product of generators")
        return n

    def generates(self) -> bool:
        return bool(np.all(self.lengths >= 0))

    # -- digests and checks ------------------------------------------------

    def digest(self) -> str:
        """SHA-256 of the arrow table; witnesses are bound to it."""
        h = hashlib.sha256()
        h.update(repr((self.space.alphabet, self.space.depth, self.space.words)).encode())
        for a in range(self.n_arrows):
            h.update(f"{self.source[a]},{self.range[a]},{self.labels[a]!r},{self.inverse[a]};".encode())
        h.update(repr(self.generators).encode())
        return h.hexdigest()

    def composable_pair_count(self) -> int:
        out_deg = np.bincount(self.range, minlength=self.space.size)
        in_deg = np.bincount(self.source, minlength=self.space.size)
        return int(np.dot(out_deg, in_deg))

    def __repr__(self):
        return f"FiniteGroupoid({self.kind!s}, {self.space.size} units, {self.n_arrows} arrows, |K|={len(self.generators)})"


def check_axioms(G: FiniteGroupoid, exhaustive: bool | None = None, samples: int = 20000, seed: int = 0) -> dict:
    """Check unit, inverse and associativity laws; raise InvariantViolation on failure.

    Associativity runs over every composable triple unless there are more than
    ``EXHAUSTIVE_TRIPLE_LIMIT`` of them (or ``exhaustive=False``), in which case
    ``samples`` random triples are drawn.
    """
    n = G.n_arrows
    src, rng, inv = G.source, G.range, G.inverse
    for x in range(G.space.size):
        u = G.units[x]
        if src[u] != x or rng[u] != x or inv[u] != u:
            raise InvariantViolation(f"unit at {x} malformed", {"unit": int(u)})
    for g in range(n):
        i = int(inv[g])
        if inv[i] != g or src[i] != rng[g] or rng[i] != src[g]:
            raise InvariantViolation(f"inverse law fails at arrow {g}", {"arrow": g})
        if G._mul(int(G.units[rng[g]]), g) != g or G._mul(g, int(G.units[src[g]])) != g:
            raise InvariantViolation(f"unit law fails at arrow {g}", {"arrow": g})
        if G._mul(g, i) != G.units[rng[g]] or G._mul(i, g) != G.units[src[g]]:
            raise InvariantViolation(f"g g^-1 is not a unit at arrow {g}", {"arrow": g})
    r_indptr, r_members = G.range_fibers

    def fiber_r(x):
        return r_members[r_indptr[x] : r_indptr[x + 1]].tolist()

    for g in range(n):
        for h in fiber_r(int(src[g])):
            gh = G._mul(g, h)
            if src[gh] != src[h] or rng[gh] != rng[g]:
                raise InvariantViolation(f"product {g}*{h} has wrong endpoints", {"g": g, "h": h})

    fiber_size = np.bincount(rng, minlength=G.space.size)
    triples = int(np.dot(fiber_size[rng], fiber_size[src]))
    if exhaustive is None:
        exhaustive = triples <= EXHAUSTIVE_TRIPLE_LIMIT
    checked = 0
    if exhaustive:
        for c in range(n):
            for b in fiber_r(int(rng[c])):
                bc = G._mul(b, c)
                for a in fiber_r(int(rng[b])):
                    if G._mul(G._mul(a, b), c) != G._mul(a, bc):
                        raise InvariantViolation("associativity fails", {"triple": (a, b, c)})
                    checked += 1
    else:
        rs = np.random.default_rng(seed)
        for _ in range(samples):
            c = int(rs.integers(n))
            bs = fiber_r(int(rng[c]))
            b = bs[int(rs.integers(len(bs)))]
            as_ = fiber_r(int(rng[b]))
            a = as_[int(rs.integers(len(as_)))]
            if G._mul(G._mul(a, b), c) != G._mul(a, G._mul(b, c)):
                raise InvariantViolation("associativity fails", {"triple": (a, b, c)})
            checked += 1
    return {"arrows": n, "triples_checked": checked, "exhaustive": bool(exhaustive)}


class Bisection:
    """A set of arrows on which source and range are both injective."""

    __slots__ = ("groupoid", "arrows", "_by_source", "_by_range")

    def __init__(self, groupoid: FiniteGroupoid, arrows: Iterable[int]):
        self.groupoid = groupoid
        self.arrows = tuple(sorted(set(int(a) for a in arrows)))
        n = groupoid.n_arrows
        if any(not 0 <= a < n for a in self.arrows):
            raise ValidationError("bisection refers to an arrow outside the groupoid")
        src = groupoid.source[list(self.arrows)].tolist() if self.arrows else []
        rng = groupoid.range[list(self.arrows)].tolist() if self.arrows else []
        self._by_source = dict(zip(src, self.arrows))
        self._by_range = dict(zip(rng, self.arrows))
        if len(self._by_source) != len(self.arrows):
            raise ValidationError("source map is not injective on this arrow set")
        if len(self._by_range) != len(self.arrows):
            raise ValidationError("range map is not injective on this arrow set")

    def __len__(self):
        return len(self.arrows)

    def __iter__(self):
        return iter(self.arrows)

    def __bool__(self):
        return bool(self.arrows)

    def __eq__(self, other):
        return isinstance(other, Bisection) and other.groupoid is self.groupoid and other.arrows == self.arrows

    def __hash__(self):
        return hash(self.arrows)

    def __repr__(self):
        return f"Bisection({list(self.arrows)})"

    @property
    def source_set(self) -> ClopenSet:
        return ClopenSet.from_indices(self.groupoid.space, self._by_source)

    @property
    def range_set(self) -> ClopenSet:
        return ClopenSet.from_indices(self.groupoid.space, self._by_range)

    def arrow_at_source(self, x: int) -> int:
        try:
            return self._by_source[x]
        except KeyError:
            raise DomainError(f"point {x} is not in the source of the bisection") from None

    def arrow_at_range(self, y: int) -> int:
        try:
            return self._by_range[y]
        except KeyError:
            raise DomainError(f"point {y} is not in the range of the bisection") from None

    def theta(self, x: int) -> int:
        return int(self.groupoid.range[self.arrow_at_source(x)])

    def theta_inverse(self, y: int) -> int:
        return int(self.groupoid.source[self.arrow_at_range(y)])

    def image(self, C: ClopenSet) -> ClopenSet:
        """``theta(C ∩ s(V))``."""
        rng = self.groupoid.range
        return ClopenSet.from_indices(C.space, (int(rng[a]) for x, a in self._by_source.items() if x in C))

    def preimage(self, C: ClopenSet) -> ClopenSet:
        """``theta^-1(C ∩ r(V))``."""
        src = self.groupoid.source
        return ClopenSet.from_indices(C.space, (int(src[a]) for y, a in self._by_range.items() if y in C))

    def restrict(self, U: ClopenSet) -> Bisection:
        """Arrows of the bisection whose source lies in ``U``."""
        return Bisection(self.groupoid, (a for x, a in self._by_source.items() if x in U))

    def inverse(self) -> Bisection:
        return Bisection(self.groupoid, (self.groupoid.inv(a) for a in self.arrows))

    def __mul__(self, other: Bisection) -> Bisection:
        """Product bisection ``{gh : g in self, h in other, s(g) = r(h)}``."""
        return Bisection(self.groupoid, self.groupoid.products(self.arrows, other.arrows))


def _point_of(space: UnitSpace, x) -> int:
    return space.index(x) if isinstance(x, str) else int(x)


def theta_apply(V: Bisection, x):
    """``theta_V(x)``; accepts and returns words when given a word."""
    space = V.groupoid.space
    y = V.theta(_point_of(space, x))
    return space.word(y) if isinstance(x, str) else y


def theta_inverse(V: Bisection, y):
    space = V.groupoid.space
    x = V.theta_inverse(_point_of(space, y))
    return space.word(x) if isinstance(y, str) else x


def decompose_into_bisections(G: FiniteGroupoid, D: Iterable[int]) -> list[Bisection]:
    """Split ``D`` into disjoint bisections: group by label, then split conflicts greedily in id order."""
    groups: dict[Hashable, list[int]] = {}
    for a in sorted(set(int(a) for a in D)):
        groups.setdefault(G.labels[a], []).append(a)
    out = []
    for members in groups.values():
        pieces: list[tuple[set, set, list]] = []
        for a in members:
            s, r = int(G.source[a]), int(G.range[a])
            for used_s, used_r, arrows in pieces:
                if s not in used_s and r not in used_r:
                    break
            else:
                used_s, used_r, arrows = set(), set(), []
                pieces.append((used_s, used_r, arrows))
            used_s.add(s)
            used_r.add(r)
            arrows.append(a)
        out.extend(Bisection(G, arrows) for _, _, arrows in pieces)
    return out


def relation_groupoid(
    space: UnitSpace,
    pairs: Iterable[tuple[int, int]],
    generator_pairs: Iterable[tuple[int, int]],
    labels: dict | None = None,
    kind: str = "relation",
    meta: dict | None = None,
) -> FiniteGroupoid:
    """Principal groupoid of an equivalence relation given as ``(source, range)`` pairs.

    Arrows are ordered by ``(source, range)``.  The relation must be reflexive,
    symmetric and transitive; transitivity is checked lazily through ``mul``.
    """
    ordered = sorted(set((int(s), int(r)) for s, r in pairs))
    if len(ordered) > MAX_ARROWS:
        raise ResourceError(f"{len(ordered)} arrows exceeds cap {MAX_ARROWS}")
    ids = {p: i for i, p in enumerate(ordered)}
    try:
        units = [ids[(x, x)] for x in range(space.size)]
        inverse = [ids[(r, s)] for s, r in ordered]
    except KeyError as exc:
        raise ValidationError(f"relation is not reflexive/symmetric at {exc}") from None
    src = [s for s, _ in ordered]
    rng = [r for _, r in ordered]

    def mul(g, h):
        # (y -> z)(x -> y) = (x -> z)
        try:
            return ids[(src[h], rng[g])]
        except KeyError:
            raise InvariantViolation("relation is not transitive", {"g": g, "h": h}) from None

    lab = [labels.get(p, p) if labels is not None else p for p in ordered]
    gens = [ids[(int(s), int(r))] for s, r in generator_pairs if int(s) != int(r)]
    return FiniteGroupoid(space, src, rng, inverse, lab, units, mul, gens, kind=kind, meta=meta)


def subgroupoid(
    G: FiniteGroupoid,
    arrows: Iterable[int],
    generators: Iterable[int] | None = None,
    kind: str = "subgroupoid",
    check: bool = True,
) -> FiniteGroupoid:
    """The wide subgroupoid on ``arrows`` (all units are added).

    Arrow ids are renumbered in increasing parent order; ``meta['parent_ids']``
    maps back.  ``generators`` are parent ids; default is every non-unit arrow.
    """
    old = sorted(set(int(a) for a in arrows) | set(G.units.tolist()))
    new = {a: i for i, a in enumerate(old)}
    if check:
        for a in old:
            if G.inv(a) not in new:
                raise ValidationError(f"arrow set not closed under inverse at {a}")
        by_range: dict[int, list[int]] = {}
        for a in old:
            by_range.setdefault(int(G.range[a]), []).append(a)
        for a in old:
            for b in by_range.get(int(G.source[a]), ()):
                if G._mul(a, b) not in new:
                    raise ValidationError(f"arrow set not closed under composition at ({a}, {b})")
    old_arr = np.asarray(old, dtype=np.int64)

    def mul(g, h):
        return new[G._mul(old[g], old[h])]

    gens = [a for a in old if not G.is_unit[a]] if generators is None else [int(a) for a in generators]
    return FiniteGroupoid(
        G.space,
        G.source[old_arr],
        G.range[old_arr],
        [new[int(G.inverse[a])] for a in old],
        [G.labels[a] for a in old],
        [new[int(u)] for u in G.units],
        mul,
        [new[a] for a in gens if not G.is_unit[a]],
        kind=kind,
        meta={"parent_ids": old_arr, "parent_kind": G.kind},
    )


def generated_subgroupoid(G: FiniteGroupoid, L: Iterable[int]) -> FiniteGroupoid:
    """Subgroupoid generated by ``L`` (together with all units), with ``L ∪ L^-1`` as generators."""
    gens = set()
    for a in L:
        a = int(a)
        if not G.is_unit[a]:
            gens.update((a, G.inv(a)))
    reach = G.word_lengths(sorted(gens))
    arrows = np.flatnonzero(reach >= 0)
    return subgroupoid(G, arrows, generators=sorted(gens), kind=f"<L> in {G.kind}", check=False)


class IsoQuotient(NamedTuple):
    isotropy: FiniteGroupoid
    quotient: FiniteGroupoid
    quotient_map: np.ndarray


def isotropy_and_quotient(G: FiniteGroupoid) -> IsoQuotient:
    """``Iso(G)`` and the principal quotient ``G/Iso(G)`` with arrows ``(s(g), r(g))``."""
    iso_arrows = np.flatnonzero(G.source == G.range)
    iso = subgroupoid(G, iso_arrows, kind=f"Iso({G.kind})", check=False)
    pairs = set(zip(G.source.tolist(), G.range.tolist()))
    Kq = [(int(G.source[k]), int(G.range[k])) for k in G.generators]
    Q = relation_groupoid(G.space, pairs, Kq, kind=f"R({G.kind})")
    ids = {(int(Q.source[i]), int(Q.range[i])): i for i in range(Q.n_arrows)}
    qmap = np.array([ids[(int(s), int(r))] for s, r in zip(G.source, G.range)], dtype=np.int64)
    for x in range(G.space.size):
        if qmap[G.units[x]] != Q.units[x]:
            raise InvariantViolation("quotient map does not send units to units", {"x": x})
        if set(qmap[G.range_fiber(x)].tolist()) != set(Q.range_fiber(x).tolist()):
            raise InvariantViolation("quotient map is not surjective on a range fiber", {"x": x})
    return IsoQuotient(iso, Q, qmap)
