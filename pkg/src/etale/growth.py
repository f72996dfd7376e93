"""Balls, growth tables, doubling scales, Følner indices and orbital graphs.

Balls are taken in source fibers: ``B(n)x`` is the set of arrows with source
``x`` and word length at most ``n``.  They are never enumerated point by
point; one BFS over the whole arrow set gives every word length, and ball
sizes fall out of a per-source histogram.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import kernels
from .errors import EstimationError, GenerationError, InvariantViolation, SearchExhausted, ValidationError
from .groupoid import FiniteGroupoid

PLATEAU = 3


def ball_source(G: FiniteGroupoid, x: int, n: int) -> np.ndarray:
    """``B(n)x``: arrows with source ``x`` and word length ``<= n``."""
    if n < 0:
        raise ValidationError("ball radius must be >= 0")
    fiber = G.source_fiber(x)
    L = G.lengths[fiber]
    return fiber[(L >= 0) & (L <= n)]


def ball_range(G: FiniteGroupoid, x: int, n: int) -> np.ndarray:
    """Arrows with range ``x`` and word length ``<= n`` (the Cayley ball at ``x``)."""
    if n < 0:
        raise ValidationError("ball radius must be >= 0")
    fiber = G.range_fiber(x)
    L = G.lengths[fiber]
    return fiber[(L >= 0) & (L <= n)]


def ball_mask(G: FiniteGroupoid, n: int) -> np.ndarray:
    """Indicator of ``B(n)`` over all arrows."""
    return (G.lengths >= 0) & (G.lengths <= n)


def ball_sizes(G: FiniteGroupoid, n_max: int, threads: int = 1) -> np.ndarray:
    """``out[x, n] = |B(n)x|`` for ``0 <= n <= n_max``."""
    N = G.space.size
    if threads <= 1 or N < 2 * threads:
        return kernels.ball_counts(G.lengths, G.source, N, n_max)
    indptr, members = G.source_fibers
    bounds = np.linspace(0, N, threads + 1).astype(int)

    def chunk(i):
        lo, hi = bounds[i], bounds[i + 1]
        arrows = members[indptr[lo] : indptr[hi]]
        return kernels.ball_counts(G.lengths[arrows], G.source[arrows] - lo, hi - lo, n_max)

    with ThreadPoolExecutor(threads) as pool:
        return np.vstack(list(pool.map(chunk, range(threads))))


@dataclass(frozen=True)
class GrowthProfile:
    table: tuple[int, ...]
    saturation_n: int | None
    depth: int = 0

    @property
    def n_max(self) -> int:
        return len(self.table) - 1

    def __getitem__(self, n: int) -> int:
        return self.table[n]


def detect_saturation(table: Sequence[int]) -> int | None:
    """First ``n`` from which the table is constant to its end, if that plateau has ``PLATEAU`` entries."""
    n = len(table) - 1
    while n > 0 and table[n - 1] == table[n]:
        n -= 1
    return n if len(table) - n >= PLATEAU else None


def growth_function(G: FiniteGroupoid, n_max: int, threads: int = 1) -> GrowthProfile:
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    sizes = ball_sizes(G, n_max, threads)
    table = tuple(int(v) for v in sizes.max(axis=0))
    if table[0] != 1 or any(a > b for a, b in zip(table, table[1:])):
        raise InvariantViolation("growth table is not a nondecreasing table starting at 1", {"table": table})
    return GrowthProfile(table, detect_saturation(table), G.space.depth)


def profile_from_table(table: Sequence[int]) -> GrowthProfile:
    """Wrap a synthetic table (used for testing the estimators)."""
    table = tuple(int(v) for v in table)
    return GrowthProfile(table, detect_saturation(table))


@dataclass(frozen=True)
class OrdEstimate:
    """Least-squares slope of ``log gamma(n)`` against ``log n``.  A heuristic, not a bound."""

    value: Fraction
    slope: float
    residual: float
    window: tuple[int, int]
    heuristic: bool = True


def estimate_ord(profile: GrowthProfile, window: tuple[int, int] | None = None) -> OrdEstimate:
    table = profile.table
    if len(set(table)) == 1:
        return OrdEstimate(Fraction(0), 0.0, 0.0, (0, profile.n_max))
    sat = profile.saturation_n
    plateau_ok = False
    if window is None:
        hi = (sat - 1) if sat is not None else profile.n_max
        if sat is not None and hi < 2:
            # too short before the plateau: let the first saturated value in
            hi, plateau_ok = min(sat, profile.n_max), True
        window = (1, hi)
    lo, hi = window
    if lo < 1 or hi > profile.n_max or hi - lo + 1 < 2:
        raise EstimationError(f"regression window [{lo}, {hi}] has fewer than two usable points")
    if sat is not None and hi >= sat and not (plateau_ok and hi == sat):
        raise EstimationError(f"regression window [{lo}, {hi}] reaches the saturated plateau at n = {sat}")
    xs = np.log(np.arange(lo, hi + 1, dtype=float))
    ys = np.log(np.asarray(table[lo : hi + 1], dtype=float))
    slope, intercept = np.polyfit(xs, ys, 1)
    fitted = slope * xs + intercept
    residual = float(np.sqrt(np.mean((ys - fitted) ** 2)))
    slope = max(0.0, float(slope))
    return OrdEstimate(Fraction(slope).limit_denominator(64), slope, residual, (lo, hi))


def _doubles(g_m: int, g_2m: int, ord_: Fraction) -> bool:
    # g(2M) <= (2**(p/q) + 1) g(M)  <=>  (g(2M) - g(M))**q <= 2**p * g(M)**q
    p, q = ord_.numerator, ord_.denominator
    if g_2m < g_m:
        return True
    return (g_2m - g_m) ** q <= (2**p) * g_m**q


def find_doubling_scale(profile: GrowthProfile, N: int, ord_) -> int:
    """Smallest ``M >= N`` in the table with ``gamma(2M) <= (2**ord + 1) gamma(M)``."""
    ord_ = Fraction(ord_)
    if ord_ < 0:
        raise ValidationError("ord must be >= 0")
    t = profile.table
    M = max(N, 0)
    while 2 * M <= profile.n_max:
        if _doubles(t[M], t[2 * M], ord_):
            return M
        M += 1
    raise SearchExhausted(f"no doubling scale M >= {N} with 2M <= {profile.n_max}; extend n_max")


def m_parameter(G: FiniteGroupoid, profile: GrowthProfile, N: int, ord_=None) -> tuple[int, int, int]:
    """``(M, m, ord)`` with ``m = (2**ceil(ord) + 1) * gamma(M)``.

    Without an override, ``ord`` is the rounded-up regression estimate; a table
    that saturates too early to regress counts as bounded growth (ord 0).
    """
    if ord_ is None:
        try:
            ord_ = estimate_ord(profile).value
        except EstimationError:
            if profile.saturation_n is None:
                raise
            ord_ = 0
    c = math.ceil(Fraction(ord_))
    M = find_doubling_scale(profile, N, c)
    return M, (2**c + 1) * profile.table[M], c


# -- Følner ratios -------------------------------------------------------------


def _k_ball(G: FiniteGroupoid, mask: np.ndarray) -> np.ndarray:
    indptr, indices = G.left_action()
    return kernels.left_image_mask(indptr, indices, mask)


def folner_ratios(G: FiniteGroupoid, n: int) -> list[Fraction]:
    """``|K B(n)x| / |B(n)x|`` for every ``x``."""
    B = ball_mask(G, n)
    KB = _k_ball(G, B)
    N = G.space.size
    nb = np.bincount(G.source[B], minlength=N)
    nkb = np.bincount(G.source[KB], minlength=N)
    return [Fraction(int(a), int(b)) for a, b in zip(nkb, nb)]


def boundary_ratio(G: FiniteGroupoid, n: int) -> Fraction:
    """``rho(n) = sup_x |K B(n)x  Δ  B(n)x| / |B(n)x|``."""
    B = ball_mask(G, n)
    KB = _k_ball(G, B)
    N = G.space.size
    nb = np.bincount(G.source[B], minlength=N)
    nd = np.bincount(G.source[B ^ KB], minlength=N)
    return max(Fraction(int(a), int(b)) for a, b in zip(nd, nb))


def folner_index(G: FiniteGroupoid, eps, n_max: int = 64) -> tuple[int, Fraction]:
    """Smallest ``n`` with ``sup_x |K B(n)x| / |B(n)x| < 1 + eps``, and that sup."""
    eps = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    if eps <= 0:
        raise ValidationError("epsilon must be > 0")
    for n in range(n_max + 1):
        ratio = max(folner_ratios(G, n))
        if ratio < 1 + eps:
            return n, ratio
    raise SearchExhausted(f"no Følner index below n_max = {n_max}")


# -- orbital graph --------------------------------------------------------------


@dataclass(frozen=True)
class OrbitalGraph:
    n_vertices: int
    edges: frozenset[tuple[int, int]]
    adjacency: tuple[tuple[int, ...], ...] = field(repr=False, compare=False, default=())


def orbital_graph(G: FiniteGroupoid) -> OrbitalGraph:
    edges = set()
    for k in G.generators:
        s, r = int(G.source[k]), int(G.range[k])
        if s != r:
            edges.add((min(s, r), max(s, r)))
    adj: list[list[int]] = [[] for _ in range(G.space.size)]
    for a, b in sorted(edges):
        adj[a].append(b)
        adj[b].append(a)
    return OrbitalGraph(G.space.size, frozenset(edges), tuple(tuple(v) for v in adj))


def orbital_ball(graph: OrbitalGraph, x: int, n: int) -> set[int]:
    seen = {x: 0}
    queue = deque([x])
    while queue:
        u = queue.popleft()
        if seen[u] == n:
            continue
        for v in graph.adjacency[u]:
            if v not in seen:
                seen[v] = seen[u] + 1
                queue.append(v)
    return set(seen)


@dataclass(frozen=True)
class SurjectionReport:
    x: int
    n: int
    cayley: int
    orbital: int
    surjective: bool

    @property
    def passed(self) -> bool:
        return self.surjective and self.orbital <= self.cayley


def check_source_surjection(G: FiniteGroupoid, x: int, n: int, graph: OrbitalGraph | None = None) -> SurjectionReport:
    """The source map sends the Cayley ball at ``x`` onto the orbital ball at ``x``."""
    graph = graph or orbital_graph(G)
    cay = ball_range(G, x, n)
    orb = orbital_ball(graph, x, n)
    image = set(G.source[cay].tolist())
    report = SurjectionReport(x, n, len(cay), len(orb), image == orb)
    if not report.passed:
        raise InvariantViolation("source map does not carry the Cayley ball onto the orbital ball", report.__dict__)
    return report


# -- length functions -------------------------------------------------------------


@dataclass(frozen=True)
class LengthComparison:
    M_L: int
    pointwise: bool
    inclusions: tuple[bool, ...]

    @property
    def passed(self) -> bool:
        return self.pointwise and all(self.inclusions)


def validate_length_function(G: FiniteGroupoid, ell: np.ndarray, max_pairs: int = 2_000_000, seed: int = 0) -> None:
    """Check ``ell`` vanishes on units, is inversion-invariant and subadditive."""
    ell = np.asarray(ell)
    if len(ell) != G.n_arrows:
        raise ValidationError("length function must assign a value to every arrow")
    if np.any(ell < 0):
        raise ValidationError("length function axiom violated: values must be nonnegative")
    if np.any(ell[G.units] != 0):
        raise ValidationError("length function axiom (1) violated: nonzero on a unit")
    if np.any(ell[G.inverse] != ell):
        raise ValidationError("length function axiom (2) violated: ell(g^-1) != ell(g)")
    total = G.composable_pair_count()
    if total <= max_pairs:
        pairs = ((g, h) for g in range(G.n_arrows) for h in G.range_fiber(int(G.source[g])).tolist())
    else:
        rng = np.random.default_rng(seed)
        gs = rng.integers(0, G.n_arrows, max_pairs // 4)
        pairs = ((int(g), int(rng.choice(G.range_fiber(int(G.source[g]))))) for g in gs)
    for g, h in pairs:
        if ell[G._mul(g, h)] > ell[g] + ell[h]:
            raise ValidationError(f"length function axiom (3) violated: ell({g}*{h}) > ell({g}) + ell({h})")


def compare_length_functions(G: FiniteGroupoid, ell, L: Iterable[int], r_max: int | None = None) -> LengthComparison:
    """``ell <= M_L ell_L`` pointwise and ``B_{ell_L}(r) ⊆ B_ell(M_L r)`` for ``r <= r_max``."""
    ell = np.asarray([ell[a] for a in range(G.n_arrows)] if isinstance(ell, Mapping) else ell, dtype=np.int64)
    validate_length_function(G, ell)
    L = sorted({int(a) for a in L} - set(G.units.tolist()))
    if any(G.inv(a) not in set(L) for a in L):
        raise ValidationError("comparison set L must be symmetric")
    ell_L = G.word_lengths(L)
    if np.any(ell_L < 0):
        raise GenerationError("L does not generate the groupoid")
    M_L = int(ell[L].max()) if L else 0
    pointwise = bool(np.all(ell <= M_L * ell_L))
    r_max = int(ell_L.max()) if r_max is None else r_max
    inclusions = tuple(bool(np.all(ell[ell_L <= r] <= M_L * r)) for r in range(r_max + 1))
    return LengthComparison(M_L, pointwise, inclusions)


def k_squared_generators(G: FiniteGroupoid) -> list[int]:
    """``K ∪ K^2`` without units."""
    K = list(G.generators)
    return sorted((set(K) | G.products(K, K)) - set(G.units.tolist()))
