"""Measures on the unit space, Banach densities and approximate invariant densities.

Everything here is exact: weights and densities are ``Fraction`` values.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy

from .errors import DomainError, InvariantViolation, ValidationError
from .groupoid import Bisection, FiniteGroupoid, decompose_into_bisections
from .growth import ball_mask, ball_source, boundary_ratio
from .unitspace import ClopenSet, UnitSpace


@dataclass(frozen=True)
class PointMeasure:
    space: UnitSpace
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.weights) != self.space.size:
            raise ValidationError("one weight per point is required")
        if any(w < 0 for w in self.weights):
            raise ValidationError("measure weights must be nonnegative")

    @classmethod
    def from_mapping(cls, space: UnitSpace, weights: Mapping[str, object]) -> PointMeasure:
        w = [Fraction(0)] * space.size
        for word, v in weights.items():
            w[space.index(word)] = Fraction(v)
        return cls(space, tuple(w))

    @classmethod
    def uniform(cls, space: UnitSpace) -> PointMeasure:
        return cls(space, (Fraction(1, space.size),) * space.size)

    @classmethod
    def point_mass(cls, space: UnitSpace, x: int) -> PointMeasure:
        w = [Fraction(0)] * space.size
        w[x] = Fraction(1)
        return cls(space, tuple(w))

    @property
    def total(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def __call__(self, A: ClopenSet | Iterable[int]) -> Fraction:
        return sum((self.weights[x] for x in A), Fraction(0))

    def as_mapping(self) -> dict[str, Fraction]:
        return {w: v for w, v in zip(self.space.words, self.weights) if v}


def _require_probability(mu: PointMeasure) -> None:
    if mu.total != 1:
        raise ValidationError(f"expected a probability measure, total mass is {mu.total}")


def invariance_defect(G: FiniteGroupoid, mu: PointMeasure) -> Fraction:
    """``sup |mu(s(U)) - mu(r(U))|`` over sub-bisections ``U`` of the pieces of ``K``.

    On one piece the supremum takes either all arrows moving mass forward or
    all arrows moving it backward.
    """
    _require_probability(mu)
    worst = Fraction(0)
    for V in decompose_into_bisections(G, G.generators):
        diffs = [mu.weights[G.source[a]] - mu.weights[G.range[a]] for a in V]
        pos = sum((d for d in diffs if d > 0), Fraction(0))
        neg = sum((-d for d in diffs if d < 0), Fraction(0))
        worst = max(worst, pos, neg)
    return worst


def invariant_measures(G: FiniteGroupoid) -> list[PointMeasure]:
    """Extreme points of the invariant probability measures, from the invariance equations.

    The equations ``mu(s(k)) = mu(r(k))`` for ``k`` in ``K`` are solved
    exactly; each basis vector of the solution space is normalised to mass 1.
    """
    N = G.space.size
    eqs = sorted({(min(int(G.source[k]), int(G.range[k])), max(int(G.source[k]), int(G.range[k]))) for k in G.generators})
    M = sympy.zeros(max(len(eqs), 1), N)
    for i, (a, b) in enumerate(eqs):
        M[i, a] = 1
        M[i, b] = -1
    out = []
    for v in M.nullspace():
        vals = [Fraction(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1])) for c in v]
        if any(c < 0 for c in vals):
            vals = [-c for c in vals]
        if any(c < 0 for c in vals):
            raise InvariantViolation("invariance solution space has a basis vector of mixed sign")
        total = sum(vals, Fraction(0))
        out.append(PointMeasure(G.space, tuple(c / total for c in vals)))
    for mu in out:
        if invariance_defect(G, mu) != 0:
            raise InvariantViolation("solved measure is not invariant")
    return out


def measure_range(measures: Sequence[PointMeasure], A: ClopenSet) -> tuple[Fraction, Fraction]:
    """``(inf, sup)`` of ``mu(A)`` over the polytope spanned by ``measures``."""
    vals = [mu(A) for mu in measures]
    return min(vals), max(vals)


def empirical_measure(G: FiniteGroupoid, x: int, n: int) -> PointMeasure:
    """Uniform average of point masses at ranges of ``B(n)x``."""
    ball = ball_source(G, x, n)
    counts = np.bincount(G.range[ball], minlength=G.space.size)
    return PointMeasure(G.space, tuple(Fraction(int(c), len(ball)) for c in counts))


def _translate(G: FiniteGroupoid, U: Bisection, arrows: np.ndarray) -> set[int]:
    """``U B`` for a set ``B`` of arrows."""
    out = set()
    for g in arrows.tolist():
        try:
            u = U.arrow_at_source(int(G.range[g]))
        except DomainError:
            continue
        out.add(G._mul(u, g))
    return out


def empirical_invariance_bound(G: FiniteGroupoid, x: int, n: int) -> tuple[Fraction, Fraction]:
    """``(defect, bound)`` for the empirical measure at ``(x, n)``.

    For each piece ``U`` of ``K``, ``|nu(r(U)) - nu(s(U))|`` is checked against
    ``|U B Δ B| / |B|``; the maxima of both sides are returned.
    """
    nu = empirical_measure(G, x, n)
    ball = ball_source(G, x, n)
    B = set(ball.tolist())
    defect = bound = Fraction(0)
    for U in decompose_into_bisections(G, G.generators):
        d = abs(nu(U.range_set) - nu(U.source_set))
        b = Fraction(len(_translate(G, U, ball) ^ B), len(B))
        if d > b:
            raise InvariantViolation("empirical defect exceeds the symmetric-difference bound", {"x": x, "n": n, "U": U.arrows})
        defect, bound = max(defect, d), max(bound, b)
    return defect, bound


def _density_fractions(G: FiniteGroupoid, A: ClopenSet, n: int) -> list[Fraction]:
    B = ball_mask(G, n)
    hit = B & A.mask()[G.range]
    N = G.space.size
    num = np.bincount(G.source[hit], minlength=N)
    den = np.bincount(G.source[B], minlength=N)
    return [Fraction(int(a), int(b)) for a, b in zip(num, den)]


def banach_upper_density(G: FiniteGroupoid, A: ClopenSet, n: int) -> Fraction:
    return max(_density_fractions(G, A, n))


def banach_lower_density(G: FiniteGroupoid, A: ClopenSet, n: int) -> Fraction:
    return min(_density_fractions(G, A, n))


@dataclass(frozen=True)
class DensityRow:
    n: int
    upper: Fraction
    lower: Fraction
    rho: Fraction


def density_profile(G: FiniteGroupoid, A: ClopenSet, n_max: int) -> list[DensityRow]:
    rows = []
    for n in range(n_max + 1):
        fr = _density_fractions(G, A, n)
        rows.append(DensityRow(n, max(fr), min(fr), boundary_ratio(G, n)))
    return rows


# -- approximate invariant densities ------------------------------------------------


def fiber_normalized_ball(G: FiniteGroupoid, n: int) -> dict[int, Fraction]:
    """``g(γ) = [ℓ(γ) <= n] / |{γ' in G^{r(γ)} : ℓ(γ') <= n}|``."""
    B = ball_mask(G, n)
    den = np.bincount(G.range[B], minlength=G.space.size)
    return {int(a): Fraction(1, int(den[G.range[a]])) for a in np.flatnonzero(B)}


@dataclass(frozen=True)
class DensityReport:
    n: int
    deficit: Fraction
    displacement: Fraction
    sums_bounded: bool
    eps: Fraction

    @property
    def passed(self) -> bool:
        return self.sums_bounded and self.deficit < self.eps and self.displacement < self.eps


def _range_sums(G: FiniteGroupoid, g: Mapping[int, Fraction]) -> list[Fraction]:
    sums = [Fraction(0)] * G.space.size
    for a, v in g.items():
        sums[int(G.range[a])] += v
    return sums


def displacement(G: FiniteGroupoid, g: Mapping[int, Fraction], mu: int) -> Fraction:
    """``sum over γ in G^{r(μ)} of |g(μ^{-1}γ) - g(γ)|``."""
    mu_inv = G.inv(mu)
    total = Fraction(0)
    for gamma in G.range_fiber(int(G.range[mu])).tolist():
        total += abs(g.get(G._mul(mu_inv, gamma), 0) - g.get(gamma, 0))
    return total


def verify_density_certificate(G: FiniteGroupoid, seq: Sequence[Mapping[int, Fraction]], K_test: Iterable[int], eps) -> DensityReport:
    """Check the last density of ``seq``: fiber sums at most 1, deficit and displacement below ``eps``."""
    eps = Fraction(str(eps)) if isinstance(eps, float) else Fraction(eps)
    if not seq:
        raise ValidationError("empty density sequence")
    for g in seq:
        if any(v < 0 for v in g.values()):
            raise ValidationError("densities must be nonnegative")
    g = seq[-1]
    sums = _range_sums(G, g)
    deficit = max(1 - s for s in sums)
    disp = max((displacement(G, g, int(mu)) for mu in K_test), default=Fraction(0))
    return DensityReport(len(seq) - 1, deficit, disp, all(s <= 1 for s in sums), eps)


def extend_density_by_zero(G: FiniteGroupoid, H: FiniteGroupoid, f: Mapping[int, Fraction]) -> dict[int, Fraction]:
    """Extend ``f`` (keyed by arrows of ``G`` lying in the subgroupoid ``H``) by zero.

    For every arrow of ``H`` the range-fiber sum and the displacement sum are
    recomputed inside ``H`` and must agree with the values computed in ``G``.
    """
    parent = H.meta.get("parent_ids")
    if parent is None:
        raise ValidationError("H must be a subgroupoid of G (built with subgroupoid/generated_subgroupoid)")
    local = {int(a): i for i, a in enumerate(parent.tolist())}
    if any(a not in local for a in f):
        raise ValidationError("density support escapes the subgroupoid")
    F = {int(a): Fraction(v) for a, v in f.items() if v}
    fH = {local[a]: v for a, v in F.items()}
    sums_G = _range_sums(G, F)
    sums_H = _range_sums(H, fH)
    for i in range(H.n_arrows):
        x = int(H.range[i])
        if sums_G[x] != sums_H[x]:
            raise InvariantViolation("fiber sums differ between G and H", {"arrow": int(parent[i])})
        if displacement(G, F, int(parent[i])) != displacement(H, fH, i):
            raise InvariantViolation("displacement sums differ between G and H", {"arrow": int(parent[i])})
    return F
