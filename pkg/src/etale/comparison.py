"""Subequivalence witnesses and the algorithms that build them.

A witness for ``A ≾_m B`` is a list of ``m + 1`` families of bisections whose
sources cover ``A``, whose ranges lie in ``B``, and whose ranges are pairwise
disjoint inside each family.  ``verify_witness`` checks exactly that and
nothing else, so it can be trusted independently of how a witness was made.

``run_m_comparison`` transcribes the step-by-step construction that turns a
counting hypothesis over ``D``-fibers into a witness with ``m`` families; each
step re-asserts its counting invariant and builds the injection that proves it.
``run_exhaustion_comparison`` upgrades that to a single family on minimal
groupoids with a measure gap.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .errors import DomainError, InvariantViolation, PreconditionError, ValidationError
from .groupoid import Bisection, FiniteGroupoid, _csr, decompose_into_bisections
from .growth import ball_mask, growth_function, m_parameter
from .measure import banach_upper_density, invariant_measures
from .unitspace import ClopenSet, DyadicRadius, fatten, shrink


@dataclass
class SubequivalenceWitness:
    families: list[list[Bisection]]
    provenance: list[dict] = field(default_factory=list)
    hypothesis_m: int | None = None
    M_D: int | None = None
    steps: int = 0

    @property
    def m(self) -> int:
        """Number of families minus one: the witness certifies ``A ≾_m B``."""
        return len(self.families) - 1

    def bisections(self) -> list[Bisection]:
        return [V for fam in self.families for V in fam]


@dataclass(frozen=True)
class WitnessReport:
    passed: bool
    problems: tuple[str, ...] = ()

    def __bool__(self):
        return self.passed


def verify_witness(G: FiniteGroupoid, A: ClopenSet, B: ClopenSet, W: SubequivalenceWitness) -> WitnessReport:
    problems = []
    covered = G.space.empty()
    for f, fam in enumerate(W.families):
        for i, V in enumerate(fam):
            if V.groupoid is not G:
                raise ValidationError(f"family {f} bisection {i} belongs to another groupoid")
            covered |= V.source_set
            if not V.range_set.issubset(B):
                problems.append(f"family {f} bisection {i}: range {(V.range_set - B).words()} leaves B")
        for i in range(len(fam)):
            for j in range(i + 1, len(fam)):
                clash = fam[i].range_set & fam[j].range_set
                if clash:
                    problems.append(f"family {f}: bisections {i} and {j} share ranges {clash.words()}")
    missed = A - covered
    if missed:
        problems.append(f"A is not covered: {missed.words()}")
    return WitnessReport(not problems, tuple(problems))


# -- the counting hypothesis ------------------------------------------------------


class FiberIndex:
    """CSR tables of ``Dx`` and ``D^{-1}Dx`` for every unit ``x``."""

    def __init__(self, G: FiniteGroupoid, D: Iterable[int]):
        self.G = G
        self.D = np.asarray(sorted({int(a) for a in D}), dtype=np.int64)
        N = G.space.size
        src = G.source[self.D]
        self.dx_ptr, order = _csr(src, N)
        self.dx = self.D[order]
        by_range: dict[int, list[int]] = {}
        for d in self.D.tolist():
            by_range.setdefault(int(G.range[d]), []).append(d)
        inv = G.inverse
        rows: list[list[int]] = []
        for x in range(N):
            row = set()
            for g in self.dx[self.dx_ptr[x] : self.dx_ptr[x + 1]].tolist():
                for d in by_range[int(G.range[g])]:
                    row.add(G._mul(int(inv[d]), g))
            rows.append(sorted(row))
        self.ddx_ptr = np.zeros(N + 1, dtype=np.int64)
        self.ddx_ptr[1:] = np.cumsum([len(r) for r in rows])
        self.ddx = np.asarray([a for r in rows for a in r], dtype=np.int64)

    def count_dx(self, C: ClopenSet) -> np.ndarray:
        """``|{γ in Dx : r(γ) in C}|`` for every ``x``."""
        return kernels.count_marked(self.dx_ptr, self.dx, self.G.range, C.mask())

    def count_ddx(self, C: ClopenSet) -> np.ndarray:
        return kernels.count_marked(self.ddx_ptr, self.ddx, self.G.range, C.mask())

    def dx_of(self, x: int) -> np.ndarray:
        return self.dx[self.dx_ptr[x] : self.dx_ptr[x + 1]]

    def ddx_of(self, x: int) -> np.ndarray:
        return self.ddx[self.ddx_ptr[x] : self.ddx_ptr[x + 1]]


@dataclass(frozen=True)
class HypothesisReport:
    passed: bool
    min_margin: int
    worst_x: int
    lhs: tuple[int, ...]
    rhs: tuple[int, ...]

    def __bool__(self):
        return self.passed


def check_hypothesis(G, A, B, D, m: int, eps: DyadicRadius, index: FiberIndex | None = None) -> HypothesisReport:
    """``|{γ in D^{-1}Dx : r(γ) in A^ε}| < m |{γ in Dx : r(γ) in B^{-ε}}|`` at every unit."""
    index = index or FiberIndex(G, D)
    lhs = index.count_ddx(fatten(A, eps))
    rhs = m * index.count_dx(shrink(B, eps))
    margin = rhs - lhs
    worst = int(np.argmin(margin))
    return HypothesisReport(bool(np.all(margin > 0)), int(margin[worst]), worst, tuple(lhs.tolist()), tuple(rhs.tolist()))


# -- choosing the next radius ---------------------------------------------------------


def _next_radii(j: int) -> tuple[DyadicRadius, DyadicRadius, DyadicRadius]:
    """``(δ, round_up(3δ), round_up(2δ))`` for ``δ = 2^-j``, ``j >= 1``."""
    delta = DyadicRadius.of(j)
    return delta, DyadicRadius.round_up(3 * delta.value), DyadicRadius.round_up(2 * delta.value)


def epsilon_conditions(V: Bisection, A_n: ClopenSet, B_nk: ClopenSet, eps_n: DyadicRadius, j: int) -> bool:
    """Whether ``δ = 2^-j`` satisfies the containments that drive one step."""
    _, r3, r2 = _next_radii(j)
    X = A_n.space.full()
    sV, rV = V.source_set, V.range_set
    image = V.image(A_n & sV)
    grown = fatten(image, r3)
    if not grown.issubset(rV):
        return False
    if not V.preimage(grown).issubset(fatten(A_n, eps_n)):
        return False
    outside = X - B_nk
    E = V.preimage(outside & rV) | (X - sV)
    return V.image(fatten(E, r2) & sV).issubset(fatten(outside, eps_n))


def choose_epsilon(V: Bisection, A_n: ClopenSet, B_nk: ClopenSet, eps_n: DyadicRadius) -> DyadicRadius:
    """Largest ``2^-j < eps_n`` satisfying :func:`epsilon_conditions`.

    Below the resolution of the unit space every fattening is the identity
    and the conditions hold, so the search always ends.
    """
    if eps_n.kind != "dyadic":
        raise ValidationError("eps_n must be a positive dyadic radius")
    floor = max(eps_n.exponent + 1, A_n.space.depth + 2)
    for j in range(eps_n.exponent + 1, floor + 1):
        if epsilon_conditions(V, A_n, B_nk, eps_n, j):
            return DyadicRadius.of(j)
    raise InvariantViolation("no admissible radius at the resolution floor", {"eps_n": eps_n})


# -- the m-comparison run -----------------------------------------------------------------


@dataclass
class ComparisonState:
    step: int
    A: ClopenSet
    B: list[ClopenSet]
    eps: DyadicRadius

    def dump(self) -> dict:
        return {"step": self.step, "A": self.A.words(), "B": [b.words() for b in self.B], "eps_exponent": self.eps.exponent}


def _assert_step_invariant(index: FiberIndex, state: ComparisonState) -> None:
    lhs = index.count_ddx(fatten(state.A, state.eps))
    rhs = sum(index.count_dx(shrink(b, state.eps)) for b in state.B)
    bad = np.flatnonzero(lhs >= rhs)
    if len(bad):
        x = int(bad[0])
        raise InvariantViolation(
            f"step invariant fails at unit {x}: {int(lhs[x])} >= {int(rhs[x])}", state.dump() | {"x": x}
        )


def _assert_injection(index, V, old: ComparisonState, new: ComparisonState, k0: int) -> None:
    """Build ``μ -> γ_V^{-1} μ`` on the lost part of ``Dx`` and check it lands in the lost part of ``D^{-1}Dx``."""
    G = index.G
    lost_B = shrink(old.B[k0], old.eps) - shrink(new.B[k0], new.eps)
    if not lost_B:
        return
    lost_A = fatten(old.A, old.eps) - fatten(new.A, new.eps)
    lost_B_mask, lost_A_mask = lost_B.mask(), lost_A.mask()
    for x in range(G.space.size):
        ddx = set(index.ddx_of(x).tolist())
        image = set()
        domain = [mu for mu in index.dx_of(x).tolist() if lost_B_mask[G.range[mu]]]
        for mu in domain:
            try:
                gamma_V = V.arrow_at_range(int(G.range[mu]))
            except DomainError:
                raise InvariantViolation("injection is not well typed: r(μ) outside r(V)", old.dump() | {"x": x, "mu": mu}) from None
            img = G._mul(G.inv(gamma_V), mu)
            if img not in ddx or not lost_A_mask[G.range[img]]:
                raise InvariantViolation("injection leaves its target set", old.dump() | {"x": x, "mu": mu})
            image.add(img)
        if len(image) != len(domain):
            raise InvariantViolation("injection is not injective", old.dump() | {"x": x})


def run_m_comparison(G, A: ClopenSet, B: ClopenSet, D, m: int, eps: DyadicRadius, index: FiberIndex | None = None) -> SubequivalenceWitness:
    """Build a witness for ``A ≾_{m-1} B`` from the counting hypothesis over ``D``.

    The ``m * M_D`` steps run over the pieces ``V_1 .. V_{M_D}`` of ``D``
    (outer loop) and the families ``1 .. m`` (inner loop).
    """
    index = index or FiberIndex(G, D)
    if m < 1:
        raise PreconditionError("m must be >= 1")
    hyp = check_hypothesis(G, A, B, D, m, eps, index)
    if not hyp.passed:
        raise PreconditionError(f"counting hypothesis fails at unit {hyp.worst_x} (margin {hyp.min_margin})")
    pieces = decompose_into_bisections(G, index.D.tolist())
    families: list[list[Bisection]] = [[] for _ in range(m)]
    state = ComparisonState(1, A, [B] * m, eps)
    log = []
    for v_idx, V in enumerate(pieces):
        for k0 in range(m):
            eps_next = choose_epsilon(V, state.A, state.B[k0], state.eps)
            target = fatten(V.image(state.A & V.source_set), eps_next)
            U = V.preimage(state.B[k0] & target)
            if U:
                families[k0].append(V.restrict(U))
            new_B = list(state.B)
            new_B[k0] = state.B[k0] - V.image(U)
            new = ComparisonState(state.step + 1, state.A - U, new_B, eps_next)
            _assert_step_invariant(index, new)
            _assert_injection(index, V, state, new, k0)
            log.append({"step": state.step, "eps_exponent": eps_next.exponent, "V": v_idx, "k": k0 + 1, "U_size": len(U)})
            state = new
    if state.A:
        raise InvariantViolation("A is not exhausted after m * M_D steps", state.dump())
    W = SubequivalenceWitness(families, log, hypothesis_m=m, M_D=len(pieces), steps=len(log))
    report = verify_witness(G, A, B, W)
    if not report:
        raise InvariantViolation("constructed witness fails verification", {"problems": report.problems})
    return W


# -- the convenience driver ------------------------------------------------------------------


def saturation(G: FiniteGroupoid, B: ClopenSet) -> ClopenSet:
    """``r(G B)``: every point in an orbit meeting ``B``."""
    hit = B.mask()[G.source]
    return ClopenSet.from_indices(G.space, set(G.range[hit].tolist()))


@dataclass(frozen=True)
class AutoResult:
    witness: SubequivalenceWitness
    N: int
    M: int
    m: int
    ord: int
    eps: DyadicRadius


def auto_compare(G: FiniteGroupoid, A: ClopenSet, B: ClopenSet, n_max: int | None = None, ord_=None) -> AutoResult:
    """Escalate the scale ``N`` until ``D = B(M)`` with ``m`` from the growth table satisfies the hypothesis."""
    if not A.issubset(saturation(G, B)):
        raise PreconditionError("A is not contained in r(GB)")
    if not A:
        return AutoResult(SubequivalenceWitness([[]], hypothesis_m=1, M_D=0), 0, 0, 1, 0, DyadicRadius.of(G.space.depth))
    top = int(G.lengths.max())
    n_max = max(n_max or 0, 2 * top + 4)
    profile = growth_function(G, n_max)
    eps = DyadicRadius.of(G.space.depth)
    for N in range(1, top + 2):
        M, m, c = m_parameter(G, profile, N, ord_)
        D = np.flatnonzero(ball_mask(G, M))
        index = FiberIndex(G, D)
        if check_hypothesis(G, A, B, D, m, eps, index).passed:
            return AutoResult(run_m_comparison(G, A, B, D, m, eps, index), N, M, m, c, eps)
    raise PreconditionError("counting hypothesis fails at every scale up to saturation")


# -- exhaustion ----------------------------------------------------------------------------------


def _is_minimal(G: FiniteGroupoid) -> bool:
    return len(saturation(G, ClopenSet.from_indices(G.space, [0]))) == G.space.size


def run_exhaustion_comparison(
    G: FiniteGroupoid,
    A: ClopenSet,
    B: ClopenSet,
    cover: Sequence[Bisection] | None = None,
    m: int = 0,
    D=None,
    eps: DyadicRadius | None = None,
    n_star: int | None = None,
    measures=None,
) -> SubequivalenceWitness:
    """A single-family witness for ``A ≾ B`` on a minimal groupoid with ``sup μ(A) < inf μ(B)``.

    Up to ``m + 1`` reserve arrows from the smallest unit ``x`` into ``B`` are
    set aside first; the rest of ``B`` absorbs ``A`` through the cover.  Any
    leftover of ``A`` is sent to ``{x}`` by :func:`run_m_comparison` and then
    out along the reserve arrows.
    """
    if not A:
        return SubequivalenceWitness([[]], hypothesis_m=0)
    if not _is_minimal(G):
        raise PreconditionError("the groupoid is not minimal (more than one orbit)")
    measures = measures or invariant_measures(G)
    gap = [mu(B) - mu(A) for mu in measures]
    if min(gap) <= 0:
        raise PreconditionError("no measure gap: sup mu(A) >= inf mu(B) over invariant measures")
    cover = list(cover) if cover is not None else decompose_into_bisections(G, range(G.n_arrows))

    # reserve arrows g_0 .. g_m' from x into B with distinct ranges, shortest first
    x = 0
    fiber = sorted(G.source_fiber(x).tolist(), key=lambda a: (int(G.lengths[a]), a))
    reserve: list[int] = []
    used = set()
    for a in fiber:
        y = int(G.range[a])
        if y in B and y not in used:
            reserve.append(a)
            used.add(y)
    m_eff = -1
    for cand in range(min(m, len(reserve) - 1), -1, -1):
        B1 = B - ClopenSet.from_indices(G.space, (int(G.range[a]) for a in reserve[: cand + 1]))
        if all(mu(B1) > mu(A) for mu in measures):
            m_eff = cand
            break
    if m_eff < 0:
        raise PreconditionError("B is too small to set aside a reserve arrow and keep the measure gap")
    reserve = reserve[: m_eff + 1]
    S = [Bisection(G, [a]) for a in reserve]
    U = ClopenSet.from_indices(G.space, [x])
    B_n = B - ClopenSet.from_indices(G.space, (int(G.range[a]) for a in reserve))
    A_n = A
    family: list[Bisection] = []
    log = []
    step = 0
    while A_n:
        changed = False
        for v_idx, V in enumerate(cover):
            if not A_n:
                break
            U_n = V.preimage(B_n & V.image(A_n & V.source_set))
            B_next, A_next = B_n - V.image(U_n), A_n - U_n
            for mu in measures:
                if mu(B_next) - mu(A_next) != mu(B_n) - mu(A_n):
                    raise InvariantViolation("measure gap changed during the exhaustion loop", {"step": step})
            if U_n:
                family.append(V.restrict(U_n))
                changed = True
            log.append({"step": step + 1, "phase": "exhaust", "V": v_idx, "U_size": len(U_n)})
            step += 1
            A_n, B_n = A_next, B_next
        if not changed:
            break

    if A_n:
        n_star = n_star if n_star is not None else int(G.lengths.max())
        inf_U = min(mu(U) for mu in measures)
        if banach_upper_density(G, A_n, n_star) > inf_U:
            raise PreconditionError(f"leftover density exceeds inf mu(U) = {inf_U}; the fallback does not apply")
        D = range(G.n_arrows) if D is None else D
        eps = eps or DyadicRadius.of(G.space.depth)
        inner = run_m_comparison(G, A_n, U, D, m_eff + 1, eps)
        for k, fam in enumerate(inner.families):
            for W in fam:
                family.append(S[k] * W)
        log.append({"step": step + 1, "phase": "fallback", "leftover": len(A_n), "inner_steps": inner.steps})
    W = SubequivalenceWitness([family], log, hypothesis_m=0, steps=len(log))
    report = verify_witness(G, A, B, W)
    if not report:
        raise InvariantViolation("exhaustion witness fails verification", {"problems": report.problems})
    return W
