"""Brute-force reference computations that share no code with the package.

These work directly on words, integers and explicit dictionaries; they are
slow and only meant for desk-scale instances.
"""

from __future__ import annotations

import itertools
from collections import deque
from fractions import Fraction


def words(alphabet: int, depth: int) -> list[str]:
    return ["".join(p) for p in itertools.product("0123456789"[:alphabet], repeat=depth)]


def lcp(a: str, b: str) -> int:
    n = 0
    while n < len(a) and a[n] == b[n]:
        n += 1
    return n


def metric(a: str, b: str) -> Fraction:
    return Fraction(0) if a == b else Fraction(1, 2 ** lcp(a, b))


def dist_to_set(x: str, S) -> Fraction | float:
    return min((metric(x, y) for y in S), default=float("inf"))


def fatten(points: list[str], A: set[str], eps: Fraction) -> set[str]:
    return {x for x in points if dist_to_set(x, A) < eps}


def shrink(points: list[str], A: set[str], eps: Fraction) -> set[str]:
    comp = set(points) - A
    return {x for x in points if dist_to_set(x, comp) > eps}


def cyclic_word_lengths(order: int) -> list[int]:
    """Word lengths in Z/order for the generators +1, -1, by BFS on integers."""
    dist = {0: 0}
    q = deque([0])
    while q:
        g = q.popleft()
        for s in (1, -1):
            h = (g + s) % order
            if h not in dist:
                dist[h] = dist[g] + 1
                q.append(h)
    return [dist[g] for g in range(order)]


def odometer_growth(depth: int, n_max: int) -> list[int]:
    """``sup_x |B(n)x|`` for +1 on binary words, from the raw action (add 1 mod 2^depth)."""
    N = 2**depth
    best = []
    for n in range(n_max + 1):
        sizes = []
        for x in range(N):
            # arrows with source x are (g, x); they are distinct for distinct g in Z/N
            ball = {g for g in range(N) if cyclic_word_lengths(N)[g] <= n}
            sizes.append(len(ball))
        best.append(max(sizes))
    return best


def sub_bisection_defect(pairs: list[tuple[int, int]], weights: list[Fraction]) -> Fraction:
    """Max of ``|mu(s U) - mu(r U)|`` over every subset ``U`` of a bisection given as (s, r) pairs."""
    best = Fraction(0)
    for k in range(len(pairs) + 1):
        for sub in itertools.combinations(pairs, k):
            d = sum((weights[s] - weights[r] for s, r in sub), Fraction(0))
            best = max(best, abs(d))
    return best


def convolve_literal(G, f: dict, g: dict) -> dict:
    """``(f*g)(γ) = Σ_{μ in G_{s(γ)}} f(γ μ^{-1}) g(μ)`` evaluated arrow by arrow."""
    out = {}
    for gamma in range(G.n_arrows):
        x = int(G.source[gamma])
        total = 0
        for mu in range(G.n_arrows):
            if int(G.source[mu]) != x:
                continue
            total += f.get(G.compose(gamma, G.inv(mu)), 0) * g.get(mu, 0)
        if total != 0:
            out[gamma] = total
    return out


def dyadic_round_up(q: Fraction) -> Fraction:
    """Smallest value in {2^-j : j >= 0} ∪ {2} that is >= q."""
    if q > 1:
        return Fraction(2)
    j = 0
    while Fraction(1, 2 ** (j + 1)) >= q:
        j += 1
    return Fraction(1, 2**j)


def radius_search(points: list[str], theta: dict[str, str], A: set[str], B: set[str], eps_exp: int, floor: int) -> int | None:
    """Smallest ``j > eps_exp`` satisfying the three step containments, on explicit word sets.

    ``theta`` maps source words of a bisection to range words.
    """
    X = set(points)
    inv = {v: k for k, v in theta.items()}
    sV, rV = set(theta), set(inv)
    eps_n = Fraction(1, 2**eps_exp)
    A_fat = fatten(points, A, eps_n)
    out = X - B
    out_fat = fatten(points, out, eps_n)
    for j in range(eps_exp + 1, floor + 1):
        d = Fraction(1, 2**j)
        r3, r2 = dyadic_round_up(3 * d), dyadic_round_up(2 * d)
        grown = fatten(points, {theta[a] for a in A & sV}, r3)
        if not grown <= rV:
            continue
        if not {inv[y] for y in grown} <= A_fat:
            continue
        E = {inv[y] for y in out & rV} | (X - sV)
        if {theta[z] for z in fatten(points, E, r2) & sV} <= out_fat:
            return j
    return None


def cyclic_folner(order: int, eps: Fraction, n_max: int = 64) -> tuple[int, Fraction]:
    """Følner index of Z/order with K = {+1, -1}: first n with |K B_n| / |B_n| < 1 + eps."""
    lengths = cyclic_word_lengths(order)
    for n in range(n_max + 1):
        ball = {g for g in range(order) if lengths[g] <= n}
        kb = {(g + s) % order for g in ball for s in (1, -1)}
        ratio = Fraction(len(kb), len(ball))
        if ratio < 1 + eps:
            return n, ratio
    raise ValueError("no index found")


def orbit_ball(perms: list[list[int]], x: int, n: int) -> set[int]:
    """Points reachable from ``x`` in at most ``n`` moves by the permutations or their inverses."""
    inverses = [{p[i]: i for i in range(len(p))} for p in perms]
    seen = {x: 0}
    q = deque([x])
    while q:
        u = q.popleft()
        if seen[u] == n:
            continue
        for p, pi in zip(perms, inverses):
            for v in (p[u], pi[u]):
                if v not in seen:
                    seen[v] = seen[u] + 1
                    q.append(v)
    return set(seen)


def generated_lengths(n_arrows: int, units, compose_from_left, L: list[int]) -> list[int]:
    """Word lengths for the generating set ``L`` by plain BFS from the units.

    ``compose_from_left(l, g)`` returns ``l*g`` or ``None`` when not composable.
    """
    dist = [-1] * n_arrows
    q = deque()
    for u in units:
        dist[u] = 0
        q.append(u)
    while q:
        g = q.popleft()
        for l in L:
            h = compose_from_left(l, g)
            if h is not None and dist[h] < 0:
                dist[h] = dist[g] + 1
                q.append(h)
    return dist
