"""The convolution *-algebra of a finite groupoid.

Functions are sparse maps ``arrow id -> value``.  Values may be ``int``,
``Fraction`` or ``complex``; algebra operations stay exact for the first two.
Only the operator norm uses floating point.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .errors import NumericError, UsageError, ValidationError
from .groupoid import FiniteGroupoid


def _conj(v):
    return v.conjugate() if isinstance(v, complex) else v


class GroupoidFunction:
    __slots__ = ("groupoid", "values")

    def __init__(self, groupoid: FiniteGroupoid, values: Mapping[int, object] | None = None):
        self.groupoid = groupoid
        self.values = {int(a): v for a, v in (values or {}).items() if v != 0}
        if any(not 0 <= a < groupoid.n_arrows for a in self.values):
            raise ValidationError("function is supported outside the groupoid")

    @classmethod
    def delta(cls, G: FiniteGroupoid, a: int, value=1) -> GroupoidFunction:
        return cls(G, {a: value})

    @classmethod
    def indicator(cls, G: FiniteGroupoid, arrows: Iterable[int]) -> GroupoidFunction:
        return cls(G, {int(a): 1 for a in arrows})

    @classmethod
    def units(cls, G: FiniteGroupoid) -> GroupoidFunction:
        return cls.indicator(G, G.units.tolist())

    @classmethod
    def ones(cls, G: FiniteGroupoid) -> GroupoidFunction:
        return cls.indicator(G, range(G.n_arrows))

    def __getitem__(self, a: int):
        return self.values.get(int(a), 0)

    def __eq__(self, other):
        return isinstance(other, GroupoidFunction) and other.groupoid is self.groupoid and other.values == self.values

    def __repr__(self):
        return f"GroupoidFunction({dict(sorted(self.values.items()))})"

    def _same(self, other: GroupoidFunction):
        if other.groupoid is not self.groupoid:
            raise UsageError("functions live on different groupoids")

    def __add__(self, other: GroupoidFunction) -> GroupoidFunction:
        self._same(other)
        out = dict(self.values)
        for a, v in other.values.items():
            out[a] = out.get(a, 0) + v
        return GroupoidFunction(self.groupoid, out)

    def scale(self, c) -> GroupoidFunction:
        return GroupoidFunction(self.groupoid, {a: c * v for a, v in self.values.items()})

    def __mul__(self, other: GroupoidFunction) -> GroupoidFunction:
        return convolve(self, other)

    @property
    def star(self) -> GroupoidFunction:
        return involution(self)


def convolve(f: GroupoidFunction, g: GroupoidFunction) -> GroupoidFunction:
    """``(f*g)(γ) = Σ_{μ in G_{s(γ)}} f(γμ^{-1}) g(μ)``, summed over composable support pairs."""
    f._same(g)
    G = f.groupoid
    by_range: dict[int, list[int]] = {}
    for b in g.values:
        by_range.setdefault(int(G.range[b]), []).append(b)
    out: dict[int, object] = {}
    for a, fa in f.values.items():
        for b in by_range.get(int(G.source[a]), ()):
            c = G._mul(a, b)
            out[c] = out.get(c, 0) + fa * g.values[b]
    return GroupoidFunction(G, out)


def involution(f: GroupoidFunction) -> GroupoidFunction:
    G = f.groupoid
    return GroupoidFunction(G, {G.inv(a): _conj(v) for a, v in f.values.items()})


def i_norm(f: GroupoidFunction):
    """Largest ℓ¹ mass of ``f`` on a source fiber or a range fiber."""
    G = f.groupoid
    by_source: dict[int, object] = {}
    by_range: dict[int, object] = {}
    for a, v in f.values.items():
        s, r = int(G.source[a]), int(G.range[a])
        by_source[s] = by_source.get(s, 0) + abs(v)
        by_range[r] = by_range.get(r, 0) + abs(v)
    return max([0, *by_source.values(), *by_range.values()])


def regular_representation(f: GroupoidFunction, x: int) -> tuple[list[int], list[list]]:
    """``λ_x(f)`` on ``ℓ²(G_x)``: rows and columns indexed by ``G_x``, entry ``(γ, μ) = f(γμ^{-1})``."""
    G = f.groupoid
    basis = G.source_fiber(x).tolist()
    inv = [G.inv(m) for m in basis]
    matrix = [[f[G._mul(g, mi)] for mi in inv] for g in basis]
    return basis, matrix


def _to_numpy(matrix) -> np.ndarray:
    return np.array([[complex(v) for v in row] for row in matrix], dtype=complex)


def operator_norm(matrix, tol: float = 1e-10, max_iter: int = 100000) -> float:
    """Spectral norm via power iteration on ``A^† A`` from a fixed start vector."""
    A = matrix if isinstance(matrix, np.ndarray) else _to_numpy(matrix)
    n = A.shape[1]
    if n == 0 or not np.any(A):
        return 0.0
    H = A.conj().T @ A
    v = np.ones(n, dtype=complex) + 1e-3 * np.arange(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(max_iter):
        w = H @ v
        new = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        residual = np.linalg.norm(w - new * v)
        # a small residual pins the Rayleigh quotient to an eigenvalue; a frozen quotient means rounding noise
        if residual <= tol * nw or (it > 0 and abs(new - lam) <= 1e-15 * abs(new)):
            return float(np.sqrt(max(new, 0.0)))
        v = w / nw
        lam = new
    raise NumericError(f"power iteration did not converge in {max_iter} steps", {"last": lam, "size": n})


def reduced_norm(f: GroupoidFunction, tol: float = 1e-10, max_iter: int = 100000) -> float:
    """``sup_x ||λ_x(f)||``."""
    if tol <= 0:
        raise ValidationError("tolerance must be > 0")
    G = f.groupoid
    return max(operator_norm(regular_representation(f, x)[1], tol, max_iter) for x in range(G.space.size))


def random_function(G: FiniteGroupoid, rng: np.random.Generator, density: float = 0.3, bound: int = 5, complex_values: bool = False) -> GroupoidFunction:
    """A sparse function with small rational (or Gaussian-rational) values."""
    vals = {}
    for a in range(G.n_arrows):
        if rng.random() < density:
            re = Fraction(int(rng.integers(-bound, bound + 1)), int(rng.integers(1, bound + 1)))
            if complex_values:
                vals[a] = complex(re, int(rng.integers(-bound, bound + 1)))
            else:
                vals[a] = re
    return GroupoidFunction(G, vals)
