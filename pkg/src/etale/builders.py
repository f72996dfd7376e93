"""Groupoid constructors and the JSON spec format.

Two spec kinds are understood::

    {"kind": "transformation", "alphabet": 2, "depth": 3, "mode": "full",
     "generators": {"a": {"add": 1}}}

    {"kind": "bratteli", "edges": [[[2]], [[2]], [[2]]], "depth": 3}

A transformation generator is one of ``{"add": c}`` (base-``alphabet``
addition mod ``alphabet**depth``, most significant symbol first),
``{"permutation": [image words in word order]}``, ``{"map": {word: word}}``
(partial), ``{"pairs": [[source_prefix, target_prefix], ...]}`` (prefix
rewriting, partial when the source cylinders do not cover the space) or
``{"identity": true}``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ResourceError, SpecError
from .groupoid import MAX_ARROWS, FiniteGroupoid, check_axioms, relation_groupoid
from .unitspace import _DIGITS, UnitSpace


@dataclass(frozen=True)
class PartialMap:
    name: str
    images: tuple[int, ...]  # -1 where undefined

    @property
    def total(self) -> bool:
        return all(y >= 0 for y in self.images)

    def inverse_images(self) -> tuple[int, ...]:
        out = [-1] * len(self.images)
        for x, y in enumerate(self.images):
            if y >= 0:
                out[y] = x
        return tuple(out)


@dataclass(frozen=True)
class TransformationSpec:
    space: UnitSpace
    generators: tuple[PartialMap, ...]
    mode: str = "full"


@dataclass(frozen=True)
class BratteliSpec:
    edges: tuple[tuple[tuple[int, ...], ...], ...]
    depth: int


def _fail(path: str, msg: str):
    raise SpecError(f"{path}: {msg}")


def _partial_map(space: UnitSpace, name: str, body: Any, path: str) -> PartialMap:
    n = space.size
    if not isinstance(body, dict) or len(body) != 1:
        _fail(path, "generator must be an object with exactly one of add/permutation/map/pairs/identity")
    (form, value), = body.items()
    images = [-1] * n
    if form == "identity":
        images = list(range(n))
    elif form == "add":
        if space.admissible is not None:
            _fail(path, "'add' needs the full word space")
        if not isinstance(value, int):
            _fail(path, "'add' expects an integer")
        images = [(x + value) % n for x in range(n)]
    elif form == "permutation":
        if not isinstance(value, list) or len(value) != n:
            _fail(path, f"'permutation' expects a list of {n} image words")
        images = [_word(space, w, path) for w in value]
    elif form == "map":
        if not isinstance(value, dict):
            _fail(path, "'map' expects an object word -> word")
        for w, v in value.items():
            images[_word(space, w, path)] = _word(space, v, path)
    elif form == "pairs":
        if not isinstance(value, list):
            _fail(path, "'pairs' expects a list of [source_prefix, target_prefix]")
        prefixes = []
        for i, pair in enumerate(value):
            if not (isinstance(pair, list) and len(pair) == 2 and all(isinstance(p, str) for p in pair)):
                _fail(f"{path}.pairs[{i}]", "expected [source_prefix, target_prefix]")
            p, q = pair
            if len(p) != len(q) or len(p) > space.depth:
                _fail(f"{path}.pairs[{i}]", "prefixes must have equal length <= depth")
            for p2, _ in prefixes:
                if p.startswith(p2) or p2.startswith(p):
                    _fail(f"{path}.pairs[{i}]", f"source cylinders [{p}] and [{p2}] overlap")
            prefixes.append((p, q))
        for x, w in enumerate(space.words):
            for p, q in prefixes:
                if w.startswith(p):
                    images[x] = _word(space, q + w[len(p) :], path)
    else:
        _fail(path, f"unknown generator form {form!r}")
    seen = set()
    for y in images:
        if y >= 0:
            if y in seen:
                _fail(path, "generator is not injective")
            seen.add(y)
    return PartialMap(name, tuple(images))


def _word(space: UnitSpace, w: Any, path: str) -> int:
    if not isinstance(w, str) or w not in space._index:
        _fail(path, f"{w!r} is not a point of the unit space")
    return space._index[w]


def parse_spec(doc: dict, depth: int | None = None) -> TransformationSpec | BratteliSpec:
    """Validate a spec document; ``depth`` overrides the declared truncation depth."""
    if not isinstance(doc, dict):
        _fail("$", "spec must be a JSON object")
    kind = doc.get("kind")
    if kind == "transformation":
        for key in ("alphabet", "depth", "generators"):
            if key not in doc:
                _fail("$", f"missing field {key!r}")
        d = depth if depth is not None else doc["depth"]
        if not isinstance(doc["alphabet"], int) or not isinstance(d, int):
            _fail("$", "alphabet and depth must be integers")
        try:
            space = UnitSpace(doc["alphabet"], d)
        except SpecError as exc:
            _fail("$", str(exc))
        mode = doc.get("mode", "full")
        if mode not in ("full", "principal"):
            _fail("$.mode", "must be 'full' or 'principal'")
        gens = doc["generators"]
        if not isinstance(gens, dict):
            _fail("$.generators", "must be an object name -> generator")
        maps = tuple(_partial_map(space, name, gens[name], f"$.generators.{name}") for name in sorted(gens))
        return TransformationSpec(space, maps, mode)
    if kind == "bratteli":
        d = depth if depth is not None else doc.get("depth")
        if "matrix" in doc:
            if not isinstance(d, int):
                _fail("$.depth", "stationary diagrams need an integer depth")
            matrix = doc["matrix"]
            if not isinstance(matrix, list) or not matrix or not isinstance(matrix[0], list):
                _fail("$.matrix", "must be a square matrix")
            # a single root vertex feeds every vertex of level 1 once
            head = [matrix] if len(matrix) == 1 else [[[1] * len(matrix[0])]]
            edges = head + [matrix] * (d - 1)
        elif "edges" in doc:
            edges = doc["edges"]
            if d is None:
                d = len(edges)
        else:
            _fail("$", "bratteli spec needs 'edges' or 'matrix'")
        if not isinstance(edges, list) or not isinstance(d, int):
            _fail("$.edges", "must be a list of matrices")
        if not 1 <= d <= len(edges):
            _fail("$.depth", f"truncation depth {d} not in [1, {len(edges)}]")
        mats = []
        for i, M in enumerate(edges):
            ok = isinstance(M, list) and M and all(isinstance(r, list) and r for r in M)
            if not ok or any(not isinstance(v, int) or v < 0 for r in M for v in r):
                _fail(f"$.edges[{i}]", "must be a nonempty matrix of nonnegative integers")
            if len({len(r) for r in M}) != 1:
                _fail(f"$.edges[{i}]", "ragged matrix")
            mats.append(tuple(tuple(r) for r in M))
        if "sizes" in doc:
            sizes = [1] + [len(M[0]) for M in mats]
            if list(doc["sizes"])[: len(sizes)] != sizes[: len(doc["sizes"])]:
                _fail("$.sizes", f"declared level sizes do not match the matrices ({sizes})")
        return BratteliSpec(tuple(mats), d)
    _fail("$.kind", f"expected 'transformation' or 'bratteli', got {kind!r}")


def load_spec(path: str | Path, depth: int | None = None) -> TransformationSpec | BratteliSpec:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return parse_spec(doc, depth)


def build(spec, check: bool = True, max_arrows: int = MAX_ARROWS) -> FiniteGroupoid:
    if isinstance(spec, TransformationSpec):
        G = from_transformation_action(spec, spec.mode, max_arrows=max_arrows)
    elif isinstance(spec, BratteliSpec):
        G = from_bratteli(spec, max_arrows=max_arrows)
    else:
        raise SpecError(f"not a groupoid spec: {spec!r}")
    if check:
        check_axioms(G)
    return G


# -- transformation groupoids -----------------------------------------------


def _generator_sequence(spec: TransformationSpec):
    """Generators in name order, each followed by its inverse."""
    out = []
    for g in spec.generators:
        out.append((g.name, g.images))
        out.append((g.name + "'", g.inverse_images()))
    return out


def from_transformation_action(spec: TransformationSpec, mode: str = "full", max_arrows: int = MAX_ARROWS) -> FiniteGroupoid:
    if mode == "full":
        return _full_transformation(spec, max_arrows)
    if mode == "principal":
        return _principal_transformation(spec, max_arrows)
    raise SpecError(f"unknown mode {mode!r}")


def _full_transformation(spec: TransformationSpec, max_arrows: int) -> FiniteGroupoid:
    space = spec.space
    N = space.size
    for g in spec.generators:
        if not g.total:
            raise SpecError(f"generator {g.name!r} is partial; full mode needs permutations (use principal mode)")
    gens = [np.asarray(img, dtype=np.int64) for _, img in _generator_sequence(spec)]
    identity = np.arange(N, dtype=np.int64)
    elements = [identity]
    index = {identity.tobytes(): 0}
    queue = deque([0])
    while queue:
        g = elements[queue.popleft()]
        for s in gens:
            h = s[g]
            key = h.tobytes()
            if key not in index:
                index[key] = len(elements)
                elements.append(h)
                queue.append(index[key])
                if len(elements) * N > max_arrows:
                    raise ResourceError(f"generated group exceeds {max_arrows // N} elements")
    P = np.stack(elements)
    order = len(elements)
    inv_el = np.array([index[np.argsort(p).astype(np.int64).tobytes()] for p in P], dtype=np.int64)
    cache: dict[tuple[int, int], int] = {}

    def mult(ga, gb):
        key = (ga, gb)
        r = cache.get(key)
        if r is None:
            r = cache[key] = index[P[ga][P[gb]].tobytes()]
        return r

    def mul(a, b):
        return mult(a // N, b // N) * N + b % N

    ids = np.arange(order * N, dtype=np.int64)
    g_of, x_of = ids // N, ids % N
    rng = P[g_of, x_of]
    inverse = inv_el[g_of] * N + rng
    K = []
    for s in gens:
        e = index[s.tobytes()]
        if e != 0:
            K.extend(range(e * N, (e + 1) * N))
    meta = {"group_order": order, "permutations": P, "generator_names": [g.name for g in spec.generators]}
    return FiniteGroupoid(space, x_of, rng, inverse, g_of.tolist(), np.arange(N), mul, K, kind="transformation/full", meta=meta)


def _orbits(N: int, edges) -> list[int]:
    """Union-find roots (smallest member) for the graph with the given edges."""
    parent = list(range(N))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for x, y in edges:
        a, b = find(x), find(y)
        if a != b:
            parent[max(a, b)] = min(a, b)
    return [find(x) for x in range(N)]


def _principal_transformation(spec: TransformationSpec, max_arrows: int) -> FiniteGroupoid:
    space = spec.space
    N = space.size
    seq = _generator_sequence(spec)
    root = _orbits(N, [(x, y) for _, img in seq for x, y in enumerate(img) if y >= 0])
    classes: dict[int, list[int]] = {}
    for x, r in enumerate(root):
        classes.setdefault(r, []).append(x)
    n_arrows = sum(len(c) ** 2 for c in classes.values())
    if n_arrows > max_arrows:
        raise ResourceError(f"orbit relation has {n_arrows} arrows, cap {max_arrows}")
    pairs = [(x, y) for c in classes.values() for x in c for y in c]
    # label (x -> y) by the shortlex-first generator word carrying x to y
    labels = {}
    for x in range(N):
        labels[(x, x)] = "e"
        seen = {x: ()}
        queue = deque([x])
        while queue:
            u = queue.popleft()
            for name, img in seq:
                v = img[u]
                if v >= 0 and v not in seen:
                    seen[v] = seen[u] + (name,)
                    labels[(x, v)] = ".".join(reversed(seen[v]))
                    queue.append(v)
    gen_pairs = [(x, y) for _, img in seq for x, y in enumerate(img) if y >= 0 and x != y]
    return relation_groupoid(space, pairs, gen_pairs, labels, kind="transformation/principal")


# -- AF groupoids -------------------------------------------------------------


def from_bratteli(spec: BratteliSpec, max_arrows: int = MAX_ARROWS) -> FiniteGroupoid:
    """Tail equivalence on root-to-level-``depth`` paths.

    Points are paths written as words of local edge choices.  Generators are
    the pairs of distinct cofinal paths whose differences lie in a window of
    ``w`` consecutive levels, for the least ``w`` that generates.
    """
    mats = spec.edges[: spec.depth]
    if len(mats[0]) != 1:
        raise SpecError("edges[0]: the root level has exactly one vertex")
    for i in range(1, len(mats)):
        if len(mats[i]) != len(mats[i - 1][0]):
            raise SpecError(f"edges[{i}]: {len(mats[i])} rows but level {i} has {len(mats[i - 1][0])} vertices")
    for i, M in enumerate(mats):
        cols = len(M[0])
        for t in range(cols):
            if all(M[v][t] == 0 for v in range(len(M))):
                raise SpecError(f"edges[{i}]: vertex {t} at level {i + 1} has no incoming edge (disconnected level)")
        if i + 1 < len(mats):
            for v in range(len(M[0])):
                if all(x == 0 for x in mats[i + 1][v]):
                    raise SpecError(f"edges[{i + 1}]: vertex {v} at level {i + 1} has no outgoing edge")
    alphabet = max(2, max(sum(row) for M in mats for row in M))
    if alphabet > len(_DIGITS):
        raise SpecError(f"out-degree {alphabet} exceeds {len(_DIGITS)} symbols")
    # (word, vertex, edge ids)
    paths = [("", 0, ())]
    for level, M in enumerate(mats):
        nxt = []
        for word, v, edges in paths:
            sym = 0
            for t, mult in enumerate(M[v]):
                for _ in range(mult):
                    nxt.append((word + _DIGITS[sym], t, edges + ((level, v, sym),)))
                    sym += 1
        paths = nxt
        if len(paths) > max_arrows:
            raise ResourceError(f"{len(paths)} paths exceeds cap")
    paths.sort()
    words = tuple(p[0] for p in paths)
    full = len(words) == alphabet**spec.depth
    space = UnitSpace(alphabet, spec.depth, None if full else words)
    terminal = [p[1] for p in paths]
    edges = [p[2] for p in paths]
    tails: dict[int, list[int]] = {}
    for x, v in enumerate(terminal):
        tails.setdefault(v, []).append(x)
    if sum(len(c) ** 2 for c in tails.values()) > max_arrows:
        raise ResourceError("tail-equivalence relation exceeds the arrow cap")
    pairs = [(q, p) for c in tails.values() for q in c for p in c]

    def diff_levels(q, p):
        return [i for i in range(spec.depth) if edges[q][i] != edges[p][i]]

    labels = {}
    diffs = {}
    for q, p in pairs:
        d = diff_levels(q, p)
        diffs[(q, p)] = d
        k = d[-1] + 1 if d else 0
        labels[(q, p)] = (words[q][:k], words[p][:k])
    classes_target = sorted(sorted(c) for c in tails.values())
    window, gen_pairs = None, []
    for w in range(1, spec.depth + 1):
        gen_pairs = [(q, p) for (q, p), d in diffs.items() if d and d[-1] - d[0] < w]
        root = _orbits(len(words), gen_pairs)
        got: dict[int, list[int]] = {}
        for x, r in enumerate(root):
            got.setdefault(r, []).append(x)
        if sorted(sorted(c) for c in got.values()) == classes_target:
            window = w
            break
    meta = {"generator_window": window, "terminal_vertex": terminal}
    return relation_groupoid(space, pairs, gen_pairs, labels, kind="bratteli", meta=meta)


# -- small named instances ----------------------------------------------------


def odometer_spec(depth: int, alphabet: int = 2, mode: str = "full") -> TransformationSpec:
    space = UnitSpace(alphabet, depth)
    return TransformationSpec(space, (_partial_map(space, "a", {"add": 1}, "odometer"),), mode)


def odometer(depth: int, alphabet: int = 2, mode: str = "full") -> FiniteGroupoid:
    return from_transformation_action(odometer_spec(depth, alphabet, mode), mode)


def stationary_bratteli(matrix, depth: int) -> FiniteGroupoid:
    return from_bratteli(parse_spec({"kind": "bratteli", "matrix": matrix, "depth": depth}))


def pair_groupoid(space: UnitSpace) -> FiniteGroupoid:
    """Full equivalence relation on ``space``; every off-diagonal arrow generates."""
    N = space.size
    pairs = [(x, y) for x in range(N) for y in range(N)]
    return relation_groupoid(space, pairs, [(x, y) for x, y in pairs if x != y], kind="pair")


def single_point() -> UnitSpace:
    return UnitSpace(2, 1, ("0",))


def group_bundle(order: int, space: UnitSpace | None = None) -> FiniteGroupoid:
    """``Z/order`` sitting over every point, generated by +1 and -1."""
    space = space or single_point()
    N = space.size
    ids = np.arange(order * N)
    g_of, x_of = ids // N, ids % N

    def mul(a, b):
        return ((a // N + b // N) % order) * N + b % N

    inverse = ((-g_of) % order) * N + x_of
    K = [] if order == 1 else sorted({1 * N + x for x in range(N)} | {((order - 1) % order) * N + x for x in range(N)})
    return FiniteGroupoid(space, x_of, x_of, inverse, g_of.tolist(), np.arange(N), mul, K, kind=f"bundle Z/{order}")
