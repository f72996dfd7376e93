"""Acceptance suite: one test per criterion, each reported as a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -v``; the lines appear in the
"acceptance criteria" section of the terminal summary (and inline with ``-s``).
"""

import functools
import json
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

import oracles
from acceptance_log import record
from etale import builders
from etale.cli import main
from etale.comparison import (
    FiberIndex,
    auto_compare,
    check_hypothesis,
    run_exhaustion_comparison,
    run_m_comparison,
    verify_witness,
)
from etale.convolution import GroupoidFunction, i_norm, operator_norm, random_function, reduced_norm, regular_representation
from etale.errors import SearchExhausted, SpecError
from etale.groupoid import check_axioms, generated_subgroupoid
from etale.growth import (
    ball_mask,
    ball_source,
    check_source_surjection,
    compare_length_functions,
    estimate_ord,
    find_doubling_scale,
    folner_index,
    growth_function,
    boundary_ratio,
    profile_from_table,
)
from etale.measure import (
    banach_upper_density,
    displacement,
    extend_density_by_zero,
    fiber_normalized_ball,
    invariant_measures,
    verify_density_certificate,
)
from etale.unitspace import ClopenSet, DyadicRadius, UnitSpace

SPECS = Path(__file__).resolve().parent.parent / "specs"


def criterion(number, title):
    """Record the outcome of the wrapped test under ``number`` and print it."""

    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            t0 = time.perf_counter()
            try:
                detail = fn(*args, **kwargs) or ""
            except BaseException as exc:
                print(record(number, title, False, f"{type(exc).__name__}: {exc}"[:200]))
                raise
            print(record(number, title, True, f"{detail}, {time.perf_counter() - t0:.2f}s".lstrip(", ")))

        return run

    return wrap


# -- random instances -------------------------------------------------------------------


def random_permutation_instance(rng, depth=None):
    """A principal transformation groupoid from one or two random permutations."""
    depth = depth or int(rng.integers(2, 5))
    S = UnitSpace(2, depth)
    perms = [rng.permutation(S.size).tolist() for _ in range(int(rng.integers(1, 3)))]
    gens = {f"p{i}": {"permutation": [S.word(v) for v in p]} for i, p in enumerate(perms)}
    doc = {"kind": "transformation", "alphabet": 2, "depth": depth, "mode": "principal", "generators": gens}
    return builders.build(builders.parse_spec(doc)), perms


def cyclic_instance(rng):
    """Full-mode action of ``+c`` on a small word space."""
    alphabet, depth = [(2, 2), (2, 3), (2, 4), (3, 2)][int(rng.integers(4))]
    size = alphabet**depth
    c = int(rng.integers(1, size))
    doc = {"kind": "transformation", "alphabet": alphabet, "depth": depth, "mode": "full", "generators": {"a": {"add": c}}}
    perms = [[(x + c) % size for x in range(size)]]
    return builders.build(builders.parse_spec(doc)), perms


def random_bratteli(rng):
    while True:
        k = int(rng.integers(1, 3))
        matrix = rng.integers(0, 3, size=(k, k)).tolist()
        try:
            return builders.stationary_bratteli(matrix, int(rng.integers(1, 4 if k == 2 else 5)))
        except SpecError:
            continue


def comparison_instances():
    out = []
    for d in (2, 3, 4):
        out += [builders.odometer(d), builders.odometer(d, mode="principal")]
    out += [builders.stationary_bratteli([[2]], 3), builders.stationary_bratteli([[1, 1], [1, 0]], 4)]
    return out


# -- 1 -------------------------------------------------------------------------------------


@criterion(1, "groupoid axioms hold exhaustively on all bundled instances")
def test_c01_axioms():
    t0 = time.perf_counter()
    inst = []
    for d in (2, 3, 4):
        inst += [builders.odometer(d), builders.odometer(d, mode="principal")]
    for d in (1, 2, 3):
        inst += [builders.stationary_bratteli([[2]], d), builders.stationary_bratteli([[1, 1], [1, 0]], d)]
    inst += [builders.pair_groupoid(UnitSpace(2, d)) for d in (1, 2, 3)]
    inst += [builders.group_bundle(k) for k in range(1, 9)]
    inst += [builders.group_bundle(3, UnitSpace(2, 2))]
    for G in inst:
        assert check_axioms(G)["exhaustive"]
    elapsed = time.perf_counter() - t0
    assert elapsed < 10
    return f"{len(inst)} instances"


# -- 2 -------------------------------------------------------------------------------------


@criterion(2, "growth table of the depth-3 odometer is exact; AF growth saturates with slope <= 1.2")
def test_c02_growth():
    G = builders.odometer(3)
    table = list(growth_function(G, 12).table)
    assert table == oracles.odometer_growth(3, 12)
    assert table[:5] == [1, 3, 5, 7, 8] and set(table[4:]) == {8}
    slopes = []
    for matrix, depth in (([[2]], 3), ([[2]], 4), ([[1, 1], [1, 0]], 4), ([[3]], 2)):
        p = growth_function(builders.stationary_bratteli(matrix, depth), 16)
        assert p.saturation_n is not None
        s = estimate_ord(p).slope
        assert s <= 1.2
        slopes.append(round(s, 3))
    return f"AF slopes {slopes}"


# -- 3 -------------------------------------------------------------------------------------


@criterion(3, "orbital balls are dominated by Cayley balls; the source map is onto")
def test_c03_orbital():
    rng = np.random.default_rng(3)
    checks = 0
    for i in range(200):
        G, perms = random_permutation_instance(rng) if i % 2 == 0 else cyclic_instance(rng)
        for x in range(G.space.size):
            for n in range(7):
                rep = check_source_surjection(G, x, n)
                ref = oracles.orbit_ball(perms, x, n)
                image = set(G.range[ball_source(G, x, n)].tolist())
                assert rep.surjective and image == ref
                assert rep.orbital == len(ref) <= rep.cayley == len(ball_source(G, x, n))
                checks += 1
    return f"{checks} (x, n) checks on 200 instances"


# -- 4 -------------------------------------------------------------------------------------


def _lengths_for(G, L):
    def left(l, g):
        return G.compose(l, g) if G.source[l] == G.range[g] else None

    return np.array(oracles.generated_lengths(G.n_arrows, G.units.tolist(), left, L))


@criterion(4, "ell <= M_L ell_L pointwise and the ball inclusions hold for random L")
def test_c04_length_comparison():
    rng = np.random.default_rng(4)
    bundled = comparison_instances() + [builders.pair_groupoid(UnitSpace(2, 2))]
    trials = 0
    for G in bundled:
        non_units = np.setdiff1d(np.arange(G.n_arrows), G.units)
        for _ in range(10):
            extra = rng.choice(non_units, size=min(len(non_units), int(rng.integers(1, 6))), replace=False)
            base = list(G.generators) if rng.random() < 0.5 else list(G.products(G.generators, G.generators) | set(G.generators))
            L = sorted(({int(a) for a in extra} | {int(G.inv(a)) for a in extra} | set(base)) - set(G.units.tolist()))
            ell, ell_L = G.lengths, _lengths_for(G, L)
            assert np.all(ell_L >= 0)
            rep = compare_length_functions(G, ell, L, r_max=4)
            M_L = max(int(ell[a]) for a in L)
            assert rep.M_L == M_L and rep.passed
            assert np.all(ell <= M_L * ell_L)
            for r in range(5):
                assert np.all(ell[ell_L <= r] <= M_L * r)
            trials += 1
    return f"{trials} random generating sets"


# -- 5 -------------------------------------------------------------------------------------


@criterion(5, "doubling scale satisfies its inequality; M = N on 2n+1 with ord 1")
def test_c05_doubling():
    lin = profile_from_table([2 * n + 1 for n in range(40)])
    for N in range(1, 9):
        assert find_doubling_scale(lin, N, 1) == N
    rng = np.random.default_rng(5)
    found = 0
    for _ in range(500):
        table = [1] + np.cumsum(rng.integers(1, 40, size=int(rng.integers(4, 30)))).tolist()
        N = int(rng.integers(0, 6))
        ord_ = Fraction(int(rng.integers(0, 9)), int(rng.integers(1, 4)))
        try:
            M = find_doubling_scale(profile_from_table(table), N, ord_)
        except SearchExhausted:
            continue
        lhs = Fraction(table[2 * M] - table[M], table[M])
        assert M >= N and (lhs <= 0 or lhs**ord_.denominator <= 2**ord_.numerator)
        found += 1
    return f"{found} random tables post-verified"


# -- 6 -------------------------------------------------------------------------------------


@criterion(6, "Banach upper density of [0] is within rho(n) of its invariant measure")
def test_c06_sandwich():
    G = builders.odometer(3)
    (mu,) = invariant_measures(G)
    assert all(w == Fraction(1, 8) for w in mu.weights)
    A = G.space.cylinder("0")
    assert mu(A) == Fraction(1, 2)
    for n in range(9):
        assert abs(banach_upper_density(G, A, n) - mu(A)) <= boundary_ratio(G, n)
    assert boundary_ratio(G, 4) == 0 and banach_upper_density(G, A, 4) == Fraction(1, 2)
    return "n = 0..8"


# -- 7 -------------------------------------------------------------------------------------


@criterion(7, "Følner index of the depth-3 odometer at eps = 0.2 is 3 with ratio 8/7")
def test_c07_folner():
    G = builders.odometer(3)
    got = folner_index(G, 0.2)
    assert got == (3, Fraction(8, 7)) == oracles.cyclic_folner(8, Fraction(1, 5))
    return f"index {got[0]}, ratio {got[1]}"


# -- 8 -------------------------------------------------------------------------------------


@criterion(8, "fiber-normalized balls are density certificates; extension by zero is exact")
def test_c08_density():
    bundled = comparison_instances() + [builders.pair_groupoid(UnitSpace(2, 2)), builders.group_bundle(4)]
    for G in bundled:
        for n in range(6):
            g = fiber_normalized_ball(G, n)
            rep = verify_density_certificate(G, [g], G.generators, 1)
            assert rep.sums_bounded and rep.deficit == 0
    for d in (2, 3, 4):
        G = builders.odometer(d)
        for n in range(2 ** (d - 1)):
            g = fiber_normalized_ball(G, n)
            assert max(displacement(G, g, k) for k in G.generators) <= Fraction(2, 2 * n + 1)
    G = builders.odometer(3)
    plus2 = [a for a in range(G.n_arrows) if int(G.meta["permutations"][G.labels[a]][0]) == 2]
    H = generated_subgroupoid(G, plus2)
    for n in range(3):
        gH = fiber_normalized_ball(H, n)
        f = {int(H.meta["parent_ids"][a]): v for a, v in gH.items()}
        extend_density_by_zero(G, H, f)
    return f"{len(bundled)} instances"


# -- 9 -------------------------------------------------------------------------------------


@criterion(9, "run_m_comparison is sound on 500 random trials")
def test_c09_comparison_soundness():
    rng = np.random.default_rng(9)
    fixed = comparison_instances()
    t0 = time.perf_counter()
    done = attempts = total_steps = 0
    while done < 500:
        attempts += 1
        pick = rng.random()
        if pick < 0.6:
            G = fixed[int(rng.integers(len(fixed)))]
        elif pick < 0.75:
            G = random_permutation_instance(rng)[0]
        elif pick < 0.9:
            G = cyclic_instance(rng)[0]
        else:
            G = random_bratteli(rng)
        N = G.space.size
        B = ClopenSet(G.space, int(rng.integers(1, 2**N)))
        A = ClopenSet(G.space, int(rng.integers(0, 2**N)))
        if rng.random() < 0.7:
            A = A - B
        r = int(rng.integers(0, int(G.lengths.max()) + 1))
        D = np.flatnonzero(ball_mask(G, r))
        eps = DyadicRadius.of(int(rng.integers(1, G.space.depth + 2)))
        index = FiberIndex(G, D)
        cap = int(np.diff(index.ddx_ptr).max()) + 1
        m = next((k for k in range(1, cap + 1) if check_hypothesis(G, A, B, D, k, eps, index).passed), None)
        if m is None:
            continue
        W = run_m_comparison(G, A, B, D, m, eps, index)
        assert W.steps == m * W.M_D
        assert len(W.families) == m
        assert verify_witness(G, A, B, W)
        covered = G.space.empty()
        for V in W.bisections():
            covered |= V.source_set
        assert A.issubset(covered)
        done += 1
        total_steps += W.steps
    elapsed = time.perf_counter() - t0
    assert elapsed < 300
    return f"{done} trials from {attempts} draws, {total_steps} steps"


# -- 10 ------------------------------------------------------------------------------------


@criterion(10, "auto_compare then exhaustion give verified witnesses on the depth-3 odometer")
def test_c10_pipeline():
    G = builders.odometer(3)
    A, B = G.space.cylinder("00"), G.space.cylinder("1")
    res = auto_compare(G, A, B)
    assert verify_witness(G, A, B, res.witness) and res.witness.steps == res.m * res.witness.M_D
    # the exhaustion loop raises if the measure gap ever changes
    W = run_exhaustion_comparison(G, A, B, m=res.m)
    assert W.m == 0 and verify_witness(G, A, B, W)
    (mu,) = invariant_measures(G)
    assert mu(B) - mu(A) == Fraction(1, 4)
    return f"auto m={res.m} M={res.M} steps={res.witness.steps}; exhaustion {len(W.families[0])} bisections"


# -- 11 ------------------------------------------------------------------------------------


def _matmul(X, Y):
    return [[sum((X[i][k] * Y[k][j] for k in range(len(Y))), Fraction(0)) for j in range(len(Y[0]))] for i in range(len(X))]


@criterion(11, "convolution algebra identities are exact; reduced norms are within 1e-9")
def test_c11_algebra():
    rng = np.random.default_rng(11)
    inst = comparison_instances()[:4] + [builders.pair_groupoid(UnitSpace(2, 2)), builders.group_bundle(4)]
    for G in inst:
        for _ in range(5):
            f, g, h = (random_function(G, rng) for _ in range(3))
            assert (f * g) * h == f * (g * h)
            assert i_norm(f * g) <= i_norm(f) * i_norm(g)
            assert (f * g).star == g.star * f.star
            for x in range(G.space.size):
                Lf, Lg, Lfg = (regular_representation(u, x)[1] for u in (f, g, f * g))
                assert _matmul(Lf, Lg) == Lfg
                assert regular_representation(f.star, x)[1] == [list(col) for col in zip(*Lf)]
    pair = builders.pair_groupoid(UnitSpace(2, 1))
    assert abs(reduced_norm(GroupoidFunction.ones(pair)) - 2) <= 1e-9
    worst = 0.0
    for i in range(200):
        G = inst[i % len(inst)]
        f = random_function(G, rng, complex_values=bool(i % 2))
        bound = float(i_norm(f))
        for x in range(G.space.size):
            M = np.array(regular_representation(f, x)[1], dtype=complex)
            nx = operator_norm(M)
            assert abs(nx - np.linalg.norm(M, 2)) <= 1e-9 * max(1.0, nx)
            assert nx <= bound + 1e-9
            worst = max(worst, nx - bound)
    return f"max(norm - I-norm) = {worst:.3g}"


# -- 12 ------------------------------------------------------------------------------------


def _run_cli(argv, capsys):
    rc = main(argv)
    return rc, capsys.readouterr().out


@criterion(12, "CLI outputs are byte-identical across runs; tampered witnesses are rejected")
def test_c12_reproducibility(tmp_path, capsys):
    spec = str(SPECS / "odometer3.json")
    commands = [
        ["build"],
        ["growth", "--nmax", "8"],
        ["orbital", "--nmax", "4"],
        ["folner", "--ratio", "1/5"],
        ["density", "--ratio", "1/2", "--nmax", "4"],
        ["measure-check", "--A", "[0]"],
        ["compare", "--A", "[00]", "--B", "[1]", "--auto"],
        ["compare", "--A", "[00]", "--B", "[1]", "--exhaustion"],
        ["norms"],
    ]
    for i, cmd in enumerate(commands):
        snapshots = []
        for k in range(2):
            d = tmp_path / f"{i}-{k}"
            rc, out = _run_cli([*cmd, "--spec", spec, "--out", str(d)], capsys)
            assert rc == 0
            snapshots.append((out.replace(str(d), "OUT"), {p.name: p.read_bytes() for p in sorted(d.iterdir())}))
        assert snapshots[0] == snapshots[1]
    witness = tmp_path / "6-0" / "witness.json"
    assert _run_cli(["verify", "--spec", spec, "--witness", str(witness)], capsys)[0] == 0
    doc = json.loads(witness.read_text())
    tampers = {
        "shrunk B": lambda d: d.update(B=d["B"][:1]),
        "dropped family": lambda d: d.update(families=d["families"][1:]),
        "extra A": lambda d: d.update(A=sorted(set(d["A"]) | {"111"})),
        "digest": lambda d: d.update(groupoid_digest="0" * 16),
    }
    for name, edit in tampers.items():
        bad = json.loads(json.dumps(doc))
        edit(bad)
        path = tmp_path / f"tampered-{name.replace(' ', '_')}.json"
        path.write_text(json.dumps(bad))
        rc, _ = _run_cli(["verify", "--spec", spec, "--witness", str(path)], capsys)
        assert rc != 0, name
    return f"{len(commands)} commands, {len(tampers)} tampered witnesses"
