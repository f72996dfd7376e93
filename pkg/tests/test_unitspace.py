from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from etale.errors import ResourceError, UsageError, ValidationError
from etale.unitspace import ClopenSet, DyadicRadius, UnitSpace, distance_to_set, fatten, shrink

S3 = UnitSpace(2, 3)


def radii(depth):
    return [DyadicRadius.ZERO, DyadicRadius.ONE_PLUS] + [DyadicRadius.of(j) for j in range(depth + 3)]


def test_metric_examples():
    assert S3.metric("000", "000") == 0
    assert S3.metric("000", "001") == Fraction(1, 4)
    assert S3.metric("000", "100") == 1


def test_fatten_examples():
    half = DyadicRadius.of(1)
    assert fatten(ClopenSet.from_words(S3, ["000"]), half).words() == ["000", "001"]
    assert fatten(S3.cylinder("0"), half) == S3.cylinder("0")
    assert fatten(S3.cylinder("01"), DyadicRadius.ONE_PLUS) == S3.full()
    assert fatten(S3.empty(), DyadicRadius.of(0)) == S3.empty()


def test_shrink_examples():
    quarter = DyadicRadius.of(2)
    assert shrink(S3.cylinder("0"), quarter) == S3.cylinder("0")
    assert shrink(ClopenSet.from_words(S3, ["000"]), quarter) == S3.empty()
    assert shrink(S3.full(), DyadicRadius.of(1)) == S3.full()


def test_set_algebra_examples():
    assert ~S3.cylinder("0") == S3.cylinder("1")
    assert S3.cylinder("00") | S3.cylinder("01") == S3.cylinder("0")
    assert len(S3.cylinder("0")) == 4
    assert S3.cylinder("0") - S3.cylinder("00") == S3.cylinder("01")


def test_mismatched_spaces():
    other = UnitSpace(2, 4)
    with pytest.raises(UsageError):
        S3.full() | other.full()


def test_caps_and_validation():
    with pytest.raises(ResourceError):
        UnitSpace(2, 40)
    with pytest.raises(ValidationError):
        UnitSpace(1, 3)
    with pytest.raises(ValidationError):
        S3.index("0000")


def test_ultrametric_exhaustive_depth4():
    S = UnitSpace(2, 4)
    W = S.words
    for x in W:
        for y in W:
            dxy = S.metric(x, y)
            assert dxy == S.metric(y, x)
            assert (dxy == 0) == (x == y)
            for z in W:
                assert S.metric(x, z) <= max(dxy, S.metric(y, z))


def test_metric_agrees_with_oracle_ternary():
    S = UnitSpace(3, 3)
    for x in S.words:
        for y in S.words:
            assert S.metric(x, y) == oracles.metric(x, y)


@given(st.integers(0, 2**16 - 1), st.sampled_from([(2, 4), (3, 2), (2, 3)]))
def test_fatten_shrink_match_brute_force(bits, shape):
    S = UnitSpace(*shape)
    A = ClopenSet(S, bits & S.full().bits)
    pts = list(S.words)
    members = set(A.words())
    for eps in radii(S.depth):
        assert set(fatten(A, eps).words()) == oracles.fatten(pts, members, eps.value)
        assert set(shrink(A, eps).words()) == oracles.shrink(pts, members, eps.value)


@given(st.integers(0, 2**16 - 1))
def test_duality_and_monotonicity(bits):
    S = UnitSpace(2, 4)
    A = ClopenSet(S, bits)
    rs = sorted(radii(S.depth))
    for eps in rs:
        # complement of the fattening is {d(x, A) >= eps}
        far = {x for x in range(S.size) if distance_to_set(S, x, A) >= eps.value}
        assert set(~fatten(A, eps)) == far
        near_comp = {x for x in range(S.size) if distance_to_set(S, x, ~A) <= eps.value}
        assert shrink(A, eps) == ~ClopenSet.from_indices(S, near_comp)
        assert shrink(A, eps).issubset(A)
        if A and eps.value > 0:
            assert A.issubset(fatten(A, eps))
    for a, b in zip(rs, rs[1:]):
        assert fatten(A, a).issubset(fatten(A, b))
        assert shrink(A, b).issubset(shrink(A, a))


@given(st.integers(0, 2**16 - 1), st.integers(4, 8))
def test_resolution_floor_is_identity(bits, j):
    A = ClopenSet(UnitSpace(2, 4), bits)
    assert fatten(A, DyadicRadius.of(j)) == A
    assert shrink(A, DyadicRadius.of(j)) == A


def test_round_up():
    assert DyadicRadius.round_up(Fraction(3, 8)) == DyadicRadius.of(1)
    assert DyadicRadius.round_up(Fraction(1, 4)) == DyadicRadius.of(2)
    assert DyadicRadius.round_up(Fraction(3, 2)) == DyadicRadius.ONE_PLUS
    assert DyadicRadius.round_up(Fraction(0)) == DyadicRadius.ZERO


def test_mask_roundtrip():
    A = ClopenSet.from_words(S3, ["001", "110"])
    assert ClopenSet.from_mask(S3, A.mask()) == A
    assert "001" in A and "000" not in A
