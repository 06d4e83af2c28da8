import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annostream.field import (
    FieldContext,
    FieldElement,
    FieldError,
    SchemeKind,
    decode_element,
    encode_element,
    field_window,
    find_prime,
    is_prime,
    make_rng,
)

F389 = FieldContext(389, SchemeKind.TRIANGLES, 4)
BIG = FieldContext(find_prime(2**61), SchemeKind.TRIANGLES, 2)


def test_trial_division_oracle():
    small = [x for x in range(60) if is_prime(x)]
    assert small == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]


@pytest.mark.parametrize("lower,expected", [(2, 2), (10, 11), (384, 389)])
def test_find_prime_examples(lower, expected):
    assert find_prime(lower) == expected


def test_find_prime_rejects_bad_bounds():
    with pytest.raises(FieldError):
        find_prime(1)
    with pytest.raises(FieldError):
        find_prime(2**62)


@given(st.integers(min_value=2, max_value=10**7))
@settings(max_examples=200)
def test_find_prime_is_least_prime_above(lower):
    p = find_prime(lower)
    assert p >= lower and is_prime(p)
    assert not any(is_prime(x) for x in range(lower, p))


def test_large_prime_passes_fermat_and_no_small_factor():
    p = BIG.p
    assert p > 2**61
    assert all(pow(a, p - 1, p) == 1 for a in range(2, 60))
    assert all(p % q for q in range(2, 100_000))


@pytest.mark.parametrize("kind", list(SchemeKind))
@pytest.mark.parametrize("n,B", [(4, 1), (10, 2), (20, 3), (50, 1)])
def test_for_scheme_lands_in_window(kind, n, B):
    ctx = FieldContext.for_scheme(kind, n, B)
    lo, hi = field_window(kind, n, B)
    assert lo <= ctx.p <= hi
    assert ctx.in_window()


def test_window_bounds():
    assert field_window(SchemeKind.TRIANGLES, 4, 1)[0] == 384
    assert field_window(SchemeKind.FOURCYCLES, 2, 1)[0] == 12 * 16
    # B-aware lower bound dominates 2n^3 for small n and large B
    assert field_window(SchemeKind.MATCHING, 3, 5)[0] == 4 * 5 * 9 + 1
    assert field_window(SchemeKind.MATCHING, 12, 1)[0] == 2 * 12**3


def test_context_rejects_composites():
    with pytest.raises(FieldError):
        FieldContext(391, SchemeKind.TRIANGLES, 4)


def test_arithmetic_examples():
    f = F389
    assert f.mul(2, 195) == 1
    assert f.add(388, 5) == 4
    assert f.inv(1) == 1
    assert f.inv(2) == 195
    with pytest.raises(ZeroDivisionError):
        f.inv(0)


def test_pow_fermat_exhaustive_small_field():
    f = F389
    assert all(f.pow(a, f.p - 1) == 1 for a in range(1, f.p))


triples = st.tuples(*[st.integers(min_value=0, max_value=BIG.p - 1)] * 3)


@given(triples)
def test_field_axioms(t):
    f = BIG
    a, b, c = t
    assert f.add(a, f.neg(a)) == 0
    assert f.add(f.add(a, b), c) == f.add(a, f.add(b, c))
    assert f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))
    assert f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))
    assert f.sub(a, b) == f.add(a, f.neg(b))
    if a:
        assert f.mul(a, f.inv(a)) == 1


@given(st.integers(min_value=0, max_value=388), st.integers(min_value=0, max_value=388))
def test_element_wrapper_matches_raw_ops(a, b):
    x, y = F389.element(a), F389.element(b)
    assert (x + y).value == F389.add(a, b)
    assert (x * y).value == F389.mul(a, b)
    assert (x - y).value == F389.sub(a, b)
    assert (-x).value == F389.neg(a)


def test_element_rejects_mixed_and_noncanonical():
    other = FieldContext(find_prime(1000), SchemeKind.TRIANGLES, 5)
    with pytest.raises(ValueError):
        F389.element(1) + other.element(1)
    with pytest.raises(ValueError):
        FieldElement(F389, 389)


def test_to_signed_is_centered():
    assert F389.to_signed(388) == -1
    assert F389.to_signed(194) == 194
    assert F389.to_signed(195) == -194


@given(st.integers(min_value=0, max_value=BIG.p - 1))
def test_element_codec_roundtrip(v):
    assert decode_element(encode_element(v), BIG.p) == v
    assert BIG.element(v).to_bytes() == encode_element(v)


def test_decode_rejects_noncanonical():
    with pytest.raises(ValueError):
        decode_element(encode_element(389), 389)
    with pytest.raises(ValueError):
        decode_element(b"\x00" * 7, 389)


def test_context_codec_roundtrip():
    for ctx in (F389, BIG, FieldContext.for_scheme(SchemeKind.MATCHING, 12, 2)):
        assert FieldContext.from_bytes(ctx.to_bytes()) == ctx


def test_sampling_is_deterministic_per_seed():
    a = [F389.sample(make_rng(17)) for _ in range(3)]
    b = [F389.sample(make_rng(17)) for _ in range(3)]
    assert a == b
    rng1, rng2 = make_rng(5), make_rng(5)
    assert [F389.sample(rng1) for _ in range(50)] == [F389.sample(rng2) for _ in range(50)]


def test_sampling_uniform_chi_square():
    rng = make_rng(2024)
    draws = np.array([F389.sample(rng) for _ in range(100_000)])
    assert draws.max() < F389.p and draws.min() >= 0
    counts = np.bincount(draws, minlength=F389.p)
    expected = len(draws) / F389.p
    sigma = np.sqrt(expected * (1 - 1 / F389.p))
    assert np.all(np.abs(counts - expected) <= 5 * sigma)
    chi2 = ((counts - expected) ** 2 / expected).sum()
    dof = F389.p - 1
    assert abs(chi2 - dof) < 6 * np.sqrt(2 * dof)


def test_sampling_never_reaches_p_over_a_million_draws():
    # a prime just above a power of two makes rejection frequent
    ctx = FieldContext(257, SchemeKind.TRIANGLES, 3)
    rng = make_rng(1)
    assert max(ctx.sample(rng) for _ in range(1_000_000)) < ctx.p
