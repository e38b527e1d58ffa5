import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from arithmpc import linalg as la
from arithmpc.ring import (Bottom, is_probable_prime, is_unit_fraction_estimate, make_matrix_family,
                           make_prime_field, make_zm_family, parse_ring)


def chi_square(counts, expected):
    return sum((c - expected) ** 2 / expected for c in counts)


# chi-square critical values at p = 0.001 for df = 1..15
CHI2_999 = [10.83, 13.82, 16.27, 18.47, 20.52, 22.46, 24.32, 26.12, 27.88, 29.59, 31.26, 32.91,
            34.53, 36.12, 37.70]


def naive_matmul(a, b, m, d):
    return tuple(sum(a[i * d + k] * b[k * d + j] for k in range(d)) % m
                 for i in range(d) for j in range(d))


@pytest.mark.parametrize("spec", ["zm:2", "zm:4", "zm:6", "zm:7", "mat:2:2", "mat:3:2"])
def test_ring_axioms_exhaustive(spec):
    o = parse_ring(spec)
    els = o.elements()
    assert len(els) <= 256
    for a, b in itertools.product(els, repeat=2):
        assert o.add(a, b) == o.add(b, a)
        assert o.add(o.sub(a, b), b) == a
    sub = els[:16] if len(els) > 16 else els
    for a, b, c in itertools.product(sub, repeat=3):
        assert o.add(o.add(a, b), c) == o.add(a, o.add(b, c))
        assert o.mul(o.mul(a, b), c) == o.mul(a, o.mul(b, c))
        assert o.mul(a, o.add(b, c)) == o.add(o.mul(a, b), o.mul(a, c))
        assert o.mul(o.add(a, b), c) == o.add(o.mul(a, c), o.mul(b, c))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["zm:1000003", "gf:2305843009213693951", "mat:97:3"]))
def test_ring_axioms_random(seed, spec):
    o = parse_ring(spec, seed=seed)
    a, b, c = o.sample(), o.sample(), o.sample()
    assert o.add(o.add(a, b), c) == o.add(a, o.add(b, c))
    assert o.mul(o.mul(a, b), c) == o.mul(a, o.mul(b, c))
    assert o.mul(a, o.add(b, c)) == o.add(o.mul(a, b), o.mul(a, c))
    assert o.add(o.sub(a, b), b) == a
    one = o.one()
    assert o.mul(one, a) == a == o.mul(a, one)


def test_zm_examples():
    o = make_zm_family(6)
    assert o.decode(o.mul(o.from_int(2), o.from_int(3))) == 0
    assert o.invert(o.from_int(2)) is None
    assert o.decode(o.invert(o.from_int(5))) == 5
    with pytest.raises(ValueError):
        make_zm_family(1)


def test_strict_bottom_raises():
    o = make_zm_family(6).spawn(strict=True)
    with pytest.raises(Bottom):
        o.invert(o.from_int(3))
    with pytest.raises(Bottom):
        o.add(b"\xff", o.one())
    with o.lenient():
        assert o.add(b"\xff", o.one()) is None


def test_prime_field():
    o = make_prime_field(97)
    assert o.is_field and o.kind == "prime_field" and o.id.id == "gf:97"
    for x in o.elements()[1:]:
        assert o.mul(x, o.invert(x)) == o.one()
    with pytest.raises(ValueError):
        make_prime_field(91)


def test_matrix_family():
    o = make_matrix_family(5, 2)
    ident = o.one()
    for _ in range(50):
        x, y = o.sample(), o.sample()
        assert o.mul(ident, x) == x
        assert o.decode(o.mul(x, y)) == naive_matmul(o.decode(x), o.decode(y), 5, 2)
    assert not o.commutative
    with pytest.raises(ValueError):
        make_matrix_family(5, 0)
    # dim 1 behaves like Z_m
    m1, z = make_matrix_family(7, 1), make_zm_family(7)
    for a, b in itertools.product(range(7), repeat=2):
        assert m1.decode(m1.mul(m1.from_int(a), m1.from_int(b)))[0] == \
            z.decode(z.mul(z.from_int(a), z.from_int(b)))


def test_unit_fraction():
    assert is_unit_fraction_estimate(make_zm_family(4)) == Fraction(1, 2)
    assert is_unit_fraction_estimate(make_matrix_family(2, 2)) == Fraction(6, 16)
    assert is_unit_fraction_estimate(make_prime_field(101), 200) >= Fraction(190, 200)


def test_labels_canonical_and_mutation_deterministic():
    for spec in ["zm:6", "zm:300", "mat:5:2"]:
        o = parse_ring(spec)
        for _ in range(100):
            x = o.sample()
            assert o.encode(o.decode(x)) == x
            mutated = bytes([x[0] ^ 0x80]) + x[1:]
            assert o.valid(mutated) == o.valid(mutated)
            if not o.valid(mutated):
                with o.lenient():
                    assert o.add(mutated, x) is None


def test_permuted_labels_isomorphic():
    std = parse_ring("zm:11")
    perm = parse_ring("zm:11", labels="permuted", label_key=3)
    assert perm.elements() != std.elements()
    for a, b in itertools.product(range(11), repeat=2):
        got = perm.decode(perm.mul(perm.from_int(a), perm.from_int(b)))
        assert got == std.decode(std.mul(std.from_int(a), std.from_int(b)))


@pytest.mark.parametrize("m", [2, 5, 16])
def test_sample_uniform(m):
    o = make_zm_family(m, seed=m)
    counts = [0] * m
    draws = 100_000
    for _ in range(draws):
        counts[o.decode(o.sample())] += 1
    assert chi_square(counts, draws / m) < CHI2_999[m - 2]


def test_counter_matches_calls():
    o = make_zm_family(97).spawn(random.Random(0))
    calls = 0
    for _ in range(40):
        a = o.sample()
        b = o.sample()
        o.add(a, b)
        o.mul(a, b)
        calls += 4
    o.zero()  # one + subtract
    calls += 2
    o.neg(o.one())  # one + two subtracts
    calls += 3
    assert o.counter.oracle_calls == calls
    assert sum(o.counter.by_command.values()) == calls


def test_is_probable_prime():
    assert [n for n in range(60) if is_probable_prime(n)] == \
        [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59]
    assert is_probable_prime(2**61 - 1)
    assert not is_probable_prime(561)


def test_bad_specs():
    for spec in ["zm", "zm:x", "gf:10", "mat:5", "foo:3"]:
        with pytest.raises(ValueError):
            parse_ring(spec)


# --- linalg -----------------------------------------------------------------

def test_invert_matrix_roundtrip():
    o = parse_ring("gf:101", seed=4)
    for _ in range(10):
        m = la.random_matrix(o, 5, 5)
        inv = la.invert_matrix(o, m)
        if inv is None:
            continue
        assert la.matmul(o, m, inv) == la.identity(o, 5)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 8))
def test_interpolation_reproduces_polynomial(seed, deg):
    o = parse_ring("gf:1009", seed=seed)
    coeffs = la.random_vector(o, deg + 1)
    pts = la.distinct_points(o, 2 * deg + 3)
    src, dst = pts[:deg + 1], pts[deg + 1:]
    vals = [la.poly_eval(o, coeffs, x) for x in src]
    mat = la.interpolation_matrix(o, src, dst)
    assert la.matvec(o, mat, vals) == [la.poly_eval(o, coeffs, x) for x in dst]
