import itertools
import random
from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from arithmpc import codes
from arithmpc.harness import Session
from arithmpc.pdtshr import (Backend, Ideal, Rho, Sigma, Tau, Wrapped, degree2_share,
                             multiparty_product_share, rho_ot, sigma_ot, tau_ot)
from arithmpc.ring import Abort, parse_ring

RINGS = ["zm:6", "zm:97", "gf:2305843009213693951", "mat:5:2"]


def inputs(o, seed, count=1):
    src = o.spawn(random.Random(f"in:{seed}"))
    return [src.sample() for _ in range(count)], [src.sample() for _ in range(count)]


@pytest.mark.parametrize("spec", RINGS)
@pytest.mark.parametrize("backend", [Ideal(), Rho(), Rho(n=12), Wrapped(Rho(n=12))],
                         ids=["ideal", "rho", "rho-n12", "wrapped"])
def test_rho_family_correct(spec, backend):
    o = parse_ring(spec)
    for seed in range(30):
        (a,), (b,) = inputs(o, seed)
        out = backend(Session(o, seed=seed), a, b)
        assert out.total(o) == o.mul(a, b)


@pytest.mark.parametrize("spec,scheme", [("zm:97", "rand"), ("gf:2305843009213693951", "rand"),
                                         ("zm:6", "ring"), ("zm:97", "ring"), ("zm:6", "slwalk")])
@pytest.mark.parametrize("ot_mode", ["monolithic", "decomposed"])
def test_sigma_correct(spec, scheme, ot_mode):
    o = parse_ring(spec)
    be = Sigma(scheme, k=6, ot_mode=ot_mode)
    for seed in range(20):
        (a,), (b,) = inputs(o, seed)
        assert be(Session(o, seed=seed), a, b).total(o) == o.mul(a, b)


def test_sigma_tau_refuse_matrices():
    o = parse_ring("mat:5:2")
    s = Session(o)
    with pytest.raises(ValueError):
        sigma_ot(s, o.one(), o.one(), scheme="ring")
    with pytest.raises(ValueError):
        Tau()(s, o.one(), o.one())


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 4))
def test_tau_correct(seed, t):
    o = parse_ring("gf:2305843009213693951")
    a, b = inputs(o, seed, t)
    out = tau_ot(Session(o, seed=seed), a, b, k=8, c=8)
    assert out.totals(o) == [o.mul(x, y) for x, y in zip(a, b)]


def test_tau_batch_pads_and_discards():
    o = parse_ring("gf:1009")
    be = Tau(k=8, c=8, t=4)
    a, b = inputs(o, 1, 6)
    outs = be.batch(Session(o, seed=1), a, b)
    assert len(outs) == 6
    assert [x.total(o) for x in outs] == [o.mul(x, y) for x, y in zip(a, b)]


def test_tau_needs_large_field():
    o = parse_ring("zm:6")
    with pytest.raises(ValueError):
        tau_ot(Session(o), [o.one()], [o.one()])


def test_tau_strict_honest_and_cheating():
    o = parse_ring("gf:1009")
    for seed in range(10):
        a, b = inputs(o, seed, 4)
        out = tau_ot(Session(o, seed=seed), a, b, strict=True, check_points=20)
        assert out.totals(o) == [o.mul(x, y) for x, y in zip(a, b)]
        with pytest.raises(Abort) as e:
            tau_ot(Session(o, seed=seed), a, b, strict=True, cheat="high_degree")
        assert e.value.stage == "tau:degree"


def test_tau_communication():
    o = parse_ring("gf:2305843009213693951")
    s = Session(o)
    a, b = inputs(o, 0, 4)
    tau_ot(s, a, b, k=8, c=8)
    st_ = s.stats()
    # n = ck = 64 noisy coordinates, 2k-1 = 15 fetched by OT
    assert st_.elements_transmitted == 64
    assert st_.ot_elements == 64
    assert (st_.elements_transmitted + st_.ot_elements) / 4 == 32


def test_rho_communication_and_n_default():
    o = parse_ring("zm:6")
    s = Session(o)
    rho_ot(s, o.one(), o.one())
    st_ = s.stats()
    n = o.id.bit_length + 40
    assert st_.elements_transmitted == 2 * n
    assert st_.ot_invocations == n and st_.rounds == 2


@pytest.mark.parametrize("inner", [Rho(n=10), Sigma("rand", k=4), Tau(k=4, c=8, t=1)],
                         ids=["rho", "sigma", "tau"])
def test_wrap_adds_two_elements(inner):
    o = parse_ring("gf:1009")
    s1, s2 = Session(o, seed=3), Session(o, seed=3)
    inner(s1, o.one(), o.one())
    out = Wrapped(inner)(s2, o.from_int(5), o.from_int(6))
    assert out.total(o) == o.from_int(30)
    a, b = s1.stats(), s2.stats()
    assert b.elements_transmitted == a.elements_transmitted + 2
    assert b.ot_elements == a.ot_elements and b.code_elements == a.code_elements
    assert b.rounds == a.rounds + 1


@pytest.mark.parametrize("fixed", [(0, 0), (3, 5)])
def test_share_uniformity(fixed):
    o = parse_ring("zm:6")
    a, b = o.from_int(fixed[0]), o.from_int(fixed[1])
    counts = Counter()
    for seed in range(10_000):
        counts[o.decode(rho_ot(Session(o, seed=seed), a, b, n=6).zA)] += 1
    chi = sum((counts[x] - 10_000 / 6) ** 2 / (10_000 / 6) for x in range(6))
    assert chi < 20.52


def _rho_message_exact(n):
    """Exact law of Bob's pairs over Z_2 (enumerates sigma, u and the unused halves)."""
    law = {}
    for b in (0, 1):
        counts = Counter()
        for sigma in itertools.product((0, 1), repeat=n):
            for u in itertools.product((0, 1), repeat=n - 1):
                full = u + ((b - sum(u)) % 2,)
                for other in itertools.product((0, 1), repeat=n):
                    v0 = tuple(o if s else f for f, o, s in zip(full, other, sigma))
                    v1 = tuple(f if s else o for f, o, s in zip(full, other, sigma))
                    counts[v0 + v1] += 1
        law[b] = counts
    return law


def test_rho_message_hiding_at_bruteforce_scale():
    o = parse_ring("zm:2")
    n = 5
    bound = codes.stat_distance_bruteforce(o, n, o.zero())
    assert bound == codes.stat_distance_bruteforce(o, n, o.one())
    law = _rho_message_exact(n)
    total = 2**n * 2 ** (2 * n - 1)
    cells = 2 ** (2 * n)
    for b in (0, 1):
        d = sum(abs(Fraction(law[b].get(c, 0), total) - Fraction(1, cells))
                for c in itertools.product((0, 1), repeat=2 * n)) / 2
        assert d <= bound
    # the protocol's actual message follows that law: chi-square at n = 2
    law2 = _rho_message_exact(2)[1]
    seen = Counter()
    trials = 16_000
    for seed in range(trials):
        s = Session(o, seed=seed)
        rho_ot(s, o.one(), o.one(), n=2)
        pairs = s["A"].memory[((), "recv:1:ring_elems")]
        seen[tuple(o.decode(p[0]) for p in pairs) + tuple(o.decode(p[1]) for p in pairs)] += 1
    tot2 = sum(law2.values())
    chi = sum((seen[c] - trials * law2[c] / tot2) ** 2 / (trials * law2[c] / tot2) for c in law2)
    assert set(seen) <= set(law2)
    assert chi < 37.70


@pytest.mark.parametrize("spec", ["zm:11", "mat:5:2", "gf:1009"])
def test_degree2(spec):
    o = parse_ring(spec)
    for seed in range(30):
        xs, ys = inputs(o, seed, 2)
        cA, cB = degree2_share(Session(o, seed=seed), xs[0], ys[0], xs[1], ys[1], Rho(n=10))
        assert o.add(cA, cB) == o.mul(o.add(xs[0], xs[1]), o.add(ys[0], ys[1]))


class CountingRho(Backend):
    def __init__(self):
        self.calls = 0
        self.inner = Rho(n=8)

    def __call__(self, session, a, b, *, alice="A", bob="B"):
        self.calls += 1
        return self.inner(session, a, b, alice=alice, bob=bob)


@pytest.mark.parametrize("m", [2, 3, 4])
@pytest.mark.parametrize("spec", ["zm:11", "mat:5:2"])
def test_multiparty(m, spec):
    o = parse_ring(spec)
    names = [f"P{i}" for i in range(m)]
    for seed in range(25):
        be = CountingRho()
        xs, ys = inputs(o, seed, m)
        cs = multiparty_product_share(Session(o, names, seed=seed), xs, ys, be)
        tot = cs[0]
        for c in cs[1:]:
            tot = o.add(tot, c)
        sx, sy = xs[0], ys[0]
        for x, y in zip(xs[1:], ys[1:]):
            sx, sy = o.add(sx, x), o.add(sy, y)
        assert tot == o.mul(sx, sy)
        assert be.calls == m * (m - 1)


def test_multiparty_m2_matches_degree2_contract():
    o = parse_ring("zm:11")
    xs, ys = inputs(o, 4, 2)
    cs = multiparty_product_share(Session(o, seed=4), xs, ys, Rho(n=8))
    cA, cB = degree2_share(Session(o, seed=4), xs[0], ys[0], xs[1], ys[1], Rho(n=8))
    assert o.add(*cs) == o.add(cA, cB)
