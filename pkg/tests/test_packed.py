import itertools
import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from arithmpc import linalg as la
from arithmpc import packed
from arithmpc.circuit import eval_plain, parse_circuit, random_layered_circuit
from arithmpc.harness import Session
from arithmpc.packed import (PackedParams, PairSpace, PolySpace, ReplicationPattern, ZeroSpace,
                             consistent, deliver_output, packed_reconstruct, packed_share,
                             prove_membership, run_outer_protocol, verify_replication)
from arithmpc.ring import Abort, parse_ring


def servers(n):
    return [f"S{j}" for j in range(1, n + 1)]


def session(o, n, seed=0):
    return Session(o, ("A", "B", *servers(n)), seed=seed)


@pytest.fixture
def p97():
    return PackedParams(parse_ring("gf:97", seed=1), 16, 4, 5)


def test_params_validation():
    o = parse_ring("gf:97")
    with pytest.raises(ValueError):
        PackedParams(o, 8, 2, 4)        # 2 delta >= n
    with pytest.raises(ValueError):
        PackedParams(o, 8, 5, 3)        # delta < ell - 1
    with pytest.raises(ValueError):
        PackedParams(parse_ring("zm:96"), 8, 2, 3)
    with pytest.raises(ValueError):
        PackedParams(parse_ring("gf:5"), 8, 2, 3)
    assert PackedParams(o, 16).t == PackedParams(o, 16).delta - 4 + 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32), st.integers(3, 5))
def test_share_reconstruct_any_subset(seed, degree):
    o = parse_ring("gf:97", seed=seed)
    p = PackedParams(o, 16, 4, 5)
    block = la.random_vector(o, 4)
    sv = packed_share(p, block, degree)
    subset = random.Random(seed).sample(range(16), degree + 1)
    assert packed_reconstruct(p, sv.shares, degree, subset=subset) == block
    assert packed_reconstruct(p, sv) == block


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32))
def test_linearity(seed):
    o = parse_ring("gf:97", seed=seed)
    p = PackedParams(o, 16, 4, 5)
    x, y = la.random_vector(o, 4), la.random_vector(o, 4)
    sx, sy = packed_share(p, x, 5), packed_share(p, y, 5)
    tot = packed.block_add(o, sx, sy)
    assert consistent(p, tot.shares, 5)
    assert packed_reconstruct(p, tot) == la.vadd(o, x, y)
    prod = packed.block_mul_local(o, sx, sy)
    assert prod.degree == 10
    assert packed_reconstruct(p, prod) == [o.mul(a, b) for a, b in zip(x, y)]


def test_single_corruption_detected(p97):
    o = p97.o
    for seed in range(200):
        block = la.random_vector(o, 4)
        sh = packed_share(p97, block, 5).shares
        j = seed % 16
        with pytest.raises(Abort):
            deliver_output(p97, sh, tamper={j: o.from_int(1 + seed % 96)})


def test_privacy_enumeration_gf11():
    o = parse_ring("gf:11")
    p = PackedParams(o, 8, 2, 3)
    assert p.t == 2
    els = o.elements()
    share_mat = p.share_matrix(3)
    for i, j in itertools.combinations(range(8), 2):
        laws = set()
        for block in [(els[0], els[0]), (els[1], els[5]), (els[7], els[3])]:
            law = Counter()
            for rand in itertools.product(els, repeat=2):
                sh = la.matvec(o, share_mat, list(block) + list(rand))
                law[(sh[i], sh[j])] += 1
            laws.add(frozenset(law.items()))
        assert len(laws) == 1


def test_spaces(p97):
    o = p97.o
    for space in (PolySpace(p97, 5), ZeroSpace(p97, 10), PairSpace(p97, 5, 10, 1, 3)):
        for _ in range(5):
            assert space.contains(o, space.sample(o))
    bad = [(x,) for x in packed_share(p97, [o.one()] * 4, 5).shares]
    assert not ZeroSpace(p97, 5).contains(o, bad)
    assert not PolySpace(p97, 4).contains(o, bad)


def membership_run(p, seed, vec, space, coin="public"):
    s = session(p.o, p.n, seed)
    prove_membership(s, p, "A", space, [vec], servers=servers(p.n), distribute=True,
                     coin=coin, challenger="B")


def test_membership_honest_and_violated(p97):
    o = p97.o
    space = PolySpace(p97, 5)
    for seed in range(100):
        good = [(x,) for x in packed_share(p97, la.random_vector(o, 4), 5).shares]
        membership_run(p97, seed, good, space, coin="public" if seed % 2 else "client")
    rejected = 0
    for seed in range(500):
        bad = [(x,) for x in packed_share(p97, la.random_vector(o, 4), 6).shares]
        try:
            membership_run(p97, seed, bad, space)
        except Abort as e:
            assert e.stage == "membership:not-in-space"
            rejected += 1
    assert rejected / 500 >= 1 - 2 / 97


def test_membership_corrupt_delivery_complaint(p97):
    o = p97.o
    s = session(o, 16)
    good = [(x,) for x in packed_share(p97, la.random_vector(o, 4), 5).shares]
    with pytest.raises(Abort) as e:
        prove_membership(s, p97, "A", PolySpace(p97, 5), [good], servers=servers(16),
                         distribute=True, corrupt_delivery={3: o.one()})
    assert e.value.stage == "membership:complaint" and e.value.parties == ("S4",)


def test_soundness_amplification():
    o = parse_ring("gf:7")
    p = PackedParams(o, 4, 1, 1)
    space = PolySpace(p, 1)
    single = double = 0
    trials = 4000
    for seed in range(trials):
        bad = [(x,) for x in packed_share(p, [o.one()], 2).shares]
        while space.contains(o, bad):
            bad = [(x,) for x in packed_share(p, [o.one()], 2).shares]
        try:
            membership_run(p, seed, bad, space)
            single += 1
            membership_run(p, seed + 10**6, bad, space)
            double += 1
        except Abort:
            pass
    # one challenge passes with probability 1/7, two with 1/49
    assert 0.10 < single / trials < 0.19
    assert double / trials < 0.04


def replication_blocks(p, seed, satisfied=True):
    o = p.o.spawn(random.Random(seed))
    b0 = la.random_vector(o, 4)
    b1 = la.random_vector(o, 4)
    b1[2] = b0[0]
    b1[3] = b0[1]
    b2 = la.random_vector(o, 4)
    b2[0] = b0[0]
    if not satisfied:
        b2[0] = o.add(b2[0], o.one())
    pattern = ReplicationPattern([((0, 0), (1, 2)), ((0, 1), (1, 3)), ((2, 0), (0, 0))])
    vecs = [packed_share(p, b0, 5, o), packed_share(p, b1, 5, o), packed_share(p, b2, 10, o)]
    assert pattern.satisfied_by([b0, b1, b2]) == satisfied
    return vecs, pattern


@pytest.mark.parametrize("mode", ["typewise", "inner-product"])
def test_replication(p97, mode):
    for seed in range(30):
        vecs, pattern = replication_blocks(p97, seed)
        s = session(p97.o, 16, seed)
        assert verify_replication(s, p97, "A", vecs, pattern, servers=servers(16), mode=mode)
    rejected = 0
    for seed in range(200):
        vecs, pattern = replication_blocks(p97, seed, satisfied=False)
        try:
            verify_replication(session(p97.o, 16, seed), p97, "A", vecs, pattern,
                               servers=servers(16), mode=mode)
        except Abort:
            rejected += 1
    assert rejected / 200 >= 1 - 2 / 97


def test_replication_classes():
    pat = ReplicationPattern([((0, 0), (1, 1)), ((1, 1), (2, 2)), ((3, 0), (3, 1))])
    assert sorted(map(sorted, pat.classes())) == [[(0, 0), (1, 1), (2, 2)], [(3, 0), (3, 1)]]
    with pytest.raises(ValueError):
        pat.validate(3, 4)


def test_parse_corrupt():
    assert packed.parse_corrupt("share:2,output:1") == {"share": 2, "output": 1}
    assert packed.parse_corrupt("") == {}
    with pytest.raises(ValueError):
        packed.parse_corrupt("nowhere:1")


def outer_inputs(c, o, seed):
    src = o.spawn(random.Random(seed))
    return {w: src.sample() for _, w in c.inputs}


def test_outer_depth1_multiply(p97):
    c = parse_circuit("INPUT A a\nINPUT B b\nMUL z a b\nOUTPUT A z\n")
    o = p97.o
    res = run_outer_protocol(c, {"a": o.from_int(6), "b": o.from_int(7)}, p97)
    assert not res.aborted and o.decode(res.outputs["A"]["z"]) == 42


def test_outer_identity(p97):
    c = parse_circuit("INPUT A a\nINPUT B b\nOUTPUT B a\nOUTPUT A b\n")
    o = p97.o
    ins = outer_inputs(c, o, 1)
    res = run_outer_protocol(c, ins, p97)
    assert res.outputs == {"A": {"b": ins["b"]}, "B": {"a": ins["a"]}}


@pytest.mark.parametrize("mode,coin", [("typewise", "public"), ("inner-product", "public"),
                                       ("typewise", "client"), ("inner-product", "client")])
def test_outer_random_layered(p97, mode, coin):
    for seed in range(6):
        c = random_layered_circuit(seed, layers=3, width=8)
        ins = outer_inputs(c, p97.o, seed)
        res = run_outer_protocol(c, ins, p97, seed=seed, mode=mode, coin=coin)
        assert not res.aborted
        assert res.outputs == eval_plain(c, ins, p97.o)


def test_outer_non_layered_and_ones(p97):
    text = "INPUT A a\nINPUT B b\nONE one\nMUL m a b\nADD s m one\nMUL t s a\nOUTPUT A t\nOUTPUT B m\n"
    c = parse_circuit(text)
    ins = outer_inputs(c, p97.o, 3)
    res = run_outer_protocol(c, ins, p97, seed=3)
    assert res.outputs == eval_plain(c, ins, p97.o)


@pytest.mark.parametrize("stage", packed.CORRUPT_STAGES)
def test_outer_corruption_aborts(p97, stage):
    c = random_layered_circuit(4, layers=2, width=8)
    ins = outer_inputs(c, p97.o, 4)
    for seed in range(5):
        res = run_outer_protocol(c, ins, p97, seed=seed, corrupt=f"{stage}:1")
        assert res.aborted and res.outputs is None
        assert res.abort.parties


def test_outer_boolean_inputs(p97):
    c = parse_circuit("INPUT A a\nINPUT B b\nMUL z a b\nOUTPUT A z\n")
    o = p97.o
    for a, b in [(0, 1), (1, 1), (0, 0)]:
        res = run_outer_protocol(c, {"a": o.from_int(a), "b": o.from_int(b)}, p97,
                                 boolean_inputs=True)
        assert not res.aborted
    res = run_outer_protocol(c, {"a": o.from_int(5), "b": o.from_int(1)}, p97, boolean_inputs=True)
    assert res.aborted and res.abort.stage == "boolean" and res.abort.parties == ("A",)
