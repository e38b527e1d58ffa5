"""Packed secret sharing and the layered server protocol built on it.

A block of ``ell`` field elements is the value of a random polynomial of
degree ``delta`` at the points ``0, -1, ..., 1-ell``; server ``j`` holds its
value at ``j``.  Blocks add pointwise and multiply pointwise (doubling the
degree).  Dealers prove that what they handed out lies in a linear space by
opening a random linear combination blinded with a random member of the
space.

:func:`run_outer_protocol` evaluates a circuit with two clients (``A`` and
``B``) and ``n`` servers (``S1`` ... ``Sn``), aborting when any check fails.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from . import linalg as la
from .harness import Session
from .ring import Abort


# --- parameters and sharing ------------------------------------------------

class PackedParams:
    def __init__(self, o, n, ell=None, delta=None):
        ell = max(1, n // 4) if ell is None else ell
        delta = n // 3 if delta is None else delta
        if n < 2 or ell < 1:
            raise ValueError("need n >= 2 servers and blocks of length >= 1")
        if not ell - 1 <= delta < n:
            raise ValueError(f"degree {delta} must lie in [ell-1, n)")
        if 2 * delta >= n:
            raise ValueError(f"2*delta = {2 * delta} must be below n = {n}")
        if not (o.is_field or o.pseudo_field):
            raise ValueError("packed sharing needs a field")
        if o.size < n + ell:
            raise ValueError(f"field of size {o.size} has fewer than n + ell = {n + ell} points")
        self.o = o.spawn(random.Random(0), strict=True)
        self.n, self.ell, self.delta = n, ell, delta
        self.share_pts = [la.ring_int(self.o, j) for j in range(1, n + 1)]
        self.secret_pts = [la.ring_int(self.o, 1 - j) for j in range(1, ell + 1)]
        if len(set(self.share_pts + self.secret_pts)) != n + ell:
            raise ValueError("field too small for distinct sharing points")
        self._mats = {}

    @property
    def t(self):
        return self.delta - self.ell + 1

    def __repr__(self):
        return f"PackedParams(n={self.n}, ell={self.ell}, delta={self.delta})"

    def _mat(self, key, src, dst):
        if key not in self._mats:
            self._mats[key] = la.interpolation_matrix(self.o, src, dst)
        return self._mats[key]

    def share_matrix(self, degree):
        """Maps (block, degree+1-ell random values) to the n shares."""
        m = degree + 1 - self.ell
        return self._mat(("share", degree), self.secret_pts + self.share_pts[:m], self.share_pts)

    def check_matrix(self, degree, subset):
        """Extrapolates from the first degree+1 points of ``subset`` to the rest."""
        subset = tuple(subset)
        pts = [self.share_pts[i] for i in subset]
        return self._mat(("check", degree, subset), pts[:degree + 1], pts[degree + 1:])

    def recon_matrix(self, degree, subset):
        subset = tuple(subset[:degree + 1])
        pts = [self.share_pts[i] for i in subset]
        return self._mat(("recon", degree, subset), pts, self.secret_pts)

    def public_matrix(self):
        """Shares of the public degree ell-1 polynomial through a block."""
        return self._mat(("public",), self.secret_pts, self.share_pts)


@dataclass
class PackedShareVector:
    shares: list
    degree: int


def packed_share(params, block, degree, o=None):
    """Shares of ``block`` on a uniformly random polynomial of the given degree."""
    o = o or params.o
    block = list(block)
    if len(block) != params.ell:
        raise ValueError(f"block must have length {params.ell}")
    if not params.ell - 1 <= degree < params.n:
        raise ValueError(f"degree {degree} out of range")
    rand = la.random_vector(o, degree + 1 - params.ell)
    return PackedShareVector(la.matvec(o, params.share_matrix(degree), block + rand), degree)


def consistent(params, shares, degree, subset=None, o=None):
    """Whether the given shares lie on one polynomial of degree at most ``degree``."""
    o = o or params.o
    subset = list(range(len(shares))) if subset is None else list(subset)
    if len(subset) < degree + 1:
        raise ValueError("not enough shares")
    vals = [shares[i] for i in subset]
    if len(vals) == degree + 1:
        return True
    return la.matvec(o, params.check_matrix(degree, subset), vals[:degree + 1]) == vals[degree + 1:]


def packed_reconstruct(params, shares, degree=None, *, subset=None, o=None, stage="reconstruct",
                       party=None):
    """The block, after checking every given share against the degree bound."""
    if isinstance(shares, PackedShareVector):
        degree = shares.degree if degree is None else degree
        shares = shares.shares
    o = o or params.o
    if subset is None:
        subset = [i for i, v in enumerate(shares) if v is not None]
    subset = list(subset)
    if not consistent(params, shares, degree, subset, o):
        raise Abort(stage, [party] if party else [], f"shares are not on a degree-{degree} polynomial")
    vals = [shares[i] for i in subset[:degree + 1]]
    return la.matvec(o, params.recon_matrix(degree, subset), vals)


def block_add(o, x, y):
    return PackedShareVector(la.vadd(o, x.shares, y.shares), max(x.degree, y.degree))


def block_sub(o, x, y):
    return PackedShareVector(la.vsub(o, x.shares, y.shares), max(x.degree, y.degree))


def block_mul_local(o, x, y):
    """Pointwise product; a degree ``deg x + deg y`` sharing of the product block."""
    if isinstance(x, PackedShareVector):
        return PackedShareVector([o.mul(a, b) for a, b in zip(x.shares, y.shares)],
                                 x.degree + y.degree)
    return o.mul(x, y)


def public_shares(params, block, o=None):
    o = o or params.o
    return PackedShareVector(la.matvec(o, params.public_matrix(), list(block)), params.ell - 1)


# --- linear spaces for membership proofs -----------------------------------
# A vector in these spaces is a list with one tuple per server.

class PolySpace:
    """Share vectors of polynomials of degree at most ``degree``."""

    width = 1

    def __init__(self, params, degree):
        self.params, self.degree = params, degree

    def sample(self, o):
        block = la.random_vector(o, self.params.ell)
        return [(x,) for x in packed_share(self.params, block, self.degree, o).shares]

    def contains(self, o, vec):
        return consistent(self.params, [v[0] for v in vec], self.degree, o=o)


class ZeroSpace(PolySpace):
    """Degree-bounded sharings of the all-zero block."""

    def sample(self, o):
        block = [o.zero()] * self.params.ell
        return [(x,) for x in packed_share(self.params, block, self.degree, o).shares]

    def contains(self, o, vec):
        shares = [v[0] for v in vec]
        if not consistent(self.params, shares, self.degree, o=o):
            return False
        zero = o.zero()
        return all(x == zero for x in packed_reconstruct(self.params, shares, self.degree, o=o))


class PairSpace:
    """Pairs ``(p1, p2)`` of degrees ``d1, d2`` with ``p1(1-i) = p2(1-i2)`` (0-based entries)."""

    width = 2

    def __init__(self, params, d1, d2, i, i2):
        self.params, self.d1, self.d2, self.i, self.i2 = params, d1, d2, i, i2

    def sample(self, o):
        p = self.params
        b2 = la.random_vector(o, p.ell)
        b1 = la.random_vector(o, p.ell)
        b1[self.i] = b2[self.i2]
        s1 = packed_share(p, b1, self.d1, o).shares
        s2 = packed_share(p, b2, self.d2, o).shares
        return list(zip(s1, s2))

    def contains(self, o, vec):
        p = self.params
        s1 = [v[0] for v in vec]
        s2 = [v[1] for v in vec]
        if not (consistent(p, s1, self.d1, o=o) and consistent(p, s2, self.d2, o=o)):
            return False
        e1 = packed_reconstruct(p, s1, self.d1, o=o)[self.i]
        e2 = packed_reconstruct(p, s2, self.d2, o=o)[self.i2]
        return e1 == e2


def _combine(o, coeffs, parts, extra):
    """``sum_m coeffs[m] * parts[m] + extra`` on tuples."""
    acc = list(extra)
    for c, v in zip(coeffs, parts):
        acc = [o.add(a, o.mul(c, x)) for a, x in zip(acc, v)]
    return tuple(acc)


def _coins(session, count, coin, challenger):
    if coin == "public":
        return [session.coin.sample() for _ in range(count)]
    if coin != "client":
        raise ValueError(f"unknown coin mode {coin!r}")
    lam = la.random_vector(session[challenger].oracle, count)
    return session.broadcast(challenger, lam)


def prove_membership(session, params, dealer, space, vectors, *, servers, held=None,
                     distribute=False, coin="public", challenger=None, stage="membership",
                     corrupt_delivery=None):
    """Dealer convinces the servers that ``vectors`` (each one tuple per server) lie in ``space``.

    With ``distribute`` the dealer first sends every server its parts.  Returns
    what the servers hold afterwards.  ``corrupt_delivery`` (server index ->
    delta) perturbs the first vector on delivery (test hook).
    """
    o = session[dealer].oracle
    q = len(vectors)
    n = params.n
    if distribute:
        held = [[None] * n for _ in range(q)]
        for j, srv in enumerate(servers):
            parts = [list(v[j]) for v in vectors]
            if corrupt_delivery and j in corrupt_delivery and parts:
                parts[0] = [o.add(parts[0][0], corrupt_delivery[j])] + parts[0][1:]
            got = session.send(dealer, srv, parts)
            for m in range(q):
                held[m][j] = tuple(got[m])
    elif held is None:
        held = [list(v) for v in vectors]
    r = space.sample(o)
    for j, srv in enumerate(servers):
        session.send(dealer, srv, list(r[j]))
    lam = _coins(session, q, coin, challenger)
    u = [_combine(o, lam, [v[j] for v in vectors], r[j]) for j in range(n)]
    u = session.broadcast(dealer, [list(x) for x in u])
    u = [tuple(x) for x in u]
    complaints = []
    for j, srv in enumerate(servers):
        so = session[srv].oracle
        mine = _combine(so, lam, [h[j] for h in held], r[j])
        if mine != u[j]:
            complaints.append(srv)
    if complaints:
        session.broadcast(complaints[0], [1] * len(complaints), kind="bits")
        raise Abort(f"{stage}:complaint", complaints, f"servers disagree with {dealer}'s combination")
    if not space.contains(session.coin, u):
        raise Abort(f"{stage}:not-in-space", [dealer], "broadcast combination is not in the space")
    return held


# --- replication patterns --------------------------------------------------

@dataclass
class ReplicationPattern:
    """Atomic equalities ``((block, entry), (block2, entry2))``, entries 0-based."""

    constraints: list = field(default_factory=list)

    def types(self):
        groups = {}
        for (j, i), (j2, i2) in self.constraints:
            groups.setdefault((i, i2), []).append((j, j2))
        return groups

    def validate(self, n_blocks, ell):
        for (j, i), (j2, i2) in self.constraints:
            if not (0 <= j < n_blocks and 0 <= j2 < n_blocks and 0 <= i < ell and 0 <= i2 < ell):
                raise ValueError(f"constraint {((j, i), (j2, i2))} out of range")

    def classes(self):
        """Equality classes (union-find over positions), each in first-seen order."""
        parent = {}

        def find(x):
            parent.setdefault(x, x)
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        order = []
        for a, b in self.constraints:
            for x in (a, b):
                if x not in parent:
                    order.append(x)
                    parent[x] = x
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[rb] = ra
        out = {}
        for x in order:
            out.setdefault(find(x), []).append(x)
        return [c for c in out.values() if len(c) > 1]

    def satisfied_by(self, blocks):
        return all(blocks[j][i] == blocks[j2][i2] for (j, i), (j2, i2) in self.constraints)


def verify_replication(session, params, dealer, blocks, pattern, *, servers, mode="typewise",
                       held=None, coin="public", challenger=None, stage="replication"):
    """Check that the shared blocks satisfy ``pattern``; abort otherwise.

    ``blocks`` are the dealer's :class:`PackedShareVector` objects; ``held``
    (per block, per server) are the servers' shares and default to them.
    """
    if not isinstance(pattern, ReplicationPattern):
        pattern = ReplicationPattern(list(pattern))
    pattern.validate(len(blocks), params.ell)
    held = [list(b.shares) for b in blocks] if held is None else held
    if mode == "typewise":
        groups = {}
        for (j, i), (j2, i2) in pattern.constraints:
            key = (i, i2, blocks[j].degree, blocks[j2].degree)
            groups.setdefault(key, []).append((j, j2))
        # the per-type proofs are independent and run side by side
        with session.parallel() as branch:
            for (i, i2, d1, d2), pairs in sorted(groups.items()):
                space = PairSpace(params, d1, d2, i, i2)
                vecs = [list(zip(blocks[j].shares, blocks[j2].shares)) for j, j2 in pairs]
                hv = [list(zip(held[j], held[j2])) for j, j2 in pairs]
                with branch():
                    prove_membership(session, params, dealer, space, vecs, servers=servers,
                                     held=hv, coin=coin, challenger=challenger,
                                     stage=f"{stage}:type{i},{i2}")
        return True
    if mode == "inner-product":
        return _inner_product_check(session, params, dealer, blocks, pattern, servers, held,
                                    coin, challenger, stage)
    raise ValueError(f"unknown replication mode {mode!r}")


def _inner_product_check(session, params, dealer, blocks, pattern, servers, held, coin,
                         challenger, stage):
    classes = pattern.classes()
    if not classes:
        return True
    o = session[dealer].oracle
    ell, n = params.ell, params.n
    used = sorted({j for c in classes for j, _ in c})
    deg = max(blocks[j].degree for j in used) + ell - 1
    if deg >= n:
        raise ValueError(f"inner-product check needs degree {deg} < n = {n}")
    # masking block with entries summing to zero, dealt before the challenge
    z = la.random_vector(o, ell - 1)
    z.append(o.neg(la.vsum(o, z)))
    zs = packed_share(params, z, deg, o).shares
    for j, srv in enumerate(servers):
        session.send(dealer, srv, zs[j])
    rho = _coins(session, len(used) * ell, coin, challenger)
    rho = {j: rho[k * ell:(k + 1) * ell] for k, j in enumerate(used)}
    shifted = {j: list(v) for j, v in rho.items()}
    for c in classes:
        for k, (j, i) in enumerate(c):
            j2, i2 = c[(k + 1) % len(c)]
            shifted[j][i] = rho[j2][i2]
    co = session.coin
    pub = {j: public_shares(params, la.vsub(co, rho[j], shifted[j]), co).shares for j in used}
    vals = []
    with session.parallel() as branch:
        for s, srv in enumerate(servers):
            so = session[srv].oracle
            acc = zs[s]
            for j in used:
                acc = so.add(acc, so.mul(held[j][s], pub[j][s]))
            with branch():
                vals.append(session.broadcast(srv, acc))
    if not consistent(params, vals, deg, o=co):
        raise Abort(f"{stage}:inner-product", [dealer], "opened values are inconsistent")
    total = la.vsum(co, packed_reconstruct(params, vals, deg, o=co))
    if total != co.zero():
        raise Abort(f"{stage}:inner-product", [dealer], "replication pattern violated")
    return True


# --- layered evaluation plan -----------------------------------------------

@dataclass
class Group:
    op: str            # mul, add, sub or pass
    left: list
    right: list        # None for pass
    out: list


@dataclass
class OuterPlan:
    inputs: dict       # party -> list of blocks of wire names
    ones: list
    layers: list       # list of list of Group
    outputs: dict      # party -> list of blocks of wire names
    depth: int


def _chunks(xs, ell):
    return [xs[i:i + ell] for i in range(0, len(xs), ell)]


def _pad(block, ell):
    return list(block) + [None] * (ell - len(block))


def compile_outer(circuit, ell):
    """Arrange the circuit into layers of blockwise operations.

    Wires used more than one layer after they are produced (and outputs
    produced before the last layer) are carried forward by pass gates.
    """
    depth = circuit.depths()
    D = max((depth[w] for _, w in circuit.outputs), default=0)
    gates = [g for g in circuit.gates if depth[g.out] <= D]
    last_use = {}
    for g in gates:
        for w in (g.in1, g.in2):
            last_use[w] = max(last_use.get(w, 0), depth[g.out])
    for _, w in circuit.outputs:
        last_use[w] = D + 1
    layers = []
    for h in range(1, D + 1):
        groups = []
        for op in ("mul", "add", "sub"):
            gs = [g for g in gates if depth[g.out] == h and g.op == op]
            for chunk in _chunks(gs, ell):
                groups.append(Group(op, _pad([g.in1 for g in chunk], ell),
                                    _pad([g.in2 for g in chunk], ell),
                                    _pad([g.out for g in chunk], ell)))
        carry = sorted((w for w, d in depth.items() if d < h and last_use.get(w, 0) >= h + 1),
                       key=lambda w: (depth[w], w))
        for chunk in _chunks(carry, ell):
            groups.append(Group("pass", _pad(chunk, ell), None, _pad(chunk, ell)))
        layers.append(groups)
    inputs = {p: _chunks([w for q, w in circuit.inputs if q == p], ell) for p in ("A", "B")}
    inputs = {p: [_pad(b, ell) for b in bl] for p, bl in inputs.items()}
    ones = [_pad(b, ell) for b in _chunks(list(circuit.ones), ell)]
    outputs = {p: [_pad(b, ell) for b in _chunks([w for q, w in circuit.outputs if q == p], ell)]
               for p in ("A", "B")}
    return OuterPlan(inputs, ones, layers, outputs, D)


# --- the protocol ----------------------------------------------------------

CORRUPT_STAGES = ("share", "reveal", "reshare", "output")


def parse_corrupt(spec):
    """``stage:count[,stage:count...]`` into ``{stage: count}``."""
    out = {}
    if not spec:
        return out
    for part in spec.split(","):
        stage, _, count = part.partition(":")
        if stage not in CORRUPT_STAGES:
            raise ValueError(f"unknown corruption stage {stage!r}")
        out[stage] = int(count or 1)
    return out


@dataclass
class OuterResult:
    outputs: dict
    abort: Abort
    stats: object
    session: Session
    plan: OuterPlan

    @property
    def aborted(self):
        return self.abort is not None

    def abort_json(self):
        return json.dumps(self.abort.to_dict() if self.abort else None, sort_keys=True)


def _nonzero(o):
    while True:
        x = o.sample()
        if x != o.zero():
            return x


class _Run:
    def __init__(self, session, params, mode, coin, corrupt, seed):
        self.s = session
        self.p = params
        self.mode = mode
        self.coin = coin
        self.servers = [f"S{j}" for j in range(1, params.n + 1)]
        self.corrupt = corrupt
        crng = random.Random(f"{seed}:corrupt")
        self.bad = {st: sorted(crng.sample(range(params.n), min(e, params.n)))
                    for st, e in corrupt.items()}
        self.fired = set()

    def _fire(self, stage):
        if stage in self.bad and stage not in self.fired:
            self.fired.add(stage)
            return self.bad[stage]
        return []

    def challenger(self, dealer):
        return "B" if dealer == "A" else "A"

    def deal(self, dealer, blocks, degree, stage, corrupt_delivery=None):
        """Share blocks at ``degree`` and prove the shares are of that degree."""
        o = self.s[dealer].oracle
        vecs = [packed_share(self.p, [x if x is not None else o.zero() for x in b], degree, o)
                for b in blocks]
        if not vecs:
            return vecs, []
        held = prove_membership(self.s, self.p, dealer, PolySpace(self.p, degree),
                                [[(x,) for x in v.shares] for v in vecs], servers=self.servers,
                                distribute=True, coin=self.coin,
                                challenger=self.challenger(dealer), stage=f"{stage}:degree",
                                corrupt_delivery=corrupt_delivery)
        return vecs, [[h[0] for h in hv] for hv in held]

    def prove_projection(self, dealer, src, src_held, dst, dst_held, pattern, stage):
        blocks = src + dst
        held = src_held + dst_held
        verify_replication(self.s, self.p, dealer, blocks, pattern, servers=self.servers,
                           mode=self.mode, held=held, coin=self.coin,
                           challenger=self.challenger(dealer), stage=stage)

    def transition(self, cur, pos, target, label):
        """Blind, reveal to A, project onto ``target``, reshare, unblind.

        ``cur`` holds the servers' shares of the current blocks (list of
        per-server lists), ``pos`` maps wire -> (block, entry) in ``cur``.
        Returns degree-delta shares of the target blocks.
        """
        s, p = self.s, self.p
        oA, oB = s["A"].oracle, s["B"].oracle
        two = 2 * p.delta
        # Bob's blinding blocks, then their projection
        r_blocks = [la.random_vector(oB, p.ell) for _ in cur]
        r_vecs, r_held = self.deal("B", r_blocks, two, f"{label}:blind")
        pattern = []
        for g, blk in enumerate(target):
            for e, w in enumerate(blk):
                if w is not None:
                    m, i = pos[w]
                    pattern.append(((m, i), (len(cur) + g, e)))
        r_proj = [[r_blocks[pos[w][0]][pos[w][1]] if w is not None else oB.zero() for w in blk]
                  for blk in target]
        rp_vecs, rp_held = self.deal("B", r_proj, p.delta, f"{label}:unblind")
        self.prove_projection("B", r_vecs, r_held, rp_vecs, rp_held, pattern, f"{label}:unblind")
        # servers reveal blinded blocks to Alice
        bad = set(self._fire("reveal"))
        c_held = []
        for m in range(len(cur)):
            c_held.append([s[srv].oracle.add(cur[m][j], r_held[m][j])
                           for j, srv in enumerate(self.servers)])
        recv = [[None] * p.n for _ in cur]
        for j, srv in enumerate(self.servers):
            vals = [c_held[m][j] for m in range(len(cur))]
            if j in bad:
                vals = [s[srv].oracle.add(v, _nonzero(s[srv].oracle)) for v in vals]
            got = s.send(srv, "A", vals)
            for m in range(len(cur)):
                recv[m][j] = got[m]
        c_blocks = [packed_reconstruct(p, recv[m], two, o=oA, stage=f"{label}:reveal",
                                       party="A")
                    for m in range(len(cur))]
        c_vecs = [PackedShareVector(recv[m], two) for m in range(len(cur))]
        # Alice projects and reshares at degree delta
        c_proj = [[c_blocks[pos[w][0]][pos[w][1]] if w is not None else oA.zero() for w in blk]
                  for blk in target]
        bad = self._fire("reshare")
        delivery = {j: _nonzero(oA) for j in bad} if bad else None
        cp_vecs, cp_held = self.deal("A", c_proj, p.delta, f"{label}:reshare", delivery)
        self.prove_projection("A", c_vecs, c_held, cp_vecs, cp_held, pattern, f"{label}:reshare")
        return [[s[srv].oracle.sub(cp_held[g][j], rp_held[g][j]) for j, srv in enumerate(self.servers)]
                for g in range(len(target))]

    def boolean_check(self, owner, vecs_held, blocks):
        """Servers open ``a - a*a`` (masked by a zero block from the other client).

        This vanishes exactly on 0/1 entries.
        """
        s, p = self.s, self.p
        other = self.challenger(owner)
        for m, blk in enumerate(blocks):
            zo = s[other].oracle
            space = ZeroSpace(p, 2 * p.delta)
            held = prove_membership(s, p, other, space, [space.sample(zo)], servers=self.servers,
                                    distribute=True, coin=self.coin, challenger=owner,
                                    stage="boolean:mask")
            vals = []
            with s.parallel() as branch:
                for j, srv in enumerate(self.servers):
                    so = s[srv].oracle
                    a = vecs_held[m][j]
                    v = so.add(so.sub(a, so.mul(a, a)), held[0][j][0])
                    with branch():
                        vals.append(s.broadcast(srv, v))
            out = packed_reconstruct(p, vals, 2 * p.delta, o=s.coin, stage="boolean")
            zero = s.coin.zero()
            if any(out[e] != zero for e, w in enumerate(blk) if w is not None):
                raise Abort("boolean", [owner], "an input is not 0 or 1")


def run_outer_protocol(circuit, inputs, params, *, seed=0, mode="typewise", coin="public",
                       corrupt=None, boolean_inputs=False):
    """Evaluate ``circuit`` on ``inputs`` (wire -> label) with two clients and ``n`` servers."""
    if isinstance(corrupt, str):
        corrupt = parse_corrupt(corrupt)
    corrupt = corrupt or {}
    p = params
    plan = compile_outer(circuit, p.ell)
    names = ["A", "B"] + [f"S{j}" for j in range(1, p.n + 1)]
    s = Session(p.o, names, seed=seed)
    for q, w in circuit.inputs:
        s[q].inputs[w] = inputs[w]
    run = _Run(s, p, mode, coin, corrupt, seed)
    abort = None
    try:
        # sharing inputs
        cur, pos = [], {}
        for q in ("A", "B"):
            o = s[q].oracle
            blocks = [[inputs[w] if w is not None else None for w in blk] for blk in plan.inputs[q]]
            _, held = run.deal(q, blocks, p.delta, f"input:{q}")
            if q == "A" and held:
                for j in run._fire("share"):
                    srv = run.servers[j]
                    held[0][j] = s[srv].oracle.add(held[0][j], _nonzero(s[srv].oracle))
            if boolean_inputs and held:
                run.boolean_check(q, held, plan.inputs[q])
            for blk, h in zip(plan.inputs[q], held):
                for e, w in enumerate(blk):
                    if w is not None:
                        pos[w] = (len(cur), e)
                cur.append(h)
        for blk in plan.ones:
            sh = public_shares(p, [p.o.one()] * p.ell).shares
            for e, w in enumerate(blk):
                if w is not None:
                    pos[w] = (len(cur), e)
            cur.append(list(sh))
        # layers
        for h, groups in enumerate(plan.layers, 1):
            target = []
            for g in groups:
                target.append(g.left)
                if g.right is not None:
                    target.append(g.right)
            ins = run.transition(cur, pos, target, f"layer{h}")
            cur, pos, k = [], {}, 0
            for g in groups:
                left = ins[k]
                k += 1
                if g.op == "pass":
                    out = left
                else:
                    right = ins[k]
                    k += 1
                    f = {"mul": "mul", "add": "add", "sub": "sub"}[g.op]
                    out = [getattr(s[srv].oracle, f)(a, b)
                           for srv, a, b in zip(run.servers, left, right)]
                for e, w in enumerate(g.out):
                    if w is not None:
                        pos[w] = (len(cur), e)
                cur.append(out)
        # delivering outputs
        target = plan.outputs["A"] + plan.outputs["B"]
        final = run.transition(cur, pos, target, "output") if target else []
        outputs = {"A": {}, "B": {}}
        bad = set(run._fire("output"))
        k = 0
        for q in ("A", "B"):
            for blk in plan.outputs[q]:
                recv = []
                for j, srv in enumerate(run.servers):
                    v = final[k][j]
                    if j in bad:
                        v = s[srv].oracle.add(v, _nonzero(s[srv].oracle))
                    recv.append(s.send(srv, q, v))
                vals = packed_reconstruct(p, recv, p.delta, o=s[q].oracle, stage=f"output:{q}",
                                          party=q)
                for e, w in enumerate(blk):
                    if w is not None:
                        outputs[q][w] = vals[e]
                k += 1
        for q in ("A", "B"):
            s[q].outputs.update(outputs[q])
    except Abort as e:
        abort = e
        outputs = None
    return OuterResult(outputs, abort, s.stats(), s, plan)


def deliver_output(params, shares, receiver="A", *, tamper=None, o=None):
    """Receiver-side output check: ``tamper`` maps server index -> additive error."""
    o = o or params.o
    recv = list(shares)
    for j, d in (tamper or {}).items():
        recv[j] = o.add(recv[j], d)
    return packed_reconstruct(params, recv, params.delta, o=o, stage=f"output:{receiver}",
                              party=receiver)
