"""Two-party product sharing: Alice holds ``a``, Bob holds ``b``, they end with
``zA + zB = a * b``.

Realizations in the OT-hybrid model:

* :func:`rho_ot` -- statistically secure, Bob hides ``b`` with the pair-vector
  encoding and fetches his selected entries by 1-out-of-2 OT;
* :func:`sigma_ot` -- Bob sends a noisy linear encoding of ``b`` and fetches
  the clean coordinates by k-out-of-n OT;
* :func:`tau_ot` -- packed Reed-Solomon variant producing ``t`` product
  sharings at once;
* :func:`beaver_wrap` -- runs any of the above on random inputs, erases, and
  corrects with two exchanged differences.

Multiplication is always ``a`` on the left.  Each function takes the
:class:`~arithmpc.harness.Session` plus the two inputs and the names of the
parties acting as Alice and Bob.
"""
from __future__ import annotations

from contextlib import ExitStack
from dataclasses import dataclass

from . import codes
from . import linalg as la
from .harness import register
from .ring import Abort


@dataclass
class ShareOutcome:
    zA: bytes
    zB: bytes

    def total(self, o):
        return o.add(self.zA, self.zB)


@dataclass
class PackedShareOutcome:
    zA: list
    zB: list

    def totals(self, o):
        return [o.add(x, y) for x, y in zip(self.zA, self.zB)]

    def split(self):
        return [ShareOutcome(x, y) for x, y in zip(self.zA, self.zB)]


def default_rho_n(o, k=40):
    """``ceil(log2 |R|) + k`` with the label length as the bound on ``log2 |R|``."""
    return o.id.bit_length + k


def rho_ot(session, a, b, n=None, *, k=40, alice="A", bob="B"):
    A, B = session[alice], session[bob]
    oa, ob = A.oracle, B.oracle
    n = default_rho_n(oa, k) if n is None else n
    if n < 1:
        raise ValueError("n must be at least 1")
    enc = codes.stat_encode(ob, b, n)
    if enc is None:
        raise Abort("rho:encode", [bob], "invalid input label")
    B.remember("sigma", enc.sigma)
    pairs = session.send(bob, alice, [[x, y] for x, y in zip(enc.v0, enc.v1)])
    t = la.random_vector(oa, n)
    A.remember("t", t)
    zA = la.vsum(oa, t)
    w = [[oa.sub(oa.mul(a, p[0]), ti), oa.sub(oa.mul(a, p[1]), ti)] for p, ti in zip(pairs, t)]
    got = []
    with session.parallel() as branch:
        for (w0, w1), s in zip(w, enc.sigma):
            with branch():
                got.append(session.ot_1of2(alice, bob, w0, w1, s))
    zB = la.vsum(ob, got)
    return ShareOutcome(zA, zB)


def _require_commutative(o, name):
    if not o.commutative:
        raise ValueError(f"{name} needs a commutative ring")


def sigma_ot(session, a, b, code=None, *, scheme="rand", k=8, ot_mode="monolithic",
             alice="A", bob="B"):
    A, B = session[alice], session[bob]
    oa, ob = A.oracle, B.oracle
    _require_commutative(oa, "sigma")
    if code is None:
        code = codes.GENERATORS[scheme](ob, k)
    if code.t != 1:
        raise ValueError("sigma uses single-element encodings")
    enc = codes.noisy_encode(code, ob, [b])
    B.remember("L", enc.L)
    G = session.send(bob, alice, code.G, kind="code")
    v = session.send(bob, alice, enc.v)
    x = la.random_vector(oa, code.k)
    A.remember("x", x)
    Gx = la.matvec(oa, G, x)
    w = [oa.sub(oa.mul(a, vi), gi) for vi, gi in zip(v, Gx)]
    w_L = session.ot_kofn(alice, bob, w, enc.L, mode=ot_mode)
    zB = la.dot(ob, code.H[0], w_L)
    return ShareOutcome(x[0], zB)


def tau_ot(session, a, b, code=None, *, k=8, c=8, strict=False, check_points=2,
           cheat=None, ot_mode="monolithic", alice="A", bob="B"):
    """``t = len(a)`` product sharings from one Reed-Solomon encoding.

    With ``strict`` Bob fetches ``check_points`` extra clean coordinates and
    aborts if they disagree with the degree ``2(k-1)`` polynomial through the
    first ``2k-1``.  ``cheat="high_degree"`` makes Alice mask with a polynomial
    of degree ``2k`` (test hook).
    """
    A, B = session[alice], session[bob]
    oa, ob = A.oracle, B.oracle
    _require_commutative(oa, "tau")
    a, b = list(a), list(b)
    t = len(b)
    if len(a) != t:
        raise ValueError("input vectors differ in length")
    if code is None:
        code = codes.gen_rs_code(ob, k, c, t=max(t, 1), extra_clean=check_points if strict else 0)
    k = code.k
    if t > k:
        raise ValueError(f"cannot pack {t} products with k={k}")
    enc = codes.noisy_encode(code, ob, b)
    B.remember("L", enc.L)
    xs, ys = session.send(bob, alice, [code.xs, code.ys], kind="code")
    v = session.send(bob, alice, enc.v)
    # P_a(y_j) = (G u_a)_j with u_a = a padded by random values at the remaining x points
    G = la.interpolation_matrix(oa, xs, ys)
    u_a = a + la.random_vector(oa, k - t)
    pa_y = la.matvec(oa, G, u_a)
    deg = 2 * k if cheat == "high_degree" else 2 * (k - 1)
    pr = la.random_vector(oa, deg + 1)
    A.remember("P_r", pr)
    w = [oa.sub(oa.mul(p, vi), la.poly_eval(oa, pr, y)) for p, vi, y in zip(pa_y, v, ys)]
    zA = [la.poly_eval(oa, pr, x) for x in xs[:t]]
    w_L = session.ot_kofn(alice, bob, w, enc.L, mode=ot_mode)
    base = 2 * k - 1
    if strict and len(w_L) > base:
        ys_L = [code.ys[i] for i in enc.L]
        ext = la.interpolation_matrix(ob, ys_L[:base], ys_L[base:])
        if la.matvec(ob, ext, w_L[:base]) != w_L[base:]:
            raise Abort("tau:degree", [alice], "received points do not lie on a degree 2(k-1) polynomial")
    zB = la.matvec(ob, code.H[:t], w_L[:base])
    return PackedShareOutcome(zA, zB)


def beaver_wrap(session, inner, a, b, *, alice="A", bob="B"):
    """Run ``inner`` on random inputs, erase its memory, then correct.

    ``inner`` is a backend (see :class:`Backend`).
    """
    A, B = session[alice], session[bob]
    oa, ob = A.oracle, B.oracle
    rA = A.remember("r", oa.sample())
    rB = B.remember("r", ob.sample())
    with ExitStack() as stack:
        stack.enter_context(A.scope("inner"))
        stack.enter_context(B.scope("inner"))
        out = inner(session, rA, rB, alice=alice, bob=bob)
    sA = A.remember("s", out.zA)
    sB = B.remember("s", out.zB)
    A.erase("inner")
    B.erase("inner")
    with session.parallel() as branch:
        with branch():
            dA = session.send(alice, bob, oa.sub(a, rA))
        with branch():
            dB = session.send(bob, alice, ob.sub(b, rB))
    zA = oa.add(oa.mul(a, dB), sA)
    zB = ob.add(ob.mul(dA, rB), sB)
    return ShareOutcome(zA, zB)


# --- backends --------------------------------------------------------------

class Backend:
    """A product-sharing realization usable by the higher-level reductions."""

    name = "backend"
    batch_size = 1
    needs_commutative = False

    def __call__(self, session, a, b, *, alice="A", bob="B"):
        raise NotImplementedError

    def batch(self, session, avec, bvec, *, alice="A", bob="B"):
        out = []
        with session.parallel() as branch:
            for a, b in zip(avec, bvec):
                with branch():
                    out.append(self(session, a, b, alice=alice, bob=bob))
        return out

    def __repr__(self):
        return f"{type(self).__name__}({self.name!r})"


class Ideal(Backend):
    """The product-sharing functionality itself (trusted dealer, no messages)."""

    name = "ideal"

    def __call__(self, session, a, b, *, alice="A", bob="B"):
        oa, ob = session[alice].oracle, session[bob].oracle
        zA = oa.sample()
        return ShareOutcome(zA, ob.sub(ob.mul(a, b), zA))


class Rho(Backend):
    name = "rho"

    def __init__(self, n=None, k=40):
        self.n, self.k = n, k

    def __call__(self, session, a, b, *, alice="A", bob="B"):
        return rho_ot(session, a, b, self.n, k=self.k, alice=alice, bob=bob)


class Sigma(Backend):
    needs_commutative = True

    def __init__(self, scheme="rand", k=8, ot_mode="monolithic"):
        self.scheme, self.k, self.ot_mode = scheme, k, ot_mode
        self.name = "sigma" if scheme == "rand" else f"sigma-{scheme}"

    def __call__(self, session, a, b, *, alice="A", bob="B"):
        return sigma_ot(session, a, b, scheme=self.scheme, k=self.k, ot_mode=self.ot_mode,
                        alice=alice, bob=bob)


class Tau(Backend):
    name = "tau"
    needs_commutative = True

    def __init__(self, k=8, c=8, t=None, strict=False):
        self.k, self.c = k, c
        self.batch_size = t if t is not None else k // 2
        self.strict = strict

    def __call__(self, session, a, b, *, alice="A", bob="B"):
        return self.batch(session, [a], [b], alice=alice, bob=bob)[0]

    def batch(self, session, avec, bvec, *, alice="A", bob="B"):
        avec, bvec = list(avec), list(bvec)
        t = self.batch_size
        oa, ob = session[alice].oracle, session[bob].oracle
        out = []
        with session.parallel() as branch:
            for i in range(0, len(avec), t):
                ca, cb = avec[i:i + t], bvec[i:i + t]
                pad = t - len(ca)
                ca = ca + [oa.zero()] * pad
                cb = cb + [ob.zero()] * pad
                with branch():
                    res = tau_ot(session, ca, cb, k=self.k, c=self.c, strict=self.strict,
                                 alice=alice, bob=bob)
                out.extend(res.split()[:t - pad])
        return out


class Wrapped(Backend):
    """The erasing wrapper around another backend."""

    def __init__(self, inner):
        self.inner = inner
        self.name = f"wrapped-{inner.name}"
        self.needs_commutative = inner.needs_commutative

    def __call__(self, session, a, b, *, alice="A", bob="B"):
        return beaver_wrap(session, self.inner, a, b, alice=alice, bob=bob)


# --- reductions ------------------------------------------------------------

def degree2_share(session, xA, yA, xB, yB, backend, *, alice="A", bob="B"):
    """Shares of ``(xA + xB)(yA + yB)`` from two product sharings.

    The cross terms are ``xA yB`` and ``xB yA``; the second is run with Bob
    as the left multiplier so the order is right over noncommutative rings
    (over commutative rings this is the same as sharing ``yA xB``).
    """
    oa, ob = session[alice].oracle, session[bob].oracle
    with session.parallel() as branch:
        with branch():
            alpha = backend(session, xA, yB, alice=alice, bob=bob)
        with branch():
            if oa.commutative:
                beta = backend(session, yA, xB, alice=alice, bob=bob)
            else:
                swapped = backend(session, xB, yA, alice=bob, bob=alice)
                beta = ShareOutcome(swapped.zB, swapped.zA)
    cA = oa.add(oa.add(oa.mul(xA, yA), alpha.zA), beta.zA)
    cB = ob.add(ob.add(ob.mul(xB, yB), alpha.zB), beta.zB)
    return cA, cB


def multiparty_product_share(session, xs, ys, backend, parties=None):
    """Additive shares of ``(sum x_i)(sum y_i)`` among ``m`` parties.

    One product sharing per ordered pair ``(i, j)``, ``i != j``, on ``(x_i, y_j)``.
    """
    parties = list(parties or session.parties)
    m = len(parties)
    if m < 2:
        raise ValueError("need at least two parties")
    if len(xs) != m or len(ys) != m:
        raise ValueError("one x and one y per party")
    alpha = {}
    with session.parallel() as branch:
        for i in range(m):
            for j in range(m):
                if i != j:
                    with branch():
                        alpha[i, j] = backend(session, xs[i], ys[j], alice=parties[i], bob=parties[j])
    out = []
    for i, name in enumerate(parties):
        o = session[name].oracle
        c = o.mul(xs[i], ys[i])
        for j in range(m):
            if j != i:
                c = o.add(c, alpha[i, j].zA)
                c = o.add(c, alpha[j, i].zB)
        out.append(c)
    return out


# --- registered two-party runs ----------------------------------------------

def _outputs(session, out):
    session["A"].outputs["z"] = out.zA
    session["B"].outputs["z"] = out.zB


@register("rho")
def _run_rho(session, n=None, k=40):
    _outputs(session, rho_ot(session, session["A"].inputs["a"], session["B"].inputs["b"], n, k=k))


@register("sigma")
def _run_sigma(session, k=8, scheme="rand", ot_mode="monolithic"):
    _outputs(session, sigma_ot(session, session["A"].inputs["a"], session["B"].inputs["b"],
                               scheme=scheme, k=k, ot_mode=ot_mode))


@register("sigma-ring")
def _run_sigma_ring(session, k=8, ot_mode="monolithic"):
    _run_sigma(session, k=k, scheme="ring", ot_mode=ot_mode)


@register("tau")
def _run_tau(session, k=8, c=8, strict=False, cheat=None):
    _outputs(session, tau_ot(session, session["A"].inputs["a"], session["B"].inputs["b"],
                             k=k, c=c, strict=strict, cheat=cheat))


@register("wrapped")
def _run_wrapped(session, inner=None):
    inner = inner or Rho()
    _outputs(session, beaver_wrap(session, inner, session["A"].inputs["a"], session["B"].inputs["b"]))


@register("degree2")
def _run_degree2(session, backend=None):
    A, B = session["A"].inputs, session["B"].inputs
    cA, cB = degree2_share(session, A["x"], A["y"], B["x"], B["y"], backend or Rho())
    session["A"].outputs["c"] = cA
    session["B"].outputs["c"] = cB


@register("multiparty")
def _run_multiparty(session, backend=None):
    names = list(session.parties)
    xs = [session[p].inputs["x"] for p in names]
    ys = [session[p].inputs["y"] for p in names]
    for p, c in zip(names, multiparty_product_share(session, xs, ys, backend or Rho())):
        session[p].outputs["c"] = c
