"""Additively homomorphic encryption and the two product-sharing protocols built on it.

Both schemes expose the same four functions ``keygen``, ``encrypt``,
``decrypt`` and ``combine``; the protocols below touch a scheme through
nothing else.  ``combine(pk, c, other)`` adds plaintexts when ``other`` is a
:class:`Ciphertext` and multiplies the plaintext by ``other`` (on the right)
when it is a plaintext.

* :class:`MockHe` -- controlled-ring scheme over any oracle ring.  It is
  **not encryption at all** (the plaintext sits in the ciphertext next to a
  nonce); it exists to exercise protocol logic.
* :class:`Paillier` -- uncontrolled-ring scheme over ``Z_N``.  Toy key sizes;
  also not for real use.
"""
from __future__ import annotations

import json
import math
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

from .harness import register
from .pdtshr import Backend, ShareOutcome
from .ring import Abort, is_probable_prime


@dataclass(frozen=True)
class Ciphertext:
    value: object


# --- controlled-ring mock --------------------------------------------------

@dataclass(frozen=True)
class MockKey:
    ring_id: str
    key_id: int


class MockHe:
    """Plaintext-plus-nonce stand-in for a controlled-ring scheme.  INSECURE."""

    name = "mock"

    def __init__(self, oracle):
        # private arithmetic handle; not counted against any party
        self._o = oracle.spawn(random.Random(0), strict=False)

    def keygen(self, k, ring_id, rng):
        key = MockKey(ring_id, rng.getrandbits(32))
        return key, key

    def encrypt(self, pk, x, rng):
        if not self._o.valid(x):
            raise ValueError("plaintext is not a ring element")
        return Ciphertext((pk.key_id, x, rng.getrandbits(32)))

    def decrypt(self, sk, c):
        kid, x, _ = c.value
        if kid != sk.key_id:
            raise Abort("he:decrypt", (), "ciphertext under a different key")
        return x

    def combine(self, pk, c, other, rng):
        kid, x, _ = c.value
        if isinstance(other, Ciphertext):
            y = self._o.add(x, other.value[1])
        else:
            y = self._o.mul(x, other)
        if y is None:
            raise Abort("he:combine", (), "bad plaintext")
        return Ciphertext((kid, y, rng.getrandbits(32)))


# --- Paillier --------------------------------------------------------------

@dataclass(frozen=True)
class PaillierPublic:
    N: int

    @property
    def N2(self):
        return self.N * self.N


@dataclass(frozen=True)
class PaillierSecret:
    N: int
    p: int
    q: int
    lam: int
    mu: int


def random_prime(bits, rng):
    """Random prime with the top two bits set (so products have full length)."""
    if bits < 3:
        raise ValueError("prime too small")
    while True:
        c = rng.getrandbits(bits) | (3 << (bits - 2)) | 1
        if is_probable_prime(c, rng=rng):
            return c


class Paillier:
    """Textbook Paillier with ``g = N + 1``.  Toy parameters, INSECURE."""

    name = "paillier"

    def __init__(self, min_prime_bits=64):
        self.min_prime_bits = min_prime_bits

    def keygen(self, kprime, rng):
        """Keys with ``N > 2^(kprime + 2)``; returns ``(pk, sk, ring id)``."""
        bits = max(self.min_prime_bits, (kprime + 4) // 2)
        while True:
            p = random_prime(bits, rng)
            q = random_prime(bits, rng)
            if p != q and math.gcd(p * q, (p - 1) * (q - 1)) == 1:
                break
        N = p * q
        lam = math.lcm(p - 1, q - 1)
        mu = pow(lam, -1, N)
        return PaillierPublic(N), PaillierSecret(N, p, q, lam, mu), f"zm:{N}"

    def encrypt(self, pk, x, rng):
        N, N2 = pk.N, pk.N2
        if not 0 <= x < N:
            raise ValueError("plaintext out of range")
        while True:
            r = rng.randrange(1, N)
            if math.gcd(r, N) == 1:
                break
        return Ciphertext((1 + x * N) * pow(r, N, N2) % N2)

    def decrypt(self, sk, c):
        N = sk.N
        u = pow(c.value, sk.lam, N * N)
        return (u - 1) // N * sk.mu % N

    def combine(self, pk, c, other, rng):
        N2 = pk.N2
        if isinstance(other, Ciphertext):
            v = c.value * other.value % N2
        else:
            v = pow(c.value, other % pk.N, N2)
        # rerandomize so the result is distributed exactly as a fresh encryption
        return Ciphertext(v * self.encrypt(pk, 0, rng).value % N2)


def keys_to_json(pk, sk):
    """Decimal big integers in a JSON envelope.  Test fixtures only."""
    return json.dumps({"scheme": "paillier", "insecure": True, "N": str(pk.N),
                       "p": str(sk.p), "q": str(sk.q)}, sort_keys=True)


def keys_from_json(text):
    d = json.loads(text)
    if d.get("scheme") != "paillier":
        raise ValueError("not a Paillier key envelope")
    p, q = int(d["p"]), int(d["q"])
    N = p * q
    if N != int(d["N"]):
        raise ValueError("N does not match its factors")
    lam = math.lcm(p - 1, q - 1)
    return PaillierPublic(N), PaillierSecret(N, p, q, lam, pow(lam, -1, N))


# --- protocols -------------------------------------------------------------

def theta_protocol(session, a, b, he=None, keys=None, *, k=40, alice="A", bob="B"):
    """Controlled-ring protocol: Alice learns ``ab + r``, Bob keeps ``-r``."""
    A, B = session[alice], session[bob]
    oa, ob = A.oracle, B.oracle
    he = he or MockHe(oa)
    pk, sk = keys or he.keygen(k, oa.id.id, oa.rng)
    c = session.send(alice, bob, he.encrypt(pk, a, oa.rng), kind="ciphertexts")
    r = B.remember("r", ob.sample())
    c1 = he.combine(pk, c, b, ob.rng)
    c2 = he.combine(pk, c1, he.encrypt(pk, r, ob.rng), ob.rng)
    c2 = session.send(bob, alice, c2, kind="ciphertexts")
    v = he.decrypt(sk, c2)
    if not oa.valid(v):
        raise Abort("theta:decrypt", [alice], "decryption is not a ring element")
    return ShareOutcome(A.remember("v", v), ob.neg(r))


def psi_kprime(M, k, dim=1):
    """``ceil(2 log2 M) + 2 + k``, plus ``ceil(log2 dim)`` for dim x dim matrices."""
    return math.ceil(2 * math.log2(M) + math.log2(dim)) + 2 + k


def _mod_and_dim(o):
    if o.kind == "matrix_ring":
        return o.params["m"], o.params["dim"]
    if o.kind in ("zm", "prime_field"):
        return o.params["m"], 1
    raise ValueError(f"psi needs Z_M or matrices over Z_M, not {o.id.id}")


def _psi(session, a, b, he, keys, k, alice, bob):
    A, B = session[alice], session[bob]
    oa, ob = A.oracle, B.oracle
    M, dim = _mod_and_dim(oa)
    he = he or Paillier()
    if keys is None:
        pk, sk, _ = he.keygen(psi_kprime(M, k, dim), oa.rng)
    else:
        pk, sk = keys
    span = 2 * 2**k * dim * M
    if pk.N <= 4 * 2**k * dim * M * M:
        raise ValueError(f"modulus N too small for M={M}, k={k}")

    def entries(o, lab):
        x = o.decode(lab)
        if x is None:
            raise Abort("psi:input", [], "invalid input label")
        return list(x) if isinstance(x, tuple) else [x]

    ea, eb = entries(oa, a), entries(ob, b)
    cts = [he.encrypt(pk, x, oa.rng) for x in ea]
    cts = session.send(alice, bob, cts, kind="ciphertexts")
    r = B.remember("r", entries(ob, ob.sample()))
    s = B.remember("s", [ob.rng.randrange(span) for _ in range(dim * dim)])
    out = []
    for i in range(dim):
        for j in range(dim):
            e = i * dim + j
            acc = he.encrypt(pk, r[e] + s[e] * M, ob.rng)
            for l in range(dim):
                acc = he.combine(pk, acc, he.combine(pk, cts[i * dim + l], eb[l * dim + j], ob.rng), ob.rng)
            out.append(acc)
    out = session.send(bob, alice, out, kind="ciphertexts")
    plain = A.remember("v", [he.decrypt(sk, c) for c in out])
    zA = [v % M for v in plain]
    zB = [(-x) % M for x in r]
    if oa.kind != "matrix_ring":
        return ShareOutcome(oa.encode(zA[0]), ob.encode(zB[0]))
    return ShareOutcome(oa.encode(tuple(zA)), ob.encode(tuple(zB)))


def psi_protocol(session, a, b, he=None, keys=None, *, k=40, alice="A", bob="B"):
    """Uncontrolled-ring protocol over ``Z_M`` in its standard representation."""
    if session[alice].oracle.kind == "matrix_ring":
        raise ValueError("use psi_matrix for matrix rings")
    return _psi(session, a, b, he, keys, k, alice, bob)


def psi_matrix(session, a, b, he=None, keys=None, *, k=40, alice="A", bob="B"):
    """Entrywise variant for ``dim x dim`` matrices over ``Z_M``: ``2 dim^2`` ciphertexts."""
    return _psi(session, a, b, he, keys, k, alice, bob)


def blinding_distance_bruteforce(M, k, a, b, r):
    """Exact distance between ``ab + r + sM`` and ``w + sM``, ``w = (ab + r) mod M``."""
    if not (2 <= M <= 8 and 0 <= k <= 6):
        raise ValueError(f"not enumerable: M={M}, k={k}")
    if not all(0 <= x < M for x in (a, b, r)):
        raise ValueError("a, b, r must lie in 0..M-1")
    span = 2 * 2**k * M
    v = a * b + r
    d1 = Counter(v + s * M for s in range(span))
    d2 = Counter(v % M + s * M for s in range(span))
    diff = sum(abs(d1[x] - d2[x]) for x in d1.keys() | d2.keys())
    return Fraction(diff, 2 * span)


def blinding_distance_worst(M, k):
    return max(blinding_distance_bruteforce(M, k, a, b, r)
               for a in range(M) for b in range(M) for r in range(M))


# --- backends --------------------------------------------------------------

class Theta(Backend):
    name = "theta"

    def __init__(self, k=40):
        self.k = k

    def __call__(self, session, a, b, *, alice="A", bob="B"):
        oa = session[alice].oracle
        he = MockHe(oa)
        # one key pair per session and key owner
        slot = ("theta", self.k, alice)
        if slot not in session.cache:
            session.cache[slot] = he.keygen(self.k, oa.id.id, oa.rng)
        return theta_protocol(session, a, b, he, session.cache[slot], alice=alice, bob=bob)


class Psi(Backend):
    name = "psi"

    def __init__(self, k=40, min_prime_bits=64):
        self.k = k
        self.he = Paillier(min_prime_bits)

    def __call__(self, session, a, b, *, alice="A", bob="B"):
        oa = session[alice].oracle
        M, dim = _mod_and_dim(oa)
        slot = ("psi", self.k, self.he.min_prime_bits, alice)
        if slot not in session.cache:
            pk, sk, _ = self.he.keygen(psi_kprime(M, self.k, dim), oa.rng)
            session.cache[slot] = (pk, sk)
        return _psi(session, a, b, self.he, session.cache[slot], self.k, alice, bob)


@register("theta")
def _run_theta(session, k=40):
    out = theta_protocol(session, session["A"].inputs["a"], session["B"].inputs["b"], k=k)
    session["A"].outputs["z"] = out.zA
    session["B"].outputs["z"] = out.zB


@register("psi")
def _run_psi(session, k=40, min_prime_bits=64):
    out = _psi(session, session["A"].inputs["a"], session["B"].inputs["b"],
               Paillier(min_prime_bits), None, k, "A", "B")
    session["A"].outputs["z"] = out.zA
    session["B"].outputs["z"] = out.zB
