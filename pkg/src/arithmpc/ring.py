"""Black-box finite rings.

A :class:`RingOracle` hides a concrete ring behind fixed-length byte labels.
Protocol code only ever sees labels and the oracle commands ``add``,
``subtract``, ``multiply``, ``sample``, ``one`` and ``invert``.  A label that is
not in the image of the labelling map makes the oracle answer ``None`` (the
bottom symbol); a *strict* oracle raises :class:`Bottom` instead, which is how
honest parties abort.
"""
from __future__ import annotations

import math
import random
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

COMMANDS = {
    "add": 2,
    "subtract": 2,
    "multiply": 2,
    "sample": 0,
    "one": 0,
    "invert": 1,
}

# unit fraction required before a family is flagged as a pseudo-field
PSEUDO_FIELD_THRESHOLD = 1 - Fraction(1, 2**16)


class Abort(Exception):
    """An honest party stopped the protocol."""

    def __init__(self, stage, parties=(), detail=""):
        super().__init__(f"abort at {stage}: {detail}" if detail else f"abort at {stage}")
        self.stage = stage
        self.parties = tuple(parties)
        self.detail = detail

    def to_dict(self):
        return {"stage": self.stage, "parties": list(self.parties), "detail": self.detail}


class Bottom(Abort):
    """The ring oracle answered with the bottom symbol."""

    def __init__(self, cmd):
        super().__init__("oracle", detail=f"{cmd} returned bottom")
        self.cmd = cmd


@dataclass
class CommCounter:
    """Per-party complexity counters."""

    oracle_calls: int = 0
    elements_transmitted: int = 0
    ot_invocations: int = 0
    by_command: Counter = field(default_factory=Counter)

    def reset(self):
        self.oracle_calls = 0
        self.elements_transmitted = 0
        self.ot_invocations = 0
        self.by_command.clear()


@dataclass(frozen=True)
class RingId:
    id: str
    bit_length: int


# --- representations -------------------------------------------------------

class _Labels:
    """Standard little-endian fixed-width labels for integers mod m."""

    def __init__(self, m):
        self.m = m
        self.bits = max(1, (m - 1).bit_length())
        self.nbytes = (self.bits + 7) // 8

    def encode(self, x):
        return x.to_bytes(self.nbytes, "little")

    def decode(self, label):
        if type(label) is not bytes or len(label) != self.nbytes:
            return None
        x = int.from_bytes(label, "little")
        return x if x < self.m else None


class _PermutedLabels(_Labels):
    """Keyed affine permutation of the label space ``x -> a*x + b mod 2^bits``."""

    def __init__(self, m, key_rng):
        super().__init__(m)
        size = 1 << self.bits
        self.a = key_rng.randrange(size) | 1
        self.b = key_rng.randrange(size)
        self.a_inv = pow(self.a, -1, size)
        self.mask = size - 1

    def encode(self, x):
        return ((self.a * x + self.b) & self.mask).to_bytes(self.nbytes, "little")

    def decode(self, label):
        if type(label) is not bytes or len(label) != self.nbytes:
            return None
        y = int.from_bytes(label, "little")
        if y > self.mask:
            return None
        x = ((y - self.b) * self.a_inv) & self.mask
        return x if x < self.m else None


# --- concrete rings --------------------------------------------------------

class _Zm:
    commutative = True

    def __init__(self, m):
        self.m = m
        self.size = m

    def add(self, x, y):
        return (x + y) % self.m

    def sub(self, x, y):
        return (x - y) % self.m

    def mul(self, x, y):
        return (x * y) % self.m

    def sample(self, rng):
        return rng.randrange(self.m)

    def one(self):
        return 1 % self.m

    def zero(self):
        return 0

    def inv(self, x):
        if math.gcd(x, self.m) != 1:
            return None
        return pow(x, -1, self.m)

    def elements(self):
        return range(self.m)


class _MatRing:
    """dim x dim matrices over Z_m, stored as row-major tuples."""

    def __init__(self, m, dim):
        self.m = m
        self.dim = dim
        self.size = m ** (dim * dim)
        self.commutative = dim == 1

    def add(self, x, y):
        m = self.m
        return tuple((a + b) % m for a, b in zip(x, y))

    def sub(self, x, y):
        m = self.m
        return tuple((a - b) % m for a, b in zip(x, y))

    def mul(self, x, y):
        d, m = self.dim, self.m
        out = []
        for i in range(d):
            row = x[i * d:(i + 1) * d]
            for j in range(d):
                out.append(sum(row[l] * y[l * d + j] for l in range(d)) % m)
        return tuple(out)

    def sample(self, rng):
        return tuple(rng.randrange(self.m) for _ in range(self.dim * self.dim))

    def one(self):
        d = self.dim
        return tuple(1 % self.m if i == j else 0 for i in range(d) for j in range(d))

    def zero(self):
        return (0,) * (self.dim * self.dim)

    def inv(self, x):
        # Gauss-Jordan over Z_m; fails (None) exactly when det is not a unit
        d, m = self.dim, self.m
        a = [list(x[i * d:(i + 1) * d]) + [1 if i == j else 0 for j in range(d)] for i in range(d)]
        for col in range(d):
            piv = None
            for r in range(col, d):
                if math.gcd(a[r][col], m) == 1:
                    piv = r
                    break
            if piv is None:
                return self._inv_via_adjugate(x)
            a[col], a[piv] = a[piv], a[col]
            inv = pow(a[col][col], -1, m)
            a[col] = [(v * inv) % m for v in a[col]]
            for r in range(d):
                if r != col and a[r][col]:
                    f = a[r][col]
                    a[r] = [(v - f * w) % m for v, w in zip(a[r], a[col])]
        return tuple(a[i][d + j] for i in range(d) for j in range(d))

    def _inv_via_adjugate(self, x):
        # pivoting over composite m can fail on invertible matrices; fall back to det/adjugate
        d, m = self.dim, self.m
        rows = [list(x[i * d:(i + 1) * d]) for i in range(d)]
        det = _det(rows) % m
        if math.gcd(det, m) != 1:
            return None
        dinv = pow(det, -1, m)
        out = []
        for i in range(d):
            for j in range(d):
                minor = [r[:i] + r[i + 1:] for k, r in enumerate(rows) if k != j]
                cof = (-1) ** (i + j) * (_det(minor) if minor else 1)
                out.append(cof * dinv % m)
        return tuple(out)

    def elements(self):
        return product(range(self.m), repeat=self.dim * self.dim)


def _det(rows):
    n = len(rows)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    return sum((-1) ** j * rows[0][j] * _det([r[:j] + r[j + 1:] for r in rows[1:]]) for j in range(n))


class _MatLabels:
    def __init__(self, entry_labels, dim):
        self.entry = entry_labels
        self.cells = dim * dim
        self.bits = entry_labels.bits * self.cells
        self.nbytes = entry_labels.nbytes * self.cells

    def encode(self, x):
        return b"".join(self.entry.encode(v) for v in x)

    def decode(self, label):
        if type(label) is not bytes or len(label) != self.nbytes:
            return None
        w = self.entry.nbytes
        out = []
        for i in range(self.cells):
            v = self.entry.decode(label[i * w:(i + 1) * w])
            if v is None:
                return None
            out.append(v)
        return tuple(out)


# --- the oracle ------------------------------------------------------------

class RingOracle:
    """Oracle access to one member of a ring family.

    ``spawn`` hands out per-party views sharing the ring and the labelling but
    owning their own randomness stream and :class:`CommCounter`.
    """

    def __init__(self, ring, labels, ring_id, kind, *, rng=None, strict=False,
                 has_inverse=True, is_field=False, pseudo_field=False, params=None):
        self._ring = ring
        self._labels = labels
        self.id = ring_id
        self.kind = kind
        self.params = params or {}
        self.rng = rng if rng is not None else random.Random(0)
        self.strict = strict
        self.has_inverse = has_inverse
        self.is_field = is_field
        self.pseudo_field = pseudo_field or is_field
        self.commutative = ring.commutative
        self.counter = CommCounter()

    def __repr__(self):
        return f"RingOracle({self.id.id!r})"

    @property
    def size(self):
        return self._ring.size

    @property
    def label_bytes(self):
        return self._labels.nbytes

    def spawn(self, rng=None, *, strict=None):
        child = RingOracle.__new__(RingOracle)
        child.__dict__.update(self.__dict__)
        child.rng = rng if rng is not None else random.Random(self.rng.getrandbits(64))
        child.counter = CommCounter()
        if strict is not None:
            child.strict = strict
        return child

    @contextmanager
    def lenient(self):
        """Temporarily answer bottom with ``None`` instead of raising."""
        old = self.strict
        self.strict = False
        try:
            yield self
        finally:
            self.strict = old

    # representation access, for tests and for the one protocol that needs it
    def encode(self, x):
        return self._labels.encode(x)

    def decode(self, label):
        return self._labels.decode(label)

    def valid(self, label):
        return self._labels.decode(label) is not None

    def elements(self):
        """All labels of the ring (small rings only)."""
        return [self._labels.encode(x) for x in self._ring.elements()]

    def from_int(self, x):
        """Label of the integer ``x`` mapped into the ring (scalar matrices for matrix rings)."""
        if isinstance(self._ring, _MatRing):
            d, m = self._ring.dim, self._ring.m
            return self.encode(tuple(x % m if i == j else 0 for i in range(d) for j in range(d)))
        return self.encode(x % self._ring.m)

    # ---- commands ----
    def call(self, cmd, *args):
        if cmd not in COMMANDS or len(args) != COMMANDS[cmd]:
            raise ValueError(f"bad oracle command {cmd!r} with {len(args)} argument(s)")
        self.counter.oracle_calls += 1
        self.counter.by_command[cmd] += 1
        ring, labels = self._ring, self._labels
        if cmd == "sample":
            return labels.encode(ring.sample(self.rng))
        if cmd == "one":
            return labels.encode(ring.one())
        xs = [labels.decode(a) for a in args]
        if any(x is None for x in xs):
            return self._bottom(cmd)
        if cmd == "add":
            r = ring.add(*xs)
        elif cmd == "subtract":
            r = ring.sub(*xs)
        elif cmd == "multiply":
            r = ring.mul(*xs)
        else:
            if not self.has_inverse:
                raise ValueError(f"{self.id.id} does not support invert")
            r = ring.inv(xs[0])
            if r is None:
                return self._bottom(cmd)
        return labels.encode(r)

    def _bottom(self, cmd):
        if self.strict:
            raise Bottom(cmd)
        return None

    def add(self, x, y):
        return self.call("add", x, y)

    def sub(self, x, y):
        return self.call("subtract", x, y)

    def mul(self, x, y):
        return self.call("multiply", x, y)

    def sample(self):
        return self.call("sample")

    def one(self):
        return self.call("one")

    def invert(self, x):
        return self.call("invert", x)

    def zero(self):
        o = self.one()
        return self.sub(o, o)

    def neg(self, x):
        return self.sub(self.sub(x, x), x)


def _pseudo_field_zm(m):
    # fraction of units is phi(m)/m >= 1 - sum_p 1/p over prime divisors
    units = Fraction(_phi(m), m)
    return units >= PSEUDO_FIELD_THRESHOLD


def _phi(m):
    result, n, p = m, m, 2
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            result -= result // p
        p += 1
    if n > 1:
        result -= result // n
    return result


def is_probable_prime(n, rounds=64, rng=None):
    """Trial division followed by Miller-Rabin."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47):
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    rng = rng or random.Random(n)
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _key_rng(seed, tag):
    return random.Random(f"{tag}:{seed}")


def make_zm_family(m, *, seed=0, labels="standard", label_key=0):
    """Oracle for Z_m with labels ``0..m-1`` in little-endian fixed width."""
    if not isinstance(m, int) or m < 2:
        raise ValueError("Z_m needs m >= 2")
    lab = _Labels(m) if labels == "standard" else _PermutedLabels(m, _key_rng(label_key, f"zm{m}"))
    prime = is_probable_prime(m)
    rid = RingId(f"zm:{m}", lab.bits)
    return RingOracle(_Zm(m), lab, rid, "zm", rng=random.Random(seed), is_field=prime,
                      pseudo_field=prime or _pseudo_field_zm(m), params={"m": m})


def make_prime_field(p, *, seed=0, labels="standard", label_key=0):
    if not is_probable_prime(p):
        raise ValueError(f"{p} is not prime")
    o = make_zm_family(p, seed=seed, labels=labels, label_key=label_key)
    o.kind = "prime_field"
    o.id = RingId(f"gf:{p}", o.id.bit_length)
    return o


def make_matrix_family(m, dim, *, seed=0, labels="standard", label_key=0):
    """Oracle for dim x dim matrices over Z_m, labels concatenated row-major."""
    if not isinstance(m, int) or m < 2:
        raise ValueError("matrix ring needs m >= 2")
    if not isinstance(dim, int) or dim < 1:
        raise ValueError("matrix ring needs dim >= 1")
    entry = _Labels(m) if labels == "standard" else _PermutedLabels(m, _key_rng(label_key, f"mat{m}"))
    lab = _MatLabels(entry, dim)
    if dim == 1:
        prime = is_probable_prime(m)
        pf = prime or _pseudo_field_zm(m)
    else:
        prime = False
        pf = _gl_fraction_lower_bound(m, dim) >= PSEUDO_FIELD_THRESHOLD
    rid = RingId(f"mat:{m}:{dim}", lab.bits)
    return RingOracle(_MatRing(m, dim), lab, rid, "matrix_ring", rng=random.Random(seed),
                      is_field=prime, pseudo_field=pf, params={"m": m, "dim": dim})


def _gl_fraction_lower_bound(m, dim):
    # |GL(d, Z_m)| / m^(d^2) = prod_{p | m} prod_{i=1..d} (1 - p^-i)
    frac = Fraction(1)
    n, p = m, 2
    primes = []
    while p * p <= n:
        if n % p == 0:
            primes.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        primes.append(n)
    for p in primes:
        for i in range(1, dim + 1):
            frac *= 1 - Fraction(1, p**i)
    return frac


def parse_ring(spec, *, seed=0, labels="standard", label_key=0):
    """Parse ``zm:<m>``, ``gf:<p>`` or ``mat:<m>:<dim>``."""
    parts = spec.strip().split(":")
    try:
        if parts[0] == "zm" and len(parts) == 2:
            return make_zm_family(int(parts[1]), seed=seed, labels=labels, label_key=label_key)
        if parts[0] == "gf" and len(parts) == 2:
            return make_prime_field(int(parts[1]), seed=seed, labels=labels, label_key=label_key)
        if parts[0] == "mat" and len(parts) == 3:
            return make_matrix_family(int(parts[1]), int(parts[2]), seed=seed, labels=labels,
                                      label_key=label_key)
    except ValueError as e:
        raise ValueError(f"bad ring spec {spec!r}: {e}") from None
    raise ValueError(f"bad ring spec {spec!r}")


def is_unit_fraction_estimate(oracle, trials=None):
    """Fraction of sampled elements that ``invert`` accepts.

    With ``trials=None`` the ring is enumerated exhaustively (small rings only).
    """
    if not oracle.has_inverse:
        raise ValueError("oracle has no invert command")
    o = oracle.spawn(strict=False) if oracle.strict else oracle
    if trials is None:
        xs = o.elements()
    else:
        xs = [o.sample() for _ in range(trials)]
    if not xs:
        return Fraction(0)
    return Fraction(sum(o.invert(x) is not None for x in xs), len(xs))
