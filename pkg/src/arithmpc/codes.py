"""Noisy encodings.

Two families live here:

* the statistically hiding encoding of a single ring element as a pair of
  vectors plus a hidden selection pattern, together with an exact
  brute-force computation of how far its public part is from uniform;
* the linear-code encoding ``v = Gu`` with uniform noise off a secret set of
  clean coordinates ``L``, with generators for random codes over fields,
  unit-triangular codes over arbitrary unital rings, Reed-Solomon codes and
  an SL(k) random-walk variant.

Indices in ``L`` are 0-based.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import linalg as la


# --- statistical encoding --------------------------------------------------

@dataclass
class StatEncoding:
    v0: list
    v1: list
    sigma: list

    @property
    def n(self):
        return len(self.sigma)

    def public(self):
        return self.v0, self.v1


def stat_encode(o, x, n):
    """Hide ``x`` as ``sum_i v^{sigma_i}_i`` in a pair of random vectors."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if not o.valid(x):
        return None
    rng = o.rng
    sigma = [rng.getrandbits(1) for _ in range(n)]
    u = [o.sample() for _ in range(n - 1)]
    u.append(o.sub(x, la.vsum(o, u)))
    v0, v1 = [], []
    for ui, s in zip(u, sigma):
        other = o.sample()
        if s:
            v0.append(other)
            v1.append(ui)
        else:
            v0.append(ui)
            v1.append(other)
    return StatEncoding(v0, v1, sigma)


def stat_reconstruct(enc, o):
    if not (len(enc.v0) == len(enc.v1) == len(enc.sigma)):
        raise ValueError("encoding vectors have different lengths")
    return la.vsum(o, (b if s else a for a, b, s in zip(enc.v0, enc.v1, enc.sigma)))


ENUMERATION_LIMIT = 2**26


def stat_distance_bruteforce(o, n, x):
    """Exact statistical distance of the public part of ``stat_encode(x, n)`` from uniform.

    For a fixed pair ``(v0, v1)`` the encoding puts probability
    ``N / (2^n |R|^(2n-1))`` on it, where ``N`` counts patterns selecting a
    vector that sums to ``x``.  The sum over all pairs is enumerated.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    r = o.size
    if r > 4 or n > 5 or r ** (2 * n) * 2**n > ENUMERATION_LIMIT:
        raise ValueError(f"not enumerable: |R|={r}, n={n}")
    elems = o.elements()
    index = {lab: i for i, lab in enumerate(elems)}
    if x not in index:
        raise ValueError("x is not a valid label")
    xi = index[x]
    table = np.empty((r, r), dtype=np.int64)
    for i, a in enumerate(elems):
        for j, b in enumerate(elems):
            table[i, j] = index[o.add(a, b)]
    # every (v0, v1) as rows of 2n element indices: columns 0..n-1 are v0, n..2n-1 are v1
    grid = np.indices((r,) * (2 * n), dtype=np.int64).reshape(2 * n, -1).T
    hits = np.zeros(grid.shape[0], dtype=np.int64)
    for sigma in product((0, 1), repeat=n):
        acc = grid[:, sigma[0] * n]
        for i in range(1, n):
            acc = table[acc, grid[:, sigma[i] * n + i]]
        hits += acc == xi
    total = int(np.abs(hits * r - 2**n).sum())
    return Fraction(total, 2 * 2**n * r ** (2 * n))


# --- linear codes ----------------------------------------------------------

@dataclass
class CodeGenOutput:
    scheme: str
    G: list
    H: list
    L: list
    n: int
    k: int
    ell: int
    t: int
    xs: list = None
    ys: list = None
    params: dict = field(default_factory=dict)

    def restrict(self, vec):
        return [vec[i] for i in self.L]

    def decode(self, o, w_L):
        """``H w_L``."""
        return la.matvec(o, self.H, w_L)


@dataclass
class NoisyEncoding:
    G: list
    v: list
    H: list = None
    L: list = None
    u: list = None

    def public(self):
        return self.G, self.v


def _random_subset(rng, n, size):
    return sorted(rng.sample(range(n), size))


def gen_rand_code(o, k, *, max_trials=None):
    """Random ``2k x k`` code over a field or pseudo-field.

    Up to ``k`` random subsets are tried for a non-singular ``G|_L``; failing
    that, ``G`` gets the identity in its first ``k`` rows and ``L = {0..k-1}``.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if not o.has_inverse:
        raise ValueError("random codes need an invert command")
    n = 2 * k
    G = la.random_matrix(o, n, k)
    H = None
    trials = max_trials if max_trials is not None else k
    with o.lenient():
        for _ in range(trials):
            L = _random_subset(o.rng, n, k)
            H = la.invert_matrix(o, [G[i] for i in L])
            if H is not None:
                break
    if H is None:
        G[:k] = la.identity(o, k)
        L = list(range(k))
        H = la.identity(o, k)
    return CodeGenOutput("rand", G, H, L, n, k, k, 1)


def gen_ring_code(o, k):
    """``G = [A; B]`` with unit upper-triangular ``A, B``; no inversion needed."""
    if k < 1:
        raise ValueError("k must be positive")
    one = o.one()
    zero = o.sub(one, one)

    def unit_upper():
        return [[one if i == j else (o.sample() if j > i else zero) for j in range(k)]
                for i in range(k)]

    A, B = unit_upper(), unit_upper()
    L = [i + k * o.rng.getrandbits(1) for i in range(k)]
    G = A + B
    H = la.unit_upper_left_inverse(o, [G[i] for i in L])
    return CodeGenOutput("ring", G, H, L, 2 * k, k, k, 1)


def gen_slwalk_code(o, k, *, steps=None):
    """``G|_L`` and ``H`` from two opposite random walks in SL(k, R).

    Each step adds or subtracts one row (or column) of the walk matrix to
    another; the partner walk applies the inverse step on the other side so
    that ``H G|_L = I`` holds throughout.
    """
    if k < 1:
        raise ValueError("k must be positive")
    n = 2 * k
    steps = 16 * k * k if steps is None else steps
    X = la.identity(o, k)
    Y = la.identity(o, k)
    rng = o.rng
    for _ in range(steps if k > 1 else 0):
        i, j = rng.sample(range(k), 2)
        plus = rng.getrandbits(1)
        op, inv = (o.add, o.sub) if plus else (o.sub, o.add)
        if rng.getrandbits(1):
            # X <- E X (row_i += s row_j), Y <- Y E^-1 (col_j -= s col_i)
            X[i] = [op(a, b) for a, b in zip(X[i], X[j])]
            for row in Y:
                row[j] = inv(row[j], row[i])
        else:
            # X <- X E (col_j += s col_i), Y <- E^-1 Y (row_i -= s row_j)
            for row in X:
                row[j] = op(row[j], row[i])
            Y[i] = [inv(a, b) for a, b in zip(Y[i], Y[j])]
    L = _random_subset(rng, n, k)
    G = [None] * n
    for r, i in enumerate(L):
        G[i] = X[r]
    for i in range(n):
        if G[i] is None:
            G[i] = la.random_vector(o, k)
    return CodeGenOutput("slwalk", G, Y, L, n, k, k, 1, params={"steps": steps})


def gen_rs_code(o, k, c=8, *, t=None, eval_points="random", extra_clean=0):
    """Reed-Solomon code: extrapolate degree ``k-1`` polynomials from ``x`` to ``y`` points.

    ``H`` maps the values at ``2k-1`` clean points to the values at the ``x``
    points of the unique polynomial of degree at most ``2(k-1)`` through them.
    ``extra_clean`` appends that many further clean indices to ``L`` (after
    the first ``2k-1``) for a receiver-side degree check.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if c <= 4:
        raise ValueError("RS rate constant c must exceed 4")
    if not o.has_inverse:
        raise ValueError("RS codes need a field")
    n = c * k
    ell = 2 * k - 1
    if o.size < n + k:
        raise ValueError(f"field of size {o.size} cannot supply {n + k} distinct points")
    t = k // 2 if t is None else t
    if not 1 <= t <= k:
        raise ValueError("t must be in 1..k")
    pts = la.distinct_points(o, n + k, structured=(eval_points == "structured"))
    xs, ys = pts[:k], pts[k:]
    G = la.interpolation_matrix(o, xs, ys)
    if ell + extra_clean > n:
        raise ValueError("too many clean coordinates")
    picked = o.rng.sample(range(n), ell + extra_clean)
    L = sorted(picked[:ell]) + picked[ell:]
    H = la.interpolation_matrix(o, [ys[i] for i in L[:ell]], xs)
    params = {"c": c, "eval_points": eval_points}
    if extra_clean:
        params["extra_clean"] = extra_clean
    return CodeGenOutput("rs", G, H, L, n, k, len(L), t, xs=xs, ys=ys, params=params)


GENERATORS = {
    "rand": gen_rand_code,
    "ring": gen_ring_code,
    "slwalk": gen_slwalk_code,
    "rs": gen_rs_code,
}


def noisy_encode(code, o, x):
    """Encode ``x`` (``t`` elements) as ``v``: clean on ``L``, uniform elsewhere."""
    x = list(x)
    if len(x) > code.k:
        raise ValueError(f"cannot encode {len(x)} elements with k={code.k}")
    if any(len(row) != code.k for row in code.G) or len(code.G) != code.n:
        raise ValueError("generator matrix has the wrong shape")
    u = x + la.random_vector(o, code.k - len(x))
    Gu = la.matvec(o, code.G, u)
    clean = set(code.L)
    v = [Gu[i] if i in clean else o.sample() for i in range(code.n)]
    return NoisyEncoding(code.G, v, code.H, list(code.L), u)


# --- serialization ---------------------------------------------------------

_MAGIC = b"NCG1"


def _pack_matrix(buf, name, mat):
    rows = len(mat)
    cols = len(mat[0]) if rows else 0
    width = len(mat[0][0]) if rows and cols else 0
    nb = name.encode()
    buf += struct.pack("<I", len(nb)) + nb + struct.pack("<III", rows, cols, width)
    for row in mat:
        for lab in row:
            buf += lab


def _unpack_matrix(data, pos):
    (ln,) = struct.unpack_from("<I", data, pos)
    pos += 4
    name = data[pos:pos + ln].decode()
    pos += ln
    rows, cols, width = struct.unpack_from("<III", data, pos)
    pos += 12
    mat = []
    for _ in range(rows):
        row = []
        for _ in range(cols):
            row.append(bytes(data[pos:pos + width]))
            pos += width
        mat.append(row)
    return name, mat, pos


def dump_code(code):
    """Length-prefixed binary container; matrices are row-major label arrays."""
    meta = json.dumps({"scheme": code.scheme, "n": code.n, "k": code.k, "ell": code.ell,
                       "t": code.t, "L": code.L, "params": code.params}, sort_keys=True).encode()
    buf = bytearray(_MAGIC)
    buf += struct.pack("<I", len(meta)) + meta
    sections = [("G", code.G), ("H", code.H)]
    if code.xs is not None:
        sections += [("xs", [code.xs]), ("ys", [code.ys])]
    buf += struct.pack("<I", len(sections))
    for name, mat in sections:
        _pack_matrix(buf, name, mat)
    return bytes(buf)


def load_code(data):
    if data[:4] != _MAGIC:
        raise ValueError("not a code container")
    (ln,) = struct.unpack_from("<I", data, 4)
    meta = json.loads(data[8:8 + ln])
    pos = 8 + ln
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    mats = {}
    for _ in range(count):
        name, mat, pos = _unpack_matrix(data, pos)
        mats[name] = mat
    return CodeGenOutput(meta["scheme"], mats["G"], mats["H"], meta["L"], meta["n"], meta["k"],
                         meta["ell"], meta["t"], xs=mats.get("xs", [None])[0],
                         ys=mats.get("ys", [None])[0], params=meta["params"])


def code_to_json(code):
    """Debug dump with labels as hex strings."""
    def hexmat(m):
        return [[lab.hex() for lab in row] for row in m]

    out = {"scheme": code.scheme, "n": code.n, "k": code.k, "ell": code.ell, "t": code.t,
           "L": code.L, "params": code.params, "G": hexmat(code.G), "H": hexmat(code.H)}
    if code.xs is not None:
        out["xs"] = [x.hex() for x in code.xs]
        out["ys"] = [y.hex() for y in code.ys]
    return out
