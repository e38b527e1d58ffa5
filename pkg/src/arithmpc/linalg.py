"""Vector, matrix and polynomial arithmetic over oracle labels.

Everything here goes through the ring oracle; nothing looks inside a label.
Products keep their left/right order so the helpers are usable over
noncommutative rings where that makes sense.
"""
from __future__ import annotations


def vsum(o, xs):
    it = iter(xs)
    try:
        acc = next(it)
    except StopIteration:
        return o.zero()
    for x in it:
        acc = o.add(acc, x)
    return acc


def vadd(o, xs, ys):
    return [o.add(x, y) for x, y in zip(xs, ys)]


def vsub(o, xs, ys):
    return [o.sub(x, y) for x, y in zip(xs, ys)]


def scale_left(o, a, xs):
    return [o.mul(a, x) for x in xs]


def dot(o, row, vec):
    return vsum(o, (o.mul(r, v) for r, v in zip(row, vec)))


def matvec(o, mat, vec):
    return [dot(o, row, vec) for row in mat]


def matmul(o, a, b):
    cols = list(zip(*b))
    return [[dot(o, row, col) for col in cols] for row in a]


def identity(o, k):
    one, zero = o.one(), o.zero()
    return [[one if i == j else zero for j in range(k)] for i in range(k)]


def random_vector(o, n):
    return [o.sample() for _ in range(n)]


def random_matrix(o, rows, cols):
    return [[o.sample() for _ in range(cols)] for _ in range(rows)]


def ring_int(o, k):
    """Label of the integer k (as k * 1) by double-and-add through the oracle."""
    one = o.one()
    zero = o.sub(one, one)
    neg = k < 0
    k = abs(k)
    acc, base = zero, one
    while k:
        if k & 1:
            acc = o.add(acc, base)
        base = o.add(base, base)
        k >>= 1
    return o.sub(zero, acc) if neg else acc


def invert_matrix(o, mat):
    """Gauss-Jordan inverse over a field (or pseudo-field) oracle.

    Returns ``None`` when the matrix is singular or a pivot inversion hits a
    non-unit.
    """
    k = len(mat)
    zero = o.zero()
    one = o.one()
    a = [list(row) + [one if i == j else zero for j in range(k)] for i, row in enumerate(mat)]
    for col in range(k):
        piv = None
        for r in range(col, k):
            if a[r][col] != zero:
                inv = o.invert(a[r][col])
                if inv is not None:
                    piv = r
                    break
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        a[col] = [o.mul(inv, v) for v in a[col]]
        for r in range(k):
            if r != col and a[r][col] != zero:
                f = a[r][col]
                a[r] = [o.sub(v, o.mul(f, w)) for v, w in zip(a[r], a[col])]
    return [row[k:] for row in a]


def unit_upper_left_inverse(o, u):
    """Left inverse H (H U = I) of a unit upper-triangular U.

    Uses only add, subtract and multiply; H is again unit upper-triangular.
    """
    k = len(u)
    one = o.one()
    zero = o.sub(one, one)
    h = [[one if i == j else zero for j in range(k)] for i in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            acc = zero
            for l in range(i, j):
                acc = o.add(acc, o.mul(h[i][l], u[l][j]))
            h[i][j] = o.sub(zero, acc)
    return h


# --- polynomials (fields only) --------------------------------------------

def poly_eval(o, coeffs, x):
    """Horner evaluation; coeffs[0] is the constant term."""
    if not coeffs:
        return o.zero()
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = o.add(o.mul(acc, x), c)
    return acc


def lagrange_weights(o, xs):
    """``1 / prod_{j != i} (x_i - x_j)`` for each point."""
    ws = []
    for i, xi in enumerate(xs):
        den = o.one()
        for j, xj in enumerate(xs):
            if j != i:
                den = o.mul(den, o.sub(xi, xj))
        inv = o.invert(den)
        if inv is None:
            raise ValueError("interpolation points are not distinct")
        ws.append(inv)
    return ws


def lagrange_row(o, xs, at, weights=None):
    """Coefficients c_i with P(at) = sum_i c_i P(xs[i]) for deg P < len(xs)."""
    ws = lagrange_weights(o, xs) if weights is None else weights
    diffs = [o.sub(at, x) for x in xs]
    # prefix/suffix products give prod_{j != i} (at - x_j) without division
    n = len(xs)
    pre = [o.one()]
    for d in diffs[:-1]:
        pre.append(o.mul(pre[-1], d))
    suf = [o.one()] * n
    for i in range(n - 2, -1, -1):
        suf[i] = o.mul(suf[i + 1], diffs[i + 1])
    return [o.mul(o.mul(pre[i], suf[i]), ws[i]) for i in range(n)]


def interpolation_matrix(o, src, dst):
    """Matrix E with (E v)_j = P(dst[j]) where P interpolates v on src."""
    ws = lagrange_weights(o, src)
    return [lagrange_row(o, src, y, ws) for y in dst]


def interpolate_coeffs(o, xs, ys):
    """Coefficient form of the unique polynomial of degree < len(xs) through the points."""
    n = len(xs)
    zero = o.zero()
    coeffs = [zero] * n
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        basis = [o.one()]
        den = o.one()
        for j, xj in enumerate(xs):
            if j == i:
                continue
            # basis *= (X - xj)
            nxt = [zero] * (len(basis) + 1)
            for d, c in enumerate(basis):
                nxt[d + 1] = o.add(nxt[d + 1], c)
                nxt[d] = o.sub(nxt[d], o.mul(c, xj))
            basis = nxt
            den = o.mul(den, o.sub(xi, xj))
        inv = o.invert(den)
        if inv is None:
            raise ValueError("interpolation points are not distinct")
        f = o.mul(yi, inv)
        for d, c in enumerate(basis):
            coeffs[d] = o.add(coeffs[d], o.mul(f, c))
    return coeffs


def distinct_points(o, count, *, exclude=(), structured=False, max_tries=None):
    """Distinct field points, sampled at random or as 1, 2, 3, ..."""
    seen = set(exclude)
    pts = []
    if structured:
        one = o.one()
        x = o.sub(one, one)
        steps = 0
        limit = max_tries or (count + len(seen) + 1) * 4
        while len(pts) < count:
            x = o.add(x, one)
            steps += 1
            if x in seen:
                if steps > limit:
                    raise ValueError("field too small for the requested points")
                continue
            seen.add(x)
            pts.append(x)
        return pts
    limit = max_tries or 64 * (count + len(seen)) + 64
    tries = 0
    while len(pts) < count:
        if tries > limit:
            raise ValueError("field too small for the requested points")
        tries += 1
        x = o.sample()
        if x not in seen:
            seen.add(x)
            pts.append(x)
    return pts
