"""Reference computations that share no code path with the package.

Each oracle here re-derives a quantity from first principles (power
series, quadrature, dense linear algebra) so the package's fast paths can
be checked against it.
"""

import math

import numpy as np


def taylor_expm(A, terms=30):
    """exp(A) by halving A until its norm is below 0.5, summing the power
    series directly, and squaring back up."""
    A = np.asarray(A, dtype=float)
    norm = np.abs(A).sum(axis=1).max()
    squarings = 0
    while norm > 0.5:
        A = A / 2.0
        norm /= 2.0
        squarings += 1
    out = np.eye(A.shape[0])
    term = np.eye(A.shape[0])
    for k in range(1, terms + 1):
        term = term @ A / k
        out = out + term
    for _ in range(squarings):
        out = out @ out
    return out


def random_subintensity(rng, dim, scale=1.0):
    """Random sub-intensity matrix with strictly positive exit rates."""
    Q = rng.uniform(0.0, scale, size=(dim, dim))
    np.fill_diagonal(Q, 0.0)
    exits = rng.uniform(0.05 * scale, scale, size=dim)
    np.fill_diagonal(Q, -(Q.sum(axis=1) + exits))
    return Q


def adaptive_simpson(f, a, b, tol=1e-10, max_depth=50):
    """Recursive adaptive Simpson rule for a vector-valued integrand."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        err = np.max(np.abs(left + right - whole))
        if depth >= max_depth or err <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return (recurse(a, m, fa, flm, fm, left, tol / 2.0, depth + 1)
                + recurse(m, b, fm, frm, fb, right, tol / 2.0, depth + 1))

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 0)


def dense_generator(p):
    """Dense sub-intensity matrix written directly from the block equations.

    Block order: joint (d0), widower bereaved, widower recovered,
    widow bereaved, widow recovered.
    """
    n, i, j = p.n, p.i, p.j
    m = lambda k: p.a_m + p.b_m * k ** p.c_m
    f = lambda k: p.a_f + p.b_f * k ** p.c_f
    d0, d1, d2 = n - max(i, j) + 1, n - i + 1, n - j + 1
    dim = d0 + 2 * d1 + 2 * d2
    Q = np.zeros((dim, dim))
    wb, wr = d0, d0 + d1
    fb, fr = d0 + 2 * d1, d0 + 2 * d1 + d2
    for r in range(d0):
        l = r + 1
        if l < d0:
            Q[r, r] = -(p.lambda_c + f(j + l - 1) + m(i + l - 1) + p.lambda_)
            Q[r, r + 1] = p.lambda_
            Q[r, wb + l] = f(j + l - 1)
            Q[r, fb + l] = m(i + l - 1)
        elif i < j:
            Q[r, r] = -(p.lambda_c + f(n))
            Q[r, wb + l] = f(n)
        elif i > j:
            Q[r, r] = -(p.lambda_c + m(n))
            Q[r, fb + l] = m(n)
        else:
            Q[r, r] = -(p.lambda_c + f(n) + m(n))
            Q[r, wb + d1 - 1] = f(n)
            Q[r, fb + d2 - 1] = m(n)
    for (b0, r0, d, base, rate, rec, mult) in (
        (wb, wr, d1, i, m, p.lambda_rm, p.lambda_wm),
        (fb, fr, d2, j, f, p.lambda_rf, p.lambda_wf),
    ):
        for k in range(d):
            l = k + 1
            if l < d:
                Q[b0 + k, b0 + k] = -(rec + p.lambda_in + mult * rate(base + k))
                Q[b0 + k, b0 + k + 1] = p.lambda_in
                Q[b0 + k, r0 + k + 1] = rec
                Q[r0 + k, r0 + k] = -(p.lambda_in + rate(base + k))
                Q[r0 + k, r0 + k + 1] = p.lambda_in
            else:
                Q[b0 + k, b0 + k] = -mult * rate(n)
                Q[r0 + k, r0 + k] = -rate(n)
    return Q


def pure_birth_mean(rate, t, n):
    """Mean state of a pure-birth chain on 1..n started at 1 (absorbing at n)."""
    from scipy import stats

    k = np.arange(0, n - 1)
    pmf = stats.poisson.pmf(k, rate * t)
    tail = 1.0 - pmf.sum()
    return float((k + 1) @ pmf + n * tail)


def gauss_legendre_2d(f, ax, bx, ay, by, order=8):
    nodes, weights = np.polynomial.legendre.leggauss(order)
    xs = 0.5 * (bx - ax) * nodes + 0.5 * (bx + ax)
    ys = 0.5 * (by - ay) * nodes + 0.5 * (by + ay)
    total = 0.0
    for x, wx in zip(xs, weights):
        for y, wy in zip(ys, weights):
            total += wx * wy * f(x, y)
    return total * 0.25 * (bx - ax) * (by - ay)


def binomial_se(p, n):
    return math.sqrt(p * (1.0 - p) / n)
