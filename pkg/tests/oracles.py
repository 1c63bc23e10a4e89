"""Slow, independent reference computations used only by the tests."""

import itertools
import math

import numpy as np

HP = math.pi / 2


def lattice_angles(n):
    """Angles mod pi/2 from all integer points on x^2 + y^2 = n.

    Each point is rotated by multiples of i into x > 0, y >= 0 with integer
    arithmetic; every orbit then appears four times.
    """
    m = math.isqrt(n)
    vals = []
    for x in range(-m, m + 1):
        for y in range(-m, m + 1):
            if x * x + y * y != n:
                continue
            u, v = x, y
            while not (u > 0 and v >= 0):
                u, v = v, -u
            vals.append(math.atan2(v, u))
    vals.sort()
    assert len(vals) % 4 == 0
    return vals[::4]


def gauss_periodized(d, N, width=1.0, J=30):
    return sum(math.exp(-math.pi * ((N / HP) * (d + j * HP) / width) ** 2) for j in range(-J, J + 1))


def brute_correlation(points, F, r, distinct=False):
    N = len(points)
    total = 0.0
    for tup in itertools.product(range(N), repeat=r):
        if distinct and len(set(tup)) < r:
            continue
        w = 1.0
        for a, b in zip(tup, tup[1:]):
            w *= F(points[a] - points[b])
        total += w
    return total / N


def alpha_by_classes(k):
    """Count subsets S of {0..r-1} with k_S = 0, then halve (S ~ S^c)."""
    kk = [0, *k, 0]
    r = len(kk) - 1
    hits = 0
    for mask in range(1 << r):
        s = sum(kk[j + 1] - kk[j] for j in range(r) if mask >> j & 1)
        hits += s == 0
    return hits // 2


def corners_in_span(basis):
    """Exhaustive scan of {0,1}^n against the span, by least squares residual."""
    B = np.array(basis, dtype=float).T
    n = B.shape[0]
    count = 0
    for v in itertools.product((0, 1), repeat=n):
        v = np.array(v, dtype=float)
        c, *_ = np.linalg.lstsq(B, v, rcond=None)
        count += np.allclose(B @ c, v, atol=1e-9)
    return count


def split_primes_trial(x):
    out = []
    for p in range(5, x + 1, 4):
        if all(p % q for q in range(2, math.isqrt(p) + 1)):
            out.append(p)
    return out
