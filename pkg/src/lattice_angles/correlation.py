"""Smoothed r-level correlation sums of angle sets.

Three routes:

* ``correlation_direct``: all r-tuples, as the chain 1' G_1 ... G_{r-1} 1 / N
  where G_i[a, b] = F_N^{(i)}(theta_a - theta_b) is assembled only inside the
  kernel's support window (sparse when the window is short).
* ``correlation_distinct``: r-tuples of pairwise distinct indices, by walking
  paths through the same windowed graph.
* ``correlation_fourier``: the finite k-sum against lambda-products.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .circle_points import HALF_PI, AngleSet, FactoredRadius, lambda_4k, r_of
from .errors import CutoffTooSmall, TooFewPoints, TooLarge
from .kernels import Profile, SmoothingKernel

MAX_PATHS = 50_000_000


def _as_array(a) -> np.ndarray:
    return np.asarray(a.angles if isinstance(a, AngleSet) else a, dtype=float)


def pair_matrix(points: np.ndarray, profile: Profile, N: int) -> sp.csr_matrix:
    """Sparse G[a, b] = periodised profile at theta_a - theta_b, windowed by support.

    ``points`` need not be sorted; rows/cols follow the given order.
    """
    points = np.asarray(points, dtype=float)
    n = points.size
    rad = profile.support_radius * HALF_PI / N
    if 2 * rad >= HALF_PI or n <= 64:
        diff = points[:, None] - points[None, :]
        G = profile.periodized(diff, N)
        return sp.csr_matrix(G)
    order = np.argsort(points, kind="stable")
    th = points[order]
    ext = np.concatenate((th - HALF_PI, th, th + HALF_PI))
    ext_idx = np.concatenate((order, order, order))
    lo = np.searchsorted(ext, th - rad, side="left")
    hi = np.searchsorted(ext, th + rad, side="right")
    counts = hi - lo
    rows_sorted = np.repeat(np.arange(n), counts)
    starts = np.repeat(lo, counts)
    within = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    cols_pos = starts + within
    rows = order[rows_sorted]
    cols = ext_idx[cols_pos]
    vals = profile.periodized(th[rows_sorted] - ext[cols_pos], N)
    G = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    G.sum_duplicates()
    G.sort_indices()
    return G


def _check_dim(kernel: SmoothingKernel, r: int):
    if r < 2:
        raise ValueError("r must be >= 2")
    if kernel.dim != r - 1:
        raise ValueError(f"kernel dimension {kernel.dim} does not match r - 1 = {r - 1}")


def correlation_direct(a, kernel: SmoothingKernel, r: int, N: int | None = None) -> float:
    """R_r = (1/N) sum over all r-tuples of F_N(consecutive differences).

    ``N`` defaults to the number of points; pass it explicitly when the
    scale differs from the point count.
    """
    _check_dim(kernel, r)
    pts = _as_array(a)
    n = pts.size
    if n < 1:
        raise TooFewPoints("empty angle set")
    N = n if N is None else N
    v = np.ones(n)
    for profile in reversed(kernel.factors):
        G = pair_matrix(pts, profile, N)
        v = G @ v
    return math.fsum(v) / N


def _walk_distinct(pts, kernel, N, chunk=4096):
    mats = [pair_matrix(pts, p, N) for p in kernel.factors]
    n = pts.size
    total = []
    for s0 in range(0, n, chunk):
        paths = np.arange(s0, min(n, s0 + chunk))[:, None]
        w = np.ones(paths.shape[0])
        for G in mats:
            last = paths[:, -1]
            deg = np.diff(G.indptr)[last]
            m = int(deg.sum())
            if m > MAX_PATHS:
                raise TooLarge(f"{m} partial tuples exceed the windowing budget")
            rep = np.repeat(np.arange(paths.shape[0]), deg)
            start = np.repeat(G.indptr[last], deg)
            within = np.arange(m) - np.repeat(np.cumsum(deg) - deg, deg)
            pos = start + within
            nxt = G.indices[pos]
            keep = np.ones(m, dtype=bool)
            for c in range(paths.shape[1]):
                keep &= paths[rep, c] != nxt
            rep, nxt, pos = rep[keep], nxt[keep], pos[keep]
            paths = np.column_stack((paths[rep], nxt))
            w = w[rep] * G.data[pos]
        total.append(math.fsum(w))
    return math.fsum(total)


def correlation_distinct(a, kernel: SmoothingKernel, r: int, N: int | None = None) -> float:
    """R_r restricted to r-tuples of pairwise distinct indices."""
    _check_dim(kernel, r)
    pts = _as_array(a)
    n = pts.size
    if n < r:
        raise TooFewPoints(f"need at least r = {r} points, got {n}")
    N = n if N is None else N
    if r == 2:
        G = pair_matrix(pts, kernel.factors[0], N)
        return (math.fsum(G @ np.ones(n)) - math.fsum(G.diagonal())) / N
    try:
        return _walk_distinct(pts, kernel, N) / N
    except TooLarge:
        if r != 3:
            raise
    return _distinct_three(pts, kernel, N) / N


def _distinct_three(pts, kernel, N):
    # inclusion-exclusion over coincidences, for kernels too wide to window
    G1 = pair_matrix(pts, kernel.factors[0], N)
    G2 = pair_matrix(pts, kernel.factors[1], N)
    one = np.ones(pts.size)
    d1, d2 = G1.diagonal(), G2.diagonal()
    full = math.fsum(G1 @ (G2 @ one))
    ab = math.fsum(d1 * (G2 @ one))
    bc = math.fsum(G1 @ d2)
    ac = math.fsum(G1.multiply(G2.T).data)
    abc = math.fsum(d1 * d2)
    return full - ab - bc - ac + 2 * abc


def lambda_table(lam: Callable[[int], float], K: int) -> np.ndarray:
    """lam(m) for m = -K..K, index m + K."""
    return np.array([lam(m) for m in range(-K, K + 1)], dtype=float)


def fourier_chain_sum(lam_vals: np.ndarray, K: int, kernel: SmoothingKernel, N: int, r: int) -> float:
    """(1/N^r) sum_{|k_i| <= K} fhat(k/N) prod_j lam(k_{j+1} - k_j), k_0 = k_r = 0.

    ``lam_vals`` holds lam(m) for m = -2K..2K; it may be complex when
    lam(-m) = conj(lam(m)), in which case the total is real.
    """
    ks = np.arange(-K, K + 1)
    # A[a, b] = lam(k_b - k_a)
    A = lam_vals[(ks[None, :] - ks[:, None]) + 2 * K]
    v = lam_vals[ks + 2 * K]  # lam(k_1 - 0)
    v = v * kernel.factors[0].fhat(ks / N)
    for i in range(1, r - 1):
        v = (A * v[:, None]).sum(axis=0)
        v = v * kernel.factors[i].fhat(ks / N)
    # close with lam(0 - k_{r-1})
    terms = v * lam_vals[-ks + 2 * K]
    return math.fsum(np.real(terms)) / N**r


def batched_correlation(points: np.ndarray, kernel: SmoothingKernel, r: int, N: int | None = None,
                        distinct: bool = False) -> np.ndarray:
    """R_r for a batch of small point sets, rows of ``points`` (B x n), dense.

    ``distinct`` restricts to pairwise-distinct indices (r <= 3).
    """
    _check_dim(kernel, r)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    B, n = pts.shape
    N = n if N is None else N
    diff = pts[:, :, None] - pts[:, None, :]
    mats = [p.periodized(diff, N) for p in kernel.factors]
    if not distinct:
        v = np.ones((B, n))
        for G in reversed(mats):
            v = (G * v[:, None, :]).sum(axis=2)
        return v.sum(axis=1) / N
    if r == 2:
        G = mats[0]
        return (G.sum(axis=(1, 2)) - np.trace(G, axis1=1, axis2=2)) / N
    if r == 3:
        G1, G2 = mats
        d1 = np.diagonal(G1, axis1=1, axis2=2)
        d2 = np.diagonal(G2, axis1=1, axis2=2)
        row2 = G2.sum(axis=2)
        full = (G1 * row2[:, None, :]).sum(axis=(1, 2))
        ab = (d1 * row2).sum(axis=1)
        bc = (G1 * d2[:, None, :]).sum(axis=(1, 2))
        ac = (G1 * np.swapaxes(G2, 1, 2)).sum(axis=(1, 2))
        abc = (d1 * d2).sum(axis=1)
        return (full - ab - bc - ac + 2 * abc) / N
    raise ValueError("batched distinct sums support r <= 3")


def correlation_fourier(
    fr: FactoredRadius,
    kernel: SmoothingKernel,
    r: int,
    k_cutoff: int | None = None,
    tol: float = 1e-8,
) -> float:
    """R_r(n; F_N) from lambda_{4k}(n) over the box |k_i| <= k_cutoff."""
    _check_dim(kernel, r)
    N = r_of(fr)
    need = kernel.effective_fhat_cutoff * N
    if k_cutoff is None:
        if math.isinf(need):
            raise CutoffTooSmall("kernel has no finite fhat cutoff; pass k_cutoff")
        k_cutoff = int(math.ceil(need))
    K = int(k_cutoff)
    if K < need:
        tail = max(p.fhat_tail(K / N) for p in kernel.factors)
        est = tail * (2 * K + 1) ** (r - 1)
        if est > tol:
            raise CutoffTooSmall(f"truncation at k = {K} leaves an estimated error {est:.3g}")
    lam_vals = lambda_table(lambda m: lambda_4k(fr, m), 2 * K)
    return fourier_chain_sum(lam_vals, K, kernel, N, r)
