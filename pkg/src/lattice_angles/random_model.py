"""Random model for the angles of a squarefree radius: M iid uniform angles
theta_1..theta_M on [0, pi/2) and their 2^M subset sums x_J.

Every sample i under a base seed s draws from its own Philox stream keyed by
(s, i), so Monte Carlo results do not depend on how samples are scheduled.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import stats

from .circle_points import HALF_PI, reduce_quarter
from .correlation import (
    batched_correlation,
    correlation_direct,
    correlation_distinct,
    fourier_chain_sum,
)
from .errors import InfeasibleExact, RankDeficient, TooLarge
from .kernels import SmoothingKernel
from .subsets import alpha

MAX_POINTS = 1 << 22


def stream(seed_base: int, index: int) -> np.random.Generator:
    """Independent generator for sample ``index`` under ``seed_base``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed_base), int(index)])))


@dataclass(frozen=True)
class RandomRealization:
    M: int
    thetas: np.ndarray
    seed: int = 0

    def __post_init__(self):
        th = np.array(self.thetas, dtype=float)
        th.setflags(write=False)
        object.__setattr__(self, "thetas", th)
        if th.shape != (self.M,):
            raise ValueError("need exactly M angles")


def sample_realization(M: int, seed: int, index: int = 0) -> RandomRealization:
    return RandomRealization(M, stream(seed, index).uniform(0.0, HALF_PI, M), seed)


def sample_thetas(M: int, n_samples: int, seed_base: int) -> np.ndarray:
    """(n_samples x M) angles, row i from stream (seed_base, i)."""
    out = np.empty((n_samples, M))
    for i in range(n_samples):
        out[i] = stream(seed_base, i).uniform(0.0, HALF_PI, M)
    return out


def x_J(rr: RandomRealization, J: Iterable[int]) -> float:
    """sum_{j in J} theta_j mod pi/2, J a subset of {1..M}."""
    J = set(J)
    if any(not 1 <= j <= rr.M for j in J):
        raise ValueError("J must be a subset of 1..M")
    return float(reduce_quarter(math.fsum(rr.thetas[j - 1] for j in J)))


def subset_angles(thetas: np.ndarray) -> np.ndarray:
    """All 2^M values x_J; bit j-1 of the index marks j in J."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.ndim == 1:
        return subset_angles(thetas[None, :])[0]
    acc = np.zeros((thetas.shape[0], 1))
    for j in range(thetas.shape[1]):
        acc = np.concatenate((acc, acc + thetas[:, j : j + 1]), axis=1)
    return reduce_quarter(acc)


def random_lambda(rr: RandomRealization | np.ndarray, k: int):
    """prod_l (1 + e^{4ik theta_l}); accepts a realization or an array of theta rows."""
    th = rr.thetas if isinstance(rr, RandomRealization) else np.asarray(rr, dtype=float)
    vals = np.prod(1.0 + np.exp(4j * k * th), axis=-1)
    return complex(vals) if np.ndim(vals) == 0 else vals


def random_lambda_subsets(rr: RandomRealization, k: int) -> complex:
    """sum_J e^{4ik x_J}."""
    return complex(np.exp(4j * k * subset_angles(rr.thetas)).sum())


def random_lambda_product(thetas: np.ndarray, k: Sequence[int]) -> np.ndarray:
    """prod_{j=0}^{r-1} lambda_{4(k_{j+1}-k_j)} for each theta row (real part)."""
    kk = [0, *[int(v) for v in k], 0]
    out = np.ones(np.asarray(thetas).shape[:-1], dtype=complex)
    for j in range(len(kk) - 1):
        out = out * random_lambda(thetas, kk[j + 1] - kk[j])
    return out.real


def expected_lambda_product(k: Sequence[int], M: int) -> int:
    return (2 * alpha(k)) ** M


def shifted_points(rr: RandomRealization, n0_angles: Sequence[float] = (0.0,)) -> np.ndarray:
    """The multiset {beta + x_J}, beta over the n0 angles."""
    base = subset_angles(rr.thetas)
    betas = np.asarray(n0_angles, dtype=float)
    if base.size * betas.size > MAX_POINTS:
        raise TooLarge(f"{base.size * betas.size} points exceed {MAX_POINTS}")
    return reduce_quarter((betas[:, None] + base[None, :]).ravel())


def R_r_random(rr: RandomRealization, n0_angles, kernel: SmoothingKernel, r: int) -> float:
    pts = shifted_points(rr, n0_angles)
    return correlation_direct(pts, kernel, r)


def R_r_star_random(rr: RandomRealization, n0_angles, kernel: SmoothingKernel, r: int) -> float:
    pts = shifted_points(rr, n0_angles)
    return correlation_distinct(pts, kernel, r)


def R_r_random_fourier(rr: RandomRealization, n0_angles, kernel: SmoothingKernel, r: int, K: int) -> float:
    """(1/N^r) sum_k fhat(k/N) ell_k(n0) prod_j lambda(rr) over |k_i| <= K."""
    betas = np.asarray(n0_angles, dtype=float)
    N = betas.size << rr.M
    ms = np.arange(-2 * K, 2 * K + 1)
    lam = np.array([np.exp(4j * m * betas).sum() * random_lambda(rr, int(m)) for m in ms])
    return fourier_chain_sum(lam, K, kernel, N, r)


def expected_R_r(kernel: SmoothingKernel, r: int, M: int, n0_angles=(0.0,), K: int | None = None,
                 max_terms: int = 5_000_000) -> float:
    """E R_r = (1/N^r) sum_k fhat(k/N) ell_k(n0) (2 alpha(k))^M over the k-box."""
    betas = np.asarray(n0_angles, dtype=float)
    N = betas.size << M
    if K is None:
        K = int(math.ceil(kernel.effective_fhat_cutoff * N))
    if (2 * K + 1) ** (r - 1) > max_terms:
        raise TooLarge(f"k-box of size {(2 * K + 1) ** (r - 1)} exceeds {max_terms}")
    lam0 = {m: np.exp(4j * m * betas).sum() for m in range(-2 * K, 2 * K + 1)}
    terms = []
    for k in itertools.product(range(-K, K + 1), repeat=r - 1):
        kk = [0, *k, 0]
        ell = 1.0 + 0j
        for j in range(r):
            ell *= lam0[kk[j + 1] - kk[j]]
        w = kernel.fhat(np.array(k, dtype=float) / N)
        terms.append(float(w) * ell.real * (2 * alpha(k)) ** M)
    return math.fsum(terms) / N**r


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    variance: float
    stderr: float
    n_samples: int

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "MCEstimate":
        v = np.asarray(values, dtype=float)
        n = v.size
        mean = math.fsum(v) / n
        var = math.fsum((v - mean) ** 2) / (n - 1) if n > 1 else 0.0
        return cls(mean, var, math.sqrt(var / n), n)

    def to_dict(self) -> dict:
        return {"mean": self.mean, "variance": self.variance, "stderr": self.stderr, "n_samples": self.n_samples}


def run_mc(statistic: Callable[[RandomRealization], float], M: int, n_samples: int, seed_base: int,
           threads: int = 1) -> MCEstimate:
    """Evaluate a statistic on samples 0..n_samples-1; the reduction is in index order."""
    def one(i):
        return float(statistic(sample_realization(M, seed_base, i)))

    if threads <= 1:
        vals = [one(i) for i in range(n_samples)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            vals = list(ex.map(one, range(n_samples)))
    return MCEstimate.from_values(vals)


def mc_lambda_product(k: Sequence[int], M: int, n_samples: int, seed_base: int) -> MCEstimate:
    return MCEstimate.from_values(random_lambda_product(sample_thetas(M, n_samples, seed_base), k))


def mc_small_correlation(kernel: SmoothingKernel, r: int, M: int, n_samples: int, seed_base: int,
                         n0_angles=(0.0,), distinct: bool = False, chunk: int = 4096):
    """Per-sample R_r (or R_r*) for small N, batched; returns the value array."""
    th = sample_thetas(M, n_samples, seed_base)
    betas = np.asarray(n0_angles, dtype=float)
    out = []
    for s in range(0, n_samples, chunk):
        base = subset_angles(th[s : s + chunk])
        pts = reduce_quarter((betas[None, :, None] + base[:, None, :]).reshape(base.shape[0], -1))
        out.append(batched_correlation(pts, kernel, r, distinct=distinct))
    return np.concatenate(out)


# ---- generic tuples and rank checks ----------------------------------------


def _bits(masks: np.ndarray, M: int) -> np.ndarray:
    return ((masks[..., None] >> np.arange(M)) & 1).astype(np.int64)


def full_rank(W: np.ndarray) -> np.ndarray:
    """For a stack of integer matrices (B x m x n), whether each has rank m.

    Exact: rank m over Q iff the Gram determinant det(W W^T) is nonzero.  The
    Gram matrix is positive semidefinite, so a zero leading minor already
    means dependence and fraction-free elimination needs no pivoting.
    """
    W = np.asarray(W, dtype=np.int64)
    G = np.einsum("bik,bjk->bij", W, W)
    B, m, _ = G.shape
    ok = np.ones(B, dtype=bool)
    prev = np.ones(B, dtype=np.int64)
    for k in range(m):
        piv = G[:, k, k].copy()
        ok &= piv != 0
        safe = np.where(piv == 0, 1, piv)
        for i in range(k + 1, m):
            for j in range(k + 1, m):
                G[:, i, j] = (safe * G[:, i, j] - G[:, i, k] * G[:, k, j]) // prev
        prev = safe
    return ok


def count_generic_tuples(M: int, r: int, mode: str = "exact", n_samples: int = 100_000, seed: int = 0,
                         chunk: int = 1 << 18) -> float:
    """Fraction of pairwise-distinct r-tuples of subsets of {1..M} whose
    consecutive differences w_i = 1_{J_i} - 1_{J_{i+1}} have rank r-1."""
    if r < 2:
        raise ValueError("r must be >= 2")
    if mode == "exact":
        if M * r > 30:
            raise InfeasibleExact(f"2^{M * r} tuples exceed 2^30")
        total = 1 << (M * r)
        good = 0
        distinct = 0
        for s in range(0, total, chunk):
            codes = np.arange(s, min(total, s + chunk), dtype=np.int64)
            J = (codes[:, None] >> (M * np.arange(r))) & ((1 << M) - 1)
            ok = np.ones(codes.size, dtype=bool)
            for a, b in itertools.combinations(range(r), 2):
                ok &= J[:, a] != J[:, b]
            J = J[ok]
            distinct += J.shape[0]
            if J.shape[0]:
                bits = _bits(J, M)
                W = bits[:, :-1, :] - bits[:, 1:, :]
                good += int(np.count_nonzero(full_rank(W)))
        return good / distinct
    if mode == "sampled":
        rng = stream(seed, 0)
        J = rng.integers(0, 1 << M, size=(n_samples, r))
        ok = np.ones(n_samples, dtype=bool)
        for a, b in itertools.combinations(range(r), 2):
            ok &= J[:, a] != J[:, b]
        J = J[ok]
        bits = _bits(J, M)
        W = bits[:, :-1, :] - bits[:, 1:, :]
        return float(np.count_nonzero(full_rank(W))) / J.shape[0]
    raise ValueError(f"unknown mode {mode!r}")


def degenerate_pair_fraction(M: int, mode: str = "exact", n_samples: int = 200_000, seed: int = 0) -> float:
    """Fraction of 4-tuples (J1, J2, J3, J4), J1 != J2 and J3 != J4, with
    rank(w1, w3) < 2 where w1 = 1_{J1} - 1_{J2}, w3 = 1_{J3} - 1_{J4}.

    Exact mode runs over all (J1, J2) and counts the partners (J3, J4) with
    w3 = +-w1 directly: they agree with w1 on its support and coincide off it.
    """
    pairs = (1 << M) * ((1 << M) - 1)
    if mode == "exact":
        if 2 * M > 30:
            raise InfeasibleExact(f"2^{2 * M} pairs exceed 2^30")
        hits = 0
        for j1 in range(1 << M):
            j2 = np.arange(1 << M, dtype=np.int64)
            j2 = j2[j2 != j1]
            support = np.array([bin(v).count("1") for v in (j2 ^ j1).tolist()])
            hits += int((2 * (1 << M) // (1 << support)).sum())
        return hits / (pairs * pairs)
    if mode == "sampled":
        rng = stream(seed, 0)
        J = rng.integers(0, 1 << M, size=(n_samples, 4))
        J = J[(J[:, 0] != J[:, 1]) & (J[:, 2] != J[:, 3])]
        bits = _bits(J, M)
        W = np.stack((bits[:, 0] - bits[:, 1], bits[:, 2] - bits[:, 3]), axis=1)
        return float(np.count_nonzero(~full_rank(W))) / J.shape[0]
    raise ValueError(f"unknown mode {mode!r}")


def symmetric_difference_histogram(M: int, n_samples: int, seed: int, bins: int = 20) -> dict:
    """Distribution of |J1 symmetric-difference J2| / M for independent uniform subsets."""
    rng = stream(seed, 0)
    a = rng.integers(0, 2, size=(n_samples, M), dtype=np.int8)
    b = rng.integers(0, 2, size=(n_samples, M), dtype=np.int8)
    frac = (a != b).sum(axis=1) / M
    counts, edges = np.histogram(frac, bins=bins, range=(0.0, 1.0))
    est = MCEstimate.from_values(frac)
    return {
        "M": M,
        "n_samples": n_samples,
        "mean": est.mean,
        "stderr": est.stderr,
        "mass_eps_0.05": float(np.mean(np.abs(frac - 0.5) <= 0.05 + 1e-12)),
        "mass_eps_0.1": float(np.mean(np.abs(frac - 0.5) <= 0.1 + 1e-12)),
        "values": np.unique(frac, return_counts=True),
        "bin_edges": edges,
        "counts": counts,
    }


def uniformity_test(map_rows, n_samples: int, seed: int, bins: int | None = None) -> tuple[float, float]:
    """Chi-square test that theta -> A theta (mod 1) pushes uniform T^M to uniform T^m.

    Returns (statistic, p-value).
    """
    A = np.atleast_2d(np.asarray(map_rows, dtype=np.int64))
    m, M = A.shape
    if np.linalg.matrix_rank(A.astype(float)) < m:
        raise RankDeficient(f"map has rank < {m}")
    if bins is None:
        bins = max(2, min(10, int((n_samples / 5) ** (1 / m))))
    rng = stream(seed, 0)
    u = rng.random((n_samples, M))
    y = (u @ A.T) % 1.0
    cell = np.minimum((y * bins).astype(np.int64), bins - 1)
    flat = np.ravel_multi_index(cell.T, (bins,) * m)
    counts = np.bincount(flat, minlength=bins**m)
    res = stats.chisquare(counts)
    return float(res.statistic), float(res.pvalue)
