"""Nearest-neighbour spacings of angle sets and their comparison with the
exponential law; star discrepancy of the angles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .circle_points import HALF_PI, AngleSet
from .errors import TooFewPoints

Mode = Literal["open", "wrapped"]


@dataclass(frozen=True)
class GapSample:
    N: int
    gaps: np.ndarray
    mode: str
    normalization: str = "mean"

    def __len__(self):
        return self.gaps.size


@dataclass(frozen=True)
class SpacingHistogram:
    bin_edges: np.ndarray
    masses: np.ndarray
    reference: np.ndarray

    def to_csv(self) -> str:
        rows = ["bin_lo,bin_hi,mass,reference_mass"]
        for lo, hi, m, ref in zip(self.bin_edges[:-1], self.bin_edges[1:], self.masses, self.reference):
            rows.append(f"{lo:.17g},{hi:.17g},{m:.17g},{ref:.17g}")
        return "\n".join(rows) + "\n"


def _scale(N: int, normalization: str) -> float:
    if normalization == "mean":
        return N / HALF_PI
    if normalization == "literal":
        # N (theta_{j+1} - theta_j), mean pi/2 instead of 1
        return float(N)
    raise ValueError(f"unknown normalization {normalization!r}")


def gaps(a: AngleSet, mode: Mode = "open", normalization: str = "mean") -> GapSample:
    """Consecutive angle differences scaled by the mean spacing (pi/2)/N.

    ``open`` gives the N-1 interior gaps; ``wrapped`` adds the gap across
    pi/2 -> 0, so the normalised gaps then average exactly 1.
    """
    if a.N < 2:
        raise TooFewPoints(f"need at least 2 angles, got {a.N}")
    th = np.sort(a.angles)
    raw = np.diff(th)
    if mode == "wrapped":
        raw = np.append(raw, th[0] + HALF_PI - th[-1])
    elif mode != "open":
        raise ValueError(f"unknown mode {mode!r}")
    return GapSample(a.N, raw * _scale(a.N, normalization), mode, normalization)


def exp_mass(lo: float, hi: float) -> float:
    """Integral of e^{-s} over [lo, hi] intersected with [0, inf)."""
    lo = max(lo, 0.0)
    if hi <= lo:
        return 0.0
    return math.exp(-lo) - (0.0 if math.isinf(hi) else math.exp(-hi))


def spacing_mass(g: GapSample | np.ndarray, interval: tuple[float, float]) -> tuple[float, float]:
    """(fraction of gaps in [lo, hi], integral of e^{-s} over it)."""
    vals = g.gaps if isinstance(g, GapSample) else np.asarray(g)
    lo, hi = interval
    mass = float(np.count_nonzero((vals >= lo) & (vals <= hi))) / vals.size
    return mass, exp_mass(lo, hi)


def joint_gaps(a: AngleSet, ell: int, normalization: str = "mean") -> np.ndarray:
    """Rows (s_{j+1}, ..., s_{j+ell}) of consecutive normalised gaps, j = 0..N-ell-1."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if a.N < ell + 1:
        raise TooFewPoints(f"need at least {ell + 1} angles, got {a.N}")
    s = gaps(a, "open", normalization).gaps
    return np.lib.stride_tricks.sliding_window_view(s, ell).copy()


def joint_mass(vectors: np.ndarray, box) -> tuple[float, float]:
    """Fraction of gap vectors inside a product of intervals, and prod of exp masses."""
    vectors = np.atleast_2d(vectors)
    inside = np.ones(vectors.shape[0], dtype=bool)
    ref = 1.0
    for i, (lo, hi) in enumerate(box):
        inside &= (vectors[:, i] >= lo) & (vectors[:, i] <= hi)
        ref *= exp_mass(lo, hi)
    return float(np.count_nonzero(inside)) / vectors.shape[0], ref


def histogram(g: GapSample, bins: int = 50, upper: float = 5.0) -> SpacingHistogram:
    edges = np.linspace(0.0, upper, bins + 1)
    counts, _ = np.histogram(g.gaps, bins=edges)
    masses = counts / g.gaps.size
    ref = np.exp(-edges[:-1]) - np.exp(-edges[1:])
    return SpacingHistogram(edges, masses, ref)


def ks_exponential(g: GapSample | np.ndarray) -> float:
    """Two-sided sup |F_emp(t) - (1 - e^{-t})|, taking both one-sided limits at jumps."""
    vals = np.sort(g.gaps if isinstance(g, GapSample) else np.asarray(g, dtype=float))
    n = vals.size
    if n < 2:
        raise TooFewPoints("need at least 2 gaps")
    cdf = -np.expm1(-np.maximum(vals, 0.0))
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf)
    d_minus = np.max(cdf - (i - 1) / n)
    return float(min(1.0, max(d_plus, d_minus)))


def star_discrepancy(a: AngleSet) -> float:
    """Anchored discrepancy of theta/(pi/2) in [0, 1) by the order-statistics formula."""
    if a.N < 1:
        raise TooFewPoints("empty angle set")
    u = np.sort(a.angles) / HALF_PI
    n = u.size
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - u, u - (i - 1) / n)))


def scale_report(N: int) -> dict:
    """The three equidistribution scales N^{-1/2}, N^{-log(pi/2)/log 2}, N^{-1}."""
    gamma = math.log(math.pi / 2) / math.log(2)
    return {
        "N": N,
        "gamma": gamma,
        "N^-1/2": N**-0.5,
        "N^-gamma": N**-gamma,
        "N^-1": 1.0 / N,
    }


def window(a: AngleSet, center: float, width: float) -> np.ndarray:
    """Normalised angles u = theta/(pi/2) lying within width/2 of center."""
    u = np.sort(a.angles) / HALF_PI
    return u[np.abs(u - center) <= width / 2]
