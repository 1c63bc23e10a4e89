import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lattice_angles.circle_points import FactoredRadius, angles
from lattice_angles.correlation import (
    batched_correlation,
    correlation_direct,
    correlation_distinct,
    correlation_fourier,
    pair_matrix,
)
from lattice_angles.errors import CutoffTooSmall, TooFewPoints
from lattice_angles.kernels import TAIL, Profile, fejer_kernel, gaussian_kernel, table_kernel
from oracles import brute_correlation

HP = math.pi / 2


def test_pair_correlation_sixty_five():
    a = angles(FactoredRadius.from_integer(65))
    k = gaussian_kernel(1, 1.0)
    assert correlation_direct(a, k, 2) == pytest.approx(1.1853622458449595, abs=1e-13)
    assert correlation_distinct(a, k, 2) == pytest.approx(0.1853622458449596, abs=1e-13)


def test_triple_fejer_two_points():
    # n = 5 has two angles; value from the closed-form periodisation
    a = angles(FactoredRadius.from_integer(5))
    assert correlation_direct(a, fejer_kernel(2, 1.0), 3) == pytest.approx(1.16294656, abs=1e-12)


@pytest.mark.parametrize("n", [65, 325, 1105, 5525])
@pytest.mark.parametrize("r", [2, 3])
def test_direct_matches_brute(n, r):
    a = angles(FactoredRadius.from_integer(n))
    prof = Profile("gaussian", 1.0)
    k = gaussian_kernel(r - 1, 1.0)
    F = lambda d: float(prof.periodized(d, a.N))
    assert correlation_direct(a, k, r) == pytest.approx(brute_correlation(a.angles, F, r), rel=1e-12)
    assert correlation_distinct(a, k, r) == pytest.approx(
        brute_correlation(a.angles, F, r, distinct=True), rel=1e-10, abs=1e-13
    )


@pytest.mark.parametrize("primes", [[5, 13], [5, 13, 17], [5, 13, 17, 29], [13, 37, 41, 53, 61]])
@pytest.mark.parametrize("kernel_r", [("gaussian", 2), ("gaussian", 3), ("fejer", 2), ("fejer", 3), ("fejer", 4)])
def test_direct_matches_fourier(primes, kernel_r):
    fam, r = kernel_r
    fr = FactoredRadius.from_primes(primes)
    k = gaussian_kernel(r - 1, 0.8) if fam == "gaussian" else fejer_kernel(r - 1, 1.0)
    d = correlation_direct(angles(fr), k, r)
    f = correlation_fourier(fr, k, r)
    assert d == pytest.approx(f, rel=1e-8)


def test_sparse_window_matches_dense():
    fr = FactoredRadius.from_primes([5, 13, 17, 29, 37, 41, 53])
    a = angles(fr)
    prof = Profile("gaussian", 1.0)
    G = pair_matrix(a.angles, prof, a.N).toarray()
    D = prof.periodized(a.angles[:, None] - a.angles[None, :], a.N)
    kept = G != 0
    assert np.allclose(G[kept], D[kept], rtol=1e-14, atol=0)
    assert np.all(D[~kept] <= TAIL)
    assert kept.sum() < D.size


def test_all_coincident_points():
    # every tuple contributes F_N(0)^{r-1}
    pts = np.zeros(7)
    k = fejer_kernel(2, 1.0)
    val = correlation_direct(pts, k, 3, N=7)
    assert val == pytest.approx(49 * 1.0**2, rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0, HP, exclude_max=True), min_size=3, max_size=9), st.sampled_from([2, 3]))
def test_batched_matches_single(points, r):
    pts = np.array(points)
    k = gaussian_kernel(r - 1, 1.3)
    b = batched_correlation(pts[None, :], k, r)[0]
    bd = batched_correlation(pts[None, :], k, r, distinct=True)[0]
    assert b == pytest.approx(correlation_direct(pts, k, r), rel=1e-10)
    assert bd == pytest.approx(correlation_distinct(pts, k, r), rel=1e-9, abs=1e-12)


def test_fourier_cutoff_errors():
    fr = FactoredRadius.from_primes([5, 13])
    with pytest.raises(CutoffTooSmall):
        correlation_fourier(fr, gaussian_kernel(1, 1.0), 2, k_cutoff=1)
    with pytest.raises(CutoffTooSmall):
        correlation_fourier(fr, table_kernel(1, [0.0, 1.0], [1.0, 0.0]), 2)


def test_argument_checks():
    a = angles(FactoredRadius.from_integer(5))
    with pytest.raises(ValueError):
        correlation_direct(a, gaussian_kernel(2, 1.0), 2)
    with pytest.raises(TooFewPoints):
        correlation_distinct(a, gaussian_kernel(2, 1.0), 3)
