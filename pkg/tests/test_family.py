import math

import mpmath
import numpy as np
import pytest

from lattice_angles.circle_points import FactoredRadius, angles
from lattice_angles.correlation import correlation_direct
from lattice_angles.errors import EmptyFamily, InfeasibleN, ZeroK
from lattice_angles.family import (
    FamilySpec,
    L_one,
    corr_family_average,
    corr_family_values,
    empirical_average,
    enumerate_family,
    family_size,
    family_table,
    g_dirichlet,
    g_euler,
    hecke_prime_sum,
    lambda_product_primes,
    lsd_Y,
    lsd_compare,
    member_angles,
    s_values,
    average_by_enumeration,
)
from lattice_angles.kernels import gaussian_kernel
from lattice_angles.subsets import alpha
from oracles import split_primes_trial


def brute_family(x, M, exclude=()):
    ps = [p for p in split_primes_trial(x) if p not in exclude]
    out = []

    def rec(i, prod, depth):
        if depth == M:
            out.append(prod)
            return
        for j in range(i, len(ps)):
            if prod * ps[j] > x:
                break
            rec(j + 1, prod * ps[j], depth + 1)

    rec(0, 1, 0)
    return sorted(out)


def test_small_families():
    assert [fr.n for fr in enumerate_family(FamilySpec(50, 1))] == [5, 13, 17, 29, 37, 41]
    assert [fr.n for fr in enumerate_family(FamilySpec(100, 2))] == [65, 85]
    assert list(enumerate_family(FamilySpec(100, 2, FactoredRadius.from_primes([5])))) == []


@pytest.mark.parametrize("x,M", [(10**4, 1), (10**5, 2), (10**5, 3), (10**6, 4)])
def test_family_table_matches_brute(x, M):
    tab, rows = family_table(FamilySpec(x, M))
    prods = np.prod(tab.p[rows].astype(object), axis=1) if rows.size else np.zeros(0)
    assert [int(v) for v in prods] == brute_family(x, M)


def test_family_excludes_n0_primes():
    n0 = FactoredRadius.from_primes([13])
    tab, rows = family_table(FamilySpec(10**5, 2, n0))
    assert 13 not in set(tab.p[rows].ravel().tolist())
    assert rows.shape[0] == len(brute_family(10**5, 2, exclude=(13,)))


def test_family_limits():
    with pytest.raises(InfeasibleN):
        FamilySpec(10**10, 2)
    with pytest.raises(EmptyFamily):
        empirical_average(FamilySpec(60, 2), [1])


@pytest.mark.parametrize("k", [[1], [2], [1, 3], [2, -1, 1]])
def test_average_two_routes(k):
    spec = FamilySpec(20000, 2)
    assert empirical_average(spec, k) == pytest.approx(average_by_enumeration(spec, k), rel=1e-9, abs=1e-9)


def test_lambda_product_is_expanded_s():
    # prod_j lambda(p) = 2 alpha + s(p;k)
    th = np.linspace(0.01, 1.5, 50)
    for k in ([1], [1, 2], [3, -1, 2], [1, 1, 1]):
        assert np.allclose(lambda_product_primes(th, k), 2 * alpha(k) + s_values(th, k), atol=1e-10)


def test_member_angles_are_the_lattice_angles():
    tab, rows = family_table(FamilySpec(2000, 2))
    got = np.sort(member_angles(tab.theta, rows[:5]), axis=1)
    for row, g in zip(rows[:5], got):
        fr = FactoredRadius.from_primes(tab.p[row].tolist())
        assert np.allclose(g, angles(fr).angles, atol=1e-12)


def test_corr_values_match_direct():
    spec = FamilySpec(5000, 2)
    tab, rows = family_table(spec)
    k = gaussian_kernel(1, 1.0)
    vals = corr_family_values(spec, k, 2, (tab, rows))
    for row, v in list(zip(rows, vals))[:10]:
        fr = FactoredRadius.from_primes(tab.p[row].tolist())
        assert v == pytest.approx(correlation_direct(angles(fr), k, 2), rel=1e-12)
    assert corr_family_average(spec, k, 2, 2, (tab, rows)) == pytest.approx(np.mean(vals**2))


def test_g_routes_agree():
    for k in ([1], [3], [1, 2]):
        for Y in (0.25, 1.0):
            e = g_euler(k, Y, 10**6).value
            d = g_dirichlet(k, Y, 10**5)
            assert e == pytest.approx(d, abs=1e-3)
    assert g_dirichlet([1], 0.0) == 1.0
    assert g_euler([0], 1.0, 10**4).value == 1.0


def test_L_one_routes_agree():
    for k in (1, 2, 5):
        e, lat = L_one(k, 10**6, 10**6)
        assert e == pytest.approx(lat, abs=2e-3)
    with pytest.raises(ZeroK):
        L_one(0)


def test_L_one_euler_with_mpmath():
    # independent Euler product in extended precision at a small cutoff
    from lattice_angles.family import L_one_euler
    from lattice_angles.gaussian_core import primes_upto, split_prime

    P = 3000
    with mpmath.workdps(30):
        v = 1 / (1 - mpmath.mpf(-1) / 2)
        for q in primes_upto(P).tolist():
            if q % 4 == 3:
                v /= 1 - mpmath.mpf(q) ** -2
            elif q % 4 == 1:
                sp = split_prime(q)
                c = mpmath.cos(4 * mpmath.atan2(sp.b, sp.a))
                v /= 1 - 2 * c / q + mpmath.mpf(q) ** -2
    assert L_one_euler(1, P) == pytest.approx(float(v), rel=1e-12)


def test_hecke_ratio_near_one():
    total, ratio = hecke_prime_sum(10**6, [1])
    assert ratio == pytest.approx(1.0, abs=0.02)
    with pytest.raises(InfeasibleN):
        hecke_prime_sum(10**9, [1])


def test_lsd_small():
    rec = lsd_compare(FamilySpec(10**6, 2), [1])
    assert rec.Y == pytest.approx(1 / math.log(math.log(1e6)))
    assert 0.5 <= rec.ratio <= 2
    with pytest.raises(ValueError):
        lsd_Y(10.0, 2)
