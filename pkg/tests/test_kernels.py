import math

import numpy as np
import pytest
from scipy import integrate

from lattice_angles.errors import Unsupported
from lattice_angles.kernels import (
    TAIL,
    PeriodizedKernel,
    Profile,
    fejer_kernel,
    gaussian_kernel,
    kernel_from_spec,
    second_moment_kernel,
    table_kernel,
)
from oracles import gauss_periodized


@pytest.mark.parametrize("prof", [Profile("gaussian", 1.0), Profile("gaussian", 0.4)])
def test_fhat_zero_is_integral(prof):
    val, _ = integrate.quad(lambda x: float(prof.f(x)), -np.inf, np.inf, limit=400)
    assert float(prof.fhat(0.0)) == pytest.approx(val, rel=1e-8)


@pytest.mark.parametrize("T", [1.0, 2.5])
def test_fejer_mass(T):
    prof = Profile("fejer", T)
    L = 2000.0
    xs = np.linspace(0.0, L, 4_000_001)
    body = 2 * integrate.trapezoid(prof.f(xs), xs)
    # sin^2 averages 1/2 on the tail
    tail = 1 / (math.pi**2 * T * L)
    assert float(prof.fhat(0.0)) == pytest.approx(body + tail, abs=1e-6)


def test_gaussian_fhat_by_quadrature():
    prof = Profile("gaussian", 0.7)
    for t in (0.3, 1.1):
        val, _ = integrate.quad(lambda x: float(prof.f(x)) * math.cos(2 * math.pi * x * t), -10, 10)
        assert float(prof.fhat(t)) == pytest.approx(val, abs=1e-10)


def test_declared_tail_bounds():
    for prof in (Profile("gaussian", 1.0), Profile("gaussian", 3.0), Profile("fejer", 1.0)):
        R = prof.support_radius
        xs = R * np.linspace(1.0, 5.0, 200)
        assert np.all(np.abs(prof.f(xs)) <= TAIL * 1.0001)
        C = prof.fhat_cutoff
        ts = C * np.linspace(1.0, 5.0, 200)
        assert np.all(np.abs(prof.fhat(ts)) <= TAIL * 1.0001)


def test_gaussian_periodized_at_zero():
    pk = PeriodizedKernel(gaussian_kernel(2, 1.0), 4096)
    assert pk(np.zeros(2)) == pytest.approx(1.0, abs=1e-12)


def test_periodized_matches_translate_sum():
    N = 6
    prof = Profile("gaussian", 1.3)
    for d in (0.0, 0.1, 0.77, -1.2):
        assert float(prof.periodized(d, N)) == pytest.approx(gauss_periodized(d, N, 1.3), abs=1e-13)


def test_periodicity():
    pk = PeriodizedKernel(fejer_kernel(2, 1.0), 10)
    x = np.array([0.3, math.pi / 2])
    assert pk(x) == pytest.approx(pk(np.array([0.3, 0.0])), abs=1e-12)


@pytest.mark.parametrize("N", [2, 4, 9, 64])
def test_fejer_fourier_side(N):
    pk = PeriodizedKernel(fejer_kernel(2, 1.0), N)
    for x in ([0.0, 0.0], [0.2, -0.5], [1e-7, 0.3]):
        assert pk(np.array(x)) == pytest.approx(pk.fourier_value(np.array(x)), abs=1e-8)


def test_fejer_closed_form_against_direct_sum():
    prof = Profile("fejer", 1.0)
    N = 3
    z = 0.37
    direct = sum(float(prof.f(z + N * j)) for j in range(-200000, 200001))
    assert float(prof.periodized(z * math.pi / 2 / N, N)) == pytest.approx(direct, abs=1e-6)


def test_fejer_non_integer_tn_refused():
    with pytest.raises(Unsupported):
        Profile("fejer", 1.5).periodized(0.1, 3)


def test_table_kernel():
    k = table_kernel(1, [0.0, 0.5, 1.0], [1.0, 0.5, 0.0])
    prof = k.factors[0]
    assert float(prof.f(0.25)) == pytest.approx(0.75)
    assert float(prof.f(2.0)) == 0.0
    assert float(prof.fhat(0.0)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        table_kernel(1, [0.0, 1.0], [1.0, 0.5])


def test_second_moment_kernel():
    k = gaussian_kernel(2, 1.0)
    h = second_moment_kernel(k)
    assert h.dim == 5
    rng = np.random.default_rng(0)
    for _ in range(100):
        x, y = rng.normal(size=2), rng.normal(size=2)
        t = np.concatenate((x, [0.0], y))
        assert h.fhat(t) == pytest.approx(k.fhat(x) * k.fhat(y), abs=1e-12)
    assert h.fhat(np.zeros(5)) == pytest.approx(k.fhat0() ** 2)
    with pytest.raises(Unsupported):
        second_moment_kernel(table_kernel(1, [0.0, 1.0], [1.0, 0.0]))


def test_kernel_from_spec():
    assert kernel_from_spec({"family": "fejer_product", "T": 2}, 3).family == "fejer"
    assert kernel_from_spec({}, 1).family == "gaussian"
    with pytest.raises(ValueError):
        kernel_from_spec({"family": "boxcar"}, 1)
