"""Separable smoothing kernels f on R^d with evaluable Fourier transforms,
and their periodisation F_N at scale N/(pi/2).

Fourier convention: fhat(t) = int f(x) exp(-2 pi i x t) dx.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .circle_points import HALF_PI
from .errors import Unsupported

TAIL = 1e-12


@dataclass(frozen=True)
class Profile:
    """One-dimensional even factor of a product kernel."""

    family: str
    width: float = 1.0
    grid: tuple[float, ...] | None = None
    values: tuple[float, ...] | None = None

    def f(self, x):
        x = np.asarray(x, dtype=float)
        if self.family == "gaussian":
            return np.exp(-math.pi * (x / self.width) ** 2)
        if self.family == "fejer":
            T = self.width
            return T * np.sinc(T * x) ** 2
        if self.family == "table":
            return np.interp(np.abs(x), self.grid, self.values, right=0.0)
        raise ValueError(self.family)

    def fhat(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "gaussian":
            w = self.width
            return w * np.exp(-math.pi * (w * t) ** 2)
        if self.family == "fejer":
            return np.maximum(0.0, 1.0 - np.abs(t) / self.width)
        if self.family == "table":
            # trapezoid on the symmetric extension
            g = np.asarray(self.grid)
            v = np.asarray(self.values)
            xs = np.concatenate((-g[:0:-1], g))
            vs = np.concatenate((v[:0:-1], v))
            ph = np.cos(2 * math.pi * np.multiply.outer(t, xs))
            return np.trapezoid(ph * vs, xs, axis=-1)
        raise ValueError(self.family)

    @property
    def support_radius(self) -> float:
        """|f(x)| <= TAIL for |x| beyond this."""
        if self.family == "gaussian":
            return self.width * math.sqrt(math.log(1 / TAIL) / math.pi)
        if self.family == "fejer":
            # T sinc^2(T x) <= 1 / (pi^2 T x^2)
            return 1.0 / (math.pi * math.sqrt(self.width * TAIL))
        if self.family == "table":
            return float(self.grid[-1])
        raise ValueError(self.family)

    @property
    def fhat_cutoff(self) -> float:
        """|fhat(t)| <= TAIL for |t| beyond this."""
        if self.family == "gaussian":
            w = self.width
            return math.sqrt(max(math.log(w / TAIL), 0.0) / math.pi) / w
        if self.family == "fejer":
            return self.width
        return math.inf

    def fhat_tail(self, t: float) -> float:
        """Bound on |fhat| beyond |t|."""
        if t >= self.fhat_cutoff:
            return TAIL
        if self.family == "gaussian":
            return float(self.fhat(t))
        if self.family == "fejer":
            return max(0.0, 1.0 - t / self.width)
        return math.inf

    def periodized(self, x, N: int):
        """sum_j f((N/(pi/2)) (x + j pi/2))."""
        z = np.asarray(x, dtype=float) * (N / HALF_PI)
        z = z - N * np.floor(z / N + 0.5)  # into [-N/2, N/2)
        if self.family == "fejer":
            L = self.width * N
            if abs(L - round(L)) < 1e-12:
                return _fejer_periodized(z, self.width, N)
        R = self.support_radius
        J = int(math.ceil(R / N)) + 1
        if J > 10_000:
            raise Unsupported(f"periodisation needs {2 * J + 1} translates; use integer T*N")
        out = np.zeros_like(z)
        for j in range(-J, J + 1):
            out += self.f(z + N * j)
        return out


def _fejer_periodized(z, T: float, N: int):
    # sum_j T sinc^2(T(z + N j)) with T N integer:
    #   sin^2(pi T z) / (T N^2 sin^2(pi z / N)),  value T at z = 0 (mod N)
    s_den = np.sin(np.pi * z / N)
    small = np.abs(s_den) < 1e-9
    safe = np.where(small, 1.0, s_den)
    val = np.sin(np.pi * T * z) ** 2 / (T * N * N * safe**2)
    if np.any(small):
        # Taylor at z ~ 0: T * (1 - (pi z)^2 (T^2 - 1/N^2) / 3)
        val = np.where(small, T * (1 - (np.pi * z) ** 2 * (T * T - 1 / N**2) / 3), val)
    return val


@dataclass(frozen=True)
class SmoothingKernel:
    """Product kernel f(x) = prod_i profile_i(x_i) on R^dim."""

    factors: tuple[Profile, ...]

    @property
    def dim(self) -> int:
        return len(self.factors)

    @property
    def family(self) -> str:
        fams = {p.family for p in self.factors}
        return fams.pop() if len(fams) == 1 else "mixed"

    @property
    def effective_support_radius(self) -> float:
        return max(p.support_radius for p in self.factors)

    @property
    def effective_fhat_cutoff(self) -> float:
        return max(p.fhat_cutoff for p in self.factors)

    def f(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1])
        for i, p in enumerate(self.factors):
            out = out * p.f(x[..., i])
        return out

    def fhat(self, t):
        t = np.asarray(t, dtype=float)
        out = np.ones(t.shape[:-1])
        for i, p in enumerate(self.factors):
            out = out * p.fhat(t[..., i])
        return out

    def fhat0(self) -> float:
        return float(np.prod([p.fhat(0.0) for p in self.factors]))

    def f0(self) -> float:
        return float(np.prod([p.f(0.0) for p in self.factors]))

    def to_dict(self) -> dict:
        p = self.factors[0]
        d = {"family": self.family, "dim": self.dim, "width": p.width}
        if self.family == "mixed":
            d["factors"] = [[q.family, q.width] for q in self.factors]
        return d


def gaussian_kernel(dim: int, width: float = 1.0) -> SmoothingKernel:
    return SmoothingKernel(tuple(Profile("gaussian", width) for _ in range(dim)))


def fejer_kernel(dim: int, T: float = 1.0) -> SmoothingKernel:
    return SmoothingKernel(tuple(Profile("fejer", T) for _ in range(dim)))


def table_kernel(dim: int, grid: Sequence[float], values: Sequence[float]) -> SmoothingKernel:
    """Compactly supported even profile, linear between samples on [0, grid[-1]]."""
    grid = tuple(float(g) for g in grid)
    values = tuple(float(v) for v in values)
    if grid[0] != 0.0 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must start at 0 and increase")
    if values[-1] != 0.0:
        raise ValueError("table profile must vanish at the end of its grid")
    return SmoothingKernel(tuple(Profile("table", 1.0, grid, values) for _ in range(dim)))


def kernel_from_spec(spec: dict, dim: int) -> SmoothingKernel:
    fam = spec.get("family", "gaussian")
    if fam == "gaussian":
        return gaussian_kernel(dim, float(spec.get("width", 1.0)))
    if fam in ("fejer", "fejer_product"):
        return fejer_kernel(dim, float(spec.get("width", spec.get("T", 1.0))))
    if fam == "table":
        return table_kernel(dim, spec["grid"], spec["values"])
    raise ValueError(f"unknown kernel family {fam!r}")


@dataclass(frozen=True)
class PeriodizedKernel:
    kernel: SmoothingKernel
    N: int

    def one_dim(self, i: int, x):
        return self.kernel.factors[i].periodized(x, self.N)

    def __call__(self, x):
        """F_N at angle-difference vectors x of shape (..., dim)."""
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1])
        for i in range(self.kernel.dim):
            out = out * self.one_dim(i, x[..., i])
        return out

    def fourier_value(self, x, k_cutoff: int | None = None):
        """F_N from the finite k-sum (1/N^d) sum_k fhat(k/N) e^{4i k.x}."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        N = self.N
        out = 1.0
        for i, p in enumerate(self.kernel.factors):
            K = k_cutoff if k_cutoff is not None else int(math.ceil(p.fhat_cutoff * N))
            ks = np.arange(-K, K + 1)
            out *= float(np.sum(p.fhat(ks / N) * np.cos(4 * ks * x[i]))) / N
        return out

    def tail_bound(self) -> float:
        # per retained translate
        return TAIL


def second_moment_kernel(kernel: SmoothingKernel) -> SmoothingKernel:
    """Kernel on R^{2d+1} whose transform h obeys h(x, 0, y) = fhat(x) fhat(y).

    The middle coordinate carries a unit-width Gaussian, whose transform is 1 at 0.
    """
    if any(p.family == "table" for p in kernel.factors):
        raise Unsupported("table kernels have no closed-form transform")
    mid = Profile("gaussian", 1.0)
    return SmoothingKernel(kernel.factors + (mid,) + kernel.factors)
