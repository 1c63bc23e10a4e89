"""Exact Gaussian-integer arithmetic for split primes.

Primes p = 1 (mod 4) factor in Z[i] as (a + bi)(a - bi).  We normalise the
factor so that a > b >= 1, which puts its argument theta_p in (0, pi/4).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from sympy import isprime

from .errors import NotPrime, NotSplit, PrecisionInsufficient

__all__ = [
    "PrecisionContext",
    "SplitPrime",
    "RepulsionResult",
    "primes_upto",
    "sieve_split_primes",
    "split_primes_array",
    "split_prime",
    "sqrt_minus_one",
    "gaussian_gcd",
    "is_sum_of_two_squares",
    "check_repulsion",
    "prime_angle_table",
]


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision for angle arithmetic, in mantissa bits."""

    mantissa_bits: int = 64

    def __post_init__(self):
        if self.mantissa_bits < 1:
            raise ValueError("mantissa_bits must be positive")

    @property
    def unit_error(self) -> float:
        # bound per elementary operation chain
        return 2.0 ** (3 - self.mantissa_bits)


DEFAULT_CONTEXT = PrecisionContext()
REPULSION_CONTEXT = PrecisionContext(256)


def primes_upto(x: int) -> np.ndarray:
    """All primes <= x as an int64 array (odd-only Eratosthenes sieve)."""
    x = int(x)
    if x < 2:
        return np.zeros(0, dtype=np.int64)
    if x < 3:
        return np.array([2], dtype=np.int64)
    # index i stands for 2*i + 1
    size = (x - 1) // 2 + 1
    odd = np.ones(size, dtype=bool)
    odd[0] = False
    for i in range(1, (math.isqrt(x) - 1) // 2 + 1):
        if odd[i]:
            p = 2 * i + 1
            odd[p * p // 2 :: p] = False
    out = 2 * np.flatnonzero(odd).astype(np.int64) + 1
    return np.concatenate(([2], out))


def split_primes_array(x: int) -> np.ndarray:
    ps = primes_upto(x)
    return ps[ps % 4 == 1]


def sieve_split_primes(x: int) -> list[int]:
    """Primes p <= x with p = 1 (mod 4), ascending."""
    if x < 2:
        raise ValueError("x must be >= 2")
    return [int(p) for p in split_primes_array(x)]


def sqrt_minus_one(p: int) -> int:
    """A square root of -1 mod p, from the smallest quadratic non-residue."""
    e = (p - 1) // 2
    c = 2
    while pow(c, e, p) != p - 1:
        c += 1
        if c >= p:
            raise NotPrime(f"{p} has no quadratic non-residue; not prime")
    t = pow(c, (p - 1) // 4, p)
    if t * t % p != p - 1:
        raise NotPrime(f"{p} failed the Euler criterion; not prime")
    return t


def _gauss_divmod(x: tuple[int, int], y: tuple[int, int]):
    # nearest-integer quotient in Z[i]
    a, b = x
    c, d = y
    n = c * c + d * d
    re = a * c + b * d
    im = b * c - a * d
    qr = (2 * re + n) // (2 * n)
    qi = (2 * im + n) // (2 * n)
    rr = a - (qr * c - qi * d)
    ri = b - (qr * d + qi * c)
    return (qr, qi), (rr, ri)


def gaussian_gcd(x: tuple[int, int], y: tuple[int, int]) -> tuple[int, int]:
    """Euclidean gcd in Z[i] of x = (re, im) and y = (re, im)."""
    while y != (0, 0):
        _, r = _gauss_divmod(x, y)
        x, y = y, r
    return x


@dataclass(frozen=True)
class SplitPrime:
    p: int
    a: int
    b: int

    def __post_init__(self):
        if self.a * self.a + self.b * self.b != self.p:
            raise ValueError(f"{self.a}^2 + {self.b}^2 != {self.p}")
        if not self.a > self.b >= 1:
            raise ValueError("need a > b >= 1")

    @property
    def theta(self) -> float:
        return math.atan2(self.b, self.a)

    def theta_mp(self, ctx: PrecisionContext = DEFAULT_CONTEXT):
        with mpmath.workprec(ctx.mantissa_bits):
            return mpmath.atan2(self.b, self.a)

    @property
    def gaussian(self) -> complex:
        return complex(self.a, self.b)


@lru_cache(maxsize=65536)
def split_prime(p: int) -> SplitPrime:
    """Write p = a^2 + b^2 with a > b >= 1 via gcd(p, t + i), t^2 = -1 mod p."""
    p = int(p)
    if p == 2 or p % 4 != 1:
        raise NotSplit(f"{p} does not split in Z[i]")
    if not isprime(p):
        raise NotPrime(f"{p} is not prime")
    t = sqrt_minus_one(p)
    g = gaussian_gcd((p, 0), (t, 1))
    a, b = sorted((abs(g[0]), abs(g[1])), reverse=True)
    if a * a + b * b != p:
        raise NotPrime(f"descent failed for {p}")
    return SplitPrime(p, a, b)


def is_sum_of_two_squares(n: int) -> bool:
    """b(n): every prime 3 mod 4 divides n to an even power."""
    n = int(n)
    if n < 1:
        raise ValueError("n must be >= 1")
    while n % 2 == 0:
        n //= 2
    q = 3
    while q * q <= n:
        if n % q == 0:
            e = 0
            while n % q == 0:
                n //= q
                e += 1
            if q % 4 == 3 and e % 2:
                return False
        q += 2
    return n % 4 != 3


@dataclass(frozen=True)
class RepulsionResult:
    lhs: mpmath.mpf
    rhs: mpmath.mpf
    holds: bool
    nonzero: bool
    error_bound: float


def _gauss_pow(z: tuple[int, int], k: int) -> tuple[int, int]:
    re, im = 1, 0
    a, b = z
    while k:
        if k & 1:
            re, im = re * a - im * b, re * b + im * a
        a, b = a * a - b * b, 2 * a * b
        k >>= 1
    return re, im


def _exact_repulsion(primes, coeffs):
    # beta = prod pi_j^{c_j} (conjugate for c_j < 0); e^{i sum c theta} = beta/|beta|
    re, im = 1, 0
    q = 1
    for sp, c in zip(primes, coeffs):
        z = (sp.a, sp.b) if c > 0 else (sp.a, -sp.b)
        x, y = _gauss_pow(z, abs(c))
        re, im = re * x - im * y, re * y + im * x
        q *= sp.p ** abs(c)
    # lhs^2 = 2 - 2 re / sqrt(q), rhs^2 = 1/q;  lhs >= rhs  <=>  2q - 1 >= 2 re sqrt(q)
    holds = re <= 0 or (2 * q - 1) ** 2 >= 4 * re * re * q
    nonzero = not (im == 0 and re > 0)
    return holds, nonzero


def check_repulsion(
    primes: list[SplitPrime],
    coeffs: list[int],
    ctx: PrecisionContext = REPULSION_CONTEXT,
) -> RepulsionResult:
    """Evaluate |exp(i sum c_j theta_j) - 1| against (prod p_j^|c_j|)^(-1/2).

    The float evaluation is cross-checked against an exact Gaussian-integer
    certificate; disagreement or an unresolved comparison raises
    PrecisionInsufficient.
    """
    if len(primes) != len(coeffs):
        raise ValueError("primes and coeffs differ in length")
    if len({sp.p for sp in primes}) != len(primes):
        raise ValueError("primes must be pairwise distinct")
    if any(c == 0 for c in coeffs):
        raise ValueError("coefficients must be nonzero")
    bits = ctx.mantissa_bits
    with mpmath.workprec(bits + 8):
        s = mpmath.fsum(c * sp.theta_mp(PrecisionContext(bits + 8)) for sp, c in zip(primes, coeffs))
        lhs = 2 * abs(mpmath.sin(s / 2))
        q = 1
        for sp, c in zip(primes, coeffs):
            q *= sp.p ** abs(c)
        rhs = 1 / mpmath.sqrt(q)
    chain = len(primes) + 3
    err = ctx.unit_error * chain * max(1.0, float(sum(abs(c) for c in coeffs)))
    holds_exact, nonzero_exact = _exact_repulsion(primes, coeffs)
    if abs(lhs - rhs) <= err:
        raise PrecisionInsufficient(
            f"|lhs - rhs| = {mpmath.nstr(abs(lhs - rhs), 5)} within error bound {err:.3g}"
        )
    holds = bool(lhs >= rhs)
    nonzero = bool(lhs > err)
    if holds != holds_exact or nonzero != nonzero_exact:
        raise PrecisionInsufficient("float evaluation disagrees with exact certificate")
    return RepulsionResult(lhs=lhs, rhs=rhs, holds=holds, nonzero=nonzero, error_bound=err)


def prime_angle_table(x: int, chunk: int = 1 << 22):
    """Arrays (p, a, b, theta) for every prime p = 1 mod 4 up to x.

    Bulk route: scan a > b >= 1 with a^2 + b^2 <= x against a prime sieve.
    Each such prime has exactly one representation, so no deduplication is
    needed.  Sorted by p.
    """
    x = int(x)
    isp = np.zeros(x + 1, dtype=bool)
    isp[primes_upto(x)] = True
    ps, as_, bs = [], [], []
    amax = math.isqrt(x)
    a_lo = 2
    while a_lo <= amax:
        # pick an a-range holding about `chunk` pairs
        a_hi = min(amax, a_lo + max(1, chunk // max(a_lo, 1)))
        a = np.arange(a_lo, a_hi + 1, dtype=np.int64)
        b = np.arange(1, a_hi, dtype=np.int64)
        A, B = np.meshgrid(a, b, indexing="ij")
        mask = B < A
        n = A * A + B * B
        mask &= n <= x
        n_m = n[mask]
        keep = isp[n_m]
        ps.append(n_m[keep])
        as_.append(A[mask][keep])
        bs.append(B[mask][keep])
        a_lo = a_hi + 1
    if not ps:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z, np.zeros(0)
    p = np.concatenate(ps)
    a = np.concatenate(as_)
    b = np.concatenate(bs)
    order = np.argsort(p, kind="stable")
    p, a, b = p[order], a[order], b[order]
    return p, a, b, np.arctan2(b.astype(float), a.astype(float))
