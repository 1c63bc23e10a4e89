"""Radii in factored form, their lattice-point angles mod pi/2, and the
Fourier coefficients lambda_{4k}(n) of the angle measure."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np
from sympy import factorint

from .gaussian_core import DEFAULT_CONTEXT, PrecisionContext, SplitPrime, split_prime

HALF_PI = math.pi / 2
# pi/2 = _HP_HI + _HP_LO to about 2^-106
_HP_HI = HALF_PI
_HP_LO = 6.123233995736766e-17


def reduce_quarter(x):
    """Reduce angles into [0, pi/2) with a two-term pi/2 (one correction step)."""
    x = np.asarray(x, dtype=float)
    q = np.floor(x / _HP_HI)
    r = (x - q * _HP_HI) - q * _HP_LO
    r = np.where(r < 0, r + _HP_HI, r)
    r = np.where(r >= _HP_HI, r - _HP_HI, r)
    return r


@dataclass(frozen=True)
class FactoredRadius:
    """n = 2^two_exp * prod q^e (q = 3 mod 4, e even) * prod p^a (p split)."""

    two_exp: int = 0
    inert_factors: tuple[tuple[int, int], ...] = ()
    split_factors: tuple[tuple[SplitPrime, int], ...] = ()

    def __post_init__(self):
        if self.two_exp < 0:
            raise ValueError("two_exp must be >= 0")
        for q, e in self.inert_factors:
            if q % 4 != 3 or e % 2 or e < 0:
                raise ValueError(f"inert factor {q}^{e} must have q = 3 mod 4 and even exponent")
        ps = [sp.p for sp, _ in self.split_factors]
        if len(set(ps)) != len(ps):
            raise ValueError("split primes must be pairwise distinct")
        if any(a < 1 for _, a in self.split_factors):
            raise ValueError("split exponents must be >= 1")
        object.__setattr__(
            self, "split_factors", tuple(sorted(self.split_factors, key=lambda t: t[0].p))
        )
        object.__setattr__(self, "inert_factors", tuple(sorted(self.inert_factors)))

    @classmethod
    def from_primes(cls, primes: Iterable[int], exponents: Sequence[int] | None = None,
                    two_exp: int = 0, inert: Sequence[tuple[int, int]] = ()):
        primes = [int(p) for p in primes]
        if exponents is None:
            exponents = [1] * len(primes)
        if len(set(primes)) != len(primes):
            raise ValueError("repeated prime in radius specification")
        return cls(two_exp, tuple(inert), tuple((split_prime(p), int(a)) for p, a in zip(primes, exponents)))

    @classmethod
    def from_integer(cls, n: int) -> "FactoredRadius":
        """Factor a desk-scale integer; raises ValueError when b(n) = 0."""
        n = int(n)
        if n < 1:
            raise ValueError("n must be >= 1")
        two, inert, split = 0, [], []
        for q, e in sorted(factorint(n).items()):
            if q == 2:
                two = e
            elif q % 4 == 3:
                if e % 2:
                    raise ValueError(f"{n} is not a sum of two squares")
                inert.append((q, e))
            else:
                split.append((split_prime(q), e))
        return cls(two, tuple(inert), tuple(split))

    @property
    def n(self) -> int:
        v = 2**self.two_exp
        for q, e in self.inert_factors:
            v *= q**e
        for sp, a in self.split_factors:
            v *= sp.p**a
        return v

    def __mul__(self, other: "FactoredRadius") -> "FactoredRadius":
        if math.gcd(self.n, other.n) != 1:
            raise ValueError("radii must be coprime")
        return FactoredRadius(
            self.two_exp + other.two_exp,
            self.inert_factors + other.inert_factors,
            self.split_factors + other.split_factors,
        )

    def to_dict(self) -> dict:
        return {
            "n": str(self.n),
            "two_exp": self.two_exp,
            "inert": [[q, e] for q, e in self.inert_factors],
            "split": [[sp.p, a] for sp, a in self.split_factors],
        }


@dataclass(frozen=True)
class AngleSet:
    n: int
    N: int
    angles: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.angles, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "angles", arr)
        if arr.shape != (self.N,):
            raise ValueError("angle count does not match N")

    def to_csv(self) -> str:
        lines = ["angle"] + [f"{a:.17g}" for a in self.angles]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {"n": str(self.n), "N": self.N, "angles": [float(f"{a:.17g}") for a in self.angles]}
        )

    @classmethod
    def from_json(cls, text: str) -> "AngleSet":
        d = json.loads(text)
        return cls(int(d["n"]), int(d["N"]), np.array(d["angles"], dtype=float))

    @classmethod
    def from_csv(cls, text: str, n: int = 0) -> "AngleSet":
        rows = [r for r in text.strip().splitlines()[1:] if r]
        arr = np.array([float(r) for r in rows])
        return cls(n, len(arr), np.sort(arr))


def r_of(fr: FactoredRadius) -> int:
    out = 1
    for _, a in fr.split_factors:
        out *= a + 1
    return out


def _base_rotation(fr: FactoredRadius) -> float:
    # (1+i)^e has argument e*pi/4; mod pi/2 that is pi/4 for odd e
    return math.pi / 4 if fr.two_exp % 2 else 0.0


def angles(fr: FactoredRadius, ctx: PrecisionContext = DEFAULT_CONTEXT) -> AngleSet:
    """All r(n) angles  sum_t (2 l_t - a_t) theta_{p_t}  mod pi/2, sorted.

    Multiplicities are kept.  Contexts above 64 bits accumulate in mpmath
    before rounding to binary64.
    """
    if ctx.mantissa_bits > 64:
        return _angles_mp(fr, ctx)
    acc = np.array([_base_rotation(fr)])
    for sp, a in fr.split_factors:
        shifts = (2 * np.arange(a + 1) - a) * sp.theta
        acc = reduce_quarter((acc[:, None] + shifts[None, :]).ravel())
    return AngleSet(fr.n, acc.size, np.sort(acc))


def _angles_mp(fr: FactoredRadius, ctx: PrecisionContext) -> AngleSet:
    with mpmath.workprec(ctx.mantissa_bits):
        hp = mpmath.pi / 2
        acc = [mpmath.pi / 4 if fr.two_exp % 2 else mpmath.mpf(0)]
        for sp, a in fr.split_factors:
            th = sp.theta_mp(ctx)
            acc = [x + (2 * l - a) * th for x in acc for l in range(a + 1)]
        vals = [float(x - mpmath.floor(x / hp) * hp) for x in acc]
    vals = [0.0 if v >= HALF_PI else v for v in vals]
    return AngleSet(fr.n, len(vals), np.sort(np.array(vals)))


def brute_force_angles(n: int) -> AngleSet:
    """Angles from a direct scan of x^2 + y^2 = n, one point per quarter-turn orbit."""
    n = int(n)
    xs = np.arange(1, math.isqrt(n) + 1, dtype=np.int64)
    rest = n - xs * xs
    ys = np.sqrt(rest.astype(float)).round().astype(np.int64)
    hit = ys * ys == rest
    # representative with x > 0, y >= 0
    pts = np.arctan2(ys[hit].astype(float), xs[hit].astype(float))
    pts = np.sort(pts)
    return AngleSet(n, pts.size, pts)


def lambda_4k(fr: FactoredRadius, k: int) -> float:
    """lambda_{4k}(n) = sum over angles of exp(4 i k theta), which is real."""
    k = int(k)
    val = -1.0 if (fr.two_exp * k) % 2 else 1.0
    for sp, a in fr.split_factors:
        ls = 2 * np.arange(a + 1) - a
        val *= float(np.cos(4 * k * ls * sp.theta).sum())
    return val


def lambda_exact(fr: FactoredRadius, k: int) -> Fraction:
    """lambda_{4k}(n) as an exact rational from powers of a + bi."""
    k = abs(int(k))
    val = Fraction(-1 if (fr.two_exp * k) % 2 else 1)
    for sp, a in fr.split_factors:
        # e^{4ik theta_p} = (a+bi)^{4k} / p^{2k};  cos(4 k m theta) = Re((a+bi)^{4km}) / p^{2km}
        z = complex_pow((sp.a, sp.b), 4 * k)
        total = Fraction(0)
        for l in range(a + 1):
            m = abs(2 * l - a)
            re, _ = complex_pow(z, m)
            total += Fraction(re, sp.p ** (2 * k * m))
        val *= total
    return val


def complex_pow(z: tuple[int, int], e: int) -> tuple[int, int]:
    re, im = 1, 0
    a, b = z
    while e:
        if e & 1:
            re, im = re * a - im * b, re * b + im * a
        a, b = a * a - b * b, 2 * a * b
        e >>= 1
    return re, im


def lambda_product(fr: FactoredRadius, k_vec: Sequence[int]) -> float:
    """ell_k(n) = prod_{j=0}^{r-1} lambda_{4(k_{j+1} - k_j)}(n) with k_0 = k_r = 0."""
    ks = [0, *[int(v) for v in k_vec], 0]
    out = 1.0
    for j in range(len(ks) - 1):
        out *= lambda_4k(fr, ks[j + 1] - ks[j])
    return out
