"""Arithmetic families N_{M,n0}(x) of squarefree radii built from M split
primes, averages of lambda-products over them, the Euler factor g(k;Y) by two
routes, L(1,4k) by two routes, and Hecke prime sums.

lambda_{4m}(p) = 2 cos(4 m theta_p) for a split prime p; for squarefree n
the lambda-product is the product of the per-prime values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .circle_points import FactoredRadius
from .correlation import batched_correlation
from .errors import EmptyFamily, InfeasibleN, ZeroK
from .gaussian_core import prime_angle_table, primes_upto, split_prime
from .kernels import SmoothingKernel
from .subsets import alpha, class_count, class_members, k_S

MAX_X = 10**9


@dataclass(frozen=True)
class FamilySpec:
    x: int
    M: int
    n0: FactoredRadius = field(default_factory=FactoredRadius)

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.x > MAX_X:
            raise InfeasibleN(f"x = {self.x} exceeds desk scale {MAX_X}")

    @property
    def excluded(self) -> set[int]:
        return {sp.p for sp, _ in self.n0.split_factors}


# ---- per-prime tables --------------------------------------------------------


@dataclass(frozen=True)
class PrimeTable:
    p: np.ndarray
    theta: np.ndarray

    @classmethod
    def build(cls, x: int, exclude: set[int] = frozenset()) -> "PrimeTable":
        p, _, _, th = prime_angle_table(max(int(x), 5))
        keep = ~np.isin(p, np.array(sorted(exclude), dtype=np.int64))
        return cls(p[keep], th[keep])


def lambda_product_primes(theta: np.ndarray, k: Sequence[int]) -> np.ndarray:
    """prod_{j=0}^{r-1} 2 cos(4 (k_{j+1} - k_j) theta) per prime."""
    kk = [0, *[int(v) for v in k], 0]
    out = np.ones_like(theta)
    for j in range(len(kk) - 1):
        out = out * (2.0 * np.cos(4 * (kk[j + 1] - kk[j]) * theta))
    return out


def s_values(theta: np.ndarray, k: Sequence[int]) -> np.ndarray:
    """s(p;k) = sum over classes [S] with k_S != 0 of 2 cos(8 k_S theta_p)."""
    r = len(k) + 1
    out = np.zeros_like(theta)
    for c in range(class_count(r)):
        ks = k_S(k, class_members(r, c))
        if ks != 0:
            out = out + 2.0 * np.cos(8 * ks * theta)
    return out


# ---- family enumeration ------------------------------------------------------


def enumerate_family(spec: FamilySpec) -> Iterator[FactoredRadius]:
    """Depth-first products of M distinct split primes, pruned by the running
    product, yielded in increasing order of n."""
    bound = spec.x
    ps = [int(p) for p in primes_upto(max(bound // 5 ** (spec.M - 1), 2)) if p % 4 == 1]
    ps = [p for p in ps if p not in spec.excluded]
    found: list[tuple[int, tuple[int, ...]]] = []

    def dfs(start: int, depth: int, prod: int, chosen: tuple[int, ...]):
        if depth == spec.M:
            found.append((prod, chosen))
            return
        for i in range(start, len(ps)):
            p = ps[i]
            # remaining primes are at least p, p_next, ...
            if prod * p ** (spec.M - depth) > bound:
                break
            dfs(i + 1, depth + 1, prod * p, chosen + (p,))

    dfs(0, 0, 1, ())
    found.sort()
    for _, primes in found:
        yield FactoredRadius.from_primes(primes)


def family_table(spec: FamilySpec) -> tuple[PrimeTable, np.ndarray]:
    """(prime table, index array count x M) for the whole family, vectorised.

    Rows hold increasing prime indices i_1 < ... < i_M with prod p <= x.
    """
    M, x = spec.M, spec.x
    smallest = [5, 13, 17, 29, 37, 41, 53, 61]
    top = x // math.prod(smallest[: M - 1]) if M > 1 else x
    table = PrimeTable.build(max(top, 5), spec.excluded)
    p = table.p.astype(np.int64)
    rows = np.arange(p.size, dtype=np.int64)[:, None]
    prods = p.copy()
    for depth in range(1, M):
        last = rows[:, -1]
        rem = M - depth
        # next index j > last with prod * p_j * p_{j+1}... <= x; bound by prod * p_j^rem
        cap = np.floor((x / prods) ** (1.0 / rem)).astype(np.int64) + 1
        hi = np.searchsorted(p, cap, side="right")
        lo = last + 1
        cnt = np.maximum(hi - lo, 0)
        rep = np.repeat(np.arange(rows.shape[0]), cnt)
        within = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        nxt = lo[rep] + within
        rows = np.column_stack((rows[rep], nxt))
        prods = prods[rep] * p[nxt]
    keep = prods <= x
    rows, prods = rows[keep], prods[keep]
    order = np.argsort(prods, kind="stable")
    return table, rows[order]


def family_size(spec: FamilySpec) -> int:
    return family_table(spec)[1].shape[0]


def empirical_average(spec: FamilySpec, k: Sequence[int], table=None) -> float:
    """Mean over the family of prod_j lambda_{4(k_{j+1}-k_j)}(n)."""
    tab, rows = table if table is not None else family_table(spec)
    if rows.shape[0] == 0:
        raise EmptyFamily(f"no members for x = {spec.x}, M = {spec.M}")
    per = lambda_product_primes(tab.theta, k)
    vals = np.prod(per[rows], axis=1)
    return math.fsum(vals) / rows.shape[0]


def average_by_enumeration(spec: FamilySpec, k: Sequence[int]) -> float:
    from .circle_points import lambda_product

    vals = [lambda_product(fr, k) for fr in enumerate_family(spec)]
    if not vals:
        raise EmptyFamily(f"no members for x = {spec.x}, M = {spec.M}")
    return math.fsum(vals) / len(vals)


# ---- g(k;Y) ------------------------------------------------------------------


@dataclass(frozen=True)
class EulerResult:
    value: float
    tail_estimate: float


def _local_terms(theta, p, k, Y):
    a = alpha(k)
    return Y * s_values(theta, k) / (a * p * (1.0 + 2.0 * Y / p))


def g_euler(k: Sequence[int], Y: float, P: int = 10**6, n0: FactoredRadius = FactoredRadius(),
            table: PrimeTable | None = None) -> EulerResult:
    """prod over split p <= P, (p, n0) = 1 of (1 + Y s(p;k) / (alpha p (1 + 2Y/p))).

    The tail estimate is the change in the product over the last half of the
    prime range.
    """
    if P < 1000:
        raise ValueError("prime cutoff must be >= 1000")
    tab = table or PrimeTable.build(P, {sp.p for sp, _ in n0.split_factors})
    sel = tab.p <= P
    p = tab.p[sel].astype(float)
    t = _local_terms(tab.theta[sel], p, k, Y)
    logs = np.log1p(t)
    total = math.fsum(logs)
    tail = abs(math.fsum(logs[p > P / 2]))
    return EulerResult(math.exp(total), math.exp(total) * tail)


def g_dirichlet(k: Sequence[int], Y: float, y: int = 10**5, n0: FactoredRadius = FactoredRadius()) -> float:
    """sum over squarefree m <= y built from split primes coprime to n0 of
    alpha^{-Omega_1(m)} w(m;Y) s(m;k) / m, all factors multiplicative."""
    tab = PrimeTable.build(max(y, 5), {sp.p for sp, _ in n0.split_factors})
    sel = tab.p <= y
    ps = [int(v) for v in tab.p[sel]]
    f = _local_terms(tab.theta[sel], tab.p[sel].astype(float), k, Y).tolist()
    if Y == 0 or not ps:
        return 1.0
    terms = [1.0]
    # stack of (next index, m, value)
    stack = [(0, 1, 1.0)]
    while stack:
        start, m, val = stack.pop()
        for i in range(start, len(ps)):
            mp = m * ps[i]
            if mp > y:
                break
            v = val * f[i]
            terms.append(v)
            stack.append((i + 1, mp, v))
    return math.fsum(terms)


# ---- L(1,4k) -----------------------------------------------------------------


def L_one_euler(k: int, P: int = 10**7) -> float:
    """Euler product of L(s,4k) at s = 1 over primes <= P.

    Local factors: (1 - (-1)^k/2)^{-1} at the ramified prime (1+i);
    (1 - q^{-2})^{-1} at inert q = 3 mod 4; (1 - 2cos(4k theta_p)/p + p^{-2})^{-1}
    at split p.
    """
    k = int(k)
    if k == 0:
        raise ZeroK("L(s,0) has a pole at s = 1")
    ps = primes_upto(P)
    inert = ps[ps % 4 == 3].astype(float)
    tab = PrimeTable.build(P)
    p = tab.p.astype(float)
    logs = [-math.log1p(-((-1) ** k) / 2.0)]
    logs.extend(-np.log1p(-1.0 / inert**2))
    logs.extend(-np.log1p(-2.0 * np.cos(4 * k * tab.theta) / p + 1.0 / p**2))
    return math.exp(math.fsum(logs))


def L_one_lattice(k: int, y: int = 10**7, chunk: int = 1 << 22) -> float:
    """sum over ideals of norm <= y of Xi_{4k}(a)/N(a): Gaussian integers
    a + bi with a > 0, b >= 0 represent each nonzero ideal once."""
    k = int(k)
    if k == 0:
        raise ZeroK("L(s,0) has a pole at s = 1")
    amax = math.isqrt(y)
    parts = []
    a0 = 1
    while a0 <= amax:
        a1 = min(amax, a0 + max(1, chunk // (amax + 1)))
        a = np.arange(a0, a1 + 1, dtype=np.int64)
        bmax = np.floor(np.sqrt(np.maximum(y - a * a, 0))).astype(np.int64)
        cnt = bmax + 1
        A = np.repeat(a, cnt)
        B = np.arange(cnt.sum()) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        n = (A * A + B * B).astype(float)
        ang = np.arctan2(B.astype(float), A.astype(float))
        parts.append(math.fsum(np.cos(4 * k * ang) / n))
        a0 = a1 + 1
    return math.fsum(parts)


def L_one(k: int, P: int = 10**7, y: int = 10**7) -> tuple[float, float]:
    """(Euler-product value, lattice-sum value) of L(1,4k)."""
    return L_one_euler(k, P), L_one_lattice(k, y)


# ---- Hecke sums and LSD ----------------------------------------------------


def hecke_prime_sum(x: int, k: Sequence[int], n0: FactoredRadius = FactoredRadius(),
                    table: PrimeTable | None = None) -> tuple[float, float]:
    """(sum over split p <= x, p not dividing n0, of prod_j lambda(p) log p,
    that sum divided by alpha(k) x)."""
    if x > 10**8:
        raise InfeasibleN("hecke_prime_sum is limited to x <= 1e8")
    tab = table or PrimeTable.build(x, {sp.p for sp, _ in n0.split_factors})
    sel = tab.p <= x
    vals = lambda_product_primes(tab.theta[sel], k) * np.log(tab.p[sel].astype(float))
    total = math.fsum(vals)
    return total, total / (alpha(k) * x)


def lsd_Y(x: float, M: int) -> float:
    if x <= math.e**math.e:
        raise ValueError("Y = (M-1)/log log x needs x > e^e")
    return (M - 1) / math.log(math.log(x))


@dataclass(frozen=True)
class LSDRecord:
    empirical: float
    predicted: float
    ratio: float
    family_size: int
    Y: float
    g: float

    def to_dict(self) -> dict:
        return self.__dict__.copy()


def lsd_compare(spec: FamilySpec, k: Sequence[int], P: int = 10**6, table=None,
                g_table: PrimeTable | None = None) -> LSDRecord:
    """Family average against (2 alpha(k))^M g(k;Y), Y = (M-1)/log log x."""
    Y = lsd_Y(spec.x, spec.M)
    tab = table if table is not None else family_table(spec)
    emp = empirical_average(spec, k, tab)
    g = g_euler(k, Y, P, spec.n0, g_table).value
    pred = (2 * alpha(k)) ** spec.M * g
    return LSDRecord(emp, pred, emp / pred, int(tab[1].shape[0]), Y, g)


# ---- correlations over the family ------------------------------------------


def member_angles(theta: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Angles sum_i (+-theta_{p_i}) mod pi/2 for each row, 2^M per member."""
    from .circle_points import reduce_quarter

    th = theta[rows]  # count x M
    acc = np.zeros((th.shape[0], 1))
    for j in range(th.shape[1]):
        acc = np.concatenate((acc - th[:, j : j + 1], acc + th[:, j : j + 1]), axis=1)
    return reduce_quarter(acc)


def corr_family_values(spec: FamilySpec, kernel: SmoothingKernel, r: int, table=None,
                       chunk: int = 1 << 14) -> np.ndarray:
    """R_r(n; F_N) for every family member, N = 2^M."""
    tab, rows = table if table is not None else family_table(spec)
    if spec.n0.n != 1:
        from .circle_points import angles as radius_angles

        betas = radius_angles(spec.n0).angles
    else:
        betas = np.zeros(1)
    out = []
    for s in range(0, rows.shape[0], chunk):
        base = member_angles(tab.theta, rows[s : s + chunk])
        pts = (betas[None, :, None] + base[:, None, :]).reshape(base.shape[0], -1)
        out.append(batched_correlation(pts, kernel, r))
    return np.concatenate(out) if out else np.zeros(0)


def corr_family_average(spec: FamilySpec, kernel: SmoothingKernel, r: int, moment: int = 1,
                        table=None) -> float:
    if moment not in (1, 2):
        raise ValueError("moment must be 1 or 2")
    vals = corr_family_values(spec, kernel, r, table)
    if vals.size == 0:
        raise EmptyFamily(f"no members for x = {spec.x}, M = {spec.M}")
    return math.fsum(vals**moment) / vals.size
