"""Subset combinatorics of k-vectors: k_S, the bilinear form, alpha(k), the
matrices M_S, their saturated integer kernels and the cell decomposition of
Z^{r-1} on which alpha is constant.

A class [S] = {S, S^c} of subsets of {0, ..., r-1} is stored as the bitmask
of its representative not containing r-1, so classes are 0 .. 2^{r-1} - 1.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import InfeasibleN, InfeasibleR

MAX_R = 6
MAX_HYPERCUBE_N = 24


def _full(k: Sequence[int]) -> list[int]:
    return [0, *[int(v) for v in k], 0]


def k_S(k: Sequence[int], S: Iterable[int]) -> int:
    """sum_{j in S} (k_{j+1} - k_j) with k_0 = k_r = 0."""
    kk = _full(k)
    r = len(kk) - 1
    total = 0
    for j in S:
        if not 0 <= j < r:
            raise ValueError(f"index {j} outside 0..{r - 1}")
        total += kk[j + 1] - kk[j]
    return total


def bilinear(l: Sequence[int], k: Sequence[int]) -> int:
    """<l, k> = sum_{j=0}^{r-1} l_{j+1} (k_{j+1} - k_j)."""
    kk = _full(k)
    if len(l) != len(kk) - 1:
        raise ValueError("l must have length r")
    return sum(int(l[j]) * (kk[j + 1] - kk[j]) for j in range(len(l)))


def _diffs(k: Sequence[int]) -> np.ndarray:
    kk = np.array(_full(k), dtype=np.int64)
    return np.diff(kk)


def alpha(k: Sequence[int]) -> int:
    """Half the number of l in {0,1}^r with <l, k> = 0."""
    y = _diffs(k)
    r = y.size
    L = np.array(list(itertools.product((0, 1), repeat=r)), dtype=np.int64)
    return int(np.count_nonzero(L @ y == 0)) // 2


def class_count(r: int) -> int:
    return 1 << (r - 1)


def class_members(r: int, c: int) -> tuple[int, ...]:
    return tuple(j for j in range(r - 1) if c >> j & 1)


def canonical_class(r: int, S: Iterable[int]) -> int:
    """Bitmask of the member of {S, S^c} that omits r-1."""
    s = set(int(j) for j in S)
    if any(not 0 <= j < r for j in s):
        raise ValueError("subset outside 0..r-1")
    if r - 1 in s:
        s = set(range(r)) - s
    return sum(1 << j for j in s)


def alpha_classes(k: Sequence[int]) -> int:
    """Number of classes [S] with k_S = 0."""
    return len(vanishing_classes(k))


def vanishing_classes(k: Sequence[int]) -> frozenset[int]:
    y = _diffs(k)
    r = y.size
    masks = np.arange(class_count(r))
    bits = (masks[:, None] >> np.arange(r)) & 1
    return frozenset(int(c) for c in np.flatnonzero(bits @ y == 0))


def ms_row(r: int, S: Iterable[int]) -> list[int]:
    """Coefficients of k_S in (k_1, ..., k_{r-1})."""
    s = set(S)
    return [int((i - 1) in s) - int(i in s) for i in range(1, r)]


def build_MS(r: int, subsets: Sequence[Iterable[int]]) -> np.ndarray:
    """Rows of k_S for each given representative subset."""
    if not subsets:
        raise ValueError("need at least one subset")
    return np.array([ms_row(r, S) for S in subsets], dtype=np.int64).reshape(len(subsets), r - 1)


def integer_kernel(M) -> np.ndarray:
    """Saturated basis of ker(M) in Z^n, as columns of an n x d array.

    Unimodular column operations bring M to column echelon form M U = [H | 0];
    the trailing columns of U span the kernel lattice exactly.
    """
    A = [[int(v) for v in row] for row in np.atleast_2d(np.asarray(M, dtype=object))]
    n = len(A[0]) if A else 0
    U = [[int(i == j) for j in range(n)] for i in range(n)]

    def colop(i, j, a, b, c, d):
        # (col_i, col_j) <- (a col_i + b col_j, c col_i + d col_j)
        for mat in (A, U):
            for row in mat:
                x, y = row[i], row[j]
                row[i], row[j] = a * x + b * y, c * x + d * y

    piv = 0
    for row in range(len(A)):
        if piv >= n:
            break
        for j in range(piv + 1, n):
            x, y = A[row][piv], A[row][j]
            if y == 0:
                continue
            g, s, t = _xgcd(x, y)
            colop(piv, j, s, t, -y // g, x // g)
        if A[row][piv] != 0:
            piv += 1
    return np.array([[U[i][j] for j in range(piv, n)] for i in range(n)], dtype=np.int64).reshape(n, n - piv)


def _xgcd(a: int, b: int):
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def _rank(M) -> int:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return 0
    return int(np.linalg.matrix_rank(M))


def hypercube_intersection_count(basis: Sequence[Sequence[int]]) -> int:
    """#({0,1}^n intersected with span(basis)), exactly.

    Pick d rows on which the basis is independent; each corner in the span is
    fixed by its values on those rows, so at most 2^d candidates are checked.
    """
    B = np.array(basis, dtype=np.int64)
    if B.ndim == 1:
        B = B[None, :]
    d, n = B.shape
    if n > MAX_HYPERCUBE_N:
        raise InfeasibleN(f"n = {n} exceeds {MAX_HYPERCUBE_N}")
    if d == 0:
        return 1
    if _rank(B) != d:
        raise ValueError("basis vectors are linearly dependent")
    cols = B.T  # n x d
    rows: list[int] = []
    for i in range(n):
        if _rank(cols[rows + [i]]) == len(rows) + 1:
            rows.append(i)
        if len(rows) == d:
            break
    sub = [[Fraction(int(cols[i][j])) for j in range(d)] for i in rows]
    inv = _frac_inverse(sub)
    count = 0
    for y in itertools.product((0, 1), repeat=d):
        c = [sum(inv[i][j] * y[j] for j in range(d)) for i in range(d)]
        ok = True
        for i in range(n):
            v = sum(c[j] * int(cols[i][j]) for j in range(d))
            if v != 0 and v != 1:
                ok = False
                break
        count += ok
    return count


def _frac_inverse(A):
    n = len(A)
    aug = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(A)]
    for col in range(n):
        p = next(i for i in range(col, n) if aug[i][col] != 0)
        aug[col], aug[p] = aug[p], aug[col]
        pv = aug[col][col]
        aug[col] = [v / pv for v in aug[col]]
        for i in range(n):
            if i != col and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[col])]
    return [row[n:] for row in aug]


@dataclass(frozen=True)
class KernelCell:
    """A flat V = ker(M_S) with S closed; the starred cell is V minus its proper subflats."""

    r: int
    defining_classes: frozenset[int]
    kernel_basis: np.ndarray = field(repr=False, compare=False)
    d: int
    alpha: int
    maximal: bool = True

    def classes_as_subsets(self) -> list[tuple[int, ...]]:
        return [class_members(self.r, c) for c in sorted(self.defining_classes)]

    def contains(self, k: Sequence[int]) -> bool:
        return vanishing_classes(k) >= self.defining_classes

    def to_dict(self) -> dict:
        return {
            "classes": [list(s) for s in self.classes_as_subsets()],
            "basis": self.kernel_basis.T.tolist(),
            "d": self.d,
            "alpha": self.alpha,
        }


def _class_rows(r: int) -> np.ndarray:
    return np.array([ms_row(r, class_members(r, c)) for c in range(class_count(r))], dtype=np.int64).reshape(
        class_count(r), r - 1
    )


def _closure(rows: np.ndarray, chosen: Iterable[int]):
    chosen = sorted(chosen)
    M = rows[chosen] if chosen else np.zeros((1, rows.shape[1]), dtype=np.int64)
    K = integer_kernel(M)
    closed = frozenset(int(c) for c in np.flatnonzero(~np.any(rows @ K != 0, axis=1))) if K.size else frozenset(
        range(rows.shape[0])
    )
    return closed, K


def _flats(r: int, rows: np.ndarray, seed: Iterable[int]) -> list[KernelCell]:
    start, K = _closure(rows, seed)
    seen = {start: K}
    queue = deque([start])
    while queue:
        cur = queue.popleft()
        for c in range(rows.shape[0]):
            if c in cur:
                continue
            nxt, Kn = _closure(rows, cur | {c})
            if nxt not in seen:
                seen[nxt] = Kn
                queue.append(nxt)
    cells = [
        KernelCell(r, cl, K, int(K.shape[1]), len(cl))
        for cl, K in seen.items()
    ]
    cells.sort(key=lambda c: (-c.d, c.alpha, sorted(c.defining_classes)))
    return cells


def enumerate_cells(r: int) -> list[KernelCell]:
    """All flats of the arrangement {k_S = 0} in Z^{r-1}.

    Flats are reached by adding one class at a time and closing; a flat is
    identified by its closed class set.  The starred cells partition Z^{r-1}
    and alpha on the starred cell of V is the size of its class set.
    """
    if r < 2:
        raise ValueError("r must be >= 2")
    if r > MAX_R:
        raise InfeasibleR(f"r = {r} exceeds {MAX_R} for exhaustive enumeration")
    return _flats(r, _class_rows(r), [])


def classify(k: Sequence[int], cells: Sequence[KernelCell]) -> KernelCell:
    """The unique cell whose starred part holds k."""
    key = vanishing_classes(k)
    for cell in cells:
        if cell.defining_classes == key:
            return cell
    raise ValueError("k is not covered by the given cells")


def containment(cells: Sequence[KernelCell]) -> dict[int, list[int]]:
    """For each cell index, indices of the cells strictly inside it."""
    out = {}
    for i, a in enumerate(cells):
        out[i] = [j for j, b in enumerate(cells) if j != i and b.defining_classes > a.defining_classes]
    return out


def lifted_cells(r: int) -> list[KernelCell]:
    """Flats of Z^{2r-1} lying in the hyperplane k_r = 0."""
    R = 2 * r
    if R > MAX_R:
        raise InfeasibleR(f"lifted enumeration needs 2r <= {MAX_R}")
    mu = canonical_class(R, range(r))
    return _flats(R, _class_rows(R), [mu])


def cells_to_json(r: int, cells: Sequence[KernelCell]) -> str:
    return json.dumps({"r": r, "cells": [c.to_dict() for c in cells]}, indent=2)


def cells_table(r: int, cells: Sequence[KernelCell]) -> str:
    """Plain-text listing: dimension, alpha, basis, defining classes."""
    lines = [f"r = {r}: {len(cells)} cells", f"{'d':>2} {'alpha':>5}  basis  |  classes"]
    for c in cells:
        basis = " ".join(str(tuple(int(v) for v in col)) for col in c.kernel_basis.T) or "(0)"
        cls = " ".join("{" + ",".join(map(str, s)) + "}" for s in c.classes_as_subsets())
        lines.append(f"{c.d:>2} {c.alpha:>5}  {basis}  |  {cls}")
    return "\n".join(lines) + "\n"
