"""Dense two-phase primal simplex with Bland's anti-cycling rule.

Solves   minimize c.x   subject to   A x = b,  x >= 0.
Problems here are tiny (at most a dozen rows, a few thousand columns), so a
full tableau is simpler and more predictable than anything sparse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS = 1e-11


class Infeasible(Exception):
    pass


class Unbounded(Exception):
    pass


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    basis: list[int]


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    f = T[:, col].copy()
    f[row] = 0.0
    T -= np.outer(f, T[row])


def _run(T: np.ndarray, basis: list[int], ncols: int, max_iter: int) -> None:
    # the objective lives in the last row; T[-1, j] is the reduced cost of column j
    for _ in range(max_iter):
        neg = np.flatnonzero(T[-1, :ncols] < -EPS)
        if neg.size == 0:
            return
        entering = int(neg[0])
        col = T[:-1, entering]
        rhs = T[:-1, -1]
        leave = -1
        best = np.inf
        for i in np.flatnonzero(col > EPS):
            ratio = rhs[i] / col[i]
            if ratio < best - EPS or (abs(ratio - best) <= EPS and basis[i] < basis[leave]):
                best = ratio
                leave = int(i)
        if leave < 0:
            raise Unbounded("objective unbounded below")
        _pivot(T, leave, entering)
        basis[leave] = entering
    raise RuntimeError("simplex iteration limit reached")


def solve_lp(c, A, b, max_iter: int = 50000) -> LPResult:
    """Minimize c.x subject to A x = b, x >= 0."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).reshape(-1)
    c = np.array(c, dtype=float).reshape(-1)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign

    # phase 1 on artificial columns n..n+m-1
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    _run(T, basis, n + m, max_iter)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if -T[-1, -1] > 1e-9 * scale:
        raise Infeasible("no x >= 0 with A x = b")

    # pivot leftover artificials out; rows that cannot be pivoted are redundant
    keep = []
    for i in range(m):
        if basis[i] >= n:
            nz = np.flatnonzero(np.abs(T[i, :n]) > 1e-9)
            if nz.size == 0:
                continue
            _pivot(T, i, int(nz[0]))
            basis[i] = int(nz[0])
        keep.append(i)

    # phase 2
    T2 = np.zeros((len(keep) + 1, n + 1))
    T2[:-1, :n] = T[keep, :n]
    T2[:-1, -1] = T[keep, -1]
    basis = [basis[i] for i in keep]
    T2[-1, :n] = c
    for i, j in enumerate(basis):
        if T2[-1, j] != 0.0:
            T2[-1] -= T2[-1, j] * T2[i]
    _run(T2, basis, n, max_iter)

    x = np.zeros(n)
    for i, j in enumerate(basis):
        x[j] = max(T2[i, -1], 0.0)
    return LPResult(x=x, value=float(c @ x), basis=basis)
