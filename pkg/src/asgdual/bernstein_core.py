"""Polynomials in the monomial and Bernstein bases.

A degree-m Bernstein vector ``v`` represents the polynomial

    sum_i v[i] * C(m, i) * x**i * (1 - x)**(m - i)

Conversions between the two bases use explicit triangular change-of-basis
matrices. Binomials and hypergeometric weights go through log-gamma so that
degrees of several hundred do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial stored by monomial coefficients, lowest degree first."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float]):
        c = tuple(float(a) for a in coeffs)
        if not c:
            c = (0.0,)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def trimmed(self, tol: float = 0.0) -> "Polynomial":
        """Drop trailing coefficients with absolute value <= tol."""
        c = list(self.coeffs)
        while len(c) > 1 and abs(c[-1]) <= tol:
            c.pop()
        return Polynomial(c)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a in reversed(self.coeffs):
            out = out * x + a
        return out if out.ndim else float(out)

    def to_json(self) -> list[float]:
        return list(self.coeffs)

    @classmethod
    def from_json(cls, data: Sequence[float]) -> "Polynomial":
        return cls(data)


@dataclass(frozen=True)
class BernsteinVector:
    """Coefficients of a polynomial in the degree-``degree`` Bernstein basis."""

    v: np.ndarray

    def __init__(self, v: Sequence[float]):
        arr = np.array(v, dtype=float).reshape(-1)
        if arr.size == 0:
            raise ValueError("a Bernstein vector needs at least one coefficient")
        arr.setflags(write=False)
        object.__setattr__(self, "v", arr)

    @property
    def degree(self) -> int:
        return self.v.size - 1

    def __len__(self) -> int:
        return self.v.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, BernsteinVector):
            return NotImplemented
        return self.v.shape == other.v.shape and bool(np.all(self.v == other.v))

    def __hash__(self) -> int:
        return hash(self.v.tobytes())


# ---------------------------------------------------------------------------
# combinatorics
# ---------------------------------------------------------------------------

def log_binom(n: int, k: int) -> float:
    """log C(n, k); -inf outside 0 <= k <= n."""
    if k < 0 or k > n or n < 0:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def binom(n: int, k: int) -> float:
    """C(n, k) as a float (exact for small arguments)."""
    if k < 0 or k > n or n < 0:
        return 0.0
    if n <= 60:
        return float(math.comb(n, k))
    return math.exp(log_binom(n, k))


def hypergeom_pmf(population: int, marked: int, draws: int, i: int) -> float:
    """P(K = i) for K the number of marked items among ``draws`` taken without
    replacement from ``population`` items of which ``marked`` are marked."""
    if not (0 <= marked <= population and 0 <= draws <= population):
        raise ValueError("need 0 <= marked, draws <= population")
    lo = max(0, draws - (population - marked))
    hi = min(draws, marked)
    if i < lo or i > hi:
        return 0.0
    lp = (log_binom(marked, i) + log_binom(population - marked, draws - i)
          - log_binom(population, draws))
    return math.exp(lp)


@lru_cache(maxsize=4096)
def _hypergeom_table(population: int, marked: int, draws: int) -> np.ndarray:
    out = np.array([hypergeom_pmf(population, marked, draws, i)
                    for i in range(draws + 1)])
    out.setflags(write=False)
    return out


def hypergeom_vector(population: int, marked: int, draws: int) -> np.ndarray:
    """Full pmf of K over 0..draws (read-only, cached)."""
    return _hypergeom_table(population, marked, draws)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _check_unit(x: float) -> float:
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x={x} outside [0, 1]")
    return x


def bernstein_eval(v: BernsteinVector | Sequence[float], x: float) -> float:
    """Evaluate <B_m(x), v> by de Casteljau's algorithm."""
    x = _check_unit(x)
    coef = np.array(v.v if isinstance(v, BernsteinVector) else v, dtype=float)
    if x == 0.0:
        return float(coef[0])
    if x == 1.0:
        return float(coef[-1])
    y = 1.0 - x
    for m in range(coef.size - 1, 0, -1):
        coef[:m] = y * coef[:m] + x * coef[1:m + 1]
    return float(coef[0])


def bernstein_basis(m: int, x: float) -> np.ndarray:
    """Vector (b_{0,m}(x), ..., b_{m,m}(x)), computed in log space."""
    x = _check_unit(x)
    out = np.zeros(m + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    if x == 1.0:
        out[m] = 1.0
        return out
    i = np.arange(m + 1)
    return np.exp(_log_binom_row(m) + i * math.log(x) + (m - i) * math.log1p(-x))


@lru_cache(maxsize=2048)
def _log_binom_row(m: int) -> np.ndarray:
    row = np.array([log_binom(m, k) for k in range(m + 1)])
    row.setflags(write=False)
    return row


# ---------------------------------------------------------------------------
# change of basis
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _monomial_to_bernstein(m: int) -> np.ndarray:
    # v_i = sum_{k<=i} C(i,k)/C(m,k) c_k
    M = np.zeros((m + 1, m + 1))
    for i in range(m + 1):
        for k in range(i + 1):
            M[i, k] = binom(i, k) / binom(m, k)
    M.setflags(write=False)
    return M


@lru_cache(maxsize=256)
def _bernstein_to_monomial(m: int) -> np.ndarray:
    # c_k = C(m,k) sum_{i<=k} (-1)^{k-i} C(k,i) v_i
    M = np.zeros((m + 1, m + 1))
    for k in range(m + 1):
        bmk = binom(m, k)
        for i in range(k + 1):
            M[k, i] = bmk * binom(k, i) * (-1.0) ** (k - i)
    M.setflags(write=False)
    return M


def bcv_from_monomial(p: Polynomial, m: int) -> BernsteinVector:
    """Degree-m Bernstein coefficients of ``p``."""
    if m < p.degree:
        p = p.trimmed()
        if m < p.degree:
            raise ValueError(f"degree {m} is below the polynomial degree {p.degree}")
    c = np.zeros(m + 1)
    c[:len(p.coeffs)] = p.coeffs
    return BernsteinVector(_monomial_to_bernstein(m) @ c)


def monomial_from_bcv(v: BernsteinVector) -> Polynomial:
    """Monomial coefficients of the polynomial carried by ``v`` (same degree)."""
    return Polynomial(_bernstein_to_monomial(v.degree) @ v.v)


def degree_elevate(v: BernsteinVector, target: int) -> BernsteinVector:
    """Represent the same polynomial in the degree-``target`` basis."""
    m = v.degree
    if target < m:
        raise ValueError(f"cannot elevate degree {m} down to {target}")
    if target == m:
        return v
    out = np.zeros(target + 1)
    for j in range(target + 1):
        # weight of v_i in coordinate j: C(m,i) C(target-m, j-i) / C(target, j)
        w = hypergeom_vector(target, m, j)
        out[j] = float(w @ v.v[:w.size]) if w.size <= m + 1 else float(w[:m + 1] @ v.v)
    return BernsteinVector(out)
