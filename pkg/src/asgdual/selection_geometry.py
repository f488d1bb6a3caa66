"""Selection mechanisms, their Bernstein images, and minimal decompositions.

A selection mechanism is a pair (beta, p): branching rates ``beta[l]`` for
orders l = 2..m and colouring rules ``p[l]`` of length l + 1. Its image under
the drift map is the vector of interior degree-m Bernstein coefficients of

    sum_l beta_l * sum_i b_{i,l}(x) * (p_{i,l} - i/l).

With ``theta_l(p)`` the hypergeometric smoothing of an l-rule to degree m and
``u_m = (i/m)_i``, the image is ``sum_l beta_l (theta_l(p_l) - u_m)``. The set
of images with effective branching rate ``sum_l beta_l (l-1) <= lam`` is a
polytope that scales linearly in ``lam``. Its extreme directions are

    w(l, p) = (theta_l(p) - u_m) / (l - 1),   p deterministic,

so the smallest rate reaching a target ``rho`` solves

    minimize sum_j mu_j   subject to   sum_j mu_j w_j = rho,  mu >= 0.

Recovering (beta, p) from optimal weights: group the support by order l,
set ``m_l = sum_{j in l} mu_j``, ``beta_l = m_l / (l - 1)`` and let ``p_l`` be
the ``mu``-weighted mean of the deterministic rules in the group. Because the
image is affine in each ``p_l``,

    beta_l (theta_l(p_l) - u_m) = sum_{j in l} mu_j w_j,

so the drift is reproduced and ``sum_l beta_l (l - 1) = sum_j mu_j``. Orders
with no weight get the uniform rule as a placeholder.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from ._simplex import Infeasible, solve_lp
from .bernstein_core import (
    BernsteinVector,
    Polynomial,
    bcv_from_monomial,
    degree_elevate,
    hypergeom_vector,
)

MAX_M = 12
TOL = 1e-9


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ColouringRule:
    """Rules p[l] for l = 2..m; p[l][i] is the chance that a replacement with
    i type-a potential parents out of l produces type a."""

    m: int
    p: Mapping[int, np.ndarray]

    def __init__(self, m: int, p: Mapping[int, Sequence[float]] | None = None):
        if m < 2:
            raise ValueError("need m >= 2")
        rules = {}
        p = dict(p or {})
        for ell in range(2, m + 1):
            if ell in p or str(ell) in p:
                arr = np.array(p.get(ell, p.get(str(ell))), dtype=float)
            else:
                arr = np.arange(ell + 1) / ell
            if arr.shape != (ell + 1,):
                raise ValueError(f"rule for l={ell} needs {ell + 1} entries")
            if arr[0] != 0.0 or arr[-1] != 1.0:
                raise ValueError(f"rule for l={ell} must start at 0 and end at 1")
            if np.any(arr < -1e-12) or np.any(arr > 1 + 1e-12):
                raise ValueError(f"rule for l={ell} has entries outside [0, 1]")
            arr = np.clip(arr, 0.0, 1.0)
            arr.setflags(write=False)
            rules[ell] = arr
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "p", rules)

    def __getitem__(self, ell: int) -> np.ndarray:
        return self.p[ell]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ColouringRule) or other.m != self.m:
            return False
        return all(np.array_equal(self.p[l], other.p[l]) for l in self.p)

    def __hash__(self) -> int:
        return hash((self.m, tuple(self.p[l].tobytes() for l in sorted(self.p))))

    def reversed(self) -> "ColouringRule":
        """The rule with a and A swapped: pbar_{i,l} = 1 - p_{l-i,l}."""
        return ColouringRule(self.m, {l: 1.0 - self.p[l][::-1] for l in self.p})

    def is_deterministic(self) -> bool:
        return all(np.all((v == 0.0) | (v == 1.0)) for v in self.p.values())

    def to_json(self) -> dict:
        return {str(l): self.p[l].tolist() for l in sorted(self.p)}


def uniform_rule(m: int) -> ColouringRule:
    return ColouringRule(m)


def fittest_wins_rule(m: int) -> ColouringRule:
    """Type a is produced only if every potential parent is a."""
    return ColouringRule(m, {l: [0.0] * l + [1.0] for l in range(2, m + 1)})


def minority_rule(m: int) -> ColouringRule:
    """p_{i,l} = 1 for 1 <= i <= floor(l/2), plus the fixed endpoints."""
    out = {}
    for l in range(2, m + 1):
        r = [1.0 if 1 <= i <= l // 2 else 0.0 for i in range(l + 1)]
        r[l] = 1.0
        out[l] = r
    return ColouringRule(m, out)


@dataclass(frozen=True)
class SelectionMechanism:
    beta: np.ndarray  # beta[0] is the rate of order 2
    rule: ColouringRule

    def __init__(self, beta: Sequence[float], rule: ColouringRule | Mapping | None = None):
        b = np.array(beta, dtype=float).reshape(-1)
        if b.size == 0:
            b = np.zeros(1)
        m = b.size + 1
        if np.any(b < 0):
            raise ValueError("branching rates must be >= 0")
        if rule is None:
            rule = ColouringRule(m)
        elif not isinstance(rule, ColouringRule):
            rule = ColouringRule(m, rule)
        if rule.m != m:
            raise ValueError(f"rule has m={rule.m} but beta implies m={m}")
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "rule", rule)

    @property
    def m(self) -> int:
        return self.beta.size + 1

    def rate(self, ell: int) -> float:
        return float(self.beta[ell - 2])

    @property
    def effective_rate(self) -> float:
        return effective_branching_rate(self.beta)

    def __eq__(self, other) -> bool:
        return (isinstance(other, SelectionMechanism)
                and np.array_equal(self.beta, other.beta) and self.rule == other.rule)

    def __hash__(self) -> int:
        return hash((self.beta.tobytes(), self.rule))

    def to_json(self) -> dict:
        return {"m": self.m, "beta": self.beta.tolist(), "p": self.rule.to_json()}

    @classmethod
    def from_json(cls, data) -> "SelectionMechanism":
        if isinstance(data, str):
            data = json.loads(data)
        beta = data["beta"]
        m = int(data.get("m", len(beta) + 1))
        if len(beta) != m - 1:
            raise ValueError("beta must list rates for orders 2..m")
        return cls(beta, ColouringRule(m, data.get("p", {})))


def neutral_mechanism(m: int = 2) -> SelectionMechanism:
    return SelectionMechanism(np.zeros(m - 1))


def effective_branching_rate(beta: Sequence[float]) -> float:
    b = np.asarray(beta, dtype=float)
    return float(np.sum(b * np.arange(1, b.size + 1)))


@dataclass(frozen=True)
class ThinningMechanism:
    """Lower-triangular stochastic matrix on orders 1..m (row/column 0 is order 1)."""

    T: np.ndarray

    def __init__(self, T):
        T = np.array(T, dtype=float)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError("thinning matrix must be square")
        if np.any(np.triu(T, 1) != 0.0):
            raise ValueError("thinning matrix must be lower-triangular")
        if np.any(T < -1e-12) or np.any(np.abs(T.sum(axis=1) - 1.0) > 1e-12):
            raise ValueError("thinning rows must be probability vectors")
        T.setflags(write=False)
        object.__setattr__(self, "T", T)

    @property
    def m(self) -> int:
        return self.T.shape[0]


@dataclass
class ConvexDecomposition:
    lam: float
    v: list[np.ndarray]  # v[0] belongs to order 2
    alpha: np.ndarray

    @property
    def m(self) -> int:
        return len(self.v) + 1


# ---------------------------------------------------------------------------
# drift map
# ---------------------------------------------------------------------------

def _u(m: int) -> np.ndarray:
    return np.arange(1, m) / m


@lru_cache(maxsize=1024)
def _theta_matrix(m: int, ell: int) -> np.ndarray:
    # row i-1, column j: P(K = j) with K ~ hyp(population m, marked ell, draws i)
    M = np.zeros((m - 1, ell + 1))
    for i in range(1, m):
        h = hypergeom_vector(m, ell, i)
        k = min(h.size, ell + 1)
        M[i - 1, :k] = h[:k]
    M.setflags(write=False)
    return M


def theta(m: int, ell: int, p_ell: Sequence[float]) -> np.ndarray:
    """Hypergeometric smoothing of an l-rule to degree m (length m - 1)."""
    if not (2 <= ell <= m):
        raise ValueError("need 2 <= l <= m")
    return _theta_matrix(m, ell) @ np.asarray(p_ell, dtype=float)


def theta_inverse(m: int, ell: int, w: Sequence[float]) -> np.ndarray | None:
    """Unique l-rule mapped to ``w`` by ``theta``, or None when there is none."""
    w = np.asarray(w, dtype=float)
    M = _theta_matrix(m, ell)
    p = np.zeros(ell + 1)
    p[ell] = 1.0
    # row i (i < ell) involves p_0..p_i only, with P(K = i) > 0 on the diagonal
    for i in range(1, ell):
        row = M[i - 1]
        p[i] = (w[i - 1] - row[:i] @ p[:i]) / row[i]
    if np.any(p < -TOL) or np.any(p > 1 + TOL):
        return None
    p = np.clip(p, 0.0, 1.0)
    if np.max(np.abs(M @ p - w)) > TOL:
        return None
    return p


def drift_bcv(sd: SelectionMechanism) -> np.ndarray:
    """Interior degree-m Bernstein coefficients of the drift of ``sd``."""
    m = sd.m
    out = np.zeros(m - 1)
    u = _u(m)
    for ell in range(2, m + 1):
        b = sd.rate(ell)
        if b:
            out += b * (theta(m, ell, sd.rule[ell]) - u)
    return out


def drift_bcv_by_elevation(sd: SelectionMechanism) -> np.ndarray:
    """Same vector computed by elevating each order's polynomial separately."""
    m = sd.m
    total = np.zeros(m + 1)
    for ell in range(2, m + 1):
        b = sd.rate(ell)
        if b:
            coef = sd.rule[ell] - np.arange(ell + 1) / ell
            total += b * degree_elevate(BernsteinVector(coef), m).v
    return total[1:-1]


def drift_polynomial(sd: SelectionMechanism) -> Polynomial:
    """Monomial form of the drift."""
    from .bernstein_core import monomial_from_bcv
    v = np.concatenate([[0.0], drift_bcv(sd), [0.0]])
    return monomial_from_bcv(BernsteinVector(v))


def rho_of(d: Polynomial, m: int | None = None) -> np.ndarray:
    """Interior Bernstein coefficients of d at degree m (default: its degree)."""
    d = d.trimmed()
    if m is None:
        m = max(d.degree, 2)
    return bcv_from_monomial(d, m).v[1:-1].copy()


# ---------------------------------------------------------------------------
# polytope and linear programs
# ---------------------------------------------------------------------------

def deterministic_rules(ell: int) -> list[np.ndarray]:
    """All rules in {0} x {0,1}^(l-1) x {1}, ordered lexicographically."""
    out = []
    for bits in itertools.product((0.0, 1.0), repeat=ell - 1):
        out.append(np.array((0.0,) + bits + (1.0,)))
    return out


@lru_cache(maxsize=32)
def _directions(m: int) -> tuple[np.ndarray, tuple[int, ...], tuple[np.ndarray, ...]]:
    if m > MAX_M:
        raise ValueError(f"m={m} exceeds the supported maximum {MAX_M}")
    cols, ells, rules = [], [], []
    u = _u(m)
    for ell in range(2, m + 1):
        for p in deterministic_rules(ell):
            cols.append((theta(m, ell, p) - u) / (ell - 1))
            ells.append(ell)
            rules.append(p)
    W = np.array(cols).T
    W.setflags(write=False)
    return W, tuple(ells), tuple(rules)


def extreme_points(m: int, lam: float = 1.0) -> list[tuple[int, np.ndarray, np.ndarray]]:
    """Candidate vertices (l, rule, point) of the rate-``lam`` polytope."""
    W, ells, rules = _directions(m)
    return [(ells[j], rules[j].copy(), lam * W[:, j]) for j in range(W.shape[1])]


def _weights_to_mechanism(m: int, mu: np.ndarray) -> SelectionMechanism:
    W, ells, rules = _directions(m)
    ells_a = np.array(ells)
    beta = np.zeros(m - 1)
    p = {}
    for ell in range(2, m + 1):
        idx = np.flatnonzero((ells_a == ell) & (mu > 0))
        mass = float(mu[idx].sum()) if idx.size else 0.0
        if mass > 0:
            beta[ell - 2] = mass / (ell - 1)
            p[ell] = sum(mu[j] * rules[j] for j in idx) / mass
            p[ell][0], p[ell][-1] = 0.0, 1.0
    return SelectionMechanism(beta, ColouringRule(m, p))


def _min_weights(rho: np.ndarray) -> tuple[float, np.ndarray]:
    rho = np.asarray(rho, dtype=float)
    m = rho.size + 1
    W, _, _ = _directions(m)
    if np.all(rho == 0):
        return 0.0, np.zeros(W.shape[1])
    try:
        res = solve_lp(np.ones(W.shape[1]), W, rho)
    except Infeasible as exc:  # every rho is reachable; this is a bug
        raise AssertionError("minimal-rate LP infeasible") from exc
    return res.value, res.x


def minimal_branching_rate(rho: Sequence[float]) -> float:
    """Smallest effective branching rate of a mechanism whose image is ``rho``."""
    return _min_weights(np.asarray(rho, dtype=float))[0]


def _check_drift(d: Polynomial) -> Polynomial:
    d = d.trimmed()
    scale = max(1.0, max(abs(c) for c in d.coeffs))
    if abs(d(0.0)) > 1e-10 * scale or abs(d(1.0)) > 1e-10 * scale:
        raise ValueError("drift must vanish at 0 and 1")
    if d.degree > MAX_M:
        raise ValueError(f"drift degree {d.degree} exceeds {MAX_M}")
    return d


def _is_zero(d: Polynomial) -> bool:
    return all(abs(c) <= 1e-14 for c in d.coeffs)


def minimal_sd(d: Polynomial) -> SelectionMechanism:
    """A mechanism with drift ``d`` and the smallest effective branching rate.

    The zero drift gives the neutral mechanism.
    """
    d = _check_drift(d)
    if _is_zero(d):
        return neutral_mechanism(2)
    m = max(d.degree, 2)
    rho = rho_of(d, m)
    bstar, mu = _min_weights(rho)
    sd = _weights_to_mechanism(m, mu)
    if np.max(np.abs(drift_bcv(sd) - rho)) > TOL * max(1.0, np.abs(rho).max()):
        raise AssertionError("minimal mechanism does not reproduce the drift")
    if abs(sd.effective_rate - bstar) > TOL * max(1.0, bstar):
        raise AssertionError("minimal mechanism rate differs from the LP optimum")
    return sd


def minimal_rate_of(d: Polynomial) -> float:
    d = _check_drift(d)
    if _is_zero(d):
        return 0.0
    return minimal_branching_rate(rho_of(d))


def decompose_with_rate(d: Polynomial, lam: float) -> SelectionMechanism | None:
    """A mechanism with drift ``d`` and effective rate exactly ``lam``, or None
    when ``lam`` is below the minimum."""
    d = _check_drift(d)
    m = max(d.degree, 2)
    rho = rho_of(d, m)
    bstar = 0.0 if _is_zero(d) else minimal_branching_rate(rho)
    if lam < bstar - TOL * max(1.0, bstar):
        return None
    lam = max(lam, bstar)
    W, _, _ = _directions(m)
    A = np.vstack([W, np.ones(W.shape[1])])
    b = np.concatenate([rho, [lam]])
    try:
        res = solve_lp(np.zeros(W.shape[1]), A, b)
    except Infeasible:
        return None
    sd = _weights_to_mechanism(m, res.x)
    if np.max(np.abs(drift_bcv(sd) - rho)) > TOL * max(1.0, np.abs(rho).max()):
        raise AssertionError("decomposition does not reproduce the drift")
    return sd


# ---------------------------------------------------------------------------
# convex decompositions
# ---------------------------------------------------------------------------

def phi(c: ConvexDecomposition) -> SelectionMechanism:
    """Mechanism with beta_l = lam alpha_l / (l-1) and
    p_l = theta_l^{-1}((l-1) v_l / lam + u_m)."""
    m = c.m
    u = _u(m)
    beta = np.zeros(m - 1)
    p = {}
    for ell in range(2, m + 1):
        beta[ell - 2] = c.lam * c.alpha[ell - 2] / (ell - 1)
        rule = theta_inverse(m, ell, (ell - 1) * np.asarray(c.v[ell - 2]) / c.lam + u)
        if rule is None:
            raise ValueError(f"v for order {ell} lies outside its polytope")
        p[ell] = rule
    return SelectionMechanism(beta, ColouringRule(m, p))


def phi_inverse(sd: SelectionMechanism) -> ConvexDecomposition:
    lam = sd.effective_rate
    if lam <= 0:
        raise ValueError("need a positive effective branching rate")
    m = sd.m
    u = _u(m)
    alpha = np.array([sd.rate(l) * (l - 1) / lam for l in range(2, m + 1)])
    v = [lam * (theta(m, l, sd.rule[l]) - u) / (l - 1) for l in range(2, m + 1)]
    return ConvexDecomposition(lam, v, alpha)


# ---------------------------------------------------------------------------
# closed forms for cubic drifts
# ---------------------------------------------------------------------------

# vertices of the unit polytope for m = 3, keyed by (order, rule)
VERTICES_M3 = {
    "v12": (2, (0.0, 1.0, 1.0)),
    "v22": (2, (0.0, 0.0, 1.0)),
    "v13": (3, (0.0, 0.0, 1.0, 1.0)),
    "v23": (3, (0.0, 1.0, 0.0, 1.0)),
}

# each face: vertex pair and the gauge functional on it
FACES_M3 = (
    (("v22", "v13"), lambda a, b: 1.5 * (b - 3 * a)),
    (("v22", "v23"), lambda a, b: -3.0 * b),
    (("v12", "v13"), lambda a, b: 1.5 * (3 * b - a)),
    (("v12", "v23"), lambda a, b: 3.0 * a),
)


def vertex_point_m3(name: str) -> np.ndarray:
    ell, rule = VERTICES_M3[name]
    return (theta(3, ell, rule) - _u(3)) / (ell - 1)


def minimal_sd_m3(d: Polynomial) -> tuple[float, tuple[str, str], SelectionMechanism]:
    """Closed-form minimal rate, hit face and a representative mechanism for
    a drift of degree 2 or 3."""
    d = _check_drift(d)
    if d.degree > 3:
        raise ValueError("closed forms need deg(d) <= 3")
    if _is_zero(d):
        raise ValueError("zero drift has no face")
    a, b = rho_of(d, 3)
    values = [f(a, b) for _, f in FACES_M3]
    bstar = max(values)
    k = next(i for i, v in enumerate(values) if v >= bstar - 1e-12 * max(1.0, abs(bstar)))
    face = FACES_M3[k][0]
    # rho = mu_A w_A + mu_B w_B on the face's vertex pair
    wa, wb = vertex_point_m3(face[0]), vertex_point_m3(face[1])
    mu = np.linalg.solve(np.column_stack([wa, wb]), np.array([a, b]))
    mu = np.where(np.abs(mu) < 1e-14, 0.0, mu)
    beta = np.zeros(2)
    p = {}
    for name, weight in zip(face, mu):
        ell, rule = VERTICES_M3[name]
        beta[ell - 2] = weight / (ell - 1)
        if weight > 0:
            p[ell] = rule
    return float(bstar), face, SelectionMechanism(beta, ColouringRule(3, p))


# ---------------------------------------------------------------------------
# thinning
# ---------------------------------------------------------------------------

def _tails(beta: np.ndarray) -> np.ndarray:
    return np.cumsum(np.asarray(beta, dtype=float)[::-1])[::-1]


def partial_order_leq(beta1, beta2, tol: float = 1e-12) -> bool:
    """True iff every tail sum of beta1 is at most the matching tail of beta2."""
    b1, b2 = np.asarray(beta1, float), np.asarray(beta2, float)
    if b1.shape != b2.shape:
        raise ValueError("rates must have the same length")
    return bool(np.all(_tails(b1) <= _tails(b2) + tol))


def thinning_apply(T: ThinningMechanism, beta) -> np.ndarray:
    """(T beta)_l = sum_{k >= l} beta_k T_{k,l}, reported for l = 2..m."""
    b = np.asarray(beta, dtype=float)
    if T.m != b.size + 1:
        raise ValueError("thinning size does not match the rates")
    full = np.concatenate([[0.0], b])
    out = (full @ T.T)[1:]
    assert partial_order_leq(out, b, 1e-9), "thinning must not raise tail sums"
    return out


def thinning_construct(beta, beta_prime) -> ThinningMechanism | None:
    """Thinning T with T beta = beta_prime, or None unless beta_prime <= beta.

    Works down from the highest order: at order k keep beta'_k of the current
    mass, pass up to beta'_{k-1} one order down and the rest two orders down
    (order 1 is removal).
    """
    b = np.asarray(beta, dtype=float)
    bp = np.asarray(beta_prime, dtype=float)
    if b.shape != bp.shape:
        raise ValueError("rates must have the same length")
    if not partial_order_leq(bp, b, 1e-12):
        return None
    m = b.size + 1
    cur = np.concatenate([[0.0], b])      # index k-1 holds order k
    target = np.concatenate([[0.0], bp])
    total = np.eye(m)
    for k in range(m, 1, -1):
        step = np.eye(m)
        g, t = cur[k - 1], target[k - 1]
        if g > 0:
            keep = min(t / g, 1.0)
            rest = 1.0 - keep
            excess = g - t
            if k - 1 == 1:
                down1 = rest
            else:
                share = 1.0 if excess <= 0 else min(target[k - 2] / excess, 1.0)
                down1 = rest * share
            step[k - 1, :] = 0.0
            step[k - 1, k - 1] = keep
            step[k - 1, k - 2] += down1
            if k - 1 > 1:
                step[k - 1, k - 3] += rest - down1
            else:
                step[k - 1, k - 2] += rest - down1
        cur = cur @ step
        total = total @ step
    total[np.abs(total) < 1e-15] = 0.0
    total /= total.sum(axis=1, keepdims=True)
    T = ThinningMechanism(total)
    if np.max(np.abs(thinning_apply(T, b) - bp)) > TOL * max(1.0, b.max(initial=0.0)):
        raise AssertionError("thinning cascade failed to reach the target")
    return T


def _order_columns(m: int):
    W, ells, rules = _directions(m)
    return W, np.array(ells), rules


def reduce_to_minimal_m3(sd: SelectionMechanism, d: Polynomial) -> SelectionMechanism:
    """Minimal mechanism for ``d`` whose rates are a thinning of ``sd.beta``.

    Solves the minimal-rate LP with the extra constraints that each order's
    rate stays below the input's; for m = 3 the optimum equals the
    unconstrained minimum, and the result is checked against it.
    """
    if sd.m != 3:
        raise ValueError("reduction is implemented for m = 3")
    d = _check_drift(d)
    rho = rho_of(d, 3)
    if np.max(np.abs(drift_bcv(sd) - rho)) > TOL * max(1.0, np.abs(rho).max()):
        raise ValueError("input mechanism does not decompose the drift")
    if _is_zero(d):
        return neutral_mechanism(3)
    W, ells, _ = _order_columns(3)
    nmu = W.shape[1]
    A = np.zeros((2 + 2, nmu + 2))
    A[:2, :nmu] = W
    for row, ell in enumerate((2, 3)):
        A[2 + row, :nmu] = np.where(ells == ell, 1.0 / (ell - 1), 0.0)
        A[2 + row, nmu + row] = 1.0
    b = np.concatenate([rho, sd.beta])
    c = np.concatenate([np.ones(nmu), np.zeros(2)])
    res = solve_lp(c, A, b)
    bstar = minimal_branching_rate(rho)
    if abs(res.value - bstar) > TOL * max(1.0, bstar):
        raise AssertionError("no minimal mechanism below the input rates")
    out = _weights_to_mechanism(3, res.x[:nmu])
    if thinning_construct(sd.beta, out.beta) is None:
        raise AssertionError("reduced rates are not a thinning of the input")
    return out


def graph_minimality_gap(d: Polynomial, beta) -> float:
    """Largest total tail-sum reduction over mechanisms of ``d`` whose tails
    all stay below those of ``beta``. Zero means nothing can be thinned."""
    d = _check_drift(d)
    beta = np.asarray(beta, dtype=float)
    m = beta.size + 1
    rho = rho_of(d, m)
    W, ells, _ = _order_columns(m)
    nmu = W.shape[1]
    nt = m - 1
    A = np.zeros((m - 1 + nt, nmu + nt))
    A[:m - 1, :nmu] = W
    tails = _tails(beta)
    for r, k in enumerate(range(2, m + 1)):
        A[m - 1 + r, :nmu] = np.where(ells >= k, 1.0 / (ells - 1), 0.0)
        A[m - 1 + r, nmu + r] = 1.0
    b = np.concatenate([rho, tails])
    # sum of the candidate's tails equals sum(mu)
    c = np.concatenate([np.ones(nmu), np.zeros(nt)])
    try:
        res = solve_lp(c, A, b)
    except Infeasible:
        return 0.0
    return float(tails.sum() - res.value)
