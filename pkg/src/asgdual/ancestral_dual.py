"""Backward-in-time processes: leaf counts, Bernstein coefficients, explicit
ancestral graphs and the fixation line.

At leaf count n the leaf process jumps to n + l - 1 at rate n * beta_l and to
n - k + 1 at rate C(n, k) lambda_{n,k}. The coefficient vector V (length n + 1)
is pushed through a selection operator at every branching and through a
coagulation operator at every merger, so V_t is a deterministic function of
V_0 and the leaf path.

Selection operator, output coordinate i = 0..n+l-1, with
K_i ~ hypergeometric(population n + l - 1, marked i, draws l):

    (S v)_i = E[ p_{K_i} v_{i+1-K_i} + (1 - p_{K_i}) v_{i-K_i} ]

Coagulation operator, output coordinate i = 0..n-k+1:

    (C v)_i = i/(n-k+1) * v_{i+k-1} + (1 - i/(n-k+1)) * v_i

Both are row-stochastic and keep the first and last coordinates.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from ._streams import Uniforms, as_generator
from .bernstein_core import bernstein_basis, bernstein_eval, hypergeom_vector
from .lambda_measure import LambdaMeasure, fixation_up_table, merger_rates
from .selection_geometry import ColouringRule, SelectionMechanism

DENSE_LIMIT = 48
LIVE_GUARD = 100_000


class RegimeError(ValueError):
    """Raised when a routine is asked to run outside its parameter regime."""


def _beta_array(beta) -> np.ndarray:
    if isinstance(beta, SelectionMechanism):
        return beta.beta
    b = np.asarray(beta, dtype=float).reshape(-1)
    if np.any(b < 0):
        raise ValueError("branching rates must be >= 0")
    return b


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _hyp_rows(n: int, ell: int) -> np.ndarray:
    # H[i, j] = P(K_i = j), K_i ~ hyp(n + ell - 1, i, ell)
    pop = n + ell - 1
    H = np.zeros((pop + 1, ell + 1))
    for i in range(pop + 1):
        h = hypergeom_vector(pop, i, ell)
        H[i, :h.size] = h
    H.setflags(write=False)
    return H


@lru_cache(maxsize=4096)
def _shift_index(n: int, ell: int) -> tuple[np.ndarray, np.ndarray]:
    pop = n + ell - 1
    i = np.arange(pop + 1)[:, None]
    j = np.arange(ell + 1)[None, :]
    hi = np.clip(i + 1 - j, 0, n)
    lo = np.clip(i - j, 0, n)
    return hi, lo


def selection_matrix(n: int, ell: int, p_ell: Sequence[float]) -> np.ndarray:
    """Dense (n + l) x (n + 1) matrix of the selection operator."""
    p = np.asarray(p_ell, dtype=float)
    H = _hyp_rows(n, ell)
    S = np.zeros((n + ell, n + 1))
    for i in range(n + ell):
        for j in range(ell + 1):
            w = H[i, j]
            if w == 0.0:
                continue
            if p[j] != 0.0:
                S[i, i + 1 - j] += w * p[j]
            if p[j] != 1.0:
                S[i, i - j] += w * (1.0 - p[j])
    return S


def coagulation_matrix(n: int, k: int) -> np.ndarray:
    """Dense (n - k + 2) x (n + 1) matrix of the coagulation operator."""
    if not (2 <= k <= n):
        raise ValueError(f"need 2 <= k <= n, got n={n}, k={k}")
    rows = n - k + 2
    C = np.zeros((rows, n + 1))
    for i in range(rows):
        w = i / (n - k + 1)
        C[i, i + k - 1] += w
        C[i, i] += 1.0 - w
    return C


class _Operators:
    """Cached operator application for one colouring rule."""

    def __init__(self, rule: ColouringRule | None):
        self.rule = rule
        self._sel: dict = {}
        self._coal: dict = {}

    def select(self, v: np.ndarray, ell: int) -> np.ndarray:
        n = v.size - 1
        op = self._sel.get((n, ell))
        if op is None:
            p = self.rule[ell]
            if n <= DENSE_LIMIT:
                op = selection_matrix(n, ell, p)
            else:
                H = _hyp_rows(n, ell)
                hi, lo = _shift_index(n, ell)
                op = (H * p[None, :], H * (1.0 - p)[None, :], hi, lo)
            self._sel[(n, ell)] = op
        if isinstance(op, np.ndarray):
            return op @ v
        a_hi, a_lo, hi, lo = op
        return (a_hi * v[hi]).sum(axis=1) + (a_lo * v[lo]).sum(axis=1)

    def coalesce(self, v: np.ndarray, k: int) -> np.ndarray:
        n = v.size - 1
        op = self._coal.get((n, k))
        if op is None:
            if n <= DENSE_LIMIT:
                op = coagulation_matrix(n, k)
            else:
                i = np.arange(n - k + 2)
                op = (i, i / (n - k + 1))
            self._coal[(n, k)] = op
        if isinstance(op, np.ndarray):
            return op @ v
        i, w = op
        return w * v[i + k - 1] + (1.0 - w) * v[i]


def apply_selection(v: Sequence[float], ell: int, rule: ColouringRule) -> np.ndarray:
    """S^{n,l} v for n = len(v) - 1."""
    v = np.asarray(v, dtype=float)
    if not (2 <= ell <= rule.m):
        raise ValueError(f"order {ell} outside 2..{rule.m}")
    return selection_matrix(v.size - 1, ell, rule[ell]) @ v


def apply_coagulation(v: Sequence[float], k: int) -> np.ndarray:
    """C^{n,k} v for n = len(v) - 1."""
    v = np.asarray(v, dtype=float)
    n = v.size - 1
    if not (2 <= k <= n):
        raise ValueError(f"need 2 <= k <= n, got n={n}, k={k}")
    i = np.arange(n - k + 2)
    w = i / (n - k + 1)
    return w * v[i + k - 1] + (1.0 - w) * v[i]


def unit_vector(n: int, i: int | None = None) -> np.ndarray:
    """e_{i+1} in R^{n+1}; by default the last coordinate (the moment x^n)."""
    e = np.zeros(n + 1)
    e[n if i is None else i] = 1.0
    return e


# ---------------------------------------------------------------------------
# leaf process
# ---------------------------------------------------------------------------

@dataclass
class LeafPath:
    n0: int
    horizon: float
    times: list[float] = field(default_factory=list)
    # positive entries are branchings of that order, negative ones mergers of -k blocks
    events: list[int] = field(default_factory=list)

    @property
    def counts(self) -> list[int]:
        out = [self.n0]
        for e in self.events:
            out.append(out[-1] + (e - 1 if e > 0 else e + 1))
        return out

    @property
    def final(self) -> int:
        return self.counts[-1]

    def count_at(self, t: float) -> int:
        idx = bisect.bisect_right(self.times, t)
        return self.counts[idx]

    def to_jsonl(self) -> str:
        lines = [json.dumps({"n0": self.n0, "horizon": self.horizon})]
        for t, e in zip(self.times, self.events):
            kind = {"kind": "branch", "order": e} if e > 0 else {"kind": "coalesce", "k": -e}
            lines.append(json.dumps({"time": t, **kind}))
        return "\n".join(lines)


class LeafRates:
    """Per-count event tables of the leaf process, built lazily."""

    def __init__(self, beta, L: LambdaMeasure):
        self.beta = _beta_array(beta)
        self.L = L
        self._tables: dict[int, tuple[float, list[float], list[int]]] = {}

    def table(self, n: int) -> tuple[float, list[float], list[int]]:
        tab = self._tables.get(n)
        if tab is not None:
            return tab
        rates, codes = [], []
        for j, b in enumerate(self.beta):
            if b > 0:
                rates.append(n * b)
                codes.append(j + 2)
        if n >= 2:
            mr = merger_rates(self.L, n)
            for k in range(2, n + 1):
                if mr[k] > 0:
                    rates.append(mr[k])
                    codes.append(-k)
        total = math.fsum(rates)
        cum = []
        acc = 0.0
        for r in rates:
            acc += r
            cum.append(acc / total)
        if cum:
            cum[-1] = 1.0
        tab = (total, cum, codes)
        self._tables[n] = tab
        return tab

    def step(self, n: int, ub: Uniforms) -> tuple[float, int]:
        """Holding time and event code at count n (code 0: no event possible)."""
        total, cum, codes = self.table(n)
        if total == 0.0:
            return math.inf, 0
        return ub.exp() / total, codes[bisect.bisect_left(cum, ub.u())]


def _next_count(n: int, code: int) -> int:
    return n + code - 1 if code > 0 else n + code + 1


def simulate_leaf_path(n: int, beta, L: LambdaMeasure, horizon: float, rng,
                       rates: LeafRates | None = None) -> LeafPath:
    """Exact event-driven leaf path on [0, horizon]."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if n < 1:
        raise ValueError("need n >= 1")
    rates = rates or LeafRates(beta, L)
    ub = rng if isinstance(rng, Uniforms) else Uniforms(as_generator(rng), 256)
    path = LeafPath(n, horizon)
    t = 0.0
    while True:
        dt, code = rates.step(n, ub)
        t += dt
        if t > horizon:
            return path
        path.times.append(t)
        path.events.append(code)
        n = _next_count(n, code)


def leaf_count_at(n: int, rates: LeafRates, horizon: float, ub: Uniforms) -> int:
    """Leaf count at ``horizon`` without recording the path."""
    t = 0.0
    while True:
        dt, code = rates.step(n, ub)
        t += dt
        if t > horizon:
            return n
        n = _next_count(n, code)


# ---------------------------------------------------------------------------
# Bernstein coefficient process
# ---------------------------------------------------------------------------

def asp_eval(v: Sequence[float], x: float) -> float:
    """<B_L(x), v> with L = len(v) - 1."""
    v = np.asarray(v, dtype=float)
    if v.size <= 64:
        return bernstein_eval(v, x)
    return float(bernstein_basis(v.size - 1, x) @ v)


def simulate_bcp(v0: Sequence[float], sd: SelectionMechanism, L: LambdaMeasure,
                 horizon: float, rng, record: bool = True,
                 rates: LeafRates | None = None, ops: _Operators | None = None):
    """Run the coefficient process from ``v0`` up to ``horizon``.

    Returns (V_horizon, LeafPath); the path is None when ``record`` is False.
    """
    v = np.array(v0, dtype=float)
    n = v.size - 1
    if n < 1:
        raise ValueError("v0 needs at least two coordinates")
    rates = rates or LeafRates(sd, L)
    ops = ops or _Operators(sd.rule)
    ub = rng if isinstance(rng, Uniforms) else Uniforms(as_generator(rng), 256)
    path = LeafPath(n, horizon) if record else None
    t = 0.0
    while True:
        dt, code = rates.step(n, ub)
        t += dt
        if t > horizon:
            return v, path
        if code > 0:
            v = ops.select(v, code)
        else:
            v = ops.coalesce(v, -code)
        n = v.size - 1
        if record:
            path.times.append(t)
            path.events.append(code)


def replay_bcp(v0: Sequence[float], path: LeafPath, rule: ColouringRule,
               until: float | None = None) -> np.ndarray:
    """Coefficient vector obtained by pushing ``v0`` along a recorded path."""
    ops = _Operators(rule)
    v = np.array(v0, dtype=float)
    for t, code in zip(path.times, path.events):
        if until is not None and t > until:
            break
        v = ops.select(v, code) if code > 0 else ops.coalesce(v, -code)
    return v


def bcp_values(sd: SelectionMechanism, L: LambdaMeasure, n: int, horizon: float,
               xs: Sequence[float], reps: int, rng) -> np.ndarray:
    """<B_{L_t}(x), V_t> from V_0 = e_{n+1}, one row per replicate, one column per x."""
    rates = LeafRates(sd, L)
    ops = _Operators(sd.rule)
    ub = Uniforms(as_generator(rng))
    out = np.empty((reps, len(xs)))
    v0 = unit_vector(n)
    for r in range(reps):
        v, _ = simulate_bcp(v0, sd, L, horizon, ub, record=False, rates=rates, ops=ops)
        for j, x in enumerate(xs):
            out[r, j] = asp_eval(v, x)
    return out


# ---------------------------------------------------------------------------
# explicit ancestral graph
# ---------------------------------------------------------------------------

@dataclass
class AsgGraph:
    n_roots: int
    horizon: float
    # ("branch", time, order, marked, children) or ("coalesce", time, victims, newborn)
    events: list[tuple] = field(default_factory=list)
    birth: dict[int, float] = field(default_factory=dict)
    death: dict[int, float] = field(default_factory=dict)
    leaves: list[int] = field(default_factory=list)
    tags: dict[int, bool] = field(default_factory=dict)

    @property
    def roots(self) -> list[int]:
        return list(range(self.n_roots))

    def leaf_path(self) -> LeafPath:
        path = LeafPath(self.n_roots, self.horizon)
        for ev in self.events:
            path.times.append(ev[1])
            path.events.append(ev[2] if ev[0] == "branch" else -len(ev[2]))
        return path

    def to_jsonl(self) -> str:
        lines = [json.dumps({"roots": self.n_roots, "horizon": self.horizon})]
        for ev in self.events:
            if ev[0] == "branch":
                lines.append(json.dumps({"kind": "branch", "time": ev[1], "order": ev[2],
                                         "marked": ev[3], "children": list(ev[4])}))
            else:
                lines.append(json.dumps({"kind": "coalesce", "time": ev[1],
                                         "victims": list(ev[2]), "newborn": ev[3]}))
        return "\n".join(lines)


def simulate_asg_graph(n: int, beta, L: LambdaMeasure, horizon: float, rng,
                       rates: LeafRates | None = None, tagged: int | None = None) -> AsgGraph:
    """Labelled branching-coalescing graph from ``n`` roots up to ``horizon``.

    With ``tagged`` set, the first ``tagged`` roots and everything descending
    from them carry a tag; a merger is tagged when any of its victims is.
    """
    rates = rates or LeafRates(beta, L)
    gen = rng.generator if isinstance(rng, Uniforms) else as_generator(rng)
    ub = rng if isinstance(rng, Uniforms) else Uniforms(gen, 256)
    g = AsgGraph(n, horizon)
    alive = list(range(n))
    for lab in alive:
        g.birth[lab] = 0.0
        if tagged is not None:
            g.tags[lab] = lab < tagged
    nxt = n
    t = 0.0
    while True:
        dt, code = rates.step(len(alive), ub)
        t += dt
        if t > horizon:
            break
        if code > 0:
            marked = alive[int(ub.u() * len(alive))]
            children = tuple(range(nxt, nxt + code - 1))
            nxt += code - 1
            for c in children:
                g.birth[c] = t
                if tagged is not None:
                    g.tags[c] = g.tags[marked]
            alive.extend(children)
            g.events.append(("branch", t, code, marked, children))
        else:
            k = -code
            pick = gen.choice(len(alive), size=k, replace=False)
            victims = tuple(alive[i] for i in pick)
            for i in sorted(pick, reverse=True):
                alive[i] = alive[-1]
                alive.pop()
            newborn = nxt
            nxt += 1
            for vct in victims:
                g.death[vct] = t
            g.birth[newborn] = t
            if tagged is not None:
                g.tags[newborn] = any(g.tags[vct] for vct in victims)
            alive.append(newborn)
            g.events.append(("coalesce", t, victims, newborn))
        if len(alive) > LIVE_GUARD:
            raise RuntimeError(f"live particle count exceeded {LIVE_GUARD}")
    g.leaves = alive
    return g


def colour_graph(g: AsgGraph, leaf_types: Sequence[bool], rule: ColouringRule,
                 rng) -> list[bool]:
    """Propagate leaf colours (True = type a) down to the roots."""
    if len(leaf_types) != len(g.leaves):
        raise ValueError("need one type per leaf")
    colour = dict(zip(g.leaves, (bool(c) for c in leaf_types)))
    draw = None
    for ev in reversed(g.events):
        if ev[0] == "coalesce":
            c = colour[ev[3]]
            for vct in ev[2]:
                colour[vct] = c
        else:
            _, _, ell, marked, children = ev
            i = int(colour[marked]) + sum(colour[ch] for ch in children)
            p = rule[ell][i]
            if p == 0.0 or p == 1.0:
                colour[marked] = p == 1.0
            else:
                if draw is None:
                    draw = rng.generator if isinstance(rng, Uniforms) else as_generator(rng)
                colour[marked] = bool(draw.random() < p)
    return [colour[r] for r in g.roots]


def asg_colouring_oracle(n: int, sd: SelectionMechanism, L: LambdaMeasure,
                         horizon: float, x: float, reps: int, rng) -> tuple[float, float]:
    """Monte Carlo estimate of P(all n roots are type a) with i.i.d.
    Bernoulli(x) leaves, from explicitly coloured graphs."""
    if reps < 100:
        raise ValueError("need reps >= 100")
    gen = as_generator(rng)
    ub = Uniforms(gen)
    rates = LeafRates(sd, L)
    hits = np.empty(reps)
    for r in range(reps):
        g = simulate_asg_graph(n, sd, L, horizon, ub, rates=rates)
        leaves = gen.random(len(g.leaves)) < x
        hits[r] = all(colour_graph(g, leaves, sd.rule, gen))
    return float(hits.mean()), float(hits.std(ddof=1) / math.sqrt(reps))


def coupled_leaf_counts(n_small: int, n_large: int, beta, L: LambdaMeasure,
                        horizon: float, rng) -> tuple[list[int], list[int]]:
    """Leaf counts from ``n_small`` and ``n_large`` roots on one graph.

    The tagged subsystem grown from the first ``n_small`` roots is itself a
    leaf process, and never exceeds the whole system.
    """
    g = simulate_asg_graph(n_large, beta, L, horizon, rng, tagged=n_small)
    small, large = [n_small], [n_large]
    alive_tagged = n_small
    for ev in g.events:
        if ev[0] == "branch":
            if g.tags[ev[3]]:
                alive_tagged += ev[2] - 1
            large.append(large[-1] + ev[2] - 1)
        else:
            hit = sum(1 for v in ev[2] if g.tags[v])
            if hit:
                alive_tagged -= hit - 1
            large.append(large[-1] - len(ev[2]) + 1)
        small.append(alive_tagged)
    return small, large


# ---------------------------------------------------------------------------
# stationary and entrance-law sampling
# ---------------------------------------------------------------------------

class StationarySampler:
    """Samples (L, V) from the invariant law by regeneration at L = 1.

    A cycle is the holding time at L = 1 plus the following excursion. A cycle
    of duration D is accepted with probability D / M and a uniform time point
    inside it is returned. The envelope M starts at the largest of a few pilot
    cycles and doubles whenever a cycle exceeds it; the doubling count is kept
    in ``envelope_doublings``.
    """

    def __init__(self, sd: SelectionMechanism, L: LambdaMeasure, rng,
                 pilot: int = 200, max_events: int = 1_000_000):
        self.sd = sd
        self.L = L
        self.rates = LeafRates(sd, L)
        self.ops = _Operators(sd.rule)
        self.ub = Uniforms(as_generator(rng))
        self.max_events = max_events
        self.cycles = 0
        self.accepted = 0
        self.envelope_doublings = 0
        self.envelope = 0.0
        if self.rates.table(1)[0] > 0:
            self.envelope = max(self._cycle()[0] for _ in range(pilot))

    def _cycle(self) -> tuple[float, list[tuple[np.ndarray, float]]]:
        ub = self.ub
        segs = []
        v = np.array([0.0, 1.0])
        dt, code = self.rates.step(1, ub)
        segs.append((v, dt))
        total = dt
        v = self.ops.select(v, code)
        events = 0
        while v.size > 2:
            dt, code = self.rates.step(v.size - 1, ub)
            if dt == math.inf:
                raise RuntimeError("leaf process stuck above 1")
            segs.append((v, dt))
            total += dt
            v = self.ops.select(v, code) if code > 0 else self.ops.coalesce(v, -code)
            events += 1
            if events > self.max_events:
                raise RuntimeError("excursion exceeded the event budget")
        self.cycles += 1
        return total, segs

    def sample(self) -> np.ndarray:
        if self.envelope == 0.0:
            return np.array([0.0, 1.0])
        while True:
            total, segs = self._cycle()
            while total > self.envelope:
                self.envelope *= 2.0
                self.envelope_doublings += 1
            if self.ub.u() * self.envelope < total:
                break
        self.accepted += 1
        target = self.ub.u() * total
        for v, dt in segs:
            if target < dt:
                return v.copy()
            target -= dt
        return segs[-1][0].copy()


def sample_stationary_V(sd: SelectionMechanism, L: LambdaMeasure, rng,
                        sampler: StationarySampler | None = None) -> np.ndarray:
    """One draw of V from the invariant law (requires positive recurrence)."""
    from .analysis import POSITIVE_RECURRENT, classify_leaf_process
    if classify_leaf_process(sd.beta, L) != POSITIVE_RECURRENT:
        raise RegimeError("stationary sampling needs a positive recurrent leaf process")
    return (sampler or StationarySampler(sd, L, rng)).sample()


@dataclass
class CoupledRun:
    """One coupled (V, W) run from e_{n+1} on a shared leaf path."""

    q_grid: np.ndarray          # Q at the requested times
    integral: float             # integral of 1 - Q up to tau
    tau: float                  # first time L hits 1 (inf if not within cap)
    v: np.ndarray
    w: np.ndarray


def coupled_run(sd: SelectionMechanism, L: LambdaMeasure, n_start: int, x: float,
                t_grid: Sequence[float], ub: Uniforms, rates: LeafRates,
                ops_v: _Operators, ops_w: _Operators, t_stop: float | None = None,
                max_events: int = 10_000_000) -> CoupledRun:
    """Drive V (rule p) and W (reversed rule) from e_{n+1} until L hits 1
    (or ``t_stop``); Q_t = <B(x), V_t> + <B(1-x), W_t>."""
    v = unit_vector(n_start)
    w = unit_vector(n_start)
    grid = np.asarray(t_grid, dtype=float)
    q_grid = np.ones(grid.size)
    gi = 0
    t = 0.0
    integral = 0.0
    n = n_start
    cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def q_of(v, w):
        b = cache.get(v.size)
        if b is None:
            b = cache[v.size] = (bernstein_basis(v.size - 1, x), bernstein_basis(v.size - 1, 1.0 - x))
        return float(b[0] @ v + b[1] @ w)

    q = q_of(v, w)
    events = 0
    while n > 1:
        dt, code = rates.step(n, ub)
        t_next = t + dt
        if t_stop is not None and t_next > t_stop:
            while gi < grid.size and grid[gi] < t_stop:
                q_grid[gi] = q
                gi += 1
            return CoupledRun(q_grid, integral, math.inf, v, w)
        while gi < grid.size and grid[gi] < t_next:
            q_grid[gi] = q
            gi += 1
        integral += (1.0 - q) * dt
        t = t_next
        if code > 0:
            v = ops_v.select(v, code)
            w = ops_w.select(w, code)
        else:
            v = ops_v.coalesce(v, -code)
            w = ops_w.coalesce(w, -code)
        n = v.size - 1
        q = q_of(v, w)
        events += 1
        if events > max_events:
            raise RuntimeError("coupled run exceeded the event budget")
    return CoupledRun(q_grid, integral, t, v, w)


def entrance_law_sample(sd: SelectionMechanism, L: LambdaMeasure, t0: float,
                        n_max: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """(V, W) at time t0 started from e_{n_max+1}, approximating a start at
    infinitely many leaves."""
    from .analysis import require_cdi
    if t0 <= 0:
        raise ValueError("t0 must be > 0")
    require_cdi(L)
    ub = Uniforms(as_generator(rng), 1024)
    rates = LeafRates(sd, L)
    run = coupled_run(sd, L, n_max, 0.5, [], ub, rates, _Operators(sd.rule),
                      _Operators(sd.rule.reversed()), t_stop=t0)
    return run.v, run.w


def entrance_law_sensitivity(sd: SelectionMechanism, L: LambdaMeasure, t0: float,
                             n_max: int, xs: Sequence[float], reps: int, rng) -> dict:
    """Compare E<B(x), V_t0> started from n_max and from 2 n_max leaves.

    ``flagged`` lists the x values where the two means differ by more than
    three pooled standard errors.
    """
    gen = as_generator(rng)
    means, ses = [], []
    for n in (n_max, 2 * n_max):
        vals = np.array([[asp_eval(v, x) for x in xs]
                         for v, _ in (entrance_law_sample(sd, L, t0, n, gen) for _ in range(reps))])
        means.append(vals.mean(axis=0))
        ses.append(vals.std(axis=0, ddof=1) / math.sqrt(reps))
    pooled = np.sqrt(ses[0] ** 2 + ses[1] ** 2)
    diff = np.abs(means[0] - means[1])
    flagged = [float(x) for x, d, s in zip(xs, diff, pooled) if d > 3 * s and d > 1e-12]
    return {"n_max": n_max, "mean": means[0].tolist(), "mean_doubled": means[1].tolist(),
            "pooled_se": pooled.tolist(), "flagged": flagged}


# ---------------------------------------------------------------------------
# fixation line
# ---------------------------------------------------------------------------

INF_CODE = 0


class FixationRates:
    """Event tables of the fixation line; up-jump series truncated per state."""

    def __init__(self, beta, L: LambdaMeasure, defect: float = 1e-10):
        self.beta = _beta_array(beta)
        self.L = L
        self.defect = defect
        self.max_defect = 0.0
        self.max_cap = 0
        self._tables: dict[int, tuple[float, list[float], list[int]]] = {}

    def down_rate(self, d: int, r: int) -> float:
        m = self.beta.size + 1
        if not (1 <= r <= min(m, d) - 1):
            return 0.0
        b = lambda ell: self.beta[ell - 2] if 2 <= ell <= m else 0.0
        return (d - r) * b(r + 1) + sum(b(k + 1) for k in range(r + 1, m))

    def table(self, d: int) -> tuple[float, list[float], list[int]]:
        tab = self._tables.get(d)
        if tab is not None:
            return tab
        rates, codes = [], []
        if d >= 2:
            up, miss, cap = fixation_up_table(self.L, d, self.defect)
            self.max_defect = max(self.max_defect, miss)
            self.max_cap = max(self.max_cap, cap)
            for c, r in enumerate(up, start=1):
                if r > 0:
                    rates.append(r)
                    codes.append(c)
            if self.L.mass_at_one > 0:
                rates.append(self.L.mass_at_one)
                codes.append(INF_CODE)
            m = self.beta.size + 1
            for r in range(1, min(m, d)):
                x = self.down_rate(d, r)
                if x > 0:
                    rates.append(x)
                    codes.append(-r)
        total = math.fsum(rates)
        cum, acc = [], 0.0
        for r in rates:
            acc += r
            cum.append(acc / total)
        if cum:
            cum[-1] = 1.0
        tab = (total, cum, codes)
        self._tables[d] = tab
        return tab


def simulate_fixation_line(d0: int, beta, L: LambdaMeasure, horizon: float, rng,
                           rates: FixationRates | None = None,
                           ceiling: int | None = None) -> float:
    """Value of the fixation line at ``horizon`` (``math.inf`` after the jump
    to infinity).

    With a Kingman part the line explodes in finite time. Passing ``ceiling``
    treats any value above it as already exploded, which saves simulating the
    long climb; choose it where a return below the level of interest is
    negligible.
    """
    if d0 < 1:
        raise ValueError("need d0 >= 1")
    rates = rates or FixationRates(beta, L)
    ub = rng if isinstance(rng, Uniforms) else Uniforms(as_generator(rng), 256)
    d = d0
    t = 0.0
    while d > 1:
        if ceiling is not None and d > ceiling:
            return math.inf
        total, cum, codes = rates.table(d)
        if total == 0.0:
            break
        t += ub.exp() / total
        if t > horizon:
            break
        code = codes[bisect.bisect_left(cum, ub.u())]
        if code == INF_CODE:
            return math.inf
        d += code
    return d
