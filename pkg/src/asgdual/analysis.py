"""Regime classification, stationary leaf counts, duality checks, fixation
probabilities and absorption times.

Monte Carlo estimators return means with standard errors. Replicates are cut
into fixed blocks with one random stream per block, so results depend only on
the seed and the replicate count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln

from ._streams import Uniforms, as_seed, rng_stream, run_blocks
from .ancestral_dual import (
    FixationRates,
    LeafRates,
    RegimeError,
    StationarySampler,
    _Operators,
    bcp_values,
    coagulation_matrix,
    coupled_run,
    leaf_count_at,
    selection_matrix,
    simulate_fixation_line,
)
from .bernstein_core import BernsteinVector, bernstein_basis, monomial_from_bcv
from .forward_sim import MoranBatch, MoranModel, SdeConfig, sde_paths, sde_until_absorbed
from .lambda_measure import (
    LIKELY_NOT,
    LambdaMeasure,
    cdi_diagnostic,
    coalescence_impact,
    fixation_up_total,
    merger_rates,
)
from .selection_geometry import SelectionMechanism, drift_polynomial, effective_branching_rate, minimal_rate_of

POSITIVE_RECURRENT = "positive_recurrent"
TRANSIENT = "transient"
CRITICAL_UNKNOWN = "critical_unknown"

DUAL_MC = "dual_mc"
FORWARD_MC = "forward_mc"
SERIES = "series"

# stream-id offsets so that estimators sharing a seed never share streams
_FORWARD_STREAMS = 0
_DUAL_STREAMS = 1 << 20
_EXTRA_STREAMS = 2 << 20


def _beta(beta) -> np.ndarray:
    return beta.beta if isinstance(beta, SelectionMechanism) else np.asarray(beta, dtype=float)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def classify_leaf_process(beta, L: LambdaMeasure) -> str:
    """Compare the effective branching rate with the coalescence impact."""
    b = effective_branching_rate(_beta(beta))
    c = coalescence_impact(L)
    if math.isinf(c):
        return POSITIVE_RECURRENT
    if abs(b - c) <= 1e-12:
        return CRITICAL_UNKNOWN
    return POSITIVE_RECURRENT if b < c else TRANSIENT


def require_recurrent(beta, L: LambdaMeasure) -> None:
    verdict = classify_leaf_process(beta, L)
    if verdict != POSITIVE_RECURRENT:
        b = effective_branching_rate(_beta(beta))
        raise RegimeError(f"leaf process is {verdict} (b={b:.6g}, c={coalescence_impact(L):.6g}); "
                          "a positive recurrent regime is required")


def require_cdi(L: LambdaMeasure, K: int = 1000) -> None:
    _, verdict = cdi_diagnostic(L, K)
    if verdict == LIKELY_NOT:
        raise RegimeError("the coalescent does not appear to come down from infinity")


# ---------------------------------------------------------------------------
# stationary tail of the leaf process
# ---------------------------------------------------------------------------

@dataclass
class StationaryTail:
    a: np.ndarray               # a[n] = P(L > n), n = 0..nmax
    nmax: int
    residual: float
    doublings: int
    converged: bool
    change: float
    config: dict = field(default_factory=dict)

    @property
    def q(self) -> np.ndarray:
        """q[n] = P(L = n) for n = 0..nmax (q[0] = 0)."""
        out = np.zeros(self.a.size)
        out[1:] = self.a[:-1] - self.a[1:]
        return out

    def to_json(self) -> dict:
        return {"nmax": self.nmax, "a": self.a.tolist(), "q": self.q.tolist(),
                "residual": self.residual, "doublings": self.doublings,
                "converged": self.converged, "last_change": self.change, "config": self.config}


def _up_rates_matrix(L: LambdaMeasure, nmax: int) -> np.ndarray:
    # U[n-1, j-1]: rate from d = n + 1 to d = j + 1 (j > n), i.e. coefficient of a_j in row n
    U = np.zeros((nmax, nmax))
    n = np.arange(1, nmax + 1)[:, None]
    j = np.arange(1, nmax + 1)[None, :]
    c = j - n + 1  # merger size in the recursion
    ok = c >= 2
    cc = np.where(ok, c, 2)
    logC = gammaln(n + cc) - gammaln(cc + 1) - gammaln(n)
    if L.kingman_weight > 0:
        U += np.where(c == 2, L.kingman_weight * np.exp(logC), 0.0)
    for r, w in L.interior_atoms:
        U += np.where(ok, w * np.exp(logC + (cc - 2) * math.log(r) + n * math.log1p(-r)), 0.0)
    return U


def _fearnhead_system(beta: np.ndarray, L: LambdaMeasure, nmax: int) -> tuple[np.ndarray, np.ndarray]:
    A = -_up_rates_matrix(L, nmax)
    rhs = np.zeros(nmax)
    down = FixationRates(beta, L)
    for n in range(1, nmax + 1):
        d = n + 1
        diag = fixation_up_total(L, d) + L.mass_at_one
        for r in range(1, min(beta.size + 1, d)):
            x = down.down_rate(d, r)
            diag += x
            if n - r == 0:
                rhs[n - 1] += x
            else:
                A[n - 1, n - r - 1] -= x
        A[n - 1, n - 1] = diag
    return A, rhs


def fearnhead_solve(beta, L: LambdaMeasure, Nmax: int = 50, tol: float = 1e-12,
                    max_doublings: int = 6) -> StationaryTail:
    """Stationary tail probabilities a_n = P(L_inf > n) from the linear
    recursion with a_0 = 1 and a_n = 0 beyond the truncation, doubling the
    truncation until successive solutions differ by less than ``tol``."""
    beta = _beta(beta)
    require_recurrent(beta, L)
    prev = None
    nmax = int(Nmax)
    change = math.inf
    doublings = 0
    while True:
        A, rhs = _fearnhead_system(beta, L, nmax)
        sol = np.linalg.solve(A, rhs)
        a = np.concatenate([[1.0], sol])
        residual = float(np.max(np.abs(A @ sol - rhs)))
        if prev is not None:
            padded = np.zeros(a.size)
            padded[:prev.size] = prev
            change = float(np.max(np.abs(a - padded)))
            if change < tol:
                break
        if doublings >= max_doublings:
            break
        prev = a
        nmax *= 2
        doublings += 1
    cfg = {"Nmax_start": int(Nmax), "tol": tol, "max_doublings": max_doublings}
    return StationaryTail(a, nmax, residual, doublings, change < tol, change, cfg)


def stationary_L_empirical_check(beta, L: LambdaMeasure, run_time: float, rng,
                                 tail: StationaryTail | None = None) -> float:
    """Total-variation distance between the long-run occupation frequencies of
    one leaf path (started at 1) and the solved stationary masses."""
    beta = _beta(beta)
    require_recurrent(beta, L)
    tail = tail or fearnhead_solve(beta, L)
    rates = LeafRates(beta, L)
    ub = Uniforms(rng_stream(as_seed(rng), _EXTRA_STREAMS))
    occ: dict[int, float] = {}
    n, t = 1, 0.0
    while t < run_time:
        dt, code = rates.step(n, ub)
        dt = min(dt, run_time - t)
        occ[n] = occ.get(n, 0.0) + dt
        t += dt
        if t >= run_time:
            break
        n = n + code - 1 if code > 0 else n + code + 1
    q = tail.q
    top = max(max(occ), q.size - 1)
    emp = np.zeros(top + 1)
    for k, v in occ.items():
        emp[k] = v / run_time
    ref = np.zeros(top + 1)
    ref[:q.size] = q
    return 0.5 * float(np.abs(emp - ref).sum())


# ---------------------------------------------------------------------------
# duality checks
# ---------------------------------------------------------------------------

@dataclass
class DualityReport:
    lhs_mean: float
    lhs_se: float
    rhs_mean: float
    rhs_se: float
    reps: int
    config: dict = field(default_factory=dict)

    @property
    def z(self) -> float:
        diff = abs(self.lhs_mean - self.rhs_mean)
        se = math.hypot(self.lhs_se, self.rhs_se)
        if se == 0.0:
            return 0.0 if diff <= 1e-15 else math.inf
        return diff / se

    def to_json(self) -> dict:
        z = self.z
        return {"lhs_mean": self.lhs_mean, "lhs_se": self.lhs_se, "rhs_mean": self.rhs_mean,
                "rhs_se": self.rhs_se, "z": z if math.isfinite(z) else "inf",
                "replicates": self.reps, "config": self.config}


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        return float(x.mean()), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def parse_forward(spec: str) -> tuple[str, float]:
    """'sde', 'sde:0.001', 'moran:500' -> (kind, parameter)."""
    kind, _, arg = spec.partition(":")
    if kind == "sde":
        dt = float(arg) if arg else 1e-3
        if not dt > 0:
            raise ValueError("sde step must be > 0")
        return kind, dt
    if kind == "moran":
        if not arg:
            raise ValueError("moran forward estimator needs a population size, e.g. moran:500")
        if int(arg) < 2:
            raise ValueError("moran population size must be >= 2")
        return kind, int(arg)
    raise ValueError(f"unknown forward estimator {spec!r}")


def forward_frequency_samples(sd: SelectionMechanism, L: LambdaMeasure, x: float, t: float,
                              reps: int, seed: int, forward: str = "sde",
                              threads: int | None = None) -> np.ndarray:
    """Replicates of X_t started at x from the chosen forward model."""
    kind, arg = parse_forward(forward)
    if t == 0:
        return np.full(reps, float(x) if kind == "sde" else round(arg * x) / arg)
    if kind == "sde":
        cfg = SdeConfig(sd, L, dt=arg)
        fn = lambda size, gen: sde_paths(cfg, x, t, size, gen).x
    else:
        model = MoranModel.from_limit(arg, sd, L)
        batch = MoranBatch(model)
        k0 = int(round(arg * x))
        fn = lambda size, gen: batch.run(np.full(size, k0), arg * t, gen) / arg
    return run_blocks(fn, reps, seed, threads, offset=_FORWARD_STREAMS)


def dual_samples(sd: SelectionMechanism, L: LambdaMeasure, n: int, t: float, xs, reps: int,
                 seed: int, threads: int | None = None) -> np.ndarray:
    """Replicates of <B_{L_t}(x), V_t> from V_0 = e_{n+1}, one column per x."""
    xs = [float(x) for x in xs]
    fn = lambda size, gen: bcp_values(sd, L, n, t, xs, size, gen)
    return run_blocks(fn, reps, seed, threads, offset=_DUAL_STREAMS + 4096 * n)


def verify_duality(sd: SelectionMechanism, L: LambdaMeasure, x: float, n: int, t: float,
                   reps: int, rng, forward: str = "sde", threads: int | None = None) -> DualityReport:
    """E_x[X_t^n] from the forward model against E[<B_{L_t}(x), V_t>] from e_{n+1}."""
    if reps < 1000:
        raise ValueError("need reps >= 1000")
    seed = as_seed(rng)
    fwd = forward_frequency_samples(sd, L, x, t, reps, seed, forward, threads) ** n
    bwd = dual_samples(sd, L, n, t, [x], reps, seed, threads)[:, 0]
    lm, ls = _mean_se(fwd)
    rm, rs = _mean_se(bwd)
    cfg = {"sd": sd.to_json(), "lambda": L.to_json(), "x": x, "n": n, "t": t,
           "forward": forward, "seed": seed, "reps": reps}
    return DualityReport(lm, ls, rm, rs, reps, cfg)


def verify_siegmund(beta, L: LambdaMeasure, ell: int, d: int, t: float, reps: int, rng,
                    threads: int | None = None) -> DualityReport:
    """P_l(d <= L_t) from leaf paths against P_d(D_t <= l) from the fixation line."""
    if reps < 1000:
        raise ValueError("need reps >= 1000")
    beta = _beta(beta)
    seed = as_seed(rng)
    rates = LeafRates(beta, L)
    frates = FixationRates(beta, L)
    # with a Kingman part the line climbs quadratically; far above ell it never returns
    ceiling = ell + max(64, 16 * ell) if L.kingman_weight > 0 else None

    def lhs(size, gen):
        ub = Uniforms(gen)
        return np.array([d <= leaf_count_at(ell, rates, t, ub) for _ in range(size)], dtype=float)

    def rhs(size, gen):
        ub = Uniforms(gen)
        return np.array([simulate_fixation_line(d, beta, L, t, ub, frates, ceiling) <= ell
                         for _ in range(size)], dtype=float)

    lm, ls = _mean_se(run_blocks(lhs, reps, seed, threads, offset=_FORWARD_STREAMS))
    rm, rs = _mean_se(run_blocks(rhs, reps, seed, threads, offset=_DUAL_STREAMS))
    cfg = {"beta": beta.tolist(), "lambda": L.to_json(), "ell": ell, "d": d, "t": t,
           "seed": seed, "reps": reps, "ceiling": ceiling, "fixation_cap": frates.max_cap,
           "fixation_mass_defect": frates.max_defect}
    return DualityReport(lm, ls, rm, rs, reps, cfg)


# ---------------------------------------------------------------------------
# exact dual expectation by a truncated linear ODE
# ---------------------------------------------------------------------------

def dual_expectation_exact(sd: SelectionMechanism, L: LambdaMeasure, ns, xs, t: float,
                           n_cap: int = 60) -> np.ndarray:
    """E[<B_{L_t}(x), V_t>] from V_0 = e_{n+1} for every n in ``ns`` and x in ``xs``.

    With G_t(n) the vector satisfying E_v[<B_{L_t}(x), V_t>] = <G_t(n), v>,

        dG(n)/dt = sum_l n beta_l S^T G(n+l-1) + sum_k r_{n,k} C^T G(n-k+1) - R_n G(n),

    with G_0(n) = B_n(x). Branchings that would exceed ``n_cap`` leaves are
    dropped, so the error is bounded by the chance of reaching ``n_cap``.
    """
    off = {}
    size = 0
    for n in range(1, n_cap + 1):
        off[n] = size
        size += n + 1
    rows, cols, vals = [], [], []

    def put(block: np.ndarray, r0: int, c0: int) -> None:
        i, j = np.nonzero(block)
        rows.append(i + r0)
        cols.append(j + c0)
        vals.append(block[i, j])

    beta = sd.beta
    for n in range(1, n_cap + 1):
        R = 0.0
        o = off[n]
        for ell in range(2, sd.m + 1):
            b = beta[ell - 2]
            if b == 0 or n + ell - 1 > n_cap:
                continue
            put(selection_matrix(n, ell, sd.rule[ell]).T * (n * b), o, off[n + ell - 1])
            R += n * b
        if n >= 2:
            mr = merger_rates(L, n)
            for k in range(2, n + 1):
                if mr[k] > 0:
                    put(coagulation_matrix(n, k).T * mr[k], o, off[n - k + 1])
                    R += mr[k]
        put(-R * np.eye(n + 1), o, o)
    A = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                   shape=(size, size)).tocsr()
    G0 = np.zeros((size, len(xs)))
    for n in range(1, n_cap + 1):
        for c, x in enumerate(xs):
            G0[off[n]:off[n] + n + 1, c] = bernstein_basis(n, float(x))
    Gt = expm_multiply(A * t, G0) if t > 0 else G0
    return np.array([[Gt[off[n] + n, c] for c in range(len(xs))] for n in ns])


# ---------------------------------------------------------------------------
# fixation probability
# ---------------------------------------------------------------------------

def _forward_cap(sd: SelectionMechanism) -> float:
    bstar = minimal_rate_of(drift_polynomial(sd))
    return 50.0 / bstar if bstar > 1e-12 else 50.0


def absorption_probability_report(sd: SelectionMechanism, L: LambdaMeasure, x: float, method: str,
                                  budget: int, rng, dt: float = 1e-3,
                                  threads: int | None = None) -> dict:
    """Fixation probability of type a with diagnostics (see ``absorption_probability``)."""
    if not (0.0 <= x <= 1.0):
        raise ValueError("x outside [0, 1]")
    if method not in (DUAL_MC, FORWARD_MC, SERIES):
        raise ValueError(f"unknown method {method!r}")
    if method in (DUAL_MC, SERIES):
        require_recurrent(sd, L)
    seed = as_seed(rng)
    out = {"method": method, "x": x, "budget": budget, "seed": seed}
    if x in (0.0, 1.0):
        out.update(h=float(x), se=0.0)
        return out
    if method == FORWARD_MC:
        cap = _forward_cap(sd)
        cfg = SdeConfig(sd, L, dt=dt)
        runs = []

        def fn(size, gen):
            r = sde_until_absorbed(cfg, x, size, gen, cap=cap)
            runs.append(r)
            return np.concatenate([np.ones(r.fixed), np.zeros(r.lost), np.full(r.unabsorbed, np.nan)])

        vals = run_blocks(fn, budget, seed, threads, offset=_FORWARD_STREAMS)
        done = vals[~np.isnan(vals)]
        h, se = _mean_se(done)
        out.update(h=h, se=se, unabsorbed=int(np.isnan(vals).sum()), horizon_cap=cap, dt=dt)
        return out
    offset = _DUAL_STREAMS if method == DUAL_MC else _EXTRA_STREAMS
    samples = stationary_samples(sd, L, budget, seed, threads, offset)
    if method == DUAL_MC:
        vals = np.array([float(bernstein_basis(v.size - 1, x) @ v) for v in samples])
        h, se = _mean_se(vals)
        out.update(h=h, se=se, mean_leaves=float(np.mean([v.size - 1 for v in samples])))
        return out
    coeffs, per_sample = _series_coefficients(samples)
    cmax = np.max(np.abs(coeffs))
    small = np.flatnonzero(np.abs(coeffs) < 1e-8 * cmax)
    small = small[small > 0]
    K = int(small[0]) if small.size else coeffs.size - 1
    powers = x ** np.arange(K + 1)
    vals = per_sample[:, :K + 1] @ powers
    h, se = _mean_se(vals)
    leaves = np.array([v.size - 1 for v in samples])
    bound = float(np.mean((1.0 + 2.0 * x) ** leaves) - 1.0)
    out.update(h=h, se=se, coefficients=coeffs[:K + 1].tolist(), truncation=K,
               exponential_moment_bound=bound)
    return out


def _series_coefficients(samples) -> tuple[np.ndarray, np.ndarray]:
    top = max(v.size for v in samples)
    per = np.zeros((len(samples), top))
    for i, v in enumerate(samples):
        c = monomial_from_bcv(BernsteinVector(v)).coeffs
        per[i, :len(c)] = c
    return per.mean(axis=0), per


def stationary_samples(sd: SelectionMechanism, L: LambdaMeasure, count: int, seed: int,
                       threads: int | None = None, offset: int = _DUAL_STREAMS) -> list[np.ndarray]:
    """``count`` draws of V from the invariant law, in seeded blocks."""
    require_recurrent(sd, L)

    def fn(size, gen):
        sampler = StationarySampler(sd, L, gen)
        arr = np.empty(size, dtype=object)
        for i in range(size):
            arr[i] = sampler.sample()
        return arr

    return list(run_blocks(fn, count, seed, threads, offset=offset))


def absorption_probability(sd: SelectionMechanism, L: LambdaMeasure, x: float, method: str,
                           budget: int, rng, **kw) -> tuple[float, float]:
    """Probability that type a fixes, started from frequency x.

    ``dual_mc`` averages <B(x), V> over stationary draws of V; ``forward_mc``
    runs the jump diffusion until it is within 1e-6 of a boundary; ``series``
    averages the monomial coefficients of the stationary draws.
    """
    rep = absorption_probability_report(sd, L, x, method, budget, rng, **kw)
    return rep["h"], rep["se"]


# ---------------------------------------------------------------------------
# absorption time
# ---------------------------------------------------------------------------

def entrance_time_correction(beta, L: LambdaMeasure, n_max: int) -> float:
    """Approximate time to come down from infinity to n_max leaves:
    sum over n > n_max of 1 / (descent speed - n b(beta))."""
    b = effective_branching_rate(_beta(beta))
    total = 0.0
    lo = n_max + 1
    hi = n_max * 10_000
    chunk = 1_000_000
    last = 0.0
    while lo <= hi:
        n = np.arange(lo, min(lo + chunk, hi + 1), dtype=float)
        speed = L.kingman_weight * n * (n - 1) / 2.0
        for r, w in L.atoms:
            speed += w * (n * r - 1.0 + (1.0 - r) ** n) / (r * r)
        net = speed - n * b
        if np.any(net <= 0):
            return math.inf
        terms = 1.0 / net
        total += float(terms.sum())
        last = float(terms[-1]) * float(n[-1])
        lo += chunk
    # terms decay like 1/n^2 once quadratic descent dominates
    return total + last


@dataclass
class AbsorptionTime:
    t_grid: np.ndarray
    cdf: np.ndarray
    cdf_se: np.ndarray
    mean_T: float
    se_T: float
    mean_tau: float
    se_tau: float
    correction: float
    n_max: int
    reps: int
    sensitivity: dict | None = None

    def __iter__(self):
        # unpacks as (cdf, mean_T, se)
        return iter((self.cdf, self.mean_T, self.se_T))

    def to_json(self) -> dict:
        return {"t": self.t_grid.tolist(), "cdf": self.cdf.tolist(), "cdf_se": self.cdf_se.tolist(),
                "mean_T": self.mean_T, "se_T": self.se_T, "mean_tau": self.mean_tau,
                "se_tau": self.se_tau, "entrance_correction": self.correction,
                "n_max": self.n_max, "reps": self.reps, "sensitivity": self.sensitivity}


def _coupled_block(sd, L, x, grid, n_max):
    rates = LeafRates(sd, L)
    ops_v = _Operators(sd.rule)
    ops_w = _Operators(sd.rule.reversed())

    def fn(size, gen):
        ub = Uniforms(gen)
        out = np.empty((size, grid.size + 2))
        for i in range(size):
            run = coupled_run(sd, L, n_max, x, grid, ub, rates, ops_v, ops_w)
            out[i, :grid.size] = run.q_grid
            out[i, grid.size] = run.integral
            out[i, grid.size + 1] = run.tau
        return out

    return fn


def absorption_time(sd: SelectionMechanism, L: LambdaMeasure, x: float, t_grid, n_max: int,
                    reps: int, rng, sensitivity: bool = True, threads: int | None = None) -> AbsorptionTime:
    """P(T <= t) on ``t_grid`` and E[T], T the first time the forward process
    hits {0, 1}, from coupled coefficient runs started at n_max leaves.

    E[T] and E[tau] add the approximate time to come down from infinity to
    n_max (``entrance_time_correction``); during that stretch Q is close to 0.
    """
    require_cdi(L)
    grid = np.asarray(t_grid, dtype=float)
    if x in (0.0, 1.0):
        z = np.zeros(grid.size)
        return AbsorptionTime(grid, np.ones(grid.size), z, 0.0, 0.0, math.nan, math.nan, 0.0,
                              n_max, reps)
    seed = as_seed(rng)
    corr = entrance_time_correction(sd, L, n_max)
    raw = run_blocks(_coupled_block(sd, L, x, grid, n_max), reps, seed, threads, offset=_DUAL_STREAMS)
    cdf = raw[:, :grid.size].mean(axis=0)
    cdf_se = raw[:, :grid.size].std(axis=0, ddof=1) / math.sqrt(reps)
    mT, sT = _mean_se(raw[:, grid.size])
    mtau, stau = _mean_se(raw[:, grid.size + 1])
    res = AbsorptionTime(grid, cdf, cdf_se, mT + corr, sT, mtau + corr, stau, corr, n_max, reps)
    if sensitivity:
        reps2 = max(reps // 4, 100)
        corr2 = entrance_time_correction(sd, L, 2 * n_max)
        raw2 = run_blocks(_coupled_block(sd, L, x, grid, 2 * n_max), reps2, seed, threads,
                          offset=_EXTRA_STREAMS)
        m2, s2 = _mean_se(raw2[:, grid.size])
        pooled = math.hypot(sT, s2)
        diff = abs(mT + corr - (m2 + corr2))
        cdf2 = raw2[:, :grid.size].mean(axis=0)
        cdf2_se = raw2[:, :grid.size].std(axis=0, ddof=1) / math.sqrt(reps2)
        cdf_pooled = np.hypot(cdf_se, cdf2_se)
        flagged_t = [float(t) for t, a, b, s in zip(grid, cdf, cdf2, cdf_pooled)
                     if abs(a - b) > 3 * s and abs(a - b) > 1e-12]
        res.sensitivity = {"n_max_doubled": 2 * n_max, "reps": reps2, "mean_T": m2 + corr2,
                           "se_T": s2, "flag_mean": diff > 3 * pooled, "flag_cdf_t": flagged_t}
    return res
