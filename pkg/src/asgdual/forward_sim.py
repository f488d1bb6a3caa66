"""Forward-in-time simulators: the finite Moran model and an Euler scheme for
its large-population limit.

Moran model of size N in model time. An l-replacement hits each individual at
rate beta_N[l]. The focal individual's l - 1 companions are drawn without
replacement from the other N - 1, and the focal individual becomes type a
with probability p_{i,l}, where i counts type a among all l. For r >= 1 an
r-reproduction is started by each individual at rate
mu({r}) + [r = 1] mu({0}) / 2. The offspring replace r individuals drawn
uniformly from the whole population (the parent included).

Only the type-a count k is tracked; by exchangeability it is Markov.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._streams import as_generator
from .bernstein_core import bernstein_basis, hypergeom_vector, log_binom
from .lambda_measure import LambdaMeasure
from .selection_geometry import ColouringRule, SelectionMechanism, drift_polynomial

CLAMP_LIMIT = 1e-3


def drift_eval(sd: SelectionMechanism, x: float) -> float:
    """sum_l beta_l sum_i b_{i,l}(x) (p_{i,l} - i/l)."""
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"x={x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    out = 0.0
    for ell in range(2, sd.m + 1):
        b = sd.rate(ell)
        if b:
            out += b * float(bernstein_basis(ell, x) @ (sd.rule[ell] - np.arange(ell + 1) / ell))
    return out


def drift_vectorized(sd: SelectionMechanism):
    """Vectorised drift as a callable on arrays (monomial form, Horner)."""
    coeffs = np.asarray(drift_polynomial(sd).coeffs, dtype=float)[::-1]
    if not np.any(coeffs):
        return lambda x: np.zeros_like(x)
    return lambda x: np.polyval(coeffs, x)


# ---------------------------------------------------------------------------
# Moran model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MoranModel:
    N: int
    beta_N: np.ndarray                  # per-individual rates, entry 0 is order 2
    rule: ColouringRule
    mu: np.ndarray = field(default=None)  # weights on {0..N}

    def __post_init__(self):
        beta = np.array(self.beta_N, dtype=float).reshape(-1)
        mu = np.zeros(self.N + 1) if self.mu is None else np.array(self.mu, dtype=float)
        if self.N < 2:
            raise ValueError("need N >= 2")
        if mu.size != self.N + 1:
            raise ValueError("mu needs N + 1 weights")
        if np.any(beta < 0) or np.any(mu < 0):
            raise ValueError("rates must be >= 0")
        if beta.size + 1 > self.N:
            raise ValueError("need m <= N")
        if beta.size + 1 != self.rule.m:
            raise ValueError("beta and rule disagree on m")
        object.__setattr__(self, "beta_N", beta)
        object.__setattr__(self, "mu", mu)

    @property
    def m(self) -> int:
        return self.beta_N.size + 1

    def reproduction_rate(self, r: int) -> float:
        """Per-individual rate of r-reproductions."""
        return self.mu[r] + (self.mu[0] / 2.0 if r == 1 else 0.0)

    @classmethod
    def from_limit(cls, N: int, sd: SelectionMechanism, L: LambdaMeasure) -> "MoranModel":
        """The standard sequence converging to the (sd, L) limit: beta / N and mu_N."""
        return cls(N, sd.beta / N, sd.rule, moran_mu_from_lambda(N, L))


@dataclass
class MoranState:
    k: int
    N: int

    def __post_init__(self):
        if not (0 <= self.k <= self.N):
            raise ValueError(f"count {self.k} outside [0, {self.N}]")

    @property
    def frequency(self) -> float:
        return self.k / self.N


def moran_mu_from_lambda(N: int, L: LambdaMeasure) -> np.ndarray:
    """Weights on {0..N}: mu[0] = Lambda({0}) and, for 1 <= k <= N - 1,
    mu[k] = C(N, k+1) lambda0_{N, k+1} / N^2 with the Kingman atom left out."""
    if N < 2:
        raise ValueError("need N >= 2")
    mu = np.zeros(N + 1)
    mu[0] = L.kingman_weight
    k = np.arange(1, N)
    lb = np.array([log_binom(N, int(j) + 1) for j in k])
    for r, w in L.atoms:
        if r == 1.0:
            mu[N - 1] += w / N**2
            continue
        mu[1:N] += w * np.exp(lb + (k - 1) * math.log(r) + (N - k - 1) * math.log1p(-r)) / N**2
    return mu


def moran_total_mass(mu: np.ndarray) -> float:
    """M_mu = mu[0] + sum_k mu[k] k^2."""
    k = np.arange(mu.size)
    return float(mu[0] + np.sum(mu[1:] * k[1:] ** 2))


def _select_probs(model: MoranModel, k: int) -> tuple[float, float]:
    # per-event probabilities (A -> a, a -> A) given focal type, summed with rates
    N = model.N
    up = down = 0.0
    for ell in range(2, model.m + 1):
        b = model.beta_N[ell - 2]
        if b == 0.0:
            continue
        p = model.rule[ell]
        if k < N:
            h = hypergeom_vector(N - 1, k, ell - 1)
            up += b * (N - k) * float(h @ p[:h.size])
        if k > 0:
            h = hypergeom_vector(N - 1, k - 1, ell - 1)
            down += b * k * float(h @ (1.0 - p[1:h.size + 1]))
    return up, down


def moran_rate_matrix(model: MoranModel) -> np.ndarray:
    """Off-diagonal rates Q[k, j] of the count chain (model time)."""
    N = model.N
    Q = np.zeros((N + 1, N + 1))
    for k in range(N + 1):
        up, down = _select_probs(model, k)
        if k < N:
            Q[k, k + 1] += up
        if k > 0:
            Q[k, k - 1] += down
    for r in range(1, N + 1):
        rate = model.reproduction_rate(r)
        if rate == 0.0:
            continue
        for k in range(N + 1):
            h = hypergeom_vector(N, k, r)
            K = np.flatnonzero(h)
            h = h[K]
            # parent a: k -> k + r - K ; parent A: k -> k - K
            np.add.at(Q[k], k + r - K, rate * k * h)
            np.add.at(Q[k], k - K, rate * (N - k) * h)
    np.fill_diagonal(Q, 0.0)
    return Q


def moran_generator_drift(model: MoranModel) -> np.ndarray:
    """N * (A^N f)(k/N) for f(x) = x, i.e. the drift of X_{N t}, at every k."""
    Q = moran_rate_matrix(model)
    k = np.arange(model.N + 1)
    return (Q * (k[None, :] - k[:, None])).sum(axis=1)


def moran_simulate(model: MoranModel, k0: int, horizon_model_time: float, rng) -> list[tuple[float, int]]:
    """Event-by-event simulation; returns the (time, k) pairs at every event
    that changes k, starting with (0, k0)."""
    N = model.N
    MoranState(k0, N)
    gen = as_generator(rng)
    sel_total = N * float(model.beta_N.sum())
    rep = np.array([model.reproduction_rate(r) for r in range(1, N + 1)])
    rep_total = N * float(rep.sum())
    total = sel_total + rep_total
    traj = [(0.0, k0)]
    if total == 0.0:
        return traj
    orders = np.arange(2, model.m + 1)
    sel_p = model.beta_N / model.beta_N.sum() if sel_total > 0 else None
    rep_p = rep / rep.sum() if rep_total > 0 else None
    k = k0
    t = 0.0
    while 0 < k < N:
        t += gen.exponential(1.0 / total)
        if t > horizon_model_time:
            break
        new = k
        if gen.random() * total < sel_total:
            ell = int(orders[gen.choice(orders.size, p=sel_p)])
            focal_a = gen.random() * N < k
            others = int(gen.hypergeometric(k - focal_a, N - 1 - (k - focal_a), ell - 1)) if ell > 1 else 0
            i = others + focal_a
            becomes_a = gen.random() < model.rule[ell][i]
            new = k + (becomes_a and not focal_a) - (focal_a and not becomes_a)
        else:
            r = int(gen.choice(N, p=rep_p)) + 1
            parent_a = gen.random() * N < k
            hit_a = int(gen.hypergeometric(k, N - k, r)) if r < N else k
            new = k + r - hit_a if parent_a else k - hit_a
        if new != k:
            k = new
            traj.append((t, k))
    return traj


class MoranBatch:
    """Vectorised exact simulation of many count chains.

    Only transitions that change k are kept. The nonzero entries of row k of
    the jump kernel are stored as a cumulative distribution shifted by k, so a
    single searchsorted on ``k + u`` over the flattened table samples every
    replicate at once.
    """

    def __init__(self, model: MoranModel):
        self.model = model
        Q = moran_rate_matrix(model)
        self.rates = Q.sum(axis=1)
        flat, targets, row_end = [], [], []
        for k in range(model.N + 1):
            nz = np.flatnonzero(Q[k])
            if nz.size:
                cum = np.cumsum(Q[k, nz]) / self.rates[k]
                cum[-1] = 1.0
                flat.append(k + cum)
                targets.append(nz)
            row_end.append(sum(a.size for a in flat) - 1)
        self.flat = np.concatenate(flat) if flat else np.zeros(0)
        self.targets = np.concatenate(targets) if targets else np.zeros(0, dtype=np.int64)
        self.row_end = np.array(row_end)

    def run(self, k0, horizon_model_time: float, rng) -> np.ndarray:
        gen = as_generator(rng)
        out = np.array(k0, dtype=np.int64).copy()
        idx = np.flatnonzero(self.rates[out] > 0)
        k = out[idx]
        t = np.zeros(idx.size)
        while idx.size:
            t += gen.standard_exponential(idx.size) / self.rates[k]
            stop = t > horizon_model_time
            if stop.any():
                keep = ~stop
                out[idx[stop]] = k[stop]
                idx, k, t = idx[keep], k[keep], t[keep]
                if not idx.size:
                    break
            pos = np.searchsorted(self.flat, k + gen.random(idx.size), side="right")
            k = self.targets[np.minimum(pos, self.row_end[k])]
            dead = self.rates[k] == 0
            if dead.any():
                out[idx[dead]] = k[dead]
                keep = ~dead
                idx, k, t = idx[keep], k[keep], t[keep]
        return out


def moran_frequency_at(model: MoranModel, x0: float, t_limit_time: float, rng,
                       reps: int | None = None, batch: MoranBatch | None = None):
    """k/N at model time N * t_limit_time, from k0 = round(N x0).

    With ``reps`` set, returns an array of that many independent frequencies.
    """
    if not (0.0 <= x0 <= 1.0):
        raise ValueError("x0 outside [0, 1]")
    N = model.N
    k0 = int(round(N * x0))
    if reps is None:
        traj = moran_simulate(model, k0, N * t_limit_time, rng)
        return traj[-1][1] / N
    batch = batch or MoranBatch(model)
    return batch.run(np.full(reps, k0), N * t_limit_time, rng) / N


# ---------------------------------------------------------------------------
# limiting jump diffusion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SdeConfig:
    sd: SelectionMechanism
    L: LambdaMeasure
    dt: float = 1e-3
    scheme: str = "euler_jump"

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError("dt must be > 0")
        if self.scheme != "euler_jump":
            raise ValueError(f"unknown scheme {self.scheme!r}")

    @property
    def jump_intensity(self) -> float:
        """sum_i w_i / r_i^2 over the atoms in (0, 1]."""
        return sum(w / (r * r) for r, w in self.L.atoms)


@dataclass
class SdeResult:
    x: np.ndarray
    clamp_events: int
    steps: int

    @property
    def clamp_fraction(self) -> float:
        return self.clamp_events / self.steps if self.steps else 0.0

    @property
    def flagged(self) -> bool:
        return self.clamp_fraction >= CLAMP_LIMIT


def sde_paths(cfg: SdeConfig, x0: float, horizon: float, reps: int, rng) -> SdeResult:
    """Euler scheme for drift plus Wright-Fisher noise, with exact Poisson
    jump counts per step for each atom of L."""
    if not (0.0 <= x0 <= 1.0):
        raise ValueError("x0 outside [0, 1]")
    if not math.isfinite(cfg.jump_intensity):
        raise ValueError("infinite jump intensity")
    gen = as_generator(rng)
    drift = drift_vectorized(cfg.sd)
    x = np.full(reps, float(x0))
    nsteps = int(math.ceil(horizon / cfg.dt - 1e-12)) if horizon > 0 else 0
    dt = horizon / nsteps if nsteps else 0.0
    sig2 = cfg.L.kingman_weight
    atoms = [(r, w / (r * r)) for r, w in cfg.L.atoms]
    clamps = 0
    steps = 0
    for _ in range(nsteps):
        live = np.flatnonzero((x > 0.0) & (x < 1.0))
        if not live.size:
            break
        xs = x[live]
        step = drift(xs) * dt
        if sig2 > 0:
            step += np.sqrt(sig2 * xs * (1.0 - xs) * dt) * gen.standard_normal(live.size)
        xs = xs + step
        out = (xs < 0.0) | (xs > 1.0)
        clamps += int(out.sum())
        steps += live.size
        xs = np.clip(xs, 0.0, 1.0)
        for r, rate in atoms:
            n = gen.poisson(rate * dt, live.size)
            for j in np.flatnonzero(n):
                for _ in range(n[j]):
                    if gen.random() <= xs[j]:
                        xs[j] += r * (1.0 - xs[j])
                    else:
                        xs[j] -= r * xs[j]
        x[live] = xs
    return SdeResult(x, clamps, steps)


def sde_simulate(cfg: SdeConfig, x0: float, horizon: float, rng) -> float:
    """One path of the limiting process; returns X at ``horizon``."""
    return float(sde_paths(cfg, x0, horizon, 1, rng).x[0])


@dataclass
class AbsorptionRun:
    fixed: int          # paths that ended within ``band`` of 1
    lost: int           # paths that ended within ``band`` of 0
    unabsorbed: int     # paths still inside the band at the horizon cap
    cap: float


def sde_until_absorbed(cfg: SdeConfig, x0: float, reps: int, rng, band: float = 1e-6,
                       cap: float = 100.0) -> AbsorptionRun:
    """Run paths until they come within ``band`` of a boundary or reach ``cap``."""
    gen = as_generator(rng)
    drift = drift_vectorized(cfg.sd)
    x = np.full(reps, float(x0))
    dt = cfg.dt
    sig2 = cfg.L.kingman_weight
    atoms = [(r, w / (r * r)) for r, w in cfg.L.atoms]
    t = 0.0
    live = np.flatnonzero((x > band) & (x < 1.0 - band))
    while live.size and t < cap:
        xs = x[live]
        step = drift(xs) * dt
        if sig2 > 0:
            step += np.sqrt(sig2 * xs * (1.0 - xs) * dt) * gen.standard_normal(live.size)
        xs = np.clip(xs + step, 0.0, 1.0)
        for r, rate in atoms:
            n = gen.poisson(rate * dt, live.size)
            for j in np.flatnonzero(n):
                for _ in range(n[j]):
                    if gen.random() <= xs[j]:
                        xs[j] += r * (1.0 - xs[j])
                    else:
                        xs[j] -= r * xs[j]
        x[live] = xs
        live = live[(xs > band) & (xs < 1.0 - band)]
        t += dt
    fixed = int(np.sum(x >= 1.0 - band))
    lost = int(np.sum(x <= band))
    return AbsorptionRun(fixed, lost, reps - fixed - lost, cap)
