"""Small independent reference computations used by the tests.

Nothing here imports the package's simulation or analysis code; each
quantity is computed from its defining formula.
"""

import math

import numpy as np
from scipy.linalg import expm


def bernstein_direct(v, x):
    m = len(v) - 1
    return sum(v[i] * math.comb(m, i) * x**i * (1 - x) ** (m - i) for i in range(m + 1))


def lambda_direct(kingman, atoms, n, k):
    out = kingman if k == 2 else 0.0
    for r, w in atoms:
        out += w * r ** (k - 2) * (1 - r) ** (n - k)
    return out


def leaf_generator(beta, kingman, atoms, cap):
    """Generator of the leaf process on {1..cap}; jumps above cap are dropped
    (the diagonal keeps the full exit rate so mass leaks instead of piling up)."""
    Q = np.zeros((cap, cap))
    for n in range(1, cap + 1):
        out = 0.0
        for j, b in enumerate(beta):
            ell = j + 2
            rate = n * b
            out += rate
            if n + ell - 1 <= cap:
                Q[n - 1, n + ell - 2] += rate
        for k in range(2, n + 1):
            rate = math.comb(n, k) * lambda_direct(kingman, atoms, n, k)
            out += rate
            Q[n - 1, n - k] += rate
        Q[n - 1, n - 1] -= out
    return Q


def leaf_law(beta, kingman, atoms, n0, t, cap=120):
    Q = leaf_generator(beta, kingman, atoms, cap)
    return expm(Q * t)[n0 - 1]


def fixation_line_law(beta, kingman, atoms, d0, t, cap=200):
    """Law of the fixation line at t on {1..cap} (mass lost above cap or to
    infinity is simply missing)."""
    m = len(beta) + 1
    b = lambda ell: beta[ell - 2] if 2 <= ell <= m else 0.0
    Q = np.zeros((cap, cap))
    mass_one = sum(w for r, w in atoms if r == 1.0)
    for d in range(2, cap + 1):
        out = mass_one
        for c in range(1, 4 * cap):
            rate = math.comb(d + c - 1, c + 1) * lambda_direct(kingman, atoms, c + d, c + 1)
            out += rate
            if d + c <= cap:
                Q[d - 1, d + c - 1] += rate
        for r in range(1, min(m, d)):
            rate = (d - r) * b(r + 1) + sum(b(k + 1) for k in range(r + 1, m))
            out += rate
            Q[d - 1, d - r - 1] += rate
        Q[d - 1, d - 1] -= out
    return expm(Q * t)[d0 - 1]


def neutral_kingman_moment(x, n, t, cap=60):
    """E_x[X_t^n] for the neutral Wright-Fisher diffusion via the Kingman
    block-counting chain."""
    law = leaf_law([], 1.0, [], n, t, cap=max(cap, n + 1))
    return sum(law[j - 1] * x**j for j in range(1, len(law) + 1))


def fearnhead_genic_kingman(sigma, n):
    """Stationary leaf-count mass at n for Kingman + genic selection."""
    c = 2 * sigma
    return c ** (n - 1) / math.factorial(n) / math.expm1(c) * c
