"""Scalar reference forward pass and finite-difference gradients.

Written with plain loops so it shares nothing with the vectorized code.
"""
import numpy as np

from fairspread.qnet import ParameterSet


def relu(v):
    return v if v > 0 else 0.0


def scalar_forward(adjacency, x, params: ParameterSet, T, action):
    """Returns (Q, smallest |pre-activation| seen) for one state-action pair."""
    n, f = x.shape
    d = params.d
    th1, th2, th3, th4, th5 = params.arrays()
    mu = [[0.0] * d for _ in range(n)]
    margin = np.inf
    for _ in range(T):
        new = []
        for v in range(n):
            agg = [sum(mu[u][j] for u in adjacency[v]) for j in range(d)]
            row = []
            for i in range(d):
                pre = sum(th1[r][i] * x[v][r] for r in range(f)) + sum(th2[i][j] * agg[j] for j in range(d))
                margin = min(margin, abs(pre))
                row.append(relu(pre))
            new.append(row)
        mu = new
    pooled = [sum(mu[u][j] for u in range(n)) for j in range(d)]
    q = 0.0
    for i in range(d):
        z4 = sum(th4[i][j] * pooled[j] for j in range(d))
        z5 = sum(th5[i][j] * mu[action][j] for j in range(d))
        margin = min(margin, abs(z4), abs(z5))
        q += th3[i] * relu(z4) + th3[d + i] * relu(z5)
    return q, margin


def finite_difference_gradient(adjacency, x, params, T, action, target, step=1e-5):
    base = params.flat()
    grad = np.zeros_like(base)
    for i in range(base.size):
        e = np.zeros_like(base)
        e[i] = step
        hi = scalar_forward(adjacency, x, params.with_flat(base + e), T, action)[0]
        lo = scalar_forward(adjacency, x, params.with_flat(base - e), T, action)[0]
        grad[i] = ((target - hi) ** 2 - (target - lo) ** 2) / (2 * step)
    return grad


def relative_error(analytic, numeric, floor=1e-6):
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / scale))
