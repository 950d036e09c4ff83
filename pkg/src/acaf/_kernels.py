"""Compiled inner loops for the latent recursion.

Parameters travel as a flat float64 array in the order
``beta0..beta3, gamma0..gamma3, delta0..delta3, mu``. States are carried as
logs. ``two_branch=False`` drops the delta block and the second Frechet
branch (the single-index AcF model).

The simulator and the filter share :func:`step_logs`, so filtering a simulated
series reproduces its latent path bit for bit.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def step_logs(th, ls, la1, la2, q):
    ls_n = th[0] + th[1] * ls - th[2] * math.exp(-th[3] * q)
    la1_n = th[4] + th[5] * la1 + th[6] * math.exp(-th[7] * q)
    la2_n = th[8] + th[9] * la2 + th[10] * math.exp(-th[11] * q)
    return ls_n, la1_n, la2_n


@njit(cache=True)
def log_density(q, mu, ls, la1, la2, two_branch):
    x = q - mu
    if not x > 0.0:
        return -np.inf
    lx = math.log(x)
    lr = ls - lx
    a1 = math.exp(la1)
    t1 = a1 * lr
    if two_branch:
        a2 = math.exp(la2)
        t2 = a2 * lr
        b1 = la1 + t1 - lx
        b2 = la2 + t2 - lx
        if b1 > b2:
            lse = b1 + math.log1p(math.exp(b2 - b1))
        else:
            lse = b2 + math.log1p(math.exp(b1 - b2))
        # Summing the two CDF terms first keeps the value symmetric in the branches.
        return lse - (math.exp(t1) + math.exp(t2))
    return la1 + t1 - lx - math.exp(t1)


@njit(cache=True)
def filter_logs(th, q, ls0, la10, la20):
    n = q.shape[0]
    out = np.empty((n, 3))
    ls, la1, la2 = ls0, la10, la20
    for t in range(n):
        out[t, 0] = ls
        out[t, 1] = la1
        out[t, 2] = la2
        if t + 1 < n:
            ls, la1, la2 = step_logs(th, ls, la1, la2, q[t])
    return out


@njit(cache=True)
def loglik_terms(th, q, ls0, la10, la20, two_branch):
    n = q.shape[0]
    out = np.empty(n)
    mu = th[12]
    ls, la1, la2 = ls0, la10, la20
    for t in range(n):
        out[t] = log_density(q[t], mu, ls, la1, la2, two_branch)
        if t + 1 < n:
            ls, la1, la2 = step_logs(th, ls, la1, la2, q[t])
    return out


@njit(cache=True)
def loglik_sum(th, q, ls0, la10, la20, two_branch):
    n = q.shape[0]
    mu = th[12]
    total = 0.0
    ls, la1, la2 = ls0, la10, la20
    for t in range(n):
        total += log_density(q[t], mu, ls, la1, la2, two_branch)
        ls, la1, la2 = step_logs(th, ls, la1, la2, q[t])
    return total


@njit(cache=True)
def simulate_logs(th, u, ls0, la10, la20, two_branch):
    """Draw ``Q_t`` then advance the state; ``u`` is an (n, 2) uniform array."""
    n = u.shape[0]
    q = np.empty(n)
    states = np.empty((n, 3))
    noise = np.empty((n, 2))
    mu = th[12]
    ls, la1, la2 = ls0, la10, la20
    for t in range(n):
        states[t, 0] = ls
        states[t, 1] = la1
        states[t, 2] = la2
        y1 = -1.0 / math.log(u[t, 0])
        noise[t, 0] = y1
        z = math.exp(math.log(y1) / math.exp(la1))
        if two_branch:
            y2 = -1.0 / math.log(u[t, 1])
            noise[t, 1] = y2
            z2 = math.exp(math.log(y2) / math.exp(la2))
            if z2 > z:
                z = z2
        else:
            noise[t, 1] = np.nan
        q[t] = mu + math.exp(ls) * z
        ls, la1, la2 = step_logs(th, ls, la1, la2, q[t])
    return q, states, noise
