"""Independent reference computations used by the tests.

Nothing here touches the package's kernels: subsets come from itertools,
MNL probabilities are written out longhand, and simulations draw Gumbel
noise with numpy's own sampler.
"""
import itertools
import math

import numpy as np


def mnl(v, r):
    """Traditional MNL probabilities (products, no-purchase) by the plain formula."""
    w = [math.exp(a - b) for a, b in zip(v, r)]
    d = 1.0 + sum(w)
    return [x / d for x in w], 1.0 / d


def naive_opaque(v, r, rho):
    """Inclusion-exclusion over itertools subsets, one MNL evaluation per subset.

    Returns (p_products, p_opaque, p_none, revenue).
    """
    m = len(v)
    p = [0.0] * m
    pq = p0 = rev = 0.0
    for size in range(1, m + 1):
        sign = 1.0 if size % 2 else -1.0
        for I in itertools.combinations(range(m), size):
            prices = [rho if k in I else r[k] for k in range(m)]
            probs, none = mnl(v, prices)
            for k in range(m):
                if k not in I:
                    p[k] += sign * probs[k]
            pq += sign * sum(probs[k] for k in I)
            p0 += sign * none
            rev += sign * sum(pr * pb for pr, pb in zip(prices, probs))
    return p, pq, p0, rev


def simulate(v, r, rho, samples, seed):
    """Empirical option frequencies and mean revenue from direct simulation."""
    rng = np.random.default_rng(seed)
    v = np.asarray(v, float)
    r = np.asarray(r, float)
    eps = rng.gumbel(size=(samples, len(v) + 1))
    V = v + eps[:, 1:]
    U = np.column_stack((V - r, eps[:, 0], V.min(axis=1) - rho if rho <= r.min() else np.full(samples, -np.inf)))
    choice = U.argmax(axis=1)
    freq = np.bincount(choice, minlength=len(v) + 2) / samples
    prices = np.concatenate((r, [0.0, rho]))
    return freq, float(prices[choice].mean())


def bisect_root(f, lo, hi, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def grid_argmax(f, lo, hi, points):
    xs = np.linspace(lo, hi, points)
    ys = [f(x) for x in xs]
    k = int(np.argmax(ys))
    return xs[k], ys[k]
