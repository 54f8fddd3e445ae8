"""Choice probabilities and revenue when an opaque product is sold next to
the traditional ones, for customers who value it at the minimum of the
offered valuations.

Exact evaluation runs the inclusion-exclusion sum over every nonempty subset
of the assortment; Monte-Carlo evaluation simulates Gumbel utilities.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .model import (
    ChoiceDistribution,
    InstanceError,
    MarketInstance,
    as_assortment,
    index_array,
    trad_choice_prob,
    trad_revenue_arrays,
)

DEFAULT_EXACT_CAP = 20
NO_PURCHASE = 0
OPAQUE = -1
MC_CHUNK = 1 << 15
_HALF_WIDTH_DELTA = 0.05


class ExactCapError(InstanceError):
    """Assortment too large for exact evaluation; use Monte Carlo instead."""


def exact_cap() -> int:
    raw = os.environ.get("OPAQUE_MNL_EXACT_CAP")
    if raw is None:
        return DEFAULT_EXACT_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise InstanceError("OPAQUE_MNL_EXACT_CAP", f"not an integer: {raw!r}") from None
    if cap < 1:
        raise InstanceError("OPAQUE_MNL_EXACT_CAP", "must be positive")
    return cap


@dataclass(frozen=True)
class OpaqueQuote:
    rho: float
    revenue: float
    distribution: ChoiceDistribution
    mode: str = "exact"
    half_width: float = 0.0
    samples: int | None = None
    seed: int | None = None
    diagnostic: bool = False

    def to_dict(self) -> dict:
        d = {
            "rho": float(self.rho),
            "revenue": float(self.revenue),
            "distribution": self.distribution.to_dict(),
            "mode": self.mode,
            "half_width": float(self.half_width),
        }
        if self.samples is not None:
            d["samples"] = int(self.samples)
            d["seed"] = int(self.seed)
        if self.diagnostic:
            d["diagnostic"] = "unimodality guard disagreement"
        return d


@dataclass(frozen=True)
class McConfig:
    samples: int | None = None
    epsilon: float | None = None
    delta: float | None = None
    seed: int = 0

    def __post_init__(self):
        has_eps = self.epsilon is not None or self.delta is not None
        if (self.samples is None) == (not has_eps):
            raise InstanceError("samples", "give either samples or (epsilon, delta), not both")
        if self.samples is not None and int(self.samples) < 1:
            raise InstanceError("samples", "must be a positive integer")
        if has_eps:
            for name in ("epsilon", "delta"):
                x = getattr(self, name)
                if x is None or not 0.0 < x <= 1.0:
                    raise InstanceError(name, "must lie in (0, 1]")
        if not 0 <= int(self.seed) < 2**64:
            raise InstanceError("seed", "must be an unsigned 64-bit integer")

    def sample_count(self, r_max: float) -> int:
        if self.samples is not None:
            return int(self.samples)
        return required_samples(r_max, self.epsilon, self.delta)

    def half_width(self, r_max: float, T: int) -> float:
        if self.samples is None:
            return float(self.epsilon)
        return r_max * math.sqrt(math.log(2.0 / _HALF_WIDTH_DELTA) / (2.0 * T))


def required_samples(r_max: float, epsilon: float, delta: float) -> int:
    """Hoeffding sample size for an ``epsilon``-accurate estimate w.p. ``1 - delta``."""
    if not (0.0 < epsilon <= 1.0 and 0.0 < delta <= 1.0):
        raise InstanceError("epsilon", "epsilon and delta must lie in (0, 1]")
    if r_max <= 0:
        raise InstanceError("r_max", "must be positive")
    x = r_max**2 * math.log(2.0 / delta) / (2.0 * epsilon**2)
    # absorb round-off so that exact integers are not bumped up by one
    return max(1, math.ceil(x * (1.0 - 1e-12)))


def _members(inst: MarketInstance, S: Iterable[int], cap: int | None):
    S = as_assortment(S, inst.n, nonempty=True)
    cap = exact_cap() if cap is None else cap
    if len(S) > cap:
        raise ExactCapError(
            "assortment", f"{len(S)} products exceed the exact-mode cap of {cap}; use Monte Carlo"
        )
    idx = index_array(S)
    return S, inst.v[idx], inst.r[idx]


def opq_revenue_arrays(v: np.ndarray, r: np.ndarray, rho: float) -> float:
    if rho > r.min():
        return trad_revenue_arrays(v, r)
    return float(_kernels.ie_revenue(v, r, float(rho)))


def opq_choice_prob_exact(
    inst: MarketInstance, S: Iterable[int], rho: float, cap: int | None = None
) -> ChoiceDistribution:
    return _exact(inst, S, rho, cap)[0]


def opq_revenue_exact(
    inst: MarketInstance, S: Iterable[int], rho: float, cap: int | None = None
) -> float:
    if rho < 0:
        raise InstanceError("rho", "must be nonnegative")
    _, v, r = _members(inst, S, cap)
    return opq_revenue_arrays(v, r, rho)


def opq_quote_exact(
    inst: MarketInstance, S: Iterable[int], rho: float, cap: int | None = None
) -> OpaqueQuote:
    dist, revenue = _exact(inst, S, rho, cap)
    return OpaqueQuote(float(rho), revenue, dist)


def _exact(inst, S, rho, cap):
    if rho < 0:
        raise InstanceError("rho", "must be nonnegative")
    S, v, r = _members(inst, S, cap)
    if rho > r.min():
        return trad_choice_prob(inst, S), trad_revenue_arrays(v, r)
    p, pq, p0, revenue = _kernels.ie_probs(v, r, float(rho))
    dist = ChoiceDistribution({i: float(x) for i, x in zip(S, p)}, float(pq), float(p0))
    return dist, float(revenue)


# ---------------------------------------------------------------------------
# Monte Carlo
# ---------------------------------------------------------------------------


def _open_uniform(rng: np.random.Generator, size) -> np.ndarray:
    """Uniforms on the open interval (0, 1) with 53-bit resolution."""
    return (rng.integers(0, 1 << 53, size=size, dtype=np.int64) + 0.5) * 2.0**-53


def gumbel_chunk(seed: int, chunk: int, rows: int, width: int) -> np.ndarray:
    """Standard Gumbel noise for samples ``chunk*MC_CHUNK + [0, rows)``.

    Column 0 is the no-purchase option, column ``i`` product ``i``.  The
    stream of chunk ``c`` depends only on ``(seed, c)``, and rows are drawn
    in order, so sample ``t`` never depends on how many samples are taken.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(chunk),))
    rng = np.random.Generator(np.random.Philox(ss))
    return -np.log(-np.log(_open_uniform(rng, (rows, width))))


def sample_choice(inst: MarketInstance, S: Iterable[int], rho: float, rng: np.random.Generator):
    """Simulate one customer; return ``(option, revenue)``.

    ``option`` is a 1-based product index, ``OPAQUE`` or ``NO_PURCHASE``.
    """
    S = as_assortment(S, inst.n, nonempty=True)
    idx = index_array(S)
    g = -np.log(-np.log(_open_uniform(rng, (1, inst.n + 1))))
    v, r = inst.v[idx], inst.r[idx]
    counts = _kernels.mc_counts(g, idx + 1, v, r, float(rho), bool(rho <= r.min()))
    k = int(np.argmax(counts))
    if k < len(S):
        return S[k], float(r[k])
    if k == len(S):
        return OPAQUE, float(rho)
    return NO_PURCHASE, 0.0


def opq_revenue_mc(
    inst: MarketInstance,
    S: Iterable[int],
    rho: float,
    cfg: McConfig,
    jobs: int = 1,
) -> OpaqueQuote:
    """Sample-mean revenue over ``T`` simulated customers.

    The result depends only on ``(inst, S, rho, cfg)``: chunks of
    ``MC_CHUNK`` samples have their own RNG streams and the per-chunk counts
    are integers, so any split across ``jobs`` threads gives the same answer.
    """
    if rho < 0:
        raise InstanceError("rho", "must be nonnegative")
    S = as_assortment(S, inst.n, nonempty=True)
    idx = index_array(S)
    v, r = inst.v[idx], inst.r[idx]
    r_max = float(r.max())
    T = cfg.sample_count(r_max)
    active = bool(rho <= r.min())
    cols = idx + 1
    width = inst.n + 1

    def run(chunk):
        rows = min(MC_CHUNK, T - chunk * MC_CHUNK)
        g = gumbel_chunk(cfg.seed, chunk, rows, width)
        return _kernels.mc_counts(g, cols, v, r, float(rho), active)

    chunks = range((T + MC_CHUNK - 1) // MC_CHUNK)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            parts = list(pool.map(run, chunks))
    else:
        parts = [run(c) for c in chunks]
    counts = np.sum(parts, axis=0)
    m = len(S)
    revenue_total = math.fsum([*(r * counts[:m]), rho * counts[m]])
    dist = ChoiceDistribution(
        {i: counts[k] / T for k, i in enumerate(S)},
        counts[m] / T,
        counts[m + 1] / T,
    )
    return OpaqueQuote(
        float(rho),
        revenue_total / T,
        dist,
        mode="monte-carlo",
        half_width=cfg.half_width(r_max, T),
        samples=T,
        seed=int(cfg.seed),
    )


def uniform_price_decomposition(inst: MarketInstance, S: Iterable[int], r: float, rho: float):
    """Split the uniform-price opaque revenue into a mix of two traditional revenues.

    Returns ``(theta, lhs, rhs)`` where ``lhs`` is the opaque revenue and
    ``rhs = theta * Rev(all at rho) + (1 - theta) * Rev(all at r)``.
    """
    S, v, prices = _members(inst, S, None)
    if not np.allclose(prices, r, rtol=1e-12, atol=0.0):
        raise InstanceError("r", "prices over the assortment must all equal r")
    if rho > r:
        raise InstanceError("rho", "must not exceed the uniform price")
    if rho < 0:
        raise InstanceError("rho", "must be nonnegative")
    uni = np.full(len(S), float(r))
    dist, lhs = _exact(MarketInstance(v, uni), range(1, len(S) + 1), rho, None)
    low = np.full(len(S), float(rho))
    if rho > 0:
        at_rho = trad_choice_prob(MarketInstance(v, low), range(1, len(S) + 1))
        buy_prob = math.fsum(at_rho.p_product.values())
        rev_rho = trad_revenue_arrays(v, low)
    else:
        # the zero price is outside the instance domain; its share is 1 - p_none
        c = max(0.0, float(np.max(v)))
        w = np.exp(v - c)
        buy_prob = math.fsum(w) / (math.exp(-c) + math.fsum(w))
        rev_rho = 0.0
    theta = min(max(dist.p_opaque / buy_prob, 0.0), 1.0)  # clip round-off
    rhs = theta * rev_rho + (1.0 - theta) * trad_revenue_arrays(v, uni)
    return theta, lhs, rhs
