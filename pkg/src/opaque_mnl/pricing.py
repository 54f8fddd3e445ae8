"""Joint pricing of the traditional and opaque products, plus numerical
checkers for the dominance properties behind uniform-price optimality."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .model import (
    InstanceError,
    MarketInstance,
    NumericalDiagnostic,
    as_assortment,
    index_array,
    optimal_uniform_price,
    trad_revenue_arrays,
)
from .opaque import opq_revenue_arrays

SLACK = 1e-9


@dataclass(frozen=True)
class PricingSolution:
    uniform_price: float
    opaque_price: float
    revenue: float
    assortment: tuple

    def to_dict(self) -> dict:
        return {
            "assortment": list(self.assortment),
            "uniform_price": self.uniform_price,
            "opaque_price": self.opaque_price,
            "revenue": self.revenue,
        }


def optimize_prices(inst: MarketInstance, S: Iterable[int]) -> PricingSolution:
    """Optimal prices on ``S``: every product and the opaque product at ``r*``."""
    S = as_assortment(S, inst.n, nonempty=True)
    r_star = optimal_uniform_price(inst, S)
    v = inst.v[index_array(S)]
    revenue = trad_revenue_arrays(v, np.full(len(S), r_star))
    if abs(revenue - (r_star - 1.0)) > SLACK * max(1.0, r_star):
        raise NumericalDiagnostic(
            f"revenue {revenue!r} does not match r* - 1 = {r_star - 1.0!r}"
        )
    return PricingSolution(r_star, r_star, revenue, S)


def _prices(S, r_S) -> np.ndarray:
    r_S = np.asarray(r_S, dtype=float).reshape(-1)
    if r_S.size != len(S):
        raise InstanceError("r_S", f"expected {len(S)} prices, got {r_S.size}")
    if not np.all(np.isfinite(r_S)) or np.any(r_S <= 0):
        raise InstanceError("r_S", "prices must be finite and positive")
    return r_S


def verify_no_opaque_gain(
    inst: MarketInstance, S: Iterable[int], r_S: Sequence[float], rho: float
) -> float:
    """Optimal uniform-price revenue minus the opaque revenue at ``(r_S, rho)``.

    Should never be negative beyond round-off.
    """
    S = as_assortment(S, inst.n, nonempty=True)
    if rho < 0:
        raise InstanceError("rho", "must be nonnegative")
    v = inst.v[index_array(S)]
    r_star = optimal_uniform_price(inst, S)
    best = trad_revenue_arrays(v, np.full(len(S), r_star))
    return best - opq_revenue_arrays(v, _prices(S, r_S), rho)


def check_case_i_dominance(
    inst: MarketInstance, S: Iterable[int], r_S: Sequence[float], rho: float
) -> bool:
    """With all prices at or below ``r*``, the opaque product cannot add revenue."""
    S = as_assortment(S, inst.n, nonempty=True)
    r_S = _prices(S, r_S)
    r_star = optimal_uniform_price(inst, S)
    if rho < 0 or rho > r_star or np.any(r_S > r_star):
        raise InstanceError("r_S", "requires rho <= r* and every price <= r*")
    v = inst.v[index_array(S)]
    return trad_revenue_arrays(v, r_S) >= opq_revenue_arrays(v, r_S, rho) - SLACK


def check_price_monotonicity(
    inst: MarketInstance,
    S: Iterable[int],
    i: int,
    rho: float,
    grid: Sequence[float],
) -> bool:
    """Is the opaque revenue non-increasing as ``r_i`` walks up ``grid``?

    Only grid points strictly above ``max(r*, rho)`` are used.
    """
    S = as_assortment(S, inst.n, nonempty=True)
    if i not in S:
        raise InstanceError("i", f"product {i} is not in the assortment")
    threshold = max(optimal_uniform_price(inst, S), rho)
    pts = np.sort(np.asarray(grid, dtype=float))
    pts = pts[pts > threshold]
    if pts.size == 0:
        raise InstanceError("grid", f"no grid point above max(r*, rho) = {threshold:.6g}")
    idx = index_array(S)
    v = inst.v[idx]
    r = inst.r[idx].copy()
    k = S.index(i)
    prev = math.inf
    for x in pts:
        r[k] = x
        cur = opq_revenue_arrays(v, r, rho)
        if cur > prev + SLACK:
            return False
        prev = cur
    return True


# ---------------------------------------------------------------------------
# random sweeps
# ---------------------------------------------------------------------------


def random_case(rng: np.random.Generator, n_max: int = 6):
    """A random instance and a random nonempty assortment of it."""
    n = int(rng.integers(1, n_max + 1))
    v = rng.normal(0.0, 1.5, n)
    r = rng.uniform(0.1, 6.0, n)
    inst = MarketInstance(v, r)
    while True:
        pick = rng.random(n) < 0.6
        if pick.any():
            break
    return inst, tuple(int(k) + 1 for k in np.flatnonzero(pick))


def sweep_no_opaque_gain(trials: int, seed: int, n_max: int = 6) -> dict:
    rng = np.random.default_rng([seed, 1])
    worst = math.inf
    cases = []
    for _ in range(trials):
        inst, S = random_case(rng, n_max)
        r_star = optimal_uniform_price(inst, S)
        r_S = rng.uniform(0.05, 3.0 * r_star, len(S))
        rho = rng.uniform(0.0, 1.2 * r_S.min())
        gap = verify_no_opaque_gain(inst, S, r_S, rho)
        worst = min(worst, gap)
        cases.append((inst, S))
    return {"trials": trials, "violations": int(worst < -SLACK), "min_gap": worst, "cases": cases}


def sweep_case_i(trials: int, seed: int, n_max: int = 6) -> dict:
    rng = np.random.default_rng([seed, 2])
    violations = 0
    cases = []
    for _ in range(trials):
        inst, S = random_case(rng, n_max)
        r_star = optimal_uniform_price(inst, S)
        r_S = r_star * (1.0 - rng.random(len(S)))
        rho = r_star * (1.0 - rng.random())
        violations += not check_case_i_dominance(inst, S, r_S, rho)
        cases.append((inst.with_prices(S, r_S), S))
    return {"trials": trials, "violations": violations, "cases": cases}


def sweep_monotonicity(trials: int, seed: int, n_max: int = 6, points: int = 20) -> dict:
    rng = np.random.default_rng([seed, 3])
    violations = 0
    cases = []
    for _ in range(trials):
        inst, S = random_case(rng, n_max)
        r_star = optimal_uniform_price(inst, S)
        i = S[int(rng.integers(len(S)))]
        rho = rng.uniform(0.0, 2.0 * r_star)
        start = max(r_star, rho)
        grid = start + np.cumsum(rng.uniform(0.01, 1.0, points))
        violations += not check_price_monotonicity(inst, S, i, rho, grid)
        cases.append((inst, S))
    return {"trials": trials, "violations": violations, "cases": cases}
