"""Opaque-price line search and assortment optimization.

Every candidate assortment is scored by its best opaque price, found by
golden-section search on ``[0, min r]`` (revenue in ``rho`` is assumed
unimodal).  A 64-point grid scan followed by a local golden-section step
guards against multimodality; when the two disagree by more than
``GUARD_TOL`` the better point wins and ``diagnostic`` is set.
"""
from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _kernels
from .model import (
    InstanceError,
    MarketInstance,
    as_assortment,
    index_array,
    trad_revenue_arrays,
)
from .opaque import OpaqueQuote, _exact, _members, opq_revenue_arrays

DEFAULT_TOL = 1e-6
GRID_POINTS = 64
GUARD_TOL = 1e-6
OFFER_TOL = 1e-9
BRUTE_FORCE_CAP = 16
# beyond min(v) + FLAT_MARGIN the opaque share is below e^-40: revenue is flat
FLAT_MARGIN = 40.0


@dataclass(frozen=True)
class AssortmentSolution:
    assortment: tuple
    opaque_price: float
    revenue: float
    opaque_offered: bool
    method: str
    candidates_evaluated: int
    diagnostic: bool = False

    def to_dict(self) -> dict:
        d = {
            "assortment": list(self.assortment),
            "opaque_price": self.opaque_price,
            "revenue": self.revenue,
            "opaque_offered": self.opaque_offered,
            "method": self.method,
            "candidates_evaluated": self.candidates_evaluated,
        }
        if self.diagnostic:
            d["diagnostic"] = "unimodality guard disagreement"
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AssortmentSolution":
        return cls(
            tuple(d["assortment"]),
            d["opaque_price"],
            d["revenue"],
            d["opaque_offered"],
            d["method"],
            d["candidates_evaluated"],
            "diagnostic" in d,
        )


@dataclass(frozen=True)
class RevenueCurve:
    assortment: tuple
    points: np.ndarray  # shape (k, 2): rho, revenue

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("rho,revenue\n")
        for rho, rev in self.points:
            buf.write(f"{float(rho)!r},{float(rev)!r}\n")
        return buf.getvalue()


def best_rho(v: np.ndarray, r: np.ndarray, tol: float = DEFAULT_TOL):
    """``(rho, revenue, diagnostic)`` maximizing opaque revenue over ``[0, min r]``."""
    r_min = float(r.min())
    end = opq_revenue_arrays(v, r, r_min)
    hi = min(r_min, max(float(v.min()), 0.0) + FLAT_MARGIN)
    rp, fp, rg, fg = _kernels.search(v, r, hi, tol, GRID_POINTS)
    diagnostic = abs(fp - fg) > GUARD_TOL
    rho, rev = (rg, fg) if fg >= fp else (rp, fp)
    if rev > end:
        return min(float(rho), hi), float(rev), diagnostic  # golden-section can overshoot by an ulp
    return r_min, float(end), diagnostic


def optimize_opaque_price(
    inst: MarketInstance, S: Iterable[int], tol: float = DEFAULT_TOL
) -> OpaqueQuote:
    if tol <= 0:
        raise InstanceError("tol", "must be positive")
    S, v, r = _members(inst, S, None)
    rho, _, diagnostic = best_rho(v, r, tol)
    dist, revenue = _exact(inst, S, rho, None)
    return OpaqueQuote(rho, revenue, dist, diagnostic=diagnostic)


def revenue_curve(inst: MarketInstance, S: Iterable[int], points: int = 101) -> RevenueCurve:
    if points < 2:
        raise InstanceError("points", "need at least 2 points")
    S, v, r = _members(inst, S, None)
    grid = np.linspace(0.0, float(r.min()), points)
    revs = np.array([opq_revenue_arrays(v, r, x) for x in grid])
    return RevenueCurve(S, np.column_stack((grid, revs)))


def all_assortments(n: int):
    """Every nonempty subset of ``1..n`` as a sorted tuple."""
    for mask in range(1, 1 << n):
        yield tuple(k + 1 for k in range(n) if mask >> k & 1)


class _Scorer:
    """Memoized opaque-price optimization for assortments of one instance.

    Valid across prefixes of the same instance, since a score only depends
    on the members' own ``(v, r)``.
    """

    def __init__(self, inst: MarketInstance, tol: float = DEFAULT_TOL, cache=None):
        self.inst = inst
        self.tol = tol
        self.cache = {} if cache is None else cache

    def __call__(self, S: tuple):
        hit = self.cache.get(S)
        if hit is None:
            idx = index_array(S)
            hit = best_rho(self.inst.v[idx], self.inst.r[idx], self.tol)
            self.cache[S] = hit
        return hit

    def many(self, candidates, jobs: int = 1):
        todo = [S for S in candidates if S not in self.cache]
        if jobs > 1 and len(todo) > 1:
            with ThreadPoolExecutor(jobs) as pool:
                for S, hit in zip(todo, pool.map(self._compute, todo)):
                    self.cache[S] = hit
        return [self(S) for S in candidates]

    def _compute(self, S):
        idx = index_array(S)
        return best_rho(self.inst.v[idx], self.inst.r[idx], self.tol)


def _better(a, b) -> bool:
    """Total order: revenue, then smaller assortment, then lexicographic."""
    (Sa, ra), (Sb, rb) = a, b
    if ra != rb:
        return ra > rb
    if len(Sa) != len(Sb):
        return len(Sa) < len(Sb)
    return Sa < Sb


def _pick(inst, candidates, scorer, method, jobs=1) -> AssortmentSolution:
    scores = scorer.many(candidates, jobs)
    best = None
    for S, (rho, rev, diag) in zip(candidates, scores):
        if best is None or _better((S, rev), (best[0], best[2])):
            best = (S, rho, rev, diag)
    S, rho, rev, _ = best
    idx = index_array(S)
    r = inst.r[idx]
    offered = rho < float(r.min()) - OFFER_TOL and rev > trad_revenue_arrays(inst.v[idx], r) + OFFER_TOL
    diagnostic = any(d for _, _, d in scores)
    return AssortmentSolution(S, rho, rev, bool(offered), method, len(candidates), diagnostic)


def brute_force_assortment(
    inst: MarketInstance, *, tol: float = DEFAULT_TOL, jobs: int = 1, cache=None
) -> AssortmentSolution:
    if inst.n > BRUTE_FORCE_CAP:
        raise InstanceError("n", f"brute force is capped at {BRUTE_FORCE_CAP} products")
    return _pick(inst, list(all_assortments(inst.n)), _Scorer(inst, tol, cache), "brute-force", jobs)


def nested_by_valuation(
    inst: MarketInstance, *, tol: float = DEFAULT_TOL, cache=None
) -> AssortmentSolution:
    """Best of the top-k-by-valuation assortments; requires a common price."""
    if not np.all(inst.r == inst.r[0]):
        raise InstanceError("r", "nested-by-valuation needs all prices equal")
    order = sorted(range(inst.n), key=lambda k: (-inst.v[k], k))
    candidates = [tuple(sorted(k + 1 for k in order[:j])) for j in range(1, inst.n + 1)]
    return _pick(inst, candidates, _Scorer(inst, tol, cache), "nested-by-valuation")


def nrv_candidates(inst: MarketInstance) -> list:
    """Intersections of top-i-by-price and top-j-by-valuation sets, plus all singletons."""
    n = inst.n
    by_r = sorted(range(n), key=lambda k: (-inst.r[k], k))
    by_v = sorted(range(n), key=lambda k: (-inst.v[k], k))
    found = {(k + 1,) for k in range(n)}
    for i in range(1, n + 1):
        top_r = set(by_r[:i])
        for j in range(1, n + 1):
            both = top_r.intersection(by_v[:j])
            if both:
                found.add(tuple(sorted(k + 1 for k in both)))
    return sorted(found, key=lambda S: (len(S), S))


def nrv_heuristic(
    inst: MarketInstance, *, tol: float = DEFAULT_TOL, jobs: int = 1, cache=None
) -> AssortmentSolution:
    return _pick(inst, nrv_candidates(inst), _Scorer(inst, tol, cache), "nrv", jobs)


def approximation_report(inst: MarketInstance, *, tol: float = DEFAULT_TOL, cache=None):
    """``(optimal, nrv, gap_percent)`` with a shared score cache."""
    cache = {} if cache is None else cache
    opt = brute_force_assortment(inst, tol=tol, cache=cache)
    nrv = nrv_heuristic(inst, tol=tol, cache=cache)
    gap = 100.0 * (1.0 - nrv.revenue / opt.revenue) if opt.revenue > 0 else 0.0
    return opt, nrv, gap


METHODS = {
    "brute": brute_force_assortment,
    "nested": nested_by_valuation,
    "nrv": nrv_heuristic,
}


def solve(inst: MarketInstance, method: str, **kw) -> AssortmentSolution:
    try:
        fn = METHODS[method]
    except KeyError:
        raise InstanceError("method", f"unknown method {method!r}") from None
    if method == "nested":
        kw.pop("jobs", None)
    return fn(inst, **kw)


__all__ = [
    "AssortmentSolution",
    "RevenueCurve",
    "approximation_report",
    "as_assortment",
    "best_rho",
    "brute_force_assortment",
    "nested_by_valuation",
    "nrv_candidates",
    "nrv_heuristic",
    "optimize_opaque_price",
    "revenue_curve",
    "solve",
]
