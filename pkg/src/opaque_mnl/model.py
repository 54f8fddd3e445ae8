"""Market instances, assortments and the traditional MNL formulas."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

#: Prices above this are rejected; use it as the stand-in for an "infinite" price.
PRICE_CAP = 1e6

Assortment = tuple  # sorted tuple of 1-based product indices


class InstanceError(ValueError):
    """Invalid market instance or assortment.  ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NumericalDiagnostic(RuntimeError):
    """A numerical self-check failed (not a user error)."""


@dataclass(frozen=True)
class MarketInstance:
    v: np.ndarray
    r: np.ndarray
    name: str | None = None

    def __post_init__(self):
        v = np.array(self.v, dtype=float).reshape(-1)
        r = np.array(self.r, dtype=float).reshape(-1)
        if v.size == 0:
            raise InstanceError("v", "at least one product is required")
        if v.shape != r.shape:
            raise InstanceError("r", f"length {r.size} does not match len(v) = {v.size}")
        if not np.all(np.isfinite(v)):
            raise InstanceError("v", "valuations must be finite")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise InstanceError("r", "prices must be finite and strictly positive")
        if np.any(r > PRICE_CAP):
            raise InstanceError("r", f"prices above {PRICE_CAP:g} are not supported")
        v.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "r", r)

    @property
    def n(self) -> int:
        return self.v.size

    def prefix(self, n: int) -> "MarketInstance":
        """The first ``n`` products."""
        return MarketInstance(self.v[:n], self.r[:n], self.name)

    def with_prices(self, S: Iterable[int], prices: Sequence[float]) -> "MarketInstance":
        """Copy with the prices of the products in ``S`` replaced."""
        S = as_assortment(S, self.n)
        prices = np.asarray(prices, dtype=float).reshape(-1)
        if prices.size != len(S):
            raise InstanceError("r_S", f"expected {len(S)} prices, got {prices.size}")
        r = self.r.copy()
        r[index_array(S)] = prices
        return MarketInstance(self.v, r, self.name)

    def to_dict(self) -> dict:
        d = {"v": [float(x) for x in self.v], "r": [float(x) for x in self.r]}
        if self.name is not None:
            d["name"] = self.name
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "MarketInstance":
        if not isinstance(d, Mapping):
            raise InstanceError("instance", "expected a JSON object")
        for key in ("v", "r"):
            if key not in d:
                raise InstanceError(key, "missing field")
            if not isinstance(d[key], list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in d[key]
            ):
                raise InstanceError(key, "expected an array of numbers")
        name = d.get("name")
        if name is not None and not isinstance(name, str):
            raise InstanceError("name", "expected a string")
        return cls(d["v"], d["r"], name)

    def to_json(self) -> str:
        # repr-based float rendering is the shortest round-trip form
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MarketInstance":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InstanceError("instance", f"malformed JSON ({exc})") from None
        return cls.from_dict(d)


def as_assortment(S: Iterable[int], n: int, *, nonempty: bool = False) -> Assortment:
    """Validate ``S`` against ``n`` products and return it as a sorted tuple."""
    try:
        items = [int(i) for i in S]
    except (TypeError, ValueError):
        raise InstanceError("assortment", "expected integer product indices") from None
    out = tuple(sorted(set(items)))
    if len(out) != len(items):
        raise InstanceError("assortment", "duplicate product index")
    if out and (out[0] < 1 or out[-1] > n):
        raise InstanceError("assortment", f"indices must lie in 1..{n}")
    if nonempty and not out:
        raise InstanceError("assortment", "must be nonempty")
    return out


def index_array(S: Assortment) -> np.ndarray:
    """0-based positions of the members of ``S``."""
    return np.asarray(S, dtype=np.int64) - 1


@dataclass(frozen=True)
class ChoiceDistribution:
    p_product: dict = field(default_factory=dict)
    p_opaque: float = 0.0
    p_none: float = 1.0

    def total(self) -> float:
        return math.fsum([*self.p_product.values(), self.p_opaque, self.p_none])

    def to_dict(self) -> dict:
        return {
            "p_product": {str(k): float(p) for k, p in self.p_product.items()},
            "p_opaque": float(self.p_opaque),
            "p_none": float(self.p_none),
        }


def _weights(v: np.ndarray, r: np.ndarray):
    """Shifted attraction weights ``e^{v-r-c}`` and the outside weight ``e^{-c}``."""
    c = max(0.0, float(np.max(v - r))) if v.size else 0.0
    return np.exp(v - r - c), math.exp(-c)


def trad_choice_prob(inst: MarketInstance, S: Iterable[int]) -> ChoiceDistribution:
    S = as_assortment(S, inst.n)
    if not S:
        return ChoiceDistribution({}, 0.0, 1.0)
    idx = index_array(S)
    w, one = _weights(inst.v[idx], inst.r[idx])
    denom = one + math.fsum(w)
    return ChoiceDistribution(
        {i: float(x) for i, x in zip(S, w / denom)}, 0.0, one / denom
    )


def trad_revenue_arrays(v: np.ndarray, r: np.ndarray) -> float:
    if v.size == 0:
        return 0.0
    w, one = _weights(v, r)
    return math.fsum(r * w) / (one + math.fsum(w))


def trad_revenue(inst: MarketInstance, S: Iterable[int]) -> float:
    S = as_assortment(S, inst.n)
    idx = index_array(S)
    return trad_revenue_arrays(inst.v[idx], inst.r[idx])


def substituted_prices(
    inst: MarketInstance, S: Iterable[int], I: Iterable[int], rho: float
) -> np.ndarray:
    """Prices over ``S`` (in sorted order) with the members of ``I`` set to ``rho``."""
    S = as_assortment(S, inst.n)
    I = as_assortment(I, inst.n)
    if not set(I) <= set(S):
        raise InstanceError("I", "must be a subset of the assortment")
    if rho < 0:
        raise InstanceError("rho", "must be nonnegative")
    members = set(I)
    return np.array([rho if i in members else inst.r[i - 1] for i in S])


def uniform_price_for_weight(log_a: float, tol: float = 1e-13) -> float:
    """Root of ``x = 1 + A e^{-x}`` given ``log A``.

    Newton from ``max(1 + log(1 + A), 1.5)``; falls back to bisection on
    ``[1, 1 + A]`` if Newton leaves the bracket or stalls.
    """

    def f(x):
        return x - 1.0 - math.exp(log_a - x)

    hi = 1.0 + math.exp(min(log_a, 700.0))
    x = max(1.0 + float(np.logaddexp(0.0, log_a)), 1.5)
    for _ in range(100):
        g = math.exp(log_a - x)
        step = (x - 1.0 - g) / (1.0 + g)
        x_new = x - step
        if not (1.0 <= x_new <= hi):
            break
        x = x_new
        if abs(step) <= tol * max(1.0, x):
            return x
    lo, hi = 1.0, max(hi, 2.0)
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def optimal_uniform_price(inst: MarketInstance, S: Iterable[int]) -> float:
    """Revenue-maximizing common price for the traditional model on ``S``."""
    S = as_assortment(S, inst.n, nonempty=True)
    return uniform_price_for_weight(float(logsumexp(inst.v[index_array(S)])))
