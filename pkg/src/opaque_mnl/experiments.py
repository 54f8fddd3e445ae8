"""Random instance bed and the optimal-vs-NRV benchmark summary."""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .assortment import BRUTE_FORCE_CAP, DEFAULT_TOL, approximation_report
from .model import InstanceError, MarketInstance

SUBOPTIMAL_RTOL = 1e-7
CSV_HEADER = ["n", "opaque_count", "suboptimal_count", "max_gap_pct", "avg_gap_pct", "avg_opt_size"]


@dataclass(frozen=True)
class BedConfig:
    instances: int = 2000
    max_n: int = 9
    price_mu: float = 0.5
    price_sigma: float = 1.5
    valuation_mu: float = 0.0
    valuation_sigma: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.instances < 1:
            raise InstanceError("instances", "must be at least 1")
        if self.max_n < 2:
            raise InstanceError("max_n", "must be at least 2")
        if self.price_sigma <= 0 or self.valuation_sigma <= 0:
            raise InstanceError("sigma", "lognormal sigmas must be positive")
        if not 0 <= self.seed < 2**64:
            raise InstanceError("seed", "must be an unsigned 64-bit integer")


def generate_bed(cfg: BedConfig) -> list:
    """``cfg.instances`` instances of ``cfg.max_n`` products each.

    Prices and valuations are lognormal with the given underlying-normal
    mean and standard deviation.  Smaller instances are the prefixes
    (see ``MarketInstance.prefix``).  Instance ``k`` draws from its own
    stream keyed by ``(seed, k)``.
    """
    bed = []
    for k in range(cfg.instances):
        rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(k,)))
        r = rng.lognormal(cfg.price_mu, cfg.price_sigma, cfg.max_n)
        v = rng.lognormal(cfg.valuation_mu, cfg.valuation_sigma, cfg.max_n)
        bed.append(MarketInstance(v, r, name=f"bed-{cfg.seed}-{k}"))
    return bed


@dataclass(frozen=True)
class BenchRow:
    n: int
    opaque_count: int
    suboptimal_count: int
    max_gap_pct: float
    avg_gap_pct: float
    avg_opt_size: float


@dataclass
class BenchSummary:
    rows: list
    instances: int
    config: dict | None = None
    records: list = field(default_factory=list)

    def row(self, n: int) -> BenchRow:
        for row in self.rows:
            if row.n == n:
                return row
        raise KeyError(n)

    def to_dict(self) -> dict:
        return {
            "instances": self.instances,
            "config": self.config,
            "rows": [asdict(row) for row in self.rows],
            "records": self.records,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchSummary":
        return cls([BenchRow(**row) for row in d["rows"]], d["instances"], d.get("config"), d.get("records", []))


def _evaluate(args):
    inst, n_values, tol = args
    cache = {}  # scores carry over between prefixes of one instance
    out = []
    for n in n_values:
        opt, nrv, gap = approximation_report(inst.prefix(n), tol=tol, cache=cache)
        out.append(
            {
                "n": n,
                "optimal": opt.to_dict(),
                "nrv": nrv.to_dict(),
                "gap_pct": max(gap, 0.0),
                "suboptimal": nrv.revenue < opt.revenue * (1.0 - SUBOPTIMAL_RTOL),
            }
        )
    return out


def run_bench(
    bed: Sequence[MarketInstance],
    n_values: Sequence[int],
    jobs: int = 1,
    tol: float = DEFAULT_TOL,
    config: BedConfig | None = None,
) -> BenchSummary:
    n_values = sorted(set(int(n) for n in n_values))
    for n in n_values:
        if n < 1 or n > BRUTE_FORCE_CAP:
            raise InstanceError("n", f"must lie in 1..{BRUTE_FORCE_CAP}")
        if any(inst.n < n for inst in bed):
            raise InstanceError("n", f"bed instances have fewer than {n} products")
    tasks = [(inst, n_values, tol) for inst in bed]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_evaluate, tasks, chunksize=max(1, len(tasks) // (8 * jobs))))
    else:
        results = [_evaluate(t) for t in tasks]

    rows = []
    records = []
    for pos, n in enumerate(n_values):
        recs = [res[pos] for res in results]
        gaps = [rec["gap_pct"] for rec in recs]
        count = max(len(recs), 1)
        rows.append(
            BenchRow(
                n=n,
                opaque_count=sum(rec["optimal"]["opaque_offered"] for rec in recs),
                suboptimal_count=sum(rec["suboptimal"] for rec in recs),
                max_gap_pct=max(gaps, default=0.0),
                avg_gap_pct=sum(gaps) / count,
                avg_opt_size=sum(len(rec["optimal"]["assortment"]) for rec in recs) / count,
            )
        )
    for k, res in enumerate(results):
        records.append({"instance": k, "v": list(map(float, bed[k].v)), "r": list(map(float, bed[k].r)), "results": res})
    cfg = asdict(config) if config is not None else None
    return BenchSummary(rows, len(bed), cfg, records)


def summary_csv(summary: BenchSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for row in summary.rows:
        w.writerow([row.n, row.opaque_count, row.suboptimal_count,
                    repr(row.max_gap_pct), repr(row.avg_gap_pct), repr(row.avg_opt_size)])
    return buf.getvalue()


def summary_json(summary: BenchSummary) -> str:
    return json.dumps(summary.to_dict(), indent=1)


def export(summary: BenchSummary, path, fmt: str = "csv") -> Path:
    if fmt not in ("csv", "json"):
        raise InstanceError("format", f"unknown format {fmt!r}")
    path = Path(path)
    text = summary_csv(summary) if fmt == "csv" else summary_json(summary)
    path.write_text(text)
    return path


def load_summary(path) -> BenchSummary:
    return BenchSummary.from_dict(json.loads(Path(path).read_text()))


def format_table(summary: BenchSummary) -> str:
    """Human-readable table with values rounded to 4 decimals."""
    lines = ["  n  opaque  subopt  max gap %  avg gap %  avg |S*|"]
    for row in summary.rows:
        lines.append(
            f"{row.n:3d} {row.opaque_count:7d} {row.suboptimal_count:7d} "
            f"{row.max_gap_pct:10.4f} {row.avg_gap_pct:10.4f} {row.avg_opt_size:9.4f}"
        )
    return "\n".join(lines)
