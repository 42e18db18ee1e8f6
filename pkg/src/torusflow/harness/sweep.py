"""k-sweeps: midpoint quadrature over [-A, A], a process pool, and
reports whose aggregates can be recomputed from the stored rows."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from ..potentials import philox
from ..transport import loglog_fit


def midpoint_nodes(A, M):
    """k_i = -A + (i + 1/2) 2A/M and the common weight 2A/M."""
    if M < 1 or A <= 0:
        raise ValueError("need M >= 1 and A > 0")
    h = 2.0 * A / M
    return -A + (np.arange(M) + 0.5) * h, h


def montecarlo_nodes(A, M, seed):
    k = np.sort(philox(seed, stream=11).uniform(-A, A, M))
    return k, 2.0 * A / M


@dataclass(frozen=True)
class SweepConfig:
    A: float = 2.0
    M: int = 64
    seed: int = 0
    quadrature: str = "midpoint"
    threads: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.M < 8:
            raise ValueError("M must be at least 8")
        if self.A <= 0:
            raise ValueError("A must be positive")
        if self.quadrature not in ("midpoint", "montecarlo"):
            raise ValueError(f"unknown quadrature {self.quadrature!r}")

    def nodes(self):
        if self.quadrature == "midpoint":
            return midpoint_nodes(self.A, self.M)
        return montecarlo_nodes(self.A, self.M, self.seed)


@dataclass
class SweepReport:
    rows: list
    aggregates: dict
    fits: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def observables(self):
        names = []
        for r in self.rows:
            for name in r["values"]:
                if name not in names:
                    names.append(name)
        return names

    def column(self, name, completed_only=True):
        return np.array([r["values"].get(name, np.nan) for r in self.rows
                         if r["ok"] or not completed_only], dtype=float)

    def integral(self, name):
        return self.aggregates[name]["integral"]

    def check(self, rtol=1e-12):
        """Recompute aggregates from the rows and compare."""
        fresh = aggregate(self.rows)
        for name, agg in self.aggregates.items():
            a, b = agg["integral"], fresh[name]["integral"]
            if not (a == b or abs(a - b) <= rtol * max(abs(a), abs(b))):
                return False
        return True

    def table(self):
        names = self.observables
        header = ["k", "weight", "ok"] + names
        body = [[r["k"], r["weight"], int(r["ok"])] + [r["values"].get(n, float("nan")) for n in names]
                for r in self.rows]
        return header, body

    def to_dict(self):
        return {"rows": self.rows, "aggregates": self.aggregates, "fits": self.fits,
                "provenance": self.provenance}


def aggregate(rows):
    names = []
    for r in rows:
        for name in r["values"]:
            if name not in names:
                names.append(name)
    out = {}
    n_all = len(rows)
    for name in names:
        done = [r for r in rows if r["ok"] and np.isfinite(r["values"].get(name, np.nan))]
        vals = np.array([r["values"][name] for r in done], dtype=float)
        weights = np.array([r["weight"] for r in done], dtype=float)
        out[name] = {
            "integral": float(np.sum(vals * weights)) if vals.size else float("nan"),
            "mean": float(np.mean(vals)) if vals.size else float("nan"),
            "quantiles": ({str(q): float(np.quantile(vals, q)) for q in (0.1, 0.5, 0.9)}
                          if vals.size else {}),
            "completeness": len(done) / n_all if n_all else 0.0,
        }
    return out


def _run_one(task, k):
    try:
        return dict(task(float(k))), True, ""
    except Exception as exc:  # a failed trajectory flags its row
        return {}, False, f"{type(exc).__name__}: {exc}"


def map_ordered(fn, items, threads=1):
    """fn over items, in input order; a process pool when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * threads))))


class _Bound:
    def __init__(self, task):
        self.task = task

    def __call__(self, k):
        return _run_one(self.task, k)


def k_sweep(cfg, task, fits=None):
    """Evaluate ``task(k) -> {name: value}`` at every node and aggregate.

    ``task`` must be picklable when ``cfg.threads > 1``.  Rows are kept in
    k order whatever the worker count.
    """
    ks, w = cfg.nodes()
    results = map_ordered(_Bound(task), ks, cfg.threads)
    rows = [{"k": float(k), "weight": float(w), "ok": ok, "values": vals, "error": err}
            for k, (vals, ok, err) in zip(ks, results)]
    report = SweepReport(rows, aggregate(rows), provenance={"config": asdict(cfg)})
    for name, (xs, ys) in (fits or {}).items():
        report.fits[name] = fit_entry(xs, ys)
    return report


def fit_entry(xs, ys):
    xs = np.asarray(xs, float)
    ys = np.asarray(ys, float)
    good = (xs > 0) & (ys > 0) & np.isfinite(ys)
    if good.sum() < 2:
        return {"slope": float("nan"), "halfwidth": float("nan")}
    slope, half = loglog_fit(xs[good], ys[good])
    return {"slope": slope, "halfwidth": half}


def task_seed(seed, index):
    """Independent 64-bit seed for sub-task ``index``."""
    return int(philox(seed, stream=1000 + int(index)).integers(0, 2 ** 63 - 1))


def is_close_band(values, factor):
    """True if max/min of the positive values is at most ``factor``."""
    v = np.asarray(values, float)
    return bool(np.all(v > 0) and v.max() / v.min() <= factor) if v.size else False


__all__ = ["SweepConfig", "SweepReport", "midpoint_nodes", "montecarlo_nodes", "k_sweep",
           "aggregate", "map_ordered", "fit_entry", "task_seed", "is_close_band"]
