"""Experiment runner: replications, parameter error, result files and rate checks.

Replication ``r`` of every algorithm is seeded with ``base_seed ^ r``.  Runs
are independent, so they may execute in any order or in parallel; results are
always sorted by ``(algorithm, seed)`` before they are summarised or written.
"""

import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from ._validation import check_dim, check_vector
from .exceptions import DomainError, RDSAError, UnsupportedDiagnosticError
from .objectives import OBJECTIVES, Quadratic, make_objective
from .optimize import (
    ALGORITHMS,
    FIRST_ORDER,
    Schedules,
    default_schedules,
    measurements_per_iteration,
    run_algorithm,
    run_first_order,
    run_second_order,
)

__all__ = [
    "COLUMNS",
    "ExperimentConfig",
    "RunResult",
    "Summary",
    "RateDiagnostics",
    "parameter_error",
    "run_single",
    "run_experiment",
    "summarize",
    "emit_results",
    "format_results",
    "parse_results",
    "rate_diagnostics",
]

COLUMNS = ("algorithm", "seed", "dim", "sigma", "budget", "tau", "measurements", "param_error")

SUMMARY_MARK = "summary"


def parameter_error(x_tau, x0, x_star):
    """Squared distance to the optimum, normalised by that of the start point."""
    x_tau, x0, x_star = (check_vector(v) for v in (x_tau, x0, x_star))
    denom = float(np.sum((x0 - x_star) ** 2))
    if denom == 0.0:
        raise ZeroDivisionError("x0 coincides with x_star; parameter error is undefined")
    return float(np.sum((x_tau - x_star) ** 2)) / denom


@dataclass
class ExperimentConfig:
    objective: str = "quadratic"
    dim: int = 5
    sigma: float = 0.001
    budget: int = 50000
    algorithms: tuple = ("1RDSA-Perm-DP",)
    replications: int = 50
    base_seed: int = 0
    schedules: dict = field(default_factory=dict)
    init_fraction: float = 0.2
    center: str = "fresh"
    n_jobs: int = 1
    out: str = None
    format: str = "csv"

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise DomainError(f"unknown objective {self.objective!r}; choose from {sorted(OBJECTIVES)}")
        if isinstance(self.algorithms, str):
            self.algorithms = tuple(a.strip() for a in self.algorithms.split(",") if a.strip())
        self.algorithms = tuple(self.algorithms)
        unknown = [a for a in self.algorithms if a not in ALGORITHMS]
        if unknown or not self.algorithms:
            raise DomainError(f"unknown algorithms {unknown}; choose from {list(ALGORITHMS)}")
        if int(self.replications) < 1:
            raise DomainError(f"replications must be >= 1, got {self.replications}")
        if int(self.budget) < 0:
            raise DomainError(f"budget must be >= 0, got {self.budget}")
        if int(self.base_seed) < 0:
            raise DomainError(f"base_seed must be non-negative, got {self.base_seed}")
        if not (math.isfinite(float(self.sigma)) and float(self.sigma) >= 0):
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if self.format not in ("csv", "json"):
            raise DomainError(f"format must be csv or json, got {self.format!r}")
        self.dim = check_dim(self.dim, "dim")
        self.budget = int(self.budget)
        self.replications = int(self.replications)
        self.base_seed = int(self.base_seed)
        self.sigma = float(self.sigma)
        self.schedules = dict(self.schedules or {})
        bad = set(self.schedules) - {f.name for f in dataclasses.fields(Schedules)}
        if bad:
            raise DomainError(f"unknown schedule parameters {sorted(bad)}")

    def seeds(self):
        return [self.base_seed ^ r for r in range(self.replications)]


@dataclass
class RunResult:
    """One replication.  Equality compares the emitted columns only."""

    algorithm: str
    seed: int
    dim: int
    sigma: float
    budget: int
    tau: int
    measurements: int
    param_error: float
    flagged: bool = field(default=False, compare=False)
    error: str = field(default=None, compare=False)
    trajectory: list = field(default=None, compare=False, repr=False)

    def row(self):
        return [getattr(self, c) for c in COLUMNS]


@dataclass
class Summary:
    algorithm: str
    n: int
    mean: float
    stderr: float
    dim: int
    sigma: float
    budget: int
    tau: float
    measurements: float


def _schedules_for(cfg, algorithm):
    if not cfg.schedules:
        return None
    base = Schedules.first_order() if algorithm in FIRST_ORDER else default_schedules(algorithm)
    return dataclasses.replace(base, **cfg.schedules)


def run_single(cfg, algorithm, seed, keep_trajectory=False):
    """Run one replication; failures are captured in the result, not raised."""
    obj = make_objective(cfg.objective, cfg.dim)
    x0 = obj.x0
    try:
        kwargs = dict(seed=seed, sigma=cfg.sigma, schedules=_schedules_for(cfg, algorithm))
        if algorithm not in FIRST_ORDER:
            kwargs.update(init_fraction=cfg.init_fraction, center=cfg.center)
        res = run_algorithm(obj, algorithm, cfg.budget, **kwargs)
        err = parameter_error(res.x, x0, obj.x_star)
    except (RDSAError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return RunResult(algorithm, seed, cfg.dim, cfg.sigma, cfg.budget, 0, 0, math.nan,
                         True, f"{type(exc).__name__}: {exc}")
    trajectory = None
    if keep_trajectory:
        trajectory = [(m, parameter_error(x, x0, obj.x_star)) for m, x in res.trajectory]
    # a run that never updated (e.g. lexicographic cycle longer than the budget)
    # keeps parameter error 1 and is flagged rather than dropped
    return RunResult(algorithm, seed, cfg.dim, cfg.sigma, cfg.budget, int(res.tau),
                     int(res.measurements), err, res.tau == 0, None, trajectory)


def summarize(results):
    """Mean and standard error of parameter error per algorithm (failed runs excluded)."""
    groups = {}
    for r in results:
        groups.setdefault(r.algorithm, []).append(r)
    out = []
    for algo in sorted(groups):
        runs = groups[algo]
        ok = [r for r in runs if math.isfinite(r.param_error)]
        errs = np.array([r.param_error for r in ok], dtype=np.float64)
        n = errs.size
        mean = float(errs.mean()) if n else math.nan
        stderr = float(errs.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0 if n else math.nan
        first = runs[0]
        out.append(Summary(
            algo, n, mean, stderr, first.dim, first.sigma, first.budget,
            float(np.mean([r.tau for r in ok])) if n else math.nan,
            float(np.mean([r.measurements for r in ok])) if n else math.nan,
        ))
    return out


def run_experiment(cfg, keep_trajectory=False):
    """Run every algorithm x replication; returns ``(results, summaries)``."""
    tasks = [(a, s) for a in cfg.algorithms for s in cfg.seeds()]
    if cfg.n_jobs == 1:
        results = [run_single(cfg, a, s, keep_trajectory) for a, s in tasks]
    else:
        results = Parallel(n_jobs=cfg.n_jobs)(
            delayed(run_single)(cfg, a, s, keep_trajectory) for a, s in tasks
        )
    results.sort(key=lambda r: (r.algorithm, r.seed))
    return results, summarize(results)


# --------------------------------------------------------------------------
# emission
#
# Floats are written with repr(), the shortest string that round-trips, so a
# given set of results always produces the same bytes.  Each algorithm gets
# one summary row: its seed cell reads "summary;stderr=<se>", tau and
# measurements hold run averages and param_error holds the mean.


def _summary_row(s):
    return [s.algorithm, f"{SUMMARY_MARK};stderr={s.stderr!r}", s.dim, s.sigma, s.budget,
            s.tau, s.measurements, s.mean]


def _cell(v):
    return repr(v) if isinstance(v, float) else str(v)


def format_results(results, fmt="csv", summaries=None):
    if not results:
        raise DomainError("no results to emit")
    results = sorted(results, key=lambda r: (r.algorithm, r.seed))
    summaries = summarize(results) if summaries is None else summaries
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in results:
            writer.writerow([_cell(v) for v in r.row()])
        for s in summaries:
            writer.writerow([_cell(v) for v in _summary_row(s)])
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "columns": list(COLUMNS),
            "runs": [dict(zip(COLUMNS, r.row())) for r in results],
            "summary": [
                dict(zip(COLUMNS, [s.algorithm, SUMMARY_MARK, s.dim, s.sigma, s.budget,
                                   s.tau, s.measurements, s.mean]), stderr=s.stderr, n=s.n)
                for s in summaries
            ],
        }
        # NaN is emitted as a bare token (json module default) so failed runs survive a round trip
        return json.dumps(doc, indent=2, sort_keys=False) + "\n"
    raise DomainError(f"format must be csv or json, got {fmt!r}")


def emit_results(results, fmt="csv", path=None, summaries=None):
    """Write results to ``path`` (or return the text when ``path`` is None)."""
    text = format_results(results, fmt, summaries)
    if path is None:
        return text
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text


def _run_from_values(vals):
    algorithm, seed, dim, sigma, budget, tau, meas, err = vals
    err = float(err)
    return RunResult(str(algorithm), int(seed), int(dim), float(sigma), int(budget), int(tau),
                     int(meas), err, int(tau) == 0, None if math.isfinite(err) else "failed")


def parse_results(text, fmt="csv"):
    """Inverse of :func:`format_results`: returns ``(runs, summaries)``."""
    runs, summaries = [], []
    if fmt == "csv":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or tuple(rows[0]) != COLUMNS:
            raise DomainError("unexpected CSV header")
        for row in rows[1:]:
            if row[1].startswith(SUMMARY_MARK):
                stderr = float(row[1].split("stderr=", 1)[1])
                summaries.append(Summary(row[0], None, float(row[7]), stderr, int(row[2]),
                                         float(row[3]), int(row[4]), float(row[5]), float(row[6])))
            else:
                runs.append(_run_from_values(row))
        return runs, summaries
    if fmt == "json":
        doc = json.loads(text)
        runs = [_run_from_values([d[c] for c in COLUMNS]) for d in doc["runs"]]
        summaries = [
            Summary(d["algorithm"], d["n"], d["param_error"], d["stderr"], d["dim"], d["sigma"],
                    d["budget"], d["tau"], d["measurements"])
            for d in doc["summary"]
        ]
        return runs, summaries
    raise DomainError(f"format must be csv or json, got {fmt!r}")


# --------------------------------------------------------------------------
# rate diagnostics


@dataclass
class RateDiagnostics:
    kind: str
    mu: float
    c: float
    delta0: float
    delta_exp: float
    b0: float
    r: float
    n: np.ndarray
    gamma: np.ndarray
    series: np.ndarray
    slope: float
    reference: np.ndarray = None
    reference_slope: float = None
    max_reference_gap: float = None
    note: str = ""

    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.tolist() if isinstance(v, np.ndarray) else v
        return out


def _loglog_slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _thm3(objective, reps, base_seed, sigma, c, delta0, n_max, n_min, points):
    sched = Schedules(a0=c, a_offset=0.0, a_exp=1.0, delta0=delta0, delta_exp=0.0)
    N = objective.dim
    per_iter = measurements_per_iteration("1RDSA-Perm-DP", N)
    grid = np.unique(np.geomspace(n_min, n_max, points).astype(int))
    x_star = objective.x_star
    errs = np.empty((reps, grid.size))
    for r in range(reps):
        res = run_first_order(objective, "1RDSA-Perm-DP", n_max * per_iter, seed=base_seed ^ r,
                              sigma=sigma, schedules=sched, box=None)
        X = np.array([x for _, x in res.trajectory])
        errs[r] = np.linalg.norm(X[grid - 1] - x_star, axis=1)
    mean = errs.mean(axis=0)
    mu = objective.strong_convexity
    note = "" if mu * c > 0.5 else "mu * c <= 1/2: the O(n^-1/2) rate is not guaranteed"
    return RateDiagnostics(
        "thm3", mu, c, delta0, 0.0, None, None, grid, c * np.cumsum(1.0 / np.arange(1, n_max + 1))[grid - 1],
        mean, _loglog_slope(grid, mean), note=note,
    )


def _thm5(objective, b0, r, n_max, n_min, points):
    N = objective.dim
    sched = Schedules.second_order(b0=b0, b_exp=r)
    per_iter = measurements_per_iteration("2RDSA-Lex-DP", N)
    res = run_second_order(objective, "2RDSA-Lex-DP", n_max * per_iter, seed=0, sigma=0.0,
                           schedules=sched, init_fraction=0.0, record_hessian=True)
    H = objective.hessian()
    lam = [hb - H for hb in res.hessian_history]
    trace = np.array([float(np.trace(L.T @ L)) for L in lam])
    k = np.arange(1, len(trace))
    factors = 1.0 - b0 / k**r
    closed = np.concatenate([[1.0], np.cumprod(factors**2)]) * trace[0]
    gap = float(np.max(np.abs(trace - closed)))

    grid = np.unique(np.geomspace(n_min, n_max, points).astype(int))
    grid = grid[grid < len(trace)]
    t = grid ** (1.0 - r)
    sel_trace, sel_closed = trace[grid], closed[grid]
    note = ""
    if np.all(sel_closed > 0) and np.all(sel_trace > 0):
        slope = float(np.polyfit(t, np.log(sel_trace), 1)[0])
        ref_slope = float(np.polyfit(t, np.log(sel_closed), 1)[0])
    else:
        # with b_1 = 1 the first average discards Lambda_0 and the product is 0 from n = 1 on
        slope = ref_slope = math.nan
        note = "closed product vanishes in the fit window (b_1 = 1); log-trace is not affine"
    gamma = np.cumsum(sched.a0 / np.arange(1, n_max + 1) ** sched.a_exp)
    return RateDiagnostics(
        "thm5", objective.strong_convexity, sched.a0, sched.delta0, sched.delta_exp, b0, r,
        grid, gamma[grid - 1], sel_trace, slope, sel_closed, ref_slope, gap, note,
    )


def rate_diagnostics(kind, objective="quadratic", dim=None, reps=50, base_seed=0, sigma=None,
                     c=5.0, delta0=1.9, b0=1.0, r=0.6, n_min=100, n_max=10000, points=15):
    """Empirical convergence-rate checks.

    ``thm3`` fits the log-log slope of the mean distance to the optimum of
    1RDSA-Perm-DP with a_n = c / n and constant delta (expected -1/2).
    ``thm5`` runs noise-free 2RDSA-Lex-DP, records trace(Lambda_n^T Lambda_n)
    with Lambda_n = H_bar_n - Hessian and fits log-trace against n**(1 - r);
    the reference is the closed product prod (1 - b_k)^2 trace(Lambda_0^T
    Lambda_0), whose slope is about -2 b0 / (1 - r).
    """
    if kind not in ("thm3", "thm5"):
        raise DomainError(f"kind must be thm3 or thm5, got {kind!r}")
    name = objective if isinstance(objective, str) else getattr(objective, "name", None)
    if name != "quadratic":
        raise UnsupportedDiagnosticError(f"{kind} diagnostics need the quadratic objective, got {name!r}")
    sigma = (0.1 if kind == "thm3" else 0.0) if sigma is None else sigma
    if kind == "thm5" and sigma:
        raise UnsupportedDiagnosticError("thm5 diagnostics are noise-free; pass sigma=0")
    if isinstance(objective, Quadratic):
        obj = objective
    else:
        obj = Quadratic(dim if dim is not None else (5 if kind == "thm3" else 3))
    if not 1 <= n_min < n_max:
        raise DomainError(f"need 1 <= n_min < n_max, got {n_min}, {n_max}")
    if kind == "thm3":
        return _thm3(obj, int(reps), int(base_seed), float(sigma), float(c), float(delta0),
                     int(n_max), int(n_min), int(points))
    return _thm5(obj, float(b0), float(r), int(n_max), int(n_min), int(points))
