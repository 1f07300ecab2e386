"""Instance generators, experiment runners, and report emission.

Experiments write a delimited row per solve plus JSON aggregates, and the
figure helpers in :mod:`vmk2.plots` render the same data to SVG next to the
CSV. Trials fan out over a process pool sized by the ``VMK_THREADS``
environment variable; aggregation is sorted by task index, so results do not
depend on completion order.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .clp import (
    FractionalSolution,
    IterationBudget,
    sample_cumulative_profits,
    sample_union_profits,
    solve_clp,
)
from .model import (
    Item,
    SolveReport,
    ValidationError,
    Vmk2Instance,
    Vmk2Solution,
    check_solution,
    solution_to_obj,
)
from .pricing import max_configuration_profit
from .rng import make_rng
from .solvers import (
    HybridParams,
    solve_exact,
    solve_hybrid,
    solve_reduction,
    solve_sampling_baseline,
    solve_via_mck,
)

FAMILIES = ("uniform", "correlated", "zipfProfit", "clustered")

# Largest instance the exact oracle is asked to certify inside benchmarks.
EXACT_ORACLE_MAX_N = 12

CSV_COLUMNS = [
    "algo", "seed", "trial", "n", "m", "profit", "x_star", "exact_opt",
    "ratio_opt", "ratio_lp", "wall_ms", "bins_used", "converged",
]


class OracleIncomplete(Exception):
    """Exact ratios were requested but the oracle could not certify them."""


@dataclass(frozen=True)
class GeneratorSpec:
    family: str
    n: int
    m: int
    seed: int
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.n < 0 or self.m < 1:
            raise ValidationError(f"need n >= 0 and m >= 1, got n={self.n}, m={self.m}")

    def param(self, key: str, default: float) -> float:
        return dict(self.params).get(key, default)


def generate(spec: GeneratorSpec) -> Vmk2Instance:
    """Deterministic instance for the spec's family, size, and seed."""
    rng = make_rng(spec.seed)
    n = spec.n
    if spec.family == "clustered":
        lo = spec.param("wLow", 0.3)
        hi = spec.param("wHigh", 0.9)
        w1 = rng.uniform(lo, hi, n)
        w2 = rng.uniform(lo, hi, n)
    else:
        w1 = rng.uniform(0.05, 0.95, n)
        w2 = rng.uniform(0.05, 0.95, n)
    if spec.family == "correlated":
        profits = w1 + w2 + rng.uniform(0.0, 0.2, n)
    elif spec.family == "zipfProfit":
        s = spec.param("s", 1.0)
        profits = (np.arange(1, n + 1, dtype=float)) ** (-s)
    else:
        profits = rng.uniform(0.1, 1.0, n)
    items = tuple(
        Item(id=f"i{k:04d}", w1=float(w1[k]), w2=float(w2[k]), profit=float(profits[k]))
        for k in range(n)
    )
    return Vmk2Instance(items=items, m=spec.m)


@dataclass
class ExperimentResult:
    rows: list[SolveReport]
    solutions: list[Vmk2Solution]
    aggregates: dict
    marginal_curve: Optional[list[dict]] = None


def _worker_count() -> int:
    try:
        return max(1, int(os.environ.get("VMK_THREADS", "1")))
    except ValueError:
        return 1


def _run_one(task) -> tuple[Vmk2Solution, SolveReport]:
    inst, fs, exact_opt, algo, trial, eps, mk_mode, spec_seed = task
    if algo == "hybrid":
        params = HybridParams(eps=eps, seed=spec_seed, mk_mode=mk_mode)
        sol, report = solve_hybrid(inst, params, lp=fs)
    elif algo == "baseline":
        sol, report = solve_sampling_baseline(inst, eps, spec_seed, lp=fs)
    elif algo == "reduction":
        sol, report = solve_reduction(inst, eps, mk_mode=mk_mode)
    elif algo == "exact":
        sol, profit, complete = solve_exact(inst)
        report = SolveReport(
            algorithm="exact", seed=spec_seed, profit=profit, converged=complete,
            bins_used=sol.bins_used(), n=inst.n, m=inst.m,
        )
    elif algo == "mck":
        sol, report = solve_via_mck(inst)
        report.seed = spec_seed
    else:
        raise ValidationError(f"unknown algorithm {algo!r}")
    report.trial = trial
    report.exact_opt = exact_opt
    if fs is not None and report.lp_bound is None:
        report.lp_bound = fs.value
    return sol, report


def run_ratio_bench(
    suite: Sequence[GeneratorSpec],
    algos: Iterable[str],
    trials: int,
    *,
    eps: float = 0.1,
    mk_mode: str = "auto",
    want_exact: bool = True,
    out_dir: Optional[str | Path] = None,
) -> ExperimentResult:
    """Solve every (instance, algorithm, trial) cell and aggregate ratios.

    Randomized algorithms share the per-(seed, trial) draw stream, so hybrid
    and baseline are compared with common random numbers. When the exact
    oracle cannot certify an instance, its rows fall back to LP ratios and
    the aggregate is flagged.
    """
    algos = list(algos)
    tasks = []
    oracle_flags = []
    for spec in suite:
        inst = generate(spec)
        fs = solve_clp(inst, min(eps, 0.01))
        exact_opt: Optional[float] = None
        incomplete = False
        if want_exact:
            if inst.n <= EXACT_ORACLE_MAX_N:
                _, exact_opt, complete = solve_exact(inst)
                incomplete = not complete
                if incomplete:
                    exact_opt = None
            else:
                incomplete = True
        oracle_flags.append(incomplete)
        for algo in algos:
            for trial in range(trials):
                tasks.append((inst, fs, exact_opt, algo, trial, eps, mk_mode, spec.seed + trial))

    workers = _worker_count()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, tasks))
    else:
        outcomes = [_run_one(t) for t in tasks]

    rows = [report for _, report in outcomes]
    sols = [sol for sol, _ in outcomes]
    aggregates = _aggregate(rows, oracle_incomplete=any(oracle_flags))
    result = ExperimentResult(rows=rows, solutions=sols, aggregates=aggregates)
    if out_dir is not None:
        emit_experiment(result, out_dir)
    return result


def _ratio(report: SolveReport) -> Optional[float]:
    if report.exact_opt:
        return report.profit / report.exact_opt
    if report.lp_bound:
        return report.profit / report.lp_bound
    return None


def _aggregate(rows: Sequence[SolveReport], oracle_incomplete: bool) -> dict:
    per_algo: dict[str, dict] = {}
    for algo in sorted({r.algorithm for r in rows}):
        opt_ratios = [r.profit / r.exact_opt for r in rows if r.algorithm == algo and r.exact_opt]
        lp_ratios = [r.profit / r.lp_bound for r in rows if r.algorithm == algo and r.lp_bound]
        entry = {}
        for name, vals in (("ratio_opt", opt_ratios), ("ratio_lp", lp_ratios)):
            if vals:
                arr = np.asarray(vals)
                entry[name] = {
                    "mean": float(arr.mean()),
                    "stddev": float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
                    "count": int(arr.size),
                }
        per_algo[algo] = entry
    out = {"per_algo": per_algo, "oracle_incomplete": oracle_incomplete}
    hybrid = {(r.seed, r.trial): r for r in rows if r.algorithm == "hybrid"}
    baseline = {(r.seed, r.trial): r for r in rows if r.algorithm == "baseline"}
    paired = []
    for key, h in hybrid.items():
        b = baseline.get(key)
        if b is None:
            continue
        rh, rb = _ratio(h), _ratio(b)
        if rh is not None and rb is not None:
            paired.append(rh - rb)
    if paired:
        arr = np.asarray(paired)
        stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else 0.0
        out["hybrid_minus_baseline"] = {
            "mean": float(arr.mean()),
            "stderr": stderr,
            "count": int(arr.size),
        }
    return out


def run_marginal_curve(
    inst: Vmk2Instance,
    trials: int,
    seed: int,
    *,
    lp: Optional[FractionalSolution] = None,
    eps: float = 1e-6,
) -> list[dict]:
    """Mean profit increment of the j-th drawn configuration, j = 1..m,
    with the analytic overlay (x*/m) * exp(-j/m)."""
    fs = lp if lp is not None else solve_clp(inst, eps)
    if not fs.converged:
        raise ValidationError("marginal curve requires a converged LP solution")
    rng = make_rng(seed)
    cumulative = sample_cumulative_profits(inst, fs, inst.m, trials, rng)
    increments = np.diff(np.concatenate([np.zeros((trials, 1)), cumulative], axis=1), axis=1)
    means = increments.mean(axis=0)
    stderr = increments.std(axis=0, ddof=1) / math.sqrt(trials) if trials > 1 else np.zeros(inst.m)
    return [
        {
            "j": j + 1,
            "q_hat": float(means[j]),
            "stderr": float(stderr[j]),
            "overlay": float(fs.value / inst.m * math.exp(-(j + 1) / inst.m)),
        }
        for j in range(inst.m)
    ]


@dataclass(frozen=True)
class TailReport:
    t: float
    ell: int
    trials: int
    scale: float  # largest single-configuration profit
    mean_profit: float
    mean_scaled: float  # mean_profit / scale
    threshold: float  # mean_profit - t * scale
    bound: float
    empirical: float


def run_concentration(
    inst: Vmk2Instance,
    ell: int,
    trials: int,
    t: float,
    *,
    seed: int = 0,
    lp: Optional[FractionalSolution] = None,
    scale: Optional[float] = None,
) -> TailReport:
    """Empirical lower-tail frequency of the sampled-union profit against
    the sub-Poissonian bound exp(-t^2 / (2 mean)) for self-bounding totals.

    The profit of a union of draws, divided by the largest profit any single
    configuration can carry, decreases by at most 1 per dropped draw and by
    at most itself in total, which is what grants the bound. ``t`` is
    measured in units of that scale.
    """
    if trials < 1:
        raise ValidationError(f"trials must be positive, got {trials}")
    if not 0 <= ell <= inst.m:
        raise ValidationError(f"ell must be in [0, m={inst.m}], got {ell}")
    fs = lp if lp is not None else solve_clp(inst, 1e-6)
    eta = scale if scale is not None else max_configuration_profit(inst)
    rng = make_rng(seed)
    profits = sample_union_profits(inst, fs, ell, trials, rng)
    mean = float(profits.mean())
    threshold = mean - t * eta
    empirical = float(np.mean(profits <= threshold)) if t > 0 else 1.0
    if t <= 0 or eta <= 0 or mean <= 0:
        bound = 1.0
    else:
        bound = min(1.0, math.exp(-(t * t) / (2.0 * mean / eta)))
    return TailReport(
        t=t, ell=ell, trials=trials, scale=eta, mean_profit=mean,
        mean_scaled=mean / eta if eta > 0 else 0.0,
        threshold=threshold, bound=bound, empirical=empirical,
    )


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------


def report_to_row(report: SolveReport) -> dict:
    ratio_opt = report.profit / report.exact_opt if report.exact_opt else None
    ratio_lp = report.profit / report.lp_bound if report.lp_bound else None
    return {
        "algo": report.algorithm,
        "seed": report.seed,
        "trial": report.trial,
        "n": report.n,
        "m": report.m,
        "profit": repr(report.profit),
        "x_star": repr(report.lp_bound) if report.lp_bound is not None else "",
        "exact_opt": repr(report.exact_opt) if report.exact_opt is not None else "",
        "ratio_opt": repr(ratio_opt) if ratio_opt is not None else "",
        "ratio_lp": repr(ratio_lp) if ratio_lp is not None else "",
        "wall_ms": f"{report.wall_ms:.3f}",
        "bins_used": report.bins_used,
        "converged": "" if report.converged is None else str(report.converged).lower(),
    }


def write_rows_csv(rows: Sequence[SolveReport], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for report in rows:
            writer.writerow(report_to_row(report))


def emit_experiment(result: ExperimentResult, out_dir: str | Path) -> None:
    """CSV rows, JSON aggregates, per-row solutions, and an SVG figure."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_rows_csv(result.rows, out / "rows.csv")
    (out / "aggregates.json").write_text(json.dumps(result.aggregates, indent=1) + "\n")
    solutions = [solution_to_obj(sol) for sol in result.solutions]
    (out / "solutions.json").write_text(json.dumps(solutions) + "\n")
    if result.marginal_curve is not None:
        (out / "marginal.json").write_text(json.dumps(result.marginal_curve, indent=1) + "\n")
    from . import plots

    plots.plot_ratio_bench(result.aggregates, out / "ratios.svg")


def verify_rows(
    rows: Sequence[SolveReport],
    solutions: Sequence[Vmk2Solution],
    instances: Sequence[Vmk2Instance],
) -> list[str]:
    """Re-validate emitted rows against their stored solutions.

    Returns a list of human-readable failures; empty means clean. Used by the
    CLI's check mode, which exits nonzero on any failure."""
    failures = []
    for k, (report, sol, inst) in enumerate(zip(rows, solutions, instances)):
        checked = check_solution(inst, sol)
        if checked.violations:
            failures.append(f"row {k}: solution violates feasibility: {checked.violations[0]}")
        if abs(checked.profit - report.profit) > 1e-9:
            failures.append(f"row {k}: stored profit {report.profit} != recomputed {checked.profit}")
        if report.lp_bound is not None and report.converged:
            if report.profit > report.lp_bound * (1.0 + 1e-7) + 1e-9:
                failures.append(f"row {k}: profit {report.profit} exceeds LP bound {report.lp_bound}")
        if report.exact_opt is not None and report.profit > report.exact_opt + 1e-9:
            failures.append(f"row {k}: profit {report.profit} exceeds exact optimum {report.exact_opt}")
        if report.algorithm == "reduction" and report.exact_opt:
            if report.profit < 0.5 * report.exact_opt - 1e-9:
                failures.append(f"row {k}: reduction ratio below one half")
    return failures
