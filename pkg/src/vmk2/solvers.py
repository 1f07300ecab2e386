"""Top-level algorithms for the 2-D vector multiple knapsack problem.

* hybrid: sample ceil(m * ln 2) bins from the configuration-LP solution, then
  fill the remaining bins by solving the residual items as a 1-D multiple
  knapsack under the max-coordinate reduction.
* sampling baseline: draw all m bins from the LP solution.
* reduction: solve the max-coordinate 1-D instance outright; with an exact
  MK solve this is a deterministic half-of-optimum guarantee.
* exact oracles: skip-or-assign branch and bound, plus an independent route
  through a 2m-dimensional multiple-choice knapsack.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .clp import FractionalSolution, IterationBudget, sample_T, solve_clp
from .mk import (
    MkInstance,
    MkSolution,
    associate,
    associate_items,
    first_fit_2d,
    mk_profit,
    solve_mk_exact,
    solve_mk_heuristic,
)
from .model import (
    Configuration,
    EMPTY_CONFIG,
    Item,
    SearchBudgetExceeded,
    SolveReport,
    ValidationError,
    Vmk2Instance,
    Vmk2Solution,
    check_solution,
    dedup_solution,
)
from .pricing import max_configuration_profit
from .rng import RNG_ALGO, make_rng

LN2 = math.log(2.0)

# Residual MK instances at most this large (or with at most 2 bins) are
# solved exactly under mk_mode="auto".
AUTO_EXACT_ITEMS = 18
AUTO_EXACT_BINS = 2
_AUTO_NODE_CAP = 300_000

_TOL = 1e-12

InnerSolver = Callable[[Vmk2Instance], tuple[Vmk2Solution, SolveReport]]


def default_sample_count(m: int) -> int:
    """Number of bins filled by sampling: ceil(m * ln 2)."""
    return min(m, math.ceil(m * LN2))


@dataclass
class HybridParams:
    eps: float = 0.1
    seed: int = 0
    ell_override: Optional[int] = None
    clp_budget: IterationBudget = field(default_factory=IterationBudget)
    mk_mode: str = "auto"  # exact | heuristic | auto

    def __post_init__(self):
        if not 0.0 < self.eps < 0.5:
            raise ValidationError(f"eps must be in (0, 0.5), got {self.eps}")
        if self.mk_mode not in ("exact", "heuristic", "auto"):
            raise ValidationError(f"unknown mk_mode {self.mk_mode!r}")
        if self.ell_override is not None and self.ell_override < 0:
            raise ValidationError(f"ell_override must be nonnegative, got {self.ell_override}")


def _solve_residual_mk(mk: MkInstance, mode: str, eps: float) -> MkSolution:
    if mode == "heuristic":
        return solve_mk_heuristic(mk, eps)
    if mode == "exact":
        try:
            return solve_mk_exact(mk)
        except SearchBudgetExceeded as exc:
            return exc.best
    # auto: exact where cheap, otherwise heuristic; on a blown exact budget
    # keep whichever of the partial search and the heuristic is better.
    if mk.n <= AUTO_EXACT_ITEMS or mk.m_bins <= AUTO_EXACT_BINS:
        try:
            return solve_mk_exact(mk, node_cap=_AUTO_NODE_CAP)
        except SearchBudgetExceeded as exc:
            partial: MkSolution = exc.best
            fallback = solve_mk_heuristic(mk, eps)
            return partial if mk_profit(mk, partial) >= mk_profit(mk, fallback) else fallback
    return solve_mk_heuristic(mk, eps)


def _report(
    inst: Vmk2Instance,
    algorithm: str,
    seed: int,
    sol: Vmk2Solution,
    started: float,
    lp: Optional[FractionalSolution] = None,
    exact_opt: Optional[float] = None,
) -> SolveReport:
    profit = check_solution(inst, sol).profit
    return SolveReport(
        algorithm=algorithm,
        seed=seed,
        profit=profit,
        lp_bound=lp.value if lp is not None else None,
        exact_opt=exact_opt,
        wall_ms=(time.perf_counter() - started) * 1000.0,
        bins_used=sol.bins_used(),
        converged=lp.converged if lp is not None else None,
        rng_algo=RNG_ALGO,
        n=inst.n,
        m=inst.m,
    )


def solve_hybrid(
    inst: Vmk2Instance,
    params: HybridParams,
    *,
    lp: Optional[FractionalSolution] = None,
) -> tuple[Vmk2Solution, SolveReport]:
    """Sample-then-reduce: LP rounding for most bins, 1-D MK for the rest."""
    started = time.perf_counter()
    fs = lp if lp is not None else solve_clp(inst, params.eps, params.clp_budget)
    ell = params.ell_override if params.ell_override is not None else default_sample_count(inst.m)
    if ell > inst.m:
        raise ValidationError(f"ell_override={ell} exceeds m={inst.m}")
    rng = make_rng(params.seed)
    sampled, covered = sample_T(fs, ell, rng)
    residual = [it for it in inst.items if it.id not in covered]
    mk = MkInstance(items=associate_items(residual), m_bins=inst.m - ell)
    mk_sol = _solve_residual_mk(mk, params.mk_mode, params.eps)
    bins = tuple(sampled) + tuple(Configuration(b) for b in mk_sol.bins)
    sol = dedup_solution(Vmk2Solution(bins=bins))
    return sol, _report(inst, "hybrid", params.seed, sol, started, lp=fs)


def solve_sampling_baseline(
    inst: Vmk2Instance,
    eps: float,
    seed: int,
    *,
    clp_budget: Optional[IterationBudget] = None,
    lp: Optional[FractionalSolution] = None,
) -> tuple[Vmk2Solution, SolveReport]:
    """Draw all m bins independently from the LP solution."""
    started = time.perf_counter()
    fs = lp if lp is not None else solve_clp(inst, eps, clp_budget or IterationBudget())
    rng = make_rng(seed)
    sampled, _ = sample_T(fs, inst.m, rng)
    sol = dedup_solution(Vmk2Solution(bins=tuple(sampled)))
    return sol, _report(inst, "baseline", seed, sol, started, lp=fs)


def solve_reduction(
    inst: Vmk2Instance, eps: float, mk_mode: str = "exact"
) -> tuple[Vmk2Solution, SolveReport]:
    """Solve the max-coordinate 1-D instance and lift its bins back.

    Max-coordinate bins are feasible in both dimensions, so the lift is
    direct. Deterministic for mk_mode="exact".
    """
    started = time.perf_counter()
    mk = associate(inst, 1)
    mk_sol = _solve_residual_mk(mk, mk_mode, eps)
    sol = dedup_solution(Vmk2Solution(bins=tuple(Configuration(b) for b in mk_sol.bins)))
    return sol, _report(inst, "reduction", 0, sol, started)


def eps_nice_wrap(
    inst: Vmk2Instance,
    eps: float,
    inner: InnerSolver,
    prefix_budget: Optional[float] = None,
) -> tuple[Vmk2Solution, SolveReport]:
    """Peel off a dense prefix of items, first-fit it, run the inner solver
    on the rest, and keep the m most profitable bins overall.

    The prefix grows in order of profit per combined weight until its
    combined weight reaches ``prefix_budget``. The theoretical budget of
    eps^-40 is astronomically loose at practical sizes, so the default caps
    it at a tenth of the total combined weight.
    """
    started = time.perf_counter()
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"eps must be in (0, 1), got {eps}")
    combined = {it.id: it.w1 + it.w2 for it in inst.items}
    total = sum(combined.values())
    if prefix_budget is None:
        try:
            theoretical = eps ** -40
        except OverflowError:
            theoretical = math.inf
        prefix_budget = min(theoretical, 0.1 * total)
    if prefix_budget <= 0:
        raise ValidationError(f"prefix_budget must be positive, got {prefix_budget}")
    order = sorted(
        inst.items,
        key=lambda it: (
            -(it.profit / combined[it.id]) if combined[it.id] > 0 else -math.inf,
            -it.profit,
            it.id,
        ),
    )
    prefix: list[Item] = []
    prefix_weight = 0.0
    for it in order:
        if prefix_weight >= prefix_budget:
            break
        prefix.append(it)
        prefix_weight += combined[it.id]
    prefix_ids = {it.id for it in prefix}
    ff_bins = first_fit_2d(prefix, order="given")
    residual = Vmk2Instance(items=tuple(it for it in inst.items if it.id not in prefix_ids), m=inst.m)
    inner_sol, inner_report = inner(residual)
    inner_sol = dedup_solution(inner_sol)
    candidates = list(ff_bins) + list(inner_sol.bins)
    profits = {it.id: it.profit for it in inst.items}
    ranked = sorted(
        range(len(candidates)),
        key=lambda k: (-sum(profits[i] for i in candidates[k].item_ids), k),
    )
    bins = tuple(candidates[k] for k in ranked[: inst.m])
    bins += tuple(EMPTY_CONFIG for _ in range(inst.m - len(bins)))
    sol = dedup_solution(Vmk2Solution(bins=bins))
    report = _report(inst, "eps_nice_wrap", inner_report.seed, sol, started)
    report.lp_bound = inner_report.lp_bound
    report.converged = inner_report.converged
    return sol, report


@dataclass(frozen=True)
class NicenessReport:
    nice: bool
    max_config_profit_bound: float
    # The bin-count threshold only fits in triple-log form: an instance
    # qualifies when log(log(log(m))) reaches this value.
    m_threshold_logloglog: float
    profit_condition: bool
    size_condition: bool


def is_eps_nice(inst: Vmk2Instance, eps: float, opt_estimate: float) -> NicenessReport:
    """Check the two niceness conditions against an optimum estimate.

    The single-configuration profit cap is computed by exact pricing at
    values = profits; the bin-count threshold is reported in triple-log form
    because the literal value overflows any float."""
    if not 0.0 < eps < 1.0:
        raise ValidationError(f"eps must be in (0, 1), got {eps}")
    if opt_estimate <= 0:
        raise ValidationError(f"opt_estimate must be positive, got {opt_estimate}")
    bound = max_configuration_profit(inst)
    threshold = eps ** -30
    size_ok = inst.m > 15 and math.log(math.log(math.log(float(inst.m)))) >= threshold
    profit_ok = bound <= eps ** 20 * opt_estimate
    return NicenessReport(
        nice=size_ok and profit_ok,
        max_config_profit_bound=bound,
        m_threshold_logloglog=threshold,
        profit_condition=profit_ok,
        size_condition=size_ok,
    )


# ---------------------------------------------------------------------------
# Exact oracles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class McKItem:
    item_id: str
    bin_index: int
    w1: float
    w2: float
    profit: float


@dataclass(frozen=True)
class McKInstance:
    """Multiple-choice knapsack in 2m dimensions: one copy of every item per
    bin, each copy weighing on its bin's coordinate pair only, at most one
    copy per item."""

    classes: tuple[tuple[McKItem, ...], ...]
    m: int

    @property
    def d(self) -> int:
        return 2 * self.m


def reduce_to_mck(inst: Vmk2Instance) -> McKInstance:
    classes = tuple(
        tuple(McKItem(it.id, r, it.w1, it.w2, it.profit) for r in range(inst.m))
        for it in inst.items
    )
    return McKInstance(classes=classes, m=inst.m)


class _McKBudget(Exception):
    pass


class _BudgetStop(Exception):
    pass


def solve_mck_exact(
    mck: McKInstance, *, node_cap: int = 20_000_000
) -> tuple[frozenset[tuple[str, int]], float]:
    """Optimal copy selection by depth-first search over classes."""
    m = mck.m
    order = sorted(
        range(len(mck.classes)),
        key=lambda k: (
            -(mck.classes[k][0].profit / (mck.classes[k][0].w1 + mck.classes[k][0].w2))
            if mck.classes[k] and mck.classes[k][0].w1 + mck.classes[k][0].w2 > 0
            else -math.inf,
            k,
        ),
    )
    items = [mck.classes[k][0] for k in order if mck.classes[k]]
    n = len(items)
    suffix_profit = [0.0] * (n + 1)
    for k in range(n - 1, -1, -1):
        suffix_profit[k] = suffix_profit[k + 1] + items[k].profit
    loads1 = [0.0] * m
    loads2 = [0.0] * m
    chosen: list[tuple[str, int]] = []
    best_profit = 0.0
    best_set: tuple[tuple[str, int], ...] = ()
    nodes = 0

    def frac_bound(k: int) -> float:
        capacity = sum(1.0 - l for l in loads1) + sum(1.0 - l for l in loads2)
        bound = 0.0
        for j in range(k, n):
            it = items[j]
            w = it.w1 + it.w2
            if w <= _TOL:
                bound += it.profit
            elif w <= capacity:
                bound += it.profit
                capacity -= w
            else:
                if capacity > 0:
                    bound += it.profit * (capacity / w)
                break
        return bound

    def visit(k: int, profit: float) -> None:
        nonlocal nodes, best_profit, best_set
        nodes += 1
        if nodes > node_cap:
            raise _McKBudget
        if profit > best_profit + _TOL:
            best_profit = profit
            best_set = tuple(chosen)
        if k == n:
            return
        if profit + min(suffix_profit[k], frac_bound(k)) <= best_profit + _TOL:
            return
        it = items[k]
        for r in range(m):
            if loads1[r] + it.w1 <= 1.0 + _TOL and loads2[r] + it.w2 <= 1.0 + _TOL:
                loads1[r] += it.w1
                loads2[r] += it.w2
                chosen.append((it.item_id, r))
                visit(k + 1, profit + it.profit)
                chosen.pop()
                loads1[r] -= it.w1
                loads2[r] -= it.w2
        visit(k + 1, profit)

    root_bound = frac_bound(0)
    try:
        visit(0, 0.0)
    except _McKBudget:
        raise SearchBudgetExceeded(
            f"MCK node cap {node_cap} exceeded",
            best=(frozenset(best_set), best_profit),
            upper_bound=root_bound,
        )
    return frozenset(best_set), best_profit


def mck_selection_to_solution(inst: Vmk2Instance, chosen: frozenset[tuple[str, int]]) -> Vmk2Solution:
    bins: list[set[str]] = [set() for _ in range(inst.m)]
    for item_id, r in chosen:
        bins[r].add(item_id)
    return Vmk2Solution(bins=tuple(Configuration(frozenset(b)) for b in bins))


def solve_via_mck(inst: Vmk2Instance, *, node_cap: int = 20_000_000) -> tuple[Vmk2Solution, SolveReport]:
    """Exact solve for small bin counts through the multiple-choice route."""
    started = time.perf_counter()
    chosen, _ = solve_mck_exact(reduce_to_mck(inst), node_cap=node_cap)
    sol = mck_selection_to_solution(inst, chosen)
    return sol, _report(inst, "mck", 0, sol, started)


def solve_exact(
    inst: Vmk2Instance,
    *,
    node_cap: int = 5_000_000,
    use_lp_bound: bool = True,
) -> tuple[Vmk2Solution, float, bool]:
    """Ground-truth search: assign each item to a bin or skip it.

    Nonempty bins are opened in index order, nodes are pruned against a
    fractional bound on the remaining items, and the LP value (solved over
    the generated pool) ends the search early once the incumbent meets it.
    Returns (solution, profit, complete); an exhausted node budget yields the
    best solution found with complete=False.
    """
    free = [it for it in inst.items if it.w1 <= _TOL and it.w2 <= _TOL]
    free_profit = sum(it.profit for it in free)
    search_items = sorted(
        (it for it in inst.items if it.w1 > _TOL or it.w2 > _TOL),
        key=lambda it: (-(it.profit / (it.w1 + it.w2)), -it.profit, it.id),
    )
    n = len(search_items)
    m = inst.m

    lp_value = math.inf
    if use_lp_bound and n > 0:
        lp_value = solve_clp(inst, 1e-6).value

    # Feasible incumbent from 2-D first-fit truncated to m bins.
    seed_bins = first_fit_2d(search_items, order="given")[:m]
    best_assignment = [set(b.item_ids) for b in seed_bins] + [set() for _ in range(m - len(seed_bins))]
    best_profit = sum(inst.item(i).profit for b in best_assignment for i in b)

    loads1 = [0.0] * m
    loads2 = [0.0] * m
    assignment: list[set[str]] = [set() for _ in range(m)]
    nodes = 0
    complete = True

    def frac_bound(k: int) -> float:
        capacity = sum(1.0 - l for l in loads1) + sum(1.0 - l for l in loads2)
        bound = 0.0
        for j in range(k, n):
            it = search_items[j]
            w = it.w1 + it.w2
            if w <= capacity:
                bound += it.profit
                capacity -= w
            else:
                if capacity > 0:
                    bound += it.profit * (capacity / w)
                break
        return bound

    def visit(k: int, open_bins: int, profit: float) -> None:
        nonlocal nodes, best_profit, best_assignment, complete
        nodes += 1
        if nodes > node_cap:
            raise _BudgetStop
        if profit > best_profit + _TOL:
            best_profit = profit
            best_assignment = [set(b) for b in assignment]
        if k == n or best_profit + free_profit >= lp_value - 1e-9:
            return
        if profit + frac_bound(k) <= best_profit + _TOL:
            return
        it = search_items[k]
        limit = min(open_bins + 1, m)
        for b in range(limit):
            if loads1[b] + it.w1 <= 1.0 + _TOL and loads2[b] + it.w2 <= 1.0 + _TOL:
                loads1[b] += it.w1
                loads2[b] += it.w2
                assignment[b].add(it.id)
                visit(k + 1, max(open_bins, b + 1), profit + it.profit)
                assignment[b].discard(it.id)
                loads1[b] -= it.w1
                loads2[b] -= it.w2
        visit(k + 1, open_bins, profit)

    if n > 0 and m > 0:
        try:
            visit(0, 0, 0.0)
        except _BudgetStop:
            complete = False

    merged = [set(b) for b in best_assignment]
    for it in free:
        merged[0].add(it.id)
    filled = sorted((b for b in merged if b), key=min)
    bins = tuple(Configuration(frozenset(b)) for b in filled)
    bins += tuple(EMPTY_CONFIG for _ in range(m - len(bins)))
    sol = Vmk2Solution(bins=bins)
    return sol, best_profit + free_profit, complete
