"""Configuration LP by column generation, and sampling from its solution.

The LP places fractional mass on single-bin configurations: total mass at
most the bin count, per-item coverage at most one, profit maximized. The
restricted master over a configuration pool is solved with the in-package
dense simplex; the pricing oracle proposes new columns from the duals until
no column beats the bin price by more than the requested tolerance. The
certificate is the standard one: pricing value v and duals (bin price lam,
item prices mu) give the upper bound m*v + sum(mu), so the master value pins
an instance-specific optimality gap even on early termination.

A configuration is "drawn from" a solution with probability mass/m, with the
leftover probability landing on the empty configuration. Draw sequences are
fully determined by the generator passed in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .model import (
    LP_TOL,
    Configuration,
    EMPTY_CONFIG,
    SearchBudgetExceeded,
    Vmk2Instance,
)
from .pricing import DEFAULT_NODE_CAP, price_exact
from .simplex import DenseSimplex


@dataclass(frozen=True)
class IterationBudget:
    max_rounds: int = 500
    pricing_node_cap: int = DEFAULT_NODE_CAP


@dataclass
class FractionalSolution:
    """Sparse LP solution over a configuration pool, with duals and gap."""

    pool: tuple[Configuration, ...]
    mass: tuple[float, ...]
    value: float
    dual_bin_price: float
    dual_item_prices: dict[str, float]
    converged: bool
    certified_gap: float  # relative: (upper bound - value) / upper bound
    m: int
    rounds: int = 0
    marginals: dict[str, float] = field(default_factory=dict)

    def item_mass(self, item_id: str) -> float:
        """Total mass of pool configurations containing the item."""
        return self.marginals.get(item_id, 0.0)

    def total_mass(self) -> float:
        return float(sum(self.mass))


def greedy_density_column(inst: Vmk2Instance) -> Configuration:
    """One bin filled greedily by profit density; seeds the initial pool."""
    order = sorted(
        inst.items,
        key=lambda it: (-(it.profit / (it.w1 + it.w2)) if it.w1 + it.w2 > 0 else -math.inf, -it.profit, it.id),
    )
    used1 = used2 = 0.0
    ids = []
    for it in order:
        if used1 + it.w1 <= 1.0 and used2 + it.w2 <= 1.0:
            used1 += it.w1
            used2 += it.w2
            ids.append(it.id)
    return Configuration(frozenset(ids))


def _column_vector(inst: Vmk2Instance, row_of: dict[str, int], config: Configuration) -> np.ndarray:
    col = np.zeros(inst.n + 1)
    col[0] = 1.0
    for item_id in config.item_ids:
        col[row_of[item_id]] = 1.0
    return col


def solve_clp(
    inst: Vmk2Instance,
    eps: float,
    budget: Optional[IterationBudget] = None,
    *,
    initial_pool: Optional[Sequence[Configuration]] = None,
) -> FractionalSolution:
    """Solve the configuration LP to a certified relative gap of ``eps``.

    If the round budget runs out first, the best feasible solution is
    returned with ``converged=False`` and an honest ``certified_gap``.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    budget = budget or IterationBudget()
    m = inst.m
    if inst.n == 0:
        return FractionalSolution(
            pool=(), mass=(), value=0.0, dual_bin_price=0.0, dual_item_prices={},
            converged=True, certified_gap=0.0, m=m,
        )

    row_of = {it.id: k + 1 for k, it in enumerate(inst.items)}
    profits = {it.id: it.profit for it in inst.items}

    pool: list[Configuration] = []
    seen: set[frozenset[str]] = set()

    def add_pool(config: Configuration) -> bool:
        if len(config) == 0 or config.item_ids in seen:
            return False
        seen.add(config.item_ids)
        pool.append(config)
        return True

    for it in inst.items:
        add_pool(Configuration(frozenset([it.id])))
    add_pool(greedy_density_column(inst))
    for config in initial_pool or ():
        add_pool(config)

    b = np.ones(inst.n + 1)
    b[0] = float(m)
    lp = DenseSimplex(b)
    for config in pool:
        lp.add_column(_column_vector(inst, row_of, config), sum(profits[i] for i in config.item_ids))

    value = 0.0
    lam = 0.0
    mu = np.zeros(inst.n)
    converged = False
    gap = 1.0
    rounds = 0
    x = np.zeros(len(pool))
    for rounds in range(1, budget.max_rounds + 1):
        result = lp.solve(tol=LP_TOL * 1e-2)
        value, x = result.value, result.x
        lam = float(result.duals[0])
        mu = result.duals[1:]
        values = {it.id: it.profit - mu[k] for k, it in enumerate(inst.items)}
        try:
            column = price_exact(inst, values, node_cap=budget.pricing_node_cap)
            price_bound = column.value
        except SearchBudgetExceeded as exc:
            column = exc.best
            price_bound = exc.upper_bound
        upper = m * max(price_bound, lam) + float(np.sum(mu))
        gap = max(0.0, upper - value) / upper if upper > 0 else 0.0
        if price_bound <= lam * (1.0 + eps) + LP_TOL:
            converged = True
            break
        if column.value <= lam + LP_TOL or not add_pool(column.config):
            # Pricing cannot supply a strictly improving new column; the gap
            # certificate above is all we can claim.
            converged = gap <= eps
            break
        lp.add_column(
            _column_vector(inst, row_of, column.config),
            sum(profits[i] for i in column.config.item_ids),
        )

    mass = np.zeros(len(pool))
    mass[: len(x)] = x
    marginals: dict[str, float] = {it.id: 0.0 for it in inst.items}
    for config, x_c in zip(pool, mass):
        if x_c > 0.0:
            for item_id in config.item_ids:
                marginals[item_id] += x_c
    return FractionalSolution(
        pool=tuple(pool),
        mass=tuple(float(v) for v in mass),
        value=value,
        dual_bin_price=lam,
        dual_item_prices={it.id: float(mu[k]) for k, it in enumerate(inst.items)},
        converged=converged,
        certified_gap=gap,
        m=m,
        rounds=rounds,
        marginals=marginals,
    )


def fractional_solution_to_obj(fs: FractionalSolution) -> dict:
    """JSON-friendly dump of the pool and mass vector, for audit."""
    return {
        "m": fs.m,
        "value": fs.value,
        "converged": fs.converged,
        "certified_gap": fs.certified_gap,
        "dual_bin_price": fs.dual_bin_price,
        "dual_item_prices": fs.dual_item_prices,
        "pool": [list(c.sorted_ids()) for c in fs.pool],
        "mass": list(fs.mass),
    }


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


@dataclass
class SamplerState:
    """Prefix sums of mass/m over the pool; the tail segment up to 1.0 is the
    empty configuration absorbing the residual probability."""

    cumulative: np.ndarray
    pool: tuple[Configuration, ...]


def sampler_state(fs: FractionalSolution) -> SamplerState:
    cached = getattr(fs, "_sampler", None)
    if cached is not None:
        return cached
    probs = np.clip(np.asarray(fs.mass, dtype=float), 0.0, None) / fs.m
    cumulative = np.append(np.cumsum(probs), 1.0)
    total = cumulative[-2] if len(cumulative) > 1 else 0.0
    if total > 1.0:
        # LP rounding can push total mass a hair above m; squash proportionally.
        cumulative[:-1] /= total
    state = SamplerState(cumulative=cumulative, pool=fs.pool)
    fs._sampler = state
    return state


def sample_indices(fs: FractionalSolution, size: int, rng: np.random.Generator) -> np.ndarray:
    """Pool indices of i.i.d. draws; index == len(pool) means the empty draw."""
    state = sampler_state(fs)
    u = rng.random(size)
    return np.searchsorted(state.cumulative, u, side="right")


def sample_configuration(fs: FractionalSolution, rng: np.random.Generator) -> Configuration:
    idx = int(sample_indices(fs, 1, rng)[0])
    return fs.pool[idx] if idx < len(fs.pool) else EMPTY_CONFIG


def sample_T(
    fs: FractionalSolution, ell: int, rng: np.random.Generator
) -> tuple[list[Configuration], frozenset[str]]:
    """Draw ``ell`` configurations i.i.d. and return them with their union."""
    if not 0 <= ell <= fs.m:
        raise ValueError(f"ell must be in [0, m={fs.m}], got {ell}")
    idx = sample_indices(fs, ell, rng)
    configs = [fs.pool[i] if i < len(fs.pool) else EMPTY_CONFIG for i in idx]
    union: set[str] = set()
    for config in configs:
        union |= config.item_ids
    return configs, frozenset(union)


def _membership_matrix(inst: Vmk2Instance, fs: FractionalSolution) -> np.ndarray:
    """(len(pool)+1, n) boolean incidence; the last row is the empty draw."""
    cached = getattr(fs, "_membership", None)
    if cached is not None:
        return cached
    col_of = {it.id: k for k, it in enumerate(inst.items)}
    matrix = np.zeros((len(fs.pool) + 1, inst.n), dtype=bool)
    for row, config in enumerate(fs.pool):
        for item_id in config.item_ids:
            matrix[row, col_of[item_id]] = True
    fs._membership = matrix
    return matrix


def sample_union_profits(
    inst: Vmk2Instance,
    fs: FractionalSolution,
    ell: int,
    trials: int,
    rng: np.random.Generator,
    *,
    chunk: int = 1024,
) -> np.ndarray:
    """Profit of the union of ``ell`` draws, for each of ``trials`` trials.

    Equivalent to repeated :func:`sample_T` plus profit accounting, batched
    for Monte Carlo experiments."""
    matrix = _membership_matrix(inst, fs)
    p = np.array([it.profit for it in inst.items])
    out = np.empty(trials)
    done = 0
    while done < trials:
        step = min(chunk, trials - done)
        draws = sample_indices(fs, step * ell, rng).reshape(step, ell) if ell > 0 else np.zeros((step, 0), dtype=int)
        covered = matrix[draws].any(axis=1) if ell > 0 else np.zeros((step, inst.n), dtype=bool)
        out[done : done + step] = covered @ p
        done += step
    return out


def sample_cumulative_profits(
    inst: Vmk2Instance,
    fs: FractionalSolution,
    draws: int,
    trials: int,
    rng: np.random.Generator,
    *,
    chunk: int = 128,
) -> np.ndarray:
    """(trials, draws) profits of the running unions R_1..R_j per trial."""
    matrix = _membership_matrix(inst, fs)
    p = np.array([it.profit for it in inst.items])
    out = np.empty((trials, draws))
    done = 0
    while done < trials:
        step = min(chunk, trials - done)
        idx = sample_indices(fs, step * draws, rng).reshape(step, draws)
        running = np.logical_or.accumulate(matrix[idx], axis=1)
        out[done : done + step] = running @ p
        done += step
    return out
