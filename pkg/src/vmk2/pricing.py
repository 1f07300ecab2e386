"""2-D knapsack pricing oracle for column generation.

Given per-item values (typically dual-adjusted profits), find the feasible
single-bin configuration of maximum total value. Values that are zero or
negative exclude the item: configurations are hereditary, so dropping an item
never loses feasibility. Exact mode is depth-first branch and bound in
density order with a fractional surrogate bound; approximate mode scales
values to a coarser grid first and certifies its gap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .model import (
    Configuration,
    SearchBudgetExceeded,
    Vmk2Instance,
)

DEFAULT_NODE_CAP = 10_000_000

# Values and value-sums closer than this are treated as ties.
_VALUE_TIE_TOL = 1e-12

ValueAssignment = Mapping[str, float]


@dataclass(frozen=True)
class PricedColumn:
    config: Configuration
    value: float
    optimality_gap: float = 0.0


@dataclass(frozen=True)
class _Cand:
    id: str
    w1: float
    w2: float
    value: float


def _split_candidates(inst: Vmk2Instance, values: ValueAssignment):
    """Clamp values, peel off zero-weight items, density-sort the rest."""
    base_ids: list[str] = []
    base_value = 0.0
    cands: list[_Cand] = []
    for it in inst.items:
        v = float(values.get(it.id, 0.0))
        if v <= 0.0:
            continue
        if it.w1 == 0.0 and it.w2 == 0.0:
            # Free items never conflict with anything; include unconditionally.
            base_ids.append(it.id)
            base_value += v
        else:
            cands.append(_Cand(it.id, it.w1, it.w2, v))
    cands.sort(key=lambda c: (-(c.value / (c.w1 + c.w2)), -c.value, c.id))
    return base_ids, base_value, cands


def _fractional_bound(cands: Sequence[_Cand], start: int, cap_sum: float) -> float:
    """Greedy fractional fill of the density-sorted suffix against the
    surrogate capacity c1+c2. Any feasible completion satisfies the surrogate
    constraint, so this upper-bounds every descendant."""
    bound = 0.0
    rem = cap_sum
    for k in range(start, len(cands)):
        c = cands[k]
        w = c.w1 + c.w2
        if w <= rem:
            bound += c.value
            rem -= w
        else:
            if rem > 0.0:
                bound += c.value * (rem / w)
            break
    return bound


def _greedy_fill(cands: Sequence[_Cand]) -> tuple[float, list[str]]:
    used1 = used2 = 0.0
    value = 0.0
    ids: list[str] = []
    for c in cands:
        if used1 + c.w1 <= 1.0 + _VALUE_TIE_TOL and used2 + c.w2 <= 1.0 + _VALUE_TIE_TOL:
            used1 += c.w1
            used2 += c.w2
            value += c.value
            ids.append(c.id)
    return value, ids


def _search(cands: Sequence[_Cand], node_cap: int) -> tuple[float, tuple[str, ...], float]:
    """Exact max-value subset under both capacity constraints.

    Returns (value, sorted ids, root upper bound). Ties in value are resolved
    toward the lexicographically smallest id set. Raises
    :class:`SearchBudgetExceeded` with the incumbent when the cap is hit.
    """
    best_value, best_list = _greedy_fill(cands)
    best_ids = tuple(sorted(best_list))
    root_bound = _fractional_bound(cands, 0, 2.0)
    nodes = 0
    n = len(cands)
    chosen: list[str] = []

    def visit(k: int, used1: float, used2: float, value: float) -> None:
        nonlocal nodes, best_value, best_ids
        nodes += 1
        if nodes > node_cap:
            raise SearchBudgetExceeded(
                f"pricing node cap {node_cap} exceeded",
                best=(best_value, best_ids),
                upper_bound=root_bound,
            )
        if value > best_value + _VALUE_TIE_TOL:
            best_value = value
            best_ids = tuple(sorted(chosen))
        elif abs(value - best_value) <= _VALUE_TIE_TOL:
            cand = tuple(sorted(chosen))
            if cand < best_ids:
                best_ids = cand
        if k == n:
            return
        bound = value + _fractional_bound(cands, k, (1.0 - used1) + (1.0 - used2))
        if bound <= best_value - _VALUE_TIE_TOL:
            return
        c = cands[k]
        if used1 + c.w1 <= 1.0 + _VALUE_TIE_TOL and used2 + c.w2 <= 1.0 + _VALUE_TIE_TOL:
            chosen.append(c.id)
            visit(k + 1, used1 + c.w1, used2 + c.w2, value + c.value)
            chosen.pop()
        visit(k + 1, used1, used2, value)

    visit(0, 0.0, 0.0, 0.0)
    return best_value, best_ids, root_bound


def price_exact(
    inst: Vmk2Instance, values: ValueAssignment, *, node_cap: int = DEFAULT_NODE_CAP
) -> PricedColumn:
    """Maximum-value configuration under the clamped value assignment.

    Raises :class:`SearchBudgetExceeded` carrying the best column found and a
    valid upper bound when the node cap is hit.
    """
    base_ids, base_value, cands = _split_candidates(inst, values)
    try:
        value, ids, _ = _search(cands, node_cap)
    except SearchBudgetExceeded as exc:
        value, ids = exc.best
        col = PricedColumn(
            config=Configuration(frozenset(base_ids) | frozenset(ids)),
            value=base_value + value,
            optimality_gap=max(0.0, exc.upper_bound - value),
        )
        raise SearchBudgetExceeded(str(exc), best=col, upper_bound=base_value + exc.upper_bound)
    return PricedColumn(
        config=Configuration(frozenset(base_ids) | frozenset(ids)),
        value=base_value + value,
        optimality_gap=0.0,
    )


def price_approx(
    inst: Vmk2Instance,
    values: ValueAssignment,
    eps: float,
    *,
    node_cap: int = DEFAULT_NODE_CAP,
) -> PricedColumn:
    """Configuration of value at least (1 - eps) times the exact optimum.

    Values are rounded down to multiples of eps * v_max / n before the search,
    which caps the total rounding loss at eps * v_max <= eps * optimum. Always
    returns; degenerate scaling or a blown node budget falls back to the best
    configuration in hand with an honest gap."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    base_ids, base_value, cands = _split_candidates(inst, values)
    if not cands:
        return PricedColumn(config=Configuration(frozenset(base_ids)), value=base_value, optimality_gap=0.0)
    v_max = max(c.value for c in cands)
    step = eps * v_max / len(cands)
    if step <= 0.0:
        value, ids = _greedy_fill(cands)
        return PricedColumn(
            config=Configuration(frozenset(base_ids) | frozenset(ids)),
            value=base_value + value,
            optimality_gap=0.0,
        )
    scaled = [_Cand(c.id, c.w1, c.w2, float(int(c.value / step))) for c in cands]
    scaled = [c for c in scaled if c.value > 0.0]
    scaled.sort(key=lambda c: (-(c.value / (c.w1 + c.w2)), -c.value, c.id))
    try:
        scaled_value, ids, _ = _search(scaled, node_cap)
        scaled_bound = scaled_value
    except SearchBudgetExceeded as exc:
        scaled_value, ids = exc.best
        scaled_bound = exc.upper_bound
    by_id = {c.id: c.value for c in cands}
    value = sum(by_id[i] for i in ids)
    upper = step * (scaled_bound + len(cands))
    return PricedColumn(
        config=Configuration(frozenset(base_ids) | frozenset(ids)),
        value=base_value + value,
        optimality_gap=max(0.0, upper - value),
    )


def max_configuration_profit(inst: Vmk2Instance, *, node_cap: int = DEFAULT_NODE_CAP) -> float:
    """The largest profit any single bin can hold (exact pricing at v = p)."""
    return price_exact(inst, {it.id: it.profit for it in inst.items}, node_cap=node_cap).value
