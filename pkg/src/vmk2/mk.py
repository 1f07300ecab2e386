"""Everything one-dimensional: the max-coordinate reduction to multiple
knapsack, the two-way configuration splitter, exact and heuristic MK solvers,
and 2-D first-fit packing.

The reduction replaces each 2-D weight by its larger coordinate, so any bin
of the reduced instance is feasible in the original one. Conversely any 2-D
configuration splits into two reduced-feasible halves (items heavier in the
first coordinate versus the second), which is what makes solving the reduced
instance a constant-factor strategy for the 2-D problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import (
    FEAS_TOL,
    Configuration,
    InfeasibleInput,
    Item,
    SearchBudgetExceeded,
    ValidationError,
    Vmk2Instance,
    config_weight,
)

DEFAULT_MK_NODE_CAP = 2_000_000
_TOL = 1e-12


@dataclass(frozen=True)
class MkItem:
    id: str
    weight: float
    profit: float


@dataclass(frozen=True)
class MkInstance:
    """1-D multiple knapsack with unit bins; zero bins admit only the empty
    solution."""

    items: tuple[MkItem, ...]
    m_bins: int

    def __post_init__(self):
        if self.m_bins < 0:
            raise ValidationError(f"m_bins must be nonnegative, got {self.m_bins}")
        seen = set()
        for it in self.items:
            if it.id in seen:
                raise ValidationError(f"duplicate item id {it.id!r}")
            seen.add(it.id)
            if not 0.0 <= it.weight <= 1.0:
                raise ValidationError(f"item {it.id!r}: weight={it.weight} outside [0, 1]")
            if it.profit < 0:
                raise ValidationError(f"item {it.id!r}: profit={it.profit} is negative")
        object.__setattr__(self, "_by_id", {it.id: it for it in self.items})

    @property
    def n(self) -> int:
        return len(self.items)

    def item(self, item_id: str) -> MkItem:
        return self._by_id[item_id]


@dataclass(frozen=True)
class MkSolution:
    bins: tuple[frozenset[str], ...]

    def packed_ids(self) -> frozenset[str]:
        out: set[str] = set()
        for b in self.bins:
            out |= b
        return frozenset(out)


def mk_profit(mk: MkInstance, sol: MkSolution) -> float:
    return sum(mk.item(i).profit for i in sol.packed_ids())


def mk_bin_weight(mk: MkInstance, bin_ids: Iterable[str]) -> float:
    return sum(mk.item(i).weight for i in bin_ids)


def associated_weight(item: Item) -> float:
    return max(item.w1, item.w2)


def associate_items(items: Iterable[Item]) -> tuple[MkItem, ...]:
    return tuple(MkItem(id=it.id, weight=associated_weight(it), profit=it.profit) for it in items)


def associate(inst: Vmk2Instance, k: int) -> MkInstance:
    """The reduced instance: max-coordinate weights, k times as many bins."""
    if k < 1:
        raise ValidationError(f"k must be a positive integer, got {k}")
    return MkInstance(items=associate_items(inst.items), m_bins=k * inst.m)


def split_configuration(
    inst: Vmk2Instance, config: Configuration
) -> tuple[frozenset[str], frozenset[str]]:
    """Split a 2-D feasible configuration into two 1-D feasible halves.

    Items whose first coordinate dominates go to the first half, the rest to
    the second; each half's max-coordinate weight is then bounded by the
    corresponding coordinate total of the original bin.
    """
    w1, w2 = config_weight(inst, config)
    if w1 > 1.0 + FEAS_TOL or w2 > 1.0 + FEAS_TOL:
        raise InfeasibleInput(f"configuration weighs ({w1:.12g}, {w2:.12g}), exceeding (1, 1)")
    first: set[str] = set()
    second: set[str] = set()
    for item_id in config.item_ids:
        it = inst.item(item_id)
        (first if it.w1 >= it.w2 else second).add(item_id)
    return frozenset(first), frozenset(second)


def _canonical_bins(bins: Sequence[set[str] | frozenset[str]], m_bins: int) -> MkSolution:
    filled = sorted((frozenset(b) for b in bins if b), key=lambda b: min(b))
    filled += [frozenset()] * (m_bins - len(filled))
    return MkSolution(bins=tuple(filled))


def _density_order(items: Iterable[MkItem]) -> list[MkItem]:
    return sorted(
        items,
        key=lambda it: (-(it.profit / it.weight) if it.weight > 0 else -math.inf, -it.profit, it.id),
    )


def _ffd_pack(order: Sequence[MkItem], m_bins: int) -> list[set[str]]:
    bins: list[set[str]] = [set() for _ in range(m_bins)]
    loads = [0.0] * m_bins
    for it in order:
        for b in range(m_bins):
            if loads[b] + it.weight <= 1.0 + _TOL:
                bins[b].add(it.id)
                loads[b] += it.weight
                break
    return bins


def _fractional_tail_bound(order: Sequence[MkItem], start: int, capacity: float) -> float:
    bound = 0.0
    rem = capacity
    for k in range(start, len(order)):
        it = order[k]
        if it.weight <= rem:
            bound += it.profit
            rem -= it.weight
        else:
            if rem > 0.0:
                bound += it.profit * (rem / it.weight)
            break
    return bound


class _BudgetSignal(Exception):
    pass


def solve_mk_exact(mk: MkInstance, *, node_cap: int = DEFAULT_MK_NODE_CAP) -> MkSolution:
    """Optimal MK packing by depth-first assignment with symmetry breaking.

    Bins are interchangeable, so a new bin may only be opened in index order.

    Raises :class:`SearchBudgetExceeded` carrying the best solution found and
    an upper-bound certificate when the node cap is hit.
    """
    if mk.m_bins == 0:
        return MkSolution(bins=())
    free = [it for it in mk.items if it.weight <= _TOL and it.profit > 0]
    search_items = _density_order(it for it in mk.items if it.weight > _TOL and it.profit > 0)
    n = len(search_items)

    # Seed the incumbent with first-fit-decreasing so pruning bites early.
    best_bins = _ffd_pack(search_items, mk.m_bins)
    best_profit = sum(mk.item(i).profit for b in best_bins for i in b)
    free_profit = sum(it.profit for it in free)
    root_bound = _fractional_tail_bound(search_items, 0, float(mk.m_bins))
    nodes = 0
    loads = [0.0] * mk.m_bins
    assignment: list[set[str]] = [set() for _ in range(mk.m_bins)]

    def visit(k: int, open_bins: int, profit: float, capacity: float) -> None:
        nonlocal nodes, best_profit, best_bins
        nodes += 1
        if nodes > node_cap:
            raise _BudgetSignal
        if profit > best_profit + _TOL:
            best_profit = profit
            best_bins = [set(b) for b in assignment]
        if k == n:
            return
        if profit + _fractional_tail_bound(search_items, k, capacity) <= best_profit + _TOL:
            return
        it = search_items[k]
        limit = min(open_bins + 1, mk.m_bins)
        for b in range(limit):
            if loads[b] + it.weight <= 1.0 + _TOL:
                loads[b] += it.weight
                assignment[b].add(it.id)
                visit(k + 1, max(open_bins, b + 1), profit + it.profit, capacity - it.weight)
                assignment[b].discard(it.id)
                loads[b] -= it.weight
        visit(k + 1, open_bins, profit, capacity)

    try:
        visit(0, 0, 0.0, float(mk.m_bins))
    except _BudgetSignal:
        for it in free:
            best_bins[0].add(it.id)
        raise SearchBudgetExceeded(
            f"MK node cap {node_cap} exceeded",
            best=_canonical_bins(best_bins, mk.m_bins),
            upper_bound=root_bound + free_profit,
        )
    for it in free:
        best_bins[0].add(it.id)
    return _canonical_bins(best_bins, mk.m_bins)


def solve_mk_heuristic(mk: MkInstance, eps: float = 0.0, *, move_cap: int = 100_000) -> MkSolution:
    """First-fit-decreasing by density, then improving insert/swap moves.

    Never returns less than its own first-fit starting point; ``eps`` sets
    the minimum profit gain for a move to count as improving.
    """
    if mk.m_bins == 0 or mk.n == 0:
        return MkSolution(bins=tuple(frozenset() for _ in range(mk.m_bins)))
    gain_floor = max(eps, _TOL)
    order = _density_order(mk.items)
    bins = _ffd_pack([it for it in order if it.weight > _TOL], mk.m_bins)
    loads = [mk_bin_weight(mk, b) for b in bins]
    packed = {i for b in bins for i in b}
    for it in order:
        if it.weight <= _TOL:
            bins[0].add(it.id)
            packed.add(it.id)

    unpacked = [it for it in order if it.id not in packed]
    moves = 0
    improved = True
    while improved and moves < move_cap:
        improved = False
        still_out: list[MkItem] = []
        for it in sorted(unpacked, key=lambda u: (-u.profit, u.id)):
            placed = False
            for b in range(mk.m_bins):
                if loads[b] + it.weight <= 1.0 + _TOL:
                    bins[b].add(it.id)
                    loads[b] += it.weight
                    placed = improved = True
                    moves += 1
                    break
            if placed:
                continue
            # Swap against a packed item that makes room, if the exchange
            # raises profit by more than the gain floor.
            swap: tuple[float, int, str] | None = None
            for b in range(mk.m_bins):
                for out_id in bins[b]:
                    out = mk.item(out_id)
                    if loads[b] - out.weight + it.weight <= 1.0 + _TOL:
                        gain = it.profit - out.profit
                        if gain > gain_floor and (swap is None or gain > swap[0]):
                            swap = (gain, b, out_id)
            if swap is not None:
                _, b, out_id = swap
                out = mk.item(out_id)
                bins[b].discard(out_id)
                loads[b] -= out.weight
                bins[b].add(it.id)
                loads[b] += it.weight
                still_out.append(out)
                improved = True
                moves += 1
            else:
                still_out.append(it)
        unpacked = still_out
    return _canonical_bins(bins, mk.m_bins)


def first_fit_2d(items: Sequence[Item], order: str = "given") -> list[Configuration]:
    """Pack every item into the first bin with room in both dimensions,
    opening bins as needed. ``order`` is ``given`` or ``density``
    (profit per combined weight, descending)."""
    if order == "density":
        items = sorted(
            items,
            key=lambda it: (
                -(it.profit / (it.w1 + it.w2)) if it.w1 + it.w2 > 0 else -math.inf,
                -it.profit,
                it.id,
            ),
        )
    elif order != "given":
        raise ValidationError(f"unknown first-fit order {order!r}")
    bins: list[set[str]] = []
    loads: list[tuple[float, float]] = []
    for it in items:
        for b, (l1, l2) in enumerate(loads):
            if l1 + it.w1 <= 1.0 + _TOL and l2 + it.w2 <= 1.0 + _TOL:
                bins[b].add(it.id)
                loads[b] = (l1 + it.w1, l2 + it.w2)
                break
        else:
            bins.append({it.id})
            loads.append((it.w1, it.w2))
    return [Configuration(frozenset(b)) for b in bins]
