"""Core data types, validation, profit accounting, and instance file I/O.

An instance consists of items with 2-dimensional weights in [0,1]^2 and
nonnegative profits, plus a number of unit-capacity bins. A configuration is
an item subset that fits into a single bin; a solution is one configuration
per bin, with each packed item's profit counted exactly once.

Instances and configurations are immutable after construction and safe to
share across threads.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

# Absolute feasibility slack per weight dimension. Column generation and
# simplex pivoting introduce rounding, so bin capacity checks allow this much.
FEAS_TOL = 1e-9

# LP feasibility/optimality tolerance used throughout the LP machinery.
LP_TOL = 1e-7


class Vmk2Error(Exception):
    """Base class for all errors raised by this package."""


class ParseError(Vmk2Error):
    """An instance or solution file could not be parsed."""


class ValidationError(Vmk2Error):
    """Parsed data violates a model invariant; the message names the field."""


class UnknownItem(Vmk2Error):
    """A solution references an item id that is not in the instance."""


class InfeasibleInput(Vmk2Error):
    """An input configuration violates 2-D bin feasibility."""


class SearchBudgetExceeded(Vmk2Error):
    """A branch-and-bound node cap was hit.

    Carries the best solution found so far and a valid upper bound on the
    true optimum, so callers can proceed with honest partial results.
    """

    def __init__(self, message: str, best=None, upper_bound: float = math.inf):
        super().__init__(message)
        self.best = best
        self.upper_bound = upper_bound


@dataclass(frozen=True)
class Item:
    id: str
    w1: float
    w2: float
    profit: float


@dataclass(frozen=True)
class Vmk2Instance:
    """A validated problem instance: items plus a positive bin count."""

    items: tuple[Item, ...]
    m: int

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 1:
            raise ValidationError(f"m must be a positive integer, got {self.m!r}")
        seen: set[str] = set()
        for it in self.items:
            if it.id in seen:
                raise ValidationError(f"duplicate item id {it.id!r}")
            seen.add(it.id)
            for name, w in (("w1", it.w1), ("w2", it.w2)):
                if not (isinstance(w, (int, float)) and math.isfinite(w)):
                    raise ValidationError(f"item {it.id!r}: {name}={w!r} is not a finite number")
                if not 0.0 <= w <= 1.0:
                    raise ValidationError(f"item {it.id!r}: {name}={w} outside [0, 1]")
            if not (isinstance(it.profit, (int, float)) and math.isfinite(it.profit)):
                raise ValidationError(f"item {it.id!r}: profit={it.profit!r} is not a finite number")
            if it.profit < 0:
                raise ValidationError(f"item {it.id!r}: profit={it.profit} is negative")
        object.__setattr__(self, "_by_id", {it.id: it for it in self.items})

    @property
    def n(self) -> int:
        return len(self.items)

    def item(self, item_id: str) -> Item:
        try:
            return self._by_id[item_id]
        except KeyError:
            raise UnknownItem(f"unknown item id {item_id!r}") from None

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def total_profit(self) -> float:
        return sum(it.profit for it in self.items)


@dataclass(frozen=True)
class Configuration:
    """An item subset intended to fit into a single bin."""

    item_ids: frozenset[str] = frozenset()

    def __len__(self) -> int:
        return len(self.item_ids)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self.item_ids

    def __iter__(self) -> Iterator[str]:
        return iter(self.item_ids)

    def sorted_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.item_ids))


EMPTY_CONFIG = Configuration()


@dataclass(frozen=True)
class Vmk2Solution:
    """One configuration per bin; bins may be empty and may overlap.

    Profit accounting counts each distinct item once regardless of how many
    bins contain it; use :func:`dedup_solution` for an overlap-free view.
    """

    bins: tuple[Configuration, ...]

    def packed_ids(self) -> frozenset[str]:
        out: set[str] = set()
        for b in self.bins:
            out |= b.item_ids
        return frozenset(out)

    def bins_used(self) -> int:
        return sum(1 for b in self.bins if len(b) > 0)


def empty_solution(m: int) -> Vmk2Solution:
    return Vmk2Solution(bins=tuple(EMPTY_CONFIG for _ in range(m)))


@dataclass(frozen=True)
class BinViolation:
    bin_index: int
    dimension: int  # 1 or 2
    total: float

    def __str__(self) -> str:
        return f"bin {self.bin_index}: dimension {self.dimension} total {self.total:.12g} exceeds 1"


@dataclass
class ProfitReport:
    profit: float
    violations: list[BinViolation]

    @property
    def feasible(self) -> bool:
        return not self.violations


@dataclass
class SolveReport:
    """Per-run record emitted by every solver and consumed by the bench CSV."""

    algorithm: str
    seed: int
    profit: float
    lp_bound: Optional[float] = None
    exact_opt: Optional[float] = None
    wall_ms: float = 0.0
    bins_used: int = 0
    trial: int = 0
    converged: Optional[bool] = None
    rng_algo: str = "pcg64"
    n: int = 0
    m: int = 0


def config_weight(inst: Vmk2Instance, config: Configuration) -> tuple[float, float]:
    w1 = 0.0
    w2 = 0.0
    for item_id in config.item_ids:
        it = inst.item(item_id)
        w1 += it.w1
        w2 += it.w2
    return w1, w2


def config_profit(inst: Vmk2Instance, config: Configuration) -> float:
    return sum(inst.item(i).profit for i in config.item_ids)


def is_feasible_config(inst: Vmk2Instance, config: Configuration, tol: float = FEAS_TOL) -> bool:
    w1, w2 = config_weight(inst, config)
    return w1 <= 1.0 + tol and w2 <= 1.0 + tol


def check_solution(inst: Vmk2Instance, sol: Vmk2Solution, tol: float = FEAS_TOL) -> ProfitReport:
    """Validate bin feasibility and compute the once-only profit of ``sol``.

    Raises :class:`UnknownItem` if the solution references an id missing from
    the instance and :class:`ValidationError` on a bin-count mismatch.
    """
    if len(sol.bins) != inst.m:
        raise ValidationError(f"solution has {len(sol.bins)} bins, instance has m={inst.m}")
    violations: list[BinViolation] = []
    packed: set[str] = set()
    for b, config in enumerate(sol.bins):
        w1, w2 = config_weight(inst, config)  # raises UnknownItem on bad ids
        if w1 > 1.0 + tol:
            violations.append(BinViolation(bin_index=b, dimension=1, total=w1))
        if w2 > 1.0 + tol:
            violations.append(BinViolation(bin_index=b, dimension=2, total=w2))
        packed |= config.item_ids
    profit = sum(inst.item(i).profit for i in packed)
    return ProfitReport(profit=profit, violations=violations)


def dedup_solution(sol: Vmk2Solution) -> Vmk2Solution:
    """Keep each item only in its lowest-index bin.

    Removing items from a feasible bin keeps it feasible, and the once-only
    profit is unchanged.
    """
    seen: set[str] = set()
    bins: list[Configuration] = []
    for config in sol.bins:
        kept = frozenset(i for i in config.item_ids if i not in seen)
        seen |= kept
        bins.append(Configuration(kept) if kept else EMPTY_CONFIG)
    return Vmk2Solution(bins=tuple(bins))


# ---------------------------------------------------------------------------
# File I/O
#
# JSON instance schema: {"m": <int>, "items": [{"id", "w1", "w2", "p"}, ...]}
# CSV alternative: header id,w1,w2,p with the bin count supplied separately.
# Solutions: {"bins": [[id, ...], ...]}
# ---------------------------------------------------------------------------


def _fmt17(x: float) -> str:
    return format(float(x), ".17g")


def canonical_dumps(inst: Vmk2Instance) -> str:
    """Canonical JSON: items sorted by id, fixed field order, 17-digit floats.

    Re-loading the canonical form reproduces the instance bit for bit, which
    makes fixture hashes reproducible.
    """
    rows = []
    for it in sorted(inst.items, key=lambda it: it.id):
        rows.append(
            f'{{"id": {json.dumps(it.id)}, "w1": {_fmt17(it.w1)}, '
            f'"w2": {_fmt17(it.w2)}, "p": {_fmt17(it.profit)}}}'
        )
    return f'{{"m": {inst.m}, "items": [' + ", ".join(rows) + "]}\n"


def instance_digest(inst: Vmk2Instance) -> str:
    return hashlib.sha256(canonical_dumps(inst).encode("utf-8")).hexdigest()


def _instance_from_obj(obj) -> Vmk2Instance:
    if not isinstance(obj, dict) or "m" not in obj or "items" not in obj:
        raise ParseError("instance JSON must be an object with 'm' and 'items'")
    if not isinstance(obj["m"], int):
        raise ParseError(f"'m' must be an integer, got {obj['m']!r}")
    items = []
    for k, row in enumerate(obj["items"]):
        try:
            items.append(
                Item(id=str(row["id"]), w1=float(row["w1"]), w2=float(row["w2"]), profit=float(row["p"]))
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"items[{k}]: expected fields id, w1, w2, p ({exc})") from exc
    return Vmk2Instance(items=tuple(items), m=obj["m"])


def load_instance(path: str | Path, fmt: Optional[str] = None, m: Optional[int] = None) -> Vmk2Instance:
    """Load and validate an instance from a JSON or CSV file.

    ``fmt`` is inferred from the suffix when omitted. CSV files carry no bin
    count, so ``m`` must be passed for them.
    """
    path = Path(path)
    if fmt is None:
        fmt = "csv" if path.suffix.lower() == ".csv" else "json"
    if fmt == "json":
        try:
            obj = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON ({exc})") from exc
        return _instance_from_obj(obj)
    if fmt == "csv":
        if m is None:
            raise ValidationError("CSV instances carry no bin count; pass m explicitly")
        items = []
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != ["id", "w1", "w2", "p"]:
                raise ParseError(f"{path}: expected CSV header 'id,w1,w2,p', got {reader.fieldnames}")
            for k, row in enumerate(reader):
                try:
                    items.append(Item(id=row["id"], w1=float(row["w1"]), w2=float(row["w2"]), profit=float(row["p"])))
                except (TypeError, ValueError) as exc:
                    raise ParseError(f"{path}: row {k + 2}: {exc}") from exc
        return Vmk2Instance(items=tuple(items), m=m)
    raise ValidationError(f"unknown instance format {fmt!r}")


def save_instance(inst: Vmk2Instance, path: str | Path) -> None:
    Path(path).write_text(canonical_dumps(inst))


def solution_to_obj(sol: Vmk2Solution) -> dict:
    return {"bins": [list(b.sorted_ids()) for b in sol.bins]}


def save_solution(sol: Vmk2Solution, path: str | Path) -> None:
    Path(path).write_text(json.dumps(solution_to_obj(sol), indent=1) + "\n")


def load_solution(path: str | Path) -> Vmk2Solution:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(obj, dict) or "bins" not in obj:
        raise ParseError("solution JSON must be an object with 'bins'")
    bins = tuple(Configuration(frozenset(str(i) for i in ids)) for ids in obj["bins"])
    return Vmk2Solution(bins=bins)
