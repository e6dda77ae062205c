"""Partial-product grid and half-adder array of an N x M unsigned multiplier.

Row ``i`` of the grid holds the AND of every bit of ``x`` with bit ``i`` of
``y``; column ``j`` indexes the bit of ``x``. Rows are paired (0,1), (2,3), ...
and each pair is compressed by ``m - 1`` half adders. An odd last row is left
uncompressed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Sequence


class SpecError(ValueError):
    """Raised for an invalid multiplier shape or search parameter."""


@dataclass(frozen=True, order=True)
class MultSpec:
    n: int  # rows of PPs, bit width of y
    m: int  # PPs per row, bit width of x

    def __post_init__(self):
        for name in ("n", "m"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise SpecError(f"{name} must be an integer, got {v!r}")
            if v < 2:
                raise SpecError(f"{name} must be >= 2 (a 1-bit operand has no HA array), got {v}")

    @property
    def pairs(self) -> int:
        return self.n // 2

    @property
    def out_width(self) -> int:
        return self.n + self.m

    def __str__(self):
        return f"{self.n}x{self.m}"


@dataclass(frozen=True, order=True)
class PpRef:
    row: int
    col: int

    @property
    def weight(self) -> int:
        return self.row + self.col

    def index(self, m: int) -> int:
        """Flat label used in the 4x4 figure (PP_0 .. PP_F), row-major."""
        return self.row * m + self.col


@dataclass(frozen=True)
class HaSlot:
    pair: int
    col: int
    input_a: PpRef = field(compare=False)
    input_b: PpRef = field(compare=False)

    @property
    def weight(self) -> int:
        return 2 * self.pair + self.col

    @property
    def key(self):
        return (self.weight, self.pair, self.col)


@dataclass(frozen=True)
class SearchPlan:
    spec: MultSpec
    searched: tuple  # of HaSlot, ascending (weight, pair, col)
    reserved_exact: tuple  # of HaSlot
    uncompressed: tuple  # of PpRef
    r: float

    @property
    def k(self) -> int:
        return len(self.searched)

    @property
    def slots(self) -> tuple:
        return self.searched + self.reserved_exact


def build_pp_array(spec: MultSpec) -> List[List[PpRef]]:
    return [[PpRef(i, j) for j in range(spec.m)] for i in range(spec.n)]


def ha_slot(pair: int, col: int) -> HaSlot:
    return HaSlot(pair, col, PpRef(2 * pair, col), PpRef(2 * pair + 1, col - 1))


def build_ha_array(spec: MultSpec) -> List[HaSlot]:
    """All (m-1) * floor(n/2) half adders, ordered by (pair, col)."""
    return [ha_slot(p, j) for p in range(spec.pairs) for j in range(1, spec.m)]


def ha_weight(slot: HaSlot) -> int:
    return slot.weight


def ha_count(spec: MultSpec) -> int:
    return (spec.m - 1) * (spec.n // 2)


def uncompressed_count(spec: MultSpec) -> int:
    return spec.n + (spec.n % 2) * (spec.m - 1)


def uncompressed_pps(spec: MultSpec) -> List[PpRef]:
    """PP terms consumed by no half adder, in row-major order."""
    out = []
    for i in range(spec.n):
        for j in range(spec.m):
            if i == spec.n - 1 and spec.n % 2:
                out.append(PpRef(i, j))
            elif i % 2 == 0 and j == 0:
                out.append(PpRef(i, j))
            elif i % 2 == 1 and j == spec.m - 1:
                out.append(PpRef(i, j))
    return out


def search_size(s: int, r: float, rounding: str = "nearest") -> int:
    """Number of HAs handed to the optimizer for ``s`` slots and reduction ``r``.

    ``nearest`` rounds halves up; ``ceil`` rounds any fraction up.
    """
    if not 0.0 <= r <= 1.0:
        raise SpecError(f"r must lie in [0, 1], got {r}")
    # recover the decimal the user typed, so 10 * 0.35 is 3.5 and not 3.4999...
    prod = s * Fraction(r).limit_denominator(10**9)
    if rounding == "nearest":
        return math.floor(prod + Fraction(1, 2))
    if rounding == "ceil":
        return math.ceil(prod)
    raise SpecError(f"unknown rounding mode {rounding!r} (expected 'nearest' or 'ceil')")


def select_search_set(
    slots: Sequence[HaSlot], r: float, spec: MultSpec = None, rounding: str = "nearest"
) -> SearchPlan:
    if spec is None:
        if not slots:
            raise SpecError("cannot infer the multiplier shape from an empty slot list")
        # slots only pin down n up to parity; callers with odd n pass spec
        m = max(s.col for s in slots) + 1
        n = 2 * (max(s.pair for s in slots) + 1)
        spec = MultSpec(n, m)
    ordered = sorted(slots, key=lambda s: s.key)
    k = search_size(len(ordered), r, rounding)
    return SearchPlan(
        spec=spec,
        searched=tuple(ordered[:k]),
        reserved_exact=tuple(ordered[k:]),
        uncompressed=tuple(uncompressed_pps(spec)),
        r=float(r),
    )


def make_plan(spec: MultSpec, r: float, rounding: str = "nearest") -> SearchPlan:
    return select_search_set(build_ha_array(spec), r, spec=spec, rounding=rounding)
