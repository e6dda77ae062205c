"""Half-adder simplification options and bit-exact evaluation of a configuration."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from .arch import MultSpec, SearchPlan, SpecError

# widest output that still fits a signed 64-bit lane
_INT64_WIDTH = 62


class HaOption(enum.IntEnum):
    ELIMINATE = 0
    OR_SUM = 1
    DIRECT_COUT = 2
    EXACT = 3

    @property
    def code(self) -> str:
        return _CODES[self]

    @classmethod
    def from_code(cls, c: str) -> "HaOption":
        try:
            return _FROM_CODE[c.upper()]
        except KeyError:
            raise SpecError(f"unknown option symbol {c!r}; use E=Exact, O=OrSum, D=DirectCout, X=Eliminate") from None


_CODES = {HaOption.EXACT: "E", HaOption.OR_SUM: "O", HaOption.DIRECT_COUT: "D", HaOption.ELIMINATE: "X"}
_FROM_CODE = {v: k for k, v in _CODES.items()}


def ha_output(option: HaOption, a: int, b: int) -> Tuple[int, int]:
    """(sum, cout) of one simplified half adder. ``a`` is the even-row input."""
    if option == HaOption.EXACT:
        return a ^ b, a & b
    if option == HaOption.OR_SUM:
        return a | b, 0
    if option == HaOption.DIRECT_COUT:
        return 0, a
    return 0, 0


# number of output bits each option leaves in the compressed array
OUTPUT_BITS = {HaOption.EXACT: 2, HaOption.OR_SUM: 1, HaOption.DIRECT_COUT: 1, HaOption.ELIMINATE: 0}


@dataclass(frozen=True)
class ApproxConfig:
    options: Tuple[HaOption, ...]

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(HaOption(o) for o in self.options))

    def __len__(self):
        return len(self.options)

    def __iter__(self):
        return iter(self.options)

    @property
    def codes(self) -> str:
        return "".join(o.code for o in self.options)

    @classmethod
    def from_codes(cls, text: str) -> "ApproxConfig":
        return cls(tuple(HaOption.from_code(c) for c in text))

    @classmethod
    def all_of(cls, option: HaOption, k: int) -> "ApproxConfig":
        return cls((option,) * k)

    def __str__(self):
        return self.codes


def check_config(plan: SearchPlan, config: ApproxConfig) -> None:
    if len(config) != plan.k:
        raise SpecError(f"configuration has {len(config)} options but the plan searches {plan.k} HAs")


def slot_options(plan: SearchPlan, config: ApproxConfig):
    """Yield (slot, option) for every HA, reserved ones as Exact."""
    check_config(plan, config)
    yield from zip(plan.searched, config.options)
    for slot in plan.reserved_exact:
        yield slot, HaOption.EXACT


def _check_operands(spec: MultSpec, x, y):
    if np.any(np.asarray(x) < 0) or np.any(np.asarray(x) >= (1 << spec.m)):
        raise SpecError(f"x out of range for a {spec.m}-bit operand")
    if np.any(np.asarray(y) < 0) or np.any(np.asarray(y) >= (1 << spec.n)):
        raise SpecError(f"y out of range for a {spec.n}-bit operand")


def evaluate(spec: MultSpec, plan: SearchPlan, config: ApproxConfig, x: int, y: int) -> int:
    """Output of the approximate multiplier for one operand pair."""
    _check_operands(spec, x, y)

    def pp(ref):
        return (x >> ref.col) & (y >> ref.row) & 1

    total = 0
    for ref in plan.uncompressed:
        total += pp(ref) << ref.weight
    for slot, opt in slot_options(plan, config):
        s, c = ha_output(opt, pp(slot.input_a), pp(slot.input_b))
        total += (s << slot.weight) + (c << (slot.weight + 1))
    return total


def evaluate_array(spec: MultSpec, plan: SearchPlan, config: ApproxConfig, x, y) -> np.ndarray:
    """Vectorized :func:`evaluate` over operand arrays of equal shape."""
    x = np.asarray(x)
    y = np.asarray(y)
    _check_operands(spec, x, y)
    dtype = np.int64 if spec.out_width <= _INT64_WIDTH else object
    x = x.astype(dtype)
    y = y.astype(dtype)

    def pp(ref):
        return (x >> ref.col) & (y >> ref.row) & 1

    total = np.zeros(np.broadcast(x, y).shape, dtype=dtype)
    for ref in plan.uncompressed:
        total += pp(ref) << ref.weight
    for slot, opt in slot_options(plan, config):
        a, b = pp(slot.input_a), pp(slot.input_b)
        w = slot.weight
        if opt == HaOption.EXACT:
            total += ((a ^ b) << w) + ((a & b) << (w + 1))
        elif opt == HaOption.OR_SUM:
            total += (a | b) << w
        elif opt == HaOption.DIRECT_COUT:
            total += a << (w + 1)
    return total


def compressed_bit_count(spec: MultSpec, plan: SearchPlan, config: ApproxConfig) -> int:
    """Bits left for the final accumulation after HA compression."""
    return len(plan.uncompressed) + sum(OUTPUT_BITS[opt] for _, opt in slot_options(plan, config))


def option_counts(configs: Iterable[ApproxConfig], k: int) -> np.ndarray:
    """(k, 4) table of how often each option appears per dimension."""
    counts = np.zeros((k, 4), dtype=np.int64)
    for cfg in configs:
        counts[np.arange(k), np.fromiter((int(o) for o in cfg.options), dtype=np.int64, count=k)] += 1
    return counts


def config_from_indices(idx: Sequence[int]) -> ApproxConfig:
    return ApproxConfig(tuple(HaOption(int(i)) for i in idx))
