"""MAE, MSE and MM' of an approximate configuration under uniform inputs.

Absolute and squared errors are accumulated as exact integers; the means are
formed by a single division at the end.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .approx import ApproxConfig, HaOption, check_config
from .arch import MultSpec, SearchPlan, SpecError

EXHAUSTIVE_CAP = 26
DEFAULT_SAMPLES = 1 << 24
# inputs evaluated per vectorized block
_CHUNK = 1 << 20
# vectorized error path keeps |D| below 2**32 so 16-bit limbs cannot overflow
_VECTOR_WIDTH = 31


class WidthError(SpecError):
    pass


@dataclass(frozen=True)
class ErrorReport:
    mae: float
    mse: float
    mm_prime: float
    max_abs_error: int
    sum_abs: int
    sum_sq: int
    samples: int
    exhaustive: bool

    @classmethod
    def from_sums(cls, sum_abs: int, sum_sq: int, max_abs: int, samples: int, exhaustive: bool):
        mae = sum_abs / samples
        mse = sum_sq / samples
        return cls(mae, mse, mae * mse + 1.0, int(max_abs), int(sum_abs), int(sum_sq), int(samples), exhaustive)


def _square_sum(absd: np.ndarray) -> int:
    """Exact sum of squares of non-negative values below 2**32."""
    hi = absd >> 16
    lo = absd & 0xFFFF
    return (int(np.sum(hi * hi)) << 32) + (int(np.sum(hi * lo)) << 17) + int(np.sum(lo * lo))


class ErrorKernel:
    """Error D(x, y) = approx - exact for one shape and plan.

    Only HAs that differ from Exact contribute to D, so each contribution is
    the option's value minus the exact ``a + b`` at the HA's weight.
    """

    def __init__(self, spec: MultSpec, plan: SearchPlan):
        self.spec = spec
        self.plan = plan
        self.vectorized = spec.out_width <= _VECTOR_WIDTH

    def _bits(self, x, y):
        if self.spec.out_width > 62:
            x, y = np.asarray(x, dtype=object), np.asarray(y, dtype=object)
        return [
            ((x >> s.input_a.col) & (y >> s.input_a.row) & 1, (x >> s.input_b.col) & (y >> s.input_b.row) & 1)
            for s in self.plan.searched
        ]

    def deltas(self, config: ApproxConfig, x, y, bits=None):
        check_config(self.plan, config)
        if bits is None:
            bits = self._bits(x, y)
        d = np.zeros(np.shape(x), dtype=np.int64 if self.vectorized else object)
        for slot, opt, (a, b) in zip(self.plan.searched, config.options, bits):
            w = slot.weight
            if opt == HaOption.OR_SUM:
                d -= (a & b) << w
            elif opt == HaOption.DIRECT_COUT:
                d += (a - b) << w
            elif opt == HaOption.ELIMINATE:
                d -= (a + b) << w
        return d

    def sums(self, config: ApproxConfig, x, y, bits=None):
        """(sum |D|, sum D^2, max |D|) over the given operands."""
        d = np.abs(self.deltas(config, x, y, bits))
        if d.size == 0:
            return 0, 0, 0
        if self.vectorized:
            return int(np.sum(d)), _square_sum(d), int(np.max(d))
        return int(sum(d)), int(sum(v * v for v in d)), int(max(d))


def _exhaustive_operands(spec: MultSpec, start: int, stop: int):
    idx = np.arange(start, stop, dtype=np.int64)
    return idx & ((1 << spec.m) - 1), idx >> spec.m


@functools.lru_cache(maxsize=8)
def _cached_grid(spec: MultSpec, plan: SearchPlan):
    x, y = _exhaustive_operands(spec, 0, 1 << spec.out_width)
    kernel = ErrorKernel(spec, plan)
    return kernel, x, y, kernel._bits(x, y)


def error_metrics_exhaustive(
    spec: MultSpec, plan: SearchPlan, config: ApproxConfig, cap: int = EXHAUSTIVE_CAP
) -> ErrorReport:
    if spec.out_width > cap:
        raise WidthError(
            f"{spec} needs 2**{spec.out_width} evaluations, above the exhaustive cap of 2**{cap}; "
            "use error_metrics_sampled instead"
        )
    total = 1 << spec.out_width
    if total <= _CHUNK:
        kernel, x, y, bits = _cached_grid(spec, plan)
        sa, sq, mx = kernel.sums(config, x, y, bits)
        return ErrorReport.from_sums(sa, sq, mx, total, True)
    kernel = ErrorKernel(spec, plan)
    sa = sq = mx = 0
    for start in range(0, total, _CHUNK):
        x, y = _exhaustive_operands(spec, start, min(total, start + _CHUNK))
        a, b, c = kernel.sums(config, x, y)
        sa, sq, mx = sa + a, sq + b, max(mx, c)
    return ErrorReport.from_sums(sa, sq, mx, total, True)


def _draw(rng: np.random.Generator, bits: int, size: int) -> np.ndarray:
    if bits <= 62:
        return rng.integers(0, 1 << bits, size=size, dtype=np.int64)
    # wide operands: stitch 32-bit words into Python ints
    words = (bits + 31) // 32
    raw = rng.integers(0, 1 << 32, size=(size, words), dtype=np.int64)
    out = np.empty(size, dtype=object)
    mask = (1 << bits) - 1
    for i in range(size):
        v = 0
        for w in raw[i]:
            v = (v << 32) | int(w)
        out[i] = v & mask
    return out


def error_metrics_sampled(
    spec: MultSpec, plan: SearchPlan, config: ApproxConfig, n_samples: int = DEFAULT_SAMPLES, seed: int = 0
) -> ErrorReport:
    """Seeded estimate of the error metrics.

    When ``n_samples`` is a whole multiple of the input-space size, every
    operand pair is drawn equally often (in a seeded order) and the means are
    exact. Otherwise pairs are drawn i.i.d. uniform.
    """
    if n_samples < 1:
        raise SpecError("n_samples must be >= 1")
    check_config(plan, config)
    kernel = ErrorKernel(spec, plan)
    rng = np.random.default_rng(seed)
    space = 1 << spec.out_width if spec.out_width < 63 else None
    stratified = space is not None and n_samples % space == 0
    sa = sq = mx = 0

    def add(x, y):
        nonlocal sa, sq, mx
        a, b, c = kernel.sums(config, x, y)
        sa, sq, mx = sa + a, sq + b, max(mx, c)

    if stratified:
        for _ in range(n_samples // space):
            perm = rng.permutation(space)
            for start in range(0, space, _CHUNK):
                idx = perm[start:start + _CHUNK]
                add(idx & ((1 << spec.m) - 1), idx >> spec.m)
    else:
        for start in range(0, n_samples, _CHUNK):
            size = min(_CHUNK, n_samples - start)
            add(_draw(rng, spec.m, size), _draw(rng, spec.n, size))
    return ErrorReport.from_sums(sa, sq, mx, n_samples, False)


def error_metrics(spec: MultSpec, plan: SearchPlan, config: ApproxConfig, cap: int = EXHAUSTIVE_CAP,
                  n_samples: int = DEFAULT_SAMPLES, seed: int = 0) -> ErrorReport:
    """Exhaustive when the width allows it, sampled otherwise."""
    if spec.out_width <= cap:
        return error_metrics_exhaustive(spec, plan, config, cap)
    return error_metrics_sampled(spec, plan, config, n_samples, seed)
