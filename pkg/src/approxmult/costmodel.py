"""Hardware cost (PDA) of a configuration and the PDAE objective.

Two sources exist. The proxy model is a deterministic stand-in for vendor
synthesis: one LUT per HA that still needs logic, plus one LUT-equivalent per
bit entering the carry-chain accumulation, with a log-depth adder tree for
delay and power tied to area. External mode looks PDA triples up in a
measurement file keyed by configuration fingerprint.

Measurement file format (UTF-8, one JSON object per line; blank lines and
lines starting with ``#`` are ignored)::

    {"fingerprint": "<32 hex chars>", "area": 41.0, "delay": 3.2, "power": 1.7}
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict

from .approx import ApproxConfig, HaOption, compressed_bit_count, slot_options
from .arch import MultSpec, SearchPlan

log = logging.getLogger(__name__)

# LUTs charged per HA for its logic function; wires and ground are free
HA_LUTS = {HaOption.EXACT: 1, HaOption.OR_SUM: 1, HaOption.DIRECT_COUT: 0, HaOption.ELIMINATE: 0}


class UnmeasuredError(LookupError):
    """External cost mode was asked for a configuration with no measurement."""


class MeasurementError(ValueError):
    pass


@dataclass(frozen=True)
class CostBreakdown:
    area: float
    delay: float
    power: float
    pda: float
    source: str  # "proxy" or "external"

    @classmethod
    def of(cls, area, delay, power, source):
        return cls(float(area), float(delay), float(power), float(area) * float(delay) * float(power), source)


def fingerprint(spec: MultSpec, plan: SearchPlan, config: ApproxConfig) -> str:
    """Canonical hash of the circuit a configuration describes.

    Every HA is listed in (pair, col) order with its effective option, so two
    plans that end up with the same circuit share a fingerprint.
    """
    opts = sorted(((s.pair, s.col), o.code) for s, o in slot_options(plan, config))
    text = f"amult-v1;n={spec.n};m={spec.m};" + ",".join(f"{p}.{c}:{o}" for (p, c), o in opts)
    return hashlib.sha256(text.encode("ascii")).hexdigest()[:32]


def accumulated_rows(spec: MultSpec) -> int:
    return 2 * spec.pairs + spec.n % 2


def proxy_cost(spec: MultSpec, plan: SearchPlan, config: ApproxConfig) -> CostBreakdown:
    area = sum(HA_LUTS[o] for _, o in slot_options(plan, config)) + compressed_bit_count(spec, plan, config)
    delay = 1 + math.ceil(math.log2(accumulated_rows(spec)))
    return CostBreakdown.of(area, delay, area, "proxy")


def pdae(pda: float, mae: float, mse: float) -> float:
    return pda * math.log2(mae * mse + 1.0)


def pda_improvement(pda_exact: float, pda_approx: float) -> float:
    """Percentage PDA gain of an approximate design over the exact one."""
    if pda_exact <= 0:
        raise ValueError("pda_exact must be positive")
    return (pda_exact - pda_approx) / pda_exact * 100


@dataclass
class MeasurementTable:
    entries: Dict[str, CostBreakdown] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def __contains__(self, fp):
        return fp in self.entries

    def lookup(self, fp: str) -> CostBreakdown:
        try:
            return self.entries[fp]
        except KeyError:
            raise UnmeasuredError(f"configuration {fp} is unmeasured") from None


def load_measurements(path) -> MeasurementTable:
    """Read a measurement file.

    Records with non-positive or missing fields are rejected with a logged
    diagnostic; malformed JSON raises :class:`MeasurementError`. A repeated
    fingerprint replaces the earlier record and logs a warning.
    """
    table = MeasurementTable()
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MeasurementError(f"{path}:{lineno}: not valid JSON ({exc.msg})") from None
            if not isinstance(rec, dict):
                raise MeasurementError(f"{path}:{lineno}: expected a JSON object")
            try:
                fp = str(rec["fingerprint"])
                vals = [float(rec[k]) for k in ("area", "delay", "power")]
            except (KeyError, TypeError, ValueError) as exc:
                log.warning("%s:%d: rejected record (%s)", path, lineno, exc)
                continue
            if not all(math.isfinite(v) and v > 0 for v in vals):
                log.warning("%s:%d: rejected record for %s: area, delay and power must be positive", path, lineno, fp)
                continue
            if fp in table.entries:
                log.warning("%s:%d: duplicate fingerprint %s, later record wins", path, lineno, fp)
            table.entries[fp] = CostBreakdown.of(*vals, "external")
    return table


class ProxyCostModel:
    mode = "proxy"

    def __call__(self, spec, plan, config) -> CostBreakdown:
        return proxy_cost(spec, plan, config)


class ExternalCostModel:
    mode = "external"

    def __init__(self, table: MeasurementTable):
        self.table = table

    def __call__(self, spec, plan, config) -> CostBreakdown:
        return self.table.lookup(fingerprint(spec, plan, config))
