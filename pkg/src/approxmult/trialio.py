"""Append-only trial log.

A log is UTF-8 JSON Lines. The first record (``"kind": "run"``) stores the
settings needed to rebuild the search plan and continue the seeded stream;
every later record (``"kind": "trial"``) is one evaluated configuration.
Wall-clock times go to a ``timing.jsonl`` sidecar so that logs of identical
runs are byte-identical.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from .approx import ApproxConfig
from .costmodel import CostBreakdown
from .errmetrics import ErrorReport
from .optimizer import Trial

log = logging.getLogger(__name__)

LOG_VERSION = 1


class LogError(ValueError):
    pass


def trial_record(t: Trial) -> dict:
    rec = {
        "kind": "trial",
        "index": t.index,
        "fingerprint": t.fingerprint,
        "options": t.config.codes,
        "origin": t.origin,
        "seed": t.seed,
        "status": t.status,
    }
    if t.report is not None:
        r = t.report
        rec.update(mae=r.mae, mse=r.mse, mm_prime=r.mm_prime, sum_abs=r.sum_abs, sum_sq=r.sum_sq,
                   max_abs_error=r.max_abs_error, samples=r.samples, exhaustive=r.exhaustive)
    if t.cost is not None:
        c = t.cost
        rec.update(area=c.area, delay=c.delay, power=c.power, pda=c.pda, source=c.source)
    rec["pdae"] = t.pdae if math.isfinite(t.pdae) else None
    if t.message:
        rec["message"] = t.message
    return rec


def dumps(rec: dict) -> str:
    return json.dumps(rec, separators=(", ", ": "), allow_nan=False)


def serialize_trial(t: Trial) -> str:
    return dumps(trial_record(t))


def parse_trial(rec) -> Trial:
    if isinstance(rec, str):
        rec = json.loads(rec)
    if rec.get("kind") != "trial":
        raise LogError("not a trial record")
    report = cost = None
    if "mae" in rec:
        report = ErrorReport(float(rec["mae"]), float(rec["mse"]), float(rec["mm_prime"]), int(rec["max_abs_error"]),
                             int(rec["sum_abs"]), int(rec["sum_sq"]), int(rec["samples"]), bool(rec["exhaustive"]))
    if "pda" in rec:
        cost = CostBreakdown(float(rec["area"]), float(rec["delay"]), float(rec["power"]), float(rec["pda"]),
                             str(rec["source"]))
    return Trial(
        index=int(rec["index"]),
        config=ApproxConfig.from_codes(rec["options"]),
        fingerprint=str(rec["fingerprint"]),
        report=report,
        cost=cost,
        pdae=math.inf if rec["pdae"] is None else float(rec["pdae"]),
        origin=str(rec["origin"]),
        seed=int(rec["seed"]),
        status=str(rec.get("status", "ok")),
        message=str(rec.get("message", "")),
    )


@dataclass
class TrialLog:
    header: Optional[dict]
    trials: List[Trial] = field(default_factory=list)
    skipped: int = 0  # corrupt lines ignored while reading


def read_log(path, strict: bool = False) -> TrialLog:
    """Read a log; corrupt lines are skipped with a warning unless ``strict``."""
    header, trials, skipped = None, [], 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if rec.get("kind") == "run":
                    if header is not None:
                        raise LogError("second run header")
                    header = rec
                    continue
                trials.append(parse_trial(rec))
            except (ValueError, KeyError, TypeError, AttributeError) as exc:
                if strict:
                    raise LogError(f"{path}:{lineno}: corrupt record ({exc})") from None
                log.warning("%s:%d: skipping corrupt record (%s)", path, lineno, exc)
                skipped += 1
    return TrialLog(header, trials, skipped)


class LogWriter:
    """Single writer; flushes and fsyncs after every record."""

    def __init__(self, path, header: dict = None, timing_path=None):
        self.path = Path(path)
        self._fh = open(self.path, "a", encoding="utf-8")
        self._timing = open(timing_path, "a", encoding="utf-8") if timing_path else None
        if header is not None:
            self._write(self._fh, dumps({"kind": "run", "version": LOG_VERSION, **header}))

    @staticmethod
    def _write(fh, line):
        fh.write(line + "\n")
        fh.flush()
        os.fsync(fh.fileno())

    def append(self, t: Trial, wall_time: float = None):
        self._write(self._fh, serialize_trial(t))
        if self._timing is not None and wall_time is not None:
            self._write(self._timing, json.dumps({"index": t.index, "wall_time": wall_time}))

    def close(self):
        self._fh.close()
        if self._timing is not None:
            self._timing.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
