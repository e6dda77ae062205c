"""Pareto front over (PDA, MM') and run summaries."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

from .costmodel import pda_improvement

# MM' windows used when comparing against published multiplier libraries
DEFAULT_RANGES = ((1e3, 1e7), (1e3, 1e8), (1e4, 1e7), (1e4, 1e8))


@dataclass(frozen=True)
class FrontPoint:
    pda: float
    mm_prime: float
    trial_index: int


def dominates(a, b) -> bool:
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


def pareto_front(points: Iterable[Tuple]) -> List[FrontPoint]:
    """Non-dominated points sorted by PDA.

    Items are ``(pda, mm_prime)`` or ``(pda, mm_prime, trial_index)``; without
    an index the position in ``points`` is used. Identical coordinate pairs
    keep only the earliest trial.
    """
    pts = []
    for pos, p in enumerate(points):
        pda, mm = float(p[0]), float(p[1])
        if not (math.isfinite(pda) and math.isfinite(mm)):
            raise ValueError(f"non-finite point {p!r}")
        pts.append((pda, mm, int(p[2]) if len(p) > 2 else pos))
    pts.sort()
    front, best_mm = [], math.inf
    for pda, mm, idx in pts:
        if mm < best_mm:
            front.append(FrontPoint(pda, mm, idx))
            best_mm = mm
    return front


def trial_front(trials) -> List[FrontPoint]:
    return pareto_front((t.cost.pda, t.report.mm_prime, t.index) for t in trials if t.ok)


def _row(t, pda_exact):
    return {
        "trial_index": t.index,
        "options": t.config.codes,
        "fingerprint": t.fingerprint,
        "pda": t.cost.pda,
        "mm_prime": t.report.mm_prime,
        "mae": t.report.mae,
        "mse": t.report.mse,
        "pdae": t.pdae,
        "improvement_pct": None if pda_exact is None else pda_improvement(pda_exact, t.cost.pda),
    }


def summarize(history: Sequence, pda_exact: Optional[float], mm_ranges=DEFAULT_RANGES) -> dict:
    ok = [t for t in history if t.ok]
    by_index = {t.index: t for t in ok}
    origins = {}
    for t in history:
        origins[t.origin] = origins.get(t.origin, 0) + 1
    best = min(ok, key=lambda t: (t.pdae, t.index), default=None)
    ranges = []
    for lo, hi in mm_ranges:
        inside = [t for t in ok if lo <= t.report.mm_prime <= hi]
        if inside:
            t = min(inside, key=lambda t: (t.pdae, t.index))
            ranges.append({"mm_lo": lo, "mm_hi": hi, "candidate": _row(t, pda_exact)})
        else:
            ranges.append({"mm_lo": lo, "mm_hi": hi, "candidate": None, "note": "no candidate"})
    return {
        "trials": len(history),
        "failed": len(history) - len(ok),
        "origins": dict(sorted(origins.items())),
        "pda_exact": pda_exact,
        "best": None if best is None else _row(best, pda_exact),
        "front": [_row(by_index[p.trial_index], pda_exact) for p in trial_front(ok)],
        "ranges": ranges,
    }


def _fmt(v, spec=".6g"):
    return "-" if v is None else format(v, spec)


def render_table(summary: dict) -> str:
    lines = [
        f"trials: {summary['trials']}  failed: {summary['failed']}  "
        + "  ".join(f"{k}: {v}" for k, v in summary["origins"].items()),
        f"exact PDA: {_fmt(summary['pda_exact'])}",
    ]
    best = summary["best"]
    if best:
        lines.append(f"best PDAE: {_fmt(best['pdae'])} (trial {best['trial_index']}, {best['options']})")
    lines += ["", "Pareto front", f"{'trial':>6} {'PDA':>12} {'MM_prime':>14} {'PDAE':>12} {'imp%':>8}  options"]
    for r in summary["front"]:
        lines.append(
            f"{r['trial_index']:>6} {_fmt(r['pda']):>12} {_fmt(r['mm_prime']):>14} "
            f"{_fmt(r['pdae']):>12} {_fmt(r['improvement_pct'], '.2f'):>8}  {r['options']}"
        )
    lines += ["", "Best PDAE per MM' range"]
    for r in summary["ranges"]:
        label = f"[{r['mm_lo']:.0e}, {r['mm_hi']:.0e}]"
        c = r["candidate"]
        if c is None:
            lines.append(f"  {label:<16} no candidate")
        else:
            lines.append(f"  {label:<16} PDAE {_fmt(c['pdae'])} (trial {c['trial_index']}, "
                         f"imp {_fmt(c['improvement_pct'], '.2f')}%)")
    return "\n".join(lines) + "\n"


def write_report(out_dir, summary: dict, trials: Sequence) -> List[Path]:
    """front.json (machine-readable), report.txt (table), plot.tsv (pda, mm')."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    front_ids = {r["trial_index"] for r in summary["front"]}
    paths = [out / "front.json", out / "report.txt", out / "plot.tsv"]
    paths[0].write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    paths[1].write_text(render_table(summary), encoding="utf-8")
    rows = ["trial\tpda\tmm_prime\ton_front"]
    rows += [f"{t.index}\t{t.cost.pda!r}\t{t.report.mm_prime!r}\t{int(t.index in front_ids)}" for t in trials if t.ok]
    paths[2].write_text("\n".join(rows) + "\n", encoding="utf-8")
    return paths

