"""Command line: search, sweep, pareto, emit and eval.

Exit codes: 0 ok, 1 usage error, 2 runtime error or nothing to report.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

from .approx import ApproxConfig, HaOption
from .arch import MultSpec, SpecError, ha_count, make_plan, search_size
from .codegen import emit_approx, emit_exact, emit_testbench
from .costmodel import (ExternalCostModel, ProxyCostModel, UnmeasuredError, fingerprint, load_measurements,
                        pda_improvement)
from .errmetrics import DEFAULT_SAMPLES, EXHAUSTIVE_CAP
from .optimizer import TpeParams, evaluate_config, run_search
from .pareto import render_table, summarize, trial_front, write_report
from .trialio import LogWriter, read_log

log = logging.getLogger("approxmult")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
WORKERS_ENV = "APPROXMULT_WORKERS"
SWEEP_RS = (0.3, 0.4, 0.5, 0.6, 0.7)
LOG_NAME = "trials.jsonl"
TIMING_NAME = "timing.jsonl"


class UsageError(Exception):
    pass


class RuntimeFailure(Exception):
    pass


@dataclass
class RunConfig:
    n: int = 8
    m: int = 8
    r: float = 0.5
    budget: int = 1000
    seed: int = 0
    workers: int = 1
    cost_mode: str = "proxy"
    measurement_path: Optional[str] = None
    output_dir: str = "runs"
    rounding: str = "nearest"
    strategy: str = "tpe"
    exhaustive_cap: int = EXHAUSTIVE_CAP
    n_samples: int = DEFAULT_SAMPLES
    tpe: TpeParams = field(default_factory=TpeParams)

    def problems(self) -> List[str]:
        out = []
        if self.n < 2 or self.m < 2:
            out.append(f"bit widths must be >= 2 (got n={self.n}, m={self.m})")
        if not 0.0 <= self.r <= 1.0:
            out.append(f"r must lie in [0, 1] (got {self.r})")
        if self.budget < 1:
            out.append(f"budget must be >= 1 (got {self.budget})")
        if self.workers < 1:
            out.append(f"workers must be >= 1 (got {self.workers})")
        if self.cost_mode not in ("proxy", "external"):
            out.append(f"cost mode must be proxy or external (got {self.cost_mode})")
        if self.cost_mode == "external" and not self.measurement_path:
            out.append("external cost mode needs --measurements")
        if self.rounding not in ("nearest", "ceil"):
            out.append(f"rounding must be nearest or ceil (got {self.rounding})")
        if self.strategy not in ("tpe", "random"):
            out.append(f"strategy must be tpe or random (got {self.strategy})")
        if self.n_samples < 1:
            out.append("samples must be >= 1")
        try:
            self.tpe.validate()
        except SpecError as exc:
            out.append(str(exc))
        return out

    def validate(self):
        probs = self.problems()
        if probs:
            raise UsageError("invalid configuration:\n  " + "\n  ".join(probs))

    def header(self) -> dict:
        tpe = self.tpe.resolved(self.budget, self.workers)
        return {
            "n": self.n, "m": self.m, "r": self.r, "rounding": self.rounding, "seed": self.seed,
            "strategy": self.strategy, "cost_mode": self.cost_mode, "exhaustive_cap": self.exhaustive_cap,
            "n_samples": self.n_samples, "n_startup": tpe.n_startup, "gamma": tpe.gamma,
            "prior_weight": tpe.prior_weight, "n_candidates": tpe.n_candidates, "batch": tpe.batch,
        }


def cost_model_for(mode: str, measurement_path: Optional[str]):
    if mode == "external":
        return ExternalCostModel(load_measurements(measurement_path))
    return ProxyCostModel()


def _exact_pda(spec, plan, cost_model, trials):
    exact = ApproxConfig.all_of(HaOption.EXACT, plan.k)
    try:
        return cost_model(spec, plan, exact).pda
    except UnmeasuredError:
        for t in trials:
            if t.ok and t.config == exact:
                return t.cost.pda
        log.warning("exact configuration is unmeasured; improvement percentages omitted")
        return None


# --- search ---------------------------------------------------------------

_RESUME_KEYS = ("n", "m", "r", "rounding", "seed", "strategy", "cost_mode", "exhaustive_cap", "n_samples",
                "n_startup", "gamma", "prior_weight", "n_candidates", "batch")


def _drop_partial_line(path: Path):
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        path.write_bytes(data[: data.rfind(b"\n") + 1])
        log.warning("%s: dropped a partially written final line", path)


def search(cfg: RunConfig, resume: bool = False) -> Path:
    cfg.validate()
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise RuntimeFailure(f"cannot create output directory {out}: {exc}") from None
    log_path = out / LOG_NAME
    header = stored = cfg.header()
    history = []
    if log_path.exists() and log_path.stat().st_size:
        if not resume:
            raise RuntimeFailure(f"{log_path} exists; pass --resume to continue it or choose another --output-dir")
        _drop_partial_line(log_path)
        prev = read_log(log_path, strict=True)
        if prev.header is None:
            raise RuntimeFailure(f"{log_path} has no run header")
        diff = [k for k in _RESUME_KEYS if prev.header.get(k) != header[k]]
        if diff:
            raise RuntimeFailure(f"cannot resume {log_path}: settings differ in {', '.join(diff)}")
        history = prev.trials
        header, stored = None, prev.header
    spec = MultSpec(cfg.n, cfg.m)
    params = TpeParams(**{k: getattr(cfg.tpe, k) for k in ("gamma", "prior_weight", "n_candidates")},
                       n_startup=stored["n_startup"], batch=stored["batch"])
    cost_model = cost_model_for(cfg.cost_mode, cfg.measurement_path)
    if search_size(ha_count(spec), cfg.r, cfg.rounding) == 0:
        log.warning("r=%s searches no HA; every trial is the exact multiplier", cfg.r)
    try:
        writer = LogWriter(log_path, header, out / TIMING_NAME)
    except OSError as exc:
        raise RuntimeFailure(f"cannot write {log_path}: {exc}") from None
    t0 = time.time()
    with writer:
        trials = run_search(
            spec, cfg.r, cfg.budget, seed=cfg.seed, workers=cfg.workers, cost_model=cost_model, params=params,
            rounding=cfg.rounding, strategy=cfg.strategy, history=history,
            on_trial=lambda t: writer.append(t, round(time.time() - t0, 6)),
            cap=cfg.exhaustive_cap, n_samples=cfg.n_samples,
        )
    failed = sum(not t.ok for t in trials)
    if failed:
        log.warning("%d trial(s) failed: no external measurement", failed)
    ok = [t for t in trials if t.ok]
    if ok:
        best = min(ok, key=lambda t: (t.pdae, t.index))
        print(f"{len(trials)} trials -> {log_path}; best PDAE {best.pdae:.6g} (trial {best.index}, {best.config.codes})")
    return log_path


# --- pareto / emit --------------------------------------------------------

def _load(log_path):
    path = Path(log_path)
    if not path.exists():
        raise RuntimeFailure(f"no such log: {path}")
    tl = read_log(path)
    if tl.skipped:
        log.warning("%s: skipped %d corrupt line(s)", path, tl.skipped)
    if tl.header is None:
        raise RuntimeFailure(f"{path} has no run header")
    h = tl.header
    spec = MultSpec(int(h["n"]), int(h["m"]))
    plan = make_plan(spec, float(h["r"]), h.get("rounding", "nearest"))
    return tl, spec, plan


def pareto(log_path, output_dir=None, measurement_path=None) -> int:
    tl, spec, plan = _load(log_path)
    if not any(t.ok for t in tl.trials):
        log.warning("%s: no completed trials, empty report", log_path)
    mode = tl.header.get("cost_mode", "proxy")
    cost_model = ProxyCostModel() if mode == "proxy" or not measurement_path else cost_model_for(mode, measurement_path)
    pda_exact = _exact_pda(spec, plan, cost_model, tl.trials)
    summary = summarize(tl.trials, pda_exact)
    summary["shape"] = {"n": spec.n, "m": spec.m, "r": plan.r, "k": plan.k}
    summary["skipped_lines"] = tl.skipped
    out = Path(output_dir) if output_dir else Path(log_path).parent
    write_report(out, summary, tl.trials)
    sys.stdout.write(render_table(summary))
    return EXIT_OK if summary["front"] else EXIT_RUNTIME


def emit(log_path, selector: str = "front", output_dir=None, prefix: str = "amult") -> List[Path]:
    tl, spec, plan = _load(log_path)
    by_index = {t.index: t for t in tl.trials}
    if selector == "front":
        chosen = [by_index[p.trial_index] for p in trial_front(tl.trials)]
    else:
        try:
            ids = [int(s) for s in selector.split(",") if s.strip()]
        except ValueError:
            raise UsageError(f"selector must be 'front' or a comma-separated list of trial indices, got {selector!r}")
        missing = [i for i in ids if i not in by_index]
        if missing:
            raise RuntimeFailure(f"unknown trial index {', '.join(map(str, missing))}")
        chosen = [by_index[i] for i in ids]
    out = Path(output_dir) if output_dir else Path(log_path).parent / "rtl"
    out.mkdir(parents=True, exist_ok=True)
    exact_name = f"{prefix}_exact_{spec.n}x{spec.m}"
    written = [out / f"{exact_name}.v"]
    written[0].write_text(emit_exact(spec, exact_name).text, encoding="utf-8")
    for t in chosen:
        name = f"{prefix}_{spec.n}x{spec.m}_t{t.index}"
        notes = {"trial": t.index}
        if t.ok:
            notes.update(mae=repr(t.report.mae), mse=repr(t.report.mse), mm_prime=repr(t.report.mm_prime),
                         pda=repr(t.cost.pda), pdae=repr(t.pdae))
        art = emit_approx(spec, plan, t.config, name, notes)
        if art.fingerprint != t.fingerprint:
            raise RuntimeFailure(f"trial {t.index}: fingerprint mismatch between log and configuration")
        tb = emit_testbench(spec, name, exact_name)
        for a in (art, tb):
            p = out / f"{a.module_name}.v"
            p.write_text(a.text, encoding="utf-8")
            written.append(p)
    print(f"wrote {len(written)} file(s) to {out}")
    return written


# --- eval -----------------------------------------------------------------

def evaluate_string(n, m, r, options, rounding="nearest", cost_mode="proxy", measurement_path=None,
                    cap=EXHAUSTIVE_CAP, n_samples=DEFAULT_SAMPLES, seed=0) -> dict:
    spec = MultSpec(n, m)
    plan = make_plan(spec, r, rounding)
    if options is None:
        options = "E" * plan.k
    try:
        config = ApproxConfig.from_codes(options)
    except SpecError as exc:
        raise UsageError(str(exc)) from None
    if len(config) != plan.k:
        raise UsageError(f"option string has {len(config)} symbols; {spec} at r={r} searches {plan.k} HAs")
    cost_model = cost_model_for(cost_mode, measurement_path)
    report, cost, value = evaluate_config(spec, plan, config, cost_model, cap, n_samples, seed)
    exact = ApproxConfig.all_of(HaOption.EXACT, plan.k)
    try:
        imp = pda_improvement(cost_model(spec, plan, exact).pda, cost.pda)
    except UnmeasuredError:
        imp = None
    return {"shape": str(spec), "r": r, "k": plan.k, "options": config.codes,
            "fingerprint": fingerprint(spec, plan, config), **asdict(report), **asdict(cost), "pdae": value,
            "improvement_pct": imp}


# --- argument parsing -----------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _default_workers():
    raw = os.environ.get(WORKERS_ENV)
    if raw is None:
        return 1
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _add_run_args(p, with_r=True):
    p.add_argument("--n", type=int, default=8, help="bit width of y (PP rows)")
    p.add_argument("--m", type=int, default=8, help="bit width of x (PPs per row)")
    if with_r:
        p.add_argument("--r", type=float, default=0.5, help="desired area reduction fraction")
    p.add_argument("--budget", type=int, default=1000, help="trials to evaluate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None, help=f"evaluation threads (env {WORKERS_ENV})")
    p.add_argument("--cost-mode", choices=("proxy", "external"), default="proxy")
    p.add_argument("--measurements", default=None, help="measurement file for external cost mode")
    p.add_argument("--output-dir", default="runs")
    p.add_argument("--rounding", choices=("nearest", "ceil"), default="nearest")
    p.add_argument("--strategy", choices=("tpe", "random"), default="tpe")
    p.add_argument("--resume", action="store_true", help="continue an interrupted log")
    p.add_argument("--exhaustive-cap", type=int, default=EXHAUSTIVE_CAP)
    p.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="error samples beyond the exhaustive cap")
    p.add_argument("--n-startup", type=int, default=None)
    p.add_argument("--gamma", type=float, default=0.25)
    p.add_argument("--prior-weight", type=float, default=1.0)
    p.add_argument("--n-candidates", type=int, default=24)
    p.add_argument("--batch", type=int, default=None)


def _run_config(a, r=None, output_dir=None) -> RunConfig:
    return RunConfig(
        n=a.n, m=a.m, r=a.r if r is None else r, budget=a.budget, seed=a.seed,
        workers=a.workers if a.workers is not None else _default_workers(),
        cost_mode=a.cost_mode, measurement_path=a.measurements, output_dir=output_dir or a.output_dir,
        rounding=a.rounding, strategy=a.strategy, exhaustive_cap=a.exhaustive_cap, n_samples=a.samples,
        tpe=TpeParams(n_startup=a.n_startup, gamma=a.gamma, prior_weight=a.prior_weight,
                      n_candidates=a.n_candidates, batch=a.batch),
    )


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="approxmult", description="Approximate multiplier generator for FPGAs")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("search", help="run one TPE search")
    _add_run_args(p)

    p = sub.add_parser("sweep", help="search each r of a schedule into its own log")
    _add_run_args(p, with_r=False)
    p.add_argument("--rs", type=float, nargs="+", default=list(SWEEP_RS))

    p = sub.add_parser("pareto", help="extract the Pareto front of a trial log")
    p.add_argument("log")
    p.add_argument("--output-dir", default=None)
    p.add_argument("--measurements", default=None, help="needed to price the exact design in external mode")

    p = sub.add_parser("emit", help="write Verilog for selected trials")
    p.add_argument("log")
    p.add_argument("--select", default="front", help="'front' or comma-separated trial indices")
    p.add_argument("--output-dir", default=None)
    p.add_argument("--prefix", default="amult")

    p = sub.add_parser("eval", help="evaluate one option string")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--options", default=None, help="E=Exact O=OrSum D=DirectCout X=Eliminate, one per searched HA")
    p.add_argument("--rounding", choices=("nearest", "ceil"), default="nearest")
    p.add_argument("--cost-mode", choices=("proxy", "external"), default="proxy")
    p.add_argument("--measurements", default=None)
    p.add_argument("--json", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        if args.cmd == "search":
            search(_run_config(args), resume=args.resume)
        elif args.cmd == "sweep":
            for r in args.rs:
                cfg = _run_config(args, r=r, output_dir=str(Path(args.output_dir) / f"r{r:g}"))
                search(cfg, resume=args.resume)
        elif args.cmd == "pareto":
            return pareto(args.log, args.output_dir, args.measurements)
        elif args.cmd == "emit":
            emit(args.log, args.select, args.output_dir, args.prefix)
        elif args.cmd == "eval":
            res = evaluate_string(args.n, args.m, args.r, args.options, args.rounding, args.cost_mode,
                                  args.measurements)
            if args.json:
                print(json.dumps(res, indent=2))
            else:
                for k, v in res.items():
                    print(f"{k:>16}: {v}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RuntimeFailure, UnmeasuredError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
