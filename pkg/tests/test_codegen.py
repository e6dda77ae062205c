import re
import shutil
import subprocess

import numpy as np
import pytest

from approxmult.approx import ApproxConfig, HaOption, evaluate_array
from approxmult.arch import MultSpec, SpecError, make_plan, uncompressed_count
from approxmult.codegen import (emit_approx, emit_exact, emit_testbench, format_sums_line, parse_testbench_output)
from approxmult.costmodel import fingerprint
from approxmult.errmetrics import error_metrics_exhaustive
from verilog_sim import LintError, Module

E, X = HaOption.EXACT, HaOption.ELIMINATE
SIMULATOR = shutil.which("iverilog") and shutil.which("vvp")


def sweep(spec):
    idx = np.arange(1 << spec.out_width)
    return idx & ((1 << spec.m) - 1), idx >> spec.m


class TestApprox:
    def test_exact_4x4_semantics(self):
        spec = MultSpec(4, 4)
        plan = make_plan(spec, 1.0)
        mod = Module(emit_approx(spec, plan, ApproxConfig.all_of(E, plan.k), "m4").text)
        x, y = sweep(spec)
        assert np.array_equal(mod.run(x=x, y=y)["p"], x * y)

    def test_all_eliminate_terms(self):
        spec = MultSpec(4, 4)
        plan = make_plan(spec, 1.0)
        mod = Module(emit_approx(spec, plan, ApproxConfig.all_of(X, plan.k), "m4x").text)
        summed = mod.identifiers_in_concats("sv") + mod.identifiers_in_concats("cv") + mod.identifiers_in_concats("rl")
        assert len(summed) == uncompressed_count(spec) == 4
        assert all(name.startswith("pp_") for name in summed)

    @pytest.mark.parametrize("n,m,r", [(2, 2, 1.0), (3, 4, 1.0), (5, 3, 0.6), (6, 6, 0.8), (8, 8, 0.5), (7, 5, 0.9)])
    def test_semantics_match_evaluator(self, n, m, r):
        spec = MultSpec(n, m)
        plan = make_plan(spec, r)
        rng = np.random.default_rng(n * 31 + m)
        x, y = sweep(spec)
        for _ in range(8):
            cfg = ApproxConfig(tuple(HaOption(int(v)) for v in rng.integers(0, 4, plan.k)))
            mod = Module(emit_approx(spec, plan, cfg, "dut").text)
            assert np.array_equal(mod.run(x=x, y=y)["p"], evaluate_array(spec, plan, cfg, x, y))

    def test_ports_and_header(self):
        spec = MultSpec(8, 8)
        plan = make_plan(spec, 0.5)
        cfg = ApproxConfig.from_codes("XODEXODEXODEXO")
        art = emit_approx(spec, plan, cfg, "am8", {"mae": 1.5})
        assert "input  wire [7:0] x," in art.text and "output wire [15:0] p" in art.text
        assert f"// fingerprint: {fingerprint(spec, plan, cfg)}" in art.text
        assert art.fingerprint == fingerprint(spec, plan, cfg)
        assert "// mae: 1.5" in art.text
        assert emit_approx(spec, plan, cfg, "am8", {"mae": 1.5}).text == art.text

    @pytest.mark.parametrize("name", ["1abc", "has space", "module", ""])
    def test_bad_identifier(self, name):
        spec = MultSpec(4, 4)
        plan = make_plan(spec, 1.0)
        with pytest.raises(SpecError):
            emit_approx(spec, plan, ApproxConfig.all_of(E, 6), name)

    def test_lint_catches_undeclared(self):
        text = "module t (\n    input  wire [1:0] x,\n    output wire [1:0] p\n);\n    assign p = x & q;\nendmodule\n"
        with pytest.raises(LintError):
            Module(text)


class TestExact:
    def test_ports(self):
        text = emit_exact(MultSpec(8, 8), "ref8").text
        assert "input  wire [7:0] x," in text and "input  wire [7:0] y," in text and "output wire [15:0] p" in text
        assert "module ref8 (" in text
        assert emit_exact(MultSpec(8, 8), "ref8").text == text

    def test_semantics(self):
        spec = MultSpec(5, 7)
        x, y = sweep(spec)
        assert np.array_equal(Module(emit_exact(spec, "e").text).run(x=x, y=y)["p"], x * y)


class TestBench:
    def test_full_sweep_4x4(self):
        text = emit_testbench(MultSpec(4, 4), "a", "b").text
        assert "for (i = 0; i < 16;" in text and "for (j = 0; j < 16;" in text

    def test_random_vectors_when_wide(self):
        text = emit_testbench(MultSpec(12, 12), "a", "b", n_vectors=5000, seed=3).text
        assert "i < 5000" in text and "$random(seed)" in text and "seed = 3;" in text

    def test_sums_line_round_trip(self):
        line = format_sums_line(256, 8960, 565120)
        assert parse_testbench_output("noise\n" + line + "\n") == {"samples": 256, "sum_abs": 8960, "sum_sq": 565120}
        with pytest.raises(ValueError):
            parse_testbench_output("nothing here")

    def test_display_format_matches_parser(self):
        text = emit_testbench(MultSpec(4, 4), "a", "b").text
        fmt = re.search(r'\$display\("([^"]+)"', text).group(1)
        assert parse_testbench_output(fmt.replace("%0d", "12")) == {"samples": 12, "sum_abs": 12, "sum_sq": 12}


def simulate(tmp_path, *artifacts):
    files = []
    for a in artifacts:
        p = tmp_path / f"{a.module_name}.v"
        p.write_text(a.text)
        files.append(str(p))
    out = tmp_path / "sim.vvp"
    subprocess.run(["iverilog", "-o", str(out), *files], check=True)
    return parse_testbench_output(subprocess.run(["vvp", str(out)], check=True, capture_output=True, text=True).stdout)


@pytest.mark.skipif(not SIMULATOR, reason="no external HDL simulator (iverilog) on PATH")
class TestSimulation:
    def test_exact_vs_exact(self, tmp_path):
        spec = MultSpec(4, 4)
        sums = simulate(tmp_path, emit_exact(spec, "e1"), emit_exact(spec, "e2"), emit_testbench(spec, "e1", "e2"))
        assert sums == {"samples": 256, "sum_abs": 0, "sum_sq": 0}

    def test_all_eliminate_4x4(self, tmp_path):
        spec = MultSpec(4, 4)
        plan = make_plan(spec, 1.0)
        cfg = ApproxConfig.all_of(X, plan.k)
        sums = simulate(tmp_path, emit_approx(spec, plan, cfg, "a"), emit_exact(spec, "e"),
                        emit_testbench(spec, "a", "e"))
        rep = error_metrics_exhaustive(spec, plan, cfg)
        assert (sums["sum_abs"], sums["sum_sq"]) == (rep.sum_abs, rep.sum_sq)
