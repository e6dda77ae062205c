import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from approxmult.approx import (ApproxConfig, HaOption, compressed_bit_count, evaluate, evaluate_array, ha_output)
from approxmult.arch import MultSpec, SpecError, make_plan
from oracles import assignment, naive_product

E, O, D, X = HaOption.EXACT, HaOption.OR_SUM, HaOption.DIRECT_COUT, HaOption.ELIMINATE
SPEC44 = MultSpec(4, 4)
PLAN44 = make_plan(SPEC44, 1.0)


def grid(spec):
    x, y = np.meshgrid(np.arange(1 << spec.m), np.arange(1 << spec.n), indexing="ij")
    return x.ravel(), y.ravel()


class TestHaOutput:
    @pytest.mark.parametrize("opt,a,b,expected", [
        (E, 1, 1, (0, 1)), (E, 1, 0, (1, 0)), (E, 0, 0, (0, 0)),
        (O, 1, 1, (1, 0)), (O, 0, 1, (1, 0)), (O, 0, 0, (0, 0)),
        (X, 1, 0, (0, 0)), (X, 1, 1, (0, 0)),
        (D, 1, 0, (0, 1)), (D, 0, 1, (0, 0)), (D, 1, 1, (0, 1)),
    ])
    def test_truth_table(self, opt, a, b, expected):
        assert ha_output(opt, a, b) == expected

    def test_value_relations(self):
        for a, b in itertools.product((0, 1), repeat=2):
            val = {o: ha_output(o, a, b)[0] + 2 * ha_output(o, a, b)[1] for o in HaOption}
            assert val[E] == a + b
            assert 0 == val[X] <= a + b
            assert val[O] == (a | b) <= a + b
            assert val[D] - (a + b) == a - b

    def test_codes_round_trip(self):
        cfg = ApproxConfig.from_codes("EODX")
        assert cfg.options == (E, O, D, X)
        assert cfg.codes == "EODX"
        assert ApproxConfig.from_codes("eodx") == cfg
        with pytest.raises(SpecError):
            ApproxConfig.from_codes("EQ")


class TestEvaluate:
    def test_exact_example(self):
        assert evaluate(SPEC44, PLAN44, ApproxConfig.all_of(E, 6), 13, 11) == 143

    def test_all_eliminate(self):
        # only PP_0, PP_7, PP_8 and PP_F survive
        assert evaluate(SPEC44, PLAN44, ApproxConfig.all_of(X, 6), 15, 15) == 85

    def test_direct_cout_overestimates(self):
        cfg = ApproxConfig((D, E, E, E, E, E))  # first searched slot is PP_1/PP_4
        assert evaluate(SPEC44, PLAN44, cfg, 2, 1) == 4

    def test_operand_range(self):
        cfg = ApproxConfig.all_of(E, 6)
        with pytest.raises(SpecError):
            evaluate(SPEC44, PLAN44, cfg, 16, 0)
        with pytest.raises(SpecError):
            evaluate(SPEC44, PLAN44, cfg, 0, -1)

    def test_length_mismatch(self):
        with pytest.raises(SpecError):
            evaluate(SPEC44, PLAN44, ApproxConfig.all_of(E, 5), 1, 1)

    @pytest.mark.parametrize("n,m", [(2, 2), (3, 5), (5, 3), (6, 6), (7, 4), (8, 8)])
    def test_exact_identity(self, n, m):
        spec = MultSpec(n, m)
        plan = make_plan(spec, 0.7)
        x, y = grid(spec)
        out = evaluate_array(spec, plan, ApproxConfig.all_of(E, plan.k), x, y)
        assert np.array_equal(out, x * y)
        assert out.max() < 1 << spec.out_width

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 6), st.integers(2, 6), st.floats(0, 1), st.data())
    def test_matches_oracle(self, n, m, r, data):
        spec = MultSpec(n, m)
        plan = make_plan(spec, r)
        codes = data.draw(st.text("EODX", min_size=plan.k, max_size=plan.k))
        cfg = ApproxConfig.from_codes(codes)
        x, y = grid(spec)
        out = evaluate_array(spec, plan, cfg, x, y)
        assign = assignment(plan, codes)
        for i in range(0, len(x), 7):
            assert out[i] == naive_product(n, m, assign, int(x[i]), int(y[i])) == evaluate(spec, plan, cfg, int(x[i]), int(y[i]))

    def test_no_direct_cout_never_overestimates(self):
        spec = MultSpec(6, 6)
        plan = make_plan(spec, 1.0)
        x, y = grid(spec)
        rng = np.random.default_rng(5)
        for _ in range(30):
            cfg = ApproxConfig(tuple(HaOption(int(v)) for v in rng.choice([0, 1, 3], size=plan.k)))
            assert np.all(evaluate_array(spec, plan, cfg, x, y) <= x * y)

    def test_output_bound(self):
        # any option mix stays below the largest exact product, so n+m bits suffice
        for n, m in [(2, 3), (4, 4), (5, 6)]:
            spec = MultSpec(n, m)
            plan = make_plan(spec, 1.0)
            x, y = grid(spec)
            rng = np.random.default_rng(n * m)
            for _ in range(50):
                cfg = ApproxConfig(tuple(HaOption(int(v)) for v in rng.integers(0, 4, plan.k)))
                out = evaluate_array(spec, plan, cfg, x, y)
                assert out.max() <= ((1 << m) - 1) * ((1 << n) - 1)
            assert evaluate_array(spec, plan, ApproxConfig.all_of(D, plan.k), x, y).max() < 1 << spec.out_width

    def test_wide_operands_use_python_ints(self):
        spec = MultSpec(40, 36)
        plan = make_plan(spec, 0.5)
        x = np.array([(1 << 36) - 1, 12345678901], dtype=object)
        y = np.array([(1 << 40) - 1, 98765432109], dtype=object)
        out = evaluate_array(spec, plan, ApproxConfig.all_of(E, plan.k), x, y)
        assert list(out) == [int(a) * int(b) for a, b in zip(x, y)]


class TestCompressedBits:
    def test_figure_config(self):
        plan = make_plan(SPEC44, 0.8)
        # searched order: PP1/4, PP2/5, PP3/6, PP9/C, PPA/D; PPA/D kept exact
        cfg = ApproxConfig((O, D, O, X, E))
        assert compressed_bit_count(SPEC44, plan, cfg) == 11
        assert (16 - 11) / 16 == 0.3125

    def test_extremes(self):
        assert compressed_bit_count(SPEC44, PLAN44, ApproxConfig.all_of(E, 6)) == 16
        assert compressed_bit_count(SPEC44, PLAN44, ApproxConfig.all_of(X, 6)) == 4
