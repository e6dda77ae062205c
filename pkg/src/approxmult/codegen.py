"""Verilog-2001 emission for approximate multipliers.

The approximate module ANDs operand bits into partial products, runs each HA
as its simplified option, packs every row pair into a sum vector and a carry
vector, and leaves the rest to plain ``+`` so synthesis maps it onto carry
chains. No vendor primitives are instantiated.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .approx import ApproxConfig, HaOption, slot_options
from .arch import MultSpec, SearchPlan, SpecError
from .costmodel import fingerprint

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_$]*\Z")
_KEYWORDS = frozenset(
    "always and assign begin buf case default else end endcase endmodule for function if initial inout "
    "input integer localparam module nand nor not or output parameter reg wire xor xnor".split()
)
ZERO = "1'b0"
SUMS_TAG = "AMG_ERRSUMS"
# full sweep in the testbench up to this many input bits, seeded vectors beyond
TB_SWEEP_LIMIT = 20


@dataclass(frozen=True)
class RtlArtifact:
    module_name: str
    text: str
    spec: MultSpec
    fingerprint: str = ""


def check_identifier(name: str) -> str:
    if not _IDENT.match(name or "") or name in _KEYWORDS:
        raise SpecError(f"{name!r} is not a usable Verilog module name")
    return name


def _ports(spec: MultSpec):
    return [
        f"    input  wire [{spec.m - 1}:0] x,",
        f"    input  wire [{spec.n - 1}:0] y,",
        f"    output wire [{spec.out_width - 1}:0] p",
    ]


def _concat(bits_msb_first):
    return "{" + ", ".join(bits_msb_first) + "}"


def _shifted(name, shift):
    return name if shift == 0 else f"{{{name}, {shift}'d0}}"


def emit_approx(spec: MultSpec, plan: SearchPlan, config: ApproxConfig, module_name: str,
                notes: dict = None) -> RtlArtifact:
    """Approximate multiplier module; ``notes`` adds ``key: value`` header lines."""
    check_identifier(module_name)
    n, m = spec.n, spec.m
    fp = fingerprint(spec, plan, config)
    options = dict(((s.pair, s.col), o) for s, o in slot_options(plan, config))

    head = [
        f"// approximate {n}x{m} unsigned multiplier",
        f"// fingerprint: {fp}",
        f"// shape: n={n} m={m} r={plan.r!r}",
        f"// searched options: {config.codes or '-'}",
    ]
    for k, v in (notes or {}).items():
        head.append(f"// {k}: {v}")

    body = ["", "    // partial products"]
    body += [f"    wire pp_{i}_{j};" for i in range(n) for j in range(m)]
    body += [f"    assign pp_{i}_{j} = x[{j}] & y[{i}];" for i in range(n) for j in range(m)]

    terms = []
    for p in range(spec.pairs):
        body += ["", f"    // rows {2 * p} and {2 * p + 1}"]
        sum_bits, cout_bits = [], []
        for j in range(1, m):
            a, b = f"pp_{2 * p}_{j}", f"pp_{2 * p + 1}_{j - 1}"
            s, c = f"s_{p}_{j}", f"c_{p}_{j}"
            opt = options[(p, j)]
            body.append(f"    wire {s}, {c};  // {opt.name.lower()}")
            if opt == HaOption.EXACT:
                body += [f"    assign {s} = {a} ^ {b};", f"    assign {c} = {a} & {b};"]
            elif opt == HaOption.OR_SUM:
                body += [f"    assign {s} = {a} | {b};", f"    assign {c} = {ZERO};"]
            elif opt == HaOption.DIRECT_COUT:
                body += [f"    assign {s} = {ZERO};", f"    assign {c} = {a};"]
            else:
                body += [f"    assign {s} = {ZERO};", f"    assign {c} = {ZERO};"]
            sum_bits.append(ZERO if opt in (HaOption.DIRECT_COUT, HaOption.ELIMINATE) else s)
            cout_bits.append(c if opt in (HaOption.EXACT, HaOption.DIRECT_COUT) else ZERO)
        # sum vector spans weights 2p .. 2p+m, carry vector 2p+2 .. 2p+m
        sv = [f"pp_{2 * p + 1}_{m - 1}"] + sum_bits[::-1] + [f"pp_{2 * p}_0"]
        cv = cout_bits[::-1]
        body += [
            f"    wire [{m}:0] sv{p};",
            f"    wire [{m - 2}:0] cv{p};",
            f"    wire [{m + 1}:0] acc{p};",
            f"    assign sv{p} = {_concat(sv)};",
            f"    assign cv{p} = {_concat(cv)};",
            f"    assign acc{p} = sv{p} + {{cv{p}, 2'd0}};",
        ]
        terms.append(_shifted(f"acc{p}", 2 * p))
    if n % 2:
        r = n - 1
        body += [
            "",
            f"    // row {r} is left uncompressed",
            f"    wire [{m - 1}:0] rl;",
            f"    assign rl = {_concat([f'pp_{r}_{j}' for j in reversed(range(m))])};",
        ]
        terms.append(_shifted("rl", r))
    body += ["", f"    assign p = {' + '.join(terms)};"]

    text = "\n".join(head + [f"module {module_name} ("] + _ports(spec) + [");"] + body + ["endmodule", ""])
    return RtlArtifact(module_name, text, spec, fp)


def emit_exact(spec: MultSpec, module_name: str) -> RtlArtifact:
    check_identifier(module_name)
    lines = [f"// exact {spec.n}x{spec.m} unsigned multiplier (reference)", f"module {module_name} ("]
    lines += _ports(spec) + [");", "    assign p = x * y;", "endmodule", ""]
    return RtlArtifact(module_name, "\n".join(lines), spec)


def emit_testbench(spec: MultSpec, approx_name: str, exact_name: str, n_vectors: int = 1 << 20,
                   seed: int = 1, module_name: str = None) -> RtlArtifact:
    """Self-checking bench printing ``AMG_ERRSUMS samples=.. sum_abs=.. sum_sq=..``.

    Sweeps every input when n+m <= 20, otherwise applies ``n_vectors`` seeded
    ``$random`` vectors.
    """
    check_identifier(approx_name)
    check_identifier(exact_name)
    name = check_identifier(module_name or f"tb_{approx_name}")
    n, m, w = spec.n, spec.m, spec.out_width
    lines = [
        f"// error-sum testbench: {approx_name} against {exact_name}",
        "`timescale 1ns/1ps",
        f"module {name};",
        f"    reg  [{m - 1}:0] x;",
        f"    reg  [{n - 1}:0] y;",
        f"    wire [{w - 1}:0] p_app, p_ext;",
        "    reg  [127:0] sum_abs, sum_sq, d;",
        "    reg  [63:0] cnt;",
        "    integer i, j, seed;",
        f"    {approx_name} u_app (.x(x), .y(y), .p(p_app));",
        f"    {exact_name} u_ext (.x(x), .y(y), .p(p_ext));",
        "    task check;",
        "        begin",
        "            #1;",
        "            d = (p_app > p_ext) ? p_app - p_ext : p_ext - p_app;",
        "            sum_abs = sum_abs + d;",
        "            sum_sq = sum_sq + d * d;",
        "            cnt = cnt + 1;",
        "        end",
        "    endtask",
        "    initial begin",
        "        sum_abs = 0; sum_sq = 0; cnt = 0;",
        f"        seed = {int(seed)};",
    ]
    if w <= TB_SWEEP_LIMIT:
        lines += [
            f"        for (i = 0; i < {1 << m}; i = i + 1)",
            f"            for (j = 0; j < {1 << n}; j = j + 1) begin",
            "                x = i; y = j;",
            "                check;",
            "            end",
        ]
    else:
        words_x = (m + 31) // 32
        words_y = (n + 31) // 32
        rx = _concat(["$random(seed)"] * words_x) if words_x > 1 else "$random(seed)"
        ry = _concat(["$random(seed)"] * words_y) if words_y > 1 else "$random(seed)"
        lines += [
            f"        for (i = 0; i < {int(n_vectors)}; i = i + 1) begin",
            f"            x = {rx};",
            f"            y = {ry};",
            "            check;",
            "        end",
        ]
    lines += [
        f'        $display("{SUMS_TAG} samples=%0d sum_abs=%0d sum_sq=%0d", cnt, sum_abs, sum_sq);',
        "        $finish;",
        "    end",
        "endmodule",
        "",
    ]
    return RtlArtifact(name, "\n".join(lines), spec)


_SUMS_RE = re.compile(SUMS_TAG + r" samples=(\d+) sum_abs=(\d+) sum_sq=(\d+)")


def parse_testbench_output(text: str) -> dict:
    """Integers from the bench's summary line; raises if it is missing."""
    found = _SUMS_RE.search(text)
    if not found:
        raise ValueError(f"no {SUMS_TAG} line in simulator output")
    samples, sum_abs, sum_sq = (int(g) for g in found.groups())
    return {"samples": samples, "sum_abs": sum_abs, "sum_sq": sum_sq}


def format_sums_line(samples: int, sum_abs: int, sum_sq: int) -> str:
    return f"{SUMS_TAG} samples={samples} sum_abs={sum_abs} sum_sq={sum_sq}"
