"""Approximate unsigned multiplier generator for FPGAs.

Builds the half-adder array of an N x M multiplier, searches per-HA
simplifications with a Tree-structured Parzen Estimator under a PDAE cost,
and emits the Pareto-optimal designs as Verilog.
"""

from .approx import ApproxConfig, HaOption, compressed_bit_count, evaluate, evaluate_array, ha_output
from .arch import (HaSlot, MultSpec, PpRef, SearchPlan, SpecError, build_ha_array, build_pp_array, ha_weight,
                   make_plan, select_search_set, uncompressed_count)
from .costmodel import CostBreakdown, fingerprint, load_measurements, pda_improvement, pdae, proxy_cost
from .errmetrics import ErrorReport, error_metrics, error_metrics_exhaustive, error_metrics_sampled
from .optimizer import SearchSpace, TpeParams, Trial, run_search, tpe_suggest
from .pareto import FrontPoint, pareto_front, summarize

__version__ = "0.1.0"
