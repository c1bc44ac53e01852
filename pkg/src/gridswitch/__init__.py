"""Post-contingency transmission switching: bi-level LODF search and baselines."""

from .contingency import ScreeningRow, run_full_pipeline, screen_n1
from .dispatch import DispatchProblem, DispatchSolution, Violation, solve_dispatch, violation_check
from .lp import solve_lp
from .network import (Branch, Bus, CaseError, ContingencySpec, Generator, Network,
                      apply_branch_outage, apply_generator_outage, apply_load_profile,
                      fixture_39bus, ieee39, load_case)
from .report import ScenarioReport, emit_table
from .sensitivity import (LodfMatrix, PtdfMatrix, compute_lodf, compute_ptdf, dc_power_flow,
                          is_bridge, predict_outage_flows)
from .switching import BilevelConfig, BilevelReport, CandidateEvaluation, run_bilevel

__version__ = "0.1.0"
