"""N-1 screening and the side-by-side scenario runner."""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

from .dispatch import (DEFAULT_SHED_WEIGHT, DispatchProblem, base_dispatch, solve_dispatch,
                       violation_check)
from .lp import OPTIMAL
from .network import ContingencySpec, Network
from .report import ScenarioReport
from .sensitivity import IslandingError, dc_power_flow, find_bridges
from .switching import (BilevelConfig, BilevelReport, baseline_cbce, baseline_cbve,
                        baseline_evaluate_fixed, best_candidates, complete_enumeration,
                        fixed_injections, run_bilevel)


@dataclass
class ScreeningRow:
    contingency: str
    islanded: bool
    level1_shed_mw: float | None
    violation_count_fixed: int | None
    needs_level2: bool

    def to_dict(self) -> dict:
        return asdict(self)


def all_contingencies(net: Network) -> list[ContingencySpec]:
    specs = [ContingencySpec("branch", br.id) for br in net.in_service]
    specs += [ContingencySpec("generator", g.id) for g in net.generators]
    return specs


def screen_n1(net: Network, cfg: BilevelConfig = BilevelConfig()) -> list[ScreeningRow]:
    """Level-1 dispatch for every single-branch and single-generator outage.

    Rows come back with the largest shed first; islanding outages go last.
    """
    base = base_dispatch(net, cfg.shed_weight)
    if not base.optimal:
        raise IslandingError("base case dispatch is infeasible")
    bridges = find_bridges(net)
    rows = []
    for spec in all_contingencies(net):
        if spec.kind == "branch" and spec.element_id in bridges:
            rows.append(ScreeningRow(str(spec), True, None, None, False))
            continue
        post = spec.apply(net)
        sol = solve_dispatch(DispatchProblem(post, shed_weight=cfg.shed_weight))
        flows = dc_power_flow(post, fixed_injections(post, base.gen_mw))
        shed = sol.total_shed_mw if sol.optimal else math.inf
        rows.append(ScreeningRow(str(spec), False, shed, len(violation_check(flows, post)),
                                 shed > cfg.shed_tol_mw))

    def key(row: ScreeningRow):
        kind, _, ident = row.contingency.partition(":")
        shed = -row.level1_shed_mw if row.level1_shed_mw is not None else math.inf
        return (row.islanded, round(shed, 6), kind, int(ident))

    return sorted(rows, key=key)


# -- scenario rows -----------------------------------------------------------

def scenario_a(net: Network, contingency: ContingencySpec,
               shed_weight: float = DEFAULT_SHED_WEIGHT) -> ScenarioReport:
    """Load shedding without upward re-dispatch from the pre-contingency point."""
    tic = time.perf_counter()
    contingency.check(net)
    base = base_dispatch(net, shed_weight)
    post = contingency.apply(net)
    sol = solve_dispatch(DispatchProblem(post, allow_redispatch=False,
                                         fixed_gen_mw=base.gen_mw, shed_weight=shed_weight))
    return _dispatch_row("A", sol, post, time.perf_counter() - tic)


def scenario_b(net: Network, contingency: ContingencySpec,
               shed_weight: float = DEFAULT_SHED_WEIGHT) -> ScenarioReport:
    """Load shedding with full generator re-dispatch, no switching."""
    tic = time.perf_counter()
    contingency.check(net)
    post = contingency.apply(net)
    sol = solve_dispatch(DispatchProblem(post, shed_weight=shed_weight))
    return _dispatch_row("B", sol, post, time.perf_counter() - tic)


def scenario_c(net: Network, contingency: ContingencySpec,
               shed_weight: float = DEFAULT_SHED_WEIGHT,
               shed_tol_mw: float = 1e-3) -> ScenarioReport:
    """Re-dispatch plus the best single switching found by complete enumeration."""
    tic = time.perf_counter()
    contingency.check(net)
    post = contingency.apply(net)
    no_switch = solve_dispatch(DispatchProblem(post, shed_weight=shed_weight))
    evals = complete_enumeration(post, "redispatch", shed_weight=shed_weight)
    best = best_candidates(evals, shed_tol_mw)
    elapsed = time.perf_counter() - tic
    if best:
        shed = min(e.total_shed_mw for e in evals if e.branch_id in best)
        if no_switch.optimal and no_switch.total_shed_mw < shed - shed_tol_mw:
            shed, best = no_switch.total_shed_mw, []
        return ScenarioReport("C", shed, 0, elapsed, best)
    return _dispatch_row("C", no_switch, post, elapsed)


def bilevel_row(report: BilevelReport) -> ScenarioReport:
    viol = 0 if report.level1_status == OPTIMAL else None
    return ScenarioReport("bilevel", report.best_shed_mw, viol, report.timings["total"],
                          list(report.best))


def _dispatch_row(label, sol, post, elapsed) -> ScenarioReport:
    if not sol.optimal:
        return ScenarioReport(label, math.nan, None, elapsed, [])
    return ScenarioReport(label, sol.total_shed_mw,
                          len(violation_check(sol.flows_mw, post)), elapsed, [])


def baseline_rows(net: Network, contingency: ContingencySpec, n: int = 10,
                  kinds=("cbce", "cbve", "ce"),
                  shed_weight: float = DEFAULT_SHED_WEIGHT) -> list[ScenarioReport]:
    """Closest-branch and enumeration baselines under fixed injections.

    Each row reports the fewest overloads any non-islanding candidate leaves;
    ``best_candidates`` lists those that clear every overload.
    """
    contingency.check(net)
    tic = time.perf_counter()
    base = base_dispatch(net, shed_weight)
    post = contingency.apply(net)
    inj = fixed_injections(post, base.gen_mw)
    violations = [v.branch for v in violation_check(dc_power_flow(post, inj), post)]
    shared = time.perf_counter() - tic
    rows = []
    for kind in kinds:
        t = time.perf_counter()
        if kind == "cbce":
            evals = baseline_evaluate_fixed(post, baseline_cbce(net, contingency, n), inj)
        elif kind == "cbve":
            if not violations:
                rows.append(ScenarioReport("CBVE", 0.0, 0, 0.0, []))
                continue
            evals = baseline_evaluate_fixed(
                post, baseline_cbve(net, contingency, violations, n), inj)
        elif kind == "ce":
            evals = complete_enumeration(post, "fixed", injections_mw=inj)
        else:
            raise ValueError(f"unknown baseline {kind!r}")
        usable = [e for e in evals if not e.islanding]
        fewest = min((e.violation_count for e in usable), default=len(violations))
        best = sorted(e.branch_id for e in usable if e.violation_count == 0)
        rows.append(ScenarioReport(kind.upper(), 0.0, fewest,
                                   shared + time.perf_counter() - t, best))
    return rows


@dataclass
class PipelineBundle:
    rows: list[ScenarioReport]
    bilevel: BilevelReport

    def row(self, label: str) -> ScenarioReport:
        for r in self.rows:
            if r.label == label:
                return r
        raise KeyError(label)


def run_full_pipeline(net: Network, contingency: ContingencySpec,
                      cfg: BilevelConfig = BilevelConfig()) -> PipelineBundle:
    """Scenarios A, B, C and the bi-level method on one contingency."""
    a = scenario_a(net, contingency, cfg.shed_weight)
    b = scenario_b(net, contingency, cfg.shed_weight)
    c = scenario_c(net, contingency, cfg.shed_weight, cfg.shed_tol_mw)
    rep = run_bilevel(net, contingency, cfg)
    return PipelineBundle([a, b, c, bilevel_row(rep)], rep)
