"""Transmission-switching candidate selection.

The bi-level selector solves a re-dispatch with sheddable loads, and only if
load is shed looks for relief: it collects the shedding buses, the heavily
loaded branches touching them, ranks every other branch by the counter-flow
its opening would push onto those branches (a negative LODF in the loaded
direction), and re-solves the dispatch for each top-ranked opening.

The closest-branch baselines (to the contingency, or to the violations) and
complete enumeration are provided for comparison.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .dispatch import (DEFAULT_SHED_WEIGHT, DispatchProblem, DispatchSolution,
                       injections, solve_dispatch, violation_check)
from .lp import OPTIMAL
from .network import ContingencySpec, Network
from .sensitivity import (IslandingError, LodfMatrix, compute_lodf, compute_ptdf,
                          dc_power_flow, find_bridges)

ISLANDED = "islanded"


@dataclass(frozen=True)
class BilevelConfig:
    shed_tol_mw: float = 1e-3
    lbr_loading_frac: float = 0.95
    top_k: int = 10
    lodf_basis: str = "post"
    shed_weight: float = DEFAULT_SHED_WEIGHT
    stop_at_zero_shed: bool = False
    lbr_radius: int = 1
    lbr_floor: float = 0.50
    lbr_step: float = 0.05

    def __post_init__(self):
        if not 0 < self.lbr_loading_frac <= 1:
            raise ValueError("lbr_loading_frac must lie in (0, 1]")
        if self.top_k < 1:
            raise ValueError("top_k must be at least 1")
        if self.lodf_basis not in ("pre", "post"):
            raise ValueError("lodf_basis must be 'pre' or 'post'")
        if self.lbr_radius < 1:
            raise ValueError("lbr_radius must be at least 1")
        if self.shed_tol_mw < 0:
            raise ValueError("shed_tol_mw must be non-negative")


@dataclass
class CandidateEvaluation:
    branch_id: int
    lodf_score: float = math.nan
    total_shed_mw: float = math.nan
    violation_count: int = 0
    islanding: bool = False
    solve_status: str = OPTIMAL
    time_s: float = 0.0
    gen_mw: dict[int, float] | None = field(default=None, repr=False)

    def sort_key(self):
        failed = self.islanding or self.solve_status != OPTIMAL
        shed = math.inf if failed or math.isnan(self.total_shed_mw) else self.total_shed_mw
        score = 0.0 if math.isnan(self.lodf_score) else self.lodf_score
        return (failed, round(shed, 6), self.violation_count, score, self.branch_id)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("gen_mw")
        return out


@dataclass
class BilevelReport:
    contingency: str
    level1_shed_mw: float
    level1_status: str
    lsb: list[int]
    lbr: list[int]
    lbr_threshold: float | None
    candidates: list[CandidateEvaluation]
    best: list[int]
    best_shed_mw: float
    timings: dict[str, float]

    def to_dict(self) -> dict:
        out = asdict(self)
        out["candidates"] = [c.to_dict() for c in self.candidates]
        return out


def sort_evaluations(evals: Iterable[CandidateEvaluation]) -> list[CandidateEvaluation]:
    return sorted(evals, key=CandidateEvaluation.sort_key)


def best_candidates(evals: Sequence[CandidateEvaluation], tol_mw: float = 1e-3) -> list[int]:
    """Violation-free candidates within ``tol_mw`` of the least shed, by id."""
    ok = [e for e in evals if not e.islanding and e.solve_status == OPTIMAL
          and e.violation_count == 0 and not math.isnan(e.total_shed_mw)]
    if not ok:
        return []
    least = min(e.total_shed_mw for e in ok)
    return sorted(e.branch_id for e in ok if e.total_shed_mw <= least + tol_mw)


# -- level 2 building blocks -------------------------------------------------

def find_lsb(sol: DispatchSolution, shed_tol_mw: float = 1e-3) -> list[int]:
    """Buses shedding more than ``shed_tol_mw``."""
    if sol.status != OPTIMAL:
        raise ValueError("load-shedding buses need an optimal dispatch")
    return sorted(b for b, mw in sol.shed_mw.items() if mw > shed_tol_mw)


def _buses_within(net: Network, sources: Iterable[int], hops: int) -> set[int]:
    dist = _bfs(net, sources)
    return {b for b, d in dist.items() if d <= hops}


def find_lbr(net: Network, flows, lsb: Sequence[int], lbr_loading_frac: float = 0.95,
             radius: int = 1) -> list[int]:
    """Branches touching the shedding area and loaded to at least the given fraction.

    ``radius=1`` means direct incidence on a shedding bus; larger values admit
    branches with an endpoint up to ``radius - 1`` hops away.
    """
    if not lsb:
        raise ValueError("limit branches need at least one load-shedding bus")
    flows = np.asarray(flows, dtype=float)
    area = _buses_within(net, lsb, radius - 1)
    hits = []
    for br in net.in_service:
        if br.from_bus in area or br.to_bus in area:
            loading = abs(flows[br.id - 1]) / br.rating_mw
            if loading >= lbr_loading_frac - 1e-9:
                hits.append((-loading, br.id))
    return [bid for _, bid in sorted(hits)]


def lodf_scores(lodf: LodfMatrix, lbr: Sequence[int], flows) -> dict[int, float]:
    """Counter-flow score of every non-bridge branch against ``lbr``.

    ``score(c) = min over l in lbr of LODF(l, c) * sign(flow_l * flow_c)``.
    Opening ``c`` moves ``LODF(l, c) * flow_c`` onto ``l``, so a negative
    score means some limit branch is unloaded in its loaded direction. A
    branch carrying no flow scores 0.
    """
    if not lbr:
        raise ValueError("LODF ranking needs at least one limit branch")
    flows = np.asarray(flows, dtype=float)
    # round-off on a zero-flow branch must not pick a direction
    flows = np.where(np.abs(flows) <= 1e-9 * max(1.0, np.abs(flows).max(initial=0.0)),
                     0.0, flows)
    rows = [lodf.branch_ids.index(l) for l in lbr]
    row_sign = np.sign(flows[np.asarray(lbr, dtype=int) - 1])
    col_sign = np.sign(flows[np.asarray(lodf.branch_ids, dtype=int) - 1])
    block = lodf.values[rows] * row_sign[:, None] * col_sign[None, :]
    out = {}
    for j, bid in enumerate(lodf.branch_ids):
        if lodf.bridge_mask[j]:
            continue
        out[bid] = float(np.min(block[:, j])) + 0.0
    return out


def rank_by_lodf(lodf: LodfMatrix, lbr: Sequence[int], net: Network, flows,
                 top_k: int = 10, exclude: Iterable[int] = ()) -> list[tuple[int, float]]:
    """The ``top_k`` most negative-scoring switchable branches as ``(id, score)``.

    Candidates must be in service in ``net``, must not island it, and must not
    be a limit branch or listed in ``exclude``. Ties fall back to branch id.
    """
    scores = lodf_scores(lodf, lbr, flows)
    bridges = find_bridges(net)
    skip = set(lbr) | set(exclude)
    pool = []
    for bid, score in scores.items():
        br = net.branch(bid)
        if bid in skip or not br.in_service or bid in bridges:
            continue
        if score < -1e-12:
            pool.append((score, bid))
    pool.sort()
    return [(bid, score) for score, bid in pool[:top_k]]


def evaluate_candidates(net_post: Network, candidates: Iterable[int | tuple[int, float]],
                        shed_weight: float = DEFAULT_SHED_WEIGHT,
                        stop_at_zero_shed: bool = False,
                        shed_tol_mw: float = 1e-3) -> list[CandidateEvaluation]:
    """Re-dispatch (limits enforced) with each candidate branch opened."""
    bridges = find_bridges(net_post)
    out = []
    for item in candidates:
        bid, score = item if isinstance(item, tuple) else (item, math.nan)
        start = time.perf_counter()
        if bid in bridges:
            out.append(CandidateEvaluation(bid, score, islanding=True, solve_status=ISLANDED))
            continue
        switched = net_post.with_branch_status(bid, False)
        sol = solve_dispatch(DispatchProblem(switched, shed_weight=shed_weight))
        ev = CandidateEvaluation(bid, score, solve_status=sol.status,
                                 time_s=time.perf_counter() - start)
        if sol.optimal:
            ev.total_shed_mw = sol.total_shed_mw
            ev.violation_count = len(violation_check(sol.flows_mw, switched))
            ev.gen_mw = sol.gen_mw
        out.append(ev)
        if stop_at_zero_shed and sol.optimal and sol.total_shed_mw <= shed_tol_mw \
                and ev.violation_count == 0:
            break
    return sort_evaluations(out)


def lodf_for(net: Network, net_post: Network, basis: str) -> LodfMatrix:
    source = net_post if basis == "post" else net
    return compute_lodf(compute_ptdf(source), source)


def run_bilevel(net: Network, contingency: ContingencySpec,
                cfg: BilevelConfig = BilevelConfig()) -> BilevelReport:
    """Bi-level switching search for one contingency on the intact ``net``."""
    timings: dict[str, float] = {}
    tic = time.perf_counter()
    contingency.check(net)
    post = contingency.apply(net)
    level1 = solve_dispatch(DispatchProblem(post, shed_weight=cfg.shed_weight))
    timings["level1"] = time.perf_counter() - tic
    label = str(contingency)

    def report(lsb, lbr, thr, cands):
        best = best_candidates(cands, cfg.shed_tol_mw)
        if best:
            best_shed = min(c.total_shed_mw for c in cands if c.branch_id in best)
        else:
            best_shed = level1.total_shed_mw
        timings["total"] = time.perf_counter() - tic
        return BilevelReport(label, level1.total_shed_mw, level1.status, lsb, lbr, thr,
                             cands, best, best_shed, timings)

    if not level1.optimal or level1.total_shed_mw <= cfg.shed_tol_mw:
        return report([], [], None, [])

    t = time.perf_counter()
    lsb = find_lsb(level1, cfg.shed_tol_mw)
    thr = cfg.lbr_loading_frac
    lbr = find_lbr(post, level1.flows_mw, lsb, thr, cfg.lbr_radius)
    while not lbr and thr - cfg.lbr_step >= cfg.lbr_floor - 1e-9:
        thr = round(thr - cfg.lbr_step, 10)
        lbr = find_lbr(post, level1.flows_mw, lsb, thr, cfg.lbr_radius)
    timings["lsb_lbr"] = time.perf_counter() - t
    if not lbr:
        return report(lsb, [], None, [])

    t = time.perf_counter()
    lodf = lodf_for(net, post, cfg.lodf_basis)
    exclude = [contingency.element_id] if contingency.kind == "branch" else []
    ranked = rank_by_lodf(lodf, lbr, post, level1.flows_mw, cfg.top_k, exclude)
    timings["ranking"] = time.perf_counter() - t

    t = time.perf_counter()
    cands = evaluate_candidates(post, ranked, cfg.shed_weight, cfg.stop_at_zero_shed,
                                cfg.shed_tol_mw)
    timings["evaluation"] = time.perf_counter() - t
    return report(lsb, lbr, thr, cands)


# -- baselines -----------------------------------------------------------------

def _bfs(net: Network, sources: Iterable[int]) -> dict[int, int]:
    dist = {s: 0 for s in sources}
    queue = deque(dist)
    adj = net.adjacency()
    while queue:
        u = queue.popleft()
        for v, _ in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def _closest(net: Network, anchor_buses: Iterable[int], n: int,
             exclude: Iterable[int] = ()) -> list[int]:
    dist = _bfs(net, anchor_buses)
    skip = set(exclude)
    ranked = []
    for br in net.in_service:
        if br.id in skip:
            continue
        d = min(dist.get(br.from_bus, math.inf), dist.get(br.to_bus, math.inf))
        ranked.append((d, br.id))
    ranked.sort()
    return [bid for _, bid in ranked[:n]]


def baseline_cbce(net: Network, contingency: ContingencySpec, n: int = 10) -> list[int]:
    """Branches closest (in bus hops) to the outaged branch, ties by id.

    ``net`` may be the intact or the post-contingency network; distances are
    measured over the post-contingency topology.
    """
    if contingency.kind != "branch":
        raise ValueError("closest-to-contingency needs a branch contingency")
    br = net.branch(contingency.element_id)
    post = net if not br.in_service else net.with_branch_status(br.id, False)
    return _closest(post, (br.from_bus, br.to_bus), n, exclude=[br.id])


def baseline_cbve(net: Network, contingency: ContingencySpec,
                  violations: Sequence[int], n: int = 10) -> list[int]:
    """Branches closest to any violated branch (the violated ones excluded)."""
    if not violations:
        raise ValueError("closest-to-violation needs at least one violated branch")
    post = net
    if contingency.kind == "branch" and net.branch(contingency.element_id).in_service:
        post = net.with_branch_status(contingency.element_id, False)
    ends = set()
    for v in violations:
        vb = post.branch(v)
        ends.update((vb.from_bus, vb.to_bus))
    return _closest(post, ends, n, exclude=list(violations))


def baseline_evaluate_fixed(net_post: Network, candidates: Iterable[int],
                            injections_mw) -> list[CandidateEvaluation]:
    """Open each candidate and count overloads with injections held fixed."""
    bridges = find_bridges(net_post)
    out = []
    for bid in candidates:
        start = time.perf_counter()
        if bid in bridges:
            out.append(CandidateEvaluation(bid, islanding=True, solve_status=ISLANDED))
            continue
        switched = net_post.with_branch_status(bid, False)
        flows = dc_power_flow(switched, injections_mw)
        out.append(CandidateEvaluation(
            bid, total_shed_mw=0.0, violation_count=len(violation_check(flows, switched)),
            time_s=time.perf_counter() - start))
    return sort_evaluations(out)


def complete_enumeration(net_post: Network, mode: str = "redispatch", *,
                         injections_mw=None,
                         shed_weight: float = DEFAULT_SHED_WEIGHT) -> list[CandidateEvaluation]:
    """Evaluate every in-service, non-bridge branch as a switching candidate.

    ``mode="fixed"`` needs ``injections_mw`` and counts overloads under fixed
    injections; ``mode="redispatch"`` re-solves the dispatch per candidate.
    """
    bridges = find_bridges(net_post)
    pool = [br.id for br in net_post.in_service if br.id not in bridges]
    if mode == "fixed":
        if injections_mw is None:
            raise ValueError("fixed-injection enumeration needs injections_mw")
        return baseline_evaluate_fixed(net_post, pool, injections_mw)
    if mode == "redispatch":
        return evaluate_candidates(net_post, pool, shed_weight)
    raise ValueError(f"unknown enumeration mode {mode!r}")


def fixed_injections(net_post: Network, gen_mw: Mapping[int, float]) -> np.ndarray:
    """Pre-contingency generation against full (unshed) post-contingency load.

    Any mismatch (a lost generator) is picked up by the slack bus.
    """
    p = injections(net_post, gen_mw)
    p[net_post.bus_index()[net_post.slack_bus]] -= p.sum()
    return p


__all__ = [
    "BilevelConfig", "BilevelReport", "CandidateEvaluation", "IslandingError",
    "baseline_cbce", "baseline_cbve", "baseline_evaluate_fixed", "best_candidates",
    "complete_enumeration", "evaluate_candidates", "find_lbr", "find_lsb",
    "fixed_injections", "lodf_scores", "rank_by_lodf", "run_bilevel", "sort_evaluations",
]
