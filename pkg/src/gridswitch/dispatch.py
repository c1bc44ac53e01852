"""DC optimal dispatch with dispatchable (sheddable) loads.

Variables are laid out as ``[gen | shed | angle | flow]``. Angles are scaled
by the system base, so a branch flow is simply ``(angle_f - angle_t) / x_pu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .lp import INFEASIBLE, OPTIMAL, solve_lp
from .network import Network
from .sensitivity import IslandingError, connected_buses

DEFAULT_SHED_WEIGHT = 1e4


@dataclass(frozen=True)
class DispatchProblem:
    """One dispatch solve.

    With ``allow_redispatch=False`` no unit may rise above its entry in
    ``fixed_gen_mw``; units can only back down to follow the load that is
    shed.
    """

    net: Network
    allow_redispatch: bool = True
    fixed_gen_mw: Mapping[int, float] | None = None
    shed_weight: float = DEFAULT_SHED_WEIGHT
    enforce_limits: bool = True

    def __post_init__(self):
        if not self.shed_weight > 0:
            raise ValueError("shed_weight must be positive")
        top = max((g.cost_per_mwh for g in self.net.generators), default=0.0)
        if self.shed_weight <= top:
            raise ValueError(
                f"shed_weight {self.shed_weight} must exceed every generator cost (max {top})")
        if not self.allow_redispatch:
            if self.fixed_gen_mw is None:
                raise ValueError("fixed_gen_mw is required when redispatch is disabled")
            for g in self.net.generators:
                if g.id not in self.fixed_gen_mw:
                    raise ValueError(f"no fixed output for generator {g.id}")
                mw = self.fixed_gen_mw[g.id]
                if not g.pmin_mw - 1e-6 <= mw <= g.pmax_mw + 1e-6:
                    raise ValueError(f"fixed output of generator {g.id} outside its limits")


@dataclass
class DispatchSolution:
    gen_mw: dict[int, float]
    shed_mw: dict[int, float]
    flows_mw: np.ndarray
    objective: float
    total_shed_mw: float
    status: str
    iterations: int = 0
    x: np.ndarray = field(default=None, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


@dataclass(frozen=True)
class Violation:
    branch: int
    flow_mw: float
    rating_mw: float
    overload_pct: float


def _angle_bound(net: Network) -> float:
    # no DC flow can exceed the total injection, so this bounds every path
    flow_cap = net.total_load_mw + net.total_pmax_mw
    return flow_cap * math.fsum(br.reactance_pu for br in net.in_service) + 1.0


def build_lp(p: DispatchProblem):
    """Assemble ``(c, A_eq, b_eq, bounds)`` for ``p``."""
    net = p.net
    index = net.bus_index()
    gens = net.generators
    live = net.in_service
    G, N, L = len(gens), net.n_bus, len(live)
    og, os_, oa, of = 0, G, G + N, G + 2 * N
    nvar = G + 2 * N + L

    c = np.zeros(nvar)
    c[og:os_] = [g.cost_per_mwh for g in gens]
    c[os_:oa] = p.shed_weight

    A = np.zeros((N + L, nvar))
    b = np.zeros(N + L)
    for k, g in enumerate(gens):
        A[index[g.bus], og + k] = 1.0
    for i, bus in enumerate(net.buses):
        A[i, os_ + i] = 1.0
        b[i] = bus.load_mw
    for r, br in enumerate(live):
        fi, ti = index[br.from_bus], index[br.to_bus]
        A[fi, of + r] = -1.0
        A[ti, of + r] = 1.0
        row = N + r
        A[row, of + r] = 1.0
        A[row, oa + fi] = -1.0 / br.reactance_pu
        A[row, oa + ti] = 1.0 / br.reactance_pu

    bounds = np.zeros((nvar, 2))
    for k, g in enumerate(gens):
        if p.allow_redispatch:
            bounds[og + k] = (g.pmin_mw, g.pmax_mw)
        else:
            cap = min(max(p.fixed_gen_mw[g.id], g.pmin_mw), g.pmax_mw)
            bounds[og + k] = (g.pmin_mw, cap)
    for i, bus in enumerate(net.buses):
        bounds[os_ + i] = (0.0, bus.load_mw)
    theta = _angle_bound(net)
    bounds[oa:of] = (-theta, theta)
    bounds[oa + index[net.slack_bus]] = (0.0, 0.0)
    flow_cap = net.total_load_mw + net.total_pmax_mw
    for r, br in enumerate(live):
        lim = br.rating_mw if p.enforce_limits else flow_cap
        bounds[of + r] = (-lim, lim)
    return c, A, b, bounds


def solve_dispatch(p: DispatchProblem) -> DispatchSolution:
    net = p.net
    if not net.is_connected():
        missing = sorted(set(net.bus_ids) - connected_buses(net, net.slack_bus))
        raise IslandingError(f"disconnected network, bus {missing[0]} unreachable")
    c, A, b, bounds = build_lp(p)
    res = solve_lp(c, A, b, bounds)
    G, N = len(net.generators), net.n_bus
    flows = np.zeros(len(net.branches))
    if res.status != OPTIMAL:
        return DispatchSolution({}, {}, flows, math.nan, math.nan, INFEASIBLE, res.iterations)
    x = res.x
    ids = np.asarray([br.id for br in net.in_service], dtype=int) - 1
    flows[ids] = x[G + 2 * N:]
    gen = {g.id: float(x[k]) for k, g in enumerate(net.generators)}
    shed = {bus.id: float(x[G + i]) for i, bus in enumerate(net.buses)}
    return DispatchSolution(
        gen_mw=gen,
        shed_mw=shed,
        flows_mw=flows,
        objective=res.objective,
        total_shed_mw=math.fsum(shed.values()),
        status=OPTIMAL,
        iterations=res.iterations,
        x=x,
    )


def violation_check(flows, net: Network, tolerance_frac: float = 0.0,
                    abs_tol: float = 1e-6) -> list[Violation]:
    """Branches loaded beyond ``rating * (1 + tolerance_frac)``, worst first."""
    flows = np.asarray(flows, dtype=float)
    out = []
    for br in net.in_service:
        f = float(flows[br.id - 1])
        if abs(f) > br.rating_mw * (1.0 + tolerance_frac) + abs_tol:
            pct = 100.0 * (abs(f) - br.rating_mw) / br.rating_mw
            out.append(Violation(br.id, f, br.rating_mw, pct))
    out.sort(key=lambda v: (-v.overload_pct, v.branch))
    return out


def base_dispatch(net: Network, shed_weight: float = DEFAULT_SHED_WEIGHT) -> DispatchSolution:
    """Pre-contingency optimal dispatch with limits enforced."""
    return solve_dispatch(DispatchProblem(net, shed_weight=shed_weight))


def injections(net: Network, gen_mw: Mapping[int, float],
               shed_mw: Mapping[int, float] | None = None) -> np.ndarray:
    """Per-bus net injection (generation minus served load) in bus order."""
    index = net.bus_index()
    p = np.array([-b.load_mw for b in net.buses])
    for g in net.generators:
        p[index[g.bus]] += gen_mw.get(g.id, 0.0)
    for bus, mw in (shed_mw or {}).items():
        p[index[bus]] += mw
    return p
