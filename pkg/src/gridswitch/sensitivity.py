"""DC linearization: susceptance matrices, DC power flow, PTDF and LODF.

Flow vectors are indexed by branch ordinal (``flows[id - 1]``) and carry zero
for out-of-service branches, so results from different topologies of the
same case line up element by element.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .network import CaseError, Network, connected_buses

BRIDGE_TOL = 1e-6


class IslandingError(CaseError):
    """The operation would need a connected network but got islands."""


def injection_vector(net: Network, injections) -> np.ndarray:
    """Per-bus MW as an array in ``net.buses`` order."""
    if isinstance(injections, Mapping):
        index = net.bus_index()
        p = np.zeros(net.n_bus)
        for bus, mw in injections.items():
            if bus not in index:
                raise CaseError(f"unknown bus {bus}")
            p[index[bus]] = mw
        return p
    p = np.asarray(injections, dtype=float)
    if p.shape != (net.n_bus,):
        raise ValueError(f"expected {net.n_bus} injections, got shape {p.shape}")
    return p


def incidence(net: Network) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Branch-bus incidence (+1 from, -1 to) and series susceptance in MW/rad.

    Only in-service branches appear; the third item lists their ids.
    """
    index = net.bus_index()
    live = net.in_service
    A = np.zeros((len(live), net.n_bus))
    b = np.empty(len(live))
    for r, br in enumerate(live):
        A[r, index[br.from_bus]] = 1.0
        A[r, index[br.to_bus]] = -1.0
        b[r] = net.base_mva / br.reactance_pu
    return A, b, [br.id for br in live]


def susceptance_matrix(net: Network) -> np.ndarray:
    """Nodal susceptance matrix B (MW/rad) over in-service branches."""
    A, b, _ = incidence(net)
    return A.T @ (b[:, None] * A)


def _require_connected(net: Network) -> None:
    if not net.is_connected():
        missing = sorted(set(net.bus_ids) - connected_buses(net, net.slack_bus))
        raise IslandingError(f"disconnected network, bus {missing[0]} unreachable")


def bus_angles(net: Network, injections, ref_bus: int | None = None) -> np.ndarray:
    """Voltage angles (rad) solving B theta = p with theta[ref] = 0."""
    _require_connected(net)
    p = injection_vector(net, injections)
    ref = net.bus_index()[net.slack_bus if ref_bus is None else ref_bus]
    keep = np.arange(net.n_bus) != ref
    B = susceptance_matrix(net)
    theta = np.zeros(net.n_bus)
    try:
        theta[keep] = np.linalg.solve(B[np.ix_(keep, keep)], p[keep])
    except np.linalg.LinAlgError:
        raise IslandingError("singular susceptance matrix") from None
    return theta


def dc_power_flow(net: Network, injections, *, balance_tol: float = 1e-6,
                  ref_bus: int | None = None) -> np.ndarray:
    """Branch flows (MW, from-to positive) for balanced nodal injections."""
    p = injection_vector(net, injections)
    if abs(p.sum()) > balance_tol:
        raise ValueError(f"injections do not balance: net {p.sum():.6g} MW")
    theta = bus_angles(net, p, ref_bus)
    A, b, ids = incidence(net)
    flows = np.zeros(len(net.branches))
    flows[np.asarray(ids, dtype=int) - 1] = b * (A @ theta)
    return flows


@dataclass(frozen=True, eq=False)
class PtdfMatrix:
    values: np.ndarray          # (in-service branches) x (buses)
    branch_ids: tuple[int, ...]
    bus_ids: tuple[int, ...]
    ref_bus: int
    n_branches: int

    def row(self, branch_id: int) -> np.ndarray:
        return self.values[self.branch_ids.index(branch_id)]

    def flows(self, injections: np.ndarray) -> np.ndarray:
        """Full-length flow vector (indexed by branch ordinal) for ``injections``."""
        out = np.zeros(self.n_branches)
        out[np.asarray(self.branch_ids, dtype=int) - 1] = self.values @ injections
        return out


def compute_ptdf(net: Network, ref_bus: int | None = None) -> PtdfMatrix:
    _require_connected(net)
    ref_bus = net.slack_bus if ref_bus is None else ref_bus
    ref = net.bus_index()[ref_bus]
    A, b, ids = incidence(net)
    keep = np.arange(net.n_bus) != ref
    B = A.T @ (b[:, None] * A)
    X = np.zeros((net.n_bus, net.n_bus))
    try:
        X[np.ix_(keep, keep)] = np.linalg.inv(B[np.ix_(keep, keep)])
    except np.linalg.LinAlgError:
        raise IslandingError("singular susceptance matrix") from None
    H = (b[:, None] * A) @ X
    H[:, ref] = 0.0
    return PtdfMatrix(H, tuple(ids), tuple(net.bus_ids), ref_bus, len(net.branches))


@dataclass(frozen=True, eq=False)
class LodfMatrix:
    """Entry (l, k): share of branch k's pre-outage flow moved onto l when k trips.

    Rows and columns follow ``branch_ids``; bridge columns are NaN except for
    the -1 diagonal.
    """

    values: np.ndarray
    branch_ids: tuple[int, ...]
    bridge_mask: np.ndarray

    def _pos(self, branch_id: int) -> int:
        try:
            return self.branch_ids.index(branch_id)
        except ValueError:
            raise CaseError(f"branch {branch_id} not in the LODF topology") from None

    def entry(self, row_branch: int, outaged_branch: int) -> float:
        return float(self.values[self._pos(row_branch), self._pos(outaged_branch)])

    def is_bridge(self, branch_id: int) -> bool:
        return bool(self.bridge_mask[self._pos(branch_id)])

    def column(self, outaged_branch: int) -> np.ndarray:
        return self.values[:, self._pos(outaged_branch)]


def compute_lodf(ptdf: PtdfMatrix, net: Network) -> LodfMatrix:
    index = {b: i for i, b in enumerate(ptdf.bus_ids)}
    ids = ptdf.branch_ids
    # PTDF of every row branch for a unit transfer from k.from to k.to
    T = np.zeros((len(ptdf.bus_ids), len(ids)))
    for c, bid in enumerate(ids):
        br = net.branch(bid)
        T[index[br.from_bus], c] = 1.0
        T[index[br.to_bus], c] = -1.0
    H = ptdf.values @ T
    denom = 1.0 - np.diag(H)
    bridge = np.abs(denom) < BRIDGE_TOL
    safe = np.where(bridge, 1.0, denom)
    L = H / safe[None, :]
    L[:, bridge] = np.nan
    np.fill_diagonal(L, -1.0)
    return LodfMatrix(L, tuple(ids), bridge)


def predict_outage_flows(flows: np.ndarray, lodf: LodfMatrix, branch_id: int) -> np.ndarray:
    """Post-outage flows of every branch via one LODF column."""
    if lodf.is_bridge(branch_id):
        raise IslandingError(f"branch {branch_id} is a bridge; its outage islands the network")
    flows = np.asarray(flows, dtype=float)
    out = flows.copy()
    ids = np.asarray(lodf.branch_ids, dtype=int) - 1
    out[ids] = flows[ids] + lodf.column(branch_id) * flows[branch_id - 1]
    out[branch_id - 1] = 0.0
    return out


def find_bridges(net: Network) -> set[int]:
    """Ids of in-service branches whose removal disconnects the network.

    Iterative Tarjan low-link over the multigraph; parallel circuits are
    never bridges because the walk skips only the exact edge it arrived on.
    """
    adj = net.adjacency()
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    bridges: set[int] = set()
    clock = 0
    for root in adj:
        if root in disc:
            continue
        disc[root] = low[root] = clock
        clock += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            u, via, it = stack[-1]
            advanced = False
            for v, bid in it:
                if bid == via:
                    continue
                if v in disc:
                    low[u] = min(low[u], disc[v])
                else:
                    disc[v] = low[v] = clock
                    clock += 1
                    stack.append((v, bid, iter(adj[v])))
                    advanced = True
                    break
            if not advanced:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[u])
                    if low[u] > disc[parent]:
                        bridges.add(via)
    return bridges


def is_bridge(net: Network, branch_id: int) -> bool:
    br = net.branch(branch_id)
    if not br.in_service:
        raise CaseError(f"branch {branch_id} is out of service")
    return branch_id in find_bridges(net)
