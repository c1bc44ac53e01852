"""Network data model and case-file ingestion.

A case is a small JSON document::

    {"base_mva": 100, "slack_bus": 1,
     "buses": [{"id": 1, "load_mw": 0.0}, ...],
     "branches": [{"from": 1, "to": 2, "x_pu": 0.1, "rating_mw": 100}, ...],
     "generators": [{"id": 1, "bus": 1, "pmin_mw": 0, "pmax_mw": 200,
                     "cost_per_mwh": 1.0}, ...]}

Branch ids are the 1-based position in the ``branches`` array. Networks are
immutable; every edit returns a new instance.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import deque
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping


class CaseError(ValueError):
    """Raised for malformed case documents and invalid network edits."""


@dataclass(frozen=True)
class Bus:
    id: int
    load_mw: float = 0.0


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    reactance_pu: float
    rating_mw: float
    in_service: bool = True


@dataclass(frozen=True)
class Generator:
    id: int
    bus: int
    pmin_mw: float
    pmax_mw: float
    cost_per_mwh: float = 1.0


@dataclass(frozen=True)
class Network:
    base_mva: float
    slack_bus: int
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    generators: tuple[Generator, ...]
    name: str = ""

    # -- lookups ---------------------------------------------------------
    @property
    def bus_ids(self) -> list[int]:
        return [b.id for b in self.buses]

    def bus_index(self) -> dict[int, int]:
        return {b.id: i for i, b in enumerate(self.buses)}

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    def branch(self, branch_id: int) -> Branch:
        if not 1 <= branch_id <= len(self.branches):
            raise CaseError(f"unknown branch {branch_id}")
        return self.branches[branch_id - 1]

    def generator(self, gen_id: int) -> Generator:
        for g in self.generators:
            if g.id == gen_id:
                return g
        raise CaseError(f"unknown generator {gen_id}")

    @property
    def in_service(self) -> list[Branch]:
        return [br for br in self.branches if br.in_service]

    @property
    def loads(self) -> dict[int, float]:
        return {b.id: b.load_mw for b in self.buses}

    @property
    def total_load_mw(self) -> float:
        return math.fsum(b.load_mw for b in self.buses)

    @property
    def total_pmax_mw(self) -> float:
        return math.fsum(g.pmax_mw for g in self.generators)

    def incident(self, bus_id: int) -> list[Branch]:
        return [br for br in self.in_service if bus_id in (br.from_bus, br.to_bus)]

    def adjacency(self) -> dict[int, list[tuple[int, int]]]:
        """Bus id -> list of (neighbour bus, branch id) over in-service branches."""
        adj: dict[int, list[tuple[int, int]]] = {b.id: [] for b in self.buses}
        for br in self.in_service:
            adj[br.from_bus].append((br.to_bus, br.id))
            adj[br.to_bus].append((br.from_bus, br.id))
        return adj

    def is_connected(self, skip_branch: int | None = None) -> bool:
        return len(connected_buses(self, self.slack_bus, skip_branch)) == self.n_bus

    # -- edits -------------------------------------------------------------
    def with_branch_status(self, branch_id: int, in_service: bool) -> "Network":
        br = self.branch(branch_id)
        branches = list(self.branches)
        branches[branch_id - 1] = replace(br, in_service=in_service)
        return replace(self, branches=tuple(branches))


def connected_buses(net: Network, start: int, skip_branch: int | None = None) -> set[int]:
    seen = {start}
    queue = deque([start])
    adj = net.adjacency()
    while queue:
        u = queue.popleft()
        for v, bid in adj[u]:
            if bid != skip_branch and v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def _finite(value, what: str) -> float:
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise CaseError(f"{what}: expected a number, got {value!r}") from None
    if not math.isfinite(out):
        raise CaseError(f"{what}: non-finite value")
    return out


def _int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise CaseError(f"{what}: expected an integer, got {value!r}")
    return value


def _field(obj: Mapping, key: str, what: str):
    if not isinstance(obj, Mapping) or key not in obj:
        raise CaseError(f"{what}: missing field '{key}'")
    return obj[key]


def validate(net: Network, *, require_adequacy: bool = True) -> Network:
    """Check the structural invariants of ``net`` and return it unchanged."""
    if not net.base_mva > 0:
        raise CaseError("base_mva must be positive")
    ids = [b.id for b in net.buses]
    seen: set[int] = set()
    for b in net.buses:
        if b.id in seen:
            raise CaseError(f"duplicate bus id {b.id}")
        seen.add(b.id)
        if not (math.isfinite(b.load_mw) and b.load_mw >= 0):
            raise CaseError(f"negative or non-finite load, bus {b.id}")
    if net.slack_bus not in seen:
        raise CaseError(f"slack bus {net.slack_bus} does not exist")
    for k, br in enumerate(net.branches, start=1):
        if br.id != k:
            raise CaseError(f"branch ordinals must be contiguous, found {br.id} at {k}")
        for end in (br.from_bus, br.to_bus):
            if end not in seen:
                raise CaseError(f"unknown bus {end}, branch {br.id}")
        if br.from_bus == br.to_bus:
            raise CaseError(f"self-loop, branch {br.id}")
        if not br.reactance_pu > 0:
            raise CaseError(f"nonpositive reactance, branch {br.id}")
        if not br.rating_mw > 0:
            raise CaseError(f"nonpositive rating, branch {br.id}")
    gids: set[int] = set()
    for g in net.generators:
        if g.id in gids:
            raise CaseError(f"duplicate generator id {g.id}")
        gids.add(g.id)
        if g.bus not in seen:
            raise CaseError(f"unknown bus {g.bus}, generator {g.id}")
        if g.pmin_mw > g.pmax_mw:
            raise CaseError(f"pmin exceeds pmax, generator {g.id}")
        if g.cost_per_mwh < 0:
            raise CaseError(f"negative cost, generator {g.id}")
    if not ids:
        raise CaseError("case has no buses")
    if not net.is_connected():
        missing = sorted(set(ids) - connected_buses(net, net.slack_bus))
        raise CaseError(f"disconnected network, bus {missing[0]} unreachable")
    if require_adequacy and net.total_pmax_mw < net.total_load_mw:
        raise CaseError("total generation capacity is below total load")
    return net


def parse_case(doc: Mapping) -> Network:
    """Build a validated :class:`Network` from a decoded case document."""
    if not isinstance(doc, Mapping):
        raise CaseError("case document must be a JSON object")
    base = _finite(_field(doc, "base_mva", "case"), "base_mva")
    slack = _int(_field(doc, "slack_bus", "case"), "slack_bus")
    buses = []
    for i, b in enumerate(_field(doc, "buses", "case")):
        bid = _int(_field(b, "id", f"bus #{i + 1}"), f"bus #{i + 1} id")
        buses.append(Bus(bid, _finite(b.get("load_mw", 0.0), f"bus {bid} load_mw")))
    branches = []
    for k, br in enumerate(_field(doc, "branches", "case"), start=1):
        what = f"branch {k}"
        branches.append(Branch(
            id=k,
            from_bus=_int(_field(br, "from", what), f"{what} from"),
            to_bus=_int(_field(br, "to", what), f"{what} to"),
            reactance_pu=_finite(_field(br, "x_pu", what), f"{what} x_pu"),
            rating_mw=_finite(_field(br, "rating_mw", what), f"{what} rating_mw"),
            in_service=bool(br.get("in_service", True)),
        ))
    gens = []
    for i, g in enumerate(doc.get("generators", [])):
        gid = _int(_field(g, "id", f"generator #{i + 1}"), f"generator #{i + 1} id")
        what = f"generator {gid}"
        gens.append(Generator(
            id=gid,
            bus=_int(_field(g, "bus", what), f"{what} bus"),
            pmin_mw=_finite(g.get("pmin_mw", 0.0), f"{what} pmin_mw"),
            pmax_mw=_finite(_field(g, "pmax_mw", what), f"{what} pmax_mw"),
            cost_per_mwh=_finite(g.get("cost_per_mwh", 1.0), f"{what} cost_per_mwh"),
        ))
    net = Network(base, slack, tuple(buses), tuple(branches), tuple(gens),
                  name=str(doc.get("name", "")))
    return validate(net)


def load_case(source) -> Network:
    """Load a case from a path, a JSON string, or an already-decoded mapping.

    The names ``"ieee39"`` (and ``"ieee39.json"`` when no such file exists)
    resolve to the bundled 39-bus case.
    """
    if isinstance(source, Mapping):
        return parse_case(source)
    if isinstance(source, (str, Path)):
        text = str(source)
        if text.lstrip().startswith("{"):
            doc = json.loads(text)
        else:
            path = Path(text)
            if not path.exists() and path.name in ("ieee39", "ieee39.json"):
                doc = json.loads(_bundled("ieee39.json"))
            else:
                try:
                    doc = json.loads(path.read_text())
                except FileNotFoundError:
                    raise CaseError(f"case file not found: {path}") from None
                except json.JSONDecodeError as exc:
                    raise CaseError(f"case file is not valid JSON: {exc}") from None
        return parse_case(doc)
    raise TypeError(f"cannot load a case from {type(source).__name__}")


def case_to_dict(net: Network) -> dict:
    doc = {
        "base_mva": net.base_mva,
        "slack_bus": net.slack_bus,
        "buses": [{"id": b.id, "load_mw": b.load_mw} for b in net.buses],
        "branches": [],
        "generators": [
            {"id": g.id, "bus": g.bus, "pmin_mw": g.pmin_mw, "pmax_mw": g.pmax_mw,
             "cost_per_mwh": g.cost_per_mwh}
            for g in net.generators
        ],
    }
    if net.name:
        doc = {"name": net.name, **doc}
    for br in net.branches:
        row = {"from": br.from_bus, "to": br.to_bus, "x_pu": br.reactance_pu,
               "rating_mw": br.rating_mw}
        if not br.in_service:
            row["in_service"] = False
        doc["branches"].append(row)
    return doc


def dump_case(net: Network) -> str:
    """Serialize to case JSON, one bus/branch/generator per line."""
    doc = case_to_dict(net)
    head = {k: v for k, v in doc.items() if k not in ("buses", "branches", "generators")}
    lines = ["{"]
    for k, v in head.items():
        lines.append(f"  {json.dumps(k)}: {json.dumps(v)},")
    sections = ["buses", "branches", "generators"]
    for s in sections:
        rows = ",\n".join(f"    {json.dumps(r)}" for r in doc[s])
        tail = "," if s != sections[-1] else ""
        lines.append(f"  {json.dumps(s)}: [\n{rows}\n  ]{tail}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _bundled(name: str) -> str:
    return resources.files("gridswitch.data").joinpath(name).read_text()


def ieee39() -> Network:
    """The bundled IEEE 39-bus case with its nominal loads."""
    return parse_case(json.loads(_bundled("ieee39.json")))


def read_load_profile(source) -> dict[int, float]:
    """Read a ``bus,load_mw`` CSV (path or text) into an override map.

    ``"table1"`` resolves to the bundled modified 39-bus load profile.
    """
    text = str(source)
    if "\n" not in text:
        path = Path(text)
        if not path.exists() and path.name in ("table1", "table1.csv"):
            text = _bundled("table1.csv")
        else:
            try:
                text = path.read_text()
            except FileNotFoundError:
                raise CaseError(f"load profile not found: {path}") from None
    out: dict[int, float] = {}
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or not {"bus", "load_mw"} <= set(reader.fieldnames):
        raise CaseError("load profile must have columns bus,load_mw")
    for row in reader:
        try:
            bus = int(row["bus"])
        except ValueError:
            raise CaseError(f"bad bus id {row['bus']!r} in load profile") from None
        if bus in out:
            raise CaseError(f"duplicate bus {bus} in load profile")
        out[bus] = _finite(row["load_mw"], f"load of bus {bus}")
    return out


def table1_loads() -> dict[int, float]:
    return read_load_profile("table1")


def apply_load_profile(net: Network, overrides: Mapping[int, float]) -> Network:
    """Replace the load of every bus named in ``overrides``."""
    index = net.bus_index()
    for bus, mw in overrides.items():
        if bus not in index:
            raise CaseError(f"unknown bus {bus}")
        if not (math.isfinite(mw) and mw >= 0):
            raise CaseError(f"negative or non-finite load, bus {bus}")
    if not overrides:
        return net
    buses = tuple(replace(b, load_mw=float(overrides[b.id])) if b.id in overrides else b
                  for b in net.buses)
    return replace(net, buses=buses)


def apply_branch_outage(net: Network, branch_id: int) -> Network:
    br = net.branch(branch_id)
    if not br.in_service:
        raise CaseError(f"branch {branch_id} is already out of service")
    return net.with_branch_status(branch_id, False)


def restore_branch(net: Network, branch_id: int) -> Network:
    br = net.branch(branch_id)
    if br.in_service:
        raise CaseError(f"branch {branch_id} is already in service")
    return net.with_branch_status(branch_id, True)


def apply_generator_outage(net: Network, gen_id: int) -> Network:
    net.generator(gen_id)
    return replace(net, generators=tuple(g for g in net.generators if g.id != gen_id))


def fixture_39bus() -> Network:
    """The 39-bus case with the modified load profile used in the case studies."""
    return apply_load_profile(ieee39(), table1_loads())


def make_network(buses: Iterable[tuple[int, float]],
                 branches: Iterable[tuple[int, int, float, float]],
                 generators: Iterable[tuple[int, float, float] | tuple[int, float, float, float]],
                 *, slack_bus: int | None = None, base_mva: float = 100.0,
                 validate_net: bool = True) -> Network:
    """Compact constructor, mostly for tests and small studies.

    ``buses`` are (id, load), ``branches`` (from, to, x_pu, rating) and
    ``generators`` (bus, pmin, pmax[, cost]); generator ids count from 1.
    """
    bus_t = tuple(Bus(int(i), float(load)) for i, load in buses)
    br_t = tuple(Branch(k, int(f), int(t), float(x), float(r))
                 for k, (f, t, x, r) in enumerate(branches, start=1))
    gen_t = []
    for k, g in enumerate(generators, start=1):
        bus, pmin, pmax, *cost = g
        gen_t.append(Generator(k, int(bus), float(pmin), float(pmax),
                               float(cost[0]) if cost else 1.0))
    net = Network(base_mva, slack_bus if slack_bus is not None else bus_t[0].id,
                  bus_t, br_t, tuple(gen_t))
    return validate(net) if validate_net else net


@dataclass(frozen=True)
class ContingencySpec:
    """A single-element outage: ``kind`` is ``"branch"`` or ``"generator"``."""

    kind: str
    element_id: int

    def __post_init__(self):
        if self.kind not in ("branch", "generator"):
            raise CaseError(f"unknown contingency kind {self.kind!r}")

    def __str__(self) -> str:
        return f"{'branch' if self.kind == 'branch' else 'gen'}:{self.element_id}"

    @classmethod
    def parse(cls, text: str) -> "ContingencySpec":
        """Parse ``branch:N`` or ``gen:N``."""
        kind, sep, ident = text.partition(":")
        kinds = {"branch": "branch", "gen": "generator", "generator": "generator"}
        if not sep or kind not in kinds:
            raise CaseError(f"contingency must look like branch:N or gen:N, got {text!r}")
        try:
            return cls(kinds[kind], int(ident))
        except ValueError:
            raise CaseError(f"bad element id in contingency {text!r}") from None

    def check(self, net: Network) -> None:
        if self.kind == "branch":
            if not net.branch(self.element_id).in_service:
                raise CaseError(f"branch {self.element_id} is already out of service")
        else:
            net.generator(self.element_id)

    def apply(self, net: Network) -> Network:
        if self.kind == "branch":
            return apply_branch_outage(net, self.element_id)
        return apply_generator_outage(net, self.element_id)


def scale_ratings(net: Network, factor: float) -> Network:
    """Scale every branch rating, e.g. to turn MVA ratings into MW limits at a power factor."""
    if not 0 < factor:
        raise CaseError("rating factor must be positive")
    if factor == 1.0:
        return net
    return replace(net, branches=tuple(replace(br, rating_mw=br.rating_mw * factor)
                                       for br in net.branches))
