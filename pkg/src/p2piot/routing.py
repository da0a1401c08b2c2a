"""Min-hop relay routing and the relay-to-relay commodity flows.

Request commodities run from the requester's home relay ``x`` to the
server's relay ``y`` (its home relay, or itself for a VM relay); result
commodities run back from ``y`` to ``x``.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict, deque
from dataclasses import dataclass, field

from .model import Instance, Topology
from .solution import Assignment, Violation, ViolationReport

__all__ = [
    "RoutingError",
    "FlowSet",
    "min_hop_path",
    "hop_count",
    "build_flows",
    "check_conservation",
    "flows_to_csv",
]

_TOL = 1e-6


class RoutingError(RuntimeError):
    pass


Pair = tuple[int, int]


@dataclass(frozen=True)
class FlowSet:
    """Relay-level demands, per-commodity link flows and per-link totals (bit/s).

    ``commodity_q[(x, y)][(a, b)]`` is the request traffic of commodity
    ``(x, y)`` on the directed link ``a -> b``.
    """

    demand_q: dict[Pair, float] = field(default_factory=dict)
    demand_s: dict[Pair, float] = field(default_factory=dict)
    commodity_q: dict[Pair, dict[Pair, float]] = field(default_factory=dict)
    commodity_s: dict[Pair, dict[Pair, float]] = field(default_factory=dict)
    link_q: dict[Pair, float] = field(default_factory=dict)
    link_s: dict[Pair, float] = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not (self.demand_q or self.demand_s)

    @classmethod
    def from_commodities(cls, demand_q, demand_s, commodity_q, commodity_s) -> "FlowSet":
        """Assemble a flow set, computing the per-link aggregates."""
        return cls(dict(demand_q), dict(demand_s), commodity_q, commodity_s,
                   _aggregate(commodity_q), _aggregate(commodity_s))


def _aggregate(commodities: dict[Pair, dict[Pair, float]]) -> dict[Pair, float]:
    total: dict[Pair, float] = defaultdict(float)
    for links in commodities.values():
        for link, bps in links.items():
            total[link] += bps
    return {k: v for k, v in sorted(total.items()) if v}


def min_hop_path(topo: Topology, src: int, dst: int) -> list[Pair]:
    """Breadth-first shortest path as a list of directed links.

    Neighbours are expanded in ascending id order and the first discovery
    wins, so ties always resolve the same way.
    """
    if src == dst:
        return []
    parent = {src: None}
    queue = deque([src])
    while queue:
        a = queue.popleft()
        for b in sorted(topo.relay_adjacency[a]):
            if b in parent:
                continue
            parent[b] = a
            if b == dst:
                path = []
                node = dst
                while parent[node] is not None:
                    path.append((parent[node], node))
                    node = parent[node]
                return path[::-1]
            queue.append(b)
    raise RoutingError(f"no relay path from {src} to {dst}")


def hop_count(topo: Topology, src: int, dst: int) -> int:
    return len(min_hop_path(topo, src, dst))


def build_flows(inst: Instance, a: Assignment, results: str = "reverse") -> FlowSet:
    """Route every external triple along min-hop relay paths.

    ``results="reverse"`` sends result traffic back along the reversed
    request path; ``"independent"`` routes it with its own min-hop search.
    """
    if results not in ("reverse", "independent"):
        raise ValueError(f"results must be 'reverse' or 'independent', not {results!r}")
    topo = inst.topology
    demand_q: dict[Pair, float] = defaultdict(float)
    demand_s: dict[Pair, float] = defaultdict(float)
    for i, j, k in a.u:
        if i == j:
            continue
        x, y = inst.home(i), inst.home(j)
        if x == y:
            continue
        task = inst.task(k)
        demand_q[(x, y)] += task.request_bps
        demand_s[(y, x)] += task.result_bps

    paths: dict[Pair, list[Pair]] = {}

    def path(src, dst):
        if (src, dst) not in paths:
            paths[(src, dst)] = min_hop_path(topo, src, dst)
        return paths[(src, dst)]

    commodity_q = {}
    for (x, y), bps in sorted(demand_q.items()):
        commodity_q[(x, y)] = {link: bps for link in path(x, y)}
    commodity_s = {}
    for (y, x), bps in sorted(demand_s.items()):
        if results == "reverse":
            links = [(b, a_) for a_, b in reversed(path(x, y))]
        else:
            links = path(y, x)
        commodity_s[(y, x)] = {link: bps for link in links}
    return FlowSet.from_commodities(dict(sorted(demand_q.items())), dict(sorted(demand_s.items())),
                                   commodity_q, commodity_s)


def check_conservation(topo: Topology, f: FlowSet) -> ViolationReport:
    """Signed balance of every commodity at every relay.

    Imbalances are reported under 15 (requests) and 16 (results); flows on
    non-adjacent relay pairs and aggregate mismatches under 17 / 18.
    """
    out = []
    relays = topo.relay_ids
    for cid, demands, commodities, links in (
        (15, f.demand_q, f.commodity_q, f.link_q),
        (16, f.demand_s, f.commodity_s, f.link_s),
    ):
        agg_id = cid + 2
        for (x, y) in sorted(set(demands) | set(commodities)):
            flows = commodities.get((x, y), {})
            demand = demands.get((x, y), 0.0)
            net: dict[int, float] = defaultdict(float)
            for (a, b), bps in flows.items():
                if b not in topo.relay_adjacency.get(a, ()):
                    out.append(Violation(agg_id, (x, y, a, b), bps, 0, "flow on a non-adjacent pair"))
                net[a] += bps
                net[b] -= bps
            for a in relays:
                want = demand if a == x else -demand if a == y else 0.0
                if abs(net[a] - want) > _TOL * max(1.0, abs(want)):
                    out.append(Violation(cid, (x, y, a), net[a], want))
        expected = _aggregate(commodities)
        for link in sorted(set(expected) | set(links)):
            got, want = links.get(link, 0.0), expected.get(link, 0.0)
            if abs(got - want) > _TOL * max(1.0, abs(want)):
                out.append(Violation(agg_id, link, got, want, "aggregate differs from commodity sum"))
    return ViolationReport(out)


def flows_to_csv(f: FlowSet) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "a", "b", "kind", "bps"])
    for kind, commodities in (("Q", f.commodity_q), ("S", f.commodity_s)):
        for (x, y) in sorted(commodities):
            for (a, b), bps in sorted(commodities[(x, y)].items()):
                w.writerow([x, y, a, b, kind, f"{bps:.6f}"])
    return buf.getvalue()
