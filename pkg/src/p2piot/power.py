"""Processing- and traffic-induced power of objects and relays.

Power is steady-state: bit rate (bit/s) times energy per bit (J/bit). A
transmitter pays ``e_elec + epsilon * d**2`` per bit over distance ``d``, a
receiver pays ``e_elec``.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass

from .model import EnergyParams, Instance
from .routing import FlowSet
from .solution import Assignment

__all__ = [
    "EnergyParams",
    "CapacityExceeded",
    "FlowConsistencyError",
    "PowerReport",
    "RELAY_TERMS",
    "tx_energy_per_bit",
    "processing_power",
    "object_traffic_power",
    "relay_traffic_power",
    "power_report",
]


class CapacityExceeded(ValueError):
    """Workload above a processor's capacity; the validator should have caught it."""


class FlowConsistencyError(ValueError):
    """Relay flows whose demands do not match the assignment."""


RELAY_TERMS = (
    "send_requests_to_relays",
    "send_results_to_relays",
    "send_requests_to_objects",
    "send_results_to_objects",
    "recv_requests_from_relays",
    "recv_results_from_relays",
    "recv_requests_from_objects",
    "recv_results_from_objects",
)


def tx_energy_per_bit(distance: float, p: EnergyParams) -> float:
    if distance < 0:
        raise ValueError(f"negative distance {distance}")
    return p.e_elec + p.epsilon * distance * distance


def processing_power(inst: Instance, a: Assignment) -> dict[int, float]:
    """CPU power of every peer: served workload scaled by max power over capacity."""
    load: dict[int, float] = defaultdict(float)
    for _, j, k in a.u:
        load[j] += inst.task(k).workload_ghz
    out = {}
    for node in inst.topology.nodes:
        w = load.get(node.id, 0.0)
        if w > node.cpu_capacity_ghz * (1 + 1e-12):
            raise CapacityExceeded(f"node {node.id}: load {w} GHz > capacity {node.cpu_capacity_ghz} GHz")
        out[node.id] = w * node.cpu_max_power_w / node.cpu_capacity_ghz
    return out


def object_traffic_power(inst: Instance, a: Assignment, terms: bool = False):
    """Radio power of each object (four terms: send requests, send results,
    receive requests, receive results). Returns per-object watts, or per-object
    4-tuples when ``terms`` is set."""
    p = inst.energy
    acc = {i: [0.0, 0.0, 0.0, 0.0] for i in inst.objects}
    for i, j, k in a.u:
        if i == j:
            continue
        task = inst.task(k)
        acc[i][0] += task.request_bps * tx_energy_per_bit(inst.distance(i, inst.home(i)), p)
        acc[i][3] += task.result_bps * p.e_elec
        if inst.topology.is_object(j):
            acc[j][1] += task.result_bps * tx_energy_per_bit(inst.distance(j, inst.home(j)), p)
            acc[j][2] += task.request_bps * p.e_elec
    if terms:
        return {i: tuple(v) for i, v in acc.items()}
    return {i: sum(v) for i, v in acc.items()}


def _demands_of(inst: Instance, a: Assignment):
    dq: dict = defaultdict(float)
    ds: dict = defaultdict(float)
    for i, j, k in a.u:
        if i == j:
            continue
        x, y = inst.home(i), inst.home(j)
        if x != y:
            dq[(x, y)] += inst.task(k).request_bps
            ds[(y, x)] += inst.task(k).result_bps
    return dq, ds


def _check_flows(inst: Instance, a: Assignment, flows: FlowSet) -> None:
    dq, ds = _demands_of(inst, a)
    for want, got, kind in ((dq, flows.demand_q, "request"), (ds, flows.demand_s, "result")):
        for pair in set(want) | set(got):
            w, g = want.get(pair, 0.0), got.get(pair, 0.0)
            if abs(w - g) > 1e-6 * max(1.0, w):
                raise FlowConsistencyError(f"{kind} demand {pair}: flows carry {g} bit/s, assignment needs {w}")


def relay_traffic_power(inst: Instance, a: Assignment, flows: FlowSet, terms: bool = False):
    """Radio power of each relay, split into the eight send/receive groups of
    :data:`RELAY_TERMS`. Returns per-relay watts, or per-relay 8-tuples when
    ``terms`` is set."""
    _check_flows(inst, a, flows)
    p = inst.energy
    acc = {r: [0.0] * 8 for r in inst.relays}
    for (ra, rb), bps in flows.link_q.items():
        acc[ra][0] += bps * tx_energy_per_bit(inst.distance(ra, rb), p)
        acc[rb][4] += bps * p.e_elec
    for (ra, rb), bps in flows.link_s.items():
        acc[ra][1] += bps * tx_energy_per_bit(inst.distance(ra, rb), p)
        acc[rb][5] += bps * p.e_elec
    for i, j, k in a.u:
        if i == j:
            continue
        task = inst.task(k)
        gi = inst.home(i)
        acc[gi][6] += task.request_bps * p.e_elec
        acc[gi][3] += task.result_bps * tx_energy_per_bit(inst.distance(gi, i), p)
        if inst.topology.is_object(j):
            gj = inst.home(j)
            acc[gj][2] += task.request_bps * tx_energy_per_bit(inst.distance(gj, j), p)
            acc[gj][7] += task.result_bps * p.e_elec
    if terms:
        return {r: tuple(v) for r, v in acc.items()}
    return {r: sum(v) for r, v in acc.items()}


@dataclass(frozen=True)
class PowerReport:
    object_processing: dict[int, float]
    relay_processing: dict[int, float]
    object_traffic: dict[int, float]
    relay_traffic: dict[int, float]
    relay_traffic_terms: dict[int, tuple[float, ...]]
    scenario: str = ""

    @property
    def object_processing_total(self) -> float:
        return sum(self.object_processing.values())

    @property
    def relay_processing_total(self) -> float:
        return sum(self.relay_processing.values())

    @property
    def object_traffic_total(self) -> float:
        return sum(self.object_traffic.values())

    @property
    def relay_traffic_total(self) -> float:
        return sum(self.relay_traffic.values())

    @property
    def processing_total(self) -> float:
        return self.object_processing_total + self.relay_processing_total

    @property
    def traffic_total(self) -> float:
        return self.object_traffic_total + self.relay_traffic_total

    @property
    def total(self) -> float:
        return self.processing_total + self.traffic_total

    def to_csv(self) -> str:
        """One row per node, powers in microwatts."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node", "kind", "processing_uw", "traffic_uw"])
        for node, proc in sorted(self.object_processing.items()):
            w.writerow([node, "object", f"{proc * 1e6:.6f}", f"{self.object_traffic[node] * 1e6:.6f}"])
        for node, proc in sorted(self.relay_processing.items()):
            w.writerow([node, "relay", f"{proc * 1e6:.6f}", f"{self.relay_traffic[node] * 1e6:.6f}"])
        return buf.getvalue()


def power_report(inst: Instance, a: Assignment, flows: FlowSet) -> PowerReport:
    proc = processing_power(inst, a)
    terms = relay_traffic_power(inst, a, flows, terms=True)
    return PowerReport(
        object_processing={i: proc[i] for i in inst.objects},
        relay_processing={r: proc[r] for r in inst.relays},
        object_traffic=object_traffic_power(inst, a),
        relay_traffic={r: sum(v) for r, v in terms.items()},
        relay_traffic_terms=terms,
        scenario=inst.scenario.value,
    )
