"""Greedy relay-first task assignment with paired object exchanges.

Requests are handled in two sweeps. The first offers every request to the
VM relays, nearest (in hops) first, opening VMs on demand until the budget
is spent. The second takes whatever is still unserved and tries internal
processing, then the other objects in id order. An object serves another only
as one half of an exchange committed together with the reverse direction,
so the pairwise serve counts stay balanced at every step.

Every candidate is judged by the serving checks:

    i    request not yet served
    ii   upload rates of requester and server stay within their limits
    iii  download rates of server and requester stay within their limits
    iv   upload slots of requester (and of an object server)
    v    VM available on the relay, or budget left to open one
    vi   server processor capacity
"""

from __future__ import annotations

import json
import random
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, NamedTuple

from .model import Instance, Scenario
from .power import power_report
from .routing import FlowSet, build_flows, hop_count
from .solution import Assignment, ViolationReport, validate

__all__ = [
    "ServingCheck",
    "Decision",
    "HeuristicResult",
    "InvalidAssignmentError",
    "default_order",
    "shuffled_order",
    "run",
    "score",
    "trace_to_jsonl",
]

_EPS = 1e-9


@dataclass(frozen=True)
class ServingCheck:
    check: str  # "i" .. "vi"
    passed: bool
    value: float
    bound: float


@dataclass
class Decision:
    """What happened to one request: who was tried, and the outcome."""

    request: tuple[int, int]
    outcome: str = "blocked"  # served | blocked
    server: int | None = None
    phase: str | None = None  # relay | internal | exchange
    paired_with: tuple[int, int] | None = None
    candidates: list[dict] = field(default_factory=list)

    @property
    def candidate_count(self) -> int:
        return len(self.candidates)


class HeuristicResult(NamedTuple):
    assignment: Assignment
    flows: FlowSet
    trace: list[Decision]


class InvalidAssignmentError(ValueError):
    def __init__(self, report: ViolationReport):
        super().__init__(f"assignment violates constraints {sorted(report.ids)}")
        self.report = report


def default_order(inst: Instance) -> list[tuple[int, int]]:
    return sorted(inst.requests)


def shuffled_order(inst: Instance, seed: int) -> list[tuple[int, int]]:
    order = default_order(inst)
    random.Random(seed).shuffle(order)
    return order


class _State:
    """Running rates, loads and slot counts of a partial assignment."""

    def __init__(self, inst: Instance):
        self.inst = inst
        self.u: set[tuple[int, int, int]] = set()
        self.v: set[int] = set()
        self.served: set[tuple[int, int]] = set()
        self.ul_req = defaultdict(float)
        self.ul_res = defaultdict(float)
        self.dl_req = defaultdict(float)
        self.dl_res = defaultdict(float)
        self.load = defaultdict(float)
        self.sent = defaultdict(int)
        self.serves = defaultdict(int)

    def _ul_limit(self, n):
        lim = self.inst.limits
        return lim.ul_object_bps if self.inst.topology.is_object(n) else lim.ul_relay_bps

    def _dl_limit(self, n):
        lim = self.inst.limits
        return lim.dl_object_bps if self.inst.topology.is_object(n) else lim.dl_relay_bps

    def checks(self, i: int, j: int, k: int) -> list[ServingCheck]:
        """Run the applicable checks in order, stopping at the first failure."""
        inst = self.inst
        task = inst.task(k)
        relay = inst.topology.is_relay(j)
        out = []

        def add(check, value, bound):
            out.append(ServingCheck(check, value <= bound + _EPS, value, bound))
            return out[-1].passed

        if not add("i", 1.0 if (i, k) in self.served else 0.0, 0.0):
            return out
        if i != j:
            if not add("ii", task.request_bps, self._ul_limit(i) - self.ul_req[i]):
                return out
            if not add("ii", task.result_bps, self._ul_limit(j) - self.ul_res[j]):
                return out
            if not add("iii", task.request_bps, self._dl_limit(j) - self.dl_req[j]):
                return out
            if not add("iii", task.result_bps, self._dl_limit(i) - self.dl_res[i]):
                return out
            if not add("iv", self.sent[i] + 1, inst.limits.upload_slots):
                return out
            if not relay and not add("iv", self.serves[j] + 1, inst.limits.upload_slots):
                return out
        if relay and j not in self.v:
            if not add("v", len(self.v) + 1, inst.limits.vm_budget):
                return out
        add("vi", self.load[j] + task.workload_ghz, inst.topology.node(j).cpu_capacity_ghz)
        return out

    def commit(self, i: int, j: int, k: int) -> None:
        task = self.inst.task(k)
        self.u.add((i, j, k))
        self.served.add((i, k))
        self.load[j] += task.workload_ghz
        if self.inst.topology.is_relay(j):
            self.v.add(j)
        if i != j:
            self.ul_req[i] += task.request_bps
            self.ul_res[j] += task.result_bps
            self.dl_req[j] += task.request_bps
            self.dl_res[i] += task.result_bps
            self.sent[i] += 1
            if self.inst.topology.is_object(j):
                self.serves[j] += 1

    def rollback(self, i: int, j: int, k: int) -> None:
        task = self.inst.task(k)
        self.u.discard((i, j, k))
        self.served.discard((i, k))
        self.load[j] -= task.workload_ghz
        if i != j:
            self.ul_req[i] -= task.request_bps
            self.ul_res[j] -= task.result_bps
            self.dl_req[j] -= task.request_bps
            self.dl_res[i] -= task.result_bps
            self.sent[i] -= 1
            if self.inst.topology.is_object(j):
                self.serves[j] -= 1


def _record(decision: Decision, peer: int, checks: list[ServingCheck], **extra) -> None:
    entry = {"peer": peer, "checks": [asdict(c) for c in checks], "accepted": all(c.passed for c in checks)}
    entry.update(extra)
    decision.candidates.append(entry)


def _relay_sweep(inst: Instance, st: _State, order, trace: dict) -> None:
    by_home: dict[int, list[int]] = {}
    for i, k in order:
        d = trace[(i, k)]
        g = inst.home(i)
        if g not in by_home:
            by_home[g] = [r for _, r in sorted((hop_count(inst.topology, g, r), r) for r in inst.vm_relays)]
        for r in by_home[g]:
            if not inst.can_serve(r, k):
                continue
            checks = st.checks(i, r, k)
            _record(d, r, checks)
            if checks[-1].passed:
                st.commit(i, r, k)
                d.outcome, d.server, d.phase = "served", r, "relay"
                break


def _object_sweep(inst: Instance, st: _State, order, trace: dict) -> None:
    for i, k in order:
        if (i, k) in st.served:
            continue
        d = trace[(i, k)]
        if inst.can_serve(i, k):
            checks = st.checks(i, i, k)
            _record(d, i, checks)
            if checks[-1].passed:
                st.commit(i, i, k)
                d.outcome, d.server, d.phase = "served", i, "internal"
                continue
        # objects are searched in id order, regardless of distance
        for j in inst.objects:
            if j == i or not inst.can_serve(j, k):
                continue
            checks = st.checks(i, j, k)
            if not checks[-1].passed:
                _record(d, j, checks)
                continue
            # tentatively accept, then look for a request of j that i can return
            st.commit(i, j, k)
            back = None
            back_checks = []
            for jj, kk in order:
                if jj != j or (jj, kk) in st.served or not inst.can_serve(i, kk):
                    continue
                back_checks = st.checks(j, i, kk)
                if back_checks[-1].passed:
                    back = kk
                    break
            if back is None:
                st.rollback(i, j, k)
                # no request of j that i could serve in return
                _record(d, j, checks, reciprocal=None, reciprocal_checks=[asdict(c) for c in back_checks])
                continue
            st.commit(j, i, back)
            _record(d, j, checks, reciprocal=[j, back])
            d.outcome, d.server, d.phase, d.paired_with = "served", j, "exchange", (j, back)
            rd = trace[(j, back)]
            _record(rd, i, back_checks, reciprocal=[i, k])
            rd.outcome, rd.server, rd.phase, rd.paired_with = "served", i, "exchange", (i, k)
            break


def run(inst: Instance, order: Iterable[tuple[int, int]] | None = None, results: str = "reverse") -> HeuristicResult:
    """Assign every request greedily; blocked requests stay unassigned.

    ``order`` fixes the arrival order of requests (default ascending
    ``(object, task)``); it must be a permutation of the instance's requests.
    """
    order = default_order(inst) if order is None else [tuple(r) for r in order]
    if sorted(order) != default_order(inst):
        raise ValueError("order must list every request exactly once")
    st = _State(inst)
    trace = {r: Decision(r) for r in order}

    if inst.scenario is not Scenario.OBJECTS_ONLY:
        _relay_sweep(inst, st, order, trace)
    if inst.scenario is not Scenario.RELAYS_ONLY:
        _object_sweep(inst, st, order, trace)

    v = set(st.v)
    if inst.scenario is not Scenario.OBJECTS_ONLY:
        # the VM count is fixed, so unused budget opens idle VMs on the lowest ids
        for r in inst.vm_relays:
            if len(v) >= inst.limits.vm_budget:
                break
            v.add(r)
    a = Assignment(frozenset(st.u), frozenset(v))
    return HeuristicResult(a, build_flows(inst, a, results=results), [trace[r] for r in order])


def score(inst: Instance, a: Assignment, flows: FlowSet | None = None) -> tuple[int, float]:
    """Served-task count and total power in watts; refuses invalid input."""
    report = validate(inst, a)
    if not report.ok:
        raise InvalidAssignmentError(report)
    flows = build_flows(inst, a) if flows is None else flows
    return len(a), power_report(inst, a, flows).total


def trace_to_jsonl(trace: list[Decision]) -> str:
    lines = []
    for d in trace:
        doc = asdict(d)
        doc["request"] = list(d.request)
        doc["candidate_count"] = d.candidate_count
        lines.append(json.dumps(doc, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")
