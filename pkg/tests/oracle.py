"""Brute-force reference optimum for tiny instances.

Walks every way of giving each request one server or none, with its own
feasibility bookkeeping (nothing from the validator or the MILP). The
value of an assignment is the sum of per-triple values; power is linear
in the triples, so a triple's value is F minus the power of that triple
alone. On grids with equal link lengths min-hop routing is also the
cheapest routing, so these singleton powers match the MILP's optimum.
"""

from __future__ import annotations

from collections import Counter

from p2piot.model import Instance, Scenario
from p2piot.power import power_report
from p2piot.routing import build_flows
from p2piot.solution import Assignment


def triple_power(inst: Instance, t) -> float:
    a = Assignment(frozenset([t]))
    return power_report(inst, a, build_flows(inst, a)).total


def objective_values(inst: Instance) -> dict:
    """F minus standalone power, for every structurally possible triple."""
    out = {}
    for i, k in inst.requests:
        for j in _servers(inst, i, k):
            if inst.task(k).workload_ghz > inst.topology.node(j).cpu_capacity_ghz:
                continue  # never feasible, and power refuses overloads
            out[(i, j, k)] = inst.task_weight - triple_power(inst, (i, j, k))
    return out


def _servers(inst: Instance, i, k):
    topo = inst.topology
    out = []
    for j in inst.objects:
        if inst.scenario is Scenario.RELAYS_ONLY:
            break
        if k in inst.capability.get(j, ()):
            out.append(j)
    if inst.scenario is not Scenario.OBJECTS_ONLY:
        for j in inst.relays:
            if topo.node(j).can_host_vm and k in inst.capability.get(j, ()):
                out.append(j)
    return out


def best(inst: Instance, values: dict | None = None):
    """Maximum total value over feasible assignments, and one maximiser.

    ``values`` maps triples to their worth (default: the MILP objective
    terms). Returns ``(None, None)`` when no assignment is feasible at all.
    """
    values = objective_values(inst) if values is None else values
    topo = inst.topology
    lim = inst.limits
    budget = lim.vm_budget
    n_vm = sum(1 for r in topo.relays if r.can_host_vm)
    if inst.scenario is not Scenario.OBJECTS_ONLY and budget > n_vm:
        return None, None

    requests = sorted(inst.requests)
    options = [[t for t in ((i, j, k) for j in _servers(inst, i, k)) if t in values] for i, k in requests]
    gain = [max([0.0] + [values[t] for t in opts]) for opts in options]
    tail = [0.0] * (len(requests) + 1)
    for n in range(len(requests) - 1, -1, -1):
        tail[n] = tail[n + 1] + gain[n]

    def ul(n):
        return lim.ul_object_bps if topo.is_object(n) else lim.ul_relay_bps

    def dl(n):
        return lim.dl_object_bps if topo.is_object(n) else lim.dl_relay_bps

    load = Counter()
    idm, idc, ium, iuc = Counter(), Counter(), Counter(), Counter()
    sent, serves = Counter(), Counter()
    relays_used = Counter()
    pair = Counter()
    chosen = []
    state = {"best": None, "pick": None}
    eps = 1e-9

    def fits(i, j, k) -> bool:
        task = inst.task(k)
        if load[j] + task.workload_ghz > topo.node(j).cpu_capacity_ghz + eps:
            return False
        if topo.is_relay(j) and not relays_used[j] and len(+relays_used) + 1 > budget:
            return False
        if i == j:
            return True
        return (ium[i] + task.request_bps <= ul(i) + eps and idc[i] + task.result_bps <= dl(i) + eps
                and idm[j] + task.request_bps <= dl(j) + eps and iuc[j] + task.result_bps <= ul(j) + eps
                and sent[i] + 1 <= lim.upload_slots
                and (topo.is_relay(j) or serves[j] + 1 <= lim.upload_slots))

    def apply(i, j, k, s):
        task = inst.task(k)
        load[j] += s * task.workload_ghz
        if topo.is_relay(j):
            relays_used[j] += s
        if i != j:
            ium[i] += s * task.request_bps
            idc[i] += s * task.result_bps
            idm[j] += s * task.request_bps
            iuc[j] += s * task.result_bps
            sent[i] += s
            if topo.is_object(j):
                serves[j] += s
                pair[(i, j)] += s

    def balanced() -> bool:
        return all(pair[(a, b)] == pair[(b, a)] for a, b in list(pair))

    def walk(n, value):
        if state["best"] is not None and value + tail[n] <= state["best"]:
            return
        if n == len(requests):
            if balanced():
                state["best"] = value
                state["pick"] = list(chosen)
            return
        for t in options[n]:
            if fits(*t):
                apply(*t, 1)
                chosen.append(t)
                walk(n + 1, value + values[t])
                chosen.pop()
                apply(*t, -1)
        walk(n + 1, value)

    walk(0, 0.0)
    if state["pick"] is None:
        return None, None
    u = frozenset(state["pick"])
    v = set(j for _, j, _ in u if topo.is_relay(j))
    if inst.scenario is not Scenario.OBJECTS_ONLY:
        for r in topo.relays:
            if len(v) >= budget:
                break
            if r.can_host_vm:
                v.add(r.id)
    return state["best"], Assignment(u, frozenset(v))
