"""Assignments, derived link rates, and the feasibility validator.

Triples are ``(i, j, k)``: object ``i`` requests task ``k`` and peer ``j``
serves it. ``i == j`` is internal processing, which moves no traffic and uses
no upload slot.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .model import Instance, Scenario

__all__ = [
    "StructuralError",
    "Assignment",
    "RateSet",
    "Violation",
    "ViolationReport",
    "derive_rates",
    "validate",
    "assignment_to_json",
    "assignment_from_json",
]

_EPS = 1e-9


class StructuralError(ValueError):
    """A triple that does not name a requester object, a peer and a known task."""


@dataclass(frozen=True)
class Assignment:
    u: frozenset[tuple[int, int, int]] = frozenset()
    v: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "u", frozenset(tuple(t) for t in self.u))
        object.__setattr__(self, "v", frozenset(self.v))

    def __len__(self) -> int:
        return len(self.u)

    def union(self, other: "Assignment") -> "Assignment":
        return Assignment(self.u | other.u, self.v | other.v)

    def add(self, triple: tuple[int, int, int]) -> "Assignment":
        return Assignment(self.u | {tuple(triple)}, self.v)

    def sort_key(self) -> tuple:
        """Lexicographic order used to break ties between equal optima."""
        return (tuple(sorted(self.u)), tuple(sorted(self.v)))

    def external(self) -> Iterator[tuple[int, int, int]]:
        return (t for t in self.u if t[0] != t[1])


def assignment_to_json(a: Assignment) -> str:
    doc = {"u": [list(t) for t in sorted(a.u)], "v": sorted(a.v)}
    return json.dumps(doc) + "\n"


def assignment_from_json(text: str) -> Assignment:
    doc = json.loads(text)
    return Assignment(frozenset(tuple(t) for t in doc["u"]), frozenset(doc["v"]))


@dataclass(frozen=True)
class RateSet:
    """Per-node bit rates in bit/s, zero-filled for every node of the instance."""

    dl_request: dict[int, float]  # peers: requests downloaded for processing
    dl_result: dict[int, float]  # objects: results of own requests
    ul_request: dict[int, float]  # objects: own requests sent out
    ul_result: dict[int, float]  # peers: results sent back
    relay_dl_result: dict[int, float] = field(default_factory=dict)  # relays: results destined to attached objects


def _check_structure(inst: Instance, t) -> None:
    i, j, k = t
    topo = inst.topology
    if not topo.is_object(i):
        raise StructuralError(f"triple {t}: requester {i} is not an object")
    if not (topo.is_object(j) or topo.is_relay(j)):
        raise StructuralError(f"triple {t}: server {j} is not a peer")
    if not inst.has_task(k):
        raise StructuralError(f"triple {t}: unknown task k{k}")


def derive_rates(inst: Instance, a: Assignment) -> RateSet:
    peers = inst.objects + inst.relays
    dl_req = dict.fromkeys(peers, 0.0)
    ul_res = dict.fromkeys(peers, 0.0)
    dl_res = dict.fromkeys(inst.objects, 0.0)
    ul_req = dict.fromkeys(inst.objects, 0.0)
    relay_dl = dict.fromkeys(inst.relays, 0.0)
    for t in a.u:
        _check_structure(inst, t)
        i, j, k = t
        if i == j:
            continue
        task = inst.task(k)
        dl_req[j] += task.request_bps
        ul_res[j] += task.result_bps
        ul_req[i] += task.request_bps
        dl_res[i] += task.result_bps
        relay_dl[inst.home(i)] += task.result_bps
    return RateSet(dl_req, dl_res, ul_req, ul_res, relay_dl)


@dataclass(frozen=True)
class Violation:
    constraint: int
    indices: tuple
    lhs: float
    bound: float
    note: str = ""


class ViolationReport:
    """Every violated constraint of an assignment; empty iff feasible."""

    def __init__(self, violations: Iterable[Violation] = ()):
        self.violations = tuple(violations)

    def __len__(self) -> int:
        return len(self.violations)

    def __iter__(self):
        return iter(self.violations)

    def __eq__(self, other) -> bool:
        return isinstance(other, ViolationReport) and self.violations == other.violations

    def __repr__(self) -> str:
        return f"ViolationReport({list(self.violations)!r})"

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def ids(self) -> set[int]:
        return {v.constraint for v in self.violations}

    def of(self, constraint: int) -> list[Violation]:
        return [v for v in self.violations if v.constraint == constraint]


def validate(inst: Instance, a: Assignment) -> ViolationReport:
    """Check an assignment against the full constraint set and its scenario.

    Malformed or capability-violating triples are reported under constraint
    6, since no indicator variable exists for them.
    """
    out: list[Violation] = []
    topo = inst.topology
    lim = inst.limits

    good = []
    for t in sorted(a.u):
        try:
            _check_structure(inst, t)
        except StructuralError as exc:
            out.append(Violation(6, t, 1, 0, str(exc)))
            continue
        i, j, k = t
        if not inst.can_serve(j, k):
            out.append(Violation(6, t, 1, 0, f"peer {j} cannot serve k{k}"))
            continue
        good.append(t)

    # (6) one server per request, only for requested tasks
    per_request = Counter((i, k) for i, _, k in good)
    for (i, k), n in sorted(per_request.items()):
        q = 1 if inst.requested(i, k) else 0
        if n > q:
            out.append(Violation(6, (i, k), n, q))

    # (7) tit-for-tat between every pair of distinct objects
    served_for = Counter((i, j) for i, j, _ in good if i != j and topo.is_object(j))
    pairs = {tuple(sorted(p)) for p in served_for}
    for x, y in sorted(pairs):
        lhs, rhs = served_for[(x, y)], served_for[(y, x)]
        if lhs != rhs:
            out.append(Violation(7, (x, y), lhs, rhs))

    # (9) relays serve only with an open VM; (10) VM count
    relay_count = Counter(j for _, j, _ in good if topo.is_relay(j))
    vm_eligible = set(inst.vm_relays)
    for j, n in sorted(relay_count.items()):
        if j not in vm_eligible:
            out.append(Violation(9, (j,), n, 0, "relay cannot host a VM"))
        elif j not in a.v:
            out.append(Violation(9, (j,), n, 0))
        elif n > inst.big_m:
            out.append(Violation(9, (j,), n, inst.big_m))
    bad_v = sorted(set(a.v) - vm_eligible)
    if bad_v:
        out.append(Violation(10, tuple(bad_v), len(bad_v), 0, "VM on a non-eligible node"))
    if inst.scenario is not Scenario.OBJECTS_ONLY and len(a.v) != lim.vm_budget:
        out.append(Violation(10, (), len(a.v), lim.vm_budget))

    # (11)/(12) processor capacity
    load: dict[int, float] = defaultdict(float)
    for _, j, k in good:
        load[j] += inst.task(k).workload_ghz
    for j, w in sorted(load.items()):
        cap = topo.node(j).cpu_capacity_ghz
        if w > cap + _EPS:
            out.append(Violation(11 if topo.is_object(j) else 12, (j,), w, cap))

    # (19)-(28) link rates
    rates = derive_rates(inst, Assignment(frozenset(good), a.v))
    for j in inst.objects:
        if rates.dl_request[j] > lim.dl_object_bps + _EPS:
            out.append(Violation(21, (j,), rates.dl_request[j], lim.dl_object_bps))
    for i in inst.objects:
        if rates.dl_result[i] > lim.dl_object_bps + _EPS:
            out.append(Violation(22, (i,), rates.dl_result[i], lim.dl_object_bps))
    for j in inst.relays:
        if rates.dl_request[j] > lim.dl_relay_bps + _EPS:
            out.append(Violation(23, (j,), rates.dl_request[j], lim.dl_relay_bps))
    for i in inst.objects:
        if rates.ul_request[i] > lim.ul_object_bps + _EPS:
            out.append(Violation(26, (i,), rates.ul_request[i], lim.ul_object_bps))
    for j in inst.objects:
        if rates.ul_result[j] > lim.ul_object_bps + _EPS:
            out.append(Violation(27, (j,), rates.ul_result[j], lim.ul_object_bps))
    for j in inst.relays:
        if rates.ul_result[j] > lim.ul_relay_bps + _EPS:
            out.append(Violation(28, (j,), rates.ul_result[j], lim.ul_relay_bps))

    # (29)/(30) upload slots, external triples only
    sent = Counter(i for i, j, _ in good if i != j)
    for i, n in sorted(sent.items()):
        if n > lim.upload_slots:
            out.append(Violation(29, (i,), n, lim.upload_slots))
    serves = Counter(j for i, j, _ in good if i != j and topo.is_object(j))
    for j, n in sorted(serves.items()):
        if n > lim.upload_slots:
            out.append(Violation(30, (j,), n, lim.upload_slots))

    # scenario restrictions
    if inst.scenario is Scenario.RELAYS_ONLY:
        by_objects = Counter(i for i, j, _ in good if topo.is_object(j))
        for i, n in sorted(by_objects.items()):
            out.append(Violation(31, (i,), n, 0))
    elif inst.scenario is Scenario.OBJECTS_ONLY:
        if a.v or relay_count:
            out.append(Violation(32, tuple(sorted(set(a.v) | set(relay_count))), len(a.v) + sum(relay_count.values()), 0))

    return ViolationReport(out)
