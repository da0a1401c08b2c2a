"""Abstract MILP: variables, linear rows and the objective.

Variable families (binaries first, then continuous, each in index order):

    U_i{i}_j{j}_k{k}       1 if peer j serves object i's request for task k
    V_j{j}                 1 if relay j hosts an open VM
    IDM_j / IUC_j          request download / result upload of peer j
    IDC_i / IUM_i          result download / request upload of object i
    LQ_x{x}_y{y}, LS_...   relay-to-relay request / result demand
    FQ_x_y_a_b, FS_...     commodity (x, y) on directed link a -> b
    AQ_a{a}_b{b}, AS_...   all commodities on link a -> b

Rows are named ``c{n}_...`` after the constraint family they belong to.
Empty rows that are trivially satisfied are dropped.
"""

from __future__ import annotations

import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field

from ..model import Instance, Scenario
from ..power import tx_energy_per_bit

__all__ = ["Variable", "Constraint", "MilpModel", "build", "family_of"]

INF = math.inf


@dataclass(frozen=True)
class Variable:
    name: str
    binary: bool = False
    lb: float = 0.0
    ub: float = INF


@dataclass(frozen=True)
class Constraint:
    name: str
    terms: tuple[tuple[int, float], ...]
    sense: str  # "<=", ">=", "="
    rhs: float

    @property
    def family(self) -> str:
        return family_of(self.name)


def family_of(name: str) -> str:
    """``c13_x2_y3`` -> ``c13``, ``FQ_x2_y3_a2_b3`` -> ``FQ``."""
    return name.split("_", 1)[0]


@dataclass
class MilpModel:
    variables: list[Variable] = field(default_factory=list)
    constraints: list[Constraint] = field(default_factory=list)
    objective: dict[int, float] = field(default_factory=dict)
    sense: str = "maximize"
    name: str = "p2piot"

    def __post_init__(self):
        self._index = {v.name: n for n, v in enumerate(self.variables)}

    def index(self, name: str) -> int:
        return self._index[name]

    def add_variable(self, var: Variable) -> int:
        if var.name in self._index:
            raise ValueError(f"duplicate variable {var.name}")
        self._index[var.name] = len(self.variables)
        self.variables.append(var)
        return self._index[var.name]

    def add_constraint(self, name: str, terms, sense: str, rhs: float) -> None:
        merged: dict[int, float] = {}
        for idx, coef in terms:
            merged[idx] = merged.get(idx, 0.0) + coef
        merged = {i: c for i, c in merged.items() if c != 0.0}
        if not merged:
            ok = {"<=": 0 <= rhs, ">=": 0 >= rhs, "=": rhs == 0}[sense]
            if ok:
                return
        self.constraints.append(Constraint(name, tuple(merged.items()), sense, float(rhs)))

    @property
    def binaries(self) -> list[int]:
        return [n for n, v in enumerate(self.variables) if v.binary]

    def counts(self) -> dict:
        """Variable and constraint counts by family."""
        vars_: dict[str, int] = defaultdict(int)
        rows: dict[str, int] = defaultdict(int)
        for v in self.variables:
            vars_[family_of(v.name)] += 1
        for c in self.constraints:
            rows[c.family] += 1
        return {
            "variables": dict(sorted(vars_.items())),
            "constraints": dict(sorted(rows.items(), key=lambda kv: int(kv[0][1:]))),
            "n_variables": len(self.variables),
            "n_constraints": len(self.constraints),
            "n_binary": sum(v.binary for v in self.variables),
        }

    def evaluate(self, x) -> float:
        return sum(coef * x[i] for i, coef in self.objective.items())


def _u(i, j, k):
    return f"U_i{i}_j{j}_k{k}"


def build(inst: Instance) -> MilpModel:
    topo = inst.topology
    e = inst.energy
    lim = inst.limits
    objects = inst.objects
    relays = inst.relays
    peers = objects + relays
    vm = inst.vm_relays
    m = MilpModel(name=f"p2piot_{inst.scenario.value}")
    obj: dict[int, float] = {}

    max_served = len(inst.requests)
    if vm and inst.big_m < max_served:
        warnings.warn(f"big-M {inst.big_m} is below the {max_served} requests a VM could serve", stacklevel=2)

    # -- binaries
    triples = sorted((i, j, k) for i, k in inst.requests for j in inst.candidates(i, k))
    u_idx = {t: m.add_variable(Variable(_u(*t), binary=True)) for t in triples}
    v_idx = {j: m.add_variable(Variable(f"V_j{j}", binary=True)) for j in vm}

    # -- continuous
    idm = {j: m.add_variable(Variable(f"IDM_j{j}")) for j in peers}
    idc = {i: m.add_variable(Variable(f"IDC_i{i}")) for i in objects}
    ium = {i: m.add_variable(Variable(f"IUM_i{i}")) for i in objects}
    iuc = {j: m.add_variable(Variable(f"IUC_j{j}")) for j in peers}
    pairs = [(x, y) for x in relays for y in relays if x != y]
    links = topo.relay_links()
    lq = {p: m.add_variable(Variable(f"LQ_x{p[0]}_y{p[1]}")) for p in pairs}
    ls = {p: m.add_variable(Variable(f"LS_x{p[0]}_y{p[1]}")) for p in pairs}
    fq = {(p, l): m.add_variable(Variable(f"FQ_x{p[0]}_y{p[1]}_a{l[0]}_b{l[1]}")) for p in pairs for l in links}
    fs = {(p, l): m.add_variable(Variable(f"FS_x{p[0]}_y{p[1]}_a{l[0]}_b{l[1]}")) for p in pairs for l in links}
    aq = {l: m.add_variable(Variable(f"AQ_a{l[0]}_b{l[1]}")) for l in links}
    as_ = {l: m.add_variable(Variable(f"AS_a{l[0]}_b{l[1]}")) for l in links}

    # -- objective: F per served request minus linear power
    for t, n in u_idx.items():
        i, j, k = t
        task = inst.task(k)
        node = topo.node(j)
        coef = inst.task_weight - task.workload_ghz * node.cpu_max_power_w / node.cpu_capacity_ghz
        if i != j:
            coef -= task.request_bps * tx_energy_per_bit(inst.distance(i, inst.home(i)), e)
            coef -= task.result_bps * e.e_elec
            if topo.is_object(j):
                coef -= task.result_bps * tx_energy_per_bit(inst.distance(j, inst.home(j)), e)
                coef -= task.request_bps * e.e_elec
        obj[n] = coef
    for l in links:
        hop = tx_energy_per_bit(inst.distance(*l), e) + e.e_elec
        obj[aq[l]] = -hop
        obj[as_[l]] = -hop
    for j in objects:
        obj[idm[j]] = -tx_energy_per_bit(inst.distance(inst.home(j), j), e)
        obj[idc[j]] = -tx_energy_per_bit(inst.distance(inst.home(j), j), e)
        obj[ium[j]] = -e.e_elec
        obj[iuc[j]] = -e.e_elec
    m.objective = {n: c for n, c in sorted(obj.items()) if c != 0.0}

    by_request = defaultdict(list)
    by_server = defaultdict(list)
    by_requester = defaultdict(list)
    for t in triples:
        by_request[(t[0], t[2])].append(t)
        by_server[t[1]].append(t)
        by_requester[t[0]].append(t)

    def W(t):
        return inst.task(t[2]).workload_ghz

    def M(t):
        return inst.task(t[2]).request_bps

    def C(t):
        return inst.task(t[2]).result_bps

    # (6) one server per request
    for (i, k) in sorted(by_request):
        m.add_constraint(f"c6_i{i}_k{k}", [(u_idx[t], 1.0) for t in by_request[(i, k)]], "<=", 1.0)

    # (7) tit-for-tat
    for a_ in objects:
        for b_ in objects:
            if a_ >= b_:
                continue
            terms = [(u_idx[t], 1.0) for t in by_requester[a_] if t[1] == b_]
            terms += [(u_idx[t], -1.0) for t in by_requester[b_] if t[1] == a_]
            if terms:
                m.add_constraint(f"c7_i{a_}_j{b_}", terms, "=", 0.0)

    # (9) VM linking; (10) or (32) VM count
    for j in vm:
        terms = [(u_idx[t], 1.0) for t in by_server[j]] + [(v_idx[j], -inst.big_m)]
        m.add_constraint(f"c9_j{j}", terms, "<=", 0.0)
    if inst.scenario is Scenario.OBJECTS_ONLY:
        m.add_constraint("c32", [(v_idx[j], 1.0) for j in vm], "=", 0.0)
    else:
        m.add_constraint("c10", [(v_idx[j], 1.0) for j in vm], "=", float(lim.vm_budget))

    # (11)/(12) processor capacity
    for j in objects:
        m.add_constraint(f"c11_j{j}", [(u_idx[t], W(t)) for t in by_server[j]], "<=", topo.node(j).cpu_capacity_ghz)
    for j in relays:
        m.add_constraint(f"c12_j{j}", [(u_idx[t], W(t)) for t in by_server[j]], "<=", topo.node(j).cpu_capacity_ghz)

    # (13)/(14) relay demands
    ext = [t for t in triples if t[0] != t[1]]
    dq = defaultdict(list)
    ds = defaultdict(list)
    for t in ext:
        x, y = inst.home(t[0]), inst.home(t[1])
        if x != y:
            dq[(x, y)].append(t)
            ds[(y, x)].append(t)
    for p in pairs:
        m.add_constraint(f"c13_x{p[0]}_y{p[1]}", [(lq[p], 1.0)] + [(u_idx[t], -M(t)) for t in dq[p]], "=", 0.0)
    for p in pairs:
        m.add_constraint(f"c14_x{p[0]}_y{p[1]}", [(ls[p], 1.0)] + [(u_idx[t], -C(t)) for t in ds[p]], "=", 0.0)

    # (15)/(16) conservation
    out_links = defaultdict(list)
    in_links = defaultdict(list)
    for l in links:
        out_links[l[0]].append(l)
        in_links[l[1]].append(l)
    for fam, flow, dem in (("c15", fq, lq), ("c16", fs, ls)):
        for p in pairs:
            x, y = p
            for a_ in relays:
                terms = [(flow[(p, l)], 1.0) for l in out_links[a_]]
                terms += [(flow[(p, l)], -1.0) for l in in_links[a_]]
                if a_ == x:
                    terms.append((dem[p], -1.0))
                elif a_ == y:
                    terms.append((dem[p], 1.0))
                m.add_constraint(f"{fam}_x{x}_y{y}_a{a_}", terms, "=", 0.0)

    # (17)/(18) link aggregates
    for fam, flow, agg in (("c17", fq, aq), ("c18", fs, as_)):
        for l in links:
            terms = [(agg[l], 1.0)] + [(flow[(p, l)], -1.0) for p in pairs]
            m.add_constraint(f"{fam}_a{l[0]}_b{l[1]}", terms, "=", 0.0)

    # (19)-(28) rates and link limits
    for j in peers:
        m.add_constraint(f"c19_j{j}", [(idm[j], 1.0)] + [(u_idx[t], -M(t)) for t in by_server[j] if t[0] != j], "=", 0.0)
    for i in objects:
        m.add_constraint(f"c20_i{i}", [(idc[i], 1.0)] + [(u_idx[t], -C(t)) for t in by_requester[i] if t[1] != i], "=", 0.0)
    for j in objects:
        m.add_constraint(f"c21_j{j}", [(idm[j], 1.0)], "<=", lim.dl_object_bps)
    for i in objects:
        m.add_constraint(f"c22_i{i}", [(idc[i], 1.0)], "<=", lim.dl_object_bps)
    for j in relays:
        m.add_constraint(f"c23_j{j}", [(idm[j], 1.0)], "<=", lim.dl_relay_bps)
    for i in objects:
        m.add_constraint(f"c24_i{i}", [(ium[i], 1.0)] + [(u_idx[t], -M(t)) for t in by_requester[i] if t[1] != i], "=", 0.0)
    for j in peers:
        m.add_constraint(f"c25_j{j}", [(iuc[j], 1.0)] + [(u_idx[t], -C(t)) for t in by_server[j] if t[0] != j], "=", 0.0)
    for i in objects:
        m.add_constraint(f"c26_i{i}", [(ium[i], 1.0)], "<=", lim.ul_object_bps)
    for j in objects:
        m.add_constraint(f"c27_j{j}", [(iuc[j], 1.0)], "<=", lim.ul_object_bps)
    for j in relays:
        m.add_constraint(f"c28_j{j}", [(iuc[j], 1.0)], "<=", lim.ul_relay_bps)

    # (29)/(30) upload slots
    for i in objects:
        m.add_constraint(f"c29_i{i}", [(u_idx[t], 1.0) for t in by_requester[i] if t[1] != i], "<=", float(lim.upload_slots))
    for j in objects:
        m.add_constraint(f"c30_j{j}", [(u_idx[t], 1.0) for t in by_server[j] if t[0] != j], "<=", float(lim.upload_slots))

    # (31) relays only: objects serve nothing, themselves included
    if inst.scenario is Scenario.RELAYS_ONLY:
        for i in objects:
            m.add_constraint(f"c31_i{i}", [(u_idx[t], 1.0) for t in by_requester[i] if topo.is_object(t[1])], "=", 0.0)

    return m
