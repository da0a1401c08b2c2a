"""Closed-form variable and row counts of the MILP, straight from index sets."""

from __future__ import annotations

from ..model import Instance, Scenario

__all__ = ["census"]


def census(inst: Instance) -> dict:
    objects = inst.objects
    n_o, n_r = len(objects), len(inst.relays)
    n_vm = len(inst.vm_relays)
    n_links = sum(len(b) for b in inst.topology.relay_adjacency.values())
    n_pairs = n_r * (n_r - 1)
    is_obj = inst.topology.is_object

    cand = {(i, k): inst.candidates(i, k) for i, k in inst.requests}
    servers = {j for js in cand.values() for j in js}
    external = {(i, j) for (i, _), js in cand.items() for j in js if j != i}

    variables = {
        "U": sum(len(js) for js in cand.values()),
        "V": n_vm,
        "IDM": n_o + n_r,
        "IDC": n_o,
        "IUM": n_o,
        "IUC": n_o + n_r,
        "LQ": n_pairs,
        "LS": n_pairs,
        "FQ": n_pairs * n_links,
        "FS": n_pairs * n_links,
        "AQ": n_links,
        "AS": n_links,
    }
    rows = {
        "c6": sum(1 for js in cand.values() if js),
        "c7": len({tuple(sorted(p)) for p in external if is_obj(p[1])}),
        "c9": n_vm,
        "c11": sum(1 for j in objects if j in servers),
        "c12": sum(1 for j in inst.relays if j in servers),
        "c13": n_pairs,
        "c14": n_pairs,
        "c15": n_pairs * n_r,
        "c16": n_pairs * n_r,
        "c17": n_links,
        "c18": n_links,
        "c19": n_o + n_r,
        "c20": n_o,
        "c21": n_o,
        "c22": n_o,
        "c23": n_r,
        "c24": n_o,
        "c25": n_o + n_r,
        "c26": n_o,
        "c27": n_o,
        "c28": n_r,
        "c29": len({i for i, _ in external}),
        "c30": len({j for _, j in external if is_obj(j)}),
    }
    if inst.scenario is Scenario.OBJECTS_ONLY:
        rows["c32"] = 1 if n_vm else 0
    else:
        rows["c10"] = 1 if (n_vm or inst.limits.vm_budget) else 0
    if inst.scenario is Scenario.RELAYS_ONLY:
        rows["c31"] = len({i for (i, _), js in cand.items() if any(is_obj(j) for j in js)})

    variables = {k: v for k, v in variables.items() if v}
    rows = {k: v for k, v in sorted(rows.items(), key=lambda kv: int(kv[0][1:])) if v}
    return {
        "variables": dict(sorted(variables.items())),
        "constraints": rows,
        "n_variables": sum(variables.values()),
        "n_constraints": sum(rows.values()),
        "n_binary": variables.get("U", 0) + variables.get("V", 0),
    }
