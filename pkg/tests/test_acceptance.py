"""End-to-end acceptance checks, one test per criterion.

Each test records PASS or FAIL under its criterion number; the verdicts are
printed in a block at the end of the pytest run.
"""

import random
import statistics
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from conftest import VERDICTS
from oracle import best
from p2piot import heuristic
from p2piot.milp import build, census, dumps_lp, parse_lp, solve_exact
from p2piot.metrics import MetricsRow, compare_scenarios
from p2piot.model import (
    TASK_WEIGHTS,
    EnergyParams,
    Limits,
    Scenario,
    build_instance,
    custom_instance,
    random_small_instance,
)
from p2piot.power import processing_power, tx_energy_per_bit
from p2piot.routing import FlowSet, check_conservation
from p2piot.solution import Assignment, derive_rates, validate
from test_solution import object8_instance

SCENARIOS = list(Scenario)
FLEET_SEEDS = range(100)
FULL_SEEDS = range(20)
HEAVY = range(5, 11)


@contextmanager
def criterion(key, label=""):
    try:
        yield
    except BaseException:
        VERDICTS.setdefault(key, []).append((label, "FAIL"))
        raise
    VERDICTS.setdefault(key, []).append((label, "PASS"))


@pytest.fixture(scope="module")
def fleet():
    """Exact and heuristic results on 100 tiny seeds x 3 scenarios."""
    out = []
    for seed in FLEET_SEEDS:
        for scenario in SCENARIOS:
            inst = random_small_instance(seed, scenario=scenario)
            exact = solve_exact(inst)
            greedy = heuristic.run(inst, heuristic.shuffled_order(inst, seed))
            out.append((seed, inst, exact, greedy))
    return out


@pytest.fixture(scope="module")
def full_scale():
    """Heuristic runs on the 25/25 reference setup, F = 1.8, per seed and scenario."""
    runs = {}
    for seed in FULL_SEEDS:
        base = build_instance(seed)
        for scenario in SCENARIOS:
            inst = base.with_scenario(scenario)
            res = heuristic.run(inst)
            served, watts = heuristic.score(inst, res.assignment, res.flows)
            runs[(seed, scenario)] = (inst, res, served, watts)
    return runs


def test_c01_exact_matches_enumeration(fleet):
    with criterion("1", "exact optimum equals enumeration (50 instances x 3 scenarios)"):
        checked = 0
        for seed, inst, exact, _ in fleet:
            if seed >= 50:
                continue
            assert len(inst.objects) <= 4 and len(inst.relays) <= 4
            assert len(inst.tasks) <= 3 and inst.limits.vm_budget <= 2
            want, _ = best(inst)
            if want is None:
                assert exact.status == "infeasible", (seed, inst.scenario)
                continue
            assert exact.status == "optimal", (seed, inst.scenario)
            assert exact.objective == pytest.approx(want, rel=1e-9, abs=1e-12), (seed, inst.scenario)
            checked += 1
        assert checked >= 100


def test_c02_validator_soundness(fleet):
    rng = random.Random(2024)
    with criterion("2", "all engine outputs validate; >= 95% of one-triple mutations are caught"):
        flipped = total = 0
        for seed, inst, exact, greedy in fleet:
            outputs = [greedy.assignment] + ([exact.assignment] if exact.assignment is not None else [])
            for a in outputs:
                assert validate(inst, a).ok, (seed, inst.scenario)
                peers = inst.objects + inst.relays
                while True:
                    t = (rng.choice(inst.objects), rng.choice(peers), rng.choice(inst.task_ids))
                    if t not in a.u:
                        break
                total += 1
                flipped += not validate(inst, a.add(t)).ok
        assert total >= 300
        assert flipped / total >= 0.95, f"{flipped}/{total}"


def test_c03_table_iv_served_percentages():
    with criterion("3", "89/86/33 of 115 give 77.4/74.8/28.7 and truncate to 77/74/28"):
        rows = [MetricsRow(s, 1.8, 0, "heuristic", "ok", n, 115) for s, n in
                (("hybrid", 89), ("relays_only", 86), ("objects_only", 33))]
        by = {r.scenario: r for r in compare_scenarios(rows) if r.task_weight == 1.8}
        pct = {"hybrid": by["relays_only"].hybrid_served_pct,
               "relays_only": by["relays_only"].served_pct,
               "objects_only": by["objects_only"].served_pct}
        assert pct == {"hybrid": Fraction(8900, 115), "relays_only": Fraction(8600, 115),
                       "objects_only": Fraction(3300, 115)}
        assert {s: round(p, 1) for s, p in pct.items()} == {
            "hybrid": Fraction(774, 10), "relays_only": Fraction(748, 10), "objects_only": Fraction(287, 10)}
        assert {s: int(p) for s, p in pct.items()} == {"hybrid": 77, "relays_only": 74, "objects_only": 28}


def test_c04_objects_never_run_heavy_tasks(full_scale):
    with criterion("4", "objects_only serves none of k5-k10 at any F or seed"):
        for seed in FULL_SEEDS:
            for f in TASK_WEIGHTS:
                inst = full_scale[(seed, Scenario.OBJECTS_ONLY)][0].with_task_weight(f)
                a = heuristic.run(inst).assignment
                assert not [t for t in a.u if t[2] in HEAVY], (seed, f)
        for seed in range(12):
            for f in TASK_WEIGHTS:
                inst = random_small_instance(seed, scenario=Scenario.OBJECTS_ONLY, task_weight=f)
                res = solve_exact(inst)
                if res.assignment is not None:
                    assert not [t for t in res.assignment.u if t[2] in HEAVY], (seed, f)


def test_c05_scenario_ordering(full_scale):
    start = time.perf_counter()
    with criterion("5", "ordering objects_only < relays_only <= hybrid (served and power, 20 seeds)"):
        for seed in FULL_SEEDS:
            h, r, o = (full_scale[(seed, s)] for s in SCENARIOS)
            assert o[2] < r[2] <= h[2], seed
            assert o[3] < r[3] <= h[3] * (1 + 1e-12), seed
        assert time.perf_counter() - start < 60


@pytest.mark.xfail(strict=True, reason="greedy hybrid never picks an object server, so relays_only "
                                       "costs the same; objects_only saves slightly more than the band")
def test_c05_saving_bands(full_scale):
    with criterion("5", "mean savings within [3, 15]% (relays_only) and [45, 75]% (objects_only)"):
        relays, objects = [], []
        for seed in FULL_SEEDS:
            h, r, o = (full_scale[(seed, s)][3] for s in SCENARIOS)
            relays.append((h - r) / h * 100)
            objects.append((h - o) / h * 100)
        mean_r, mean_o = statistics.fmean(relays), statistics.fmean(objects)
        assert 3 <= mean_r <= 15, f"relays_only saving {mean_r:.2f}%"
        assert 45 <= mean_o <= 75, f"objects_only saving {mean_o:.2f}%"


def test_c06_zero_weight_serves_nothing():
    with criterion("6", "F = 0 gives the empty assignment and objective 0"):
        for seed in range(40):
            for scenario in SCENARIOS:
                inst = random_small_instance(seed, scenario=scenario, task_weight=0.0)
                res = solve_exact(inst)
                if res.status == "infeasible":
                    continue
                assert res.status == "optimal"
                assert res.assignment.u == frozenset() and res.objective == 0.0, (seed, scenario)


def test_c07_object8_case():
    with criterion("7", "object-8 case: hybrid uploads exactly 5000 b/s, relays_only blocks k9 at 2500 > 2000"):
        hybrid = object8_instance()
        res = solve_exact(hybrid)
        assert res.status == "optimal"
        assert res.assignment.u == {(0, 0, 2), (0, 1, 1), (0, 1, 8), (0, 1, 9)}
        assert derive_rates(hybrid, res.assignment).ul_request[0] == 5000

        relays = object8_instance(scenario=Scenario.RELAYS_ONLY)
        run = heuristic.run(relays)
        by = {d.request: d for d in run.trace}
        assert by[(0, 2)].outcome == "served" and by[(0, 2)].server == 1
        k9 = by[(0, 9)]
        assert k9.outcome == "blocked" and k9.candidate_count == 1
        failing = [c for c in k9.candidates[0]["checks"] if not c["passed"]]
        assert failing == [{"check": "ii", "passed": False, "value": 2500, "bound": 2000}]


def test_c08_flow_conservation(fleet, full_scale):
    with criterion("8", "conservation holds on every routed assignment; one bent link gives two imbalances"):
        flow_sets = [(inst.topology, g.flows) for _, inst, _, g in fleet]
        flow_sets += [(inst.topology, e.flows) for _, inst, e, _ in fleet if e.flows is not None]
        flow_sets += [(inst.topology, res.flows) for inst, res, _, _ in full_scale.values()]
        for topo, f in flow_sets:
            assert check_conservation(topo, f).ok
        bent = 0
        for topo, f in flow_sets:
            for (x, y), links in f.commodity_q.items():
                if len(links) < 2:
                    continue
                first = min(links)
                moved = dict(links)
                moved[first] += 1.0
                report = check_conservation(topo, FlowSet.from_commodities(
                    f.demand_q, f.demand_s, {**f.commodity_q, (x, y): moved}, f.commodity_s))
                assert len(report) == 2 and report.ids == {15}
                bent += 1
        assert bent > 0


def test_c09_lp_round_trip_and_census():
    with criterion("9", "LP export/parse/export is byte-identical and census matches the model (20 instances)"):
        for seed in range(20):
            inst = random_small_instance(1000 + seed, scenario=SCENARIOS[seed % 3])
            m = build(inst)
            text = dumps_lp(m)
            assert dumps_lp(parse_lp(text)) == text, seed
            assert census(inst) == m.counts(), seed


def test_c10_power_constants():
    with criterion("10", "59.18 nJ/bit at 6 m, 1.5417 W for k10 on a relay, 3.7 W at 1.2 GHz"):
        assert tx_energy_per_bit(6.0, EnergyParams()) == pytest.approx(59.18e-9, rel=1e-12)
        inst = custom_instance([(2.0, 3.0), (4.0, 3.0), (3.0, 4.0)], [(3.0, 3.0)],
                               [(0, 10), (1, 10), (2, 7)], {}, area=(6.0, 6.0), limits=Limits(vm_budget=1))
        relay = inst.relays[0]
        tenth = processing_power(inst, Assignment(frozenset({(0, relay, 10)}), frozenset({relay})))[relay]
        assert tenth == pytest.approx(0.5 / 1.2 * 3.7, rel=1e-12)
        assert round(tenth, 4) == 1.5417
        full = Assignment(frozenset({(0, relay, 10), (1, relay, 10), (2, relay, 7)}), frozenset({relay}))
        assert processing_power(inst, full)[relay] == pytest.approx(3.7, rel=1e-12)
