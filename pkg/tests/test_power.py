import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from p2piot.model import DEFAULT_TASKS, EnergyParams, Limits, custom_instance, random_small_instance
from p2piot.power import (
    RELAY_TERMS,
    CapacityExceeded,
    FlowConsistencyError,
    object_traffic_power,
    power_report,
    processing_power,
    relay_traffic_power,
    tx_energy_per_bit,
)
from p2piot.routing import FlowSet, build_flows, hop_count
from p2piot.solution import Assignment

E = EnergyParams()


def rel(x):
    return pytest.approx(x, rel=1e-12, abs=0)


@pytest.mark.parametrize("d, want", [(0.0, 50e-9), (6.0, 59.18e-9), (30.0, 279.5e-9)])
def test_tx_energy_per_bit(d, want):
    assert tx_energy_per_bit(d, E) == rel(want)


def test_tx_energy_rejects_negative_distance():
    with pytest.raises(ValueError):
        tx_energy_per_bit(-1.0, E)


def one_relay(requests, capability, **kw):
    kw.setdefault("limits", Limits(vm_budget=1))
    return custom_instance([(1.0, 3.0), (6.0, 3.0)], [(3.0, 3.0)], requests, capability, area=(9.0, 6.0), **kw)


def test_processing_power_values():
    inst = one_relay([(0, 1), (0, 10)], {0: {1}})
    proc = processing_power(inst, Assignment(frozenset({(0, 0, 1)})))
    assert proc[0] == rel(0.01 / 0.032 * 0.347)
    assert round(proc[0], 4) == 0.1084
    assert proc[1] == proc[2] == 0.0
    relay = processing_power(inst, Assignment(frozenset({(0, 2, 10)}), frozenset({2})))
    assert relay[2] == rel(0.5 / 1.2 * 3.7)
    assert round(relay[2], 4) == 1.5417


def test_relay_at_full_load_draws_max_power():
    # 0.2 + 0.5 + 0.3 + 0.2 GHz lands exactly on capacity
    reqs = [(0, 7), (0, 10), (1, 8), (1, 7)]
    inst = custom_instance([(1.0, 3.0), (5.0, 3.0)], [(3.0, 3.0)], reqs, {}, area=(6.0, 6.0),
                           limits=Limits(vm_budget=1))
    a = Assignment(frozenset((i, 2, k) for i, k in reqs), frozenset({2}))
    assert sum(inst.task(k).workload_ghz for _, _, k in a.u) == pytest.approx(1.2)
    assert processing_power(inst, a)[2] == rel(3.7)


def test_overload_is_refused():
    inst = one_relay([(0, 5)], {0: {5}})
    with pytest.raises(CapacityExceeded):
        processing_power(inst, Assignment(frozenset({(0, 0, 5)})))


def test_object_sending_one_request(two_relay_instance):
    inst = two_relay_instance  # object 0 is 2 m from its home relay 1
    a = Assignment(frozenset({(0, 1, 1)}), frozenset({1}))
    t1, t2, t3, t4 = object_traffic_power(inst, a, terms=True)[0]
    assert t1 == rel(250 * (50e-9 + 255e-12 * 4))
    assert t4 == rel(25 * 50e-9)
    assert t2 == t3 == 0.0
    assert object_traffic_power(inst, a)[0] * 1e6 == pytest.approx(14.005, abs=1e-9)


def test_internal_processing_has_no_traffic():
    inst = one_relay([(0, 1)], {0: {1}})
    assert object_traffic_power(inst, Assignment(frozenset({(0, 0, 1)})))[0] == 0.0


def test_object_serving_a_peer():
    # object 1 sits 3 m from its home relay and serves k2 for object 0
    inst = one_relay([(0, 2)], {0: set(), 1: {2}})
    a = Assignment(frozenset({(0, 1, 2)}), frozenset({2}))
    assert inst.distance(1, inst.home(1)) == 3.0
    assert object_traffic_power(inst, a)[1] == rel(500 * 50e-9 + 100 * (50e-9 + 255e-12 * 9))
    assert object_traffic_power(inst, a)[1] * 1e6 == pytest.approx(30.2295, abs=1e-9)


def test_relay_terms_remote_vm(two_relay_instance):
    inst = two_relay_instance
    a = Assignment(frozenset({(0, 2, 1)}), frozenset({2}))
    terms = relay_traffic_power(inst, a, build_flows(inst, a), terms=True)
    home = dict(zip(RELAY_TERMS, terms[1]))
    assert home["recv_requests_from_objects"] == rel(250 * 50e-9)
    assert home["send_requests_to_relays"] == rel(250 * (50e-9 + 255e-12 * 36))
    assert home["recv_results_from_relays"] == rel(25 * 50e-9)
    assert home["send_results_to_objects"] == rel(25 * (50e-9 + 255e-12 * 4))
    assert sum(terms[1]) * 1e6 == pytest.approx(12.5 + 14.795 + 1.25 + 1.2755, abs=1e-9)
    assert round(sum(terms[1]) * 1e6, 2) == 29.82
    far = dict(zip(RELAY_TERMS, terms[2]))
    assert far["recv_requests_from_relays"] == rel(250 * 50e-9)
    assert far["send_results_to_relays"] == rel(25 * 59.18e-9)


def test_relay_terms_home_vm(two_relay_instance):
    inst = two_relay_instance
    a = Assignment(frozenset({(0, 1, 1)}), frozenset({1}))
    terms = dict(zip(RELAY_TERMS, relay_traffic_power(inst, a, build_flows(inst, a), terms=True)[1]))
    nonzero = {k for k, v in terms.items() if v}
    assert nonzero == {"recv_requests_from_objects", "send_results_to_objects"}


def test_inconsistent_flows_rejected(two_relay_instance):
    inst = two_relay_instance
    a = Assignment(frozenset({(0, 2, 1)}), frozenset({2}))
    with pytest.raises(FlowConsistencyError):
        relay_traffic_power(inst, a, FlowSet())


def test_zero_activity_is_zero_power(full_instance):
    rep = power_report(full_instance, Assignment(), FlowSet())
    assert rep.total == 0.0
    assert all(v == 0 for v in rep.relay_traffic.values())


def test_report_csv_layout(two_relay_instance):
    inst = two_relay_instance
    a = Assignment(frozenset({(0, 1, 1)}), frozenset({1}))
    lines = power_report(inst, a, build_flows(inst, a)).to_csv().splitlines()
    assert lines[0] == "node,kind,processing_uw,traffic_uw"
    assert lines[1].startswith("0,object,0.000000,")
    assert lines[2].startswith("1,relay,30833.333333,")


def _some_assignments(seed, data):
    inst = random_small_instance(seed)
    triples = sorted((i, j, k) for i, k in inst.requests for j in inst.candidates(i, k)
                     if inst.task(k).workload_ghz <= inst.topology.node(j).cpu_capacity_ghz)
    assume(triples)
    picked = data.draw(st.lists(st.sampled_from(triples), unique=True, min_size=1))
    return inst, picked


def _total(inst, a):
    return power_report(inst, a, build_flows(inst, a)).total


@given(st.integers(0, 5000), st.data())
def test_power_is_linear(seed, data):
    inst, picked = _some_assignments(seed, data)
    cut = data.draw(st.integers(0, len(picked)))
    left, right = Assignment(frozenset(picked[:cut])), Assignment(frozenset(picked[cut:]))
    try:
        whole = _total(inst, left.union(right))
    except CapacityExceeded:
        assume(False)
    assert whole == pytest.approx(_total(inst, left) + _total(inst, right), rel=1e-12)


@given(st.integers(0, 5000), st.data())
def test_adding_a_triple_never_lowers_power(seed, data):
    inst, picked = _some_assignments(seed, data)
    base = Assignment(frozenset(picked[:-1]))
    try:
        more = _total(inst, base.add(picked[-1]))
    except CapacityExceeded:
        assume(False)
    assert more >= _total(inst, base)


def test_zero_distance_closed_form():
    # every node at one point: each hop costs e_elec to send and e_elec to receive
    spot = (3.0, 3.0)
    reqs = [(0, 1), (0, 2), (1, 3), (2, 4)]
    inst = custom_instance([spot] * 3, [spot] * 3, reqs, {0: {3}, 1: {1}, 2: set()}, tasks=DEFAULT_TASKS,
                           area=(6.0, 6.0), limits=Limits(vm_budget=2))
    a = Assignment(frozenset({(0, 1, 1), (1, 0, 3), (0, 4, 2), (2, 5, 4)}), frozenset({4, 5}))
    flows = build_flows(inst, a)
    rep = power_report(inst, a, flows)
    bits = 0.0
    for i, j, k in a.u:
        t = inst.task(k)
        hops = 1 + hop_count(inst.topology, inst.home(i), inst.home(j)) + (1 if inst.topology.is_object(j) else 0)
        bits += (t.request_bps + t.result_bps) * hops
    assert rep.traffic_total == pytest.approx(2 * 50e-9 * bits, rel=1e-12)


@given(st.integers(0, 5000), st.data())
def test_every_sent_bit_is_received(seed, data):
    inst, picked = _some_assignments(seed, data)
    a = Assignment(frozenset(picked))
    flows = build_flows(inst, a)
    try:
        terms = relay_traffic_power(inst, a, flows, terms=True)
    except CapacityExceeded:
        assume(False)
    obj = object_traffic_power(inst, a, terms=True)
    e = inst.energy.e_elec
    col = {name: sum(t[n] for t in terms.values()) for n, name in enumerate(RELAY_TERMS)}
    sent_q = sum(bps * tx_energy_per_bit(inst.distance(*l), inst.energy) for l, bps in flows.link_q.items())
    sent_s = sum(bps * tx_energy_per_bit(inst.distance(*l), inst.energy) for l, bps in flows.link_s.items())
    assert col["send_requests_to_relays"] == pytest.approx(sent_q, rel=1e-12)
    assert col["send_results_to_relays"] == pytest.approx(sent_s, rel=1e-12)
    assert col["recv_requests_from_relays"] == pytest.approx(e * sum(flows.link_q.values()), rel=1e-12)
    assert col["recv_results_from_relays"] == pytest.approx(e * sum(flows.link_s.values()), rel=1e-12)
    # what objects upload lands on relays and what relays push down lands on objects
    up = down = 0.0
    for i, j, k in a.external():
        t = inst.task(k)
        served_by_object = inst.topology.is_object(j)
        up += t.request_bps + (t.result_bps if served_by_object else 0)
        down += t.result_bps + (t.request_bps if served_by_object else 0)
    assert col["recv_requests_from_objects"] + col["recv_results_from_objects"] == pytest.approx(e * up, rel=1e-12)
    assert sum(t[2] + t[3] for t in obj.values()) == pytest.approx(e * down, rel=1e-12)
