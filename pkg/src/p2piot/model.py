"""Problem instances: task catalog, topology, requests, capabilities, scenarios.

Node ids are global integers: objects take ``0 .. n_objects - 1`` and relays
follow. All randomness comes from numpy's PCG64 generator seeded through
``numpy.random.SeedSequence(seed, spawn_key=(stream,))`` so that topology,
requests and capabilities draw from independent, reproducible streams.
"""

from __future__ import annotations

import enum
import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ConfigurationError",
    "Scenario",
    "TaskType",
    "Node",
    "Topology",
    "EnergyParams",
    "Limits",
    "Instance",
    "DEFAULT_TASKS",
    "TABLE_IV_REQUESTS",
    "TASK_WEIGHTS",
    "generate_topology",
    "generate_requests",
    "generate_capabilities",
    "build_instance",
    "random_small_instance",
    "custom_instance",
    "empty_instance",
    "instance_to_json",
    "instance_from_json",
]

# Independent generator streams, one per construction step.
_STREAM_TOPOLOGY = 1
_STREAM_REQUESTS = 2
_STREAM_CAPABILITY = 3
_STREAM_SMALL = 4


class ConfigurationError(ValueError):
    """Raised for inconsistent instance parameters."""


class Scenario(str, enum.Enum):
    HYBRID = "hybrid"
    RELAYS_ONLY = "relays_only"
    OBJECTS_ONLY = "objects_only"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class TaskType:
    id: int
    workload_ghz: float
    request_bps: float
    result_bps: float

    def __post_init__(self):
        if not (self.workload_ghz > 0 and self.request_bps > 0):
            raise ConfigurationError(f"task k{self.id}: workload and request rate must be positive")
        if not 0 < self.result_bps <= self.request_bps:
            raise ConfigurationError(f"task k{self.id}: result rate must lie in (0, request rate]")


# Arduino 101 class objects, Raspberry Pi 3 class relays.
OBJECT_CPU_GHZ = 0.032
OBJECT_CPU_MAX_W = 0.347
RELAY_CPU_GHZ = 1.2
RELAY_CPU_MAX_W = 3.7

_WORKLOAD_GHZ = (0.01, 0.012, 0.015, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
_REQUEST_BPS = (250, 500, 750, 1000, 1250, 1750, 2000, 2250, 2500, 2750)
_RESULT_BPS = (25, 100, 225, 400, 625, 1050, 1400, 1800, 2125, 2475)

DEFAULT_TASKS: tuple[TaskType, ...] = tuple(
    TaskType(k + 1, w, float(m), float(c))
    for k, (w, m, c) in enumerate(zip(_WORKLOAD_GHZ, _REQUEST_BPS, _RESULT_BPS))
)

# Requests per task k1..k10 in the reference study.
TABLE_IV_REQUESTS: tuple[int, ...] = (15, 10, 15, 8, 14, 11, 9, 13, 11, 9)

TASK_WEIGHTS: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.6, 0.9, 1.2, 1.5, 1.8)


@dataclass(frozen=True)
class Node:
    id: int
    kind: str  # "object" | "relay"
    position: tuple[float, float]
    cpu_capacity_ghz: float
    cpu_max_power_w: float
    can_host_vm: bool = False

    @property
    def is_object(self) -> bool:
        return self.kind == "object"


@dataclass(frozen=True)
class Topology:
    objects: tuple[Node, ...]
    relays: tuple[Node, ...]
    home_relay: Mapping[int, int]
    relay_adjacency: Mapping[int, tuple[int, ...]]
    distances: tuple[tuple[float, ...], ...]
    area: tuple[float, float] = (30.0, 30.0)

    @property
    def nodes(self) -> tuple[Node, ...]:
        return self.objects + self.relays

    @property
    def object_ids(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.objects)

    @property
    def relay_ids(self) -> tuple[int, ...]:
        return tuple(n.id for n in self.relays)

    def node(self, node_id: int) -> Node:
        n_obj = len(self.objects)
        if 0 <= node_id < n_obj:
            return self.objects[node_id]
        if n_obj <= node_id < n_obj + len(self.relays):
            return self.relays[node_id - n_obj]
        raise KeyError(node_id)

    def is_object(self, node_id: int) -> bool:
        return 0 <= node_id < len(self.objects)

    def is_relay(self, node_id: int) -> bool:
        return len(self.objects) <= node_id < len(self.objects) + len(self.relays)

    def attached_objects(self, relay: int) -> tuple[int, ...]:
        """Objects whose home relay is ``relay``."""
        return tuple(o for o, r in sorted(self.home_relay.items()) if r == relay)

    def relay_links(self) -> list[tuple[int, int]]:
        """Directed relay links (a, b), sorted."""
        return sorted((a, b) for a, nbrs in self.relay_adjacency.items() for b in nbrs)


@dataclass(frozen=True)
class EnergyParams:
    e_elec: float = 50e-9  # J/bit
    epsilon: float = 255e-12  # J/(bit m^2)

    def __post_init__(self):
        if not (self.e_elec > 0 and self.epsilon > 0):
            raise ConfigurationError("energy parameters must be positive")


@dataclass(frozen=True)
class Limits:
    dl_object_bps: float = 10_000.0
    dl_relay_bps: float = 25_000.0
    ul_object_bps: float = 5_000.0
    ul_relay_bps: float = 25_000.0
    upload_slots: int = 4
    vm_budget: int = 10


@dataclass(frozen=True)
class Instance:
    topology: Topology
    tasks: tuple[TaskType, ...]
    requests: frozenset[tuple[int, int]]
    capability: Mapping[int, frozenset[int]]
    scenario: Scenario = Scenario.HYBRID
    energy: EnergyParams = field(default_factory=EnergyParams)
    limits: Limits = field(default_factory=Limits)
    task_weight: float = 1.8
    big_m: float = 1_000_000.0

    def __post_init__(self):
        object.__setattr__(self, "scenario", Scenario(self.scenario))
        object.__setattr__(self, "_task_by_id", {t.id: t for t in self.tasks})

    # -- lookups -----------------------------------------------------------

    @property
    def objects(self) -> tuple[int, ...]:
        return self.topology.object_ids

    @property
    def relays(self) -> tuple[int, ...]:
        return self.topology.relay_ids

    @property
    def vm_relays(self) -> tuple[int, ...]:
        return tuple(r.id for r in self.topology.relays if r.can_host_vm)

    @property
    def task_ids(self) -> tuple[int, ...]:
        return tuple(t.id for t in self.tasks)

    def task(self, k: int) -> TaskType:
        return self._task_by_id[k]

    def has_task(self, k: int) -> bool:
        return k in self._task_by_id

    def requested(self, i: int, k: int) -> bool:
        return (i, k) in self.requests

    def can_serve(self, j: int, k: int) -> bool:
        return k in self.capability.get(j, ())

    def home(self, node_id: int) -> int:
        """Relay the node is attached to; a relay is its own home."""
        if self.topology.is_relay(node_id):
            return node_id
        return self.topology.home_relay[node_id]

    def distance(self, m: int, n: int) -> float:
        return self.topology.distances[m][n]

    def servers(self) -> tuple[int, ...]:
        """Peers allowed to appear as servers in this scenario."""
        if self.scenario is Scenario.OBJECTS_ONLY:
            return self.objects
        return self.objects + self.vm_relays

    def candidates(self, i: int, k: int) -> tuple[int, ...]:
        """Servers capable of task k for requester i (scenario restricted)."""
        return tuple(j for j in self.servers() if self.can_serve(j, k))

    def with_scenario(self, scenario: Scenario | str) -> "Instance":
        return replace(self, scenario=Scenario(scenario))

    def with_task_weight(self, f: float) -> "Instance":
        return replace(self, task_weight=float(f))

    @property
    def total_requests(self) -> int:
        return len(self.requests)


# ---------------------------------------------------------------------------
# construction


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(stream,))))


def _relay_graph_connected(relays: Sequence[int], adjacency: Mapping[int, tuple[int, ...]]) -> bool:
    if not relays:
        return True
    seen = {relays[0]}
    queue = deque([relays[0]])
    while queue:
        a = queue.popleft()
        for b in adjacency[a]:
            if b not in seen:
                seen.add(b)
                queue.append(b)
    return len(seen) == len(relays)


def _assemble_topology(
    object_pos: Sequence[tuple[float, float]],
    relay_pos: Sequence[tuple[float, float]],
    radius: float,
    area: tuple[float, float],
) -> Topology:
    n_obj = len(object_pos)
    objects = tuple(
        Node(i, "object", (float(x), float(y)), OBJECT_CPU_GHZ, OBJECT_CPU_MAX_W)
        for i, (x, y) in enumerate(object_pos)
    )
    relays = tuple(
        Node(n_obj + r, "relay", (float(x), float(y)), RELAY_CPU_GHZ, RELAY_CPU_MAX_W, True)
        for r, (x, y) in enumerate(relay_pos)
    )
    nodes = objects + relays
    distances = tuple(tuple(math.dist(m.position, n.position) for n in nodes) for m in nodes)

    home = {}
    for o in objects:
        if not relays:
            raise ConfigurationError("objects need at least one relay to attach to")
        # min() keeps the first minimum, i.e. the lowest relay id on ties
        home[o.id] = min(relays, key=lambda r: distances[o.id][r.id]).id

    adjacency = {}
    for a in relays:
        adjacency[a.id] = tuple(
            b.id for b in relays if b.id != a.id and distances[a.id][b.id] <= radius + 1e-9
        )
    if not _relay_graph_connected([r.id for r in relays], adjacency):
        raise ConfigurationError(f"relay graph is disconnected at radius {radius} m")
    return Topology(objects, relays, home, adjacency, distances, (float(area[0]), float(area[1])))


def generate_topology(
    seed: int,
    n_objects: int = 25,
    grid: tuple[int, int] = (5, 5),
    pitch: float = 6.0,
    area: tuple[float, float] = (30.0, 30.0),
    offset: float | None = None,
    radius: float | None = None,
) -> Topology:
    """Place a ``rows x cols`` relay grid and ``n_objects`` random objects.

    Relays sit at ``offset + pitch * index`` on both axes (``offset`` defaults
    to half a pitch, which centres a 5 x 5 grid at 6 m in a 30 m square).
    Relays are neighbours when no further apart than ``radius`` (default:
    one pitch, i.e. 4-connectivity on a regular grid).
    """
    if n_objects < 1:
        raise ConfigurationError("n_objects must be >= 1")
    rows, cols = grid
    if rows < 1 or cols < 1:
        raise ConfigurationError("relay grid needs at least one row and column")
    offset = pitch / 2 if offset is None else offset
    radius = pitch if radius is None else radius
    width, height = area
    xs = [offset + pitch * c for c in range(cols)]
    ys = [offset + pitch * r for r in range(rows)]
    if min(xs) < 0 or min(ys) < 0 or max(xs) > width or max(ys) > height:
        raise ConfigurationError(f"relay grid {rows}x{cols} @ {pitch} m does not fit a {width}x{height} m area")
    relay_pos = [(x, y) for y in ys for x in xs]

    rng = _rng(seed, _STREAM_TOPOLOGY)
    pts = rng.uniform(low=(0.0, 0.0), high=(width, height), size=(n_objects, 2))
    object_pos = [(float(x), float(y)) for x, y in pts]
    return _assemble_topology(object_pos, relay_pos, radius, area)


def generate_requests(
    seed: int,
    topology: Topology,
    tasks: Sequence[TaskType],
    profile: Sequence[int] | None = None,
) -> frozenset[tuple[int, int]]:
    """Sample ``profile[k]`` distinct requesting objects for every task."""
    profile = TABLE_IV_REQUESTS if profile is None else tuple(profile)
    if len(profile) != len(tasks):
        raise ConfigurationError(f"profile has {len(profile)} entries for {len(tasks)} tasks")
    objects = topology.object_ids
    rng = _rng(seed, _STREAM_REQUESTS)
    q = set()
    for task, count in zip(tasks, profile):
        if count < 0 or count > len(objects):
            raise ConfigurationError(f"task k{task.id}: {count} requests for {len(objects)} objects")
        if count == 0:
            continue
        chosen = rng.choice(len(objects), size=count, replace=False)
        q.update((objects[int(c)], task.id) for c in chosen)
    return frozenset(q)


def generate_capabilities(
    seed: int,
    topology: Topology,
    tasks: Sequence[TaskType],
    per_object: int = 3,
) -> dict[int, frozenset[int]]:
    """Uniform random ``per_object``-subsets of task ids for objects; VM relays get every task."""
    if len(tasks) < per_object:
        raise ConfigurationError(f"need at least {per_object} task types, got {len(tasks)}")
    rng = _rng(seed, _STREAM_CAPABILITY)
    ids = [t.id for t in tasks]
    cap = {}
    for o in topology.objects:
        chosen = rng.choice(len(ids), size=per_object, replace=False)
        cap[o.id] = frozenset(ids[int(c)] for c in chosen)
    everything = frozenset(ids)
    for r in topology.relays:
        cap[r.id] = everything if r.can_host_vm else frozenset()
    return cap


def build_instance(
    seed: int,
    n_objects: int = 25,
    grid: tuple[int, int] = (5, 5),
    pitch: float = 6.0,
    area: tuple[float, float] = (30.0, 30.0),
    scenario: Scenario | str = Scenario.HYBRID,
    profile: Sequence[int] | None = None,
    task_weight: float = 1.8,
    tasks: Sequence[TaskType] = DEFAULT_TASKS,
    limits: Limits | None = None,
    energy: EnergyParams | None = None,
    radius: float | None = None,
    big_m: float = 1_000_000.0,
) -> Instance:
    """The full reference setup by default: 25 objects, 5 x 5 relays, ten tasks.

    Without explicit ``limits`` the VM budget is capped at the number of
    relays, so reduced grids stay feasible.
    """
    topo = generate_topology(seed, n_objects, grid, pitch, area, radius=radius)
    tasks = tuple(tasks)
    if limits is None:
        limits = Limits()
        n_vm = sum(1 for r in topo.relays if r.can_host_vm)
        if limits.vm_budget > n_vm:
            limits = replace(limits, vm_budget=n_vm)
    return Instance(
        topology=topo,
        tasks=tasks,
        requests=generate_requests(seed, topo, tasks, profile),
        capability=generate_capabilities(seed, topo, tasks),
        scenario=Scenario(scenario),
        energy=energy or EnergyParams(),
        limits=limits,
        task_weight=float(task_weight),
        big_m=big_m,
    )


_SMALL_GRIDS = ((1, 1), (1, 2), (1, 3), (2, 2), (1, 4))


def random_small_instance(
    seed: int,
    max_objects: int = 4,
    max_relays: int = 4,
    max_tasks: int = 3,
    max_vms: int = 2,
    scenario: Scenario | str = Scenario.HYBRID,
    task_weight: float | None = None,
) -> Instance:
    """A randomised instance small enough for exact solving and enumeration.

    Limits are drawn tight (few slots, low object upload) so that capacity,
    slot and fairness constraints actually bind.
    """
    rng = _rng(seed, _STREAM_SMALL)
    pitch = 6.0
    grids = [g for g in _SMALL_GRIDS if g[0] * g[1] <= max_relays]
    rows, cols = grids[int(rng.integers(len(grids)))]
    n_obj = int(rng.integers(1, max_objects + 1))
    n_tasks = int(rng.integers(1, max_tasks + 1))
    # mostly object-feasible tasks, with a chance of heavy ones
    pool = list(DEFAULT_TASKS[:4]) * 2 + list(DEFAULT_TASKS[4:])
    picked = set()
    while len(picked) < n_tasks:
        picked.add(pool[int(rng.integers(len(pool)))].id)
    tasks = tuple(t for t in DEFAULT_TASKS if t.id in picked)

    area = (cols * pitch, rows * pitch)
    topo = generate_topology(seed, n_obj, (rows, cols), pitch, area)

    q = set()
    for i in topo.object_ids:
        for t in tasks:
            if rng.random() < 0.6:
                q.add((i, t.id))
    cap = {}
    ids = [t.id for t in tasks]
    for i in topo.object_ids:
        size = int(rng.integers(1, len(ids) + 1))
        cap[i] = frozenset(ids[int(c)] for c in rng.choice(len(ids), size=size, replace=False))
    for r in topo.relay_ids:
        cap[r] = frozenset(ids)

    n_rel = rows * cols
    limits = Limits(
        dl_object_bps=float(rng.choice([2_000, 5_000, 10_000])),
        dl_relay_bps=float(rng.choice([3_000, 25_000])),
        ul_object_bps=float(rng.choice([1_000, 2_000, 5_000])),
        ul_relay_bps=float(rng.choice([1_000, 25_000])),
        upload_slots=int(rng.integers(1, 5)),
        vm_budget=int(rng.integers(0, min(max_vms, n_rel) + 1)),
    )
    if task_weight is None:
        task_weight = float(TASK_WEIGHTS[int(rng.integers(len(TASK_WEIGHTS)))])
    return Instance(topo, tasks, frozenset(q), cap, Scenario(scenario), EnergyParams(), limits, task_weight)


# ---------------------------------------------------------------------------
# JSON

INSTANCE_FORMAT = "p2piot-instance/1"


def instance_to_dict(inst: Instance) -> dict:
    topo = inst.topology
    return {
        "format": INSTANCE_FORMAT,
        "scenario": inst.scenario.value,
        "task_weight": inst.task_weight,
        "big_m": inst.big_m,
        "area": list(topo.area),
        "energy": {"e_elec": inst.energy.e_elec, "epsilon": inst.energy.epsilon},
        "limits": {
            "dl_object_bps": inst.limits.dl_object_bps,
            "dl_relay_bps": inst.limits.dl_relay_bps,
            "ul_object_bps": inst.limits.ul_object_bps,
            "ul_relay_bps": inst.limits.ul_relay_bps,
            "upload_slots": inst.limits.upload_slots,
            "vm_budget": inst.limits.vm_budget,
        },
        "tasks": [
            {"id": t.id, "workload_ghz": t.workload_ghz, "request_bps": t.request_bps, "result_bps": t.result_bps}
            for t in inst.tasks
        ],
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind,
                "x": n.position[0],
                "y": n.position[1],
                "cpu_capacity_ghz": n.cpu_capacity_ghz,
                "cpu_max_power_w": n.cpu_max_power_w,
                "can_host_vm": n.can_host_vm,
            }
            for n in topo.nodes
        ],
        "home_relay": [[o, r] for o, r in sorted(topo.home_relay.items())],
        "adjacency": [[a, b] for a, b in topo.relay_links() if a < b],
        "requests": [list(p) for p in sorted(inst.requests)],
        "capability": [[p, sorted(ks)] for p, ks in sorted(inst.capability.items())],
    }


def instance_to_json(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1) + "\n"


def instance_from_dict(doc: Mapping) -> Instance:
    if doc.get("format") != INSTANCE_FORMAT:
        raise ConfigurationError(f"not an instance document (format={doc.get('format')!r})")
    nodes = [
        Node(n["id"], n["kind"], (float(n["x"]), float(n["y"])), n["cpu_capacity_ghz"], n["cpu_max_power_w"], n["can_host_vm"])
        for n in doc["nodes"]
    ]
    objects = tuple(n for n in nodes if n.kind == "object")
    relays = tuple(n for n in nodes if n.kind == "relay")
    if [n.id for n in objects + relays] != list(range(len(nodes))):
        raise ConfigurationError("node ids must be objects first, then relays, numbered from 0")
    adjacency: dict[int, list[int]] = {r.id: [] for r in relays}
    for a, b in doc["adjacency"]:
        adjacency[a].append(b)
        adjacency[b].append(a)
    everything = objects + relays
    distances = tuple(tuple(math.dist(m.position, n.position) for n in everything) for m in everything)
    topo = Topology(
        objects,
        relays,
        {o: r for o, r in doc["home_relay"]},
        {a: tuple(sorted(bs)) for a, bs in adjacency.items()},
        distances,
        tuple(doc.get("area", (30.0, 30.0))),
    )
    return Instance(
        topology=topo,
        tasks=tuple(TaskType(**t) for t in doc["tasks"]),
        requests=frozenset((i, k) for i, k in doc["requests"]),
        capability={p: frozenset(ks) for p, ks in doc["capability"]},
        scenario=Scenario(doc["scenario"]),
        energy=EnergyParams(**doc["energy"]),
        limits=Limits(**doc["limits"]),
        task_weight=float(doc["task_weight"]),
        big_m=float(doc["big_m"]),
    )


def instance_from_json(text: str) -> Instance:
    return instance_from_dict(json.loads(text))


def custom_instance(
    object_positions: Iterable[tuple[float, float]],
    relay_positions: Iterable[tuple[float, float]],
    requests: Iterable[tuple[int, int]],
    object_capability: Mapping[int, Iterable[int]],
    tasks: Sequence[TaskType] = DEFAULT_TASKS,
    radius: float = 6.0,
    area: tuple[float, float] = (30.0, 30.0),
    **kwargs,
) -> Instance:
    """Hand-built instance; every relay is VM-capable for every task."""
    topo = _assemble_topology(list(object_positions), list(relay_positions), radius, area)
    ids = frozenset(t.id for t in tasks)
    cap = {o: frozenset(object_capability.get(o, ())) for o in topo.object_ids}
    cap.update({r: ids for r in topo.relay_ids})
    return Instance(topo, tuple(tasks), frozenset(requests), cap, **kwargs)


def empty_instance(**kwargs) -> Instance:
    """No nodes, no tasks; useful as a degenerate fixture."""
    topo = Topology((), (), {}, {}, (), (0.0, 0.0))
    kwargs.setdefault("limits", Limits(vm_budget=0))
    return Instance(topo, (), frozenset(), {}, **kwargs)
