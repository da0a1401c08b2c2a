"""Run configurations, per-run metric rows, scenario comparison and CSV output."""

from __future__ import annotations

import csv
import io
import json
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from . import heuristic
from .milp import build, census, dumps_lp, solve_exact
from .model import (
    TABLE_IV_REQUESTS,
    TASK_WEIGHTS,
    ConfigurationError,
    Instance,
    Scenario,
    build_instance,
    instance_from_json,
)
from .power import power_report
from .solution import Assignment, assignment_to_json, validate

__all__ = [
    "ENGINES",
    "EXACT_LIMITS",
    "METRICS_COLUMNS",
    "SAVINGS_COLUMNS",
    "RunConfig",
    "MetricsRow",
    "SavingsRow",
    "served_percent",
    "run_one",
    "run_sweep",
    "compare_scenarios",
    "summarize",
    "rows_to_csv",
    "rows_from_csv",
    "savings_to_csv",
    "figure_tables",
    "write_outputs",
]

ENGINES = ("heuristic", "exact", "export-lp")
# instance size the exact engine accepts without --force
# dense tableau + B&B stays within seconds up to roughly these sizes
EXACT_LIMITS = {"relays": 6, "binaries": 150}
_N_TASKS = 10


@dataclass
class RunConfig:
    seed: int = 42
    seeds: int = 1
    objects: int = 25
    grid: tuple[int, int] = (5, 5)
    pitch: float = 6.0
    area: tuple[float, float] = (30.0, 30.0)
    profile: tuple[int, ...] = TABLE_IV_REQUESTS
    scenarios: tuple[str, ...] = tuple(s.value for s in Scenario)
    task_weights: tuple[float, ...] = TASK_WEIGHTS
    engine: str = "heuristic"
    out: str = "p2piot-out"
    instance: str | None = None
    order_seed: int | None = None
    node_limit: int = 100_000
    time_limit: float | None = None
    jobs: int = 1
    force: bool = False

    def __post_init__(self):
        self.grid = tuple(self.grid)
        self.area = tuple(self.area)
        self.profile = tuple(int(p) for p in self.profile)
        self.scenarios = tuple(Scenario(s).value for s in self.scenarios)
        self.task_weights = tuple(float(f) for f in self.task_weights)
        if not self.task_weights:
            raise ConfigurationError("the task-weight list is empty")
        if not self.scenarios:
            raise ConfigurationError("no scenarios selected")
        if self.engine not in ENGINES:
            raise ConfigurationError(f"engine must be one of {ENGINES}, not {self.engine!r}")
        if self.seeds < 1:
            raise ConfigurationError("seeds must be >= 1")

    def seed_list(self) -> list[int]:
        return [self.seed + n for n in range(self.seeds)]

    def make_instance(self, seed: int) -> Instance:
        if self.instance:
            return instance_from_json(Path(self.instance).read_text())
        return build_instance(seed, n_objects=self.objects, grid=self.grid, pitch=self.pitch,
                              area=self.area, profile=self.profile)

    def check_exact_size(self, inst: Instance) -> None:
        if self.engine != "exact" or self.force:
            return
        size = {"relays": len(inst.relays), "binaries": census(inst)["n_binary"]}
        over = {k: v for k, v in size.items() if v > EXACT_LIMITS[k]}
        if over:
            raise ConfigurationError(f"instance too large for the exact engine ({over}, limits {EXACT_LIMITS}); "
                                     "pass --force to try anyway or use export-lp")


@dataclass
class MetricsRow:
    scenario: str
    task_weight: float
    seed: int
    engine: str
    status: str  # ok | invalid | node-limit | infeasible | exported
    served: int
    requested: int
    proc_objects_uw: float = 0.0
    proc_relays_uw: float = 0.0
    traffic_objects_uw: float = 0.0
    traffic_relays_uw: float = 0.0
    vms_used: int = 0
    vm_utilization_pct: float = 0.0
    served_by_task: tuple[int, ...] = field(default_factory=lambda: (0,) * _N_TASKS)

    @property
    def served_pct(self) -> Fraction:
        return served_percent(self.served, self.requested)

    @property
    def processing_uw(self) -> float:
        return self.proc_objects_uw + self.proc_relays_uw

    @property
    def traffic_uw(self) -> float:
        return self.traffic_objects_uw + self.traffic_relays_uw

    @property
    def total_uw(self) -> float:
        return self.processing_uw + self.traffic_uw


METRICS_COLUMNS = (
    ["scenario", "task_weight", "seed", "engine", "status", "served", "requested", "served_pct",
     "proc_objects_uw", "proc_relays_uw", "traffic_objects_uw", "traffic_relays_uw",
     "processing_uw", "traffic_uw", "total_uw", "vms_used", "vm_utilization_pct"]
    + [f"served_k{k}" for k in range(1, _N_TASKS + 1)]
)


def served_percent(served: int, requested: int) -> Fraction:
    """Exact percentage of served requests (0 when nothing was requested)."""
    return Fraction(100 * served, requested) if requested else Fraction(0)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _row_cells(r: MetricsRow) -> list:
    return ([r.scenario, repr(r.task_weight), r.seed, r.engine, r.status, r.served, r.requested,
             f"{float(r.served_pct):.4f}"]
            + [_fmt(v) for v in (r.proc_objects_uw, r.proc_relays_uw, r.traffic_objects_uw, r.traffic_relays_uw,
                                 r.processing_uw, r.traffic_uw, r.total_uw)]
            + [r.vms_used, f"{r.vm_utilization_pct:.4f}"] + list(r.served_by_task))


def rows_to_csv(rows: Iterable[MetricsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_COLUMNS)
    for r in rows:
        w.writerow(_row_cells(r))
    return buf.getvalue()


def rows_from_csv(text: str) -> list[MetricsRow]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != METRICS_COLUMNS:
        raise ConfigurationError("metrics CSV header does not match the expected columns")
    out = []
    for d in reader:
        out.append(MetricsRow(
            scenario=d["scenario"], task_weight=float(d["task_weight"]), seed=int(d["seed"]),
            engine=d["engine"], status=d["status"], served=int(d["served"]), requested=int(d["requested"]),
            proc_objects_uw=float(d["proc_objects_uw"]), proc_relays_uw=float(d["proc_relays_uw"]),
            traffic_objects_uw=float(d["traffic_objects_uw"]), traffic_relays_uw=float(d["traffic_relays_uw"]),
            vms_used=int(d["vms_used"]), vm_utilization_pct=float(d["vm_utilization_pct"]),
            served_by_task=tuple(int(d[f"served_k{k}"]) for k in range(1, _N_TASKS + 1)),
        ))
    return out


def metrics_for(inst: Instance, a: Assignment, flows, *, seed: int, engine: str, status: str) -> MetricsRow:
    rep = power_report(inst, a, flows)
    per_task = [0] * _N_TASKS
    for _, _, k in a.u:
        if 1 <= k <= _N_TASKS:
            per_task[k - 1] += 1
    relay_load = sum(inst.task(k).workload_ghz for _, j, k in a.u if inst.topology.is_relay(j))
    vm_cap = sum(inst.topology.node(r).cpu_capacity_ghz for r in a.v)
    return MetricsRow(
        scenario=inst.scenario.value, task_weight=inst.task_weight, seed=seed, engine=engine, status=status,
        served=len(a), requested=inst.total_requests,
        proc_objects_uw=rep.object_processing_total * 1e6, proc_relays_uw=rep.relay_processing_total * 1e6,
        traffic_objects_uw=rep.object_traffic_total * 1e6, traffic_relays_uw=rep.relay_traffic_total * 1e6,
        vms_used=len({j for _, j, _ in a.u if inst.topology.is_relay(j)}),
        vm_utilization_pct=100.0 * relay_load / vm_cap if vm_cap else 0.0,
        served_by_task=tuple(per_task),
    )


@dataclass
class RunOutput:
    row: MetricsRow
    assignment: Assignment | None = None
    lp_text: str | None = None


def run_one(cfg: RunConfig, scenario: str, f: float, seed: int) -> RunOutput:
    """One (scenario, F, seed) run of the configured engine."""
    inst = cfg.make_instance(seed).with_scenario(scenario).with_task_weight(f)
    if cfg.engine == "export-lp":
        row = MetricsRow(scenario, f, seed, cfg.engine, "exported", 0, inst.total_requests)
        return RunOutput(row, None, dumps_lp(build(inst)))
    if cfg.engine == "heuristic":
        order = None if cfg.order_seed is None else heuristic.shuffled_order(inst, cfg.order_seed)
        res = heuristic.run(inst, order)
        a, flows, status = res.assignment, res.flows, "ok"
    else:
        cfg.check_exact_size(inst)
        sol = solve_exact(inst, node_limit=cfg.node_limit, time_limit=cfg.time_limit)
        if sol.assignment is None:
            return RunOutput(MetricsRow(scenario, f, seed, cfg.engine, sol.status, 0, inst.total_requests))
        a, flows, status = sol.assignment, sol.flows, "ok" if sol.status == "optimal" else sol.status
    if not validate(inst, a).ok:
        status = "invalid"
    return RunOutput(metrics_for(inst, a, flows, seed=seed, engine=cfg.engine, status=status), a)


def _run_task(args):
    return run_one(*args)


def run_sweep(cfg: RunConfig) -> list[RunOutput]:
    """Every (scenario, F, seed) combination, in that deterministic order."""
    jobs = [(cfg, s, f, seed) for s in cfg.scenarios for f in cfg.task_weights for seed in cfg.seed_list()]
    if cfg.engine == "exact" and not cfg.force:
        cfg.check_exact_size(cfg.make_instance(cfg.seed))
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(_run_task, jobs))
    return [run_one(*j) for j in jobs]


@dataclass(frozen=True)
class SavingsRow:
    task_weight: float | str  # "mean" for the sweep average
    scenario: str
    served_pct: Fraction | float
    hybrid_served_pct: Fraction | float
    served_delta_pct: Fraction | float
    power_saving_pct: float


SAVINGS_COLUMNS = ["task_weight", "scenario", "served_pct", "hybrid_served_pct", "served_delta_pct",
                   "power_saving_pct"]


def _power_saving(hybrid_uw: float, other_uw: float) -> float:
    if hybrid_uw == 0:
        return 0.0
    return (hybrid_uw - other_uw) / hybrid_uw * 100


def compare_scenarios(rows: Sequence[MetricsRow]) -> list[SavingsRow]:
    """Per task weight, each scenario against hybrid; then sweep means.

    Rows of several seeds are averaged per (scenario, F) first. Served
    percentages stay exact fractions for single-seed inputs.
    """
    groups: dict[tuple[str, float], list[MetricsRow]] = {}
    for r in rows:
        groups.setdefault((r.scenario, r.task_weight), []).append(r)
    weights = sorted({f for _, f in groups})
    hybrid = Scenario.HYBRID.value
    others = [s.value for s in Scenario if s.value != hybrid and any(k[0] == s.value for k in groups)]
    if not any(k[0] == hybrid for k in groups):
        raise ConfigurationError("scenario comparison needs hybrid rows as the baseline")
    if not others:
        raise ConfigurationError("scenario comparison needs at least one non-hybrid scenario")

    def pct(group):
        vals = [r.served_pct for r in group]
        return vals[0] if len(vals) == 1 else sum(vals) / len(vals)

    def power(group):
        return statistics.fmean(r.total_uw for r in group)

    out = []
    per_scenario: dict[str, list[SavingsRow]] = {s: [] for s in others}
    for f in weights:
        if (hybrid, f) not in groups:
            raise ConfigurationError(f"no hybrid baseline at F={f}")
        h = groups[(hybrid, f)]
        for s in others:
            if (s, f) not in groups:
                continue
            g = groups[(s, f)]
            row = SavingsRow(f, s, pct(g), pct(h), pct(g) - pct(h), _power_saving(power(h), power(g)))
            out.append(row)
            per_scenario[s].append(row)
    for s in others:
        got = per_scenario[s]
        if not got:
            continue
        n = len(got)
        out.append(SavingsRow(
            "mean", s,
            sum((r.served_pct for r in got), Fraction(0)) / n,
            sum((r.hybrid_served_pct for r in got), Fraction(0)) / n,
            sum((r.served_delta_pct for r in got), Fraction(0)) / n,
            statistics.fmean(r.power_saving_pct for r in got),
        ))
    return out


def savings_to_csv(rows: Iterable[SavingsRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SAVINGS_COLUMNS)
    for r in rows:
        f = r.task_weight if isinstance(r.task_weight, str) else repr(r.task_weight)
        w.writerow([f, r.scenario, f"{float(r.served_pct):.4f}", f"{float(r.hybrid_served_pct):.4f}",
                    f"{float(r.served_delta_pct):.4f}", f"{r.power_saving_pct:.4f}"])
    return buf.getvalue()


_SUMMARY_METRICS = ("served_pct", "processing_uw", "traffic_uw", "total_uw")


def summarize(rows: Sequence[MetricsRow]) -> str:
    """Mean and sample stdev over seeds per (scenario, F), as CSV."""
    groups: dict[tuple[str, float], list[MetricsRow]] = {}
    for r in rows:
        groups.setdefault((r.scenario, r.task_weight), []).append(r)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["scenario", "task_weight", "seeds"]
               + [f"{m}_{s}" for m in _SUMMARY_METRICS for s in ("mean", "stdev")])
    for (s, f), g in groups.items():
        cells = [s, repr(f), len(g)]
        for m in _SUMMARY_METRICS:
            vals = [float(getattr(r, m)) for r in g]
            cells += [_fmt(statistics.fmean(vals)), _fmt(statistics.stdev(vals) if len(vals) > 1 else 0.0)]
        w.writerow(cells)
    return buf.getvalue()


# figure name -> (x axis, y columns); each table has one row per run
_FIGURES = {
    "fig3": ("task_weight", ["processing_uw"]),
    "fig4": ("task_weight", ["proc_objects_uw"]),
    "fig5": ("task_weight", ["served_pct"]),
    "fig6": ("task_weight", ["proc_relays_uw"]),
    "fig7": ("task_weight", ["traffic_objects_uw", "traffic_relays_uw"]),
    "fig9": ("served_pct", ["total_uw"]),
    "fig10": ("served_pct", ["proc_objects_uw"]),
    "fig11": ("served_pct", ["vm_utilization_pct"]),
    "fig12": ("served_pct", ["traffic_relays_uw"]),
}


def figure_tables(rows: Sequence[MetricsRow]) -> dict[str, str]:
    """Plot data for each figure as CSV text, keyed by file stem."""
    out = {}
    for name, (x, ys) in _FIGURES.items():
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "engine", "seed", x] + ys)
        for r in rows:
            if r.status not in ("ok", "node-limit"):
                continue
            xv = repr(r.task_weight) if x == "task_weight" else f"{float(r.served_pct):.4f}"
            w.writerow([r.scenario, r.engine, r.seed, xv] + [f"{float(getattr(r, y)):.6f}" for y in ys])
        out[name] = buf.getvalue()
    return out


def write_outputs(cfg: RunConfig, results: Sequence[RunOutput], out_dir: str | os.PathLike) -> Path:
    """Write metrics, summary, figure tables, assignments (or LP files)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [r.row for r in results]
    (out / "metrics.csv").write_text(rows_to_csv(rows))
    cfg_doc = asdict(cfg)
    (out / "config.json").write_text(json.dumps(cfg_doc, indent=2, sort_keys=True) + "\n")
    if cfg.engine == "export-lp":
        lp_dir = out / "lp"
        lp_dir.mkdir(exist_ok=True)
        for r in results:
            (lp_dir / f"{r.row.scenario}_F{r.row.task_weight}_s{r.row.seed}.lp").write_text(r.lp_text)
        return out
    (out / "summary.csv").write_text(summarize(rows))
    for name, text in figure_tables(rows).items():
        (out / f"{name}.csv").write_text(text)
    a_dir = out / "assignments"
    a_dir.mkdir(exist_ok=True)
    for r in results:
        if r.assignment is not None:
            (a_dir / f"{r.row.scenario}_F{r.row.task_weight}_s{r.row.seed}.json").write_text(
                assignment_to_json(r.assignment))
    return out


def config_from_dict(doc: dict) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    return RunConfig(**doc)


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
