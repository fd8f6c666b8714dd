"""End-to-end runs: allocate RBs, replay delivery, execute the DAG, report metrics.

The optimizer step is pluggable: an optimizer takes a :class:`Problem` and
returns a :class:`Plan` (RB allocation plus compute start/gates). The two
built-in optimizers are registered in :data:`OPTIMIZERS` under ``"RTFS"``
and ``"PACS"``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from winp import channel, comm_sched, engine, workload
from winp.errors import ConfigError, InfeasibleError, StructuralError, WinpError

MODES = ("RTFS", "PACS")


@dataclass
class ExperimentConfig:
    """All simulation parameters; defaults reproduce the reference setup (six modalities, four cores)."""

    K: int = 6
    token_sizes: List[int] = field(default_factory=lambda: [512, 128, 256, 128, 192, 128])
    feature_dim: int = 512
    bytes_per_element: float = 2
    overhead: float = 1.05
    compression: List[float] = field(default_factory=lambda: [0.25, 0.25, 0.80, 0.60, 0.60, 0.60])
    cores: int = 4
    B_max: float = 1.0
    delta_ms: float = 1.0
    subcarriers: int = 16
    rate_range: List[float] = field(default_factory=lambda: [1000.0, 10000.0])
    T: int = 8000
    jitter_range: List[float] = field(default_factory=lambda: [0.9, 1.1])
    speed_jitter_range: List[float] = field(default_factory=lambda: [-0.08, 0.08])
    bw_jitter: float = 0.05
    latency_scale: float = 6.0
    op_coefficients: Dict[str, List[float]] = field(
        default_factory=lambda: {k: list(v) for k, v in workload.DEFAULT_OP_COEFFICIENTS.items()}
    )
    bw_base: Dict[str, float] = field(default_factory=lambda: dict(workload.DEFAULT_BW_BASE))
    bw_token_slope: float = 0.0005
    rate_eps: float = channel.DEFAULT_EPS
    engine_eps: float = engine.DEFAULT_EPS
    mode: str = "RTFS"
    seed: int = 0
    replications: int = 1

    # mode, seed and replication count do not identify the scenario
    _UNHASHED = ("mode", "seed", "replications")

    def __post_init__(self):
        self.validate()

    def validate(self):
        def fail(msg, name):
            raise ConfigError(msg, field=name)

        if not isinstance(self.K, int) or isinstance(self.K, bool) or self.K < 2:
            fail(f"K must be an integer >= 2, got {self.K!r}", "K")
        for name in ("token_sizes", "compression"):
            vec = getattr(self, name)
            if len(vec) != self.K:
                fail(f"{name} length {len(vec)} ≠ K={self.K}", name)
        if not isinstance(self.cores, int) or self.cores < 1:
            fail(f"cores must be an integer >= 1, got {self.cores!r}", "cores")
        if not isinstance(self.subcarriers, int) or self.subcarriers < 1:
            fail(f"subcarriers must be an integer >= 1, got {self.subcarriers!r}", "subcarriers")
        if not isinstance(self.T, int) or self.T < 1:
            fail(f"T must be an integer >= 1, got {self.T!r}", "T")
        if not self.B_max > 0:
            fail("B_max must be > 0", "B_max")
        if len(self.rate_range) != 2 or not 0 < self.rate_range[0] <= self.rate_range[1]:
            fail("rate_range must be [lo, hi] with 0 < lo <= hi", "rate_range")
        for name in ("jitter_range", "speed_jitter_range"):
            if len(getattr(self, name)) != 2:
                fail(f"{name} must be a [lo, hi] pair", name)
        if self.mode not in MODES:
            fail(f"mode must be one of {MODES}, got {self.mode!r}", "mode")
        if not isinstance(self.seed, int) or self.seed < 0:
            fail("seed must be a non-negative integer", "seed")
        if not isinstance(self.replications, int) or self.replications < 1:
            fail("replications must be an integer >= 1", "replications")
        if self.rate_eps <= 0 or self.engine_eps <= 0:
            fail("eps values must be > 0", "rate_eps")
        self.workload_config()

    def workload_config(self, seed=None):
        return workload.WorkloadGenConfig(
            token_sizes=tuple(self.token_sizes),
            feature_dim=self.feature_dim,
            bytes_per_element=self.bytes_per_element,
            compression=tuple(self.compression),
            overhead=self.overhead,
            cores=self.cores,
            latency_scale=self.latency_scale,
            delta_ms=self.delta_ms,
            jitter_range=tuple(self.jitter_range),
            speed_jitter_range=tuple(self.speed_jitter_range),
            bw_jitter=self.bw_jitter,
            op_coefficients=self.op_coefficients,
            bw_base=self.bw_base,
            bw_token_slope=self.bw_token_slope,
            seed=self.seed if seed is None else seed,
        )

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def config_hash(self):
        doc = {k: v for k, v in self.to_dict().items() if k not in self._UNHASHED}
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Problem:
    """Everything an optimizer may look at."""

    dag: workload.Dag
    profile: workload.ProfileTable
    ranks: np.ndarray
    trace: channel.RateTrace
    uhat: np.ndarray
    payload_bits: np.ndarray
    eps: float


@dataclass
class Plan:
    """Optimizer output: an RB allocation and how computation is released.

    ``t_start`` set means wait-all execution from that time; otherwise each
    slice's Embed job is gated at ``gates[k]``.
    """

    allocation: channel.RbAllocation
    arrival_slot: List[int]
    gates: List[float]
    t_start: Optional[float] = None


def rtfs_optimizer(problem):
    sched = comm_sched.rtfs_allocate(problem.trace, problem.uhat, problem.payload_bits, problem.eps)
    return Plan(sched.allocation, sched.arrival_slot, sched.release_ms, sched.t_start)


def pacs_optimizer(problem):
    sched = comm_sched.pacs_allocate(
        problem.trace, problem.uhat, problem.payload_bits, problem.dag, problem.profile.mean_latency, problem.eps
    )
    return Plan(sched.allocation, sched.arrival_slot, sched.release_ms)


OPTIMIZERS: Dict[str, Callable[[Problem], Plan]] = {"RTFS": rtfs_optimizer, "PACS": pacs_optimizer}


@dataclass
class ExperimentResult:
    mode: str
    seed: int
    config_hash: str
    makespan: float
    release_ms: List[float]
    arrival_slot: List[int]
    t_start: Optional[float]
    comm_ms: float
    compute_ms: float
    utilization: List[float]
    schedule: engine.ScheduleTrace
    allocation: channel.RbAllocation
    config: ExperimentConfig

    @property
    def compute_span(self):
        return self.makespan - (self.t_start if self.t_start is not None else 0.0)


def build_problem(cfg):
    """Instantiate DAG, profile, ranks, rate trace and predictor for ``cfg``."""
    wcfg = cfg.workload_config()
    dag = workload.build_multimodal_dag(cfg.K)
    profile = workload.generate_profile(dag, wcfg)
    ranks = workload.upward_ranks(dag, profile)
    trace = channel.generate_rate_trace(cfg.K, cfg.subcarriers, cfg.T, tuple(cfg.rate_range), cfg.delta_ms, cfg.seed)
    uhat = channel.suffix_mean_predictor(channel.slot_mean_rates(trace), cfg.rate_eps)
    return Problem(dag, profile, ranks, trace, uhat, workload.payload_bits(wcfg), cfg.rate_eps)


def run_experiment(cfg, mode=None, seed=None, optimizer=None, problem=None):
    """Run one optimize-then-evaluate pass.

    The plan's allocation is replayed through the channel model and the
    replayed arrivals must match the optimizer's; the DAG is then executed
    with a wait-all start or with per-slice gates.
    """
    changes = {}
    if mode is not None:
        changes["mode"] = mode
    if seed is not None:
        changes["seed"] = seed
    if changes:
        cfg = cfg.replace(**changes)
    if problem is None:
        problem = build_problem(cfg)
    plan = (optimizer or OPTIMIZERS[cfg.mode])(problem)

    delivery = channel.replay_delivery(problem.trace, plan.allocation, problem.payload_bits)
    if not delivery.feasible:
        raise InfeasibleError(delivery.unfinished)
    if list(delivery.arrival_slot) != list(plan.arrival_slot):
        raise StructuralError(
            f"replayed arrivals {delivery.arrival_slot} differ from the optimizer's {plan.arrival_slot}"
        )
    releases = list(delivery.release_ms)
    last_release = max(releases)

    if plan.t_start is not None:
        sched = engine.run_waitall(
            problem.dag, problem.profile, problem.ranks, plan.t_start, cfg.B_max, cfg.engine_eps, gates=releases
        )
        comm = plan.t_start
    else:
        sched = engine.run_gated(problem.dag, problem.profile, problem.ranks, releases, cfg.B_max, cfg.engine_eps)
        comm = last_release
    makespan = sched.makespan
    util = (sched.busy_time() / makespan).tolist() if makespan > 0 else [0.0] * cfg.cores
    return ExperimentResult(
        mode=cfg.mode,
        seed=cfg.seed,
        config_hash=cfg.config_hash,
        makespan=makespan,
        release_ms=releases,
        arrival_slot=list(delivery.arrival_slot),
        t_start=plan.t_start,
        comm_ms=comm,
        compute_ms=makespan - comm,
        utilization=util,
        schedule=sched,
        allocation=plan.allocation,
        config=cfg,
    )


def gain_pct(rtfs_makespan, pacs_makespan):
    """Relative makespan reduction of PACS over RTFS in percent (positive = PACS faster)."""
    if rtfs_makespan <= 0:
        raise ValueError("RTFS makespan must be positive")
    return (rtfs_makespan - pacs_makespan) / rtfs_makespan * 100.0


def compute_metrics(result, paired=None):
    """Metrics record for ``result``; ``paired`` is the other mode's result, if any."""
    if not result.makespan > 0:
        raise ValueError("makespan must be positive to compute utilisation")
    out = {
        "config_hash": result.config_hash,
        "mode": result.mode,
        "seed": result.seed,
        "makespan_ms": result.makespan,
        "t_start_ms": result.t_start,
        "comm_ms": result.comm_ms,
        "compute_ms": result.compute_ms,
        "releases_ms": list(result.release_ms),
        "arrival_slots": list(result.arrival_slot),
        "utilization": list(result.utilization),
    }
    if paired is not None:
        rt, pa = (result, paired) if result.mode == "RTFS" else (paired, result)
        out["gain_pct"] = gain_pct(rt.makespan, pa.makespan)
    return out


def run_paired(cfg, seed=None):
    """Run RTFS and PACS on the same trace and profile."""
    if seed is not None:
        cfg = cfg.replace(seed=seed)
    problem = build_problem(cfg)
    return tuple(run_experiment(cfg, mode=m, problem=problem) for m in MODES)


# -- sweeps -------------------------------------------------------------------

DIMENSIONS = {
    "cores": "cores",
    "subcarriers": "subcarriers",
    "latency_scale": "latency_scale",
    "B_max": "B_max",
    "token_vector": "token_sizes",
    "compression_vector": "compression",
}

TABLE3_TOKENS = [
    [128, 128, 128, 128, 128, 128],
    [64, 64, 128, 128, 256, 256],
    [64, 128, 256, 128, 192, 128],
    [512, 128, 256, 128, 192, 128],
    [512, 128, 256, 384, 192, 64],
]

TABLE3_COMPRESSION = [
    [0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
    [0.25, 0.25, 0.5, 0.5, 0.5, 0.5],
    [0.25, 0.25, 0.8, 0.6, 0.6, 0.6],
    [0.25, 0.25, 0.5, 0.5, 0.8, 0.8],
    [0.5, 0.5, 0.5, 0.5, 0.8, 0.8],
]


def apply_dimension(cfg, dimension, value):
    if dimension not in DIMENSIONS:
        raise ConfigError(f"unknown sweep dimension {dimension!r}; choose from {sorted(DIMENSIONS)}", field="dimension")
    name = DIMENSIONS[dimension]
    if name in ("token_sizes", "compression"):
        value = list(value)
    elif name in ("cores", "subcarriers"):
        if int(value) != value:
            raise ConfigError(f"{dimension} must be an integer", field=dimension)
        value = int(value)
    else:
        value = float(value)
    return cfg.replace(**{name: value})


def format_value(value):
    if isinstance(value, (list, tuple)):
        return "[" + " ".join(format_value(v) for v in value) + "]"
    if isinstance(value, float) and value.is_integer():
        return str(int(value)) if abs(value) < 1e15 else repr(value)
    return str(value)


def _run_cell(args):
    cfg, seed = args
    rows = []
    try:
        results = run_paired(cfg, seed)
    except WinpError as exc:
        for mode in MODES:
            rows.append({"mode": mode, "seed": seed, "feasible": False, "error": str(exc)})
        return rows
    for res in results:
        rows.append(
            {
                "mode": res.mode,
                "seed": seed,
                "feasible": True,
                "makespan_ms": res.makespan,
                "t_start_ms": res.t_start,
                "comm_ms": res.comm_ms,
                "compute_ms": res.compute_ms,
                "config_hash": res.config_hash,
                "error": "",
            }
        )
    return rows


def _map(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def sweep(cfg, dimension, values, seeds, jobs=1):
    """Paired RTFS/PACS runs for every (value, seed).

    ``seeds`` is a count (seeds ``cfg.seed .. cfg.seed + n - 1``) or an explicit
    list. Rows are ordered by (value, seed, mode) whatever the execution order;
    a cell that raises is reported with ``feasible=False`` and the sweep goes on.
    """
    values = list(values)
    if not values:
        raise ConfigError("sweep needs at least one value", field="values")
    seed_list = list(range(cfg.seed, cfg.seed + seeds)) if isinstance(seeds, int) else list(seeds)
    cells = [(apply_dimension(cfg, dimension, v), s) for v in values for s in seed_list]
    out = _map(_run_cell, cells, jobs)
    rows = []
    for (cell_cfg, s), cell_rows in zip(cells, out):
        value = format_value(getattr(cell_cfg, DIMENSIONS[dimension]))
        for r in cell_rows:
            rows.append({"dimension": dimension, "value": value, **r})
    return rows


def _mean_std(xs):
    xs = np.asarray(xs, dtype=float)
    if not len(xs):
        return math.nan, math.nan
    return float(xs.mean()), float(xs.std(ddof=1)) if len(xs) > 1 else 0.0


def summarize(rows, keys=("dimension", "value")):
    """Per-cell mean/std of makespan for both modes plus the mean paired gain."""
    cells: Dict[tuple, dict] = {}
    for r in rows:
        cells.setdefault(tuple(r[k] for k in keys), {}).setdefault(r["seed"], {})[r["mode"]] = r
    summary = []
    for cell_key, by_seed in cells.items():
        ok = [d for d in by_seed.values() if all(d.get(m, {}).get("feasible") for m in MODES)]
        rec = dict(zip(keys, cell_key))
        rec["n_seeds"] = len(by_seed)
        rec["n_feasible"] = len(ok)
        for m in MODES:
            mean, std = _mean_std([d[m]["makespan_ms"] for d in ok])
            rec[f"{m.lower()}_mean_ms"], rec[f"{m.lower()}_std_ms"] = mean, std
        gains = [gain_pct(d["RTFS"]["makespan_ms"], d["PACS"]["makespan_ms"]) for d in ok]
        rec["gain_mean_pct"], rec["gain_std_pct"] = _mean_std(gains)
        summary.append(rec)
    return summary


def table3_grid(cfg, seeds, jobs=1):
    """Paired runs over the 5 token vectors x 5 compression vectors grid.

    Returns ``(rows, summary)``; summary cells carry ``token_vector`` and
    ``compression_vector`` labels.
    """
    seed_list = list(range(cfg.seed, cfg.seed + seeds)) if isinstance(seeds, int) else list(seeds)
    cells = []
    for tok in TABLE3_TOKENS:
        for comp in TABLE3_COMPRESSION:
            cells += [(cfg.replace(K=len(tok), token_sizes=list(tok), compression=list(comp)), s) for s in seed_list]
    out = _map(_run_cell, cells, jobs)
    rows = []
    for (cell_cfg, _), cell_rows in zip(cells, out):
        for r in cell_rows:
            rows.append(
                {
                    "token_vector": format_value(cell_cfg.token_sizes),
                    "compression_vector": format_value(cell_cfg.compression),
                    **r,
                }
            )
    return rows, summarize(rows, keys=("token_vector", "compression_vector"))
