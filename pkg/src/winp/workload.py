"""Multimodal job graph, synthetic job profiles, slice payloads and upward ranks."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from winp._rng import stream
from winp.errors import ConfigError, StructuralError


class OperatorKind(str, enum.Enum):
    EMBED = "Embed"
    ENC1 = "Enc1"
    ENC2 = "Enc2"
    ENC3 = "Enc3"
    PROJ = "Proj"
    ALIGN = "Align"
    FUSION = "Fusion"
    CLASSIFIER = "Classifier"
    OUTPUT = "Output"

    @property
    def per_slice(self):
        return self in _SLICE_KINDS


_SLICE_KINDS = (
    OperatorKind.EMBED,
    OperatorKind.ENC1,
    OperatorKind.ENC2,
    OperatorKind.ENC3,
    OperatorKind.PROJ,
)


@dataclass(frozen=True)
class Job:
    id: int
    kind: OperatorKind
    slice: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        if (self.slice is not None) != self.kind.per_slice:
            raise ConfigError(f"job {self.id}: kind {self.kind.value} and slice={self.slice} disagree")


@dataclass
class Dag:
    """A job graph. Job ids must equal their position in ``jobs``.

    ``output_id`` is the sink used by makespan prediction; generic graphs built
    for testing the engine may leave it unset.
    """

    jobs: list
    edges: list
    output_id: Optional[int] = None
    K: int = 0
    preds: list = field(init=False, repr=False)
    succs: list = field(init=False, repr=False)
    topo_order: list = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.jobs)
        for i, job in enumerate(self.jobs):
            if job.id != i:
                raise StructuralError(f"job at position {i} has id {job.id}")
            if job.slice is not None and not 0 <= job.slice < max(self.K, 1):
                raise StructuralError(f"job {i} slice {job.slice} outside [0, {self.K})")
        self.preds = [[] for _ in range(n)]
        self.succs = [[] for _ in range(n)]
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n):
                raise StructuralError(f"edge ({u}, {v}) references an unknown job")
            self.preds[v].append(u)
            self.succs[u].append(v)
        self.topo_order = _topological_order(self.preds, self.succs)
        if self.output_id is not None:
            sinks = [v for v in range(n) if not self.succs[v]]
            if sinks != [self.output_id]:
                raise StructuralError(f"expected single sink {self.output_id}, found {sinks}")

    def __len__(self):
        return len(self.jobs)

    def slice_entries(self):
        """Map slice index -> ids of its pred-less jobs."""
        out = {}
        for job in self.jobs:
            if job.slice is not None and not self.preds[job.id]:
                out.setdefault(job.slice, []).append(job.id)
        return out

    def to_edgelist(self):
        return "".join(f"{u} {v}\n" for u, v in self.edges)


def _topological_order(preds, succs):
    indeg = [len(p) for p in preds]
    order = [v for v, d in enumerate(indeg) if d == 0]
    i = 0
    while i < len(order):
        for w in succs[order[i]]:
            indeg[w] -= 1
            if indeg[w] == 0:
                order.append(w)
        i += 1
    if len(order) != len(preds):
        cyclic = sorted(v for v, d in enumerate(indeg) if d > 0)
        raise StructuralError(f"graph has a cycle through jobs {cyclic}")
    return order


def build_multimodal_dag(K):
    """Build the two-level multimodal graph for ``K`` modalities.

    Each modality contributes a five-job chain ``Embed -> Enc1 -> Enc2 -> Enc3 -> Proj``.
    The first ``K // 2`` projections feed ``Align_1``, the rest feed ``Align_2``,
    and both alignments feed ``Fusion -> Classifier -> Output``. Ids are
    modality-major, followed by the five cross-modality jobs.
    """
    if int(K) != K or K < 2:
        raise ConfigError(f"K must be an integer >= 2, got {K}", field="K")
    K = int(K)
    jobs, edges = [], []
    for k in range(K):
        base = 5 * k
        for j, kind in enumerate(_SLICE_KINDS):
            jobs.append(Job(base + j, kind, k, f"{kind.value}_{k}"))
            if j:
                edges.append((base + j - 1, base + j))
    a1, a2, fusion, clf, out = range(5 * K, 5 * K + 5)
    jobs += [
        Job(a1, OperatorKind.ALIGN, None, "Align_1"),
        Job(a2, OperatorKind.ALIGN, None, "Align_2"),
        Job(fusion, OperatorKind.FUSION, None, "Fusion"),
        Job(clf, OperatorKind.CLASSIFIER, None, "Classifier"),
        Job(out, OperatorKind.OUTPUT, None, "Output"),
    ]
    half = K // 2
    for k in range(K):
        edges.append((5 * k + 4, a1 if k < half else a2))
    edges += [(a1, fusion), (a2, fusion), (fusion, clf), (clf, out)]
    return Dag(jobs, edges, output_id=out, K=K)


# Baseline latency g(S) = linear*S + quadratic*S^2, in slot units.
DEFAULT_OP_COEFFICIENTS = {
    "Embed": (0.0020, 0.0),
    "Enc1": (0.0030, 8e-6),
    "Enc2": (0.0030, 8e-6),
    "Enc3": (0.0030, 8e-6),
    "Proj": (0.0015, 0.0),
    "Align": (0.0010, 0.0),
    "Fusion": (0.0025, 4e-6),
    "Classifier": (0.0015, 0.0),
    "Output": (0.0002, 0.0),
}

DEFAULT_BW_BASE = {
    "Embed": 0.35,
    "Enc1": 0.25,
    "Enc2": 0.25,
    "Enc3": 0.25,
    "Proj": 0.20,
    "Align": 0.15,
    "Fusion": 0.30,
    "Classifier": 0.20,
    "Output": 0.15,
}

BW_MIN, BW_MAX = 0.2, 1.0


@dataclass
class WorkloadGenConfig:
    token_sizes: Sequence[int] = (512, 128, 256, 128, 192, 128)
    feature_dim: int = 512
    bytes_per_element: float = 2
    compression: Sequence[float] = (0.25, 0.25, 0.80, 0.60, 0.60, 0.60)
    overhead: float = 1.05
    cores: int = 4
    latency_scale: float = 6.0
    delta_ms: float = 1.0
    jitter_range: Sequence[float] = (0.9, 1.1)
    speed_jitter_range: Sequence[float] = (-0.08, 0.08)
    bw_jitter: float = 0.05
    op_coefficients: Mapping[str, Sequence[float]] = field(default_factory=lambda: dict(DEFAULT_OP_COEFFICIENTS))
    bw_base: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_BW_BASE))
    bw_token_slope: float = 0.0005
    seed: int = 0

    def __post_init__(self):
        self.validate()

    @property
    def K(self):
        return len(self.token_sizes)

    def validate(self):
        if len(self.compression) != len(self.token_sizes):
            raise ConfigError(
                f"compression length {len(self.compression)} ≠ K={len(self.token_sizes)}", field="compression"
            )
        if any(int(n) != n or n < 1 for n in self.token_sizes):
            raise ConfigError("token_sizes must be integers >= 1", field="token_sizes")
        if any(not 0 < c <= 1 for c in self.compression):
            raise ConfigError("compression factors must lie in (0, 1]", field="compression")
        if self.overhead < 1:
            raise ConfigError("overhead must be >= 1", field="overhead")
        if int(self.cores) != self.cores or self.cores < 1:
            raise ConfigError("cores must be an integer >= 1", field="cores")
        if self.latency_scale <= 0:
            raise ConfigError("latency_scale must be > 0", field="latency_scale")
        if self.feature_dim < 1 or self.bytes_per_element <= 0:
            raise ConfigError("feature_dim and bytes_per_element must be positive", field="feature_dim")
        if self.delta_ms <= 0:
            raise ConfigError("delta_ms must be > 0", field="delta_ms")
        for name in ("jitter_range", "speed_jitter_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ConfigError(f"{name} must satisfy lo <= hi", field=name)
        if self.jitter_range[0] <= 0:
            raise ConfigError("jitter_range must be positive", field="jitter_range")
        if self.bw_jitter < 0:
            raise ConfigError("bw_jitter must be >= 0", field="bw_jitter")
        missing = {k.value for k in OperatorKind} - set(self.op_coefficients)
        if missing:
            raise ConfigError(f"op_coefficients missing kinds {sorted(missing)}", field="op_coefficients")
        missing = {k.value for k in OperatorKind} - set(self.bw_base)
        if missing:
            raise ConfigError(f"bw_base missing kinds {sorted(missing)}", field="bw_base")


def compute_payloads(cfg):
    """Per-slice payload in bytes: tokens * feature_dim * bytes/element * compression * overhead.

    Multiply by 8 for bits.
    """
    n = np.asarray(cfg.token_sizes, dtype=float)
    kappa = np.asarray(cfg.compression, dtype=float)
    return n * cfg.feature_dim * cfg.bytes_per_element * kappa * cfg.overhead


def payload_bits(cfg):
    return 8.0 * compute_payloads(cfg)


@dataclass
class ProfileTable:
    """Per-(job, core) latency [ms] and bandwidth demand [fraction of budget]."""

    latency: np.ndarray
    bandwidth: np.ndarray
    work: np.ndarray = field(init=False)
    mean_latency: np.ndarray = field(init=False)

    def __post_init__(self):
        self.latency = np.asarray(self.latency, dtype=float)
        self.bandwidth = np.asarray(self.bandwidth, dtype=float)
        if self.latency.shape != self.bandwidth.shape or self.latency.ndim != 2:
            raise ConfigError("latency and bandwidth must be matching (jobs, cores) arrays")
        if np.any(self.latency <= 0):
            raise ConfigError("latencies must be positive", field="latency")
        if np.any(self.bandwidth <= 0) or np.any(self.bandwidth > 1):
            raise ConfigError("bandwidth demands must lie in (0, 1]", field="bandwidth")
        self.work = self.latency * self.bandwidth
        self.mean_latency = self.latency.mean(axis=1)

    @property
    def cores(self):
        return self.latency.shape[1]


def token_scale(dag, token_sizes):
    """S(v): the slice's tokens for per-slice jobs, the total for cross-modality jobs."""
    total = int(sum(token_sizes))
    return np.array([token_sizes[j.slice] if j.slice is not None else total for j in dag.jobs], dtype=float)


def core_speeds(cfg):
    """Relative core speeds max(1 + u_c, 0.7); core c has its own substream."""
    lo, hi = cfg.speed_jitter_range
    u = np.array([stream(cfg.seed, "core_speed", c).uniform(lo, hi) for c in range(cfg.cores)])
    return np.maximum(1.0 + u, 0.7)


def generate_profile(dag, cfg):
    """Draw a reproducible synthetic :class:`ProfileTable` for ``dag``.

    Latency is ``g_kind(S) * xi / speed_c * latency_scale * delta`` and the
    bandwidth demand is ``beta_kind + slope * S`` plus uniform jitter, clamped
    to ``[0.2, 1.0]``. Each core draws from its own substream, so adding cores
    leaves the existing columns unchanged.
    """
    if dag.K != cfg.K:
        raise ConfigError(f"dag has K={dag.K} but config has {cfg.K} token sizes", field="token_sizes")
    S = token_scale(dag, cfg.token_sizes)
    kinds = [j.kind.value for j in dag.jobs]
    lin = np.array([cfg.op_coefficients[k][0] for k in kinds])
    quad = np.array([cfg.op_coefficients[k][1] for k in kinds])
    g = lin * S + quad * S**2

    speeds = core_speeds(cfg)
    lo, hi = cfg.jitter_range
    xi = np.column_stack([stream(cfg.seed, "latency_jitter", c).uniform(lo, hi, len(dag)) for c in range(cfg.cores)])
    latency = g[:, None] * xi / speeds[None, :] * cfg.latency_scale * cfg.delta_ms

    beta = np.array([cfg.bw_base[k] for k in kinds])
    j = cfg.bw_jitter
    noise = np.column_stack(
        [stream(cfg.seed, "bandwidth_jitter", c).uniform(-j, j, len(dag)) for c in range(cfg.cores)]
    )
    bandwidth = np.clip(beta[:, None] + cfg.bw_token_slope * S[:, None] + noise, BW_MIN, BW_MAX)
    return ProfileTable(latency, bandwidth)


def upward_ranks(dag, profile):
    """Upward rank of every job: mean latency plus the largest successor rank.

    ``profile`` may be a :class:`ProfileTable` or a plain per-job mean-latency array.
    """
    mean = profile.mean_latency if isinstance(profile, ProfileTable) else np.asarray(profile, dtype=float)
    if len(mean) != len(dag):
        raise StructuralError("mean latency length does not match job count")
    rank = np.zeros(len(dag))
    for v in reversed(dag.topo_order):
        succ = dag.succs[v]
        rank[v] = mean[v] + (max(rank[s] for s in succ) if succ else 0.0)
    return rank
