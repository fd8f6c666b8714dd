"""Event-driven multi-core execution with proportional NoC bandwidth sharing.

A dispatched job carries work ``L * b`` (latency times bandwidth demand) that
drains at its core's share ``alpha_c = b_c / sum(b) * B_max``. Time jumps to
the next job completion or, in gated mode, to the next slice gate.

Note the model property that follows: a job running alone finishes after
``L * b / B_max``, which is shorter than ``L`` whenever ``b < B_max``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from winp.errors import ConfigError, StructuralError
from winp.workload import OperatorKind

DEFAULT_EPS = 1e-9


def bandwidth_shares(demands, B_max=1.0, eps=DEFAULT_EPS):
    """Split ``B_max`` across running cores in proportion to their demands.

    Falls back to an equal split when the total demand is at most ``eps``.
    """
    demands = [float(b) for b in demands]
    if not demands:
        return []
    Z = sum(demands)
    if Z > eps:
        return [b / Z * B_max for b in demands]
    return [B_max / len(demands)] * len(demands)


@dataclass(frozen=True)
class Interval:
    t_a: float
    t_b: float
    cores: tuple
    jobs: tuple
    shares: tuple


@dataclass
class ScheduleTrace:
    jobs: list
    core: np.ndarray
    start: np.ndarray
    finish: np.ndarray
    intervals: List[Interval] = field(default_factory=list)
    t_start: float = 0.0
    n_cores: int = 0

    @property
    def makespan(self):
        return float(np.max(self.finish))

    def core_sequences(self):
        """Start-ordered job ids per core."""
        seqs = [[] for _ in range(self.n_cores)]
        for v in np.argsort(self.start, kind="stable"):
            seqs[self.core[v]].append(int(v))
        return seqs

    def busy_time(self):
        busy = np.zeros(self.n_cores)
        np.add.at(busy, self.core, self.finish - self.start)
        return busy

    def integrated_bandwidth(self):
        """Per-job integral of the allocated share over its running intervals."""
        total = np.zeros(len(self.jobs))
        for iv in self.intervals:
            dt = iv.t_b - iv.t_a
            for v, a in zip(iv.jobs, iv.shares):
                total[v] += a * dt
        return total


def _priority(ranks, mean_latency):
    return lambda v: (-ranks[v], mean_latency[v], v)


def _simulate(dag, profile, ranks, B_max, eps, t_start, gates):
    if B_max <= 0:
        raise ConfigError("B_max must be positive", field="B_max")
    n, C = profile.latency.shape
    if n != len(dag):
        raise ConfigError(f"profile has {n} jobs but dag has {len(dag)}")
    L, b, mean = profile.latency, profile.bandwidth, profile.mean_latency
    key = _priority(ranks, mean)
    gates = [float(g) for g in gates] if gates is not None else [-math.inf] * max(dag.K, 1)
    embed_slice = [
        j.slice if j.kind is OperatorKind.EMBED and j.slice is not None else None for j in dag.jobs
    ]

    UNSCHEDULED, READY, RUNNING, FINISHED = 0, 1, 2, 3
    state = [UNSCHEDULED] * n
    pending_preds = [len(p) for p in dag.preds]
    core_of = np.full(n, -1, dtype=np.int64)
    start = np.full(n, np.nan)
    finish = np.full(n, np.nan)
    running: List[Optional[int]] = [None] * C
    omega = [0.0] * C
    ready: list = []
    intervals: List[Interval] = []
    t = float(t_start)

    def release_ready():
        for v in range(n):
            if state[v] != UNSCHEDULED or pending_preds[v]:
                continue
            k = embed_slice[v]
            if k is None or t + eps >= gates[k]:
                state[v] = READY
                ready.append(v)

    release_ready()
    n_finished = 0
    stalls = 0
    while n_finished < n:
        # dispatch: lowest-index idle core takes the highest-priority ready job
        if ready:
            ready.sort(key=key)
            for c in range(C):
                if not ready:
                    break
                if running[c] is None:
                    v = ready.pop(0)
                    running[c] = v
                    omega[c] = L[v, c] * b[v, c]
                    core_of[v] = c
                    start[v] = t
                    state[v] = RUNNING

        run = [c for c in range(C) if running[c] is not None]
        alpha = dict(zip(run, bandwidth_shares([b[running[c], c] for c in run], B_max, eps)))
        t_comp, first = math.inf, None
        for c in run:
            d = omega[c] / alpha[c]
            if d < t_comp - t or first is None:
                t_comp, first = t + d, c
        later = [g for g in gates if g > t + eps]
        t_gate = min(later) if later else math.inf
        t_next = min(t_comp, t_gate)
        if t_next == math.inf:
            left = [dag.jobs[v].name or str(v) for v in range(n) if state[v] != FINISHED]
            raise StructuralError(f"deadlock at t={t:.6f} ms: no runnable job and no pending gate; unfinished {left}")

        delta = t_next - t
        if delta > 0:
            stalls = 0
            if run:
                intervals.append(
                    Interval(t, t_next, tuple(run), tuple(running[c] for c in run), tuple(alpha[c] for c in run))
                )
                for c in run:
                    omega[c] -= alpha[c] * delta
                if t_comp <= t_gate:
                    omega[first] = 0.0
        else:
            stalls += 1
            if stalls > 10 * n:
                raise StructuralError(f"no time progress after {stalls} zero-length steps at t={t}")
        t = t_next

        for c in run:
            if omega[c] <= eps:
                v = running[c]
                finish[v] = t
                state[v] = FINISHED
                n_finished += 1
                running[c] = None
                omega[c] = 0.0
                for w in dag.succs[v]:
                    pending_preds[w] -= 1
        release_ready()

    return ScheduleTrace(list(dag.jobs), core_of, start, finish, intervals, float(t_start), C)


def run_waitall(dag, profile, ranks, t_start, B_max=1.0, eps=DEFAULT_EPS, gates=None):
    """Execute every job after a common start time ``t_start``.

    ``gates`` (per-slice release times) are optional and must not exceed
    ``t_start``; they are then vacuous.
    """
    if gates is not None and len(gates) and t_start + eps < max(gates):
        raise ConfigError(f"t_start={t_start} precedes the latest gate {max(gates)}", field="t_start")
    return _simulate(dag, profile, ranks, B_max, eps, t_start, gates)


def run_gated(dag, profile, ranks, gates, B_max=1.0, eps=DEFAULT_EPS, t_start=0.0):
    """Execute with per-slice gates: ``Embed_k`` may start once the clock reaches ``gates[k]``.

    The clock advances to the earlier of the next completion and the next gate,
    so idle cores pick up newly released slices as they arrive.
    """
    gates = [float(g) for g in gates]
    if len(gates) != dag.K:
        raise ConfigError(f"need {dag.K} gates, got {len(gates)}", field="gates")
    if not all(math.isfinite(g) for g in gates):
        raise ConfigError("gates must be finite", field="gates")
    return _simulate(dag, profile, ranks, B_max, eps, t_start, gates)
