"""Resource-block allocators for the two schedulers and the makespan predictor.

``rtfs_allocate`` greedily minimises the largest predicted residual
transmission time. ``pacs_allocate`` hands each RB to the slice whose delivery
most reduces a contention-free max-plus estimate of the output finish time.

Both allocators track *delivered* bits and derive the remaining payload as
``max(0, D - delivered)``; the sums run RB by RB in the same order as
:func:`winp.channel.replay_delivery`, so replaying an allocation reproduces the
recorded arrival slots exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from winp.channel import DEFAULT_EPS, RbAllocation, release_time
from winp.errors import ConfigError, InfeasibleError


@dataclass
class CommSchedule:
    allocation: RbAllocation
    arrival_slot: List[int]
    release_ms: List[float]
    t_start: Optional[float] = None

    @property
    def last_release(self):
        return max(self.release_ms)


@dataclass
class MakespanPrediction:
    arrival: np.ndarray
    release: np.ndarray
    finish: np.ndarray
    makespan: float


def _check_inputs(trace, uhat, payload_bits):
    need = np.asarray(payload_bits, dtype=float)
    if need.shape != (trace.K,):
        raise ConfigError("need one payload per slice", field="payloads")
    if np.any(need <= 0):
        raise ConfigError("payloads must be positive", field="payloads")
    uhat = np.asarray(uhat, dtype=float)
    if uhat.shape != (trace.K, trace.T):
        raise ConfigError(f"predictor shape {uhat.shape} does not match (K, T)={(trace.K, trace.T)}")
    return need, uhat


def arrival_estimates(t, remaining, rate, eps=DEFAULT_EPS):
    """Predicted arrival time [ms]: ``t`` for finished slices, else ``t + R / rate``.

    ``remaining`` is in bits and ``rate`` in kbit/s, which is bits per ms.
    """
    R = np.asarray(remaining, dtype=float)
    u = np.maximum(np.asarray(rate, dtype=float), eps)
    return np.where(R <= 0, float(t), t + np.maximum(R, 0.0) / u)


def predict_makespan(t, remaining, rate, dag, mean_latency, eps=DEFAULT_EPS):
    """Contention-free estimate of the output job's finish time.

    Pred-less jobs of slice k are released at ``max(t, A_k)`` (other pred-less
    jobs at ``t``); every job then finishes its mean latency after the latest
    of its predecessors. Core contention is deliberately ignored.
    """
    if dag.output_id is None:
        raise ConfigError("makespan prediction needs a DAG with an output job")
    A = arrival_estimates(t, remaining, rate, eps)
    mean = np.asarray(mean_latency, dtype=float)
    release = np.full(len(dag), np.nan)
    finish = np.empty(len(dag))
    for v in dag.topo_order:
        preds = dag.preds[v]
        if preds:
            finish[v] = mean[v] + max(finish[u] for u in preds)
        else:
            k = dag.jobs[v].slice
            release[v] = max(float(t), A[k]) if k is not None else float(t)
            finish[v] = release[v] + mean[v]
    return MakespanPrediction(A, release, finish, float(finish[dag.output_id]))


class MakespanPredictor:
    """Fast evaluation of :func:`predict_makespan`'s makespan only.

    The max-plus recursion collapses to ``max_k(max(t, A_k) + P_k)``, with
    ``P_k`` the longest mean-latency path from slice k's entry jobs to the
    output, which makes each trial RB O(K).
    """

    def __init__(self, dag, mean_latency, eps=DEFAULT_EPS):
        if dag.output_id is None:
            raise ConfigError("makespan prediction needs a DAG with an output job")
        mean = np.asarray(mean_latency, dtype=float)
        tail = np.full(len(dag), -np.inf)
        tail[dag.output_id] = mean[dag.output_id]
        for v in reversed(dag.topo_order):
            if dag.succs[v]:
                tail[v] = mean[v] + max(tail[s] for s in dag.succs[v])
        self.slice_tail = [-np.inf] * dag.K
        self.free_tail = -np.inf
        for v in range(len(dag)):
            if dag.preds[v]:
                continue
            k = dag.jobs[v].slice
            if k is None:
                self.free_tail = max(self.free_tail, tail[v])
            else:
                self.slice_tail[k] = max(self.slice_tail[k], tail[v])
        self.eps = eps

    def terms(self, t, arrival):
        return [max(t, a) + p for a, p in zip(arrival, self.slice_tail)]

    def __call__(self, t, remaining, rate):
        A = arrival_estimates(t, remaining, rate, self.eps)
        return max(max(self.terms(t, A)), t + self.free_tail)


def _record_arrivals(delivered, need, arrival, t):
    for k in range(len(need)):
        if arrival[k] is None and delivered[k] >= need[k]:
            arrival[k] = t


def _finish(trace, owner, arrival, t_stop):
    unfinished = [k for k, a in enumerate(arrival) if a is None]
    if unfinished:
        raise InfeasibleError(unfinished)
    alloc = RbAllocation(owner, trace.K)
    return alloc, arrival, [release_time(a, trace.delta_ms) for a in arrival]


def rtfs_allocate(trace, uhat, payload_bits, eps=DEFAULT_EPS):
    """Tail-minimising greedy RB allocation, slot by slot until every slice is delivered.

    Within a slot each subcarrier goes to the slice whose one-step update gives
    the smallest ``max_j R_j / u_j``. Ties prefer the slice with the larger
    current tail, then the lower index. ``t_start`` is the end of the last
    arrival slot.
    """
    need, uhat = _check_inputs(trace, uhat, payload_bits)
    K, F, T = trace.shape
    bits = trace.rb_bits()
    owner = np.full((F, T), -1, dtype=np.int64)
    delivered = [0.0] * K
    arrival: List[Optional[int]] = [None] * K
    t = 0
    while t < T and any(a is None for a in arrival):
        u = np.maximum(uhat[:, t], eps)
        for f in range(F):
            R = [max(0.0, need[j] - delivered[j]) for j in range(K)]
            tails = [R[j] / u[j] for j in range(K)]
            best, best_key = None, None
            for k in range(K):
                if R[k] <= 0:
                    continue
                trial = max(0.0, need[k] - (delivered[k] + bits[k, f, t])) / u[k]
                obj = max(max(tails[:k] + tails[k + 1 :], default=0.0), trial)
                key = (obj, -tails[k], k)
                if best_key is None or key < best_key:
                    best, best_key = k, key
            if best is None:
                break
            owner[f, t] = best
            delivered[best] += bits[best, f, t]
        _record_arrivals(delivered, need, arrival, t)
        t += 1
    alloc, arrival, release = _finish(trace, owner, arrival, t)
    return CommSchedule(alloc, arrival, release, t_start=max(release))


def pacs_allocate(trace, uhat, payload_bits, dag, mean_latency, eps=DEFAULT_EPS):
    """Marginal-gain greedy RB allocation driven by the makespan predictor.

    For each subcarrier the gain of slice k is the drop in predicted makespan
    when k receives the RB's bits. The RB goes to the largest gain; ties
    (including the all-zero case) go to the latest predicted arrival, then the
    lower index. The base prediction is refreshed after every assignment.

    Arrival estimates divide the remaining bits by ``F * uhat``: the rate a
    slice would see holding every subcarrier of a slot. ``uhat`` itself is a
    per-subcarrier mean, which would overstate arrival times F-fold relative
    to the job latencies they are added to.
    """
    need, uhat = _check_inputs(trace, uhat, payload_bits)
    if dag.K != trace.K:
        raise ConfigError(f"dag has K={dag.K} but trace has {trace.K} slices")
    predictor = MakespanPredictor(dag, mean_latency, eps)
    K, F, T = trace.shape
    bits = trace.rb_bits()
    owner = np.full((F, T), -1, dtype=np.int64)
    delivered = [0.0] * K
    arrival: List[Optional[int]] = [None] * K
    free = predictor.free_tail
    P = predictor.slice_tail
    t = 0
    while t < T and any(a is None for a in arrival):
        now = t * trace.delta_ms
        u = [F * max(x, eps) for x in uhat[:, t]]
        for f in range(F):
            R = [max(0.0, need[j] - delivered[j]) for j in range(K)]
            A = [now + R[j] / u[j] if R[j] > 0 else now for j in range(K)]
            terms = [max(now, A[j]) + P[j] for j in range(K)]
            base = max(max(terms), now + free)
            best, best_key = None, None
            for k in range(K):
                if R[k] <= 0:
                    continue
                r_try = max(0.0, need[k] - (delivered[k] + bits[k, f, t]))
                a_try = now + r_try / u[k] if r_try > 0 else now
                others = max(terms[:k] + terms[k + 1 :], default=-np.inf)
                t_try = max(others, max(now, a_try) + P[k], now + free)
                key = (base - t_try, A[k], -k)
                if best_key is None or key > best_key:
                    best, best_key = k, key
            if best is None:
                break
            owner[f, t] = best
            delivered[best] += bits[best, f, t]
        _record_arrivals(delivered, need, arrival, t)
        t += 1
    alloc, arrival, release = _finish(trace, owner, arrival, t)
    return CommSchedule(alloc, arrival, release)
