"""OFDMA uplink: rate traces, rate predictors and replay of RB allocations.

Units: rates in kbit/s, slot duration in ms, so ``rate * delta_ms`` is bits per
resource block and a rate in kbit/s is numerically bits per ms.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from winp._rng import stream
from winp.errors import ConfigError

DEFAULT_EPS = 1e-6


@dataclass
class RateTrace:
    """Achievable rate ``rates[k, f, t]`` in kbit/s for slice k on subcarrier f in slot t."""

    rates: np.ndarray
    delta_ms: float = 1.0

    def __post_init__(self):
        self.rates = np.asarray(self.rates, dtype=float)
        if self.rates.ndim != 3:
            raise ConfigError("rates must be a (K, F, T) array", field="rates")
        if np.any(self.rates <= 0):
            raise ConfigError("rates must be positive", field="rates")
        if self.delta_ms <= 0:
            raise ConfigError("delta_ms must be positive", field="delta_ms")

    @property
    def shape(self):
        return self.rates.shape

    @property
    def K(self):
        return self.rates.shape[0]

    @property
    def F(self):
        return self.rates.shape[1]

    @property
    def T(self):
        return self.rates.shape[2]

    def rb_bits(self):
        """Bits one RB carries, per (k, f, t)."""
        return self.rates * self.delta_ms

    def prefix(self, F):
        """The trace restricted to subcarriers ``0..F-1``."""
        if not 1 <= F <= self.F:
            raise ConfigError(f"cannot take {F} of {self.F} subcarriers", field="subcarriers")
        return RateTrace(self.rates[:, :F, :], self.delta_ms)

    def to_json(self):
        return json.dumps({"delta_ms": self.delta_ms, "rates": self.rates.tolist()})

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(np.array(doc["rates"], dtype=float), doc["delta_ms"])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "f", "t", "value"])
        K, F, T = self.shape
        for k in range(K):
            for f in range(F):
                for t in range(T):
                    w.writerow([k, f, t, repr(float(self.rates[k, f, t]))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, delta_ms=1.0):
        rows = [r for r in csv.DictReader(io.StringIO(text))]
        K = max(int(r["k"]) for r in rows) + 1
        F = max(int(r["f"]) for r in rows) + 1
        T = max(int(r["t"]) for r in rows) + 1
        rates = np.zeros((K, F, T))
        for r in rows:
            rates[int(r["k"]), int(r["f"]), int(r["t"])] = float(r["value"])
        return cls(rates, delta_ms)


def generate_rate_trace(K, F, T, rate_range=(1000.0, 10000.0), delta_ms=1.0, seed=0):
    """I.i.d. uniform rates over ``rate_range`` (kbit/s).

    Subcarrier ``f`` draws from its own substream, so the first ``F'`` subcarriers
    of a trace do not depend on the total ``F`` requested.
    """
    lo, hi = rate_range
    if lo <= 0 or hi < lo:
        raise ConfigError(f"rate_range must satisfy 0 < lo <= hi, got {rate_range}", field="rate_range")
    if min(K, F, T) < 1:
        raise ConfigError("K, F and T must be >= 1")
    rates = np.empty((K, F, T))
    for f in range(F):
        rates[:, f, :] = stream(seed, "channel", f).uniform(lo, hi, size=(K, T))
    return RateTrace(rates, delta_ms)


def slot_mean_rates(trace):
    """Mean rate over subcarriers for each (slice, slot); shape (K, T)."""
    return trace.rates.mean(axis=1)


def suffix_mean_predictor(slot_means, eps=DEFAULT_EPS):
    """Mean of ``slot_means[k, t:]`` floored at ``eps``; shape (K, T)."""
    if eps <= 0:
        raise ConfigError("eps must be > 0", field="eps")
    u = np.asarray(slot_means, dtype=float)
    T = u.shape[-1]
    tail_sums = np.cumsum(u[..., ::-1], axis=-1)[..., ::-1]
    return np.maximum(tail_sums / np.arange(T, 0, -1), eps)


@dataclass
class RbAllocation:
    """RB ownership: ``owner[f, t]`` is the slice using RB (f, t), or -1.

    Storing an owner per RB makes exclusivity hold by construction; ``x()``
    expands to the binary (K, F, T) form.
    """

    owner: np.ndarray
    K: int

    def __post_init__(self):
        self.owner = np.asarray(self.owner, dtype=np.int64)
        if self.owner.ndim != 2:
            raise ConfigError("owner must be an (F, T) array")
        if np.any((self.owner < -1) | (self.owner >= self.K)):
            raise ConfigError("owner entries must lie in [-1, K)")

    @classmethod
    def empty(cls, K, F, T):
        return cls(np.full((F, T), -1, dtype=np.int64), K)

    @classmethod
    def from_binary(cls, x):
        x = np.asarray(x)
        if np.any(x.sum(axis=0) > 1):
            f, t = np.argwhere(x.sum(axis=0) > 1)[0]
            raise ConfigError(f"RB (f={f}, t={t}) assigned to more than one slice")
        K, F, T = x.shape
        owner = np.where(x.any(axis=0), x.argmax(axis=0), -1)
        return cls(owner, K)

    @property
    def F(self):
        return self.owner.shape[0]

    @property
    def T(self):
        return self.owner.shape[1]

    def x(self):
        return (self.owner[None, :, :] == np.arange(self.K)[:, None, None]).astype(np.int8)

    def assigned(self):
        """(t, f, k) triples of assigned RBs ordered by slot then subcarrier."""
        fs, ts = np.nonzero(self.owner >= 0)
        order = np.lexsort((fs, ts))
        return [(int(ts[i]), int(fs[i]), int(self.owner[fs[i], ts[i]])) for i in order]

    def to_csv(self, header_comment=None):
        """Assigned RBs only, as ``t,f,k`` rows."""
        buf = io.StringIO()
        if header_comment:
            buf.write(f"# {header_comment}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "f", "k"])
        w.writerows(self.assigned())
        return buf.getvalue()

    def to_dense_csv(self):
        """Full binary form with a ``k,f,t,value`` header."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "f", "t", "value"])
        for k in range(self.K):
            for f in range(self.F):
                for t in range(self.T):
                    w.writerow([k, f, t, int(self.owner[f, t] == k)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, K, F, T):
        lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
        alloc = cls.empty(K, F, T)
        reader = csv.DictReader(lines)
        dense = "value" in (reader.fieldnames or [])
        for r in reader:
            if dense and not int(r["value"]):
                continue
            f, t, k = int(r["f"]), int(r["t"]), int(r["k"])
            if alloc.owner[f, t] not in (-1, k):
                raise ConfigError(f"RB (f={f}, t={t}) assigned to more than one slice")
            alloc.owner[f, t] = k
        return alloc

    def to_json(self):
        return json.dumps({"K": self.K, "owner": self.owner.tolist()})

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        return cls(np.array(doc["owner"], dtype=np.int64), doc["K"])


@dataclass
class DeliveryResult:
    cumulative_bits: np.ndarray
    arrival_slot: List[Optional[int]]
    release_ms: List[Optional[float]]

    @property
    def feasible(self):
        return all(a is not None for a in self.arrival_slot)

    @property
    def unfinished(self):
        return [k for k, a in enumerate(self.arrival_slot) if a is None]


def release_time(arrival_slot, delta_ms):
    """End-of-slot release: a slice completed in slot t is usable at (t + 1) * delta."""
    return (arrival_slot + 1) * delta_ms


def replay_delivery(trace, allocation, payload_bits):
    """Accumulate delivered bits under ``allocation`` and derive arrivals.

    Bits are summed RB by RB in (slot, subcarrier) order, the same order the
    allocators use, so arrival slots agree exactly. Slices that never complete
    get ``None`` for arrival slot and release time.
    """
    K, F, T = trace.shape
    if (allocation.K, allocation.F, allocation.T) != (K, F, T):
        raise ConfigError(
            f"allocation dims {(allocation.K, allocation.F, allocation.T)} do not match trace {(K, F, T)}"
        )
    need = np.asarray(payload_bits, dtype=float)
    if need.shape != (K,):
        raise ConfigError("need one payload per slice", field="payloads")
    bits = trace.rb_bits()
    cumulative = np.empty((K, T))
    arrival, release = [], []
    for k in range(K):
        contrib = np.where(allocation.owner == k, bits[k], 0.0)
        running = np.cumsum(contrib.T.ravel()).reshape(T, F)
        cumulative[k] = running[:, -1]
        done = np.nonzero(cumulative[k] >= need[k])[0]
        if len(done):
            arrival.append(int(done[0]))
            release.append(release_time(int(done[0]), trace.delta_ms))
        else:
            arrival.append(None)
            release.append(None)
    return DeliveryResult(cumulative, arrival, release)
