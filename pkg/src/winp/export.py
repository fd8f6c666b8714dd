"""Plot-ready exports of runs: metrics JSON, schedule line-JSON, CSV tables.

Every artifact carries the config hash and seed; CSV files put them on a
leading ``#`` comment line.
"""

from __future__ import annotations

import csv
import io
import json
import math


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def metrics_json(metrics):
    return json.dumps({k: _clean(v) for k, v in metrics.items()}, indent=2, sort_keys=True) + "\n"


def _meta(result):
    return f"config_hash={result.config_hash} seed={result.seed} mode={result.mode}"


def schedule_jsonl(result):
    """One meta record, one record per job, then one record per (interval, core)."""
    sched = result.schedule
    lines = [
        json.dumps(
            {
                "type": "meta",
                "config_hash": result.config_hash,
                "seed": result.seed,
                "mode": result.mode,
                "makespan_ms": sched.makespan,
            },
            sort_keys=True,
        )
    ]
    for job in sched.jobs:
        v = job.id
        lines.append(
            json.dumps(
                {
                    "type": "job",
                    "job": v,
                    "name": job.name,
                    "kind": job.kind.value,
                    "slice": job.slice,
                    "core": int(sched.core[v]),
                    "start_ms": float(sched.start[v]),
                    "finish_ms": float(sched.finish[v]),
                },
                sort_keys=True,
            )
        )
    for iv in sched.intervals:
        for c, v, a in zip(iv.cores, iv.jobs, iv.shares):
            lines.append(
                json.dumps(
                    {"type": "interval", "t_a": iv.t_a, "t_b": iv.t_b, "core": c, "job": v, "share": a},
                    sort_keys=True,
                )
            )
    return "\n".join(lines) + "\n"


def read_schedule_jsonl(text):
    """Split a schedule file back into ``(meta, jobs, intervals)``."""
    meta, jobs, intervals = None, [], []
    for line in text.splitlines():
        rec = json.loads(line)
        kind = rec.pop("type")
        if kind == "meta":
            meta = rec
        elif kind == "job":
            jobs.append(rec)
        else:
            intervals.append(rec)
    return meta, jobs, intervals


def bandwidth_csv(result):
    buf = io.StringIO()
    buf.write(f"# {_meta(result)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_a", "t_b", "core", "job", "share"])
    for iv in result.schedule.intervals:
        for c, v, a in zip(iv.cores, iv.jobs, iv.shares):
            w.writerow([repr(iv.t_a), repr(iv.t_b), c, v, repr(a)])
    return buf.getvalue()


def allocation_csv(result):
    return result.allocation.to_csv(header_comment=_meta(result))


def rows_csv(rows, columns, comment=None):
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in columns})
    return buf.getvalue()
