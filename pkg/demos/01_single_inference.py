"""
One inference, two schedulers
=============================

Six modality slices are uploaded over a shared OFDMA uplink and then run as a
35-job DAG on a four-core accelerator. RTFS waits for every slice before
computing; PACS lets each slice start as soon as it lands.

Run with ``python demos/01_single_inference.py``.
"""

# %%
# Build the scenario
# ------------------
import numpy as np

from winp import ExperimentConfig, build_problem, gain_pct, run_experiment

cfg = ExperimentConfig(seed=3)
problem = build_problem(cfg)
print(f"{len(problem.dag)} jobs, {len(problem.dag.edges)} edges, {cfg.cores} cores, {cfg.subcarriers} subcarriers")
print("payload per slice (kbit):", np.round(problem.payload_bits / 1000, 1))

# %%
# Both modes share the same trace and profile
# -------------------------------------------
rtfs = run_experiment(cfg, mode="RTFS", problem=problem)
pacs = run_experiment(cfg, mode="PACS", problem=problem)

for res in (rtfs, pacs):
    print(f"{res.mode}: makespan {res.makespan:7.2f} ms, releases {res.release_ms}")
print(f"gain {gain_pct(rtfs.makespan, pacs.makespan):+.2f}%")

# %%
# A text timeline
# ---------------
# One row per core, one character per 2 ms. Digits mark the slice a job
# belongs to; ``*`` marks the cross-modality tail (Align, Fusion, ...).


def timeline(res, width_ms=2.0):
    sched = res.schedule
    cols = int(np.ceil(sched.makespan / width_ms))
    rows = [[" "] * cols for _ in range(sched.n_cores)]
    for job in sched.jobs:
        a = int(sched.start[job.id] // width_ms)
        b = max(a + 1, int(np.ceil(sched.finish[job.id] / width_ms)))
        mark = "*" if job.slice is None else str(job.slice)
        for x in range(a, min(b, cols)):
            rows[sched.core[job.id]][x] = mark
    gates = [" "] * cols
    for r in res.release_ms:
        gates[min(int(r // width_ms), cols - 1)] = "^"
    print(f"{res.mode} ({res.makespan:.1f} ms)")
    for c, row in enumerate(rows):
        print(f"  core {c} |{''.join(row)}")
    print(f"  gates  |{''.join(gates)}")


timeline(rtfs)
timeline(pacs)

# %%
# Where the time goes
# -------------------
for res in (rtfs, pacs):
    util = ", ".join(f"{u:.2f}" for u in res.utilization)
    print(f"{res.mode}: comm {res.comm_ms:.1f} ms + compute {res.compute_ms:.1f} ms; core utilisation [{util}]")
