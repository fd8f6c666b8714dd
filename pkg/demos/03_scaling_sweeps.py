"""
Scaling sweeps and the token/compression grid
=============================================

Paired RTFS/PACS runs across subcarrier counts, core counts and the 5x5 grid
of token and compression vectors. Pass a seed count as the first argument
(default 5); the grid alone runs 50 experiments per seed.

Run with ``python demos/03_scaling_sweeps.py [n_seeds]``.
"""

# %%
import sys

import numpy as np

from winp import ExperimentConfig, summarize, sweep, table3_grid

n_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 5
cfg = ExperimentConfig()


def show(summary, key):
    for rec in summary:
        print(
            f"  {key}={rec[key]:<24} RTFS {rec['rtfs_mean_ms']:7.2f} ms  PACS {rec['pacs_mean_ms']:7.2f} ms  "
            f"gain {rec['gain_mean_pct']:+6.2f}%"
        )


# %%
# More subcarriers
# ----------------
# Traces are nested: the F=8 trace is the first 8 subcarriers of the F=32
# one, so every seed sees strictly more capacity as F grows.
print("subcarriers")
show(summarize(sweep(cfg, "subcarriers", [8, 16, 32], n_seeds)), "value")

# %%
# More cores
# ----------
# The NoC budget is shared, so total drain rate is B_max whenever anything
# runs. Extra cores only help by filling idle gaps.
print("cores")
show(summarize(sweep(cfg, "cores", [1, 2, 4, 8], n_seeds)), "value")

# %%
# Bandwidth budget
# ----------------
print("B_max")
show(summarize(sweep(cfg, "B_max", [0.5, 1.0, 2.0], n_seeds)), "value")

# %%
# Token and compression grid
# --------------------------
rows, summary = table3_grid(cfg, n_seeds)
tokens = sorted({r["token_vector"] for r in summary}, key=lambda s: [int(x) for x in s.strip("[]").split()])
comps = list(dict.fromkeys(r["compression_vector"] for r in summary))
gain = {(r["token_vector"], r["compression_vector"]): r["gain_mean_pct"] for r in summary}
print("mean gain (%), rows = token vector, columns = compression vector")
print(" " * 26 + "".join(f"{c:>28}" for c in comps))
for t in tokens:
    print(f"{t:<26}" + "".join(f"{gain[t, c]:>+28.2f}" for c in comps))
print(f"overall mean gain {np.mean(list(gain.values())):+.2f}%")
