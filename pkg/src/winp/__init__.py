"""Co-simulation of OFDMA uplink delivery and DAG execution on a bandwidth-shared multi-core accelerator."""

from winp.channel import (
    DeliveryResult,
    RateTrace,
    RbAllocation,
    generate_rate_trace,
    replay_delivery,
    slot_mean_rates,
    suffix_mean_predictor,
)
from winp.comm_sched import MakespanPrediction, pacs_allocate, predict_makespan, rtfs_allocate
from winp.engine import ScheduleTrace, bandwidth_shares, run_gated, run_waitall
from winp.errors import ConfigError, InfeasibleError, StructuralError, WinpError
from winp.orchestrator import (
    ExperimentConfig,
    ExperimentResult,
    Plan,
    Problem,
    build_problem,
    compute_metrics,
    gain_pct,
    run_experiment,
    run_paired,
    summarize,
    sweep,
    table3_grid,
)
from winp.workload import (
    Dag,
    Job,
    OperatorKind,
    ProfileTable,
    WorkloadGenConfig,
    build_multimodal_dag,
    compute_payloads,
    generate_profile,
    upward_ranks,
)

__version__ = "0.1.0"
