import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from winp.errors import ConfigError, StructuralError
from winp.workload import (
    Dag,
    Job,
    OperatorKind,
    ProfileTable,
    WorkloadGenConfig,
    build_multimodal_dag,
    compute_payloads,
    generate_profile,
    token_scale,
    upward_ranks,
)

from oracles import rank_by_paths


def _names(dag, ids):
    return sorted(dag.jobs[i].name for i in ids)


@pytest.mark.parametrize(
    "K, n_nodes, align1, align2",
    [
        (6, 35, ["Proj_0", "Proj_1", "Proj_2"], ["Proj_3", "Proj_4", "Proj_5"]),
        (2, 15, ["Proj_0"], ["Proj_1"]),
        (3, 20, ["Proj_0"], ["Proj_1", "Proj_2"]),
    ],
)
def test_multimodal_dag_shape(K, n_nodes, align1, align2):
    dag = build_multimodal_dag(K)
    assert len(dag) == n_nodes == 5 * K + 5
    assert len(dag.edges) == 5 * K + 4
    by_name = {j.name: j.id for j in dag.jobs}
    assert _names(dag, dag.preds[by_name["Align_1"]]) == align1
    assert _names(dag, dag.preds[by_name["Align_2"]]) == align2
    assert dag.output_id == by_name["Output"]
    assert [j.name for j in dag.jobs[-5:]] == ["Align_1", "Align_2", "Fusion", "Classifier", "Output"]


@given(st.integers(2, 40))
def test_dag_counts_for_any_k(K):
    dag = build_multimodal_dag(K)
    assert len(dag) == 5 * K + 5 and len(dag.edges) == 5 * K + 4
    kinds = [j.kind for j in dag.jobs]
    assert kinds.count(OperatorKind.ALIGN) == 2
    for kind in (OperatorKind.FUSION, OperatorKind.CLASSIFIER, OperatorKind.OUTPUT):
        assert kinds.count(kind) == 1
    for k in range(K):
        chain = [j for j in dag.jobs if j.slice == k]
        assert [j.kind.value for j in chain] == ["Embed", "Enc1", "Enc2", "Enc3", "Proj"]


@pytest.mark.parametrize("K", [0, 1, 2.5])
def test_dag_rejects_small_k(K):
    with pytest.raises(ConfigError):
        build_multimodal_dag(K)


def test_dag_rejects_cycle():
    jobs = [Job(i, OperatorKind.FUSION) for i in range(3)]
    with pytest.raises(StructuralError, match="cycle"):
        Dag(jobs, [(0, 1), (1, 2), (2, 0)])


def test_edgelist_export():
    text = build_multimodal_dag(2).to_edgelist()
    lines = text.splitlines()
    assert len(lines) == 14
    assert lines[0] == "0 1"
    assert "14" in lines[-1].split()


@pytest.mark.parametrize(
    "tokens, kappa, expected_bytes",
    [(512, 0.25, 137625.6), (256, 0.80, 220200.96), (128, 0.60, 82575.36)],
)
def test_payloads(tokens, kappa, expected_bytes):
    cfg = WorkloadGenConfig(token_sizes=[tokens], compression=[kappa])
    assert compute_payloads(cfg)[0] == pytest.approx(expected_bytes, rel=1e-12)


def test_payload_rounding_matches_reference_table():
    kb = compute_payloads(WorkloadGenConfig()) / 1024
    np.testing.assert_allclose(kb, [134.4, 33.6, 215.0, 80.6, 121.0, 80.6], atol=0.05)


def test_config_validation():
    with pytest.raises(ConfigError, match="compression length 2"):
        WorkloadGenConfig(compression=[0.25, 0.25])
    with pytest.raises(ConfigError):
        WorkloadGenConfig(overhead=0.9)
    with pytest.raises(ConfigError):
        WorkloadGenConfig(compression=[0, 0.25, 0.8, 0.6, 0.6, 0.6])


def _collapsed(**kw):
    return WorkloadGenConfig(jitter_range=(1, 1), speed_jitter_range=(0, 0), bw_jitter=0.0, **kw)


def test_embed_latency_without_jitter():
    cfg = _collapsed()
    dag = build_multimodal_dag(6)
    prof = generate_profile(dag, cfg)
    np.testing.assert_allclose(prof.latency[0], 6.144, rtol=1e-12)


def test_token_scale_of_cross_modality_jobs():
    dag = build_multimodal_dag(6)
    S = token_scale(dag, [512, 128, 256, 128, 192, 128])
    fusion = next(j.id for j in dag.jobs if j.kind is OperatorKind.FUSION)
    assert S[fusion] == 1344
    assert S[5 * 2] == 256


def test_latency_arithmetic_with_extreme_jitter():
    # g * scale = 10 ms, xi = 1.1, speed = 0.92
    cfg = WorkloadGenConfig(
        token_sizes=[1000, 1000],
        compression=[1, 1],
        latency_scale=1.0,
        jitter_range=(1.1, 1.1),
        speed_jitter_range=(-0.08, -0.08),
        op_coefficients={k.value: (0.01, 0.0) for k in OperatorKind},
    )
    prof = generate_profile(build_multimodal_dag(2), cfg)
    assert prof.latency[0, 0] == pytest.approx(11.956521739130435, rel=1e-12)


def test_speed_floor():
    cfg = WorkloadGenConfig(speed_jitter_range=(-0.5, -0.5))
    prof = generate_profile(build_multimodal_dag(6), cfg)
    ref = generate_profile(build_multimodal_dag(6), WorkloadGenConfig(speed_jitter_range=(-0.3, -0.3)))
    np.testing.assert_array_equal(prof.latency, ref.latency)


def test_profile_determinism_and_invariants():
    dag = build_multimodal_dag(6)
    a = generate_profile(dag, WorkloadGenConfig(seed=11))
    b = generate_profile(dag, WorkloadGenConfig(seed=11))
    c = generate_profile(dag, WorkloadGenConfig(seed=12))
    assert np.array_equal(a.latency, b.latency) and np.array_equal(a.bandwidth, b.bandwidth)
    assert not np.array_equal(a.latency, c.latency)
    assert np.all(a.latency > 0)
    assert np.all((a.bandwidth >= 0.2) & (a.bandwidth <= 1.0))
    assert np.array_equal(a.work, a.latency * a.bandwidth)
    assert np.array_equal(a.mean_latency, a.latency.mean(axis=1))


def test_cores_differ_only_through_jitter():
    dag = build_multimodal_dag(6)
    prof = generate_profile(dag, _collapsed())
    assert np.all(prof.latency == prof.latency[:, :1])
    assert np.all(prof.bandwidth == prof.bandwidth[:, :1])


def test_adding_cores_keeps_existing_columns():
    dag = build_multimodal_dag(6)
    four = generate_profile(dag, WorkloadGenConfig(cores=4, seed=3))
    eight = generate_profile(dag, WorkloadGenConfig(cores=8, seed=3))
    np.testing.assert_array_equal(four.latency, eight.latency[:, :4])


def test_rank_exit_job():
    dag = Dag([Job(0, OperatorKind.OUTPUT)], [])
    assert upward_ranks(dag, np.array([12.0]))[0] == 12.0


def test_rank_chain_and_diamond():
    chain = Dag([Job(i, OperatorKind.FUSION) for i in range(3)], [(0, 1), (1, 2)])
    # frozen from the path-enumeration oracle
    np.testing.assert_array_equal(rank_by_paths(chain, [3, 5, 7]), [15, 12, 7])
    np.testing.assert_array_equal(upward_ranks(chain, [3.0, 5.0, 7.0]), [15, 12, 7])

    diamond = Dag([Job(i, OperatorKind.FUSION) for i in range(4)], [(0, 1), (0, 2), (1, 3), (2, 3)])
    mean = [1.0, 10.0, 2.0, 4.0]
    np.testing.assert_array_equal(rank_by_paths(diamond, mean), [15, 14, 6, 4])
    np.testing.assert_array_equal(upward_ranks(diamond, mean), [15, 14, 6, 4])


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**31 - 1))
def test_ranks_match_path_oracle_and_decrease_along_edges(K, seed):
    dag = build_multimodal_dag(K)
    prof = generate_profile(dag, WorkloadGenConfig(token_sizes=[64] * K, compression=[0.5] * K, seed=seed))
    ranks = upward_ranks(dag, prof)
    np.testing.assert_allclose(ranks, rank_by_paths(dag, prof.mean_latency), rtol=1e-12)
    for u, v in dag.edges:
        assert ranks[u] > ranks[v]


def test_profile_table_rejects_bad_values():
    with pytest.raises(ConfigError):
        ProfileTable([[1.0]], [[1.5]])
    with pytest.raises(ConfigError):
        ProfileTable([[0.0]], [[0.5]])
