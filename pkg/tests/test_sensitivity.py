import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridswitch.network import apply_branch_outage, ieee39, make_network
from gridswitch.sensitivity import (IslandingError, compute_lodf, compute_ptdf,
                                    dc_power_flow, find_bridges, is_bridge,
                                    predict_outage_flows, susceptance_matrix)

from netgen import (balanced_injections, bridges_by_exhaustion, min_energy_flows,
                    random_network)

# triangle branch ids: 1 = (1,2), 2 = (2,3), 3 = (1,3)
TRANSFER_1_TO_3 = {1: 100.0, 3: -100.0}


def test_triangle_flows_match_min_energy_oracle(triangle):
    flows = dc_power_flow(triangle, TRANSFER_1_TO_3)
    expected = min_energy_flows(triangle, [100.0, 0.0, -100.0])
    np.testing.assert_allclose(flows, expected, atol=1e-9)
    np.testing.assert_allclose(flows, [100 / 3, 100 / 3, 200 / 3], atol=1e-9)


def test_zero_injections_give_zero_flows(triangle):
    assert not dc_power_flow(triangle, np.zeros(3)).any()


def test_radial_two_bus(two_bus):
    np.testing.assert_allclose(dc_power_flow(two_bus, [50.0, -50.0]), [50.0])


def test_unbalanced_injections_rejected(triangle):
    with pytest.raises(ValueError, match="balance"):
        dc_power_flow(triangle, [10.0, 0.0, 0.0])


def test_disconnected_network_rejected(two_bus):
    with pytest.raises(IslandingError):
        dc_power_flow(apply_branch_outage(two_bus, 1), [0.0, 0.0])


def test_nodal_balance_and_slack_angle():
    rng = np.random.default_rng(7)
    net = random_network(rng, 12, 12)
    p = balanced_injections(rng, net.n_bus)
    flows = dc_power_flow(net, p)
    index = net.bus_index()
    balance = np.zeros(net.n_bus)
    for br in net.in_service:
        balance[index[br.from_bus]] += flows[br.id - 1]
        balance[index[br.to_bus]] -= flows[br.id - 1]
    np.testing.assert_allclose(balance, p, atol=1e-6)


def test_susceptance_matrix_is_laplacian(triangle):
    B = susceptance_matrix(triangle)
    np.testing.assert_allclose(B.sum(axis=1), 0.0, atol=1e-9)
    np.testing.assert_allclose(np.diag(B), [2000.0] * 3)


def test_triangle_ptdf_entry(triangle):
    ptdf = compute_ptdf(triangle, ref_bus=3)
    assert ptdf.row(3)[0] == pytest.approx(2 / 3, abs=1e-12)
    flows = dc_power_flow(triangle, TRANSFER_1_TO_3)
    assert ptdf.row(3)[0] * 100.0 == pytest.approx(flows[2], abs=1e-9)


@pytest.mark.parametrize("ref", [1, 2, 3])
def test_ptdf_reference_column_is_zero(triangle, ref):
    ptdf = compute_ptdf(triangle, ref_bus=ref)
    assert not ptdf.values[:, ptdf.bus_ids.index(ref)].any()


def test_two_bus_ptdf(two_bus):
    ptdf = compute_ptdf(two_bus)          # slack = bus 1
    assert ptdf.values[0, 1] == pytest.approx(-1.0)
    assert compute_ptdf(two_bus, ref_bus=2).values[0, 0] == pytest.approx(1.0)


def test_ptdf_39_bus_entries_bounded():
    ptdf = compute_ptdf(ieee39())
    assert np.all(np.abs(ptdf.values) <= 1 + 1e-9)


def test_triangle_lodf(triangle):
    lodf = compute_lodf(compute_ptdf(triangle), triangle)
    assert lodf.entry(1, 3) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_array_equal(np.diag(lodf.values), -1.0)
    assert not lodf.bridge_mask.any()
    # brute force: re-solve without (1,3)
    post = apply_branch_outage(triangle, 3)
    resolved = dc_power_flow(post, TRANSFER_1_TO_3)
    predicted = predict_outage_flows(dc_power_flow(triangle, TRANSFER_1_TO_3), lodf, 3)
    np.testing.assert_allclose(predicted, resolved, atol=1e-9)
    np.testing.assert_allclose(predicted, [100.0, 100.0, 0.0], atol=1e-9)


def test_zero_flow_outage_changes_nothing(triangle):
    lodf = compute_lodf(compute_ptdf(triangle), triangle)
    flows = np.array([10.0, 10.0, 0.0])
    np.testing.assert_allclose(predict_outage_flows(flows, lodf, 3), flows)


def test_bridge_column_flagged(two_bus):
    lodf = compute_lodf(compute_ptdf(two_bus), two_bus)
    assert lodf.bridge_mask.tolist() == [True]
    assert lodf.entry(1, 1) == -1.0
    with pytest.raises(IslandingError):
        predict_outage_flows(np.array([50.0]), lodf, 1)


def test_is_bridge_small(triangle, two_bus):
    assert not any(is_bridge(triangle, b) for b in (1, 2, 3))
    assert is_bridge(two_bus, 1)


def test_39_bus_bridges_match_exhaustive_search():
    net = ieee39()
    found = find_bridges(net)
    assert found == bridges_by_exhaustion(net)
    assert len(found) == 11
    post = apply_branch_outage(net, 35)
    assert find_bridges(post) == bridges_by_exhaustion(post)


def test_parallel_circuits_are_not_bridges():
    net = make_network([(1, 0), (2, 10), (3, 10)],
                       [(1, 2, 0.1, 100), (1, 2, 0.1, 100), (2, 3, 0.1, 100)], [(1, 0, 50)])
    assert find_bridges(net) == {3}


def test_lodf_bridge_mask_matches_graph_bridges():
    net = ieee39()
    lodf = compute_lodf(compute_ptdf(net), net)
    masked = {bid for bid, m in zip(lodf.branch_ids, lodf.bridge_mask) if m}
    assert masked == find_bridges(net)


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_bridges_property(seed):
    net = random_network(np.random.default_rng(seed), 4, 15)
    assert find_bridges(net) == bridges_by_exhaustion(net)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_ptdf_reproduces_power_flow(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, 4, 20)
    p = balanced_injections(rng, net.n_bus)
    flows = dc_power_flow(net, p)
    np.testing.assert_allclose(compute_ptdf(net).flows(p), flows, atol=1e-8)
    np.testing.assert_allclose(min_energy_flows(net, p), flows, atol=1e-6)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_reference_bus_invariance(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, 4, 20)
    p = balanced_injections(rng, net.n_bus)
    ref = int(rng.integers(1, net.n_bus + 1))
    a = compute_ptdf(net).flows(p)
    b = compute_ptdf(net, ref_bus=ref).flows(p)
    np.testing.assert_allclose(a, b, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_ptdf_superposition(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, 4, 20)
    p1 = balanced_injections(rng, net.n_bus)
    p2 = balanced_injections(rng, net.n_bus)
    ptdf = compute_ptdf(net)
    np.testing.assert_allclose(ptdf.flows(p1 + p2), ptdf.flows(p1) + ptdf.flows(p2),
                               atol=1e-9 * (1 + np.abs(p1).sum() + np.abs(p2).sum()))


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_lodf_prediction_matches_resolve(seed):
    rng = np.random.default_rng(seed)
    net = random_network(rng, 4, 20)
    p = balanced_injections(rng, net.n_bus)
    flows = dc_power_flow(net, p)
    lodf = compute_lodf(compute_ptdf(net), net)
    bridges = find_bridges(net)
    for br in net.in_service:
        if br.id in bridges:
            assert lodf.is_bridge(br.id)
            continue
        predicted = predict_outage_flows(flows, lodf, br.id)
        resolved = dc_power_flow(apply_branch_outage(net, br.id), p)
        scale = max(1.0, np.abs(resolved).max())
        assert np.abs(predicted - resolved).max() <= 1e-6 * scale
