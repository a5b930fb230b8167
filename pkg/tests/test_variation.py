"""Variation quantities, conservation identities, rescalings, matrix norms."""

import math

import numpy as np
import pytest

from dnet.network import RampNetwork, evaluate_batch
from dnet.variation import (
    average_variation,
    check_product_norm_inequalities,
    diagonal_reduced_input_variations,
    full_variation,
    group_norm_2_1,
    l1_entrywise,
    l1_induced_inf,
    reduced_balance_residual,
    reduced_input_variations,
    rescale_canonical,
    rescale_global,
    rescale_per_layer,
    spectral_norm,
    strongest_input_links,
    subnetwork_variations,
)

from conftest import random_valid_net


class TestFullVariation:
    def test_hand_value(self, hand_net):
        assert full_variation(hand_net) == pytest.approx(2.5, abs=1e-15)

    def test_identity_like(self):
        net = RampNetwork(w0=1.0, weights=(np.array([[1.0, 0.0]]), np.eye(2)))
        assert full_variation(net) == pytest.approx(1.0)

    def test_zero_outer_row_kills_everything(self):
        net = RampNetwork(w0=1.0, weights=(np.zeros((1, 2)), np.ones((2, 2))))
        assert full_variation(net) == 0.0


class TestSubnetworkVariations:
    def test_hand_values(self, hand_net):
        s = subnetwork_variations(hand_net)
        np.testing.assert_allclose(s.v_out_node[1], [2.0, 6.0])
        np.testing.assert_allclose(s.v_in_node[1], [0.5, 0.25])
        assert s.V == pytest.approx(2.5)

    def test_output_node_mass_is_w0(self, hand_net):
        s = subnetwork_variations(hand_net)
        assert s.v_out_node[0][0] == pytest.approx(hand_net.w0)

    def test_incoming_collapses_to_row_sums_next_to_input(self):
        W2 = np.array([[0.2, 0.3], [0.1, 0.4]])
        net = RampNetwork(w0=1.0, weights=(np.array([[1.0, 1.0]]), W2))
        s = subnetwork_variations(net)
        np.testing.assert_allclose(s.v_in_node[1], W2.sum(axis=1))

    def test_conservation_identity_random(self):
        """sum_j V_out[j] V_in[j] recovers V on every layer."""
        rng = np.random.default_rng(23)
        for _ in range(40):
            net = random_valid_net(rng)
            s = subnetwork_variations(net)
            for l in range(net.depth):
                layer_mass = float((s.v_out_node[l] * s.v_in_node[l]).sum())
                assert layer_mass == pytest.approx(s.V, rel=1e-10)

    def test_recurrence_between_layers(self):
        rng = np.random.default_rng(29)
        net = random_valid_net(rng, L=4)
        s = subnetwork_variations(net)
        for l in range(net.depth - 1):
            expected = net.weights[l] @ s.v_in_node[l + 1]
            np.testing.assert_allclose(s.v_in_node[l], expected, rtol=1e-12)

    def test_mean_square_dominates_mass(self):
        rng = np.random.default_rng(31)
        for _ in range(30):
            s = subnetwork_variations(random_valid_net(rng))
            assert s.v_bar**2 >= s.V * (1 - 1e-12)
            assert s.v_composite**2 >= s.V**2 * (1 - 1e-12)
            assert np.all(s.geo_sum_layer**2 >= s.V * (1 - 1e-12))

    def test_reduced_below_plain(self):
        rng = np.random.default_rng(37)
        for _ in range(30):
            s = subnetwork_variations(random_valid_net(rng))
            for l in range(s.depth):
                assert np.all(s.v_in_red_node[l] <= s.v_in_node[l] + 1e-12)


class TestReducedInputVariations:
    def test_drops_largest_term(self):
        # output node sees weighted terms (0.5, 0.25); the 0.5 goes
        net = RampNetwork(
            w0=2.0,
            weights=(np.array([[1.0, 1.0]]), np.array([[0.5, 0.0], [0.0, 0.25]])),
        )
        red = reduced_input_variations(net)
        assert red[0][0] == pytest.approx(0.25)

    def test_single_link_reduces_to_zero(self, single_path_net):
        red = reduced_input_variations(single_path_net)
        assert all(np.all(r == 0.0) for r in red)

    def test_identity_family_drops_dimension_term(self):
        """With identity inner matrices the only inner link is the max link."""
        for dim in (2, 20):
            W1 = np.full(dim, 1.5 / dim)
            net = RampNetwork(w0=1.0, weights=(W1[None, :],) + (np.eye(dim),) * 3)
            s = subnetwork_variations(net)
            np.testing.assert_allclose(s.v_in_red_layer[1:], 0.0, atol=1e-15)
            assert np.all(s.v_in_layer[1:] == dim)

    def test_tie_break_lowest_index(self):
        net = RampNetwork(
            w0=1.0, weights=(np.array([[1.0, 1.0]]), np.array([[0.5, 0.5], [0.5, 0.5]]))
        )
        links = strongest_input_links(net)
        assert links[0][0] == 0
        assert list(links[1]) == [0, 0]

    def test_permuting_non_maximal_links_preserves_value(self):
        W1 = np.array([[1.0, 1.0]])
        W2 = np.array([[0.5, 0.2, 0.1, 0.15], [0.3, 0.05, 0.2, 0.1]])
        base = reduced_input_variations(RampNetwork(w0=1.0, weights=(W1, W2)))[1].copy()
        # swap two non-maximal columns feeding the same inner layer
        for perm in ([0, 3, 2, 1], [0, 2, 1, 3]):
            netp = RampNetwork(w0=1.0, weights=(W1, W2[:, perm]))
            np.testing.assert_allclose(reduced_input_variations(netp)[1], base)


class TestAverageVariation:
    def test_single_path_unit_weights(self):
        net = RampNetwork(
            w0=1.0,
            weights=(
                np.array([[1.0, 0.0]]),
                np.array([[1.0, 0.0], [0.0, 0.0]]),
                np.array([[1.0, 0.0], [0.0, 0.0]]),
            ),
        )
        s = subnetwork_variations(net)
        v_bar, v_comp = average_variation(s)
        assert v_bar == pytest.approx(1.0)
        assert v_comp == pytest.approx(1.0)

    def test_reduced_mode_uses_reduced_layers(self, hand_net):
        s = subnetwork_variations(hand_net)
        v_bar_red, v_comp_red = average_variation(s, reduced=True)
        assert v_bar_red == pytest.approx(s.v_bar_red)
        assert v_comp_red == pytest.approx(s.v_bar_red * math.sqrt(s.V))

    def test_arithmetic_dominates_geometric_per_node(self):
        rng = np.random.default_rng(43)
        for _ in range(20):
            s = subnetwork_variations(random_valid_net(rng))
            for l in range(s.depth):
                lhs = (s.v_out_node[l] + s.v_in_node[l]) / 2.0
                rhs = np.sqrt(s.v_out_node[l] * s.v_in_node[l])
                assert np.all(lhs >= rhs - 1e-12)


class TestCanonicalRescaling:
    def test_balances_hand_net(self, hand_net):
        can = rescale_canonical(hand_net)
        s = subnetwork_variations(can)
        assert can.w0 == pytest.approx(math.sqrt(2.5))
        np.testing.assert_allclose(s.v_out_node[1], s.v_in_node[1], rtol=1e-12)
        assert s.V == pytest.approx(2.5, rel=1e-12)

    def test_fixed_point(self, hand_net):
        can = rescale_canonical(hand_net)
        again = rescale_canonical(can)
        for a, b in zip(can.weights, again.weights):
            np.testing.assert_allclose(a, b, rtol=1e-12)
        assert again.w0 == pytest.approx(can.w0, rel=1e-12)

    def test_attains_geometric_mean_invariant(self):
        rng = np.random.default_rng(47)
        for _ in range(20):
            net = random_valid_net(rng)
            geo = float(subnetwork_variations(net).geo_sum_layer.mean())
            s_can = subnetwork_variations(rescale_canonical(net))
            assert s_can.v_bar == pytest.approx(geo, rel=1e-10)

    def test_all_zero_network_unchanged(self):
        net = RampNetwork(w0=0.0, weights=(np.zeros((1, 2)), np.zeros((2, 2))))
        can = rescale_canonical(net)
        assert can.w0 == 0.0
        for a, b in zip(can.weights, net.weights):
            np.testing.assert_array_equal(a, b)

    def test_reduced_mode_balances_and_reports_residual(self):
        rng = np.random.default_rng(53)
        net = random_valid_net(rng, L=4)
        canr = rescale_canonical(net, reduced=True)
        assert reduced_balance_residual(canr) <= 1e-9
        x = rng.uniform(-1, 1, size=(20, net.d_in))
        np.testing.assert_allclose(
            evaluate_batch(net, x), evaluate_batch(canr, x), rtol=1e-9, atol=1e-12
        )


class TestRescalingFamilies:
    def test_function_preserved_at_random_inputs(self):
        rng = np.random.default_rng(59)
        for _ in range(10):
            net = random_valid_net(rng)
            X = rng.uniform(-1, 1, size=(100, net.d_in))
            base = evaluate_batch(net, X)
            for rescaled in (
                rescale_canonical(net),
                rescale_per_layer(net),
                rescale_global(net),
            ):
                np.testing.assert_allclose(
                    evaluate_batch(rescaled, X), base, rtol=1e-9, atol=1e-12
                )

    def test_variation_invariant(self):
        rng = np.random.default_rng(61)
        for _ in range(10):
            net = random_valid_net(rng)
            V = full_variation(net)
            for rescaled in (
                rescale_canonical(net),
                rescale_per_layer(net),
                rescale_global(net),
            ):
                assert full_variation(rescaled) == pytest.approx(V, rel=1e-10)

    def test_per_layer_and_global_closed_forms(self):
        rng = np.random.default_rng(67)
        net = random_valid_net(rng)
        s = subnetwork_variations(net)
        per_layer_expected = float(np.sqrt(s.v_out_layer * s.v_in_layer).mean())
        global_expected = math.sqrt(s.v_bar_out * s.v_bar_in)
        assert subnetwork_variations(rescale_per_layer(net)).v_bar == pytest.approx(
            per_layer_expected, rel=1e-10
        )
        assert subnetwork_variations(rescale_global(net)).v_bar == pytest.approx(
            global_expected, rel=1e-10
        )

    def test_optimization_hierarchy(self):
        rng = np.random.default_rng(71)
        for _ in range(20):
            net = random_valid_net(rng)
            can = subnetwork_variations(rescale_canonical(net)).v_bar
            per = subnetwork_variations(rescale_per_layer(net)).v_bar
            glob = subnetwork_variations(rescale_global(net)).v_bar
            assert can <= per * (1 + 1e-12)
            assert per <= glob * (1 + 1e-12)

    def test_arbitrary_positive_node_scalings_preserve_function(self):
        from dnet.variation import _apply_node_scalings

        rng = np.random.default_rng(77)
        for _ in range(10):
            net = random_valid_net(rng)
            scalings = [rng.uniform(0.2, 5.0, size=net.dims[l]) for l in range(net.depth)]
            scaled = _apply_node_scalings(net, scalings)
            X = rng.uniform(-1, 1, size=(50, net.d_in))
            base = evaluate_batch(net, X)
            np.testing.assert_allclose(
                evaluate_batch(scaled, X), base, rtol=1e-9, atol=1e-12
            )
            assert full_variation(scaled) == pytest.approx(full_variation(net), rel=1e-10)


class TestDiagonalReduction:
    def test_identity_matrices_reduce_to_zero_inside(self):
        dim = 4
        net = RampNetwork(w0=1.0, weights=(np.ones((1, dim)),) + (np.eye(dim),) * 2)
        red = diagonal_reduced_input_variations(net)
        assert red[0][0] == pytest.approx(dim)  # output row left unreduced
        np.testing.assert_allclose(red[1], 0.0, atol=1e-15)

    def test_requires_square_inner_matrices(self):
        net = RampNetwork(w0=1.0, weights=(np.ones((1, 2)), np.ones((2, 4))))
        with pytest.raises(Exception):
            diagonal_reduced_input_variations(net)


class TestMatrixNorms:
    def test_spectral_known_values(self):
        assert spectral_norm(np.diag([3.0, 4.0])) == pytest.approx(4.0, rel=1e-9)
        assert spectral_norm(np.zeros((3, 2))) == 0.0
        assert spectral_norm(np.array([[1.0, 2.0]])) == pytest.approx(math.sqrt(5), rel=1e-9)

    def test_group_norm_dominates_spectral(self):
        rng = np.random.default_rng(73)
        for _ in range(50):
            A = rng.uniform(0, 1, size=(int(rng.integers(1, 6)), int(rng.integers(1, 6))))
            assert group_norm_2_1(A) >= spectral_norm(A) * (1 - 1e-9)

    def test_induced_inf_is_max_row_sum(self):
        assert l1_induced_inf([[1.0, 2.0], [4.0, 0.5]]) == 4.5
        assert l1_entrywise([[1.0, -2.0]]) == 3.0

    def test_inequality_suite_random_chains(self):
        rng = np.random.default_rng(79)
        for _ in range(200):
            m = int(rng.integers(1, 5))
            dims = rng.integers(1, 7, size=m + 1)
            a = rng.uniform(0, 2, size=dims[0])
            mats = [rng.uniform(0, 2, size=(dims[i], dims[i + 1])) for i in range(m)]
            checks = check_product_norm_inequalities(a, mats)
            assert all(c["holds"] for c in checks.values()), checks

    def test_inequality_suite_identity_edge(self):
        checks = check_product_norm_inequalities(np.ones(3), [np.eye(3), np.eye(3)])
        assert all(c["holds"] for c in checks.values())
