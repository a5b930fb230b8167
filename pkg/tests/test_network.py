"""Network construction, evaluation, and the unravelled path-tree oracle."""

import json

import numpy as np
import pytest

from dnet.errors import ResourceLimitError, ValidationError
from dnet.network import (
    RampNetwork,
    evaluate,
    evaluate_batch,
    evaluate_unravelled,
    load_network,
    ramp_vector,
    save_network,
    sign_double,
)
from dnet.variation import full_variation

from conftest import random_valid_net


class TestSignDouble:
    def test_pair(self):
        np.testing.assert_array_equal(sign_double([1.0, -0.5], 2), [1.0, -0.5, -1.0, 0.5])

    def test_zero_is_self_negating(self):
        np.testing.assert_array_equal(sign_double([0.0], 1), [0.0, 0.0])

    def test_triple(self):
        np.testing.assert_array_equal(
            sign_double([0.3, 0.7, -0.2], 3), [0.3, 0.7, -0.2, -0.3, -0.7, 0.2]
        )

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            sign_double([1.0, 0.0], 3)

    def test_out_of_range(self):
        with pytest.raises(ValidationError):
            sign_double([1.5], 1)


class TestRampVector:
    def test_split_signs(self):
        np.testing.assert_array_equal(ramp_vector([2.0, -3.0, 2.0, -3.0]), [2.0, 0.0, -2.0, 0.0])

    def test_zeros(self):
        np.testing.assert_array_equal(ramp_vector([0.0, 0.0]), [0.0, 0.0])

    def test_mixed(self):
        np.testing.assert_array_equal(ramp_vector([-1.0, 5.0, 4.0, -2.0]), [0.0, 5.0, -4.0, 0.0])

    def test_odd_length_rejected(self):
        with pytest.raises(ValidationError):
            ramp_vector([1.0, 2.0, 3.0])

    def test_homogeneity(self):
        """w * ramp(z) == ramp(w * z) for nonnegative w."""
        rng = np.random.default_rng(7)
        for _ in range(200):
            z = rng.uniform(-5.0, 5.0, size=2 * int(rng.integers(1, 8)))
            w = float(rng.uniform(0.0, 4.0))
            np.testing.assert_allclose(w * ramp_vector(z), ramp_vector(w * z), atol=1e-14)

    def test_lipschitz_one_sup_norm(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            n = 2 * int(rng.integers(1, 8))
            z, zp = rng.uniform(-3, 3, size=n), rng.uniform(-3, 3, size=n)
            lhs = np.abs(ramp_vector(z) - ramp_vector(zp)).max()
            assert lhs <= np.abs(z - zp).max() + 1e-15


class TestValidation:
    def test_negative_weight_rejected(self):
        with pytest.raises(ValidationError):
            RampNetwork(w0=1.0, weights=(np.array([[1.0, -0.1]]), np.eye(2)))

    def test_odd_intermediate_dim_rejected(self):
        with pytest.raises(ValidationError):
            RampNetwork(w0=1.0, weights=(np.ones((1, 3)), np.ones((3, 2))))

    def test_shape_chain_mismatch(self):
        with pytest.raises(ValidationError):
            RampNetwork(w0=1.0, weights=(np.ones((1, 2)), np.ones((4, 2))))

    def test_multi_output_rejected(self):
        with pytest.raises(ValidationError):
            RampNetwork(w0=1.0, weights=(np.ones((2, 2)), np.ones((2, 2))))

    def test_negative_w0_rejected(self):
        with pytest.raises(ValidationError):
            RampNetwork(w0=-1.0, weights=(np.ones((1, 2)), np.ones((2, 2))))

    def test_weights_read_only(self):
        net = RampNetwork(w0=1.0, weights=(np.ones((1, 2)), np.ones((2, 2))))
        with pytest.raises(ValueError):
            net.weights[0][0, 0] = 5.0


class TestEvaluate:
    def test_hand_value(self):
        """Identity second layer passes x through the positive unit only."""
        net = RampNetwork(
            w0=1.0, weights=(np.array([[1.0, 0.0]]), np.array([[1.0, 0.0], [0.0, 1.0]]))
        )
        assert evaluate(net, [0.6]) == pytest.approx(0.6, abs=1e-15)

    def test_zero_weights(self):
        net = RampNetwork(w0=1.0, weights=(np.zeros((1, 2)), np.zeros((2, 2))))
        assert evaluate(net, [0.3]) == 0.0

    def test_unit_mass_network_stays_in_unit_interval(self, hand_net):
        scaled = RampNetwork(
            w0=hand_net.w0 / full_variation(hand_net), weights=hand_net.weights
        )
        assert full_variation(scaled) == pytest.approx(1.0)
        rng = np.random.default_rng(3)
        vals = evaluate_batch(scaled, rng.uniform(-1, 1, size=(200, 1)))
        assert np.all(np.abs(vals) <= 1.0 + 1e-12)

    def test_range_bounded_by_variation(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            net = random_valid_net(rng)
            V = full_variation(net)
            vals = evaluate_batch(net, rng.uniform(-1, 1, size=(50, net.d_in)))
            assert np.all(np.abs(vals) <= V * (1 + 1e-12) + 1e-12)

    def test_deterministic_bitwise(self):
        rng = np.random.default_rng(5)
        net = random_valid_net(rng)
        x = rng.uniform(-1, 1, size=net.d_in)
        assert evaluate(net, x) == evaluate(net, x)

    def test_clamp_applies_before_w0(self):
        net = RampNetwork(
            w0=3.0,
            weights=(np.array([[4.0, 0.0]]), np.array([[1.0, 0.0], [0.0, 1.0]])),
            output_clamp=True,
        )
        # inner sum is 4 * 0.9 = 3.6, clamped to 1, then scaled by w0
        assert evaluate(net, [0.9]) == pytest.approx(3.0)

    def test_input_validation(self):
        net = RampNetwork(w0=1.0, weights=(np.ones((1, 2)), np.ones((2, 2))))
        with pytest.raises(ValidationError):
            evaluate(net, [2.0])
        with pytest.raises(ValidationError):
            evaluate(net, [0.1, 0.2])


class TestUnravelledOracle:
    def test_hand_value(self):
        net = RampNetwork(
            w0=1.0, weights=(np.array([[1.0, 0.0]]), np.array([[1.0, 0.0], [0.0, 1.0]]))
        )
        assert evaluate_unravelled(net, [0.6]) == pytest.approx(0.6, abs=1e-15)

    def test_zero_weights(self):
        net = RampNetwork(w0=1.0, weights=(np.zeros((1, 2)), np.zeros((2, 2))))
        assert evaluate_unravelled(net, [0.1]) == 0.0

    def test_matches_matrix_evaluation(self):
        """Path-tree enumeration agrees with the layered form: homogeneity."""
        rng = np.random.default_rng(17)
        for _ in range(25):
            net = random_valid_net(rng, L=3)
            V = full_variation(net)
            x = rng.uniform(-1, 1, size=net.d_in)
            gap = abs(evaluate(net, x) - evaluate_unravelled(net, x))
            assert gap <= 1e-12 * (1.0 + V)

    def test_matches_with_clamp(self):
        rng = np.random.default_rng(19)
        net = random_valid_net(rng, L=3)
        net = RampNetwork(w0=net.w0, weights=net.weights, output_clamp=True)
        x = rng.uniform(-1, 1, size=net.d_in)
        assert evaluate(net, x) == pytest.approx(evaluate_unravelled(net, x), abs=1e-12)

    def test_path_guard(self):
        net = RampNetwork(w0=1.0, weights=(np.ones((1, 4)), np.ones((4, 4))))
        with pytest.raises(ResourceLimitError):
            evaluate_unravelled(net, [0.5, 0.5], max_paths=10)


class TestNetworkFiles:
    def test_round_trip(self, tmp_path, hand_net):
        path = tmp_path / "net.json"
        save_network(hand_net, path)
        loaded = load_network(path)
        assert loaded.w0 == hand_net.w0
        for a, b in zip(loaded.weights, hand_net.weights):
            np.testing.assert_array_equal(a, b)
        assert loaded.output_clamp == hand_net.output_clamp

    def test_schema_fields(self, tmp_path, hand_net):
        path = tmp_path / "net.json"
        save_network(hand_net, path)
        payload = json.loads(path.read_text())
        assert set(payload) == {"depth", "dims", "w0", "weights", "clamp"}
        assert payload["dims"] == [1, 2, 2]

    def test_missing_field_reports_name(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"dims": [1, 2, 2]}))
        with pytest.raises(ValidationError, match="depth"):
            load_network(path)

    def test_inconsistent_dims_rejected(self, tmp_path, hand_net):
        payload = hand_net.to_dict()
        payload["dims"] = [1, 4, 2]
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(payload))
        with pytest.raises(ValidationError, match="dims"):
            load_network(path)

    def test_missing_file(self):
        with pytest.raises(ValidationError, match="not found"):
            load_network("/no/such/file.json")
