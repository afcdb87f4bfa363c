"""
Network Engine Tests
====================

Gradients against finite differences, losses, Adam, early stopping,
training determinism and the checkpoint format.
"""

import json

import numpy as np
import pytest

from rul2stage.contracts.base import DataError, ErrorCode, NumericError
from rul2stage.contracts.data_contracts import FeatureSelection, NormalizationStats
from rul2stage.contracts.model_contracts import HeadType, LossType, ModelSpec, TrainConfig
from rul2stage.nn import (
    FORMAT_VERSION, MAGIC, AdamState, Dataset, EarlyStopping, Network, adam_step, bce_loss,
    clip_gradients, global_norm, history_to_frame, init_params, load_checkpoint, mae_loss,
    metrics_to_frame, mse_loss, param_shapes, read_header, save_checkpoint, train,
)
from rul2stage.observability import MetricsCollector

EPS = 1e-5


def numeric_gradient(spec, perturbed, inputs, weights, name, index):
    """Central difference of weights . forward(inputs); `perturbed` is restored afterwards."""
    original = perturbed[name][index]

    def objective(value):
        perturbed[name][index] = value
        out, _ = Network(spec, perturbed).forward(inputs)
        return float(np.dot(weights, out))

    numeric = (objective(original + EPS) - objective(original - EPS)) / (2 * EPS)
    perturbed[name][index] = original
    return numeric


def assert_gradients_match(spec, params, seed):
    """Every entry of every parameter, max relative error below 1e-4."""
    rng = np.random.default_rng(seed)
    network = Network(spec, params)
    inputs = rng.normal(size=(2, spec.n_features, spec.n_w))
    weights = rng.normal(size=2)
    _, cache = network.forward(inputs)
    grads = network.backward(cache, weights)
    perturbed = {k: np.array(v) for k, v in network.params.items()}
    for name, shape in param_shapes(spec).items():
        for index in np.ndindex(*shape):
            analytic = grads[name][index]
            numeric = numeric_gradient(spec, perturbed, inputs, weights, name, index)
            assert abs(analytic - numeric) <= 1e-7 + 1e-4 * max(abs(analytic), abs(numeric)), \
                f"{name}{index}: analytic {analytic} vs numeric {numeric}"


# =============================================================================
# NETWORK
# =============================================================================

class TestNetworkShapes:

    def test_published_shape_chain(self):
        spec = ModelSpec(n_features=7)
        assert spec.shape_chain() == ((7, 50), (7, 50), (7, 50), (350,), (128,), (1,))
        network = Network(spec)
        out, cache = network.forward(np.zeros((1, 7, 50)))
        assert out.shape == (1,)
        assert cache.shape_chain() == spec.shape_chain()

    def test_single_window_is_batch_of_one(self, tiny_spec):
        network = Network(tiny_spec())
        out, _ = network.forward(np.zeros((2, 20)))
        assert out.shape == (1,)

    def test_wrong_input_shape(self, tiny_spec):
        network = Network(tiny_spec())
        with pytest.raises(DataError) as exc:
            network.forward(np.zeros((1, 3, 20)))
        assert exc.value.code is ErrorCode.SHAPE_MISMATCH

    def test_non_finite_input(self, tiny_spec):
        inputs = np.zeros((1, 2, 20))
        inputs[0, 1, 3] = np.nan
        with pytest.raises(NumericError):
            Network(tiny_spec()).forward(inputs)

    def test_logistic_head_in_unit_interval(self, tiny_spec):
        out = Network(tiny_spec(), seed=4).predict(np.random.default_rng(0).normal(size=(30, 2, 20)) * 5)
        assert np.all((out > 0) & (out < 1))

    def test_rectifier_head_non_negative(self, tiny_spec):
        out = Network(tiny_spec(head=HeadType.RUL), seed=4).predict(np.random.default_rng(0).normal(size=(30, 2, 20)))
        assert np.all(out >= 0)

    def test_zero_weights_zero_input_gives_half(self, tiny_spec):
        spec = tiny_spec()
        zeros = {name: np.zeros(shape) for name, shape in param_shapes(spec).items()}
        out, _ = Network(spec, zeros).forward(np.zeros((3, 2, 20)))
        np.testing.assert_array_equal(out, [0.5, 0.5, 0.5])

    def test_rectifier_head_starts_active(self, tiny_spec):
        spec = tiny_spec(head=HeadType.RUL)
        assert init_params(spec, 3)["head.b"][0] == 0.5
        assert init_params(tiny_spec(), 3)["head.b"][0] == 0.0
        zeros = {name: np.zeros(shape) for name, shape in param_shapes(spec).items()}
        zeros["head.b"] = init_params(spec, 3)["head.b"]
        out, _ = Network(spec, zeros).forward(np.zeros((1, 2, 20)))
        assert out[0] == 0.5

    def test_init_is_seeded(self, tiny_spec):
        a, b = init_params(tiny_spec(), seed=3), init_params(tiny_spec(), seed=3)
        for name in a:
            np.testing.assert_array_equal(a[name], b[name])

    def test_params_are_read_only(self, tiny_spec):
        network = Network(tiny_spec())
        with pytest.raises(ValueError):
            network.params["head.b"][0] = 1.0

    def test_predict_batches_match_forward(self, tiny_spec):
        network = Network(tiny_spec(), seed=1)
        inputs = np.random.default_rng(2).normal(size=(11, 2, 20))
        np.testing.assert_allclose(network.predict(inputs, batch_size=4), network.forward(inputs)[0], rtol=1e-12)


class TestGradients:
    """Analytic gradients agree with central finite differences."""

    @pytest.mark.parametrize("seed", range(10))
    def test_logistic_head(self, tiny_spec, seed):
        spec = tiny_spec(n_features=7, n_w=50)
        assert_gradients_match(spec, init_params(spec, seed), seed)

    @pytest.mark.parametrize("seed", range(10))
    def test_rectifier_head(self, tiny_spec, seed):
        spec = tiny_spec(n_features=7, n_w=50, head=HeadType.RUL)
        params = init_params(spec, seed)
        params["head.b"] = np.array([1.0])    # keep the head away from its kink
        assert_gradients_match(spec, params, seed)

    def test_deeper_stacks(self, tiny_spec):
        spec = tiny_spec(n_features=2, n_w=3, layers_per_stack=2, n_stacks=2, head=HeadType.FORECAST)
        assert_gradients_match(spec, init_params(spec, 8), 8)

    def test_zero_upstream_gives_zero_gradients(self, tiny_spec):
        network = Network(tiny_spec(n_features=7, n_w=50), seed=2)
        _, cache = network.forward(np.random.default_rng(0).normal(size=(3, 7, 50)))
        for name, grad in network.backward(cache, np.zeros(3)).items():
            assert not np.any(grad), name

    def test_doubling_upstream_doubles_gradients(self, tiny_spec):
        network = Network(tiny_spec(n_features=7, n_w=50), seed=2)
        _, cache = network.forward(np.random.default_rng(0).normal(size=(3, 7, 50)))
        d_out = np.array([0.3, -1.2, 0.7])
        once = network.backward(cache, d_out)
        twice = network.backward(cache, 2.0 * d_out)
        for name in once:
            np.testing.assert_allclose(twice[name], 2.0 * once[name], rtol=1e-12, atol=1e-15)

    def test_stale_cache(self, tiny_spec):
        network = Network(tiny_spec())
        _, cache = network.forward(np.zeros((1, 2, 20)))
        network.set_params(init_params(tiny_spec(), seed=1))
        with pytest.raises(NumericError) as exc:
            network.backward(cache, np.ones(1))
        assert exc.value.code is ErrorCode.STALE_CACHE

    def test_cache_from_other_network(self, tiny_spec):
        _, cache = Network(tiny_spec()).forward(np.zeros((1, 2, 20)))
        with pytest.raises(NumericError):
            Network(tiny_spec()).backward(cache, np.ones(1))


# =============================================================================
# LOSSES & OPTIMIZER
# =============================================================================

class TestLosses:

    def test_bce_at_half(self):
        loss, grad = bce_loss([0.5], [1.0])
        assert loss == pytest.approx(np.log(2.0))
        assert grad[0] == pytest.approx(-2.0)

    def test_bce_clamps(self):
        loss, _ = bce_loss([0.0], [1.0])
        assert np.isfinite(loss)
        assert loss == pytest.approx(-np.log(1e-12))

    def test_bce_rejects_soft_labels(self):
        with pytest.raises(DataError) as exc:
            bce_loss([0.5], [0.3])
        assert exc.value.code is ErrorCode.INVALID_LABEL

    def test_mae_and_mse(self):
        assert mae_loss([0.2, 0.8], [0.0, 1.0])[0] == pytest.approx(0.2)
        assert mse_loss([0.2, 0.8], [0.0, 1.0])[0] == pytest.approx(0.04)
        np.testing.assert_allclose(mse_loss([0.2, 0.8], [0.0, 1.0])[1], [0.2, -0.2])
        np.testing.assert_allclose(mae_loss([0.2, 0.8], [0.0, 1.0])[1], [0.5, -0.5])

    def test_empty_batch(self):
        with pytest.raises(DataError) as exc:
            mse_loss([], [])
        assert exc.value.code is ErrorCode.EMPTY_INPUT

    def test_length_mismatch(self):
        with pytest.raises(DataError) as exc:
            mae_loss([0.1, 0.2], [0.1])
        assert exc.value.code is ErrorCode.SHAPE_MISMATCH


class TestAdam:

    def test_first_step(self):
        params = {"w": np.zeros(1)}
        state = AdamState.initial(params, TrainConfig())
        new, state = adam_step(params, {"w": np.ones(1)}, state)
        assert new["w"][0] == pytest.approx(-0.001 / (1.0 + 1e-8), rel=1e-12)
        assert state.step == 1
        assert params["w"][0] == 0.0

    def test_pure_function(self):
        params = {"w": np.array([0.3, -0.2])}
        grads = {"w": np.array([0.1, 0.5])}
        state = AdamState.initial(params)
        a, _ = adam_step(params, grads, state)
        b, _ = adam_step(params, grads, state)
        np.testing.assert_array_equal(a["w"], b["w"])

    def test_zero_gradient_leaves_params(self):
        params = {"w": np.array([0.3, -0.2]), "b": np.array([1.5])}
        state = AdamState.initial(params)
        new, state = adam_step(params, {"w": np.zeros(2), "b": np.zeros(1)}, state)
        for name in params:
            np.testing.assert_array_equal(new[name], params[name])
        assert state.step == 1

    def test_shape_mismatch(self):
        params = {"w": np.zeros(2)}
        with pytest.raises(NumericError):
            adam_step(params, {"w": np.zeros(3)}, AdamState.initial(params))

    def test_clip(self):
        grads = {"a": np.array([3.0]), "b": np.array([4.0])}
        clipped, norm = clip_gradients(grads, 1.0)
        assert norm == pytest.approx(5.0)
        assert global_norm(clipped) == pytest.approx(1.0)
        assert clip_gradients(grads, 10.0)[0] is grads


class TestEarlyStopping:

    def test_stops_after_patience(self):
        stopper = EarlyStopping(patience=20)
        losses = [1.0] + [2.0] * 100
        stopped_at = None
        for epoch, loss in enumerate(losses, start=1):
            stopper.update(epoch, loss)
            if stopper.should_stop:
                stopped_at = epoch
                break
        assert stopped_at == 21
        assert stopper.best_epoch == 1

    def test_improvement_resets(self):
        stopper = EarlyStopping(patience=2)
        for epoch, loss in enumerate([3.0, 4.0, 2.0, 5.0], start=1):
            stopper.update(epoch, loss)
        assert not stopper.should_stop
        assert stopper.best_epoch == 3


# =============================================================================
# TRAINING
# =============================================================================

def toy_dataset(n, seed):
    rng = np.random.default_rng(seed)
    inputs = rng.normal(size=(n, 2, 20))
    targets = (inputs[:, 0, -1] > 0).astype(np.float64)
    return Dataset(inputs=inputs, targets=targets)


def separable_windows(n, seed):
    """Healthy windows near capacity 1.0, Unhealthy near 0.8, standardized."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % 2
    level = np.where(labels == 1, 0.8, 1.0)
    raw = level[:, None, None] + rng.normal(0.0, 0.02, size=(n, 2, 20))
    return Dataset(inputs=(raw - 0.9) / 0.1, targets=labels.astype(np.float64))


class TestTraining:

    def test_separable_set_reaches_high_accuracy(self, tiny_spec):
        config = TrainConfig(batch_size=8, max_epochs=100, patience=20, seed=0)
        network = Network(tiny_spec(), seed=0)
        train_set = separable_windows(80, 1)
        train(network, train_set, separable_windows(20, 2), LossType.BCE, config)
        predicted = network.predict(train_set.inputs) > 0.5
        assert np.mean(predicted == (train_set.targets == 1.0)) >= 0.95

    def test_deterministic(self, tiny_spec, fast_config):
        runs = []
        for _ in range(2):
            network = Network(tiny_spec(), seed=0)
            params, history = train(network, toy_dataset(40, 1), toy_dataset(10, 2), LossType.BCE, fast_config)
            runs.append((params, history))
        (pa, ha), (pb, hb) = runs
        assert ha.epochs == hb.epochs
        for name in pa:
            np.testing.assert_array_equal(pa[name], pb[name])

    def test_keeps_best_params(self, tiny_spec, fast_config):
        network = Network(tiny_spec(), seed=0)
        params, history = train(network, toy_dataset(40, 1), toy_dataset(10, 2), LossType.BCE, fast_config)
        for name in params:
            np.testing.assert_array_equal(network.params[name], params[name])
        best = history.epochs[history.best_epoch - 1]
        assert best.improved and best.val_loss == history.best_val_loss
        assert history.epochs_run <= fast_config.max_epochs

    def test_records_metrics(self, tiny_spec, fast_config):
        metrics = MetricsCollector()
        _, history = train(Network(tiny_spec()), toy_dataset(40, 1), toy_dataset(10, 2),
                           LossType.BCE, fast_config, metrics=metrics, stage="hs")
        assert len(metrics.get_metric("val_loss", {"stage": "hs"})) == history.epochs_run
        assert metrics.get_latest("epochs_run").value == history.epochs_run

    def test_history_frame(self, tiny_spec, fast_config):
        _, history = train(Network(tiny_spec()), toy_dataset(40, 1), toy_dataset(10, 2), LossType.BCE, fast_config)
        frame = history_to_frame(history)
        assert list(frame.columns) == ["epoch", "train_loss", "val_loss", "improved"]
        assert list(frame["epoch"]) == list(range(1, history.epochs_run + 1))

    def test_metrics_summary_frame(self, tiny_spec, fast_config):
        metrics = MetricsCollector()
        _, history = train(Network(tiny_spec()), toy_dataset(40, 1), toy_dataset(10, 2),
                           LossType.BCE, fast_config, metrics=metrics, stage="hs")
        frame = metrics_to_frame(metrics)
        assert list(frame.columns) == ["stage", "metric", "count", "min", "max", "avg", "last"]
        # nothing was recorded for stage 2
        assert set(frame["stage"]) == {"hs"}
        rows = frame.set_index("metric")
        assert list(rows.index) == ["train_loss", "val_loss", "best_val_loss", "epochs_run"]
        assert rows.loc["val_loss", "count"] == history.epochs_run
        assert rows.loc["val_loss", "min"] == history.best_val_loss
        assert rows.loc["val_loss", "last"] == history.epochs[-1].val_loss
        assert rows.loc["epochs_run", "last"] == history.epochs_run

    def test_metrics_summary_frame_empty(self):
        assert metrics_to_frame(MetricsCollector()).empty

    def test_empty_validation(self, tiny_spec, fast_config):
        empty = Dataset(inputs=np.zeros((0, 2, 20)), targets=np.zeros(0))
        with pytest.raises(DataError):
            train(Network(tiny_spec()), toy_dataset(10, 1), empty, LossType.MSE, fast_config)


# =============================================================================
# CHECKPOINTS
# =============================================================================

class TestCheckpoint:

    def _save(self, tmp_path, tiny_spec):
        spec = tiny_spec(head=HeadType.RUL)
        params = init_params(spec, seed=5)
        selection = FeatureSelection.from_count(2)
        stats = NormalizationStats(selection.channels, (1.05, 1.04), (0.03, 0.031))
        path = save_checkpoint(tmp_path / "m.ckpt", spec, params, selection, stats, {"stage": "rul"})
        return path, spec, params, selection, stats

    def test_round_trip_is_exact(self, tmp_path, tiny_spec):
        path, spec, params, selection, stats = self._save(tmp_path, tiny_spec)
        ckpt = load_checkpoint(path)
        assert ckpt.spec == spec
        assert ckpt.selection == selection and ckpt.stats == stats
        assert ckpt.meta() == {"stage": "rul"}
        for name in params:
            np.testing.assert_array_equal(ckpt.params[name], params[name])

    def test_reloaded_network_predicts_identically(self, tmp_path, tiny_spec):
        path, spec, params, _, _ = self._save(tmp_path, tiny_spec)
        inputs = np.random.default_rng(0).normal(size=(5, 2, 20))
        before = Network(spec, params).predict(inputs)
        after = Network(spec, load_checkpoint(path).params).predict(inputs)
        np.testing.assert_array_equal(before, after)

    def test_header(self, tmp_path, tiny_spec):
        path, spec, _, _, _ = self._save(tmp_path, tiny_spec)
        assert path.read_bytes().startswith(MAGIC + b" 1\n")
        header, payload = read_header(path)
        assert header["spec"]["head"] == "rul"
        assert header["param_count"] * 8 == len(payload)

    def test_truncated(self, tmp_path, tiny_spec):
        path, *_ = self._save(tmp_path, tiny_spec)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(DataError) as exc:
            load_checkpoint(path)
        assert exc.value.code is ErrorCode.CHECKPOINT_CORRUPT

    def test_flipped_byte(self, tmp_path, tiny_spec):
        path, *_ = self._save(tmp_path, tiny_spec)
        blob = bytearray(path.read_bytes())
        blob[-1] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(DataError) as exc:
            load_checkpoint(path)
        assert exc.value.code is ErrorCode.CHECKPOINT_CORRUPT

    def test_version_mismatch(self, tmp_path, tiny_spec):
        path, *_ = self._save(tmp_path, tiny_spec)
        blob = path.read_bytes().replace(MAGIC + b" %d\n" % FORMAT_VERSION, MAGIC + b" 99\n", 1)
        path.write_bytes(blob)
        with pytest.raises(DataError) as exc:
            load_checkpoint(path)
        assert exc.value.code is ErrorCode.CHECKPOINT_VERSION

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / "x.ckpt"
        path.write_bytes(b"hello\n")
        with pytest.raises(DataError) as exc:
            load_checkpoint(path)
        assert exc.value.code is ErrorCode.CHECKPOINT_CORRUPT

    def test_four_feature_model_rejects_seven_feature_input(self, tmp_path, tiny_spec):
        spec = tiny_spec(n_features=4, n_w=50)
        selection = FeatureSelection.from_count(4)
        stats = NormalizationStats(selection.channels, (1.0,) * 4, (1.0,) * 4)
        path = save_checkpoint(tmp_path / "m.ckpt", spec, init_params(spec, 0), selection, stats, {})
        ckpt = load_checkpoint(path)
        with pytest.raises(DataError) as exc:
            Network(ckpt.spec, ckpt.params).forward(np.zeros((1, 7, 50)))
        assert exc.value.code is ErrorCode.SHAPE_MISMATCH

    def _rewrite_header(self, path, edit):
        header, payload = read_header(path)
        edit(header)
        body = json.dumps(header, sort_keys=True).encode("utf-8")
        path.write_bytes(MAGIC + b" %d\n" % FORMAT_VERSION + len(body).to_bytes(8, "little") + body + payload)

    @pytest.mark.parametrize("key", ["normalization", "selection", "spec", "layout"])
    def test_missing_header_field(self, tmp_path, tiny_spec, key):
        path, *_ = self._save(tmp_path, tiny_spec)
        self._rewrite_header(path, lambda h: h.pop(key))
        with pytest.raises(DataError) as exc:
            load_checkpoint(path)
        assert exc.value.code is ErrorCode.CHECKPOINT_CORRUPT

    def test_normalization_without_channels(self, tmp_path, tiny_spec):
        path, *_ = self._save(tmp_path, tiny_spec)
        self._rewrite_header(path, lambda h: h["normalization"].pop("channels"))
        with pytest.raises(DataError) as exc:
            load_checkpoint(path)
        assert exc.value.code is ErrorCode.CHECKPOINT_CORRUPT

    def test_invalid_spec_value(self, tmp_path, tiny_spec):
        path, *_ = self._save(tmp_path, tiny_spec)
        self._rewrite_header(path, lambda h: h["spec"].update(hidden_size=0))
        with pytest.raises(DataError) as exc:
            load_checkpoint(path)
        assert exc.value.code is ErrorCode.CHECKPOINT_CORRUPT
        assert ("cause", "CONFIG_INVALID") in exc.value.error.context

    def test_unknown_selection_channel(self, tmp_path, tiny_spec):
        path, *_ = self._save(tmp_path, tiny_spec)
        self._rewrite_header(path, lambda h: h.update(selection=["discharge_capacity", "voltage"]))
        with pytest.raises(DataError) as exc:
            load_checkpoint(path)
        assert exc.value.code is ErrorCode.CHECKPOINT_CORRUPT

    def test_zero_std_in_header(self, tmp_path, tiny_spec):
        path, *_ = self._save(tmp_path, tiny_spec)
        self._rewrite_header(path, lambda h: h["normalization"].update(stds=[0.0, 0.1]))
        with pytest.raises(DataError) as exc:
            load_checkpoint(path)
        assert exc.value.code is ErrorCode.CHECKPOINT_CORRUPT
