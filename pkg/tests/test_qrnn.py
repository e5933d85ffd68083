import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.lib.stride_tricks import sliding_window_view

from conftest import table_mul
from quatrnn.errors import ConfigError, DimensionMismatch, InsufficientHistory, NonFiniteError
from quatrnn.qrnn import (LayerParams, QrnnParams, TrainConfig, apply_updates, clip_updates, compute_deltas,
                          compute_deltas_mcc, compute_deltas_mse, forward_step, forward_window, init_params,
                          predict_horizon, raw_updates, train_online, train_step)
from quatrnn.quaternion import I, J, K

ID = ("identity",)


def as_q(v):
    """Real scalars become real quaternions; 4-vectors pass through."""
    return np.array([v, 0, 0, 0], float) if np.ndim(v) == 0 else np.asarray(v, float)


def scalar_net(W, U=0.0, b=0.0):
    """One-neuron, one-layer linear network."""
    return QrnnParams([LayerParams(as_q(W).reshape(1, 1, 4), as_q(U).reshape(1, 1, 4), as_q(b).reshape(1, 4))], ID)


def random_net(rng, widths=(2, 3, 1), scale=0.4):
    layers = [LayerParams(rng.uniform(-scale, scale, (a, p, 4)), rng.uniform(-scale, scale, (a, a, 4)),
                          rng.uniform(-scale, scale, (a, 4))) for p, a in zip(widths[:-1], widths[1:])]
    acts = tuple(["tanh"] * (len(widths) - 2) + ["identity"])
    return QrnnParams(layers, acts)


class TestForward:
    def test_zero_weights_give_zero(self, rng):
        cfg = TrainConfig(layers=(2, 3, 1))
        p = init_params(cfg)
        zeroed = QrnnParams([LayerParams(*(np.zeros_like(a) for a in l.arrays())) for l in p.layers], p.activations)
        assert not np.any(forward_step(zeroed, None, rng.normal(size=(2, 4))).output)

    def test_identity_pass_through(self):
        assert np.array_equal(forward_step(scalar_net(1.0), None, [I.array]).output, [I.array])

    def test_weight_multiplies_on_the_left(self):
        out = forward_step(scalar_net(J.array), None, [I.array]).output[0]
        assert np.array_equal(out, table_mul(J.array, I.array))
        assert np.array_equal(out, -K.array)

    def test_two_step_recurrence(self):
        p = scalar_net(0.0, U=1.0, b=I.array)
        s1 = forward_step(p, None, np.zeros((1, 4)))
        s2 = forward_step(p, s1, np.zeros((1, 4)))
        assert np.array_equal(s1.output, [I.array])
        assert np.array_equal(s2.output, [2 * I.array])
        assert s2.length == 2

    def test_dimension_mismatch(self):
        p = init_params(TrainConfig(layers=(2, 3, 1)))
        with pytest.raises(DimensionMismatch):
            forward_step(p, None, np.zeros((3, 4)))
        with pytest.raises(DimensionMismatch):
            forward_window(p, np.zeros((4, 3, 4)))

    def test_window_of_zeros(self):
        p = init_params(TrainConfig(layers=(2, 3, 1)))
        st_ = forward_window(p, np.zeros((5, 2, 4)))
        assert st_.length == 5
        assert all(not np.any(h) for h in st_.h)

    def test_window_of_one_is_a_step(self, rng):
        p = random_net(rng)
        x = rng.normal(size=(2, 4))
        a = forward_window(p, x[None])
        b = forward_step(p, None, x)
        assert np.array_equal(a.output, b.output)
        assert all(np.array_equal(u, v) for u, v in zip(a.f, b.f))

    def test_window_matches_repeated_steps(self, rng):
        p = random_net(rng)
        xs = rng.normal(size=(4, 2, 4))
        s = None
        for x in xs:
            s = forward_step(p, s, x)
        w = forward_window(p, xs)
        assert np.allclose(w.outputs, s.outputs, rtol=0, atol=1e-14)

    def test_linear_closed_form(self, rng):
        W, U = rng.normal(size=4) * 0.5, rng.normal(size=4) * 0.5
        xs = rng.normal(size=(6, 1, 4))
        st_ = forward_window(scalar_net(W, U), xs)
        for n in range(6):
            want = np.zeros(4)
            for m in range(n + 1):
                term = table_mul(W, xs[m, 0])
                for _ in range(n - m):
                    term = table_mul(U, term)
                want += term
            assert np.allclose(st_.outputs[n, 0], want, rtol=0, atol=1e-12)

    def test_hidden_state_is_activation_of_preactivation(self, rng):
        p = random_net(rng)
        st_ = forward_window(p, rng.normal(size=(3, 2, 4)))
        assert np.array_equal(st_.h[0], np.tanh(st_.f[0]))
        assert np.array_equal(st_.h[1], st_.f[1])

    def test_empty_window(self):
        p = init_params(TrainConfig(layers=(1, 2, 1)))
        with pytest.raises(InsufficientHistory):
            forward_window(p, np.zeros((0, 1, 4)))


class TestDeltas:
    def setup_case(self, rng, loss, sigma=1.0, N=3):
        p = random_net(rng)
        xs = rng.normal(size=(N, 2, 4))
        ys = rng.normal(size=(N, 1, 4))
        cfg = TrainConfig(layers=(2, 3, 1), loss=loss, sigma=sigma, clip_norm=None, alpha=1.0, window_len=N)
        return p, forward_window(p, xs), ys, cfg

    @pytest.mark.parametrize("loss", ["mse", "mcc"])
    def test_zero_error_gives_zero_deltas(self, rng, loss):
        p, st_, _, cfg = self.setup_case(rng, loss)
        d = compute_deltas(p, st_, st_.outputs.copy(), cfg)
        assert all(not np.any(x) for x in d.deltas)

    def test_single_layer_single_step_is_error(self, rng):
        p = scalar_net(rng.normal(size=4), rng.normal(size=4))
        st_ = forward_window(p, rng.normal(size=(1, 1, 4)))
        y = rng.normal(size=(1, 1, 4))
        d = compute_deltas_mse(p, st_, y, TrainConfig(layers=(1, 1), loss="mse"))
        assert np.array_equal(d.deltas[0], y - st_.outputs)

    def test_top_delta_is_error_or_weighted_error(self, rng):
        p, st_, ys, cfg = self.setup_case(rng, "mse")
        e = ys - st_.outputs
        assert np.array_equal(compute_deltas(p, st_, ys, cfg).deltas[-1][-1], e[-1])
        mcc = cfg.with_(loss="mcc", sigma=0.9)
        d = compute_deltas(p, st_, ys, mcc)
        w = np.exp(-np.sum(e[-1] ** 2) / (2 * 0.9 ** 2))
        assert np.allclose(d.deltas[-1][-1], w * e[-1], rtol=1e-15, atol=0)
        assert 0 < d.weights.min() and d.weights.max() <= 1

    @settings(max_examples=100, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_mcc_converges_to_mse(self, seed):
        r = np.random.default_rng(seed)
        p, st_, ys, cfg = self.setup_case(r, "mse")
        dm = compute_deltas(p, st_, ys, cfg)
        dc = compute_deltas(p, st_, ys, cfg.with_(loss="mcc", sigma=1e6))
        for a, b in zip(dm.deltas, dc.deltas):
            assert np.all(np.abs(a - b) <= 1e-6 * np.maximum(np.abs(a), 1e-300))
        um = raw_updates(p, dm, st_, cfg)
        uc = raw_updates(p, dc, st_, cfg)
        for ta, tb in zip(um, uc):
            for a, b in zip(ta, tb):
                assert np.max(np.abs(a - b)) <= 1e-6 * max(np.max(np.abs(a)), 1e-300)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_mcc_update_not_larger_per_step(self, seed):
        r = np.random.default_rng(seed)
        p, st_, ys, cfg = self.setup_case(r, "mse", N=1)
        um = raw_updates(p, compute_deltas(p, st_, ys, cfg), st_, cfg)
        mcc = cfg.with_(loss="mcc", sigma=float(r.uniform(0.2, 3)))
        uc = raw_updates(p, compute_deltas(p, st_, ys, mcc), st_, mcc)
        for ta, tb in zip(um, uc):
            for a, b in zip(ta, tb):
                assert np.all(np.abs(b) <= np.abs(a) + 1e-15)

    def test_replay_is_pure(self, rng):
        p, st_, ys, cfg = self.setup_case(rng, "mcc")
        a = compute_deltas(p, st_, ys, cfg)
        b = compute_deltas(p, forward_window(p, st_.x), ys, cfg)
        assert all(np.array_equal(u, v) for u, v in zip(a.deltas, b.deltas))

    def test_loss_mode_checks(self, rng):
        p, st_, ys, cfg = self.setup_case(rng, "mse")
        with pytest.raises(ConfigError):
            compute_deltas_mcc(p, st_, ys, cfg)
        with pytest.raises(ConfigError):
            compute_deltas_mse(p, st_, ys, cfg.with_(loss="mcc"))
        with pytest.raises(DimensionMismatch):
            compute_deltas(p, st_, ys[:2], cfg)


class TestUpdates:
    def test_zero_deltas_leave_params(self, rng):
        p = random_net(rng)
        st_ = forward_window(p, rng.normal(size=(2, 2, 4)))
        cfg = TrainConfig(layers=(2, 3, 1), alpha=0.3)
        d = compute_deltas(p, st_, st_.outputs.copy(), cfg)
        new = apply_updates(p, d, st_, cfg)
        assert all(np.array_equal(a, b) for a, b in zip(new.arrays(), p.arrays()))

    def test_hand_expanded_weight_update(self):
        p = scalar_net(0.0)
        st_ = forward_window(p, [[I.array]])
        cfg = TrainConfig(layers=(1, 1), alpha=0.1, clip_norm=None, loss="mse")
        d = compute_deltas(p, st_, [[[1.0, 0, 0, 0]]], cfg)
        assert np.array_equal(d.deltas[0], [[[1.0, 0, 0, 0]]])
        new = apply_updates(p, d, st_, cfg)
        assert np.allclose(new.layers[0].W[0, 0], [0, -0.1, 0, 0], rtol=0, atol=1e-17)

    @given(st.floats(1e-6, 0.5))
    @settings(deadline=None)
    def test_clip_forces_norm(self, eps):
        r = np.random.default_rng(3)
        ups = [tuple(r.normal(size=s) for s in ((3, 2, 4), (3, 3, 4), (3, 4)))]
        out = clip_updates(ups, eps)
        norm = np.sqrt(sum(np.sum(a * a) for a in out[0]))
        assert abs(norm - eps) <= 1e-12 * eps
        flat_in = np.concatenate([a.ravel() for a in ups[0]])
        flat_out = np.concatenate([a.ravel() for a in out[0]])
        cos = flat_in @ flat_out / (np.linalg.norm(flat_in) * np.linalg.norm(flat_out))
        assert abs(cos - 1) < 1e-12

    def test_small_update_untouched(self):
        ups = [(np.full((1, 1, 4), 0.01), np.zeros((1, 1, 4)), np.zeros((1, 4)))]
        assert clip_updates(ups, 1.0) is ups

    def test_train_step_reduces_window_loss(self, rng):
        from quatrnn.qrnn import window_loss
        p = random_net(rng)
        xs, ys = rng.normal(size=(3, 2, 4)), rng.normal(size=(3, 1, 4))
        for loss in ("mse", "mcc"):
            cfg = TrainConfig(layers=(2, 3, 1), loss=loss, alpha=1e-3, window_len=3)
            new, _ = train_step(p, xs, ys, cfg)
            assert window_loss(new, xs, ys, cfg) < window_loss(p, xs, ys, cfg)


@pytest.mark.parametrize("bad", [dict(alpha=0), dict(sigma=-1), dict(clip_norm=0), dict(window_len=0),
                                 dict(layers=(3,)), dict(involution="x"), dict(recursion="x")])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        TrainConfig(**bad)


def regressor_stream(signal, l, H):
    """Scalar signal in the i-part; regressors ending at n with targets n+H."""
    regs = sliding_window_view(signal, l)[: len(signal) - l + 1 - H]
    X = np.zeros(regs.shape + (4,))
    X[..., 1] = regs
    Y = np.zeros((len(regs), 1, 4))
    Y[:, 0, 1] = signal[l - 1 + H:]
    return X, Y


class TestOnline:
    def test_bias_decays_on_zero_stream(self):
        cfg = TrainConfig(layers=(1, 2, 1), alpha=0.05, window_len=1, loss="mse", seed=1)
        p = init_params(cfg)
        p.layers[-1].b[:] = [0.5, 0.2, -0.1, 0.3]
        _, preds = train_online(p, (np.zeros((200, 1, 4)), np.zeros((200, 1, 4))), cfg)
        mags = np.sqrt(np.sum(preds ** 2, axis=(1, 2)))
        assert np.all(np.diff(mags) <= 1e-15)
        assert mags[-1] < 1e-3 * mags[0]

    @pytest.mark.parametrize("loss", ["mse", "mcc"])
    def test_sinusoid_one_step(self, loss):
        l = 10
        t = np.arange(600 + l)
        s = np.sin(2 * np.pi * t / 20)
        X, Y = regressor_stream(s, l, 1)
        cfg = TrainConfig(layers=(l, 10, 1), alpha=0.05, window_len=10, loss=loss, seed=0)
        _, preds = train_online(init_params(cfg), (X[:600], Y[:600]), cfg)
        e = preds[-100:, 0, 1] - Y[500:600, 0, 1]
        assert np.sqrt(np.mean(e ** 2)) < 0.1 * np.sqrt(np.mean(s ** 2))

    def test_deterministic(self, rng):
        X, Y = rng.normal(size=(30, 2, 4)), rng.normal(size=(30, 1, 4))
        cfg = TrainConfig(layers=(2, 3, 1), alpha=0.01, window_len=4, seed=9)
        a = train_online(init_params(cfg), (X, Y), cfg)
        b = train_online(init_params(cfg), (X, Y), cfg)
        assert np.array_equal(a[1], b[1])
        assert all(np.array_equal(u, v) for u, v in zip(a[0].arrays(), b[0].arrays()))

    def test_accepts_pair_iterable(self, rng):
        X, Y = rng.normal(size=(5, 2, 4)), rng.normal(size=(5, 1, 4))
        cfg = TrainConfig(layers=(2, 3, 1), window_len=2)
        a = train_online(init_params(cfg), (X, Y), cfg)[1]
        b = train_online(init_params(cfg), list(zip(X, Y)), cfg)[1]
        assert np.array_equal(a, b)

    def test_nonfinite_aborts_with_step(self, rng):
        X, Y = rng.normal(size=(20, 2, 4)) * 1e3, rng.normal(size=(20, 1, 4)) * 1e3
        cfg = TrainConfig(layers=(2, 3, 1), alpha=1e300, clip_norm=None, loss="mse", window_len=2)
        with np.errstate(all="ignore"), pytest.raises(NonFiniteError) as info:
            train_online(init_params(cfg), (X, Y), cfg)
        assert info.value.step >= 0

    def test_empty_stream(self):
        cfg = TrainConfig(layers=(1, 1))
        with pytest.raises(InsufficientHistory):
            train_online(init_params(cfg), [], cfg)


class TestPredictHorizon:
    def test_insufficient_history(self):
        p = init_params(TrainConfig(layers=(5, 2, 1)))
        with pytest.raises(InsufficientHistory):
            predict_horizon(p, np.zeros((4, 1, 4)), 0, regressor_len=5)

    def test_copy_task(self):
        # identity on the newest regressor entry reproduces the current sample
        W = np.zeros((1, 3, 4))
        W[0, -1, 0] = 1.0
        p = QrnnParams([LayerParams(W, np.zeros((1, 1, 4)), np.zeros((1, 4)))], ID)
        hist = np.random.default_rng(0).normal(size=(7, 1, 4))
        assert np.array_equal(predict_horizon(p, hist, 0, regressor_len=3), hist[-1])

    def test_constant_signal(self):
        l = 5
        s = np.full(400, 0.7)
        X, Y = regressor_stream(s, l, 3)
        cfg = TrainConfig(layers=(l, 4, 1), alpha=0.02, window_len=5, loss="mse", seed=2)
        p, _ = train_online(init_params(cfg), (X, Y), cfg)
        hist = np.zeros((20, 1, 4))
        hist[:, 0, 1] = 0.7
        out = predict_horizon(p, hist, 3, regressor_len=l, window_len=5)
        assert np.allclose(out, [[0, 0.7, 0, 0]], atol=1e-2)

    def test_sinusoid_two_seconds_ahead_beats_persistence(self):
        rate, H, l = 10, 20, 10
        t = np.arange(1200) / rate
        s = np.sin(2 * np.pi * t / 4.0)
        X, Y = regressor_stream(s[:900], l, H)
        cfg = TrainConfig(layers=(l, 10, 1), alpha=0.02, window_len=l, loss="mse", seed=0)
        p, _ = train_online(init_params(cfg), (X, Y), cfg)
        hist = np.zeros((len(s), 1, 4))
        hist[:, 0, 1] = s
        times = range(900, len(s) - H)
        pred = np.array([predict_horizon(p, hist[:n + 1], H, l, l)[0, 1] for n in times])
        truth = np.array([s[n + H] for n in times])
        persist = np.array([s[n] for n in times])
        assert np.sqrt(np.mean((pred - truth) ** 2)) < np.sqrt(np.mean((persist - truth) ** 2))

    def test_negative_horizon(self):
        p = init_params(TrainConfig(layers=(1, 1)))
        with pytest.raises(ConfigError):
            predict_horizon(p, np.zeros((3, 1, 4)), -1, regressor_len=1)
