import numpy as np
import pytest

from quatrnn.baselines import RealRnnConfig, init_rnn_params, rnn_forward
from quatrnn.checkpoint import load_checkpoint, save_checkpoint
from quatrnn.errors import ConfigError
from quatrnn.qrnn import TrainConfig, forward_window, init_params, train_online


def test_qrnn_round_trip_is_exact(tmp_path, rng):
    cfg = TrainConfig(layers=(2, 3, 1), alpha=0.01, sigma=0.7, window_len=3, seed=4)
    X, Y = rng.normal(size=(10, 2, 4)), rng.normal(size=(10, 1, 4))
    params, _ = train_online(init_params(cfg), (X, Y), cfg)
    back, head = load_checkpoint(save_checkpoint(tmp_path / "q.npz", params, cfg))
    assert all(np.array_equal(a, b) for a, b in zip(params.arrays(), back.arrays()))
    assert back.activations == params.activations
    assert head["kind"] == "qrnn" and head["dims"] == [2, 3, 1]
    assert head["loss"] == "mcc" and head["sigma"] == 0.7 and head["alpha"] == 0.01 and head["seed"] == 4
    assert head["activations"] == ["tanh", "identity"]
    assert np.array_equal(forward_window(params, X[:3]).outputs, forward_window(back, X[:3]).outputs)


def test_rnn_round_trip_is_exact(tmp_path, rng):
    cfg = RealRnnConfig(layers=(4, 5, 2), loss="mcc", seed=2)
    params = init_rnn_params(cfg, rng)
    back, head = load_checkpoint(save_checkpoint(tmp_path / "r.npz", params, cfg))
    assert head["kind"] == "rnn" and head["loss"] == "mcc"
    x = rng.normal(size=(3, 4))
    assert np.array_equal(rnn_forward(params, x).h[-1], rnn_forward(back, x).h[-1])


def test_header_optional(tmp_path):
    params = init_params(TrainConfig(layers=(1, 2, 1)))
    _, head = load_checkpoint(save_checkpoint(tmp_path / "p.npz", params))
    assert "loss" not in head and head["dims"] == [1, 2, 1]


def test_rejects_foreign_archives(tmp_path):
    path = tmp_path / "x.npz"
    np.savez(path, a=np.zeros(3))
    with pytest.raises(ConfigError):
        load_checkpoint(path)
    with pytest.raises(ConfigError):
        save_checkpoint(tmp_path / "y.npz", object())
