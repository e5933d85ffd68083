"""Lossless parameter checkpoints as ``.npz`` archives.

Arrays are stored under ``layer.<l>.W|U|b`` (1-based ``l``); QRNN arrays keep
their trailing quaternion axis of length 4. A JSON header under
``__header__`` records the model kind, layer widths, activations and the
training hyperparameters.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .activations import SplitActivation
from .baselines import RealRnnConfig, RealRnnParams
from .errors import ConfigError
from .qrnn import LayerParams, QrnnParams, TrainConfig

__all__ = ["save_checkpoint", "load_checkpoint"]

FORMAT_VERSION = 1


def _header(params, cfg) -> dict:
    if isinstance(params, QrnnParams):
        kind = "qrnn"
        acts = [SplitActivation(a).value for a in params.activations]
    elif isinstance(params, RealRnnParams):
        kind = "rnn"
        acts = ["tanh"] * (len(params.W) - 1) + ["identity"]
    else:
        raise ConfigError(f"cannot checkpoint {type(params).__name__}")
    head = {"format": FORMAT_VERSION, "kind": kind, "dims": list(params.widths), "activations": acts}
    if cfg is not None:
        head.update({"loss": getattr(cfg.loss, "value", cfg.loss), "sigma": cfg.sigma, "alpha": cfg.alpha,
                     "clip_norm": cfg.clip_norm, "window_len": cfg.window_len, "seed": cfg.seed})
        if isinstance(cfg, TrainConfig):
            head.update({"involution": cfg.involution, "recursion": cfg.recursion})
    return head


def save_checkpoint(path, params, cfg: TrainConfig | RealRnnConfig | None = None) -> Path:
    path = Path(path)
    header = json.dumps(_header(params, cfg), sort_keys=True)
    arrays = {k: np.ascontiguousarray(v, dtype=np.float64) for k, v in params.named_arrays().items()}
    with path.open("wb") as fh:
        np.savez(fh, __header__=np.array(header), **arrays)
    return path


def load_checkpoint(path):
    """Return ``(params, header)``; the header is the decoded JSON dict."""
    with np.load(Path(path), allow_pickle=False) as z:
        if "__header__" not in z:
            raise ConfigError(f"{path}: not a checkpoint (missing header)")
        header = json.loads(str(z["__header__"]))
        arrays = {k: z[k] for k in z.files if k != "__header__"}
    n_layers = len(header["dims"]) - 1
    try:
        triples = [[arrays[f"layer.{l}.{n}"] for n in "WUb"] for l in range(1, n_layers + 1)]
    except KeyError as exc:
        raise ConfigError(f"{path}: missing array {exc.args[0]}") from None
    if header["kind"] == "qrnn":
        acts = tuple(SplitActivation(a) for a in header["activations"])
        params = QrnnParams([LayerParams(*t) for t in triples], acts)
        params.validate()
    elif header["kind"] == "rnn":
        params = RealRnnParams([t[0] for t in triples], [t[1] for t in triples], [t[2] for t in triples])
    else:
        raise ConfigError(f"{path}: unknown model kind {header['kind']!r}")
    return params, header
