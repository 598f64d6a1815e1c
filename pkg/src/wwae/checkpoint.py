"""Bit-exact checkpointing of the full training state.

Layout: an ASCII magic line, a one-line JSON manifest (config, network
shapes, optimizer counters, RNG snapshots), then the parameter and Adam
moment vectors as raw little-endian float64 blocks in a fixed order.
Loading a checkpoint and continuing training reproduces the uninterrupted
run byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import nn
from .config import TrainConfig, config_from_dict, config_to_dict
from .models import Model, TrainState
from .numerics import Rng

MAGIC = "WWAECKPT 1"

# Order of the binary float64 blocks after the manifest line.
_BLOCKS = ("enc_params", "dec_params", "enc_m", "enc_v", "dec_m", "dec_v")


def _adam_dict(state: nn.AdamState) -> dict:
    return {
        "lr": state.lr,
        "beta1": state.beta1,
        "beta2": state.beta2,
        "eps": state.eps,
        "decay_every": state.decay_every,
        "decay_factor": state.decay_factor,
        "t": state.t,
    }


def _adam_from_dict(d: dict) -> nn.AdamState:
    return nn.AdamState(
        lr=float(d["lr"]),
        beta1=float(d["beta1"]),
        beta2=float(d["beta2"]),
        eps=float(d["eps"]),
        decay_every=int(d["decay_every"]),
        decay_factor=float(d["decay_factor"]),
        t=int(d["t"]),
    )


def _net_dict(params: nn.MlpParams) -> dict:
    return {"widths": params.widths, "activations": list(params.activations)}


def _zeros_like_net(d: dict) -> nn.MlpParams:
    widths = [int(w) for w in d["widths"]]
    acts = [str(a) for a in d["activations"]]
    weights = [np.zeros((widths[i + 1], widths[i])) for i in range(len(acts))]
    biases = [np.zeros(widths[i + 1]) for i in range(len(acts))]
    return nn.MlpParams(weights, biases, acts)


def save_checkpoint(path: str | Path, state: TrainState) -> None:
    path = Path(path)
    blocks = {
        "enc_params": nn.flatten_params(state.model.enc),
        "dec_params": nn.flatten_params(state.model.dec),
        "enc_m": state.adam_enc.m,
        "enc_v": state.adam_enc.v,
        "dec_m": state.adam_dec.m,
        "dec_v": state.adam_dec.v,
    }
    manifest = {
        "config": config_to_dict(state.config),
        "step": state.step,
        "latent_dim": state.model.latent_dim,
        "output_activation": state.model.output_activation,
        "enc": _net_dict(state.model.enc),
        "dec": _net_dict(state.model.dec),
        "adam_enc": _adam_dict(state.adam_enc),
        "adam_dec": _adam_dict(state.adam_dec),
        "rng": state.rng.state(),
        "data_rng": state.data_rng.state(),
        "image_shape": list(state.image_shape) if state.image_shape else None,
        "blocks": [[name, int(blocks[name].size)] for name in _BLOCKS],
    }
    header = MAGIC + "\n" + json.dumps(manifest, sort_keys=True) + "\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        for name in _BLOCKS:
            fh.write(np.ascontiguousarray(blocks[name], dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> TrainState:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii", errors="replace").rstrip("\n")
        if magic != MAGIC:
            raise ValueError(f"not a checkpoint file (bad magic line {magic!r})")
        manifest = json.loads(fh.readline().decode("ascii"))
        raw = fh.read()

    blocks: dict[str, np.ndarray] = {}
    pos = 0
    for name, count in manifest["blocks"]:
        nbytes = count * 8
        if pos + nbytes > len(raw):
            raise ValueError(
                f"checkpoint truncated: block {name!r} needs {nbytes} bytes, "
                f"{len(raw) - pos} left"
            )
        blocks[name] = np.frombuffer(raw[pos : pos + nbytes], dtype="<f8").astype(
            np.float64
        )
        pos += nbytes
    if pos != len(raw):
        raise ValueError(f"checkpoint has {len(raw) - pos} trailing bytes")

    cfg: TrainConfig = config_from_dict(manifest["config"])
    enc = nn.unflatten_params(blocks["enc_params"], _zeros_like_net(manifest["enc"]))
    dec = nn.unflatten_params(blocks["dec_params"], _zeros_like_net(manifest["dec"]))
    model = Model(
        enc, dec, int(manifest["latent_dim"]), str(manifest["output_activation"])
    )

    adam_enc = _adam_from_dict(manifest["adam_enc"])
    adam_enc.m, adam_enc.v = blocks["enc_m"], blocks["enc_v"]
    adam_dec = _adam_from_dict(manifest["adam_dec"])
    adam_dec.m, adam_dec.v = blocks["dec_m"], blocks["dec_v"]

    shape = manifest["image_shape"]
    return TrainState(
        config=cfg,
        model=model,
        adam_enc=adam_enc,
        adam_dec=adam_dec,
        rng=Rng.from_state(manifest["rng"]),
        data_rng=Rng.from_state(manifest["data_rng"]),
        step=int(manifest["step"]),
        image_shape=(int(shape[0]), int(shape[1])) if shape else None,
    )
