"""Run configuration: a flat dataclass mirroring the `key = value` config
file format. Unknown keys are fatal so sweep typos surface immediately.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

DATASETS = ("ring", "idx")
REGULARIZERS = ("w2", "kl", "mmd")
W2_VARIANTS = ("root_product", "bures")
PRIOR_STATS = ("sampled", "exact")

# Field name in TrainConfig -> key name in config files ("lambda" is a
# Python keyword, so the field is called lam).
_KEY_OF_FIELD = {"lam": "lambda"}


@dataclass
class TrainConfig:
    dataset: str = "ring"
    data_path: str = ""
    limit: int = 30_000
    latent_dim: int = 2
    enc_hidden: tuple[int, ...] = (64, 64)
    dec_hidden: tuple[int, ...] = (64, 64)
    regularizer: str = "w2"
    lam: float = 1.0
    w2_variant: str = "root_product"
    prior_stats: str = "sampled"
    batch_size: int = 64
    steps: int = 2000
    seed: int = 1
    lr: float = 0.005
    beta1: float = 0.5
    beta2: float = 0.9
    decay_every: int = 10_000
    decay_factor: float = 0.9
    mmd_scale: float = 1.0
    eval_every: int = 0
    out_dir: str = "wwae_run"

    def reg_kind(self) -> str:
        """One of w2_root_product, w2_bures, kl, mmd."""
        if self.regularizer == "w2":
            return f"w2_{self.w2_variant}"
        return self.regularizer

    def validate(self) -> "TrainConfig":
        if self.dataset not in DATASETS:
            raise ValueError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if self.regularizer not in REGULARIZERS:
            raise ValueError(
                f"regularizer must be one of {REGULARIZERS}, got {self.regularizer!r}"
            )
        if self.w2_variant not in W2_VARIANTS:
            raise ValueError(
                f"w2_variant must be one of {W2_VARIANTS}, got {self.w2_variant!r}"
            )
        if self.prior_stats not in PRIOR_STATS:
            raise ValueError(
                f"prior_stats must be one of {PRIOR_STATS}, got {self.prior_stats!r}"
            )
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.batch_size < 2:
            raise ValueError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.latent_dim < 1:
            raise ValueError(f"latent_dim must be >= 1, got {self.latent_dim}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.limit <= 0:
            raise ValueError(f"limit must be positive, got {self.limit}")
        if self.dataset == "idx" and not self.data_path:
            raise ValueError("dataset=idx requires data_path")
        return self


def _parse_value(field: dataclasses.Field, raw: str):
    if field.type in ("int",):
        return int(raw)
    if field.type in ("float",):
        return float(raw)
    if field.type.startswith("tuple"):
        if not raw:
            return ()
        return tuple(int(part) for part in raw.split(","))
    return raw


def _format_value(value) -> str:
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def parse_config_text(text: str) -> TrainConfig:
    """Parse `key = value` lines; '#' comments and blanks are ignored."""
    fields = {_KEY_OF_FIELD.get(f.name, f.name): f for f in dataclasses.fields(TrainConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in fields:
            raise ValueError(f"unknown config key {key!r} (line {lineno})")
        field = fields[key]
        try:
            values[field.name] = _parse_value(field, raw)
        except ValueError as exc:
            raise ValueError(f"bad value for {key!r}: {raw!r} ({exc})") from None
    return TrainConfig(**values).validate()


def load_config(path: str | Path) -> TrainConfig:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    return parse_config_text(path.read_text())


def config_lines(cfg: TrainConfig) -> list[str]:
    """Echo lines that parse back to the same config (full reproduction)."""
    lines = []
    for f in dataclasses.fields(TrainConfig):
        key = _KEY_OF_FIELD.get(f.name, f.name)
        lines.append(f"{key} = {_format_value(getattr(cfg, f.name))}")
    return lines


def config_to_dict(cfg: TrainConfig) -> dict:
    return {
        _KEY_OF_FIELD.get(f.name, f.name): getattr(cfg, f.name)
        for f in dataclasses.fields(TrainConfig)
    }


def config_from_dict(d: dict) -> TrainConfig:
    values = {}
    for f in dataclasses.fields(TrainConfig):
        key = _KEY_OF_FIELD.get(f.name, f.name)
        if key in d:
            v = d[key]
            values[f.name] = tuple(v) if f.type.startswith("tuple") else v
    return TrainConfig(**values).validate()
