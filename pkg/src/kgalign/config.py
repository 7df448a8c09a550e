"""Run configuration: a flat key = value text file with strict schema
validation, plus CLI overrides. Unknown keys are rejected so typos fail
loudly before any compute starts."""

import os
from dataclasses import dataclass, fields

from kgalign.errors import ConfigError
from kgalign.training import METRICS, Hyperparams

ABLATIONS = ("none", "no-rel", "no-attr", "no-highway")


@dataclass
class RunConfig:
    data_dir: str = ""
    out_dir: str = "out"
    rng_seed: int = 0
    ratio: float = 0.3
    d: int = 200
    h: int = 200
    relation_cap: int = 1000
    attribute_cap: int = 1000
    beta: float = 3.0
    margin_semantic: float = 0.5
    tau: float = 0.5
    fusion_mode: str = "sum"
    pool_size: int = 50
    neg_per_side: int = 5
    epochs: int = 300
    lr: float = 0.005
    metric: str = "l1"
    epochs_semantic: int = 100
    lr_semantic: float = 0.001
    h_m: int = 300
    d_sem: int = 0
    train_h0: bool = True
    gate_bias_init: float = -2.0
    ablation: str = "none"
    deterministic: bool = False
    hits_ks: str = "1,10"
    text_emb_1: str = ""
    text_emb_2: str = ""
    text_dim: int = 128

    def validate(self) -> None:
        if self.rng_seed < 0:
            raise ConfigError(f"rng_seed must be >= 0, got {self.rng_seed}")
        if not 0.0 < self.ratio < 1.0:
            raise ConfigError(f"train ratio must be in (0, 1), got {self.ratio}")
        if self.fusion_mode not in ("sum", "concat"):
            raise ConfigError(f"fusion_mode must be sum or concat, got "
                              f"{self.fusion_mode!r}")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"ablation must be one of {ABLATIONS}, got "
                              f"{self.ablation!r}")
        if self.relation_cap < 2 or self.attribute_cap < 1:
            raise ConfigError("feature caps too small")
        self.ks()
        self.hyperparams().validate()

    def ks(self) -> list[int]:
        try:
            ks = [int(k) for k in self.hits_ks.split(",") if k.strip() != ""]
        except ValueError:
            raise ConfigError(f"hits_ks must be comma-separated ints, got "
                              f"{self.hits_ks!r}")
        if not ks or any(k <= 0 for k in ks):
            raise ConfigError(f"hits_ks entries must be >= 1, got {self.hits_ks!r}")
        return ks

    def hyperparams(self) -> Hyperparams:
        return Hyperparams(
            d=self.d, h=self.h, beta=self.beta,
            margin_semantic=self.margin_semantic, tau=self.tau,
            pool_size=self.pool_size, neg_per_side=self.neg_per_side,
            epochs=self.epochs, lr=self.lr, rng_seed=self.rng_seed,
            metric=self.metric, epochs_semantic=self.epochs_semantic,
            lr_semantic=self.lr_semantic, h_m=self.h_m, d_sem=self.d_sem,
            train_h0=self.train_h0, gate_bias_init=self.gate_bias_init,
        )

    def echo(self) -> dict:
        """Serializable snapshot; round-trips through from_mapping."""
        return {f.name: getattr(self, f.name) for f in fields(self)}


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    if kind is bool:
        lowered = raw.strip().lower()
        if lowered in ("true", "1", "yes"):
            return True
        if lowered in ("false", "0", "no"):
            return False
        raise ConfigError(f"config key {key}: expected a boolean, got {raw!r}")
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError:
        raise ConfigError(f"config key {key}: expected {kind.__name__}, got {raw!r}")
    return raw


def from_mapping(mapping: dict) -> RunConfig:
    config = RunConfig()
    for key, value in mapping.items():
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        setattr(config, key,
                _coerce(key, value) if isinstance(value, str) else value)
    return config


def load_config(path: str) -> RunConfig:
    """Parse 'key = value' lines; '#' starts a comment."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(
                    f"{path}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
            key, value = stripped.split("=", 1)
            key = key.strip()
            if key in mapping:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            mapping[key] = value.strip()
    return from_mapping(mapping)


def render_config(config: RunConfig) -> str:
    lines = [f"{key} = {value}" for key, value in config.echo().items()]
    return "\n".join(lines) + "\n"
