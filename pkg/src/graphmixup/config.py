"""Flat ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored; unknown keys are errors.
Dataset paths are resolved relative to the config file.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError

GRAPHMIXUP_METHODS = ("graphmixup_c", "graphmixup_b", "graphmixup_fix")
BASELINES = ("origin", "oversample", "reweight", "smote", "embed_smote")
METHODS = GRAPHMIXUP_METHODS + BASELINES

# keys that only mean something to the reinforcement-mixup methods
MIXUP_ONLY = frozenset({"eta", "delta_kappa", "epsilon", "epsilon_final", "epsilon_anneal",
                        "gamma_discount", "q_lr", "warmup", "disable_rl"})
SCALE_KEYS = frozenset({"fixed_scale", "scale_init"})


@dataclass
class ExperimentConfig:
    edges: str | None = None
    features: str | None = None
    labels: str | None = None
    method: str = "graphmixup_c"
    minority_classes: tuple | None = None
    im_ratio: float = 0.5
    majority_count: int = 20
    val_frac: float = 0.5
    K: int = 4
    hidden: int = 32
    layers: int = 1
    eta: float = 0.5
    beta: float = 1.0
    delta_kappa: float = 0.05
    epsilon: float = 0.9
    epsilon_final: float | None = None
    epsilon_anneal: int = 0
    gamma_discount: float = 1.0
    q_lr: float = 0.5
    T: int = 0
    pair_samples: int = 0
    lr: float = 0.001
    weight_decay: float = 5e-4
    pretrain_epochs: int = 1000
    max_epochs: int = 4000
    patience: int = 200
    warmup: int = 50
    seeds: tuple = (0, 1, 2, 3, 4)
    disable_local: bool = False
    disable_global: bool = False
    disable_rl: bool = False
    fixed_scale: float | None = None
    scale_init: float | None = None
    rec_reduction: str = "node"
    aggregation: str = "mean"
    explicit: frozenset = field(default=frozenset(), compare=False, repr=False)

    @property
    def edge_mode(self):
        return "binary" if self.method == "graphmixup_b" else "continuous"

    @property
    def uses_rl(self):
        return self.method in ("graphmixup_c", "graphmixup_b") and not self.disable_rl

    def replace(self, **changes):
        explicit = self.explicit | set(changes)
        return dataclasses.replace(self, explicit=frozenset(explicit), **changes)

    def to_text(self):
        """Render as parseable ``key = value`` lines, omitting keys the method rejects."""
        skip = {"explicit"}
        if self.method not in GRAPHMIXUP_METHODS:
            skip |= MIXUP_ONLY
        lines = []
        for f in dataclasses.fields(self):
            if f.name in skip:
                continue
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = str(v).lower()
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def _bool(s):
    low = s.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _optional(conv):
    def parse(s):
        return None if s.lower() in ("", "none", "auto") else conv(s)
    return parse


def _int_list(s):
    return tuple(int(x) for x in s.replace(" ", "").split(",") if x)


_PARSERS = {
    "edges": str, "features": str, "labels": str, "method": str,
    "minority_classes": _optional(_int_list),
    "im_ratio": float, "majority_count": int, "val_frac": float,
    "K": int, "hidden": int, "layers": int, "eta": float, "beta": float,
    "delta_kappa": float, "epsilon": float, "epsilon_final": _optional(float),
    "epsilon_anneal": int, "gamma_discount": float, "q_lr": float,
    "T": int, "pair_samples": int, "lr": float, "weight_decay": float,
    "pretrain_epochs": int, "max_epochs": int, "patience": int, "warmup": int,
    "seeds": _int_list, "disable_local": _bool, "disable_global": _bool,
    "disable_rl": _bool, "fixed_scale": _optional(float), "scale_init": _optional(float),
    "rec_reduction": str, "aggregation": str,
}


def parse_config_text(text, base_dir=None):
    values = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}", f"expected 'key = value', got {raw.strip()!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(key, "unknown configuration key")
        try:
            values[key] = _PARSERS[key](val)
        except ValueError as exc:
            raise ConfigError(key, str(exc)) from None
    if base_dir is not None:
        for key in ("edges", "features", "labels"):
            if key in values and not Path(values[key]).is_absolute():
                values[key] = str(Path(base_dir) / values[key])
    cfg = ExperimentConfig(**values, explicit=frozenset(values))
    validate(cfg)
    return cfg


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    return parse_config_text(text, base_dir=path.parent)


def _check(cond, key, msg):
    if not cond:
        raise ConfigError(key, msg)


def validate(cfg):
    _check(cfg.method in METHODS, "method", f"must be one of {', '.join(METHODS)}")
    _check(0 < cfg.im_ratio <= 1, "im_ratio", "must lie in (0, 1]")
    _check(cfg.majority_count >= 1, "majority_count", "must be >= 1")
    _check(0 <= cfg.val_frac <= 1, "val_frac", "must lie in [0, 1]")
    for key in ("K", "hidden", "layers"):
        _check(getattr(cfg, key) >= 1, key, "must be >= 1")
    _check(cfg.K >= 2, "K", "disentanglement needs K >= 2")
    _check(0 < cfg.eta < 1, "eta", "must lie in (0, 1)")
    _check(cfg.beta >= 0, "beta", "must be >= 0")
    _check(cfg.delta_kappa > 0, "delta_kappa", "must be > 0")
    _check(0 <= cfg.epsilon <= 1, "epsilon", "must lie in [0, 1]")
    _check(cfg.epsilon_final is None or 0 <= cfg.epsilon_final <= 1,
           "epsilon_final", "must lie in [0, 1]")
    _check(cfg.epsilon_anneal >= 0, "epsilon_anneal", "must be >= 0")
    _check(0 <= cfg.gamma_discount <= 1, "gamma_discount", "must lie in [0, 1]")
    _check(0 < cfg.q_lr <= 1, "q_lr", "must lie in (0, 1]")
    _check(cfg.T >= 0, "T", "must be >= 0 (0 selects the default)")
    _check(cfg.pair_samples >= 0, "pair_samples", "must be >= 0 (0 selects 4N)")
    _check(cfg.lr >= 0, "lr", "must be >= 0")
    _check(cfg.weight_decay >= 0, "weight_decay", "must be >= 0")
    _check(cfg.pretrain_epochs >= 0, "pretrain_epochs", "must be >= 0")
    _check(cfg.max_epochs >= 1, "max_epochs", "must be >= 1")
    _check(cfg.patience >= 1, "patience", "must be >= 1")
    _check(cfg.warmup >= 0, "warmup", "must be >= 0")
    _check(len(cfg.seeds) >= 1, "seeds", "needs at least one seed")
    _check(cfg.fixed_scale is None or cfg.fixed_scale >= 0, "fixed_scale", "must be >= 0")
    _check(cfg.scale_init is None or cfg.scale_init >= 0, "scale_init", "must be >= 0")
    _check(cfg.rec_reduction in ("sum", "node", "mean"), "rec_reduction",
           "must be 'sum', 'node' or 'mean'")
    _check(cfg.aggregation in ("sum", "mean"), "aggregation", "must be 'sum' or 'mean'")
    if cfg.method not in GRAPHMIXUP_METHODS:
        bad = sorted(cfg.explicit & MIXUP_ONLY)
        _check(not bad, bad[0] if bad else "", f"only valid for {', '.join(GRAPHMIXUP_METHODS)}")
    if cfg.method in ("origin", "reweight"):
        bad = sorted(cfg.explicit & SCALE_KEYS)
        _check(not bad, bad[0] if bad else "", f"not used by method '{cfg.method}'")
    return cfg
