"""Experiment configuration: an INI file (key = value under [data], [train],
[run]) merged with command-line overrides, checked and typed into
RunSettings. Flags mirror file keys one-to-one and win on conflict.
"""

import configparser
from dataclasses import dataclass, field

from .train import TrainConfig, canonical_strategy, normalize_loss_name


class ConfigError(Exception):
    """Bad configuration or usage; the CLI maps this to exit code 2."""


def parse_split(s: str) -> tuple[int, int]:
    """'5:1' -> (5, 1)."""
    parts = s.split(":")
    if len(parts) != 2:
        raise ValueError(f"expected TRAIN:TEST, got {s!r}")
    a, b = (int(p) for p in parts)
    if a < 1 or b < 1:
        raise ValueError(f"split parts must be >= 1, got {s!r}")
    return a, b


def _parse_weights(s: str) -> tuple[float, ...]:
    return tuple(float(p) for p in s.split(","))


def _parse_strategies(s: str) -> list[str]:
    names = [p.strip() for p in s.split(",") if p.strip()]
    if not names:
        raise ValueError("strategy list is empty")
    return [canonical_strategy(n) for n in names]


# section -> key -> (settings attribute, converter from string)
_KEYS = {
    "data": {
        "dataset": ("dataset", str),
        "schema": ("schema", str),
        "eval_dataset": ("eval_dataset", str),
        "split": ("split", parse_split),
    },
    "train": {
        "hidden_width": ("hidden_width", int),
        "hidden_layers": ("hidden_layers", int),
        "keep_prob": ("keep_prob", float),
        "loss": ("loss", normalize_loss_name),
        "lambda": ("lam", float),
        "class_weights": ("class_weights", _parse_weights),
        "optimizer": ("optimizer", str),
        "learning_rate": ("learning_rate", float),
        "rho1": ("rho1", float),
        "rho2": ("rho2", float),
        "delta": ("delta", float),
        "batch_size": ("batch_size", int),
        "epochs": ("epochs", int),
        "seed": ("seed", int),
        "resampling": ("resampling", str),
    },
    "run": {
        "out": ("out", str),
        "strategies": ("strategies", _parse_strategies),
    },
}

_TRAIN_ATTRS = {attr for attr, _ in _KEYS["train"].values()}
_CONVERTERS = {attr: conv for sec in _KEYS.values() for attr, conv in sec.values()}


@dataclass
class RunSettings:
    """Fully resolved experiment settings: where the data lives, how to
    train, and where outputs go."""

    dataset: str | None = None
    schema: str | None = None
    eval_dataset: str | None = None
    split: tuple[int, int] = (5, 1)
    out: str = "runs"
    strategies: list[str] = field(default_factory=lambda: ["ce", "as", "wce", "over", "under"])
    train: TrainConfig = field(default_factory=TrainConfig)

    def require(self, *attrs: str) -> None:
        for attr in attrs:
            if getattr(self, attr) is None:
                raise ConfigError(f"missing required key {attr!r} (set it in the config file or pass --{attr.replace('_', '-')})")

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "schema": self.schema,
            "eval_dataset": self.eval_dataset,
            "split": f"{self.split[0]}:{self.split[1]}",
            "out": self.out,
            "strategies": list(self.strategies),
            "train": self.train.to_dict(),
        }


def _read_config_file(path: str) -> dict:
    """Flat {attribute: typed value} from an INI file, rejecting unknown
    sections and keys by name."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for section in parser.sections():
        if section not in _KEYS:
            raise ConfigError(f"unknown config section [{section}] (expected {sorted(_KEYS)})")
        for key, raw in parser.items(section):
            if key not in _KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}] (expected {sorted(_KEYS[section])})")
            attr, conv = _KEYS[section][key]
            try:
                values[attr] = conv(raw)
            except ValueError as e:
                raise ConfigError(f"key {key!r}: {e}") from None
    return values


def load_settings(config_path: str | None, overrides: dict | None = None) -> RunSettings:
    """Build RunSettings from an optional INI file plus override strings
    (flag values, keyed by attribute name). Overrides beat file values; both
    go through the same converters, and validation errors name the key."""
    values = _read_config_file(config_path) if config_path else {}
    for attr, raw in (overrides or {}).items():
        if raw is None:
            continue
        if attr not in _CONVERTERS:
            raise ConfigError(f"unknown setting {attr!r}")
        try:
            values[attr] = _CONVERTERS[attr](raw) if isinstance(raw, str) else raw
        except ValueError as e:
            raise ConfigError(f"key {attr!r}: {e}") from None

    settings = RunSettings()
    train_kwargs = {}
    for attr, value in values.items():
        if attr in _TRAIN_ATTRS:
            train_kwargs[attr] = value
        else:
            setattr(settings, attr, value)
    settings.train = TrainConfig(**train_kwargs)
    try:
        settings.train.validate()
    except ValueError as e:
        raise ConfigError(str(e)) from None
    return settings
