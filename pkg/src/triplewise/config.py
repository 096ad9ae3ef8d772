"""Training configuration: presets and flat key=value config files."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class TrainConfig:
    preset: str = "paper"
    vocab_size: int = 40000
    max_len: int = 30
    embed_dim: int = 300
    hidden: int = 300
    latent_dim: int = 100
    dropout: float = 0.2
    batch_size: int = 64
    learning_rate: float = 1e-4
    word_drop: float = 0.25
    # None: anneal over one epoch of the corpus; 0: no annealing (multiplier 1)
    anneal_steps: int | None = None
    use_bow: bool = True
    grad_clip: float = 5.0
    max_epochs: int = 30
    patience: int = 10
    seed: int = 1
    sigma_min: float = 1e-6

    def __post_init__(self):
        for name in ("vocab_size", "max_len", "embed_dim", "hidden", "latent_dim",
                     "batch_size", "max_epochs"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.max_len < 2:
            raise ConfigError("max_len must be >= 2")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if not 0.0 <= self.word_drop <= 1.0:
            raise ConfigError("word_drop must be in [0, 1]")
        if self.anneal_steps is not None and self.anneal_steps < 0:
            raise ConfigError("anneal_steps must be >= 0")
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def desk_preset(**overrides) -> TrainConfig:
    base = dict(
        preset="desk",
        vocab_size=500,
        max_len=16,
        embed_dim=64,
        hidden=64,
        latent_dim=16,
        dropout=0.2,
        batch_size=32,
        learning_rate=2e-3,
        word_drop=0.25,
        anneal_steps=1000,
        max_epochs=500,
        patience=10,
    )
    base.update(overrides)
    return TrainConfig(**base)


def paper_preset(**overrides) -> TrainConfig:
    return TrainConfig(preset="paper", **overrides)


PRESETS = {"paper": paper_preset, "desk": desk_preset}

_FIELD_TYPES = {f.name: f.type for f in fields(TrainConfig)}


def _parse_value(key: str, text: str):
    text = text.strip()
    if text.lower() == "none":
        return None
    ftype = _FIELD_TYPES[key]
    if key == "preset" or ftype == "str":
        return text
    if ftype == "bool":
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"invalid boolean for {key}: {text!r}")
    if ftype == "int" or ftype == "int | None":
        return int(text)
    if ftype == "float":
        return float(text)
    return text


def parse_config_text(text: str) -> TrainConfig:
    """Parse flat `key = value` lines; a `preset=` line selects the defaults."""
    pairs: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {line_no}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"invalid config key: {key!r}")
        pairs[key] = value
    preset_name = pairs.pop("preset", "paper").strip()
    if preset_name not in PRESETS:
        raise ConfigError(f"unknown preset {preset_name!r}")
    try:
        overrides = {key: _parse_value(key, value) for key, value in pairs.items()}
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return PRESETS[preset_name](**overrides)


def load_config(path: str | Path) -> TrainConfig:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def config_from_dict(data: dict) -> TrainConfig:
    unknown = set(data) - set(_FIELD_TYPES)
    if unknown:
        raise ConfigError(f"invalid config key(s): {sorted(unknown)}")
    return TrainConfig(**data)
