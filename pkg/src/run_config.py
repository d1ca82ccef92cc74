"""
RunConfig untuk CrowdCast
Default dari config/settings.py -> file key=value -> flag CLI
"""

import os
import typing
from dataclasses import dataclass, fields, replace
from typing import Any, Dict, Mapping, Optional, Tuple

from config.settings import DATASET_CONFIG, MODEL_CONFIG, TRAIN_CONFIG
from src.predictor import ATTENTION_INPUTS, MODES, ModelDims
from src.utils import logger, ConfigError, parse_key_value_text

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class RunConfig:
    """Semua parameter satu run; disalin utuh ke header setiap artefak"""
    dataset: str = "SYNTHETIC"
    mode: str = TRAIN_CONFIG["mode"]
    epochs: int = TRAIN_CONFIG["epochs"]
    learning_rate: float = TRAIN_CONFIG["learning_rate"]
    dropout: float = TRAIN_CONFIG["dropout"]
    seed: int = TRAIN_CONFIG["seed"]
    frame_period: float = DATASET_CONFIG["frame_period"]
    stride: int = DATASET_CONFIG["stride"]
    split_fractions: Tuple[float, float, float] = DATASET_CONFIG["split_fractions"]
    out_dir: str = TRAIN_CONFIG["out_dir"]
    data_dir: str = DATASET_CONFIG["data_dir"]
    data_file: Optional[str] = None
    column_order: str = "default"
    frame_step: int = DATASET_CONFIG["frame_step"]
    obs_len: int = DATASET_CONFIG["obs_len"]
    pred_len: int = DATASET_CONFIG["pred_len"]
    batch_size: int = TRAIN_CONFIG["batch_size"]
    clip_norm: float = TRAIN_CONFIG["clip_norm"]
    rms_decay: float = TRAIN_CONFIG["rms_decay"]
    rms_eps: float = TRAIN_CONFIG["rms_eps"]
    attention_input: str = MODEL_CONFIG["attention_input"]
    scores_file: Optional[str] = None
    sample: bool = False
    embedding_dim: int = MODEL_CONFIG["embedding_dim"]
    hidden_dim: int = MODEL_CONFIG["hidden_dim"]

    def __post_init__(self):
        object.__setattr__(self, "dataset", self.dataset.upper())
        object.__setattr__(self, "split_fractions", tuple(float(f) for f in self.split_fractions))
        self.validate()

    def validate(self) -> None:
        """Raise ConfigError untuk nilai di luar rentang"""
        checks = [
            (self.mode in MODES, f"mode must be one of {MODES}, got {self.mode!r}"),
            (self.attention_input in ATTENTION_INPUTS,
             f"attention_input must be one of {ATTENTION_INPUTS}, got {self.attention_input!r}"),
            (self.epochs >= 0, f"epochs must be >= 0, got {self.epochs}"),
            (self.learning_rate > 0, f"learning_rate must be > 0, got {self.learning_rate}"),
            (0.0 <= self.dropout < 1.0, f"dropout must be in [0, 1), got {self.dropout}"),
            (self.frame_period > 0, f"frame_period must be > 0, got {self.frame_period}"),
            (self.stride >= 1, f"stride must be >= 1, got {self.stride}"),
            (self.frame_step >= 0, f"frame_step must be >= 0, got {self.frame_step}"),
            (self.obs_len >= 1 and self.pred_len >= 1, "obs_len and pred_len must be >= 1"),
            (self.batch_size >= 1, f"batch_size must be >= 1, got {self.batch_size}"),
            (self.clip_norm > 0, f"clip_norm must be > 0, got {self.clip_norm}"),
            (0.0 <= self.rms_decay < 1.0, f"rms_decay must be in [0, 1), got {self.rms_decay}"),
            (self.rms_eps > 0, f"rms_eps must be > 0, got {self.rms_eps}"),
            (self.embedding_dim >= 1 and self.hidden_dim >= 1, "model dims must be >= 1"),
            (len(self.split_fractions) == 3 and min(self.split_fractions) >= 0
             and abs(sum(self.split_fractions) - 1.0) <= 1e-9 and self.split_fractions[0] > 0,
             f"split_fractions must be three non-negative numbers summing to 1, got {self.split_fractions}"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        if self.dataset not in DATASET_CONFIG["presets"] and self.data_file is None:
            raise ConfigError(f"unknown dataset preset {self.dataset!r}; pass data_file for custom data")

    # ------------------------------------------
    # Construction
    # ------------------------------------------
    @classmethod
    def from_text(cls, text: str, base: Optional["RunConfig"] = None) -> "RunConfig":
        """
        Parse isi file key=value di atas konfigurasi dasar

        Args:
            text: Isi file
            base: Konfigurasi dasar (default: semua default)

        Returns:
            RunConfig baru
        """
        known = {f.name: f for f in fields(cls)}
        hints = typing.get_type_hints(cls)
        values: Dict[str, Any] = {}
        for line_no, key, raw in parse_key_value_text(text):
            if key not in known:
                raise ConfigError(f"line {line_no}: unknown config key {key!r}")
            try:
                values[key] = _coerce(hints[key], raw)
            except ValueError as exc:
                raise ConfigError(f"line {line_no}: invalid value for {key}: {exc}") from None
        return replace(base or cls(), **values)

    @classmethod
    def from_file(cls, path: str, base: Optional["RunConfig"] = None) -> "RunConfig":
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        with open(path, "r", encoding="utf-8") as handle:
            config = cls.from_text(handle.read(), base)
        logger.info(f"Loaded run config from {path}")
        return config

    @classmethod
    def from_header(cls, header: Mapping[str, str]) -> "RunConfig":
        """Bangun ulang RunConfig dari header artefak (key 'version' diabaikan)"""
        known = {f.name for f in fields(cls)}
        text = "\n".join(f"{k}={v}" for k, v in header.items() if k in known)
        return cls.from_text(text)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Terapkan override (nilai None diabaikan)"""
        values = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(values) - {f.name for f in fields(self)}
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return replace(self, **values)

    @classmethod
    def load(cls, path: Optional[str] = None, **overrides: Any) -> "RunConfig":
        """Default -> file (opsional) -> override"""
        config = cls.from_file(path) if path else cls()
        return config.with_overrides(**overrides)

    # ------------------------------------------
    # Derived values
    # ------------------------------------------
    def header(self) -> Dict[str, str]:
        """Header audit terurut; nilai bisa di-parse ulang oleh from_header"""
        return {f.name: _format(getattr(self, f.name)) for f in fields(self)}

    def model_dims(self) -> ModelDims:
        return ModelDims(embedding_dim=self.embedding_dim, hidden_dim=self.hidden_dim)

    def run_dir(self, mode: Optional[str] = None) -> str:
        """Direktori artefak: <out_dir>/<DATASET>/<mode>"""
        return os.path.join(self.out_dir, self.dataset, mode or self.mode)

    def data_path(self) -> Optional[str]:
        """Path file anotasi (data_file mengalahkan preset); None untuk SYNTHETIC"""
        if self.data_file:
            return self.data_file
        preset = DATASET_CONFIG["presets"][self.dataset]
        return os.path.join(self.data_dir, preset["file"]) if preset["file"] else None

    def resolved_column_order(self) -> str:
        if self.column_order != "default" or self.data_file:
            return self.column_order
        return DATASET_CONFIG["presets"].get(self.dataset, {}).get("columns", "default")


def _coerce(kind: Any, raw: str) -> Any:
    optional = typing.get_origin(kind) is typing.Union
    if optional:
        if raw == "" or raw.lower() == "none":
            return None
        kind = next(arg for arg in typing.get_args(kind) if arg is not type(None))
    if kind is bool:
        lowered = raw.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if typing.get_origin(kind) is tuple:
        return tuple(float(part) for part in raw.split(","))
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    return raw


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ",".join(repr(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)
