"""Run configuration: strict JSON with unknown keys rejected."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .logic import LayerKind
from .training import TrainConfig

__all__ = ["RunConfig", "load_run_config"]

_TRAINING_KEYS = {
    "learning_rate",
    "batch_size",
    "epochs",
    "weight_decay",
    "lambda_l1",
    "lambda_orth",
    "negatives_per_impression",
    "loss",
    "seed",
}


@dataclass(frozen=True)
class RunConfig:
    """Everything a training/evaluation run needs beyond the data directory."""

    split_time: int | str
    hidden_layers: tuple[int, ...] = (16, 8, 4)
    output_kind: str = "and"
    training: TrainConfig = field(default_factory=TrainConfig)
    thresholds: tuple[float, ...] | None = None

    def to_json(self) -> dict:
        doc = {
            "split_time": self.split_time,
            "network": {
                "hidden_layers": list(self.hidden_layers),
                "output_kind": self.output_kind,
            },
            "training": {
                "learning_rate": self.training.learning_rate,
                "batch_size": self.training.batch_size,
                "epochs": self.training.epochs,
                "weight_decay": self.training.weight_decay,
                "lambda_l1": self.training.lambda_l1,
                "lambda_orth": self.training.lambda_orth,
                "negatives_per_impression": self.training.negatives_per_impression,
                "loss": self.training.loss,
                "seed": self.training.seed,
            },
        }
        if self.thresholds is not None:
            doc["thresholds"] = list(self.thresholds)
        return doc


def _parse_run_config(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("run config must be a JSON object")
    unknown = set(doc) - {"split_time", "network", "training", "thresholds"}
    if unknown:
        raise ConfigError(f"run config: unknown keys {sorted(unknown)}")
    if "split_time" not in doc:
        raise ConfigError("run config: split_time is required")
    split_time = doc["split_time"]
    if not isinstance(split_time, (int, str)):
        raise ConfigError("run config: split_time must be an int or an ISO-8601 string")

    network = doc.get("network", {})
    if not isinstance(network, dict):
        raise ConfigError("run config: network must be an object")
    bad = set(network) - {"hidden_layers", "output_kind"}
    if bad:
        raise ConfigError(f"run config: unknown network keys {sorted(bad)}")
    hidden = network.get("hidden_layers", [16, 8, 4])
    if not isinstance(hidden, list) or not all(isinstance(h, int) and h > 0 for h in hidden):
        raise ConfigError("run config: hidden_layers must be a list of positive integers")
    output_kind = network.get("output_kind", "and")
    try:
        LayerKind(output_kind)
    except ValueError:
        raise ConfigError(f"run config: output_kind must be 'and' or 'or', got {output_kind!r}") from None

    training = doc.get("training", {})
    if not isinstance(training, dict):
        raise ConfigError("run config: training must be an object")
    bad = set(training) - _TRAINING_KEYS
    if bad:
        raise ConfigError(f"run config: unknown training keys {sorted(bad)}")
    try:
        train_config = TrainConfig(**training)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"run config: invalid training settings: {exc}") from None

    thresholds = doc.get("thresholds")
    if thresholds is not None:
        if not isinstance(thresholds, list) or not thresholds:
            raise ConfigError("run config: thresholds must be a non-empty list")
        vals = []
        for t in thresholds:
            if not isinstance(t, (int, float)) or not (0.0 <= float(t) < 1.0):
                raise ConfigError(f"run config: threshold {t!r} must satisfy 0 <= t < 1")
            vals.append(float(t))
        thresholds = tuple(vals)

    return RunConfig(
        split_time=split_time,
        hidden_layers=tuple(hidden),
        output_kind=str(output_kind),
        training=train_config,
        thresholds=thresholds,
    )


def load_run_config(path) -> RunConfig:
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read run config {p}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"run config {p} is not valid JSON: {exc}") from None
    return _parse_run_config(doc)
