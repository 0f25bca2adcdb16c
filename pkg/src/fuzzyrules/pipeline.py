"""End-to-end plumbing shared by the CLI commands and the HTTP server."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .data import Dataset, DatasetSchema, SplitFrame, assemble_split, load_dataset, temporal_split
from .errors import ConfigError
from .fuzzify import Fuzzifier
from .logic import LayerKind
from .network import NetworkSpec
from .training import TrainResult, train

__all__ = ["PreparedData", "load_data_dir", "prepare_splits", "run_training"]

log = logging.getLogger("fuzzyrules")


def load_data_dir(data_dir) -> Dataset:
    """Load users.tsv/articles.tsv/behaviors.tsv/schema.json from a directory."""
    root = Path(data_dir)
    schema_path = root / "schema.json"
    if not schema_path.exists():
        raise ConfigError(f"{root}: missing schema.json")
    try:
        schema_doc = json.loads(schema_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{schema_path} is not valid JSON: {exc}") from None
    schema = DatasetSchema.from_json(schema_doc)
    return load_dataset(
        root / "users.tsv", root / "articles.tsv", root / "behaviors.tsv", schema
    )


@dataclass
class PreparedData:
    """Both splits fuzzified with a train-fitted fuzzifier."""

    dataset: Dataset
    fuzzifier: Fuzzifier
    train_frame: SplitFrame
    val_frame: SplitFrame
    x_train: np.ndarray
    x_val: np.ndarray


def prepare_splits(dataset: Dataset, split_time) -> PreparedData:
    """Temporal split, fit the fuzzifier on training candidate rows, encode both."""
    train_imps, val_imps = temporal_split(dataset.impressions, split_time)
    log.info(
        "temporal split: %d train / %d validation impressions",
        len(train_imps),
        len(val_imps),
    )
    train_frame = assemble_split(dataset, train_imps)
    val_frame = assemble_split(dataset, val_imps)
    fuzzifier = Fuzzifier(features=dataset.schema.fuzzifier_features())
    fuzzifier.fit(train_frame.rows)
    x_train = fuzzifier.transform(train_frame.rows)
    x_val = fuzzifier.transform(val_frame.rows)
    log.info(
        "fuzzified %d train rows and %d validation rows into %d atoms",
        x_train.shape[0],
        x_val.shape[0],
        x_train.shape[1],
    )
    return PreparedData(
        dataset=dataset,
        fuzzifier=fuzzifier,
        train_frame=train_frame,
        val_frame=val_frame,
        x_train=x_train,
        x_val=x_val,
    )


def run_training(prepared: PreparedData, run_config: RunConfig) -> TrainResult:
    """Train per the run config, recording validation AUC per epoch."""
    spec = NetworkSpec(
        (prepared.x_train.shape[1], *run_config.hidden_layers, 1),
        LayerKind(run_config.output_kind),
    )
    result = train(
        prepared.x_train,
        prepared.train_frame.labels,
        spec,
        run_config.training,
        impression_ids=prepared.train_frame.impression_ids,
        eval_split=(prepared.x_val, prepared.val_frame.labels, prepared.val_frame.slices),
    )
    if result.skipped_no_positive:
        log.warning(
            "skipped %d training impressions without a positive candidate",
            result.skipped_no_positive,
        )
    final = result.history[-1]
    log.info(
        "trained %d epochs: loss %.5f (data %.5f), validation AUC %s",
        len(result.history),
        final.loss_total,
        final.loss_data,
        "n/a" if final.auc is None else f"{final.auc:.4f}",
    )
    return result
