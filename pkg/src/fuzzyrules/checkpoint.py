"""Model checkpoints: self-describing JSON, byte-identical across equal runs.

A checkpoint carries everything needed to score and extract rules without the
training data: the network shape and raw parameters (at full float64
precision via repr round-tripping), the fitted fuzzifier including the atom
vocabulary, and the training configuration. Serialization uses sorted keys
and fixed separators so that identical runs produce identical bytes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .fuzzify import Fuzzifier
from .logic import LayerKind
from .network import NetworkSpec, NetworkState
from .training import TrainConfig

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint", "stable_json"]

FORMAT_NAME = "fuzzy-rule-network"
FORMAT_VERSION = 1


def stable_json(doc) -> str:
    """Canonical JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"


def _float_str(x: float) -> str:
    # repr of a float round-trips exactly in both directions
    return repr(float(x))


@dataclass
class Checkpoint:
    state: NetworkState
    fuzzifier: Fuzzifier
    train_config: TrainConfig
    meta: dict

    @property
    def vocabulary(self):
        return self.fuzzifier.vocabulary_


def checkpoint_doc(
    state: NetworkState, fuzzifier: Fuzzifier, config: TrainConfig, meta: dict | None = None
) -> dict:
    lam_l1, lam_orth = config.resolved_lambdas(state.spec.n_params)
    cfg = {
        "learning_rate": config.learning_rate,
        "batch_size": config.batch_size,
        "epochs": config.epochs,
        "weight_decay": config.weight_decay,
        "lambda_l1": config.lambda_l1,
        "lambda_orth": config.lambda_orth,
        "negatives_per_impression": config.negatives_per_impression,
        "loss": config.loss,
        "seed": config.seed,
    }
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "network": {
            "layer_sizes": list(state.spec.layer_sizes),
            "output_kind": state.spec.output_kind.value,
        },
        "params": [[[_float_str(v) for v in row] for row in p] for p in state.params],
        "train_config": cfg,
        "resolved": {"lambda_l1": lam_l1, "lambda_orth": lam_orth},
        "fuzzifier": fuzzifier.to_json(),
        "atoms": fuzzifier.vocabulary_.to_json(),
        "meta": meta or {},
    }


def save_checkpoint(
    path,
    state: NetworkState,
    fuzzifier: Fuzzifier,
    config: TrainConfig,
    meta: dict | None = None,
) -> None:
    doc = checkpoint_doc(state, fuzzifier, config, meta)
    Path(path).write_text(stable_json(doc), encoding="utf-8")


def load_checkpoint(path) -> Checkpoint:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"checkpoint {path} is not valid JSON: {exc}") from None
    if doc.get("format") != FORMAT_NAME:
        raise DataError(f"checkpoint {path} has unknown format {doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(f"checkpoint {path} has unsupported version {doc.get('version')!r}")

    net = doc["network"]
    spec = NetworkSpec(tuple(net["layer_sizes"]), LayerKind(net["output_kind"]))
    params = [
        np.asarray([[float(v) for v in row] for row in p], dtype=np.float64)
        for p in doc["params"]
    ]
    state = NetworkState(spec, params)

    fuzzifier = Fuzzifier.from_json(doc["fuzzifier"])
    if fuzzifier.vocabulary_.to_json() != doc["atoms"]:
        raise DataError(f"checkpoint {path}: atom list does not match the fuzzifier state")
    if len(fuzzifier.vocabulary_) != spec.n_atoms:
        raise DataError(
            f"checkpoint {path}: network expects {spec.n_atoms} atoms, "
            f"vocabulary has {len(fuzzifier.vocabulary_)}"
        )

    cfg = doc["train_config"]
    config = TrainConfig(
        learning_rate=float(cfg["learning_rate"]),
        batch_size=int(cfg["batch_size"]),
        epochs=int(cfg["epochs"]),
        weight_decay=float(cfg["weight_decay"]),
        lambda_l1=None if cfg["lambda_l1"] is None else float(cfg["lambda_l1"]),
        lambda_orth=None if cfg["lambda_orth"] is None else float(cfg["lambda_orth"]),
        negatives_per_impression=int(cfg["negatives_per_impression"]),
        loss=str(cfg["loss"]),
        seed=int(cfg["seed"]),
    )
    return Checkpoint(state=state, fuzzifier=fuzzifier, train_config=config, meta=doc.get("meta", {}))
