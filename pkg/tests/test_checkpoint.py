"""Checkpoint serialization: lossless floats and stable bytes."""
import json

import numpy as np
import pytest

from fuzzyrules.checkpoint import (
    FORMAT_NAME,
    load_checkpoint,
    save_checkpoint,
    stable_json,
)
from fuzzyrules.errors import DataError
from fuzzyrules.fuzzify import Fuzzifier
from fuzzyrules.logic import LayerKind
from fuzzyrules.network import NetworkSpec, init_params
from fuzzyrules.training import TrainConfig


def fitted_fuzzifier(n_tokens=4) -> Fuzzifier:
    rows = [{"tags": " ".join(f"t{i}" for i in range(n_tokens))}, {"tags": "t0"}]
    fz = Fuzzifier(features=[{"name": "tags", "kind": "multiclass"}])
    return fz.fit(rows)


def make_parts(seed=0):
    spec = NetworkSpec((4, 3, 1), LayerKind.AND)
    state = init_params(spec, seed)
    fz = fitted_fuzzifier(4)
    config = TrainConfig(epochs=2, batch_size=32, seed=seed)
    return state, fz, config


def test_round_trip_is_lossless(tmp_path):
    state, fz, config = make_parts()
    # include floats that stress decimal round-tripping
    state.params[0][0, 0] = 0.1 + 0.2
    state.params[0][0, 1] = -0.0
    state.params[1][0, 0] = 5e-324
    path = tmp_path / "model.json"
    save_checkpoint(path, state, fz, config, meta={"note": "x"})
    ckpt = load_checkpoint(path)
    assert ckpt.state.spec == state.spec
    for got, want in zip(ckpt.state.params, state.params):
        assert got.dtype == np.float64
        assert np.array_equal(got, want)
    assert np.signbit(ckpt.state.params[0][0, 1])
    assert ckpt.train_config == config
    assert ckpt.meta == {"note": "x"}
    assert ckpt.vocabulary.to_json() == fz.vocabulary_.to_json()


def test_save_is_byte_stable(tmp_path):
    state, fz, config = make_parts(seed=3)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_checkpoint(a, state, fz, config, meta={"k": 1})
    save_checkpoint(b, state, fz, config, meta={"k": 1})
    assert a.read_bytes() == b.read_bytes()
    # load then re-save also reproduces the bytes
    ckpt = load_checkpoint(a)
    c = tmp_path / "c.json"
    save_checkpoint(c, ckpt.state, ckpt.fuzzifier, ckpt.train_config, ckpt.meta)
    assert c.read_bytes() == a.read_bytes()


def test_stable_json_shape():
    text = stable_json({"b": 1, "a": [1.5, None]})
    assert text == '{"a":[1.5,null],"b":1}\n'
    with pytest.raises(ValueError):
        stable_json({"x": float("nan")})


def test_checkpoint_text_is_canonical(tmp_path):
    state, fz, config = make_parts()
    path = tmp_path / "m.json"
    save_checkpoint(path, state, fz, config)
    text = path.read_text()
    assert text.endswith("\n")
    doc = json.loads(text)
    assert stable_json(doc) == text
    assert doc["format"] == FORMAT_NAME
    # params are strings so precision survives any JSON printer
    assert isinstance(doc["params"][0][0][0], str)


def test_missing_file_raises(tmp_path):
    with pytest.raises(DataError):
        load_checkpoint(tmp_path / "absent.json")


def test_invalid_json_raises(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(DataError):
        load_checkpoint(path)


def test_wrong_format_or_version_raises(tmp_path):
    state, fz, config = make_parts()
    path = tmp_path / "m.json"
    save_checkpoint(path, state, fz, config)
    doc = json.loads(path.read_text())

    doc_bad = dict(doc, format="other")
    path.write_text(stable_json(doc_bad))
    with pytest.raises(DataError):
        load_checkpoint(path)

    doc_bad = dict(doc, version=99)
    path.write_text(stable_json(doc_bad))
    with pytest.raises(DataError):
        load_checkpoint(path)


def test_atom_count_mismatch_raises(tmp_path):
    spec = NetworkSpec((5, 3, 1), LayerKind.AND)  # five inputs
    state = init_params(spec, 0)
    fz = fitted_fuzzifier(4)  # four atoms
    path = tmp_path / "m.json"
    save_checkpoint(path, state, fz, TrainConfig())
    with pytest.raises(DataError):
        load_checkpoint(path)


def test_tampered_atom_list_raises(tmp_path):
    state, fz, config = make_parts()
    path = tmp_path / "m.json"
    save_checkpoint(path, state, fz, config)
    doc = json.loads(path.read_text())
    doc["atoms"][0][1] = "tampered"  # atoms are [feature, bin, kind] triples
    path.write_text(stable_json(doc))
    with pytest.raises(DataError):
        load_checkpoint(path)
