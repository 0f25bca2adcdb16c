"""Turning raw user/article features into atom membership vectors.

Each configured feature expands into a block of named atoms:

- categorical: one-hot over the 20 most frequent categories plus an
  "infrequent" bucket that also catches unseen values at transform time.
- multiclass: multi-hot over every category seen in training; unseen values
  are dropped; an empty cell is a valid empty set, never imputed.
- numeric: three tertile bins (low/mid/high) with cuts at the 1/3 and 2/3
  quantiles of the observed training values; v <= cut_low is low,
  v <= cut_high is mid, else high.
- article_age: ten fixed bins over impression_time - published_time in
  seconds; an age falls into the smallest bin whose upper bound strictly
  exceeds it, and anything past 3 days lands in the overflow bin.

Missing scalar values (empty or unparseable cells) fuzzify to the per-atom
mean membership over the observed training rows of that feature.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

__all__ = [
    "AtomInfo",
    "AtomVocabulary",
    "Fuzzifier",
    "parse_timestamp",
    "AGE_BIN_BOUNDS",
    "AGE_BIN_LABELS",
    "TOP_CATEGORIES",
    "INFREQUENT",
]

TOP_CATEGORIES = 20
INFREQUENT = "infrequent"

FEATURE_KINDS = ("categorical", "multiclass", "numeric", "article_age")

# Upper bounds in seconds; an age belongs to the smallest bin whose bound
# strictly exceeds it. The last bin is unbounded.
AGE_BIN_BOUNDS = (1800, 3600, 7200, 14400, 28800, 43200, 86400, 172800, 259200, math.inf)
AGE_BIN_LABELS = ("30m", "1h", "2h", "4h", "8h", "12h", "1d", "2d", "3d", "3d<")


def parse_timestamp(value) -> int:
    """Epoch seconds from an int, a digit string, or an ISO-8601 string."""
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite timestamp {value!r}")
        return int(value)
    s = str(value).strip()
    if not s:
        raise ValueError("empty timestamp")
    if re.fullmatch(r"[+-]?\d+", s):
        return int(s)
    if s.endswith("Z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def _sanitize(label: str) -> str:
    return re.sub(r"\s+", "-", str(label).strip())


@dataclass(frozen=True)
class AtomInfo:
    """One atom: the feature it belongs to, the bin it tests, the feature kind."""

    feature: str
    bin: str
    kind: str


class AtomVocabulary:
    """Ordered atom list with unique display names and per-feature bin layout."""

    def __init__(self, atoms: Sequence[AtomInfo]):
        self.atoms: tuple[AtomInfo, ...] = tuple(atoms)
        names: list[str] = []
        used: set[str] = set()
        for info in self.atoms:
            base = _sanitize(f"{info.feature}_{info.bin}")
            name = base
            k = 2
            while name in used:
                name = f"{base}.{k}"
                k += 1
            used.add(name)
            names.append(name)
        self.names: tuple[str, ...] = tuple(names)
        self._index = {name: i for i, name in enumerate(self.names)}
        self._feature_atoms: dict[str, list[int]] = {}
        self._bin_pos: list[int] = []
        for i, info in enumerate(self.atoms):
            block = self._feature_atoms.setdefault(info.feature, [])
            self._bin_pos.append(len(block))
            block.append(i)

    def __len__(self) -> int:
        return len(self.atoms)

    def atom_info(self, index: int) -> AtomInfo:
        return self.atoms[index]

    def index_of(self, name: str) -> int:
        if name not in self._index:
            raise KeyError(f"unknown atom name {name!r}")
        return self._index[name]

    def bin_position(self, index: int) -> int:
        """Position of this atom's bin within its feature's bin order."""
        return self._bin_pos[index]

    def atom_at(self, feature: str, bin_position: int) -> int:
        return self._feature_atoms[feature][bin_position]

    def span_label(self, feature: str, lo: int, hi: int) -> str:
        """Display label for a run of consecutive bins [lo, hi] of a feature."""
        bins = [self.atoms[i].bin for i in self._feature_atoms[feature]]
        if hi == len(bins) - 1:
            if lo == 0:
                return _sanitize(f"{feature}_any")
            return _sanitize(f"{feature}_{bins[lo - 1]}<")
        lower = bins[lo - 1] if lo > 0 else "0"
        return _sanitize(f"{feature}_{lower}-{bins[hi]}")

    def to_json(self) -> list[list[str]]:
        return [[a.feature, a.bin, a.kind] for a in self.atoms]

    @classmethod
    def from_json(cls, data) -> "AtomVocabulary":
        return cls([AtomInfo(str(f), str(b), str(k)) for f, b, k in data])


class _CategoricalEncoder:
    kind = "categorical"

    def __init__(self, column: str):
        self.column = column
        self.categories: list[str] = []

    def fit(self, rows) -> None:
        counts: Counter = Counter()
        for row in rows:
            if self.observed(row):
                counts[str(row.get(self.column))] += 1
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        self.categories = [c for c, _ in ordered[:TOP_CATEGORIES]]

    @property
    def bins(self) -> list[str]:
        return self.categories + [INFREQUENT]

    def observed(self, row) -> bool:
        v = row.get(self.column)
        return v is not None and str(v) != ""

    def _cat_index(self) -> dict:
        cached = getattr(self, "_cat_index_cache", None)
        if cached is None or len(cached) != len(self.categories):
            cached = {c: i for i, c in enumerate(self.categories)}
            self._cat_index_cache = cached
        return cached

    def encode(self, row) -> np.ndarray:
        vec = np.zeros(len(self.categories) + 1)
        idx = self._cat_index().get(str(row.get(self.column)))
        vec[idx if idx is not None else -1] = 1.0
        return vec

    def state_json(self):
        return {"column": self.column, "categories": self.categories}

    @classmethod
    def from_state(cls, state) -> "_CategoricalEncoder":
        enc = cls(state["column"])
        enc.categories = [str(c) for c in state["categories"]]
        return enc


class _MulticlassEncoder:
    kind = "multiclass"

    def __init__(self, column: str):
        self.column = column
        self.categories: list[str] = []

    @staticmethod
    def _tokens(value) -> list[str]:
        if value is None:
            return []
        return str(value).split()

    def fit(self, rows) -> None:
        counts: Counter = Counter()
        for row in rows:
            counts.update(self._tokens(row.get(self.column)))
        ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
        self.categories = [c for c, _ in ordered]

    @property
    def bins(self) -> list[str]:
        return list(self.categories)

    def observed(self, row) -> bool:
        # An empty cell is an observed empty set, so the feature never imputes.
        return True

    def _cat_index(self) -> dict:
        cached = getattr(self, "_cat_index_cache", None)
        if cached is None or len(cached) != len(self.categories):
            cached = {c: i for i, c in enumerate(self.categories)}
            self._cat_index_cache = cached
        return cached

    def encode(self, row) -> np.ndarray:
        vec = np.zeros(len(self.categories))
        index = self._cat_index()
        for tok in self._tokens(row.get(self.column)):
            i = index.get(tok)
            if i is not None:  # unseen categories are dropped
                vec[i] = 1.0
        return vec

    def state_json(self):
        return {"column": self.column, "categories": self.categories}

    @classmethod
    def from_state(cls, state) -> "_MulticlassEncoder":
        enc = cls(state["column"])
        enc.categories = [str(c) for c in state["categories"]]
        return enc


class _NumericEncoder:
    kind = "numeric"
    bins = ["low", "mid", "high"]

    def __init__(self, column: str):
        self.column = column
        self.cut_low = math.nan
        self.cut_high = math.nan

    @staticmethod
    def _parse(value) -> float | None:
        if value is None:
            return None
        s = str(value).strip()
        if not s:
            return None
        try:
            v = float(s)
        except ValueError:
            return None
        return v if math.isfinite(v) else None

    def fit(self, rows) -> None:
        vals = [v for row in rows if (v := self._parse(row.get(self.column))) is not None]
        if not vals:
            raise ValueError(f"numeric feature column {self.column!r} has no observed values")
        self.cut_low, self.cut_high = np.quantile(np.asarray(vals), [1.0 / 3.0, 2.0 / 3.0])

    def observed(self, row) -> bool:
        return self._parse(row.get(self.column)) is not None

    def encode(self, row) -> np.ndarray:
        v = self._parse(row.get(self.column))
        vec = np.zeros(3)
        if v <= self.cut_low:
            vec[0] = 1.0
        elif v <= self.cut_high:
            vec[1] = 1.0
        else:
            vec[2] = 1.0
        return vec

    def state_json(self):
        return {"column": self.column, "cut_low": float(self.cut_low), "cut_high": float(self.cut_high)}

    @classmethod
    def from_state(cls, state) -> "_NumericEncoder":
        enc = cls(state["column"])
        enc.cut_low = float(state["cut_low"])
        enc.cut_high = float(state["cut_high"])
        return enc


class _ArticleAgeEncoder:
    kind = "article_age"
    bins = list(AGE_BIN_LABELS)

    def __init__(self, published_column: str, impression_column: str):
        self.published_column = published_column
        self.impression_column = impression_column

    def fit(self, rows) -> None:
        pass  # bin bounds are fixed

    def _age(self, row) -> float | None:
        pub = row.get(self.published_column)
        if pub is None or str(pub).strip() == "":
            return None
        try:
            published = parse_timestamp(pub)
        except ValueError:
            return None
        impression = parse_timestamp(row[self.impression_column])
        return float(impression - published)

    def observed(self, row) -> bool:
        return self._age(row) is not None

    def encode(self, row) -> np.ndarray:
        age = self._age(row)
        vec = np.zeros(len(AGE_BIN_BOUNDS))
        for i, bound in enumerate(AGE_BIN_BOUNDS):
            if bound > age:
                vec[i] = 1.0
                break
        return vec

    def state_json(self):
        return {
            "published_column": self.published_column,
            "impression_column": self.impression_column,
        }

    @classmethod
    def from_state(cls, state) -> "_ArticleAgeEncoder":
        return cls(state["published_column"], state["impression_column"])


_ENCODERS = {
    "categorical": _CategoricalEncoder,
    "multiclass": _MulticlassEncoder,
    "numeric": _NumericEncoder,
    "article_age": _ArticleAgeEncoder,
}


def _build_encoder(cfg: Mapping):
    allowed = {"name", "kind", "column", "published_column", "impression_column"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ValueError(f"unknown feature config keys: {sorted(unknown)}")
    name = cfg.get("name")
    kind = cfg.get("kind")
    if not name:
        raise ValueError("feature config needs a name")
    if kind not in FEATURE_KINDS:
        raise ValueError(f"feature {name!r} has unknown kind {kind!r}")
    if kind == "article_age":
        pub = cfg.get("published_column")
        imp = cfg.get("impression_column")
        if not pub or not imp:
            raise ValueError(
                f"article_age feature {name!r} needs published_column and impression_column"
            )
        return _ArticleAgeEncoder(pub, imp)
    return _ENCODERS[kind](cfg.get("column", name))


class Fuzzifier(BaseEstimator, TransformerMixin):
    """Transforms rows (mappings of column -> raw value) into atom memberships.

    features is a sequence of configs, each a mapping with keys name, kind and
    column (column defaults to name); article_age features take published_column
    and impression_column instead. Atom order follows the feature config order,
    with each feature's bins in its encoder's deterministic order.
    """

    def __init__(self, features=()):
        self.features = features

    def _check_fitted(self) -> None:
        if not hasattr(self, "vocabulary_"):
            raise NotFittedError("Fuzzifier is not fitted; call fit first")

    def fit(self, X: Sequence[Mapping], y=None) -> "Fuzzifier":
        configs = list(self.features)
        if not configs:
            raise ValueError("at least one feature must be configured")
        names = [cfg.get("name") for cfg in configs]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        rows = list(X)
        encoders = []
        for cfg in configs:
            enc = _build_encoder(cfg)
            enc.fit(rows)
            encoders.append((str(cfg["name"]), enc))
        atoms = []
        for name, enc in encoders:
            if not enc.bins:
                raise ValueError(f"feature {name!r} produced no atoms")
            for b in enc.bins:
                atoms.append(AtomInfo(name, str(b), enc.kind))
        self.encoders_ = encoders
        self.vocabulary_ = AtomVocabulary(atoms)
        # Per-feature mean membership over observed rows, for imputation.
        means = []
        for name, enc in encoders:
            total = np.zeros(len(enc.bins))
            count = 0
            for row in rows:
                if enc.observed(row):
                    total += enc.encode(row)
                    count += 1
            if count == 0:
                raise ValueError(f"feature {name!r} never observed in the training rows")
            means.append(total / count)
        self.means_ = means
        return self

    def fuzzify_row(self, row: Mapping) -> np.ndarray:
        self._check_fitted()
        parts = []
        for (name, enc), mean in zip(self.encoders_, self.means_):
            parts.append(enc.encode(row) if enc.observed(row) else mean)
        return np.concatenate(parts)

    def transform(self, X: Sequence[Mapping]) -> np.ndarray:
        self._check_fitted()
        rows = list(X)
        out = np.empty((len(rows), len(self.vocabulary_)))
        for r, row in enumerate(rows):
            out[r] = self.fuzzify_row(row)
        return out

    def to_json(self) -> dict:
        self._check_fitted()
        return {
            "features": [dict(cfg) for cfg in self.features],
            "encoders": [
                {"name": name, "kind": enc.kind, "state": enc.state_json()}
                for name, enc in self.encoders_
            ],
            "means": [list(map(float, m)) for m in self.means_],
            "atoms": self.vocabulary_.to_json(),
        }

    @classmethod
    def from_json(cls, data) -> "Fuzzifier":
        fz = cls(features=[dict(cfg) for cfg in data["features"]])
        encoders = []
        for entry in data["encoders"]:
            enc_cls = _ENCODERS[entry["kind"]]
            encoders.append((str(entry["name"]), enc_cls.from_state(entry["state"])))
        fz.encoders_ = encoders
        fz.vocabulary_ = AtomVocabulary.from_json(data["atoms"])
        fz.means_ = [np.asarray(m, dtype=np.float64) for m in data["means"]]
        return fz
