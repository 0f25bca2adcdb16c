"""Click-log dataset handling: TSV tables, schema, splits and synthesis.

A dataset is three tab-separated tables with header rows: users, articles and
behaviors. The behaviors table holds one impression per row with a timestamp
and a candidate list of space-separated "articleId-label" tokens (label 1 for
a click). A JSON schema names the id/timestamp/candidate columns and declares
the feature columns with their kinds.

Malformed rows are collected per table; loading aborts when more than 1% of a
table's data rows are malformed. Duplicate ids keep the last row and are
counted as warnings.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .fuzzify import parse_timestamp
from .rules import RuleNode, eval_rule_batch, render, rule_to_json

__all__ = [
    "DatasetSchema",
    "Impression",
    "Dataset",
    "SplitFrame",
    "load_dataset",
    "temporal_split",
    "assemble_split",
    "SyntheticConfig",
    "synthesize",
    "write_dataset",
    "IMPRESSION_TS_COLUMN",
]

MALFORMED_LIMIT = 0.01

FEATURE_KINDS = ("categorical", "multiclass", "numeric")

# Internal column carrying the impression timestamp into candidate rows, so
# the article-age encoder can read both ends from one mapping.
IMPRESSION_TS_COLUMN = "__impression_ts__"


def _check_features(entries, where: str) -> list[dict]:
    out = []
    for entry in entries:
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: each feature must be an object")
        unknown = set(entry) - {"name", "kind", "column"}
        if unknown:
            raise ConfigError(f"{where}: unknown feature keys {sorted(unknown)}")
        name = entry.get("name")
        kind = entry.get("kind")
        if not name or not isinstance(name, str):
            raise ConfigError(f"{where}: feature needs a string name")
        if kind not in FEATURE_KINDS:
            raise ConfigError(f"{where}: feature {name!r} has invalid kind {kind!r}")
        out.append({"name": name, "kind": kind, "column": entry.get("column", name)})
    return out


@dataclass(frozen=True)
class DatasetSchema:
    """Column layout of the three tables plus the feature declarations."""

    user_id: str
    user_features: tuple[dict, ...]
    article_id: str
    article_features: tuple[dict, ...]
    article_published: str | None
    impression_id: str
    behaviors_user: str
    behaviors_time: str
    behaviors_candidates: str
    article_age: bool

    @classmethod
    def from_json(cls, data) -> "DatasetSchema":
        if not isinstance(data, dict):
            raise ConfigError("schema must be a JSON object")
        unknown = set(data) - {"users", "articles", "behaviors", "article_age"}
        if unknown:
            raise ConfigError(f"schema: unknown keys {sorted(unknown)}")
        try:
            users = data["users"]
            articles = data["articles"]
            behaviors = data["behaviors"]
        except KeyError as missing:
            raise ConfigError(f"schema: missing section {missing}") from None
        for section, allowed in (
            (users, {"id", "features"}),
            (articles, {"id", "features", "published"}),
            (behaviors, {"impression_id", "user_id", "timestamp", "candidates"}),
        ):
            if not isinstance(section, dict):
                raise ConfigError("schema sections must be objects")
            bad = set(section) - allowed
            if bad:
                raise ConfigError(f"schema: unknown keys {sorted(bad)}")
        age = bool(data.get("article_age", False))
        published = articles.get("published")
        if age and not published:
            raise ConfigError("schema: article_age requires articles.published")
        try:
            return cls(
                user_id=str(users["id"]),
                user_features=tuple(_check_features(users.get("features", []), "users")),
                article_id=str(articles["id"]),
                article_features=tuple(
                    _check_features(articles.get("features", []), "articles")
                ),
                article_published=str(published) if published else None,
                impression_id=str(behaviors["impression_id"]),
                behaviors_user=str(behaviors["user_id"]),
                behaviors_time=str(behaviors["timestamp"]),
                behaviors_candidates=str(behaviors["candidates"]),
                article_age=age,
            )
        except KeyError as missing:
            raise ConfigError(f"schema: missing column name {missing}") from None

    def to_json(self) -> dict:
        articles: dict = {
            "id": self.article_id,
            "features": [dict(f) for f in self.article_features],
        }
        if self.article_published:
            articles["published"] = self.article_published
        return {
            "users": {"id": self.user_id, "features": [dict(f) for f in self.user_features]},
            "articles": articles,
            "behaviors": {
                "impression_id": self.impression_id,
                "user_id": self.behaviors_user,
                "timestamp": self.behaviors_time,
                "candidates": self.behaviors_candidates,
            },
            "article_age": self.article_age,
        }

    def fuzzifier_features(self) -> list[dict]:
        """Feature configs for the Fuzzifier, in deterministic order."""
        feats = [dict(f) for f in self.user_features]
        feats += [dict(f) for f in self.article_features]
        if self.article_age:
            feats.append(
                {
                    "name": "article_age",
                    "kind": "article_age",
                    "published_column": self.article_published,
                    "impression_column": IMPRESSION_TS_COLUMN,
                }
            )
        return feats


@dataclass
class Impression:
    impression_id: str
    user_id: str
    timestamp: int
    article_ids: list[str]
    labels: np.ndarray  # int8, aligned with article_ids


@dataclass
class Dataset:
    schema: DatasetSchema
    users: dict[str, dict]
    articles: dict[str, dict]
    impressions: list[Impression]
    warnings: dict[str, int] = field(default_factory=dict)


def _read_table(path: Path, required: list[str]) -> tuple[list[str], list[list[str]], int]:
    """Header, data rows with the right field count, and malformed count."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read table {path}: {exc}") from None
    with fh:
        reader = csv.reader(fh, delimiter="\t")
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty table, expected a header row") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise ConfigError(f"{path}: header is missing columns {missing}")
        rows = []
        malformed = 0
        for row in reader:
            if len(row) != len(header):
                malformed += 1
                continue
            rows.append(row)
    return header, rows, malformed


def _check_malformed(path: Path, malformed: int, total: int) -> None:
    if total > 0 and malformed / total > MALFORMED_LIMIT:
        raise DataError(
            f"{path}: {malformed} of {total} rows malformed, above the 1% limit"
        )


def _parse_candidates(cell: str) -> tuple[list[str], list[int]] | None:
    ids: list[str] = []
    labels: list[int] = []
    for token in cell.split():
        head, sep, tail = token.rpartition("-")
        if not sep or not head or tail not in ("0", "1"):
            return None
        ids.append(head)
        labels.append(int(tail))
    return ids, labels


def load_dataset(
    users_path, articles_path, behaviors_path, schema: DatasetSchema
) -> Dataset:
    """Load and cross-check the three tables.

    Impressions referencing unknown articles, with unparseable timestamps or
    candidate tokens, count as malformed behavior rows. Impressions with an
    empty candidate list are kept out of the impression list and counted.
    """
    warnings: dict[str, int] = {
        "duplicate_users": 0,
        "duplicate_articles": 0,
        "duplicate_impressions": 0,
        "malformed_users": 0,
        "malformed_articles": 0,
        "malformed_behaviors": 0,
        "empty_impressions": 0,
    }

    users_path, articles_path, behaviors_path = (
        Path(users_path),
        Path(articles_path),
        Path(behaviors_path),
    )
    u_cols = [schema.user_id] + [f["column"] for f in schema.user_features]
    header, rows, bad = _read_table(users_path, u_cols)
    users: dict[str, dict] = {}
    for row in rows:
        rec = dict(zip(header, row))
        uid = rec[schema.user_id]
        if uid in users:
            warnings["duplicate_users"] += 1
        users[uid] = rec
    warnings["malformed_users"] = bad
    _check_malformed(users_path, bad, bad + len(rows))

    a_cols = [schema.article_id] + [f["column"] for f in schema.article_features]
    if schema.article_published:
        a_cols.append(schema.article_published)
    header, rows, bad = _read_table(articles_path, a_cols)
    articles: dict[str, dict] = {}
    for row in rows:
        rec = dict(zip(header, row))
        aid = rec[schema.article_id]
        if aid in articles:
            warnings["duplicate_articles"] += 1
        articles[aid] = rec
    warnings["malformed_articles"] = bad
    _check_malformed(articles_path, bad, bad + len(rows))

    b_cols = [
        schema.impression_id,
        schema.behaviors_user,
        schema.behaviors_time,
        schema.behaviors_candidates,
    ]
    header, rows, field_bad = _read_table(behaviors_path, b_cols)
    total_behavior_rows = field_bad + len(rows)
    bad = field_bad
    impressions: list[Impression] = []
    seen_ids: dict[str, int] = {}
    for row in rows:
        rec = dict(zip(header, row))
        try:
            ts = parse_timestamp(rec[schema.behaviors_time])
        except ValueError:
            bad += 1
            continue
        parsed = _parse_candidates(rec[schema.behaviors_candidates])
        if parsed is None:
            bad += 1
            continue
        ids, labels = parsed
        if any(aid not in articles for aid in ids):
            bad += 1
            continue
        if not ids:
            warnings["empty_impressions"] += 1
            continue
        imp_id = rec[schema.impression_id]
        imp = Impression(
            impression_id=imp_id,
            user_id=rec[schema.behaviors_user],
            timestamp=ts,
            article_ids=ids,
            labels=np.asarray(labels, dtype=np.int8),
        )
        if imp_id in seen_ids:
            warnings["duplicate_impressions"] += 1
            impressions[seen_ids[imp_id]] = imp
        else:
            seen_ids[imp_id] = len(impressions)
            impressions.append(imp)
    warnings["malformed_behaviors"] = bad
    _check_malformed(behaviors_path, bad, total_behavior_rows)

    return Dataset(schema, users, articles, impressions, warnings)


def temporal_split(
    impressions: list[Impression], split_time
) -> tuple[list[Impression], list[Impression]]:
    """Impressions strictly before split_time train; the rest validate."""
    cut = parse_timestamp(split_time)
    train = [imp for imp in impressions if imp.timestamp < cut]
    val = [imp for imp in impressions if imp.timestamp >= cut]
    if not train or not val:
        raise ConfigError(
            f"temporal split at {split_time} leaves {len(train)} train and "
            f"{len(val)} validation impressions; both sides must be non-empty"
        )
    return train, val


@dataclass
class SplitFrame:
    """Candidate-level view of a set of impressions.

    rows[i] is the merged user/article feature mapping of candidate i (plus
    the impression timestamp column); labels[i] its click label. slices marks
    each impression's [start, end) row range; impression_ids has one id per
    row for grouping.
    """

    rows: list[dict]
    labels: np.ndarray
    slices: list[tuple[int, int]]
    impression_ids: np.ndarray


def assemble_split(dataset: Dataset, impressions: list[Impression]) -> SplitFrame:
    rows: list[dict] = []
    labels: list[int] = []
    slices: list[tuple[int, int]] = []
    ids: list[str] = []
    for imp in impressions:
        start = len(rows)
        user = dataset.users.get(imp.user_id, {})
        for aid, label in zip(imp.article_ids, imp.labels):
            row = dict(user)
            row.update(dataset.articles[aid])
            row[IMPRESSION_TS_COLUMN] = imp.timestamp
            rows.append(row)
            labels.append(int(label))
            ids.append(imp.impression_id)
        slices.append((start, len(rows)))
    return SplitFrame(
        rows=rows,
        labels=np.asarray(labels, dtype=np.float64),
        slices=slices,
        impression_ids=np.asarray(ids, dtype=object),
    )


@dataclass(frozen=True)
class SyntheticConfig:
    """Generator settings for a planted-rule click log.

    Articles carry n_atoms independent boolean flags (multiclass columns f0..
    fN holding "on" when set); a candidate's click label is the planted rule
    evaluated on its article's flags, flipped with probability click_noise.
    """

    planted_rule: RuleNode
    n_atoms: int
    n_impressions: int = 1000
    candidates_per_impression: int = 5
    n_users: int = 50
    n_articles: int = 400
    click_noise: float = 0.05
    atom_probability: float = 0.5
    seed: int = 0
    start_time: int = 1_700_000_000
    impression_step: int = 60

    def __post_init__(self) -> None:
        if self.n_atoms < 1 or self.n_impressions < 1 or self.candidates_per_impression < 1:
            raise ConfigError("synthetic sizes must be positive")
        if self.n_articles < self.candidates_per_impression:
            raise ConfigError("need at least candidates_per_impression articles")
        if not (0.0 <= self.click_noise < 0.5):
            raise ConfigError("click_noise must lie in [0, 0.5)")
        if not (0.0 < self.atom_probability < 1.0):
            raise ConfigError("atom_probability must lie in (0, 1)")


_REDRAW_ATTEMPTS = 20


def synthesize(config: SyntheticConfig) -> Dataset:
    """Deterministic synthetic dataset with a known generating rule.

    Each impression redraws its candidate set (and noise) up to 20 times
    until at least one positive label appears, keeping the last draw if
    none does.
    """
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 11]))
    flags = rng.random((config.n_articles, config.n_atoms)) < config.atom_probability
    # every flag must appear somewhere or its feature would have no category
    for col in np.flatnonzero(~flags.any(axis=0)):
        flags[rng.integers(config.n_articles), col] = True
    truths = eval_rule_batch(config.planted_rule, flags.astype(np.float64))

    schema = DatasetSchema.from_json(
        {
            "users": {"id": "user_id", "features": []},
            "articles": {
                "id": "article_id",
                "features": [
                    {"name": f"f{i}", "kind": "multiclass"} for i in range(config.n_atoms)
                ],
            },
            "behaviors": {
                "impression_id": "impression_id",
                "user_id": "user_id",
                "timestamp": "time",
                "candidates": "candidates",
            },
            "article_age": False,
        }
    )

    users = {f"U{u}": {"user_id": f"U{u}"} for u in range(config.n_users)}
    articles = {}
    for a in range(config.n_articles):
        rec = {"article_id": f"A{a}"}
        for i in range(config.n_atoms):
            rec[f"f{i}"] = "on" if flags[a, i] else ""
        articles[f"A{a}"] = rec

    impressions = []
    for n in range(config.n_impressions):
        for _ in range(_REDRAW_ATTEMPTS):
            picks = rng.choice(config.n_articles, size=config.candidates_per_impression, replace=False)
            flips = rng.random(config.candidates_per_impression) < config.click_noise
            labels = np.where(flips, ~truths[picks], truths[picks]).astype(np.int8)
            if labels.any():
                break
        impressions.append(
            Impression(
                impression_id=f"I{n}",
                user_id=f"U{n % config.n_users}",
                timestamp=config.start_time + n * config.impression_step,
                article_ids=[f"A{p}" for p in picks],
                labels=labels,
            )
        )
    return Dataset(schema, users, articles, impressions)


def write_dataset(dataset: Dataset, out_dir, ground_truth: RuleNode | None = None) -> None:
    """Write users/articles/behaviors TSVs plus schema.json (and ground truth)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema = dataset.schema

    u_cols = [schema.user_id] + [f["column"] for f in schema.user_features]
    with open(out / "users.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(u_cols)
        for rec in dataset.users.values():
            w.writerow([rec.get(c, "") for c in u_cols])

    a_cols = [schema.article_id] + [f["column"] for f in schema.article_features]
    if schema.article_published:
        a_cols.append(schema.article_published)
    with open(out / "articles.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(a_cols)
        for rec in dataset.articles.values():
            w.writerow([rec.get(c, "") for c in a_cols])

    b_cols = [
        schema.impression_id,
        schema.behaviors_user,
        schema.behaviors_time,
        schema.behaviors_candidates,
    ]
    with open(out / "behaviors.tsv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(b_cols)
        for imp in dataset.impressions:
            cands = " ".join(
                f"{aid}-{int(lb)}" for aid, lb in zip(imp.article_ids, imp.labels)
            )
            w.writerow([imp.impression_id, imp.user_id, imp.timestamp, cands])

    with open(out / "schema.json", "w", encoding="utf-8") as fh:
        json.dump(schema.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    if ground_truth is not None:
        doc = {"rule": rule_to_json(ground_truth), "text": render(ground_truth)}
        with open(out / "ground_truth.json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
