"""Ranking metrics grouped by impression, rank correlation and threshold sweeps.

Candidates are ranked per impression by descending score, ties broken by the
stable candidate order. Because a crisp rule scores every candidate 0 or 1,
tie handling dominates its ranking metrics; reports therefore carry both the
stable-order value and an expected value estimated by averaging the metric
over seeded random shuffles of the candidate order. AUC uses tie-averaged
ranks and is invariant to candidate order, so it has a single value.

Per-impression skips are explicit: AUC skips impressions whose labels are all
equal; MRR/nDCG skip impressions with no positive. evaluated + skipped always
equals the impression count.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import NetworkState, forward_activations
from .rules import extract_rule, eval_rule_batch, rule_complexity, simplify, render, Const
from .validation import check_unit_matrix

__all__ = [
    "impression_auc",
    "impression_mrr",
    "impression_ndcg",
    "kendall_tau_b",
    "MetricReport",
    "ranking_report",
    "score_network",
    "grouped_scores_auc",
    "SweepRow",
    "threshold_sweep",
    "DEFAULT_THRESHOLDS",
    "TIE_SHUFFLES",
]

TIE_SHUFFLES = 20

DEFAULT_THRESHOLDS = tuple(round(0.05 * i, 2) for i in range(20))  # 0.00 .. 0.95


def _average_ranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks in ascending score order; ties get the mean rank."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def impression_auc(labels, scores) -> float | None:
    """Tie-averaged ROC-AUC of one impression; None if labels are one-class."""
    y = np.asarray(labels, dtype=np.float64)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = _average_ranks(s)
    pos_rank_sum = ranks[y == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def _ranked_labels(labels: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Labels sorted by descending score, ties keeping candidate order."""
    order = np.argsort(-scores, kind="stable")
    return labels[order]


def impression_mrr(labels, scores) -> float | None:
    """Reciprocal rank of the first positive; None without positives."""
    y = np.asarray(labels, dtype=np.float64)
    s = np.asarray(scores, dtype=np.float64)
    if not np.any(y == 1):
        return None
    ranked = _ranked_labels(y, s)
    first = int(np.flatnonzero(ranked == 1)[0])
    return 1.0 / (first + 1)


def impression_ndcg(labels, scores, k: int) -> float | None:
    """Binary nDCG@k with 1/log2(rank+1) gains; None without positives."""
    y = np.asarray(labels, dtype=np.float64)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int((y == 1).sum())
    if n_pos == 0:
        return None
    ranked = _ranked_labels(y, s)[:k]
    discounts = 1.0 / np.log2(np.arange(2, ranked.size + 2))
    dcg = float((ranked * discounts).sum())
    ideal = 1.0 / np.log2(np.arange(2, min(k, n_pos) + 2))
    return dcg / float(ideal.sum())


def _count_inversions(values: np.ndarray) -> int:
    """Strict inversions (i < j, values[i] > values[j]) via a Fenwick tree."""
    if values.size < 2:
        return 0
    ranks = np.searchsorted(np.unique(values), values) + 1
    size = int(ranks.max())
    tree = [0] * (size + 1)
    inv = 0
    seen = 0
    for r in ranks:
        i = r  # count seen values <= r
        le = 0
        while i > 0:
            le += tree[i]
            i -= i & (-i)
        inv += seen - le
        seen += 1
        i = r
        while i <= size:
            tree[i] += 1
            i += i & (-i)
    return inv


def _tie_pairs(sorted_values: np.ndarray) -> int:
    """Sum of t*(t-1)/2 over the tie groups of a sorted array."""
    if sorted_values.size == 0:
        return 0
    change = np.flatnonzero(sorted_values[1:] != sorted_values[:-1])
    bounds = np.concatenate([[0], change + 1, [sorted_values.size]])
    sizes = np.diff(bounds)
    return int((sizes * (sizes - 1) // 2).sum())


def kendall_tau_b(a, b) -> float | None:
    """Tie-corrected Kendall rank correlation.

    Returns None when either sequence is constant (a denominator factor is
    zero, so the coefficient is undefined). O(n log n): after sorting by
    (a, b), discordant pairs are strict inversions of b.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("kendall_tau_b expects two equal-length vectors")
    n = x.size
    if n < 2:
        return None
    total = n * (n - 1) // 2
    order = np.lexsort((y, x))
    xs, ys = x[order], y[order]
    ties_x = _tie_pairs(xs)
    ties_y = _tie_pairs(np.sort(y))
    # joint ties: groups where both x and y repeat
    joint = np.flatnonzero((xs[1:] != xs[:-1]) | (ys[1:] != ys[:-1]))
    bounds = np.concatenate([[0], joint + 1, [n]])
    sizes = np.diff(bounds)
    ties_xy = int((sizes * (sizes - 1) // 2).sum())
    discordant = _count_inversions(ys)
    con_minus_dis = total - ties_x - ties_y + ties_xy - 2 * discordant
    denom_x = total - ties_x
    denom_y = total - ties_y
    if denom_x == 0 or denom_y == 0:
        return None
    return float(con_minus_dis / np.sqrt(float(denom_x) * float(denom_y)))


@dataclass
class MetricReport:
    """Grouped ranking metrics with explicit skip accounting."""

    auc: float | None
    mrr: float | None
    ndcg5: float | None
    ndcg10: float | None
    n_impressions: int
    auc_evaluated: int
    auc_skipped: int
    rank_evaluated: int
    rank_skipped: int

    def to_json(self) -> dict:
        return {
            "auc": self.auc,
            "mrr": self.mrr,
            "ndcg5": self.ndcg5,
            "ndcg10": self.ndcg10,
            "n_impressions": self.n_impressions,
            "auc_evaluated": self.auc_evaluated,
            "auc_skipped": self.auc_skipped,
            "rank_evaluated": self.rank_evaluated,
            "rank_skipped": self.rank_skipped,
        }


def _mean_or_none(values: list[float]) -> float | None:
    return float(np.mean(values)) if values else None


def ranking_report(
    labels: np.ndarray,
    scores: np.ndarray,
    slices,
    tie_shuffles: int = 0,
    shuffle_seed: int = 0,
) -> MetricReport:
    """Mean per-impression metrics over a split.

    slices is a sequence of (start, end) row ranges, one per impression.
    With tie_shuffles > 0, MRR/nDCG are averaged over that many seeded random
    permutations of each impression's candidate order (the expected value
    under random tie-breaking); AUC is order-invariant and never shuffled.
    """
    labels = np.asarray(labels, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    slices = list(slices)
    aucs: list[float] = []
    mrrs: list[float] = []
    ndcg5s: list[float] = []
    ndcg10s: list[float] = []
    auc_skipped = 0
    rank_skipped = 0
    rng = np.random.default_rng(np.random.SeedSequence([shuffle_seed, 97]))
    for start, end in slices:
        y = labels[start:end]
        s = scores[start:end]
        a = impression_auc(y, s)
        if a is None:
            auc_skipped += 1
        else:
            aucs.append(a)
        if not np.any(y == 1):
            rank_skipped += 1
            continue
        if tie_shuffles > 0:
            m_vals, n5_vals, n10_vals = [], [], []
            for _ in range(tie_shuffles):
                perm = rng.permutation(y.size)
                m_vals.append(impression_mrr(y[perm], s[perm]))
                n5_vals.append(impression_ndcg(y[perm], s[perm], 5))
                n10_vals.append(impression_ndcg(y[perm], s[perm], 10))
            mrrs.append(float(np.mean(m_vals)))
            ndcg5s.append(float(np.mean(n5_vals)))
            ndcg10s.append(float(np.mean(n10_vals)))
        else:
            mrrs.append(impression_mrr(y, s))
            ndcg5s.append(impression_ndcg(y, s, 5))
            ndcg10s.append(impression_ndcg(y, s, 10))
    return MetricReport(
        auc=_mean_or_none(aucs),
        mrr=_mean_or_none(mrrs),
        ndcg5=_mean_or_none(ndcg5s),
        ndcg10=_mean_or_none(ndcg10s),
        n_impressions=len(slices),
        auc_evaluated=len(aucs),
        auc_skipped=auc_skipped,
        rank_evaluated=len(mrrs),
        rank_skipped=rank_skipped,
    )


def score_network(state: NetworkState, x: np.ndarray) -> np.ndarray:
    """Network scores for fuzzified rows."""
    x = check_unit_matrix(x, state.spec.n_atoms)
    return forward_activations(x, state)[-1][:, 0]


def grouped_scores_auc(state: NetworkState, x, y, slices) -> float | None:
    """Mean per-impression AUC of the network on a split (for history rows)."""
    scores = score_network(state, np.asarray(x, dtype=np.float64))
    report = ranking_report(np.asarray(y, dtype=np.float64), scores, slices)
    return report.auc


@dataclass
class SweepRow:
    """Rule-vs-model evaluation at one extraction threshold."""

    threshold: float
    rc: int
    tau_b: float | None
    constant: bool
    constant_value: bool | None
    stable: MetricReport
    expected: MetricReport
    rule_text: str = ""

    def to_json(self) -> dict:
        return {
            "threshold": self.threshold,
            "rc": self.rc,
            "tau_b": self.tau_b,
            "constant": self.constant,
            "constant_value": self.constant_value,
            "stable": self.stable.to_json(),
            "expected": self.expected.to_json(),
            "rule_text": self.rule_text,
        }


def threshold_sweep(
    state: NetworkState,
    x: np.ndarray,
    labels: np.ndarray,
    slices,
    thresholds=DEFAULT_THRESHOLDS,
    vocab=None,
    tie_shuffles: int = TIE_SHUFFLES,
    shuffle_seed: int = 0,
) -> list[SweepRow]:
    """Extract the crisp rule at each threshold and score it as a ranker.

    rc is the operator count of the raw extracted rule; tau_b correlates the
    rule's 0/1 candidate scores with the network's fuzzy scores over the whole
    split (None when one side is constant, which the constant flag explains).
    rule_text is the simplified rendering for display.
    """
    x = check_unit_matrix(x, state.spec.n_atoms)
    labels = np.asarray(labels, dtype=np.float64)
    model_scores = score_network(state, x)
    rows: list[SweepRow] = []
    for t in thresholds:
        rule = extract_rule(state, t)
        rc = rule_complexity(rule)
        outs = eval_rule_batch(rule, x).astype(np.float64)
        tau = kendall_tau_b(model_scores, outs)
        constant = bool(outs.size == 0 or np.all(outs == outs[0]))
        constant_value = bool(outs[0]) if constant and outs.size else None
        simplified = simplify(rule, vocab)
        if isinstance(simplified, Const):
            constant = True
            constant_value = simplified.value
        stable = ranking_report(labels, outs, slices)
        expected = ranking_report(
            labels, outs, slices, tie_shuffles=tie_shuffles, shuffle_seed=shuffle_seed
        )
        rows.append(
            SweepRow(
                threshold=float(t),
                rc=rc,
                tau_b=tau,
                constant=constant,
                constant_value=constant_value,
                stable=stable,
                expected=expected,
                rule_text=render(simplified, vocab),
            )
        )
    return rows
