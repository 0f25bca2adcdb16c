"""Serializers for rule, metric and sweep artifacts.

The CLI file writers and the HTTP endpoints both go through these functions,
so a downloaded artifact and the corresponding API response are byte-equal.
"""
from __future__ import annotations

from .metrics import MetricReport, SweepRow
from .network import NetworkState
from .rules import (
    Const,
    extract_rule,
    extract_weighted_rules,
    render,
    rule_complexity,
    rule_to_json,
    simplify,
)
from .training import EpochStats

__all__ = ["rule_doc", "sweep_doc", "sweep_csv", "metrics_doc", "history_csv"]


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rule_doc(state: NetworkState, vocab, threshold: float, mode: str = "full") -> dict:
    """Extraction result at one threshold.

    full mode reports the single network rule; weighted mode reports the
    output node's clauses with their weight magnitudes, heaviest first.
    rc_raw counts operators in the raw extracted rule; complexity and text
    describe the simplified display form.
    """
    if mode == "full":
        raw = extract_rule(state, threshold)
        simp = simplify(raw, vocab)
        return {
            "mode": "full",
            "threshold": float(threshold),
            "rc_raw": rule_complexity(raw),
            "complexity": rule_complexity(simp),
            "text": render(simp, vocab),
            "constant": isinstance(simp, Const),
            "constant_value": simp.value if isinstance(simp, Const) else None,
            "ast": rule_to_json(simp, vocab),
        }
    if mode == "weighted":
        entries = []
        for wr in extract_weighted_rules(state, threshold):
            simp = simplify(wr.rule, vocab)
            entries.append(
                {
                    "weight": wr.weight,
                    "text": render(simp, vocab),
                    "complexity": rule_complexity(simp),
                    "constant": isinstance(simp, Const),
                    "ast": rule_to_json(simp, vocab),
                }
            )
        return {"mode": "weighted", "threshold": float(threshold), "rules": entries}
    raise ValueError(f"unknown extraction mode {mode!r}")


def metrics_doc(stable: MetricReport, expected: MetricReport) -> dict:
    """Dual-tie-handling metric report."""
    return {"stable": stable.to_json(), "expected": expected.to_json()}


def sweep_doc(rows: list[SweepRow], max_abs_output_weight: float) -> dict:
    return {
        "max_abs_output_weight": max_abs_output_weight,
        "rows": [r.to_json() for r in rows],
    }


SWEEP_CSV_HEADER = "threshold,auc,mrr,ndcg5,ndcg10,rc,tau_b"


def sweep_csv(rows: list[SweepRow]) -> str:
    """Sweep summary table.

    auc is tie-invariant; mrr/ndcg use the expected value under random tie
    breaking; undefined values (tau_b on a constant side, metrics with
    nothing to evaluate) are empty cells.
    """
    lines = [SWEEP_CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                [
                    _csv_cell(r.threshold),
                    _csv_cell(r.expected.auc),
                    _csv_cell(r.expected.mrr),
                    _csv_cell(r.expected.ndcg5),
                    _csv_cell(r.expected.ndcg10),
                    _csv_cell(r.rc),
                    _csv_cell(r.tau_b),
                ]
            )
        )
    return "\n".join(lines) + "\n"


HISTORY_CSV_HEADER = "epoch,loss_total,loss_data,penalty_l1,penalty_dso,n_rows,auc"


def history_csv(history: list[EpochStats]) -> str:
    lines = [HISTORY_CSV_HEADER]
    for h in history:
        lines.append(
            ",".join(
                [
                    _csv_cell(h.epoch),
                    _csv_cell(h.loss_total),
                    _csv_cell(h.loss_data),
                    _csv_cell(h.penalty_l1),
                    _csv_cell(h.penalty_dso),
                    _csv_cell(h.n_rows),
                    _csv_cell(h.auc),
                ]
            )
        )
    return "\n".join(lines) + "\n"
