"""Crisp boolean rules extracted from a trained network.

Thresholding the weight magnitudes at t turns each node into a boolean
clause: connections with |w| <= t are dropped, surviving connections carry
their child clause (negated when w < 0), and the node combines the survivors
with its layer connective. A node that loses every connection has the fuzzy
value of its connective's identity (AND -> true, OR -> false); that constant
must propagate upward, because an identity constant of one kind is the
absorbing element of the other kind and layers alternate. Extraction
therefore folds constants on the fly: absorbing children collapse the parent
to a constant, identity children are dropped, and a parent left with a single
child becomes that child. The result is exactly equivalent to the network
under crisp weights and crisp inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .logic import LayerKind
from .network import NetworkState
from .validation import check_threshold

__all__ = [
    "Atom",
    "Span",
    "Not",
    "And",
    "Or",
    "Const",
    "RuleNode",
    "WeightedRule",
    "extract_rule",
    "extract_weighted_rules",
    "rule_complexity",
    "eval_rule",
    "eval_rule_batch",
    "simplify",
    "negate",
    "render",
    "parse_rule",
    "rule_to_json",
    "rule_from_json",
]


@dataclass(frozen=True)
class Atom:
    """Leaf referencing one input atom by index."""

    index: int


@dataclass(frozen=True)
class Span:
    """Disjunction of consecutive bins of one binned feature, shown as a range.

    Purely presentational: truth value is the OR of the member atoms. Produced
    by simplify() when merging adjacent article-age bins; label is the merged
    display name.
    """

    indices: tuple[int, ...]
    label: str


@dataclass(frozen=True)
class Not:
    child: "RuleNode"


@dataclass(frozen=True)
class And:
    children: tuple["RuleNode", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["RuleNode", ...]


@dataclass(frozen=True)
class Const:
    value: bool


RuleNode = Union[Atom, Span, Not, And, Or, Const]

TRUE = Const(True)
FALSE = Const(False)


@dataclass(frozen=True)
class WeightedRule:
    """A clause feeding the output node, tagged with its weight magnitude."""

    weight: float
    rule: RuleNode


def negate(node: RuleNode) -> RuleNode:
    """Logical negation, folding constants and double negation."""
    if isinstance(node, Const):
        return Const(not node.value)
    if isinstance(node, Not):
        return node.child
    return Not(node)


def _combine(kind: LayerKind, children: list[RuleNode]) -> RuleNode:
    """Join children under one connective with constant folding."""
    absorber = FALSE if kind is LayerKind.AND else TRUE
    identity = TRUE if kind is LayerKind.AND else FALSE
    kept: list[RuleNode] = []
    for child in children:
        if child == absorber:
            return absorber
        if child == identity:
            continue
        kept.append(child)
    if not kept:
        return identity
    if len(kept) == 1:
        return kept[0]
    return And(tuple(kept)) if kind is LayerKind.AND else Or(tuple(kept))


def _clause_layers(state: NetworkState, threshold: float, n_layers: int) -> list[RuleNode]:
    """Clauses for the nodes of layer n_layers, built bottom-up."""
    weights = state.weights()
    kinds = state.spec.layer_kinds()
    clauses: list[RuleNode] = [Atom(i) for i in range(state.spec.n_atoms)]
    for w, kind in zip(weights[:n_layers], kinds[:n_layers]):
        nxt: list[RuleNode] = []
        for j in range(w.shape[0]):
            children = []
            for i in range(w.shape[1]):
                if abs(w[j, i]) > threshold:
                    child = clauses[i]
                    children.append(negate(child) if w[j, i] < 0.0 else child)
            nxt.append(_combine(kind, children))
        clauses = nxt
    return clauses


def extract_rule(state: NetworkState, threshold: float) -> RuleNode:
    """Crisp rule of the whole network at |w| > threshold."""
    t = check_threshold(threshold)
    return _clause_layers(state, t, state.spec.n_layers)[0]


def extract_weighted_rules(state: NetworkState, threshold: float) -> list[WeightedRule]:
    """Per-connection clauses at the output node, heaviest first.

    Clauses are built through layer L-1; each surviving output connection
    contributes one entry with weight |w|, negated when w < 0. Ties keep
    the connection order; duplicates are preserved.
    """
    t = check_threshold(threshold)
    spec = state.spec
    clauses = _clause_layers(state, t, spec.n_layers - 1)
    w_out = state.weights()[-1][0]
    entries = []
    for i, w in enumerate(w_out):
        if abs(w) > t:
            rule = negate(clauses[i]) if w < 0.0 else clauses[i]
            entries.append((-abs(w), i, WeightedRule(float(abs(w)), rule)))
    entries.sort(key=lambda e: (e[0], e[1]))
    return [e[2] for e in entries]


def rule_complexity(rule: RuleNode) -> int:
    """Operator count: a k-ary clause costs k - 1, each negation costs 1."""
    if isinstance(rule, (Atom, Span, Const)):
        return 0
    if isinstance(rule, Not):
        return 1 + rule_complexity(rule.child)
    return (len(rule.children) - 1) + sum(rule_complexity(c) for c in rule.children)


def eval_rule(rule: RuleNode, atoms) -> bool:
    """Evaluate one crisp assignment; fractional values binarize at >= 0.5."""
    return bool(eval_rule_batch(rule, np.asarray(atoms, dtype=np.float64)[None, :])[0])


def eval_rule_batch(rule: RuleNode, atoms: np.ndarray) -> np.ndarray:
    """Evaluate a rule over a (batch, n_atoms) matrix; returns a bool vector."""
    x = np.asarray(atoms, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected a 2-d atom matrix, got ndim={x.ndim}")
    vals = x >= 0.5
    n = vals.shape[1]

    def rec(node: RuleNode) -> np.ndarray:
        if isinstance(node, Atom):
            if not (0 <= node.index < n):
                raise IndexError(f"atom index {node.index} out of range for {n} atoms")
            return vals[:, node.index]
        if isinstance(node, Span):
            bad = [i for i in node.indices if not (0 <= i < n)]
            if bad:
                raise IndexError(f"atom index {bad[0]} out of range for {n} atoms")
            return vals[:, list(node.indices)].any(axis=1)
        if isinstance(node, Const):
            return np.full(vals.shape[0], node.value, dtype=bool)
        if isinstance(node, Not):
            return ~rec(node.child)
        parts = [rec(c) for c in node.children]
        stacked = np.stack(parts, axis=1)
        return stacked.all(axis=1) if isinstance(node, And) else stacked.any(axis=1)

    return rec(rule)


def _flatten(node: RuleNode) -> list[RuleNode]:
    """Children of an And/Or with same-kind grandchildren spliced in."""
    out: list[RuleNode] = []
    for child in node.children:  # type: ignore[union-attr]
        if type(child) is type(node):
            out.extend(_flatten(child))
        else:
            out.append(child)
    return out


def _merge_age_spans(kids: list[RuleNode], kind: LayerKind, vocab) -> list[RuleNode]:
    """Merge runs of consecutive article-age literals into Span nodes.

    In an Or, positive age atoms merge into a Span; in an And, negated age
    atoms merge into Not(Span) (both rewrites preserve truth by De Morgan).
    Only runs of length >= 2 over adjacent bins of the same feature merge.
    """
    wrap_not = kind is LayerKind.AND
    # literal position in kids -> (feature, bin position) for eligible literals
    eligible: dict[int, tuple[str, int]] = {}
    for pos, node in enumerate(kids):
        atom = None
        if wrap_not and isinstance(node, Not) and isinstance(node.child, Atom):
            atom = node.child
        elif not wrap_not and isinstance(node, Atom):
            atom = node
        if atom is None:
            continue
        info = vocab.atom_info(atom.index)
        if info.kind != "article_age":
            continue
        eligible[pos] = (info.feature, vocab.bin_position(atom.index))

    by_feature: dict[str, list[tuple[int, int]]] = {}
    for pos, (feature, bin_pos) in eligible.items():
        by_feature.setdefault(feature, []).append((bin_pos, pos))

    drop: set[int] = set()
    replace: dict[int, RuleNode] = {}
    for feature, members in by_feature.items():
        members.sort()
        run: list[tuple[int, int]] = []
        for item in members + [(10**9, -1)]:  # sentinel flushes the last run
            if run and item[0] != run[-1][0] + 1:
                if len(run) >= 2:
                    indices = tuple(vocab.atom_at(feature, bp) for bp, _ in run)
                    label = vocab.span_label(feature, run[0][0], run[-1][0])
                    span: RuleNode = Span(indices, label)
                    if wrap_not:
                        span = Not(span)
                    first = min(pos for _, pos in run)
                    replace[first] = span
                    drop.update(pos for _, pos in run if pos != first)
                run = []
            if run and item[0] == run[-1][0]:
                continue  # duplicate bin (deduped earlier, defensive)
            run.append(item)
    out = []
    for pos, node in enumerate(kids):
        if pos in drop:
            continue
        out.append(replace.get(pos, node))
    return out


def simplify(rule: RuleNode, vocab=None) -> RuleNode:
    """Cosmetic cleanup preserving truth on every assignment.

    Folds constants and double negation, flattens nested same-kind clauses,
    drops duplicate children, collapses clauses containing a literal and its
    negation, and (when a vocabulary is given) merges adjacent article-age
    bins into range spans.
    """
    if isinstance(rule, (Atom, Span, Const)):
        return rule
    if isinstance(rule, Not):
        return negate(simplify(rule.child, vocab))
    kind = LayerKind.AND if isinstance(rule, And) else LayerKind.OR
    simplified = type(rule)(tuple(simplify(c, vocab) for c in rule.children))
    kids: list[RuleNode] = []
    seen: set[RuleNode] = set()
    for child in _flatten(simplified):
        if child in seen:
            continue
        seen.add(child)
        kids.append(child)
    # complementary pair -> absorbing constant
    for child in kids:
        if negate(child) in seen:
            return FALSE if kind is LayerKind.AND else TRUE
    if vocab is not None:
        kids = _merge_age_spans(kids, kind, vocab)
    return _combine(kind, kids)


def render(rule: RuleNode, names=None) -> str:
    """Human readable form using unicode connectives.

    names maps atom index -> display name; by default atoms render as a0, a1,
    etc. Spans render by their stored label. Nested clauses and negated
    clauses are parenthesized; negated leaves are not.
    """
    if names is not None and hasattr(names, "names"):
        names = names.names

    def name_of(i: int) -> str:
        if names is None:
            return f"a{i}"
        return names[i]

    def rec(node: RuleNode, parent: str) -> str:
        if isinstance(node, Atom):
            return name_of(node.index)
        if isinstance(node, Span):
            return node.label
        if isinstance(node, Const):
            return "TRUE" if node.value else "FALSE"
        if isinstance(node, Not):
            if isinstance(node.child, (Atom, Span)):
                return f"¬{rec(node.child, 'not')}"
            return f"¬({rec(node.child, 'top')})"
        op = " ∧ " if isinstance(node, And) else " ∨ "
        body = op.join(rec(c, "clause") for c in node.children)
        if parent in ("clause", "not"):
            return f"({body})"
        return body

    return rec(rule, "top")


class _Tokens:
    def __init__(self, text: str):
        self.items: list[str] = []
        buf = []
        for ch in text:
            if ch in "()∧∨¬":
                if buf:
                    self.items.append("".join(buf))
                    buf = []
                self.items.append(ch)
            elif ch.isspace():
                if buf:
                    self.items.append("".join(buf))
                    buf = []
            else:
                buf.append(ch)
        if buf:
            self.items.append("".join(buf))
        self.pos = 0

    def peek(self) -> str | None:
        return self.items[self.pos] if self.pos < len(self.items) else None

    def next(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ValueError("unexpected end of rule text")
        self.pos += 1
        return tok


def parse_rule(text: str, names) -> RuleNode:
    """Inverse of render() for rules without spans.

    names is an atom-name sequence (or a vocabulary); unknown names raise
    ValueError. Operator precedence: ¬ binds tightest, then ∧, then ∨.
    """
    if hasattr(names, "names"):
        names = names.names
    index_of = {name: i for i, name in enumerate(names)}
    toks = _Tokens(text)

    def parse_unit() -> RuleNode:
        tok = toks.next()
        if tok == "(":
            node = parse_or()
            if toks.next() != ")":
                raise ValueError("expected ')'")
            return node
        if tok == "¬":
            return negate(parse_unit())
        if tok == "TRUE":
            return TRUE
        if tok == "FALSE":
            return FALSE
        if tok in ("∧", "∨", ")"):
            raise ValueError(f"unexpected token {tok!r}")
        if tok not in index_of:
            raise ValueError(f"unknown atom name {tok!r}")
        return Atom(index_of[tok])

    def parse_and() -> RuleNode:
        parts = [parse_unit()]
        while toks.peek() == "∧":
            toks.next()
            parts.append(parse_unit())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def parse_or() -> RuleNode:
        parts = [parse_and()]
        while toks.peek() == "∨":
            toks.next()
            parts.append(parse_and())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    node = parse_or()
    if toks.peek() is not None:
        raise ValueError(f"trailing tokens starting at {toks.peek()!r}")
    return node


def rule_to_json(rule: RuleNode, names=None):
    """JSON-friendly dict tree for a rule."""
    if names is not None and hasattr(names, "names"):
        names = names.names
    if isinstance(rule, Atom):
        d = {"op": "atom", "index": rule.index}
        if names is not None:
            d["name"] = names[rule.index]
        return d
    if isinstance(rule, Span):
        return {"op": "span", "indices": list(rule.indices), "label": rule.label}
    if isinstance(rule, Const):
        return {"op": "const", "value": rule.value}
    if isinstance(rule, Not):
        return {"op": "not", "child": rule_to_json(rule.child, names)}
    op = "and" if isinstance(rule, And) else "or"
    return {"op": op, "children": [rule_to_json(c, names) for c in rule.children]}


def rule_from_json(data) -> RuleNode:
    op = data.get("op")
    if op == "atom":
        return Atom(int(data["index"]))
    if op == "span":
        return Span(tuple(int(i) for i in data["indices"]), str(data["label"]))
    if op == "const":
        return Const(bool(data["value"]))
    if op == "not":
        return Not(rule_from_json(data["child"]))
    if op == "and":
        return And(tuple(rule_from_json(c) for c in data["children"]))
    if op == "or":
        return Or(tuple(rule_from_json(c) for c in data["children"]))
    raise ValueError(f"unknown rule node op {op!r}")
