"""Independent reference implementations used to verify the package.

Everything here is deliberately written the slow, obvious way (pairwise
loops, exhaustive enumeration, finite differences) and shares no code with
the implementations under test.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from fuzzyrules.logic import LayerKind
from fuzzyrules.network import NetworkSpec, NetworkState
from fuzzyrules.rules import And, Atom, Const, Not, Or, RuleNode
from fuzzyrules.training import TrainConfig, total_loss


def pairwise_auc(labels, scores):
    """AUC as the pairwise win rate of positives over negatives, ties 0.5."""
    pos = [s for y, s in zip(labels, scores) if y == 1]
    neg = [s for y, s in zip(labels, scores) if y == 0]
    if not pos or not neg:
        return None
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def direct_mrr(labels, scores):
    """1 / rank of the first positive under stable descending sort."""
    if 1 not in list(labels):
        return None
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    for rank, i in enumerate(order, start=1):
        if labels[i] == 1:
            return 1.0 / rank
    return None


def direct_ndcg(labels, scores, k):
    """Binary nDCG@k by the textbook formula."""
    n_pos = sum(1 for y in labels if y == 1)
    if n_pos == 0:
        return None
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    dcg = 0.0
    for rank, i in enumerate(order[:k], start=1):
        if labels[i] == 1:
            dcg += 1.0 / math.log2(rank + 1)
    idcg = sum(1.0 / math.log2(r + 1) for r in range(1, min(k, n_pos) + 1))
    return dcg / idcg


def pairwise_tau_b(a, b):
    """Kendall tau-b by counting every pair."""
    n = len(a)
    if n < 2:
        return None
    concordant = discordant = ties_a = ties_b = 0
    for i in range(n):
        for j in range(i + 1, n):
            da = a[i] - a[j]
            db = b[i] - b[j]
            if da == 0 and db == 0:
                continue
            if da == 0:
                ties_a += 1
            elif db == 0:
                ties_b += 1
            elif (da > 0) == (db > 0):
                concordant += 1
            else:
                discordant += 1
    denom_a = concordant + discordant + ties_a
    denom_b = concordant + discordant + ties_b
    if denom_a == 0 or denom_b == 0:
        return None
    return (concordant - discordant) / math.sqrt(denom_a * denom_b)


def finite_diff_grads(state, x, y, config: TrainConfig, h: float = 1e-5):
    """Central finite differences of the full objective wrt every parameter."""
    grads = []
    for l, p in enumerate(state.params):
        g = np.zeros_like(p)
        for idx in np.ndindex(*p.shape):
            plus = state.copy()
            plus.params[l][idx] += h
            minus = state.copy()
            minus.params[l][idx] -= h
            g[idx] = (total_loss(plus, x, y, config) - total_loss(minus, x, y, config)) / (2 * h)
        grads.append(g)
    return grads


def random_safe_state(spec: NetworkSpec, rng: np.random.Generator, config: TrainConfig,
                      n_rows: int = 6, margin: float = 1e-3) -> tuple[NetworkState, np.ndarray, np.ndarray]:
    """A random state plus batch whose objective is smooth around the point.

    Keeps every parameter away from the |w| kink at 0 and, for BCE, redraws
    until no prediction sits within 1e-5 of the clamp boundaries.
    """
    from fuzzyrules.network import forward_activations, init_params

    for attempt in range(200):
        state = init_params(spec, int(rng.integers(1 << 30)))
        for p in state.params:
            small = np.abs(p) < margin
            p[small] = margin * np.where(rng.random(int(small.sum())) < 0.5, -1.0, 1.0) * 2
        x = rng.random((n_rows, spec.n_atoms))
        y = (rng.random(n_rows) < 0.5).astype(float)
        if config.loss == "bce":
            pred = forward_activations(x, state)[-1][:, 0]
            if np.any(pred < 1e-5) or np.any(pred > 1 - 1e-5):
                continue
        return state, x, y
    raise AssertionError("could not build a smooth random state")


def random_rule(rng: np.random.Generator, n_atoms: int, depth: int = 3) -> RuleNode:
    """Random rule tree over Atom/Not/And/Or/Const for round-trip tests."""
    if depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.05:
            return Const(bool(rng.integers(2)))
        atom = Atom(int(rng.integers(n_atoms)))
        return Not(atom) if rng.random() < 0.3 else atom
    k = int(rng.integers(2, 4))
    children = tuple(random_rule(rng, n_atoms, depth - 1) for _ in range(k))
    node: RuleNode = And(children) if rng.random() < 0.5 else Or(children)
    if rng.random() < 0.15:
        node = Not(node)
    return node


def random_crisp_state(rng: np.random.Generator, n0=None, depth=None,
                       kind=None) -> NetworkState:
    """Network with i.i.d. weights from {-1, 0, 1} for exact crisp tests."""
    n0 = int(rng.integers(2, 8)) if n0 is None else n0
    depth = int(rng.integers(1, 4)) if depth is None else depth
    sizes = (n0,) + tuple(int(s) for s in rng.integers(1, 5, size=depth - 1)) + (1,)
    if kind is None:
        kind = LayerKind.AND if rng.integers(2) else LayerKind.OR
    spec = NetworkSpec(sizes, kind)
    weights = [rng.choice([-1.0, 0.0, 1.0], size=s) for s in spec.param_shapes()]
    return NetworkState.from_weights(spec, weights)


def exhaustive_assignments(n_atoms: int):
    return itertools.product([0.0, 1.0], repeat=n_atoms)
