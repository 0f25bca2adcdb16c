"""Product-family fuzzy logic primitives.

All connectives operate on membership degrees in [0, 1] and are closed over
that interval. Conjunction is the product t-norm, disjunction its dual
co-norm, negation the standard complement:

    AND(a, b) = a * b
    OR(a, b)  = a + b - a * b
    NOT(a)    = 1 - a

Network layers combine inputs through signed weights in (-1, 1). A negative
weight negates its input before weighting; the magnitude then controls how
strongly the input participates in the node:

    AND node:  Z = OR(o_eff, 1 - |w|)   (|w| -> 0 pushes Z -> 1, the AND identity)
    OR node:   Z = AND(o_eff, |w|)      (|w| -> 0 pushes Z -> 0, the OR identity)

so a zero weight disconnects the input from either node kind.
"""
from __future__ import annotations

from enum import Enum

import numpy as np

__all__ = [
    "LayerKind",
    "tnorm_and",
    "tnorm_or",
    "tnorm_not",
    "weights_from_params",
    "weighted_input",
    "layer_forward",
]


class LayerKind(str, Enum):
    """Node kind of a layer: every node in a layer shares one connective."""

    AND = "and"
    OR = "or"

    def flipped(self) -> "LayerKind":
        return LayerKind.OR if self is LayerKind.AND else LayerKind.AND


def tnorm_and(a, b):
    """Product conjunction a * b."""
    return a * b


def tnorm_or(a, b):
    """Probabilistic-sum disjunction a + b - a * b."""
    return a + b - a * b


def tnorm_not(a):
    """Standard complement 1 - a."""
    return 1.0 - a


def weights_from_params(params: np.ndarray, weight_map: str = "tanh") -> np.ndarray:
    """Map unconstrained parameters to connection weights.

    "tanh" yields signed weights in (-1, 1) where the sign encodes negation.
    "sigmoid" is an ablation map into (0, 1); it cannot express negation and
    exists only for forward-pass comparisons.
    """
    p = np.asarray(params, dtype=np.float64)
    if weight_map == "tanh":
        return np.tanh(p)
    if weight_map == "sigmoid":
        return 1.0 / (1.0 + np.exp(-p))
    raise ValueError(f"unknown weight map: {weight_map!r}")


def _layer_terms(o_prev: np.ndarray, weights: np.ndarray, kind: LayerKind):
    """Per-connection terms shared by the forward pass and backpropagation.

    Returns (sign, magnitude, o_eff, operands) where operands[b, j, i] is the
    factor contributed by input i to node j, and the node output is the
    left-to-right product of operands (AND) or its complement of the product
    of complements folded into the operands themselves (OR):

        AND: operand = 1 - |w| * (1 - o_eff)   (= OR(o_eff, 1-|w|)), out = prod
        OR:  operand = 1 - |w| * o_eff         (= NOT(AND(o_eff, |w|))), out = 1 - prod
    """
    sign = np.where(weights < 0.0, -1.0, 1.0)
    mag = sign * weights
    # o_eff = o for positive weights, 1 - o for negative ones.
    o_col = o_prev[:, None, :]
    o_eff = np.where((weights < 0.0)[None, :, :], 1.0 - o_col, o_col)
    if kind is LayerKind.AND:
        inner = 1.0 - o_eff
    else:
        inner = o_eff
    operands = 1.0 - mag[None, :, :] * inner
    return sign, mag, o_eff, operands


def weighted_input(o: float, w: float, kind: LayerKind) -> float:
    """Effective contribution Z of one input to one node.

    Negative w negates the input first; the magnitude gates participation so
    that |w| = 0 yields the identity element of the node's connective.
    """
    o_arr = np.asarray([[float(o)]], dtype=np.float64)
    w_arr = np.asarray([[float(w)]], dtype=np.float64)
    _, _, _, operands = _layer_terms(o_arr, w_arr, kind)
    z = operands[0, 0, 0]
    if kind is LayerKind.OR:
        # operands hold NOT(Z) for OR layers.
        z = 1.0 - z
    return float(z)


def layer_forward(o_prev: np.ndarray, weights: np.ndarray, kind: LayerKind) -> np.ndarray:
    """Forward one layer.

    o_prev is (n_in,) or (batch, n_in) with entries in [0, 1]; weights is
    (n_out, n_in). Returns (n_out,) or (batch, n_out). Products are taken
    left to right over the input axis.
    """
    o = np.asarray(o_prev, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 2:
        raise ValueError(f"weights must be 2-d, got shape {w.shape}")
    squeeze = o.ndim == 1
    if squeeze:
        o = o[None, :]
    if o.ndim != 2 or o.shape[1] != w.shape[1]:
        raise ValueError(
            f"layer input has {o.shape[-1]} features, weights expect {w.shape[1]}"
        )
    _, _, _, operands = _layer_terms(o, w, kind)
    prod = np.cumprod(operands, axis=-1)[..., -1]
    out = prod if kind is LayerKind.AND else 1.0 - prod
    return out[0] if squeeze else out
