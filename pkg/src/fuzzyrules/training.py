"""Gradient training of the fuzzy network.

Gradients are derived by hand. Each layer's node output is a left-to-right
product of per-connection operands m (see logic._layer_terms); the partial of
the product with respect to one operand is the product of all the others,
computed with prefix/suffix cumulative products so nothing divides by a
possibly-zero operand. The chain then runs through

    m = 1 - |w| * u,   u = 1 - o_eff (AND) or o_eff (OR),
    o_eff = (1 - s)/2 + s * o,   |w| = s * w,   w = tanh(P)

with s = -1 where w < 0 and +1 elsewhere (the convention at the w = 0 kink is
the non-negative branch). The data loss is averaged over the batch; the L1
penalty applies to the weights tanh(P), not the raw parameters, and the
orthogonality penalty sums ||W W^T - I||_F^2 + ||W^T W - I||_F^2 per layer.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .logic import LayerKind, _layer_terms
from .network import NetworkSpec, NetworkState, init_params
from .validation import check_binary_labels, check_unit_matrix

__all__ = [
    "TrainConfig",
    "OptimizerState",
    "EpochStats",
    "TrainResult",
    "bce_loss",
    "mse_loss",
    "l1_penalty",
    "dso_penalty",
    "total_loss",
    "backward",
    "adamw_step",
    "negative_sample",
    "train",
]

BCE_EPS = 1e-7
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

LOSSES = ("bce", "mse")

# Sampling/shuffling streams derived per epoch from the run seed.
_STREAM_SAMPLING = 0
_STREAM_SHUFFLE = 1

# Backward materializes (chunk, n_out, n_in) intermediates per layer.
_CHUNK_ROWS = 4096


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run.

    lambda_l1/lambda_orth of None resolve to 0.1 / n_params at train time,
    where n_params counts every connection parameter of the network.
    """

    learning_rate: float = 0.01
    batch_size: int = 8196
    epochs: int = 20
    weight_decay: float = 1e-5
    lambda_l1: float | None = None
    lambda_orth: float | None = None
    negatives_per_impression: int = 4
    loss: str = "bce"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be non-negative")
        for lam in (self.lambda_l1, self.lambda_orth):
            if lam is not None and lam < 0:
                raise ValueError("penalty strengths must be non-negative")
        if self.negatives_per_impression < 0:
            raise ValueError("negatives_per_impression must be non-negative")
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")

    def resolved_lambdas(self, n_params: int) -> tuple[float, float]:
        default = 0.1 / n_params
        l1 = default if self.lambda_l1 is None else self.lambda_l1
        orth = default if self.lambda_orth is None else self.lambda_orth
        return float(l1), float(orth)


def bce_loss(pred, label):
    """Binary cross-entropy with predictions clamped to [eps, 1 - eps]."""
    p = np.clip(pred, BCE_EPS, 1.0 - BCE_EPS)
    return -(label * np.log(p) + (1.0 - label) * np.log1p(-p))


def mse_loss(pred, label):
    """Squared error (pred - label)^2."""
    d = pred - label
    return d * d


def _loss_grad(pred: np.ndarray, label: np.ndarray, loss: str) -> np.ndarray:
    """d loss / d pred per sample; zero where the BCE clamp is active."""
    if loss == "mse":
        return 2.0 * (pred - label)
    interior = (pred > BCE_EPS) & (pred < 1.0 - BCE_EPS)
    p = np.clip(pred, BCE_EPS, 1.0 - BCE_EPS)
    g = -label / p + (1.0 - label) / (1.0 - p)
    return np.where(interior, g, 0.0)


def l1_penalty(state: NetworkState) -> float:
    """Sum of |tanh(P)| over every connection (unscaled)."""
    return float(sum(np.abs(w).sum() for w in state.weights()))


def dso_penalty(state: NetworkState) -> float:
    """Double soft orthogonality, summed over layers (unscaled)."""
    total = 0.0
    for w in state.weights():
        rows = w @ w.T - np.eye(w.shape[0])
        cols = w.T @ w - np.eye(w.shape[1])
        total += float((rows * rows).sum() + (cols * cols).sum())
    return total


def _dso_grad_w(w: np.ndarray) -> np.ndarray:
    """d DSO / d W for one layer: 4 (W W^T - I) W + 4 W (W^T W - I)."""
    rows = w @ w.T - np.eye(w.shape[0])
    cols = w.T @ w - np.eye(w.shape[1])
    return 4.0 * (rows @ w) + 4.0 * (w @ cols)


def total_loss(state: NetworkState, x: np.ndarray, y: np.ndarray, config: TrainConfig) -> float:
    """Mean data loss plus both resolved penalties (forward pass only)."""
    from .network import forward_activations

    pred = forward_activations(x, state)[-1][:, 0]
    loss_fn = bce_loss if config.loss == "bce" else mse_loss
    data = float(np.mean(loss_fn(pred, y)))
    l1, orth = config.resolved_lambdas(state.spec.n_params)
    return data + l1 * l1_penalty(state) + orth * dso_penalty(state)


def _backward_data(
    state: NetworkState, x: np.ndarray, y: np.ndarray, loss: str
) -> tuple[list[np.ndarray], float]:
    """Sum (not mean) of per-sample loss gradients wrt P, plus the loss sum."""
    kinds = state.spec.layer_kinds()
    weights = state.weights()
    caches = []
    o = x
    for w, kind in zip(weights, kinds):
        sign, mag, o_eff, operands = _layer_terms(o, w, kind)
        full = np.cumprod(operands, axis=-1)
        prod = full[..., -1]
        out = prod if kind is LayerKind.AND else 1.0 - prod
        if kind is LayerKind.AND:
            u = 1.0 - o_eff
        else:
            u = o_eff
        caches.append((w, kind, sign, mag, u, operands, full))
        o = out
    pred = o[:, 0]
    loss_fn = bce_loss if loss == "bce" else mse_loss
    loss_sum = float(loss_fn(pred, y).sum())

    g = _loss_grad(pred, y, loss)[:, None]  # dL/do^L, per sample
    grads: list[np.ndarray] = [np.empty(0)] * len(weights)
    for l in range(len(weights) - 1, -1, -1):
        w, kind, sign, mag, u, operands, full = caches[l]
        # product of all operands except i, via prefix * suffix products
        prefix = np.ones_like(operands)
        prefix[..., 1:] = full[..., :-1]
        suffix = np.ones_like(operands)
        rev = np.cumprod(operands[..., ::-1], axis=-1)[..., ::-1]
        suffix[..., :-1] = rev[..., 1:]
        d_out_d_m = prefix * suffix
        if kind is LayerKind.OR:
            d_out_d_m = -d_out_d_m
        g_m = g[:, :, None] * d_out_d_m  # (batch, n_out, n_in)
        g_mag = g_m * (-u)
        g_u = g_m * (-mag[None, :, :])
        g_o_eff = -g_u if kind is LayerKind.AND else g_u
        # d|w|/dw = sign, d w/d P = 1 - w^2
        grads[l] = (g_mag * sign[None, :, :]).sum(axis=0) * (1.0 - w * w)
        # d o_eff / d o_prev = sign
        g = (g_o_eff * sign[None, :, :]).sum(axis=1)
    return grads, loss_sum


@dataclass
class LossParts:
    """Decomposed objective value at the evaluation point."""

    data: float
    l1: float
    dso: float
    lambda_l1: float
    lambda_orth: float

    @property
    def total(self) -> float:
        return self.data + self.lambda_l1 * self.l1 + self.lambda_orth * self.dso


def backward(
    state: NetworkState, x: np.ndarray, y: np.ndarray, config: TrainConfig
) -> tuple[list[np.ndarray], LossParts]:
    """Gradients of the full objective wrt each parameter matrix.

    Processes the batch in row chunks to bound the (rows, n_out, n_in)
    intermediates; results are identical to a single pass because the
    per-sample contributions are summed in order and divided once.
    """
    x = check_unit_matrix(x, state.spec.n_atoms)
    y = check_binary_labels(y, x.shape[0])
    n = x.shape[0]
    grads = [np.zeros_like(p) for p in state.params]
    loss_sum = 0.0
    for start in range(0, n, _CHUNK_ROWS):
        chunk_grads, chunk_loss = _backward_data(
            state, x[start : start + _CHUNK_ROWS], y[start : start + _CHUNK_ROWS], config.loss
        )
        for acc, g in zip(grads, chunk_grads):
            acc += g
        loss_sum += chunk_loss
    for g in grads:
        g /= n
    lam_l1, lam_orth = config.resolved_lambdas(state.spec.n_params)
    l1_val = l1_penalty(state)
    dso_val = dso_penalty(state)
    for l, w in enumerate(state.weights()):
        dw_dp = 1.0 - w * w
        if lam_l1 > 0.0:
            grads[l] += lam_l1 * np.sign(w) * dw_dp
        if lam_orth > 0.0:
            grads[l] += lam_orth * _dso_grad_w(w) * dw_dp
    parts = LossParts(loss_sum / n, l1_val, dso_val, lam_l1, lam_orth)
    return grads, parts


@dataclass
class OptimizerState:
    """AdamW moment estimates and step counter."""

    first_moment: list[np.ndarray]
    second_moment: list[np.ndarray]
    step_count: int = 0

    @classmethod
    def zeros_for(cls, state: NetworkState) -> "OptimizerState":
        return cls(
            [np.zeros_like(p) for p in state.params],
            [np.zeros_like(p) for p in state.params],
            0,
        )


def adamw_step(
    state: NetworkState,
    opt: OptimizerState,
    grads: list[np.ndarray],
    config: TrainConfig,
) -> tuple[NetworkState, OptimizerState]:
    """One decoupled-weight-decay Adam update; inputs are left untouched."""
    t = opt.step_count + 1
    lr = config.learning_rate
    new_params = []
    new_m = []
    new_v = []
    for p, m, v, g in zip(state.params, opt.first_moment, opt.second_moment, grads):
        m2 = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
        v2 = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * (g * g)
        m_hat = m2 / (1.0 - ADAM_BETA1**t)
        v_hat = v2 / (1.0 - ADAM_BETA2**t)
        p2 = p - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS) - lr * config.weight_decay * p
        new_params.append(p2)
        new_m.append(m2)
        new_v.append(v2)
    return NetworkState(state.spec, new_params), OptimizerState(new_m, new_v, t)


def negative_sample(labels: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Positions to keep from one impression's candidate list.

    Every positive is kept; k negatives are sampled uniformly without
    replacement (all of them when fewer than k exist). Returns an empty array
    when the impression has no positive, so the caller can skip it.
    """
    labels = np.asarray(labels)
    pos = np.flatnonzero(labels == 1)
    if pos.size == 0:
        return np.empty(0, dtype=np.int64)
    neg = np.flatnonzero(labels == 0)
    if neg.size > k:
        neg = rng.choice(neg, size=k, replace=False)
    return np.concatenate([pos, np.sort(neg)]).astype(np.int64)


@dataclass
class EpochStats:
    """Objective decomposition (mean over batches, weighted by batch size)."""

    epoch: int
    loss_total: float
    loss_data: float
    penalty_l1: float
    penalty_dso: float
    n_rows: int
    auc: float | None = None


@dataclass
class TrainResult:
    state: NetworkState
    history: list[EpochStats]
    lambda_l1: float
    lambda_orth: float
    skipped_no_positive: int = 0


def _group_rows(impression_ids) -> list[np.ndarray]:
    """Row indices per impression, impressions in first-seen order."""
    groups: dict = {}
    for i, imp in enumerate(impression_ids):
        groups.setdefault(imp, []).append(i)
    return [np.asarray(ix, dtype=np.int64) for ix in groups.values()]


def train(
    x,
    y,
    spec: NetworkSpec,
    config: TrainConfig,
    impression_ids=None,
    eval_split=None,
) -> TrainResult:
    """Train a fresh network on fuzzified candidate rows.

    When impression_ids is given (one id per row), each epoch trains on every
    positive plus negatives_per_impression sampled negatives per impression,
    re-sampled per epoch; impressions without a positive are skipped and
    counted. Without ids, all rows are used each epoch. eval_split, if given,
    is (x_val, y_val, impression_slices) and records a per-epoch grouped AUC
    in the history.
    """
    x = check_unit_matrix(x, spec.n_atoms)
    y = check_binary_labels(y, x.shape[0])
    groups = None
    skipped_no_positive = 0
    if impression_ids is not None:
        ids = np.asarray(impression_ids)
        if ids.shape[0] != x.shape[0]:
            raise ValueError("impression_ids length must match the number of rows")
        groups = _group_rows(ids)
        skipped_no_positive = sum(1 for g in groups if not np.any(y[g] == 1))

    state = init_params(spec, config.seed)
    opt = OptimizerState.zeros_for(state)
    history: list[EpochStats] = []
    lam_l1, lam_orth = config.resolved_lambdas(spec.n_params)

    for epoch in range(config.epochs):
        if groups is None:
            selected = np.arange(x.shape[0])
        else:
            rng_s = np.random.default_rng(
                np.random.SeedSequence([config.seed, epoch, _STREAM_SAMPLING])
            )
            picks = []
            for g in groups:
                keep = negative_sample(y[g], config.negatives_per_impression, rng_s)
                if keep.size:
                    picks.append(g[keep])
            if not picks:
                raise ValueError("no impression contains a positive candidate")
            selected = np.concatenate(picks)
        rng_p = np.random.default_rng(
            np.random.SeedSequence([config.seed, epoch, _STREAM_SHUFFLE])
        )
        selected = selected[rng_p.permutation(selected.size)]

        sums = np.zeros(4)  # total, data, l1, dso weighted by rows
        for start in range(0, selected.size, config.batch_size):
            batch = selected[start : start + config.batch_size]
            grads, parts = backward(state, x[batch], y[batch], config)
            state, opt = adamw_step(state, opt, grads, config)
            sums += batch.size * np.asarray([parts.total, parts.data, parts.l1, parts.dso])
        stats = EpochStats(
            epoch=epoch,
            loss_total=sums[0] / selected.size,
            loss_data=sums[1] / selected.size,
            penalty_l1=sums[2] / selected.size,
            penalty_dso=sums[3] / selected.size,
            n_rows=int(selected.size),
        )
        if eval_split is not None:
            from .metrics import grouped_scores_auc

            x_val, y_val, slices = eval_split
            stats.auc = grouped_scores_auc(state, x_val, y_val, slices)
        history.append(stats)

    return TrainResult(
        state=state,
        history=history,
        lambda_l1=lam_l1,
        lambda_orth=lam_orth,
        skipped_no_positive=skipped_no_positive,
    )
