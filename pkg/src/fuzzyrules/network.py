"""Layered fuzzy network structure, initialization and forward evaluation.

A network is a stack of fully connected fuzzy layers whose kinds alternate
between AND and OR. The final layer has exactly one node; its kind names the
network family (AND-output vs OR-output), and the kinds of the earlier layers
are forced by the alternation. Connection weights are tanh(P) of unconstrained
parameters P, so weights live in (-1, 1) and the sign carries negation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .logic import LayerKind, layer_forward, weights_from_params
from .validation import check_unit_matrix

__all__ = [
    "NetworkSpec",
    "NetworkState",
    "init_params",
    "network_forward",
    "forward_activations",
]

# tanh(20.0) == 1.0 in float64, so +-20 emulates exactly crisp +-1 weights.
CRISP_PARAM = 20.0

INIT_GAIN = 5.0 / 3.0  # tanh gain for Kaiming-uniform initialization


@dataclass(frozen=True)
class NetworkSpec:
    """Shape of a network: layer sizes (n_0 .. n_L) and the output node kind."""

    layer_sizes: tuple[int, ...]
    output_kind: LayerKind

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        object.__setattr__(self, "output_kind", LayerKind(self.output_kind))
        if len(sizes) < 2:
            raise ValueError("a network needs at least one layer (two size entries)")
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be positive, got {sizes}")
        if sizes[-1] != 1:
            raise ValueError(f"the output layer must have exactly one node, got {sizes[-1]}")

    @property
    def n_atoms(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_layers(self) -> int:
        return len(self.layer_sizes) - 1

    def layer_kinds(self) -> tuple[LayerKind, ...]:
        """Kinds for layers 1..L: fixed at the output, alternating backwards."""
        kinds = [self.output_kind]
        for _ in range(self.n_layers - 1):
            kinds.append(kinds[-1].flipped())
        return tuple(reversed(kinds))

    def param_shapes(self) -> tuple[tuple[int, int], ...]:
        sizes = self.layer_sizes
        return tuple((sizes[l + 1], sizes[l]) for l in range(self.n_layers))

    @property
    def n_params(self) -> int:
        return sum(r * c for r, c in self.param_shapes())


@dataclass
class NetworkState:
    """A spec plus the raw parameter matrices P (one per layer)."""

    spec: NetworkSpec
    params: list[np.ndarray] = field(repr=False)

    def __post_init__(self) -> None:
        shapes = self.spec.param_shapes()
        if len(self.params) != len(shapes):
            raise ValueError(
                f"expected {len(shapes)} parameter matrices, got {len(self.params)}"
            )
        coerced = []
        for mat, shape in zip(self.params, shapes):
            arr = np.asarray(mat, dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"parameter matrix has shape {arr.shape}, expected {shape}")
            coerced.append(arr)
        self.params = coerced

    def weights(self, weight_map: str = "tanh") -> list[np.ndarray]:
        return [weights_from_params(p, weight_map) for p in self.params]

    def copy(self) -> "NetworkState":
        return NetworkState(self.spec, [p.copy() for p in self.params])

    @classmethod
    def from_weights(cls, spec: NetworkSpec, weights) -> "NetworkState":
        """Build a state whose tanh weights equal the given values.

        Values of exactly +-1 map to +-CRISP_PARAM, which reproduces them
        exactly under float64 tanh; everything else goes through arctanh.
        """
        params = []
        for mat in weights:
            w = np.asarray(mat, dtype=np.float64)
            if np.any(np.abs(w) > 1.0):
                raise ValueError("weights must lie in [-1, 1]")
            crisp = np.abs(w) >= 1.0
            p = np.where(crisp, np.sign(w) * CRISP_PARAM, np.arctanh(np.where(crisp, 0.0, w)))
            params.append(p)
        return cls(spec, params)


def init_params(spec: NetworkSpec, seed: int) -> NetworkState:
    """Kaiming-uniform initialization with the tanh gain 5/3.

    Layer l draws i.i.d. uniform from [-b, b] with b = (5/3) * sqrt(3 / n_in),
    from a generator seeded deterministically by (seed, layer index).
    """
    params = []
    for l, (n_out, n_in) in enumerate(spec.param_shapes()):
        bound = INIT_GAIN * np.sqrt(3.0 / n_in)
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), l]))
        params.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
    return NetworkState(spec, params)


def forward_activations(
    x: np.ndarray, state: NetworkState, weight_map: str = "tanh"
) -> list[np.ndarray]:
    """All layer activations [o^0, o^1, ..., o^L] for a batch (no validation)."""
    kinds = state.spec.layer_kinds()
    acts = [x]
    o = x
    for w, kind in zip(state.weights(weight_map), kinds):
        o = layer_forward(o, w, kind)
        acts.append(o)
    return acts


def network_forward(atoms, state: NetworkState, weight_map: str = "tanh") -> np.ndarray:
    """Network output for atom memberships.

    atoms is (n_atoms,) or (batch, n_atoms) with values in [0, 1]; returns a
    scalar array () or a (batch,) vector of outputs in [0, 1].
    """
    arr = np.asarray(atoms, dtype=np.float64)
    squeeze = arr.ndim == 1
    x = check_unit_matrix(arr[None, :] if squeeze else arr, state.spec.n_atoms)
    out = forward_activations(x, state, weight_map)[-1][:, 0]
    return out[0] if squeeze else out
