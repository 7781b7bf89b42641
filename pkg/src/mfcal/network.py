"""Dense feed-forward networks trained with Adam on a masked MSE loss.

The trainer is deliberately small: float64 numpy, rectifier hidden units,
identity output, Xavier-uniform initialization with zero biases, fixed
epoch counts and seeded per-epoch reshuffling.  Layers can be frozen
individually; frozen parameters are returned bit-identical to their
inputs, which is what the calibration cascade relies on.
"""

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import (
    DegenerateMaskError,
    DomainError,
    NumericOverflowError,
    ShapeError,
    TrainingDivergedError,
)
from .seeding import derive_rng

__all__ = [
    "LayerSpec",
    "Network",
    "FreezePlan",
    "TrainConfig",
    "AdamState",
    "RECTIFIER",
    "IDENTITY",
    "init_network",
    "forward",
    "masked_mse",
    "normalize_mask",
    "gradients",
    "adam_step",
    "train",
]

RECTIFIER = "rectifier"
IDENTITY = "identity"
_ACTIVATIONS = (RECTIFIER, IDENTITY)


@dataclass(frozen=True)
class LayerSpec:
    input_width: int
    output_width: int
    activation: str = RECTIFIER

    def __post_init__(self):
        if self.input_width < 1 or self.output_width < 1:
            raise ShapeError("layer widths must be >= 1")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


def layer_specs(widths) -> tuple[LayerSpec, ...]:
    """Chain of specs from a width sequence, e.g. (2, 4, 8, 14, 1):
    rectifier on every hidden layer, identity on the output layer."""
    widths = [int(w) for w in widths]
    if len(widths) < 2:
        raise ShapeError("need at least an input and an output width")
    specs = []
    for k in range(len(widths) - 1):
        act = IDENTITY if k == len(widths) - 2 else RECTIFIER
        specs.append(LayerSpec(widths[k], widths[k + 1], act))
    return tuple(specs)


@dataclass(frozen=True)
class Network:
    """Ordered dense layers; weights[k] has shape (out_k, in_k)."""

    layers: tuple[LayerSpec, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    rng_seed: int
    provenance: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "weights", tuple(np.asarray(w, dtype=np.float64) for w in self.weights))
        object.__setattr__(self, "biases", tuple(np.asarray(b, dtype=np.float64) for b in self.biases))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        if not self.layers:
            raise ShapeError("network needs at least one layer")
        if len(self.weights) != len(self.layers) or len(self.biases) != len(self.layers):
            raise ShapeError("one weight matrix and one bias vector per layer")
        for k, spec in enumerate(self.layers):
            if self.weights[k].shape != (spec.output_width, spec.input_width):
                raise ShapeError(
                    f"layer {k} weights have shape {self.weights[k].shape}, "
                    f"expected {(spec.output_width, spec.input_width)}"
                )
            if self.biases[k].shape != (spec.output_width,):
                raise ShapeError(f"layer {k} bias has wrong shape {self.biases[k].shape}")
            if k + 1 < len(self.layers) and spec.output_width != self.layers[k + 1].input_width:
                raise ShapeError(f"layer {k} output width does not chain into layer {k + 1}")
        if self.layers[-1].activation != IDENTITY:
            raise ShapeError("final layer activation must be identity")
        for arr in self.weights + self.biases:
            if not np.all(np.isfinite(arr)):
                raise ValueError("network parameters must be finite")

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def input_width(self) -> int:
        return self.layers[0].input_width

    @property
    def output_width(self) -> int:
        return self.layers[-1].output_width


@dataclass(frozen=True)
class FreezePlan:
    """trainable[k] is True when layer k (weights + bias) may change."""

    trainable: tuple[bool, ...]

    def __post_init__(self):
        object.__setattr__(self, "trainable", tuple(bool(t) for t in self.trainable))

    @classmethod
    def all_trainable(cls, n_layers: int) -> "FreezePlan":
        return cls((True,) * n_layers)

    def check(self, net: Network, for_training: bool = True):
        if len(self.trainable) != net.n_layers:
            raise ShapeError("freeze plan length does not match layer count")
        if for_training and not any(self.trainable):
            raise DegenerateMaskError("no trainable layers: training would be a no-op")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float
    batch_size: int
    epochs: int
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        # learning_rate 0 is allowed: it makes training an exact no-op,
        # which transfer stages use as a disabled-calibration baseline.
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        for beta in (self.adam_beta1, self.adam_beta2):
            if not 0.0 < beta < 1.0:
                raise ValueError("Adam betas must lie in (0,1)")
        if self.adam_epsilon <= 0:
            raise ValueError("adam_epsilon must be positive")


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per layer parameter."""

    m_w: list
    v_w: list
    m_b: list
    v_b: list

    @classmethod
    def zeros(cls, net: Network) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(w) for w in net.weights],
            v_w=[np.zeros_like(w) for w in net.weights],
            m_b=[np.zeros_like(b) for b in net.biases],
            v_b=[np.zeros_like(b) for b in net.biases],
        )


def init_network(specs, seed: int, provenance=()) -> Network:
    """Xavier-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases."""
    specs = tuple(specs)
    for k in range(len(specs) - 1):
        if specs[k].output_width != specs[k + 1].input_width:
            raise ShapeError(f"layer {k} output width does not chain into layer {k + 1}")
    rng = derive_rng(seed, "init")
    weights, biases = [], []
    for spec in specs:
        limit = np.sqrt(6.0 / (spec.input_width + spec.output_width))
        weights.append(rng.uniform(-limit, limit, size=(spec.output_width, spec.input_width)))
        biases.append(np.zeros(spec.output_width))
    return Network(specs, tuple(weights), tuple(biases), rng_seed=int(seed), provenance=provenance)


def _forward_batch(weights, biases, layers, x: np.ndarray) -> np.ndarray:
    a = x
    for k, spec in enumerate(layers):
        z = a @ weights[k].T + biases[k]
        a = np.maximum(z, 0.0) if spec.activation == RECTIFIER else z
    return a


def forward(net: Network, x) -> np.ndarray:
    """Evaluate the network on one input vector or a batch of row vectors."""
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise DomainError("forward received non-finite input")
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != net.input_width:
        raise ShapeError(f"input has {batch.shape[-1]} features, network expects {net.input_width}")
    out = _forward_batch(net.weights, net.biases, net.layers, batch)
    return out[0] if single else out


def normalize_mask(mask, width: int) -> np.ndarray:
    """Validate a 0/1 output mask and return it as a boolean vector."""
    m = np.asarray(mask)
    if m.shape != (width,):
        raise ShapeError(f"mask length {m.shape} does not match output width {width}")
    if not np.all((m == 0) | (m == 1)):
        raise ValueError("mask entries must be 0 or 1")
    m = m.astype(bool)
    if not m.any():
        raise DegenerateMaskError("mask has no observed outputs")
    return m


def masked_mse(pred, target, mask) -> float:
    """Squared error averaged over observed (mask=1) entries, then over rows.

    Entries with mask 0 contribute nothing; their target values are never
    read, so sentinel values (e.g. NaN) are safe there.
    """
    pred = np.atleast_2d(np.asarray(pred, dtype=np.float64))
    target = np.atleast_2d(np.asarray(target, dtype=np.float64))
    if pred.shape != target.shape:
        raise ShapeError(f"pred shape {pred.shape} != target shape {target.shape}")
    m = normalize_mask(mask, pred.shape[1])
    diff = pred[:, m] - target[:, m]
    return float(np.mean(diff * diff))


def _backprop(weights, biases, layers, x, y, mask_bool, lowest_trainable):
    """Forward + backward pass.

    Returns (loss, grads_w, grads_b) where gradient entries below
    lowest_trainable are None (they are not needed and not computed).
    """
    n_layers = len(layers)
    acts = [x]  # post-activation per layer boundary
    pres = []
    a = x
    for k, spec in enumerate(layers):
        z = a @ weights[k].T + biases[k]
        pres.append(z)
        a = np.maximum(z, 0.0) if spec.activation == RECTIFIER else z
        acts.append(a)
    pred = acts[-1]
    if y.shape != pred.shape:
        raise ShapeError(f"target shape {y.shape} != prediction shape {pred.shape}")
    # np.where (not multiplication) keeps NaN sentinels in masked-out target
    # entries from ever reaching the loss or the gradients.
    diff = np.where(mask_bool, pred - y, 0.0)
    n_rows = x.shape[0]
    n_obs = int(mask_bool.sum())
    loss = float(np.sum(diff * diff) / (n_rows * n_obs))

    grads_w = [None] * n_layers
    grads_b = [None] * n_layers
    delta = diff * (2.0 / (n_rows * n_obs))
    for k in range(n_layers - 1, -1, -1):
        if layers[k].activation == RECTIFIER:
            delta = delta * (pres[k] > 0.0)
        grads_w[k] = delta.T @ acts[k]
        grads_b[k] = delta.sum(axis=0)
        if k == lowest_trainable:
            break
        if k > 0:
            delta = delta @ weights[k]
    return loss, grads_w, grads_b


def gradients(net: Network, inputs, targets, mask, plan: FreezePlan):
    """Gradients of masked_mse w.r.t. every layer's weights and biases.

    Frozen layers get explicit zero blocks.  Returns (grads_w, grads_b),
    lists aligned with net.layers.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if x.shape[0] == 0:
        raise ValueError("gradient batch must be nonempty")
    if x.shape[1] != net.input_width:
        raise ShapeError("batch input width does not match network")
    plan.check(net, for_training=False)
    m = normalize_mask(mask, net.output_width)
    lowest = 0  # compute the full backward pass so frozen blocks are exact zeros
    loss, gw, gb = _backprop(net.weights, net.biases, net.layers, x, y, m, lowest)
    if not np.isfinite(loss) or any(not np.all(np.isfinite(g)) for g in gw + gb):
        raise NumericOverflowError("non-finite value during backpropagation")
    for k, trainable in enumerate(plan.trainable):
        if not trainable:
            gw[k] = np.zeros_like(gw[k])
            gb[k] = np.zeros_like(gb[k])
    return gw, gb


def adam_step(net: Network, grads, config: TrainConfig, state: AdamState, t: int):
    """One bias-corrected Adam update on the trainable layers.

    grads is (grads_w, grads_b) as returned by gradients(); entries for
    frozen layers may be None.  Returns (updated network, state); the state
    is updated in place, frozen layers are carried over untouched.
    """
    if t < 1:
        raise ValueError("Adam step index starts at 1")
    gw, gb = grads
    lr = config.learning_rate
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_w, new_b = [], []
    for k in range(net.n_layers):
        if gw[k] is None:
            new_w.append(net.weights[k])
            new_b.append(net.biases[k])
            continue
        state.m_w[k] = b1 * state.m_w[k] + (1 - b1) * gw[k]
        state.v_w[k] = b2 * state.v_w[k] + (1 - b2) * gw[k] ** 2
        state.m_b[k] = b1 * state.m_b[k] + (1 - b1) * gb[k]
        state.v_b[k] = b2 * state.v_b[k] + (1 - b2) * gb[k] ** 2
        new_w.append(net.weights[k] - lr * (state.m_w[k] / c1) / (np.sqrt(state.v_w[k] / c2) + eps))
        new_b.append(net.biases[k] - lr * (state.m_b[k] / c1) / (np.sqrt(state.v_b[k] / c2) + eps))
    return (
        Network(net.layers, tuple(new_w), tuple(new_b), net.rng_seed, net.provenance),
        state,
    )


def train(
    net: Network,
    data: Dataset,
    mask,
    plan: FreezePlan,
    config: TrainConfig,
    stage_label: str | None = None,
) -> tuple[Network, list]:
    """Mini-batch Adam for exactly config.epochs epochs.

    Rows are reshuffled every epoch from the config seed; there is no early
    stopping.  Returns the trained network (frozen layers bit-identical to
    the input network) and the per-epoch training-loss history.
    """
    if data.n_rows < 1:
        raise ValueError("training dataset is empty")
    if config.batch_size > data.n_rows:
        raise ValueError(
            f"batch_size {config.batch_size} exceeds training rows {data.n_rows}"
        )
    if data.n_inputs != net.input_width or data.n_outputs != net.output_width:
        raise ShapeError("dataset dimensions do not match the network")
    plan.check(net, for_training=True)
    mask_bool = normalize_mask(mask, net.output_width)

    X = data.inputs
    Y = data.outputs
    n = data.n_rows
    lowest = min(k for k, tr in enumerate(plan.trainable) if tr)

    weights = [w.copy() if tr else w for w, tr in zip(net.weights, plan.trainable)]
    biases = [b.copy() if tr else b for b, tr in zip(net.biases, plan.trainable)]
    m_w = [np.zeros_like(w) if tr else None for w, tr in zip(weights, plan.trainable)]
    v_w = [np.zeros_like(w) if tr else None for w, tr in zip(weights, plan.trainable)]
    m_b = [np.zeros_like(b) if tr else None for b, tr in zip(biases, plan.trainable)]
    v_b = [np.zeros_like(b) if tr else None for b, tr in zip(biases, plan.trainable)]

    lr = config.learning_rate
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_epsilon
    rng = derive_rng(config.seed, "shuffle")
    history = []
    t = 0
    layers = net.layers
    trainable_idx = [k for k, tr in enumerate(plan.trainable) if tr]

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_sq_sum = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            xb = X[idx]
            yb = Y[idx]
            loss, gw, gb = _backprop(weights, biases, layers, xb, yb, mask_bool, lowest)
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    epoch, f"loss became non-finite at epoch {epoch}"
                    + (f" of stage {stage_label!r}" if stage_label else "")
                )
            epoch_sq_sum += loss * len(idx)
            t += 1
            c1 = 1.0 - b1**t
            c2 = 1.0 - b2**t
            for k in trainable_idx:
                m_w[k] *= b1
                m_w[k] += (1 - b1) * gw[k]
                v_w[k] *= b2
                v_w[k] += (1 - b2) * np.square(gw[k])
                m_b[k] *= b1
                m_b[k] += (1 - b1) * gb[k]
                v_b[k] *= b2
                v_b[k] += (1 - b2) * np.square(gb[k])
                weights[k] -= lr * (m_w[k] / c1) / (np.sqrt(v_w[k] / c2) + eps)
                biases[k] -= lr * (m_b[k] / c1) / (np.sqrt(v_b[k] / c2) + eps)
        history.append(epoch_sq_sum / n)

    trained = Network(
        net.layers,
        tuple(weights),
        tuple(biases),
        net.rng_seed,
        net.provenance + ((stage_label,) if stage_label else ()),
    )
    return trained, history
