"""Channel-sparsity training demo on a small segmentation toy problem.

Implements a stride-1, same-padding, cross-correlation conv forward pass;
a channel activity ratio (fraction of channels whose summed post-ReLU
activation is positive); a channel-sparsity penalty over truncated
kernels; and a gated objective that stops applying sparsity pressure once
the active-channel ratio reaches its target.

Everything is plain numpy with analytic gradients; the toy network (two
3x3 conv layers of 8 channels plus a 1x1 two-class head on 16x16 blob
images) is big enough for the active ratio to move and small enough for
finite-difference checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    ConfigError,
    ContractViolationError,
    ShapeError,
    TrainingError,
)


@dataclass(frozen=True, eq=False)
class ConvLayerParams:
    """One conv layer: kernels (K_s, K_s, C, K) and biases (K,)."""

    kernels: np.ndarray
    biases: np.ndarray
    layer_id: str

    def __post_init__(self):
        k = np.asarray(self.kernels, dtype=np.float64)
        b = np.asarray(self.biases, dtype=np.float64)
        object.__setattr__(self, "kernels", k)
        object.__setattr__(self, "biases", b)
        if k.ndim != 4:
            raise ShapeError(f"kernels must be 4-D, got shape {k.shape}")
        if k.shape[0] != k.shape[1] or k.shape[0] % 2 == 0:
            raise ShapeError(
                f"kernel window must be square with odd side, got {k.shape[:2]}"
            )
        if b.shape != (k.shape[3],):
            raise ShapeError(
                f"biases {b.shape} do not match {k.shape[3]} output channels"
            )
        if not (np.isfinite(k).all() and np.isfinite(b).all()):
            raise ShapeError(f"layer {self.layer_id!r} has non-finite parameters")

    @property
    def out_channels(self) -> int:
        return self.kernels.shape[3]


@dataclass(frozen=True)
class SparsityConfig:
    """beta: target active-channel ratio; alpha: gate exponent;
    lam: penalty weight; layers: ids the penalty applies to."""

    beta: float
    alpha: float
    lam: float
    layers: tuple[str, ...]

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError(f"beta must lie in [0, 1], got {self.beta}")
        if self.alpha <= 0:
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be non-negative, got {self.lam}")
        if self.lam > 0 and self.beta >= 1.0:
            raise ConfigError("beta must be < 1 when the penalty is active")


@dataclass(eq=False)
class TrainHistory:
    """Per-epoch training record."""

    task_loss: list[float] = field(default_factory=list)
    sparsity_loss: list[float] = field(default_factory=list)
    r_sp: list[float] = field(default_factory=list)
    r_sp0: list[float] = field(default_factory=list)
    gate: list[float] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)

    def append(self, task, l_sp, r_sp, gate, objective):
        self.task_loss.append(float(task))
        self.sparsity_loss.append(float(l_sp))
        self.r_sp.append(float(r_sp))
        self.r_sp0.append(1.0 - float(r_sp))
        self.gate.append(float(gate))
        self.objective.append(float(objective))

    def __len__(self) -> int:
        return len(self.task_loss)

    def rows(self):
        for i in range(len(self)):
            yield (
                i,
                self.task_loss[i],
                self.sparsity_loss[i],
                self.r_sp[i],
                self.r_sp0[i],
                self.gate[i],
                self.objective[i],
            )


def _windows(batch: np.ndarray, side: int) -> np.ndarray:
    """Same-padded sliding windows, shape (B, H, W, C, side, side)."""
    pad = side // 2
    padded = np.pad(batch, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    return sliding_window_view(padded, (side, side), axis=(1, 2))


def conv_forward_batch(batch: np.ndarray, params: ConvLayerParams) -> np.ndarray:
    """Cross-correlation over a batch (B, H, W, C) -> (B, H, W, K)."""
    z = np.asarray(batch, dtype=np.float64)
    if z.ndim != 4:
        raise ShapeError(f"batch must be 4-D, got shape {z.shape}")
    if z.shape[3] != params.kernels.shape[2]:
        raise ShapeError(
            f"input has {z.shape[3]} channels, kernels expect "
            f"{params.kernels.shape[2]}"
        )
    w = _windows(z, params.kernels.shape[0])
    return np.einsum("bhwcuv,uvcj->bhwj", w, params.kernels) + params.biases


def conv_forward(z: np.ndarray, params: ConvLayerParams) -> np.ndarray:
    """Single-image convenience wrapper: (H, W, C) -> (H, W, K)."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 3:
        raise ShapeError(f"input must be 3-D (H, W, C), got shape {z.shape}")
    return conv_forward_batch(z[None], params)[0]


def conv_backward(
    batch: np.ndarray, params: ConvLayerParams, d_out: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gradients (d_kernels, d_biases, d_input) for conv_forward_batch."""
    side = params.kernels.shape[0]
    w = _windows(np.asarray(batch, dtype=np.float64), side)
    d_kernels = np.einsum("bhwcuv,bhwj->uvcj", w, d_out)
    d_biases = d_out.sum(axis=(0, 1, 2))
    flipped = params.kernels[::-1, ::-1].transpose(0, 1, 3, 2)
    back = ConvLayerParams(flipped, np.zeros(flipped.shape[3]), params.layer_id)
    d_input = conv_forward_batch(d_out, back)
    return d_kernels, d_biases, d_input


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def active_ratio(activations: list[np.ndarray]) -> float:
    """Fraction of channels whose total post-ReLU activation is positive.

    Each entry is one selected layer's activations with channels last; any
    leading batch/spatial axes are summed out.  Channels with an exactly
    zero sum count as inactive.
    """
    if not activations:
        raise ShapeError("active_ratio needs at least one layer")
    active = 0
    total = 0
    for a in activations:
        arr = np.asarray(a, dtype=np.float64)
        if np.any(arr < 0):
            raise ContractViolationError(
                "activations must be post-ReLU (non-negative)"
            )
        sums = arr.reshape(-1, arr.shape[-1]).sum(axis=0)
        active += int(np.count_nonzero(sums > 0))
        total += arr.shape[-1]
    return active / total


def sparsity_loss(layers: list[ConvLayerParams]) -> float:
    """Mean over channels of (sum of positive kernel entries + bias)."""
    if not layers:
        raise ShapeError("sparsity_loss needs at least one layer")
    per_channel = []
    for layer in layers:
        positive = np.maximum(layer.kernels, 0.0).sum(axis=(0, 1, 2))
        per_channel.append(positive + layer.biases)
    return float(np.concatenate(per_channel).mean())


def sparsity_loss_grad(
    layers: list[ConvLayerParams],
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Analytic (d_kernels, d_biases) per layer for sparsity_loss.

    Subgradient of max(0, .) at exactly 0 is taken as 0; the bias term is
    untruncated so its gradient is constant.
    """
    total = sum(layer.out_channels for layer in layers)
    out = []
    for layer in layers:
        d_k = (layer.kernels > 0).astype(np.float64) / total
        d_b = np.full(layer.out_channels, 1.0 / total)
        out.append((d_k, d_b))
    return out


def gamma(r_sp: float, beta: float, alpha: float) -> float:
    """Gate factor: 0 at or below the target ratio, 1 at full activity."""
    if beta >= 1.0:
        raise ConfigError(f"beta must be < 1, got {beta}")
    if alpha <= 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    if r_sp <= beta:
        return 0.0
    return float(((r_sp - beta) / (1.0 - beta)) ** alpha)


def regularized_objective(
    task_loss: float, l_sp: float, cfg: SparsityConfig, r_sp: float
) -> float:
    return float(task_loss + cfg.lam * l_sp * gamma(r_sp, cfg.beta, cfg.alpha))


# --- toy segmentation problem ------------------------------------------------


@dataclass(eq=False)
class ToyNet:
    """Two 3x3 conv layers (8 channels, ReLU) and a 1x1 two-class head."""

    conv1: ConvLayerParams
    conv2: ConvLayerParams
    head: ConvLayerParams

    @staticmethod
    def initialize(rng: np.random.Generator, channels: int = 8) -> "ToyNet":
        def layer(side, c_in, c_out, name, scale):
            k = rng.normal(0.0, scale, size=(side, side, c_in, c_out))
            b = np.full(c_out, 0.05)
            return ConvLayerParams(k, b, name)

        return ToyNet(
            conv1=layer(3, 1, channels, "conv1", 0.45),
            conv2=layer(3, channels, channels, "conv2", 0.25),
            head=layer(1, channels, 2, "head", 0.45),
        )

    def penalized_layers(self, cfg: SparsityConfig) -> list[ConvLayerParams]:
        table = {l.layer_id: l for l in (self.conv1, self.conv2, self.head)}
        missing = [name for name in cfg.layers if name not in table]
        if missing:
            raise ConfigError(f"unknown penalty layers {missing}")
        return [table[name] for name in cfg.layers]

    def forward(self, batch: np.ndarray) -> dict[str, np.ndarray]:
        pre1 = conv_forward_batch(batch, self.conv1)
        act1 = relu(pre1)
        pre2 = conv_forward_batch(act1, self.conv2)
        act2 = relu(pre2)
        logits = conv_forward_batch(act2, self.head)
        return {
            "pre1": pre1,
            "act1": act1,
            "pre2": pre2,
            "act2": act2,
            "logits": logits,
        }


def softmax_cross_entropy(
    logits: np.ndarray, targets: np.ndarray
) -> tuple[float, np.ndarray]:
    """Pixel-wise 2-class cross entropy, mean over pixels and samples.

    Returns (loss, d_logits).
    """
    z = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(z)
    probs = exp / exp.sum(axis=-1, keepdims=True)
    count = targets.size
    picked = np.take_along_axis(probs, targets[..., None], axis=-1)[..., 0]
    loss = float(-np.log(np.maximum(picked, 1e-300)).mean())
    one_hot = np.zeros_like(probs)
    np.put_along_axis(one_hot, targets[..., None], 1.0, axis=-1)
    d_logits = (probs - one_hot) / count
    return loss, d_logits


def make_blob_dataset(
    count: int, resolution: int = 16, seed: int = 7, noise: float = 0.45
) -> tuple[np.ndarray, np.ndarray]:
    """Noisy disk images with their binary masks.

    The noise level sets an irreducible task-loss floor, so penalized and
    unpenalized runs plateau at comparable losses instead of the
    unpenalized one overfitting toward zero.

    Returns (images (count, res, res, 1), masks (count, res, res) int)."""
    rng = np.random.default_rng(seed)
    rows, cols = np.mgrid[0:resolution, 0:resolution]
    images = np.empty((count, resolution, resolution, 1))
    masks = np.empty((count, resolution, resolution), dtype=np.int64)
    for i in range(count):
        cy = rng.uniform(resolution * 0.25, resolution * 0.75)
        cx = rng.uniform(resolution * 0.25, resolution * 0.75)
        radius = rng.uniform(resolution * 0.15, resolution * 0.3)
        disk = ((rows - cy) ** 2 + (cols - cx) ** 2) <= radius**2
        masks[i] = disk.astype(np.int64)
        images[i, :, :, 0] = disk + rng.normal(0.0, noise, size=disk.shape)
    return images, masks


def train_toy(
    images: np.ndarray,
    masks: np.ndarray,
    cfg: SparsityConfig,
    epochs: int,
    learning_rate: float = 0.22,
    seed: int = 0,
    net: ToyNet | None = None,
) -> tuple[TrainHistory, ToyNet]:
    """Full-batch gradient descent on the gated objective.

    The gate factor and active ratio are recomputed each epoch from the
    current forward pass and held constant within the step; gradients flow
    through the task loss and the sparsity penalty only.
    """
    if epochs < 1:
        raise ConfigError(f"epochs must be >= 1, got {epochs}")
    if net is None:
        net = ToyNet.initialize(np.random.default_rng(seed))
    history = TrainHistory()
    for _ in range(epochs):
        state = net.forward(images)
        task, d_logits = softmax_cross_entropy(state["logits"], masks)
        penalized = net.penalized_layers(cfg)
        l_sp = sparsity_loss(penalized)
        r_sp = active_ratio([state[f"act{i}"] for i in (1, 2)])
        gate = gamma(r_sp, cfg.beta, cfg.alpha)
        objective = task + cfg.lam * l_sp * gate
        if not np.isfinite(objective):
            raise TrainingError("objective diverged", history=history)
        history.append(task, l_sp, r_sp, gate, objective)

        d_k_head, d_b_head, d_act2 = conv_backward(state["act2"], net.head, d_logits)
        d_pre2 = d_act2 * (state["pre2"] > 0)
        d_k2, d_b2, d_act1 = conv_backward(state["act1"], net.conv2, d_pre2)
        d_pre1 = d_act1 * (state["pre1"] > 0)
        d_k1, d_b1, _ = conv_backward(images, net.conv1, d_pre1)

        grads = {
            "conv1": [d_k1, d_b1],
            "conv2": [d_k2, d_b2],
            "head": [d_k_head, d_b_head],
        }
        if cfg.lam > 0 and gate > 0:
            for layer, (g_k, g_b) in zip(penalized, sparsity_loss_grad(penalized)):
                scale = cfg.lam * gate
                grads[layer.layer_id][0] = grads[layer.layer_id][0] + scale * g_k
                grads[layer.layer_id][1] = grads[layer.layer_id][1] + scale * g_b

        def step(layer: ConvLayerParams) -> ConvLayerParams:
            g_k, g_b = grads[layer.layer_id]
            return ConvLayerParams(
                layer.kernels - learning_rate * g_k,
                layer.biases - learning_rate * g_b,
                layer.layer_id,
            )

        try:
            net = ToyNet(step(net.conv1), step(net.conv2), step(net.head))
        except ShapeError as exc:
            raise TrainingError(f"update produced invalid parameters: {exc}",
                                history=history) from exc
    return history, net


def demo_config(beta: float = 0.3, alpha: float = 0.5, lam: float = 1.0) -> SparsityConfig:
    return SparsityConfig(beta=beta, alpha=alpha, lam=lam, layers=("conv1", "conv2"))
