"""The autoencoding receiver: model assembly, training loop, inference.

Architecture (fixed shape, sized by the config):

    Input(L, 2) -> GaussianNoise(sigma) ->
    [Conv2D(f_i, Z) + tanh -> MaxPoolV(S)] * stages ->
    [Conv2D + tanh -> UpsampleV(S)] * stages ->
    Flatten -> Dense * 6 (tanh) -> (K,)

Encoder filter counts halve per stage starting from ``base_filters``;
the decoder mirrors them in reverse so the spatial height telescopes
back to L before flattening.  The noise layer emulates the AWGN channel
at the training SNR (sigma = sqrt(N0/2) per real component), is active
only in train mode, and owns a private RNG stream.

Training splits the dataset into train/val/test fractions, shuffles the
training set with a fresh seeded permutation each epoch, optimizes MSE
against ±1 bit targets with Adam, and evaluates validation metrics at
each epoch end on clean blocks plus channel-equivalent noise (seeded
per epoch) in infer mode — noiseless validation would measure the wrong
task.
"""

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from linkforge import nn
from linkforge.modem import snr_to_n0
from linkforge.rng import Rng


def default_dense_widths(height: int, k_bits: int) -> list:
    """Funnel [2L, 2L, L, L, max(L/2, K), K] from the flattened stack to K."""
    return [
        2 * height,
        2 * height,
        height,
        height,
        max(height // 2, k_bits),
        k_bits,
    ]


@dataclass
class AdnnConfig:
    """Architecture and training protocol knobs (validated on creation)."""

    height: int  # symbol rows per block
    k_bits: int  # information bits per block (K)
    encoder_stages: int = 3
    base_filters: int = 0  # 0 -> height, per the "first filter count = L" rule
    kernel_size: int = 3
    pool_factor: int = 2
    dense_widths: list = field(default_factory=list)  # [] -> default funnel
    train_snr_db: float = 7.0
    epochs: int = 100
    batch_size: int = 128
    split: tuple = (0.8, 0.1, 0.1)
    seed: int = 1

    def __post_init__(self):
        if self.base_filters == 0:
            self.base_filters = self.height
        if not self.dense_widths:
            self.dense_widths = default_dense_widths(self.height, self.k_bits)
        if self.height < 1 or self.k_bits < 1:
            raise ValueError("height and k_bits must be positive")
        if self.encoder_stages < 1:
            raise ValueError("encoder_stages must be >= 1")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ValueError("kernel_size must be odd")
        if self.pool_factor < 1:
            raise ValueError("pool_factor must be >= 1")
        if self.base_filters < 1:
            raise ValueError("base_filters must be >= 1")
        telescope = self.pool_factor**self.encoder_stages
        if self.height % telescope:
            raise ValueError(
                f"height {self.height} not divisible by pool_factor^stages "
                f"= {telescope}; the decoder could not restore the input height"
            )
        if len(self.dense_widths) != 6:
            raise ValueError(
                f"dense_widths needs exactly 6 entries, got {len(self.dense_widths)}"
            )
        if self.dense_widths[-1] != self.k_bits:
            raise ValueError(
                f"last dense width must equal k_bits={self.k_bits}, "
                f"got {self.dense_widths[-1]}"
            )
        if any(w < 1 for w in self.dense_widths):
            raise ValueError("dense widths must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if len(self.split) != 3 or any(f <= 0 for f in self.split):
            raise ValueError("split needs three positive fractions")
        if abs(sum(self.split) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {self.split}")

    def noise_sigma(self) -> float:
        """Per-component channel noise std-dev at the training SNR."""
        return math.sqrt(snr_to_n0(self.train_snr_db) / 2.0)

    def encoder_filters(self) -> list:
        return [max(self.base_filters // 2**i, 1) for i in range(self.encoder_stages)]

    def decoder_filters(self) -> list:
        """Filter counts doubling back up, capped at the encoder's first count."""
        counts = []
        c = self.encoder_filters()[-1]
        for _ in range(self.encoder_stages):
            c = min(2 * c, self.base_filters)
            counts.append(c)
        return counts

    def flatten_width(self) -> int:
        """Feature count entering the dense funnel."""
        return self.height * 2 * self.decoder_filters()[-1]


@dataclass
class EpochRecord:
    epoch: int
    train_mse: float
    val_mse: float
    train_ber: float
    val_ber: float
    train_acc: float
    val_acc: float
    wall_time: float


@dataclass
class TrainingHistory:
    records: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)


class Model:
    """Ordered layer stack with shared forward/backward plumbing."""

    def __init__(self, cfg: AdnnConfig, seed: int, layers: list):
        self.cfg = cfg
        self.seed = seed
        self.layers = layers
        self.noise_layer = next(
            layer for layer in layers if layer.kind == "gaussian_noise"
        )

    @property
    def params(self) -> list:
        return [p for layer in self.layers for p in layer.params]

    @property
    def grads(self) -> list:
        return [g for layer in self.layers for g in layer.grads]

    def zero_grads(self) -> None:
        for layer in self.layers:
            layer.zero_grads()

    def forward(self, x: np.ndarray, mode: str = "infer") -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, mode)
        return x

    def backward(self, grad: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameter_count(self) -> int:
        return sum(p.size for p in self.params)


def build_model(cfg: AdnnConfig, seed: int = None) -> Model:
    """Assemble and deterministically initialize the receiver network."""
    if seed is None:
        seed = cfg.seed
    root = Rng(seed)
    layers = [
        nn.InputLayer(cfg.height, 2),
        nn.GaussianNoise(cfg.noise_sigma(), root.derive("noise-layer")),
    ]
    # encoder filter counts halve per stage; decoder counts double back up
    # until the first (largest) count is reached, so the stack entering
    # Flatten is (L, 2, decoder_filters[-1])
    channels = [1] + cfg.encoder_filters()
    for c_in, c_out in zip(channels, channels[1:]):
        layers.append(nn.Conv2D(c_in, c_out, cfg.kernel_size, activation="tanh"))
        layers.append(nn.MaxPoolV(cfg.pool_factor))
    c_in = channels[-1]
    for c_out in cfg.decoder_filters():
        layers.append(nn.Conv2D(c_in, c_out, cfg.kernel_size, activation="tanh"))
        layers.append(nn.UpsampleV(cfg.pool_factor))
        c_in = c_out
    layers.append(nn.Flatten())
    width = cfg.flatten_width()
    for w in cfg.dense_widths:
        layers.append(nn.Dense(width, w, activation="tanh"))
        width = w

    for idx, layer in enumerate(layers):
        if not layer.params:
            continue
        rng = root.derive(("init", idx))
        if layer.kind == "conv2d":
            fan_in = layer.z * layer.z * layer.c_in
            bound = math.sqrt(1.0 / fan_in)
            layer.kernels[...] = (
                rng.uniform(layer.kernels.size) * 2.0 - 1.0
            ).reshape(layer.kernels.shape) * bound
        elif layer.kind == "dense":
            bound = math.sqrt(1.0 / layer.n_in)
            layer.weights[...] = (
                rng.uniform(layer.weights.size) * 2.0 - 1.0
            ).reshape(layer.weights.shape) * bound

    model = Model(cfg, seed, layers)
    _assert_telescoping(model)
    return model


def _assert_telescoping(model: Model) -> None:
    """Shape-trace a probe block: height entering Flatten must equal L."""
    x = np.zeros((1, model.cfg.height, 2), dtype=np.float64)
    for layer in model.layers:
        if layer.kind == "flatten":
            if x.shape[1] != model.cfg.height:
                raise ValueError(
                    f"decoder restores height {x.shape[1]}, expected "
                    f"{model.cfg.height}"
                )
            return
        x = layer.forward(x, "infer")
    raise ValueError("model has no flatten layer")


def forward_block(model: Model, y: np.ndarray, mode: str = "infer") -> np.ndarray:
    """Soft bit estimates in (-1, 1) for one (L, 2) block."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (model.cfg.height, 2):
        raise ValueError(f"expected ({model.cfg.height}, 2) block, got {y.shape}")
    return model.forward(y[None], mode)[0]


def infer_bits(model: Model, y: np.ndarray) -> np.ndarray:
    """Hard bit decisions for one block; soft value >= 0 decides bit 0."""
    return (forward_block(model, y, "infer") < 0.0).astype(np.uint8)


def infer_bits_batch(model: Model, ys: np.ndarray) -> np.ndarray:
    """Vectorized :func:`infer_bits` over a (B, L, 2) stack."""
    return (model.forward(np.asarray(ys, dtype=np.float64), "infer") < 0.0).astype(
        np.uint8
    )


def split_dataset(n_blocks: int, split, seed: int):
    """Seeded train/val/test index split; every part must be non-empty."""
    order = Rng(seed).derive("split").permutation(n_blocks)
    n_train = int(n_blocks * split[0])
    n_val = int(n_blocks * split[1])
    train = order[:n_train]
    val = order[n_train : n_train + n_val]
    test = order[n_train + n_val :]
    if not (train.size and val.size and test.size):
        raise ValueError(
            f"split {split} of {n_blocks} blocks leaves an empty part "
            f"({train.size}/{val.size}/{test.size})"
        )
    return train, val, test


def train(
    model: Model,
    blocks: np.ndarray,
    bits: np.ndarray,
    cfg: AdnnConfig = None,
    optimizer: nn.Adam = None,
) -> TrainingHistory:
    """Run the full training protocol; returns the per-epoch history.

    ``blocks`` are clean (L, 2) symbol blocks stacked to (S, L, 2) —
    noise comes from the model's noise layer; ``bits`` is the matching
    (S, K) 0/1 target matrix.
    """
    if cfg is None:
        cfg = model.cfg
    blocks = np.asarray(blocks, dtype=np.float64)
    bits = np.asarray(bits, dtype=np.uint8)
    if blocks.ndim != 3 or blocks.shape[1:] != (cfg.height, 2):
        raise ValueError(f"blocks must be (S, {cfg.height}, 2), got {blocks.shape}")
    if bits.shape != (blocks.shape[0], cfg.k_bits):
        raise ValueError(
            f"bits must be ({blocks.shape[0]}, {cfg.k_bits}), got {bits.shape}"
        )
    targets = 1.0 - 2.0 * bits.astype(np.float64)
    train_idx, val_idx, _ = split_dataset(blocks.shape[0], cfg.split, cfg.seed)
    x_train, t_train = blocks[train_idx], targets[train_idx]
    x_val, t_val = blocks[val_idx], targets[val_idx]

    if optimizer is None:
        optimizer = nn.Adam(model.params)
    sigma = cfg.noise_sigma()
    root = Rng(cfg.seed)
    history = TrainingHistory()
    for epoch in range(1, cfg.epochs + 1):
        tic = time.perf_counter()
        order = root.derive(("shuffle", epoch)).permutation(x_train.shape[0])
        loss_sum = 0.0
        err_sum = 0.0
        n_elems = 0
        for start in range(0, order.size, cfg.batch_size):
            sel = order[start : start + cfg.batch_size]
            xb, tb = x_train[sel], t_train[sel]
            pred = model.forward(xb, "train")
            loss, grad = nn.mse_loss(pred, tb)
            loss_sum += loss * pred.size
            err_sum += nn.metric_ber(pred, tb) * pred.size
            n_elems += pred.size
            model.zero_grads()
            model.backward(grad)
            optimizer.step(model.grads)
        train_mse = loss_sum / n_elems
        train_ber = err_sum / n_elems

        val_noise = root.derive(("val-noise", epoch)).normal(x_val.shape, sigma)
        val_pred = model.forward(x_val + val_noise, "infer")
        val_mse = nn.mse_loss(val_pred, t_val)[0]
        val_ber = nn.metric_ber(val_pred, t_val)
        history.records.append(
            EpochRecord(
                epoch=epoch,
                train_mse=train_mse,
                val_mse=val_mse,
                train_ber=train_ber,
                val_ber=val_ber,
                train_acc=1.0 - train_ber,
                val_acc=1.0 - val_ber,
                wall_time=time.perf_counter() - tic,
            )
        )
    return history


def save_model(model: Model, path) -> None:
    """Write the parameter container plus a ``<path>.json`` architecture sidecar."""
    nn.save_params(path, model.layers)
    arch = {
        "format": "linkforge-adnn",
        "version": 1,
        "seed": model.seed,
        "config": asdict(model.cfg),
    }
    with open(f"{path}.json", "w", encoding="utf-8") as fh:
        json.dump(arch, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> Model:
    """Rebuild the model from a container + sidecar; bit-exact parameters."""
    with open(f"{path}.json", "r", encoding="utf-8") as fh:
        arch = json.load(fh)
    if arch.get("format") != "linkforge-adnn" or arch.get("version") != 1:
        raise nn.ModelFormatError(f"unsupported model sidecar {path}.json")
    raw = dict(arch["config"])
    raw["dense_widths"] = list(raw["dense_widths"])
    raw["split"] = tuple(raw["split"])
    cfg = AdnnConfig(**raw)
    model = build_model(cfg, arch["seed"])
    records = nn.load_params(path)
    if len(records) != len(model.layers):
        raise nn.ModelFormatError(
            f"container has {len(records)} layers, model needs {len(model.layers)}"
        )
    for layer, (kind, tensors) in zip(model.layers, records):
        if kind != layer.kind:
            raise nn.ModelFormatError(f"layer kind {kind} != expected {layer.kind}")
        if len(tensors) != len(layer.params):
            raise nn.ModelFormatError(f"{kind}: wrong tensor count")
        for param, value in zip(layer.params, tensors):
            if param.shape != value.shape:
                raise nn.ModelFormatError(
                    f"{kind}: tensor shape {value.shape} != expected {param.shape}"
                )
            param[...] = value
    return model
