"""Layers of the from-scratch network engine.

Every layer exposes ``forward(x, mode)`` and ``backward(grad)``; the
backward call consumes the cache left by the most recent forward and
accumulates parameter gradients in ``.grads`` (zeroed by
``zero_grads``).  Tensors are plain float64 numpy arrays; convolutional
activations use the layout ``(batch, height, width, channels)``.

``mode`` is ``"train"`` or ``"infer"``; only :class:`GaussianNoise`
behaves differently between the two.
"""

import numpy as np

from linkforge import kernels
from linkforge.rng import Rng

ACTIVATIONS = ("tanh", "linear")


def _check_activation(activation: str) -> str:
    if activation not in ACTIVATIONS:
        raise ValueError(f"activation must be one of {ACTIVATIONS}, got {activation!r}")
    return activation


class Layer:
    """Base layer: no parameters, identity bookkeeping."""

    kind = "layer"

    @property
    def params(self) -> list:
        return []

    @property
    def grads(self) -> list:
        return []

    def zero_grads(self) -> None:
        for g in self.grads:
            g[...] = 0.0

    def forward(self, x: np.ndarray, mode: str = "infer") -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class InputLayer(Layer):
    """Validates (B, height, 2) symbol batches and adds the channel axis."""

    kind = "input"

    def __init__(self, height: int, width: int = 2):
        if height < 1 or width < 1:
            raise ValueError("input dimensions must be positive")
        self.height = height
        self.width = width

    def forward(self, x, mode="infer"):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 3 or x.shape[1:] != (self.height, self.width):
            raise ValueError(
                f"expected input (B, {self.height}, {self.width}), got {x.shape}"
            )
        return x[..., None]

    def backward(self, grad):
        return grad[..., 0]


class GaussianNoise(Layer):
    """Adds N(0, sigma^2) in train mode, identity in infer mode.

    Draws come from the layer's own stream, so all other training
    randomness is unaffected by how often the layer runs.
    """

    kind = "gaussian_noise"

    def __init__(self, sigma: float, rng: Rng):
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        self.sigma = float(sigma)
        self.rng = rng

    def forward(self, x, mode="infer"):
        if mode == "train" and self.sigma > 0.0:
            return x + self.rng.normal(x.shape, self.sigma)
        return x

    def backward(self, grad):
        return grad


class Conv2D(Layer):
    """Same-padded square cross-correlation with optional tanh."""

    kind = "conv2d"

    def __init__(self, c_in: int, c_out: int, z: int = 3, activation: str = "tanh"):
        if z < 1 or z % 2 == 0:
            raise ValueError(f"kernel size must be odd and >= 1, got {z}")
        if c_in < 1 or c_out < 1:
            raise ValueError("channel counts must be positive")
        self.c_in = c_in
        self.c_out = c_out
        self.z = z
        self.activation = _check_activation(activation)
        self.kernels = np.zeros((c_out, z, z, c_in), dtype=np.float64)
        self.bias = np.zeros(c_out, dtype=np.float64)
        self._d_kernels = np.zeros_like(self.kernels)
        self._d_bias = np.zeros_like(self.bias)
        self._cache = None

    @property
    def params(self):
        return [self.kernels, self.bias]

    @property
    def grads(self):
        return [self._d_kernels, self._d_bias]

    def forward(self, x, mode="infer"):
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.ndim != 4 or x.shape[3] != self.c_in:
            raise ValueError(
                f"expected (B, H, W, {self.c_in}) input, got {x.shape}"
            )
        y = kernels.conv2d_forward(x, self.kernels, self.bias)
        if self.activation == "tanh":
            y = np.tanh(y)
        self._cache = (x, y if self.activation == "tanh" else None)
        return y

    def backward(self, grad):
        x, act = self._cache
        grad = np.ascontiguousarray(grad, dtype=np.float64)
        if self.activation == "tanh":
            grad = grad * (1.0 - act * act)
        dx, dk, db = kernels.conv2d_backward(x, self.kernels, grad)
        self._d_kernels += dk
        self._d_bias += db
        return dx


class MaxPoolV(Layer):
    """Vertical max pooling: window and stride S on the height axis only.

    A partial last window takes the max of the remaining rows.  Ties go
    to the first (topmost) occurrence, and the backward pass routes each
    gradient entirely to its window's argmax.
    """

    kind = "maxpool_v"

    def __init__(self, s: int):
        if s < 1:
            raise ValueError(f"stride must be >= 1, got {s}")
        self.s = s
        self._cache = None

    def forward(self, x, mode="infer"):
        x = np.asarray(x, dtype=np.float64)
        b, h, w, c = x.shape
        n_win = -(-h // self.s)
        pad = n_win * self.s - h
        if pad:
            x_p = np.concatenate(
                [x, np.full((b, pad, w, c), -np.inf, dtype=np.float64)], axis=1
            )
        else:
            x_p = x
        win = x_p.reshape(b, n_win, self.s, w, c)
        arg = win.argmax(axis=2)
        out = np.take_along_axis(win, arg[:, :, None], axis=2)[:, :, 0]
        self._cache = (x.shape, arg)
        return out

    def backward(self, grad):
        (b, h, w, c), arg = self._cache
        n_win = arg.shape[1]
        dx_p = np.zeros((b, n_win, self.s, w, c), dtype=np.float64)
        np.put_along_axis(dx_p, arg[:, :, None], grad[:, :, None], axis=2)
        return dx_p.reshape(b, n_win * self.s, w, c)[:, :h]


class UpsampleV(Layer):
    """Vertical Kronecker upsampling: each row repeated S times."""

    kind = "upsample_v"

    def __init__(self, s: int):
        if s < 1:
            raise ValueError(f"factor must be >= 1, got {s}")
        self.s = s
        self._in_h = None

    def forward(self, x, mode="infer"):
        x = np.asarray(x, dtype=np.float64)
        self._in_h = x.shape[1]
        return np.repeat(x, self.s, axis=1)

    def backward(self, grad):
        b, hs, w, c = grad.shape
        return grad.reshape(b, self._in_h, self.s, w, c).sum(axis=2)


class Flatten(Layer):
    """Row-major (B, H, W, C) -> (B, H*W*C)."""

    kind = "flatten"

    def __init__(self):
        self._in_shape = None

    def forward(self, x, mode="infer"):
        x = np.asarray(x, dtype=np.float64)
        self._in_shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad):
        return grad.reshape(self._in_shape)


class Dense(Layer):
    """Affine map y = act(x @ W.T + b) with W of shape (n_out, n_in)."""

    kind = "dense"

    def __init__(self, n_in: int, n_out: int, activation: str = "tanh"):
        if n_in < 1 or n_out < 1:
            raise ValueError("layer widths must be positive")
        self.n_in = n_in
        self.n_out = n_out
        self.activation = _check_activation(activation)
        self.weights = np.zeros((n_out, n_in), dtype=np.float64)
        self.bias = np.zeros(n_out, dtype=np.float64)
        self._d_weights = np.zeros_like(self.weights)
        self._d_bias = np.zeros_like(self.bias)
        self._cache = None

    @property
    def params(self):
        return [self.weights, self.bias]

    @property
    def grads(self):
        return [self._d_weights, self._d_bias]

    def forward(self, x, mode="infer"):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ValueError(f"expected (B, {self.n_in}) input, got {x.shape}")
        y = x @ self.weights.T + self.bias
        if self.activation == "tanh":
            y = np.tanh(y)
        self._cache = (x, y if self.activation == "tanh" else None)
        return y

    def backward(self, grad):
        x, act = self._cache
        grad = np.asarray(grad, dtype=np.float64)
        if self.activation == "tanh":
            grad = grad * (1.0 - act * act)
        self._d_weights += grad.T @ x
        self._d_bias += grad.sum(axis=0)
        return grad @ self.weights
