"""Flat binary container for model parameters.

Layout (all integers little-endian uint32, floats little-endian
float64):

    magic b"LFNN" | version | layer_count
    per layer: kind_tag | tensor_count
               per tensor: ndim | dim_0 .. dim_{ndim-1} | raw float64 data

Kind tags are stable: input=0, gaussian_noise=1, conv2d=2, maxpool_v=3,
upsample_v=4, flatten=5, dense=6.  Round-trips are bit-exact; loading
validates magic, version and exact byte counts (truncation is an error,
never a partial model).
"""

import struct

import numpy as np

MAGIC = b"LFNN"
VERSION = 1

KIND_TAGS = {
    "input": 0,
    "gaussian_noise": 1,
    "conv2d": 2,
    "maxpool_v": 3,
    "upsample_v": 4,
    "flatten": 5,
    "dense": 6,
}
TAG_KINDS = {v: k for k, v in KIND_TAGS.items()}


class ModelFormatError(ValueError):
    """Bad magic, unsupported version, or truncated/overlong container."""


def dump_params(layers) -> bytes:
    """Serialize ``(kind, tensors)`` records for every layer, in order."""
    out = [MAGIC, struct.pack("<II", VERSION, len(layers))]
    for layer in layers:
        tensors = layer.params
        out.append(struct.pack("<II", KIND_TAGS[layer.kind], len(tensors)))
        for t in tensors:
            out.append(struct.pack("<I", t.ndim))
            out.append(struct.pack(f"<{t.ndim}I", *t.shape))
            out.append(np.ascontiguousarray(t, dtype="<f8").tobytes())
    return b"".join(out)


def parse_params(blob: bytes):
    """Inverse of :func:`dump_params`: list of ``(kind, [arrays])``."""
    view = memoryview(blob)
    pos = 0

    def take(count: int) -> memoryview:
        nonlocal pos
        if pos + count > len(view):
            raise ModelFormatError(
                f"truncated container: wanted {count} bytes at offset {pos}, "
                f"only {len(view) - pos} left"
            )
        chunk = view[pos : pos + count]
        pos += count
        return chunk

    if bytes(take(4)) != MAGIC:
        raise ModelFormatError("not a model container (bad magic)")
    version, n_layers = struct.unpack("<II", take(8))
    if version != VERSION:
        raise ModelFormatError(f"unsupported container version {version}")
    records = []
    for _ in range(n_layers):
        tag, n_tensors = struct.unpack("<II", take(8))
        if tag not in TAG_KINDS:
            raise ModelFormatError(f"unknown layer kind tag {tag}")
        tensors = []
        for _ in range(n_tensors):
            (ndim,) = struct.unpack("<I", take(4))
            shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
            count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
            data = np.frombuffer(take(8 * count), dtype="<f8")
            tensors.append(data.reshape(shape).astype(np.float64))
        records.append((TAG_KINDS[tag], tensors))
    if pos != len(view):
        raise ModelFormatError(f"{len(view) - pos} trailing bytes after container")
    return records


def save_params(path, layers) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_params(layers))


def load_params(path):
    with open(path, "rb") as fh:
        return parse_params(fh.read())
