"""BER sweeps: per-point Monte-Carlo runners, stopping rule, curve files.

Every point draws from its own seed, ``base_seed XOR fnv1a64(tag) XOR
point_index``, so points are independent of execution order and safe to
parallelize.  Accumulation stops as soon as ``errors >=
min_error_events`` or exactly at ``bits == max_bits`` (the final block
is trimmed to land on the boundary), so every recorded point satisfies
the stopping-rule invariant literally.

Curves are written after every point with an atomic
temp-file-then-rename replace, which makes interrupted sweeps resumable
by point: rerunning recomputes only the missing points and produces a
byte-identical CSV.  Timestamps live in the ``.meta.json`` sidecar
only, never in the CSV.
"""

import json
import os
import tempfile
import time
from dataclasses import dataclass

import numpy as np

from linkforge import adnn as adnn_mod
from linkforge import kernels, ldpc, modem
from linkforge.harness.config import ExperimentConfig
from linkforge.rng import MASK64, Rng, fnv1a64

RECEIVER_TAGS = {"baseline": "baseline_bp", "adnn": "adnn", "uncoded": "uncoded"}
CSV_HEADER = "snr_db,bits,errors,ber"


@dataclass(frozen=True)
class BerPoint:
    snr_db: float
    bits: int
    errors: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits


def point_seed(base_seed: int, tag: str, index: int) -> int:
    return (base_seed ^ fnv1a64(tag) ^ index) & MASK64


def snr_points(start: float, stop: float, step: float) -> list:
    pts = []
    i = 0
    while True:
        s = start + i * step
        if s > stop + 1e-9:
            return pts
        pts.append(round(s, 9))
        i += 1


class _Accumulator:
    """Error/bit bookkeeping implementing the stopping rule exactly."""

    def __init__(self, min_error_events: int, max_bits: int):
        self.min_errors = min_error_events
        self.max_bits = max_bits
        self.bits = 0
        self.errors = 0

    @property
    def done(self) -> bool:
        return self.errors >= self.min_errors or self.bits >= self.max_bits

    def add_streams(self, tx: np.ndarray, rx: np.ndarray) -> None:
        """Count mismatches of two flat bit vectors, trimmed to max_bits."""
        take = min(tx.size, self.max_bits - self.bits)
        if take <= 0:
            return
        self.errors += int(np.count_nonzero(tx[:take] != rx[:take]))
        self.bits += take

    def add_blocks(self, tx: np.ndarray, rx: np.ndarray) -> None:
        """Count (B, K) block matrices row by row, stopping mid-stream.

        Whole blocks are consumed until a threshold trips; the block
        that would cross max_bits is trimmed to land exactly on it.
        """
        per_block = (tx != rx).sum(axis=1)
        for i in range(tx.shape[0]):
            if self.done:
                return
            if self.bits + tx.shape[1] > self.max_bits:
                self.add_streams(tx[i], rx[i])
                return
            self.errors += int(per_block[i])
            self.bits += tx.shape[1]


def run_uncoded_point(
    cfg: ExperimentConfig, snr_db: float, seed: int, channel_n0: float = None
) -> BerPoint:
    """Hard-decision BER of the bare constellation over the channel."""
    n0 = modem.snr_to_n0(snr_db) if channel_n0 is None else channel_n0
    bit_rng = Rng(seed).derive("bits")
    noise_rng = Rng(seed).derive("noise")
    acc = _Accumulator(cfg.min_error_events, cfg.max_bits)
    chunk = 1 << 16
    while not acc.done:
        take = min(chunk, cfg.max_bits - acc.bits)
        take -= take % cfg.bits_per_symbol()
        take = max(take, cfg.bits_per_symbol())
        tx = bit_rng.bits(take)
        y = modem.add_noise(modem.map_bits(tx, cfg.M), n0, noise_rng)
        acc.add_streams(tx, modem.hard_demap(y, cfg.M))
    return BerPoint(snr_db, acc.bits, acc.errors)


def run_baseline_point(
    cfg: ExperimentConfig,
    snr_db: float,
    seed: int,
    code: ldpc.LdpcCode = None,
    channel_n0: float = None,
) -> BerPoint:
    """Coded BER through map -> AWGN -> exact LLR demap -> BP decoding."""
    if code is None:
        code = cfg.load_code()
    n0 = modem.snr_to_n0(snr_db)
    chan_n0 = n0 if channel_n0 is None else channel_n0
    bit_rng = Rng(seed).derive("bits")
    noise_rng = Rng(seed).derive("noise")
    acc = _Accumulator(cfg.min_error_events, cfg.max_bits)
    g = code.G_systematic.astype(np.int64)
    sys_cols = code.col_permutation[: code.k]
    chunk = max(1, 4096 // code.n) * 64  # codewords per round
    while not acc.done:
        msgs = bit_rng.bits(chunk * code.k).reshape(chunk, code.k)
        coded = ((msgs.astype(np.int64) @ g) & 1).astype(np.uint8)
        y = modem.add_noise(modem.map_bits(coded.ravel(), cfg.M), chan_n0, noise_rng)
        llr = modem.demap_llr(y, cfg.M, n0).reshape(chunk, code.n)
        bits, _, _ = kernels.bp_decode_batch(
            np.ascontiguousarray(llr), code._row_ptr, code._edge_col,
            cfg.bp_max_iters, ldpc.LLR_CLAMP,
        )
        acc.add_blocks(msgs, bits[:, sys_cols])
    return BerPoint(snr_db, acc.bits, acc.errors)


def run_adnn_point(
    model: adnn_mod.Model,
    cfg: ExperimentConfig,
    snr_db: float,
    seed: int,
    code: ldpc.LdpcCode = None,
    channel_n0: float = None,
) -> BerPoint:
    """Learned-receiver BER through map -> AWGN -> infer_bits."""
    if code is None:
        code = cfg.load_code()
    if model.cfg.height != cfg.block_height() or model.cfg.k_bits != cfg.K:
        raise ValueError(
            f"model expects ({model.cfg.height}, 2) blocks of "
            f"{model.cfg.k_bits} bits; config provides ({cfg.block_height()}, 2) "
            f"of {cfg.K}"
        )
    chan_n0 = modem.snr_to_n0(snr_db) if channel_n0 is None else channel_n0
    bit_rng = Rng(seed).derive("bits")
    noise_rng = Rng(seed).derive("noise")
    acc = _Accumulator(cfg.min_error_events, cfg.max_bits)
    g = code.G_systematic.astype(np.int64)
    height = cfg.block_height()
    chunk = 64  # blocks per round
    while not acc.done:
        tx = bit_rng.bits(chunk * cfg.K).reshape(chunk, cfg.K)
        coded = ((tx.reshape(-1, code.k).astype(np.int64) @ g) & 1).astype(np.uint8)
        y = modem.add_noise(modem.map_bits(coded.ravel(), cfg.M), chan_n0, noise_rng)
        rx = adnn_mod.infer_bits_batch(model, y.reshape(chunk, height, 2))
        acc.add_blocks(tx, rx)
    return BerPoint(snr_db, acc.bits, acc.errors)


def format_row(p: BerPoint) -> str:
    return f"{p.snr_db:.10g},{p.bits},{p.errors},{p.ber:.6e}"


def write_curve(path, points) -> None:
    """Atomic CSV replace: write a temp file, fsync, rename over target."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="ascii", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for p in points:
                fh.write(format_row(p) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_curve(path) -> list:
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError(f"{path}: expected header {CSV_HEADER!r}")
    points = []
    for ln in lines[1:]:
        snr, bits, errors, _ = ln.split(",")
        points.append(BerPoint(float(snr), int(bits), int(errors)))
    return points


def sweep(
    receiver: str,
    cfg: ExperimentConfig,
    model: adnn_mod.Model = None,
    base_seed: int = None,
    out_path=None,
) -> list:
    """One BER point per grid SNR, written incrementally and resumable."""
    if receiver not in RECEIVER_TAGS:
        raise ValueError(f"receiver must be one of {sorted(RECEIVER_TAGS)}")
    if receiver == "adnn" and model is None:
        raise ValueError("the adnn receiver needs a trained model")
    tag = RECEIVER_TAGS[receiver]
    if base_seed is None:
        base_seed = cfg.seed
    grid = snr_points(cfg.snr_start, cfg.snr_stop, cfg.snr_step)
    if out_path is None:
        out_path = os.path.join(cfg.output_dir, f"{tag}.csv")

    code = cfg.load_code() if receiver in ("baseline", "adnn") else None
    points = []
    if os.path.exists(out_path):
        prior = read_curve(out_path)
        if [p.snr_db for p in prior] == [float(s) for s in grid[: len(prior)]]:
            points = prior[: len(grid)]

    meta_path = f"{out_path}.meta.json"
    started = time.time()
    for idx in range(len(points), len(grid)):
        snr = grid[idx]
        seed = point_seed(base_seed, tag, idx)
        if receiver == "uncoded":
            p = run_uncoded_point(cfg, snr, seed)
        elif receiver == "baseline":
            p = run_baseline_point(cfg, snr, seed, code)
        else:
            p = run_adnn_point(model, cfg, snr, seed, code)
        points.append(p)
        write_curve(out_path, points)
        _write_meta(meta_path, tag, cfg, base_seed, grid, len(points), started)
    if points and not os.path.exists(meta_path):
        _write_meta(meta_path, tag, cfg, base_seed, grid, len(points), started)
    return points


def _write_meta(path, tag, cfg, base_seed, grid, n_done, started) -> None:
    meta = {
        "receiver": tag,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "base_seed": base_seed,
        "point_seeds": [point_seed(base_seed, tag, i) for i in range(len(grid))],
        "snr_grid": [float(s) for s in grid],
        "points_done": n_done,
        "started_unix": started,
        "updated_unix": time.time(),
    }
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
