"""Dataset generation: seeded uniform bits, coded and mapped into blocks."""

import numpy as np

from linkforge import ldpc, modem
from linkforge.harness.config import ExperimentConfig
from linkforge.rng import Rng


def generate_dataset(cfg: ExperimentConfig, code: ldpc.LdpcCode = None, seed=None):
    """Return ``(tx_bits, blocks)``: (S, K) info bits and (S, height, 2) symbols.

    Blocks are clean — the channel (baseline path) or the model's noise
    layer (training path) adds the noise.  Deterministic for a fixed
    seed; the bit stream comes from the ``"dataset"`` child stream.
    """
    if code is None:
        code = cfg.load_code()
    if seed is None:
        seed = cfg.seed
    if cfg.K % code.k:
        raise ValueError(f"K={cfg.K} is not a multiple of k={code.k}")
    rng = Rng(seed).derive("dataset")
    bits = rng.bits(cfg.S * cfg.K).reshape(cfg.S, cfg.K)
    msgs = bits.reshape(-1, code.k).astype(np.int64)
    coded = ((msgs @ code.G_systematic.astype(np.int64)) & 1).astype(np.uint8)
    symbols = modem.map_bits(coded.ravel(), cfg.M)
    blocks = symbols.reshape(cfg.S, cfg.block_height(), 2)
    return bits, blocks
