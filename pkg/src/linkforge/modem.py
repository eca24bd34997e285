"""Constellation mapping, AWGN channel, exact LLR demapping, BER counting.

Conventions (shared across the toolkit):

* symbols are rows of an ``(L, 2)`` float64 matrix — column 0 is the
  in-phase component, column 1 the quadrature one; BPSK uses the I axis
  only and keeps a zero Q column so every constellation presents the
  same tensor layout;
* SNR means Es/N0 in dB with unit symbol energy, so ``N0 =
  10**(-snr_db/10)`` and each real noise component has variance N0/2;
* LLRs are positive when bit 0 is the more likely hypothesis (matching
  the ``1 - 2b`` mapping) and are clamped to ``±38``.
"""

import math
from dataclasses import dataclass

import numpy as np

from linkforge.rng import Rng

LLR_CLAMP = 38.0
_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class ChannelConfig:
    """AWGN channel parameters: Es/N0 in dB plus the noise stream seed."""

    snr_db: float
    rng_seed: int


def snr_to_n0(snr_db: float) -> float:
    """Noise spectral density N0 for Es/N0 = ``snr_db`` dB at Es = 1."""
    return 10.0 ** (-snr_db / 10.0)


def map_bits(bits: np.ndarray, m_order: int) -> np.ndarray:
    """Map bits to unit-energy symbols: 2 = BPSK, 4 = Gray QPSK."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1:
        raise ValueError(f"bits must be a vector, got shape {bits.shape}")
    if m_order == 2:
        iq = np.zeros((bits.size, 2), dtype=np.float64)
        iq[:, 0] = 1.0 - 2.0 * bits
        return iq
    if m_order == 4:
        if bits.size % 2:
            raise ValueError("QPSK needs an even number of bits")
        pairs = bits.reshape(-1, 2)
        return _INV_SQRT2 * (1.0 - 2.0 * pairs.astype(np.float64))
    raise ValueError(f"unsupported constellation order {m_order} (use 2 or 4)")


def apply_awgn(x: np.ndarray, cfg: ChannelConfig) -> np.ndarray:
    """y = x + w with i.i.d. N(0, N0/2) per real component."""
    rng = Rng(cfg.rng_seed).derive("awgn")
    return add_noise(x, snr_to_n0(cfg.snr_db), rng)


def add_noise(x: np.ndarray, n0: float, rng: Rng) -> np.ndarray:
    """Streaming variant of :func:`apply_awgn` drawing from ``rng``."""
    x = np.asarray(x, dtype=np.float64)
    if n0 == 0.0:
        return x.copy()
    return x + rng.normal(x.shape, math.sqrt(n0 / 2.0))


def demap_llr(y: np.ndarray, m_order: int, n0: float) -> np.ndarray:
    """Exact per-bit LLRs ln[P(y|b=0)/P(y|b=1)], clamped to ±38.

    For BPSK this is ``4*I/N0`` (one LLR per symbol); for Gray QPSK the
    axes separate, giving ``2*sqrt(2)*I/N0`` for the first bit of each
    pair and the same function of Q for the second.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != 2:
        raise ValueError(f"symbols must have shape (L, 2), got {y.shape}")
    if n0 <= 0.0:
        raise ValueError(f"n0 must be positive, got {n0}")
    if m_order == 2:
        llr = 4.0 * y[:, 0] / n0
    elif m_order == 4:
        llr = (2.0 * math.sqrt(2.0) / n0) * y.ravel()
    else:
        raise ValueError(f"unsupported constellation order {m_order} (use 2 or 4)")
    return np.clip(llr, -LLR_CLAMP, LLR_CLAMP)


def hard_demap(y: np.ndarray, m_order: int) -> np.ndarray:
    """Minimum-distance hard decisions; component >= 0 decides bit 0."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != 2:
        raise ValueError(f"symbols must have shape (L, 2), got {y.shape}")
    if m_order == 2:
        return (y[:, 0] < 0.0).astype(np.uint8)
    if m_order == 4:
        return (y.ravel() < 0.0).astype(np.uint8)
    raise ValueError(f"unsupported constellation order {m_order} (use 2 or 4)")


def measure_ber(tx_bits: np.ndarray, rx_bits: np.ndarray):
    """(errors, total, ber) between two equal-length bit vectors."""
    tx = np.asarray(tx_bits, dtype=np.uint8).ravel()
    rx = np.asarray(rx_bits, dtype=np.uint8).ravel()
    if tx.size == 0:
        raise ValueError("cannot measure BER on empty vectors")
    if tx.size != rx.size:
        raise ValueError(f"length mismatch: {tx.size} vs {rx.size}")
    errors = int(np.count_nonzero(tx != rx))
    return errors, tx.size, errors / tx.size


def qfunc(x: float) -> float:
    """Gaussian tail probability Q(x); uncoded BPSK BER is Q(sqrt(2*Es/N0))."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def uncoded_bpsk_ber(snr_db: float) -> float:
    """Closed-form uncoded BPSK hard-decision BER at Es/N0 = ``snr_db``."""
    return qfunc(math.sqrt(2.0 / snr_to_n0(snr_db)))
