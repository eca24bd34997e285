"""linkforge: link-level simulation toolkit.

LDPC coding with sum-product decoding, BPSK/QPSK over AWGN with exact LLR
demapping, a small from-scratch neural-network engine, a denoising
autoencoder receiver built on it, and an experiment harness that measures
BER-vs-SNR curves for the classical and the learned receiver.
"""

from linkforge.kernels import BACKEND

__all__ = ["BACKEND", "__version__"]
__version__ = "0.1.0"
