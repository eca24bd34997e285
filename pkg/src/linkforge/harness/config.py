"""Experiment configuration: flat JSON files mirroring the field names.

Seed precedence for every CLI entry point: ``--seed`` flag beats the
``LINKFORGE_SEED`` environment variable, which beats the config file.
"""

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from linkforge import adnn, ldpc

SEED_ENV_VAR = "LINKFORGE_SEED"


@dataclass
class ExperimentConfig:
    """One experiment: code, block sizes, sweep grid, budgets, seeds."""

    # code selection: an asset path wins over (code_k, code_n, code_seed)
    code_k: int = 29
    code_n: int = 32
    code_seed: int = 1
    code_asset: str = ""
    K: int = 232  # information bits per block
    L: int = 256  # coded bits per block, L = (n/k) * K
    M: int = 2  # constellation order
    S: int = 2000  # dataset size in blocks
    train_snr_db: float = 7.0
    snr_start: float = -6.0
    snr_stop: float = 12.0
    snr_step: float = 2.0
    epochs: int = 30
    bp_max_iters: int = 50
    output_dir: str = "runs"
    seed: int = 1
    min_error_events: int = 100
    max_bits: int = 10_000_000
    # receiver-network knobs
    encoder_stages: int = 1
    base_filters: int = 0  # 0 -> block height
    kernel_size: int = 3
    pool_factor: int = 2
    batch_size: int = 128
    dense_widths: list = field(default_factory=list)
    split: tuple = (0.8, 0.1, 0.1)

    def __post_init__(self):
        if not self.code_asset:
            if not (2 <= self.code_k < self.code_n):
                raise ValueError(
                    f"need 2 <= code_k < code_n, got ({self.code_k}, {self.code_n})"
                )
        if self.M not in (2, 4):
            raise ValueError(f"M must be 2 or 4, got {self.M}")
        if self.K < 1 or self.L < 1 or self.S < 1:
            raise ValueError("K, L and S must be positive")
        if not self.code_asset:
            self._check_block_relation(self.code_k, self.code_n)
        if self.snr_step <= 0:
            raise ValueError(f"snr_step must be positive, got {self.snr_step}")
        if self.snr_start > self.snr_stop:
            raise ValueError("snr_start must not exceed snr_stop")
        if self.bp_max_iters < 1:
            raise ValueError("bp_max_iters must be >= 1")
        if self.min_error_events < 1 or self.max_bits < 1:
            raise ValueError("min_error_events and max_bits must be positive")
        if self.L % self.bits_per_symbol():
            raise ValueError(f"L={self.L} not divisible by bits/symbol")

    def _check_block_relation(self, k: int, n: int) -> None:
        want = Fraction(n, k) * self.K
        if want.denominator != 1 or want != self.L:
            raise ValueError(
                f"block relation violated: (n/k)*K = ({n}/{k})*{self.K} = "
                f"{float(want):g} but L = {self.L}"
            )

    def bits_per_symbol(self) -> int:
        return int(math.log2(self.M))

    def block_height(self) -> int:
        """Symbol rows per block at constellation order M."""
        return self.L // self.bits_per_symbol()

    def load_code(self) -> ldpc.LdpcCode:
        if self.code_asset:
            code = ldpc.load_code(self.code_asset)
            self._check_block_relation(code.k, code.n)
            return code
        return ldpc.build_code(self.code_k, self.code_n, self.code_seed)

    def adnn_config(self, seed=None) -> adnn.AdnnConfig:
        return adnn.AdnnConfig(
            height=self.block_height(),
            k_bits=self.K,
            encoder_stages=self.encoder_stages,
            base_filters=self.base_filters,
            kernel_size=self.kernel_size,
            pool_factor=self.pool_factor,
            dense_widths=list(self.dense_widths),
            train_snr_db=self.train_snr_db,
            epochs=self.epochs,
            batch_size=self.batch_size,
            split=tuple(self.split),
            seed=self.seed if seed is None else int(seed),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def load_config(path) -> ExperimentConfig:
    """Read a flat-key JSON config; unknown keys are an error."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ValueError(f"config root must be a JSON object, got {type(raw)}")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(unknown)}")
    if "split" in raw:
        raw["split"] = tuple(raw["split"])
    return ExperimentConfig(**raw)


def effective_seed(cfg: ExperimentConfig, cli_seed=None) -> int:
    """Apply the seed precedence: CLI flag > env var > config file."""
    if cli_seed is not None:
        return int(cli_seed)
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None and env.strip():
        return int(env, 0)
    return cfg.seed
