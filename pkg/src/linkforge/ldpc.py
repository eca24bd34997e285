"""Binary LDPC codes: construction, systematic encoding, BP decoding.

A code is built from ``(k, n, seed)`` by a seeded near-regular random
construction with target column weight 3.  With ``m = n - k`` parity
rows the target is reduced to fit small codes: for ``m == 3`` most
columns get weight 2 (an all-weight-3 matrix would repeat the single
available 3-row column and an all-weight-2 matrix has even column
parity, which forces the rows to sum to zero; a sprinkling of weight-3
columns restores full rank).  ``m <= 2`` cannot satisfy the column
weight >= 2 plus full-rank invariants at all and raises
:class:`CodeConstructionError`.

The stored ``H`` is the raw constructed matrix (it defines the Tanner
graph used by the decoder).  Systematization runs GF(2) Gaussian
elimination with column swaps on a copy, yielding a permutation ``perm``
such that the row-reduced ``H[:, perm]`` ends in an identity block.  The
generator is systematic in the permuted order: a codeword ``c`` carries
the message at positions ``perm[:k]``.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from linkforge import kernels
from linkforge.rng import Rng

LLR_CLAMP = 38.0
BP_MAX_ITERS_DEFAULT = 50
_RETRY_BUDGET = 32


class CodeConstructionError(ValueError):
    """Raised when no full-rank parity matrix was found for a seed."""

    def __init__(self, message: str, seed: int):
        super().__init__(message)
        self.seed = seed


@dataclass(frozen=True, eq=False)
class LdpcCode:
    """An (n, k) binary LDPC code with cached decoder structures."""

    k: int
    n: int
    H: np.ndarray
    G_systematic: np.ndarray
    col_permutation: np.ndarray
    seed: int
    rate: Fraction
    _row_ptr: np.ndarray = field(repr=False, compare=False, default=None)
    _edge_col: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        # CSR view of H for the decoder kernel: per-row ascending columns
        rows, cols = np.nonzero(self.H)
        counts = np.bincount(rows, minlength=self.n - self.k)
        row_ptr = np.zeros(self.n - self.k + 1, dtype=np.int32)
        np.cumsum(counts, out=row_ptr[1:])
        object.__setattr__(self, "_row_ptr", row_ptr)
        object.__setattr__(self, "_edge_col", cols.astype(np.int32))

    @property
    def m(self) -> int:
        return self.n - self.k


def _assemble_h(k: int, n: int, rng: Rng) -> np.ndarray:
    m = n - k
    col_weights = np.full(n, 3 if m > 3 else 2, dtype=np.int64)
    if m == 3:
        # upgrade a seeded subset to weight 3 to break even column parity
        n_up = max(1, n // 8)
        col_weights[rng.permutation(n)[:n_up]] = 3

    h = np.zeros((m, n), dtype=np.uint8)
    row_weight = np.zeros(m, dtype=np.int64)
    used_pairs = set()
    for j in range(n):
        order = np.lexsort((rng.words(m), row_weight))
        chosen: list[int] = []
        for r in order:  # girth-4 avoidance: skip rows pairing up twice
            if len(chosen) == col_weights[j]:
                break
            if all((min(r, c), max(r, c)) not in used_pairs for c in chosen):
                chosen.append(int(r))
        for r in order:  # fill up regardless when avoidance is infeasible
            if len(chosen) == col_weights[j]:
                break
            if r not in chosen:
                chosen.append(int(r))
        for idx, r in enumerate(chosen):
            h[r, j] = 1
            row_weight[r] += 1
            for c in chosen[:idx]:
                used_pairs.add((min(r, c), max(r, c)))
    return h


def _systematize(h: np.ndarray):
    """Return ``(P, perm)`` with row-reduced ``h[:, perm]`` = ``[P | I]``.

    ``None`` when ``h`` is rank deficient.  Deterministic: pivots are
    searched at the identity-block position first, then left to right.
    """
    m, n = h.shape
    k = n - m
    hw = h.copy()
    perm = np.arange(n)
    for i in range(m):
        # fixed identity columns (positions k..k+i-1) are e_0..e_{i-1} and
        # have no 1 in rows >= i, so the scan can never re-pick them
        target = k + i
        pivot = None
        for pos in (target, *(p for p in range(n) if p != target)):
            col = perm[pos]
            rows = np.nonzero(hw[i:, col])[0]
            if rows.size:
                pivot = (pos, i + int(rows[0]))
                break
        if pivot is None:
            return None
        pos, prow = pivot
        if prow != i:
            hw[[i, prow]] = hw[[prow, i]]
        if pos != target:
            perm[[pos, target]] = perm[[target, pos]]
        col = perm[target]
        hits = np.nonzero(hw[:, col])[0]
        hits = hits[hits != i]
        hw[hits] ^= hw[i]
    return hw[:, perm[:k]], perm


def build_code(k: int, n: int, seed: int) -> LdpcCode:
    """Construct a deterministic near-regular LDPC code for ``(k, n, seed)``."""
    if not (2 <= k < n):
        raise ValueError(f"need 2 <= k < n, got k={k}, n={n}")
    m = n - k
    if m < 3:
        raise CodeConstructionError(
            f"(k={k}, n={n}) has n-k={m} parity rows; column weight >= 2 plus "
            f"full row rank needs n-k >= 3 (seed {seed})",
            seed,
        )
    for attempt in range(_RETRY_BUDGET):
        rng = Rng(seed).derive(("ldpc-h", attempt))
        h = _assemble_h(k, n, rng)
        if (h.sum(axis=1) < 2).any() or (h.sum(axis=0) < 2).any():
            continue
        sys_form = _systematize(h)
        if sys_form is None:
            continue
        p, perm = sys_form
        g = np.zeros((k, n), dtype=np.uint8)
        g_perm = np.concatenate([np.eye(k, dtype=np.uint8), p.T], axis=1)
        g[:, perm] = g_perm
        return LdpcCode(
            k=k,
            n=n,
            H=h,
            G_systematic=g,
            col_permutation=perm.astype(np.int64),
            seed=seed,
            rate=Fraction(k, n),
        )
    raise CodeConstructionError(
        f"no full-rank parity matrix for (k={k}, n={n}) within "
        f"{_RETRY_BUDGET} attempts at seed {seed}; retry with seed {seed + 1}",
        seed,
    )


def encode_message(code: LdpcCode, msg: np.ndarray) -> np.ndarray:
    """Encode one k-bit message to an n-bit codeword (systematic)."""
    msg = np.asarray(msg, dtype=np.uint8)
    if msg.shape != (code.k,):
        raise ValueError(f"message must have shape ({code.k},), got {msg.shape}")
    return (msg.astype(np.int64) @ code.G_systematic.astype(np.int64) & 1).astype(
        np.uint8
    )


def encode_segment(code: LdpcCode, segment: np.ndarray) -> np.ndarray:
    """Encode a K-bit segment as K/k independent codewords, concatenated."""
    segment = np.asarray(segment, dtype=np.uint8)
    if segment.ndim != 1 or segment.size == 0 or segment.size % code.k:
        raise ValueError(
            f"segment length must be a positive multiple of k={code.k}, "
            f"got {segment.shape}"
        )
    msgs = segment.reshape(-1, code.k).astype(np.int64)
    return ((msgs @ code.G_systematic.astype(np.int64)) & 1).astype(np.uint8).ravel()


def check_parity(code: LdpcCode, cw: np.ndarray) -> bool:
    """True iff ``H @ cw = 0`` over GF(2)."""
    cw = np.asarray(cw, dtype=np.uint8)
    if cw.shape != (code.n,):
        raise ValueError(f"codeword must have shape ({code.n},), got {cw.shape}")
    return not ((code.H.astype(np.int64) @ cw.astype(np.int64)) & 1).any()


def decode_bp(code: LdpcCode, llr: np.ndarray, max_iters: int = BP_MAX_ITERS_DEFAULT):
    """Sum-product decode one LLR block.

    Returns ``(msg, iterations, converged)``; ``msg`` is the systematic
    part of the final hard decision whether or not BP converged.
    """
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    if llr.shape != (code.n,):
        raise ValueError(f"llr must have shape ({code.n},), got {llr.shape}")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    bits, iters, conv = kernels.bp_decode_batch(
        llr[None, :], code._row_ptr, code._edge_col, int(max_iters), LLR_CLAMP
    )
    msg = bits[0, code.col_permutation[: code.k]]
    return msg, int(iters[0]), bool(conv[0])


def decode_segment(
    code: LdpcCode, llr: np.ndarray, max_iters: int = BP_MAX_ITERS_DEFAULT
) -> np.ndarray:
    """Decode L/n consecutive codeword LLR chunks; concatenated messages."""
    llr = np.ascontiguousarray(llr, dtype=np.float64)
    if llr.ndim != 1 or llr.size == 0 or llr.size % code.n:
        raise ValueError(
            f"llr length must be a positive multiple of n={code.n}, got {llr.shape}"
        )
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    blocks = llr.reshape(-1, code.n)
    bits, _, _ = kernels.bp_decode_batch(
        blocks, code._row_ptr, code._edge_col, int(max_iters), LLR_CLAMP
    )
    return bits[:, code.col_permutation[: code.k]].ravel()


def serialize_code(code: LdpcCode) -> str:
    """Text asset: ``ldpc k n seed`` header, then per-row ascending 1-columns."""
    lines = [f"ldpc {code.k} {code.n} {code.seed}"]
    for row in code.H:
        lines.append(" ".join(str(int(c)) for c in np.nonzero(row)[0]))
    return "\n".join(lines) + "\n"


def parse_code(text: str) -> LdpcCode:
    """Rebuild a code from its text asset (generator re-derived from H)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty code asset")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "ldpc":
        raise ValueError(f"bad code asset header: {lines[0]!r}")
    k, n, seed = (int(x) for x in head[1:])
    m = n - k
    if len(lines) - 1 != m:
        raise ValueError(f"expected {m} row lines, got {len(lines) - 1}")
    h = np.zeros((m, n), dtype=np.uint8)
    for i, ln in enumerate(lines[1:]):
        cols = np.array([int(x) for x in ln.split()], dtype=np.int64)
        if cols.size == 0 or (np.diff(cols) <= 0).any():
            raise ValueError(f"row {i}: column indices must be ascending")
        if cols[0] < 0 or cols[-1] >= n:
            raise ValueError(f"row {i}: column index out of range")
        h[i, cols] = 1
    sys_form = _systematize(h)
    if sys_form is None:
        raise ValueError("parity matrix in asset is rank deficient")
    p, perm = sys_form
    g = np.zeros((k, n), dtype=np.uint8)
    g[:, perm] = np.concatenate([np.eye(k, dtype=np.uint8), p.T], axis=1)
    return LdpcCode(
        k=k,
        n=n,
        H=h,
        G_systematic=g,
        col_permutation=perm.astype(np.int64),
        seed=seed,
        rate=Fraction(k, n),
    )


def save_code(code: LdpcCode, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(serialize_code(code))


def load_code(path) -> LdpcCode:
    with open(path, "r", encoding="ascii") as fh:
        return parse_code(fh.read())


def load_asset(name: str) -> LdpcCode:
    """Load one of the canonical shipped matrices, e.g. ``ldpc_121_128``."""
    from importlib import resources

    fname = name if name.endswith(".txt") else f"{name}.txt"
    text = resources.files("linkforge.assets").joinpath(fname).read_text("ascii")
    return parse_code(text)
