"""Benchmark the compiled kernel lane against the pure-numpy fallback.

Runs the three hot kernels on representative workloads and reports the
median wall time per call for every lane built into this installation,
plus the speedup of each lane relative to numpy.  Workloads are seeded,
so repeated runs measure the same arithmetic.

Usage:
    python benchmarks/bench_backends.py [--repeats N] [--quick]
"""

import argparse
import statistics
import time

import numpy as np

from linkforge import kernels, ldpc, modem
from linkforge.rng import Rng


def time_call(fn, args, repeats):
    """Median seconds per call after one untimed warmup."""
    fn(*args)
    samples = []
    for _ in range(repeats):
        tic = time.perf_counter()
        fn(*args)
        samples.append(time.perf_counter() - tic)
    return statistics.median(samples)


def conv_workloads(quick):
    rng = Rng(2024)
    shapes = [
        ("conv fwd 1x(32,2) c1->32 z3", (1, 32, 2, 1), 32, 3),
        ("conv fwd 128x(32,2) c1->32 z3", (128, 32, 2, 1), 32, 3),
        ("conv fwd 128x(256,2) c1->256 z3", (128, 256, 2, 1), 256, 3),
    ]
    if quick:
        shapes = shapes[:2]
    for label, xshape, c_out, z in shapes:
        x = rng.normal(xshape, 1.0)
        k = rng.normal((c_out, z, z, xshape[3]), 0.1)
        b = rng.normal((c_out,), 0.1)
        yield label, "conv2d_forward", (x, k, b)
        grad = rng.normal(xshape[:3] + (c_out,), 1.0)
        yield label.replace("fwd", "bwd"), "conv2d_backward", (x, k, grad)


def bp_workloads(quick):
    rng = Rng(7)
    cases = [
        ("bp decode 64x(29,32) @4dB", 29, 32, 4.0, 64),
        ("bp decode 4096x(29,32) @4dB", 29, 32, 4.0, 4096),
    ]
    if not quick:
        cases.append(("bp decode 1024x(121,128) @4dB", 121, 128, 4.0, 1024))
    for label, k, n, snr_db, batch in cases:
        code = ldpc.build_code(k, n, seed=1)
        msgs = rng.bits(batch * k).reshape(batch, k)
        coded = ((msgs.astype(np.int64) @ code.G_systematic.astype(np.int64)) & 1)
        n0 = modem.snr_to_n0(snr_db)
        y = modem.add_noise(
            modem.map_bits(coded.astype(np.uint8).ravel(), 2), n0, rng.derive("awgn")
        )
        llr = np.ascontiguousarray(modem.demap_llr(y, 2, n0).reshape(batch, n))
        yield label, "bp_decode_batch", (llr, code._row_ptr, code._edge_col, 50, ldpc.LLR_CLAMP)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5, help="timed calls per case")
    ap.add_argument("--quick", action="store_true", help="small workloads only")
    args = ap.parse_args()

    lanes = kernels.available_backends()
    print(f"built lanes: {', '.join(lanes)} (active: {kernels.BACKEND})")
    header = f"{'workload':38s}" + "".join(f"{lane:>12s}" for lane in lanes)
    if "numpy" in lanes and len(lanes) > 1:
        header += f"{'speedup':>10s}"
    print(header)
    print("-" * len(header))

    for label, fn_name, call_args in list(conv_workloads(args.quick)) + list(
        bp_workloads(args.quick)
    ):
        times = {}
        for lane in lanes:
            fn = getattr(kernels.get_backend(lane), fn_name)
            times[lane] = time_call(fn, call_args, args.repeats)
        row = f"{label:38s}" + "".join(f"{times[lane] * 1e3:10.2f}ms" for lane in lanes)
        if "numpy" in times and len(times) > 1:
            other = [t for lane, t in times.items() if lane != "numpy"]
            row += f"{times['numpy'] / min(other):9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
