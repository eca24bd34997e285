"""Built-in verification battery (`linkforge selftest`).

Small, fast, self-contained checks of the toolkit's core contracts:
every oracle here is an independent naive reimplementation (direct
loops, closed forms, scalar recurrences), not a call back into the code
under test.  Runs in seconds; exit 0 iff every check passes.
"""

import math

import numpy as np

from linkforge import kernels, ldpc, modem, nn
from linkforge.harness.config import ExperimentConfig
from linkforge.harness.sweep import run_uncoded_point
from linkforge.rng import Rng


def _naive_conv2d(x, k, b):
    bs, h, w, c_in = x.shape
    c_out, z, _, _ = k.shape
    p = (z - 1) // 2
    out = np.zeros((bs, h, w, c_out))
    for bi in range(bs):
        for i in range(h):
            for j in range(w):
                for co in range(c_out):
                    acc = b[co]
                    for kk in range(z):
                        for ll in range(z):
                            u, v = i + kk - p, j + ll - p
                            if 0 <= u < h and 0 <= v < w:
                                for ci in range(c_in):
                                    acc += k[co, kk, ll, ci] * x[bi, u, v, ci]
                    out[bi, i, j, co] = acc
    return out


def check_rng():
    a, b = Rng(7), Rng(7)
    same = np.array_equal(a.words(64), b.words(64))
    child = Rng(7).derive("x").words(4)
    other = Rng(7).derive("y").words(4)
    u = Rng(3).uniform(1000)
    return same and not np.array_equal(child, other) and u.min() >= 0 and u.max() < 1


def check_codec():
    code = ldpc.build_code(4, 7, 1)
    for m in range(16):
        msg = np.array([(m >> i) & 1 for i in range(4)], dtype=np.uint8)
        cw = ldpc.encode_message(code, msg)
        if not ldpc.check_parity(code, cw):
            return False
        llr = ldpc.LLR_CLAMP * (1.0 - 2.0 * cw)
        hat, _, conv = ldpc.decode_bp(code, llr, 50)
        if not conv or not np.array_equal(hat, msg):
            return False
    return True


def check_modem():
    iq = modem.map_bits(np.array([0, 1], dtype=np.uint8), 2)
    ok = np.allclose(iq, [[1.0, 0.0], [-1.0, 0.0]])
    q = modem.map_bits(np.array([0, 0], dtype=np.uint8), 4)
    ok &= np.allclose(q, [[2**-0.5, 2**-0.5]])
    llr = modem.demap_llr(np.array([[1.0, 0.0]]), 2, 0.5)
    ok &= abs(llr[0] - 8.0) < 1e-12
    ok &= modem.measure_ber([0, 1, 1, 0], [0, 1, 0, 0])[2] == 0.25
    ok &= abs(modem.snr_to_n0(10.0) - 0.1) < 1e-15
    return bool(ok)


def check_conv_oracle():
    rng = Rng(11)
    x = rng.normal((2, 5, 3, 2))
    k = rng.normal((3, 3, 3, 2))
    b = rng.normal(3)
    return float(np.abs(kernels.conv2d_forward(x, k, b) - _naive_conv2d(x, k, b)).max()) <= 1e-12


def check_pool_upsample():
    col = np.array([1.0, 3.0, 2.0, 0.0]).reshape(1, 4, 1, 1)
    pool = nn.MaxPoolV(2)
    ok = np.allclose(pool.forward(col), np.array([3.0, 2.0]).reshape(1, 2, 1, 1))
    up = nn.UpsampleV(2)
    ok &= np.allclose(
        up.forward(np.array([5.0, 7.0]).reshape(1, 2, 1, 1)).ravel(),
        [5.0, 5.0, 7.0, 7.0],
    )
    return bool(ok)


def check_gradients():
    rng = Rng(23)
    layer = nn.Dense(3, 4, activation="tanh")
    layer.weights[...] = rng.normal(layer.weights.shape, 0.5)
    layer.bias[...] = rng.normal(layer.bias.shape, 0.1)
    x = rng.normal((2, 3))
    t = rng.normal((2, 4))
    pred = layer.forward(x)
    _, grad = nn.mse_loss(pred, t)
    layer.zero_grads()
    layer.backward(grad)
    analytic = layer._d_weights.copy()
    eps = 1e-6
    for idx in [(0, 0), (2, 1), (3, 2)]:
        keep = layer.weights[idx]
        layer.weights[idx] = keep + eps
        up = nn.mse_loss(layer.forward(x), t)[0]
        layer.weights[idx] = keep - eps
        dn = nn.mse_loss(layer.forward(x), t)[0]
        layer.weights[idx] = keep
        fd = (up - dn) / (2 * eps)
        if abs(fd - analytic[idx]) > 1e-4 * max(1.0, abs(fd)):
            return False
    return True


def check_adam_trace():
    p = np.array([0.0])
    opt = nn.Adam([p], lr=1e-3)
    m = v = 0.0
    theta = 0.0
    for t in (1, 2):
        opt.step([np.array([1.0])])
        m = 0.9 * m + 0.1 * 1.0
        v = 0.999 * v + 0.001 * 1.0
        mh = m / (1 - 0.9**t)
        vh = v / (1 - 0.999**t)
        theta -= 1e-3 * mh / (math.sqrt(vh) + 1e-8)
        if abs(p[0] - theta) > 1e-15:
            return False
    return True


def check_mse():
    loss, grad = nn.mse_loss(np.array([1.0, -1.0]), np.array([-1.0, -1.0]))
    return loss == 2.0 and np.allclose(grad, [2.0, 0.0])


def check_uncoded_theory():
    cfg = ExperimentConfig(min_error_events=10**9, max_bits=200_000)
    p = run_uncoded_point(cfg, 4.0, 99)
    want = modem.uncoded_bpsk_ber(4.0)
    return abs(p.ber - want) <= 0.15 * want


def check_backend_lanes():
    lanes = kernels.available_backends()
    if len(lanes) < 2:
        return True  # single lane: nothing to cross-check
    rng = Rng(31)
    x = rng.normal((2, 6, 2, 3))
    k = rng.normal((4, 3, 3, 3))
    b = rng.normal(4)
    outs = [kernels.get_backend(l).conv2d_forward(x, k, b) for l in lanes]
    return float(np.abs(outs[0] - outs[1]).max()) <= 1e-12


def check_determinism():
    cfg = ExperimentConfig(min_error_events=50, max_bits=100_000)
    a = run_uncoded_point(cfg, 2.0, 5)
    b = run_uncoded_point(cfg, 2.0, 5)
    return a == b


CHECKS = [
    ("rng determinism and stream independence", check_rng),
    ("(4,7) codec exhaustive round-trip", check_codec),
    ("modem mapping/demapping/BER examples", check_modem),
    ("conv2d matches naive direct loops", check_conv_oracle),
    ("vertical pool and upsample examples", check_pool_upsample),
    ("dense backward matches finite differences", check_gradients),
    ("adam two-step scalar trace", check_adam_trace),
    ("mse loss hand example", check_mse),
    ("uncoded BER matches Q-function", check_uncoded_theory),
    ("backend lanes agree", check_backend_lanes),
    ("point runner determinism", check_determinism),
]


def run_selftest(out=print) -> int:
    failures = 0
    for name, fn in CHECKS:
        try:
            ok = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok = False
            name = f"{name} ({type(exc).__name__}: {exc})"
        out(f"selftest: {name}: {'PASS' if ok else 'FAIL'}")
        failures += 0 if ok else 1
    out(f"selftest: {len(CHECKS) - failures}/{len(CHECKS)} checks passed")
    return 0 if failures == 0 else 1
