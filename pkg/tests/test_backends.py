"""Cross-lane equivalence: compiled kernels vs the pure-numpy fallback."""

import numpy as np
import pytest

from linkforge import kernels, ldpc, modem
from linkforge.rng import Rng
from oracles import conv2d_naive, rel_err

HAVE_CYTHON = "cython" in kernels.available_backends()
needs_both = pytest.mark.skipif(
    not HAVE_CYTHON, reason="compiled backend not built in this installation"
)


class TestDispatch:
    def test_active_backend_is_built(self):
        assert kernels.BACKEND in kernels.available_backends()

    def test_get_backend_exposes_kernels(self):
        for name in kernels.available_backends():
            lane = kernels.get_backend(name)
            for fn in ("conv2d_forward", "conv2d_backward", "bp_decode_batch"):
                assert callable(getattr(lane, fn))

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            kernels.get_backend("fortran")

    def test_numpy_lane_always_present(self):
        assert "numpy" in kernels.available_backends()


@needs_both
class TestConvParity:
    def test_forward_identical(self):
        rng = Rng(61)
        cy = kernels.get_backend("cython")
        np_lane = kernels.get_backend("numpy")
        for _ in range(60):
            b = 1 + int(rng.uniform(1)[0] * 3)
            h = 1 + int(rng.uniform(1)[0] * 11)
            w = 1 + int(rng.uniform(1)[0] * 3)
            c_in = 1 + int(rng.uniform(1)[0] * 3)
            c_out = 1 + int(rng.uniform(1)[0] * 3)
            z = (1, 3, 5)[int(rng.uniform(1)[0] * 3)]
            x = np.ascontiguousarray(rng.normal((b, h, w, c_in), 1.0))
            k = np.ascontiguousarray(rng.normal((c_out, z, z, c_in), 1.0))
            bias = rng.normal((c_out,), 1.0)
            ya = cy.conv2d_forward(x, k, bias)
            yb = np_lane.conv2d_forward(x, k, bias)
            assert rel_err(ya, yb) < 1e-11
            assert rel_err(ya, conv2d_naive(x, k, bias)) < 1e-9

    def test_backward_identical(self):
        rng = Rng(62)
        cy = kernels.get_backend("cython")
        np_lane = kernels.get_backend("numpy")
        for _ in range(60):
            b = 1 + int(rng.uniform(1)[0] * 2)
            h = 1 + int(rng.uniform(1)[0] * 9)
            w = 1 + int(rng.uniform(1)[0] * 3)
            c_in = 1 + int(rng.uniform(1)[0] * 2)
            c_out = 1 + int(rng.uniform(1)[0] * 2)
            z = (1, 3)[int(rng.uniform(1)[0] * 2)]
            x = np.ascontiguousarray(rng.normal((b, h, w, c_in), 1.0))
            k = np.ascontiguousarray(rng.normal((c_out, z, z, c_in), 1.0))
            g = np.ascontiguousarray(rng.normal((b, h, w, c_out), 1.0))
            for got, want in zip(
                cy.conv2d_backward(x, k, g), np_lane.conv2d_backward(x, k, g)
            ):
                assert rel_err(got, want) < 1e-12


@needs_both
class TestBpParity:
    def make_llr_batch(self, code, n_blocks, snr_db, seed):
        rng = Rng(seed)
        msgs = rng.bits(n_blocks * code.k).reshape(n_blocks, code.k)
        cws = np.stack([ldpc.encode_message(code, m) for m in msgs])
        n0 = modem.snr_to_n0(snr_db)
        y = modem.add_noise(modem.map_bits(cws.ravel(), 2), n0, rng.derive("chan"))
        return msgs, modem.demap_llr(y, 2, n0).reshape(n_blocks, code.n)

    def test_decode_identical_across_lanes(self):
        cy = kernels.get_backend("cython")
        np_lane = kernels.get_backend("numpy")
        for (k, n, seed), snr in (
            ((4, 7, 1), 1.0),
            ((5, 8, 2), 3.0),
            ((29, 32, 1), 5.0),
        ):
            code = ldpc.build_code(k, n, seed=seed)
            _, llr = self.make_llr_batch(code, 40, snr, seed=70 + n)
            llr = np.ascontiguousarray(llr)
            bits_a, iters_a, conv_a = cy.bp_decode_batch(
                llr, code._row_ptr, code._edge_col, 50, ldpc.LLR_CLAMP
            )
            bits_b, iters_b, conv_b = np_lane.bp_decode_batch(
                llr, code._row_ptr, code._edge_col, 50, ldpc.LLR_CLAMP
            )
            np.testing.assert_array_equal(bits_a, bits_b)
            np.testing.assert_array_equal(iters_a, iters_b)
            np.testing.assert_array_equal(conv_a, conv_b)

    def test_decoder_module_matches_batch_kernel(self):
        # the public decode_bp must agree with whichever lane is active
        code = ldpc.build_code(4, 7, seed=1)
        _, llr = self.make_llr_batch(code, 25, 2.0, seed=81)
        llr = np.ascontiguousarray(llr)
        bits, iters, conv = kernels.bp_decode_batch(
            llr, code._row_ptr, code._edge_col, 50, ldpc.LLR_CLAMP
        )
        sys_cols = code.col_permutation[: code.k]
        for i in range(llr.shape[0]):
            msg, it, cv = ldpc.decode_bp(code, llr[i], 50)
            np.testing.assert_array_equal(msg, bits[i][sys_cols])
            assert it == iters[i]
            assert cv == bool(conv[i])


class TestEnvSelection:
    def test_env_forces_numpy_lane(self):
        import subprocess
        import sys

        out = subprocess.run(
            [sys.executable, "-c", "import linkforge.kernels as k; print(k.BACKEND)"],
            capture_output=True,
            text=True,
            env={**__import__("os").environ, "LINKFORGE_BACKEND": "numpy"},
        )
        assert out.returncode == 0
        assert out.stdout.strip() == "numpy"

    def test_env_rejects_garbage(self):
        import subprocess
        import sys

        out = subprocess.run(
            [sys.executable, "-c", "import linkforge.kernels"],
            capture_output=True,
            text=True,
            env={**__import__("os").environ, "LINKFORGE_BACKEND": "cuda"},
        )
        assert out.returncode != 0

    @needs_both
    def test_env_forces_cython_lane(self):
        import subprocess
        import sys

        out = subprocess.run(
            [sys.executable, "-c", "import linkforge.kernels as k; print(k.BACKEND)"],
            capture_output=True,
            text=True,
            env={**__import__("os").environ, "LINKFORGE_BACKEND": "cython"},
        )
        assert out.returncode == 0
        assert out.stdout.strip() == "cython"


@needs_both
class TestEndToEndParity:
    def test_training_trajectory_identical(self):
        # both lanes must land on the same parameters up to float64
        # summation-order noise
        import subprocess
        import sys

        prog = """
import numpy as np
from linkforge import adnn
from linkforge.rng import Rng
cfg = adnn.AdnnConfig(height=8, k_bits=5, encoder_stages=1,
                      dense_widths=[16, 16, 8, 8, 5, 5],
                      epochs=2, batch_size=4, split=(0.6, 0.2, 0.2), seed=3)
rng = Rng(3).derive("tiny-data")
bits = rng.bits(20 * 5).reshape(20, 5)
blocks = rng.normal((20, 8, 2), 1.0)
model = adnn.build_model(cfg)
adnn.train(model, blocks, bits, cfg)
print(repr([float(p.sum()) for p in model.params]))
"""
        sums = {}
        for lane in ("cython", "numpy"):
            out = subprocess.run(
                [sys.executable, "-c", prog],
                capture_output=True,
                text=True,
                env={**__import__("os").environ, "LINKFORGE_BACKEND": lane},
            )
            assert out.returncode == 0, out.stderr
            sums[lane] = np.array(eval(out.stdout.strip()))
        np.testing.assert_allclose(sums["cython"], sums["numpy"], rtol=1e-9)