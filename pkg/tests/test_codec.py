"""The affine codec: quantize/dequantize examples and the round-trip bound."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embquant import (
    ClipRange,
    dequantize_uniform,
    quantize_uniform,
)

from oracles import gaussian_row


class TestQuantizeUniform:
    def test_exact_grid(self):
        q = quantize_uniform(np.arange(16.0), ClipRange(0.0, 15.0), 4)
        assert float(q.scale) == 1.0
        assert float(q.bias) == 0.0
        assert q.codes.tolist() == list(range(16))

    def test_endpoints_map_to_extreme_codes(self):
        q = quantize_uniform([-1.0, 1.0], ClipRange(-1.0, 1.0), 4)
        assert q.codes.tolist() == [0, 15]
        assert float(q.scale) == pytest.approx(2.0 / 15.0)
        assert float(q.bias) == -1.0

    def test_clamp_and_tie_rounding(self):
        # 100 clamps to 3 -> code 15; 0 sits exactly between codes 7 and 8 and
        # rounds away from zero; -3 is the bias -> code 0.
        q = quantize_uniform([100.0, 0.0, -3.0], ClipRange(-3.0, 3.0), 4)
        assert q.codes.tolist() == [15, 8, 0]

    def test_constant_row_convention(self):
        q = quantize_uniform([2.5, 2.5], ClipRange(2.5, 2.5), 4)
        assert float(q.scale) == 0.0
        assert q.codes.tolist() == [0, 0]
        assert dequantize_uniform(q).tolist() == [2.5, 2.5]

    def test_8bit_codes(self):
        q = quantize_uniform(np.linspace(0, 255, 256), ClipRange(0.0, 255.0), 8)
        assert q.codes.tolist() == list(range(256))

    def test_rejects_bad_nbits(self):
        with pytest.raises(ValueError):
            quantize_uniform([1.0], ClipRange(0.0, 1.0), 5)


class TestDequantizeUniform:
    def test_identity_grid(self):
        q = quantize_uniform(np.arange(16.0), ClipRange(0.0, 15.0), 4)
        assert dequantize_uniform(q).tolist() == [float(i) for i in range(16)]

    def test_endpoint_reconstruction(self):
        q = quantize_uniform([-1.0, 1.0], ClipRange(-1.0, 1.0), 4)
        deq = dequantize_uniform(q)
        ulp = np.spacing(np.float32(1.0))
        assert abs(deq[0] - (-1.0)) <= ulp
        assert abs(deq[1] - 1.0) <= ulp

    def test_float32_output(self):
        q = quantize_uniform([0.3, 0.7], ClipRange(0.0, 1.0), 4)
        assert dequantize_uniform(q).dtype == np.float32

    def test_fp16_aux_widened(self):
        x = gaussian_row(21, 32)
        r = ClipRange(float(x.min()), float(x.max()))
        q32 = quantize_uniform(x, r, 4, "fp32")
        q16 = quantize_uniform(x, r, 4, "fp16")
        assert q16.scale.dtype == np.float16
        # same codes; reconstructions differ only by the aux rounding
        assert np.array_equal(q32.codes, q16.codes)
        d32 = dequantize_uniform(q32)
        d16 = dequantize_uniform(q16)
        assert np.allclose(d32, d16, rtol=2e-3, atol=2e-3)


def _roundtrip_bound(x, xmin, xmax, nbits):
    """|x - deq(quant(x))| <= scale/2 + 4 ulp for in-range values."""
    r = ClipRange(xmin, xmax)
    q = quantize_uniform(x, r, nbits)
    deq = dequantize_uniform(q).astype(np.float64)
    scale = (xmax - xmin) / ((1 << nbits) - 1)
    err = np.abs(np.asarray(x, dtype=np.float64) - deq)
    ulp = np.spacing(np.maximum(np.abs(x), np.abs(deq)).astype(np.float32)).astype(np.float64)
    return err, scale / 2.0 + 4.0 * ulp


class TestRoundTripBound:
    @given(
        st.floats(-1e4, 1e4),
        st.floats(1e-6, 1e4),
        st.integers(0, 100),
        st.sampled_from([4, 8]),
    )
    @settings(max_examples=200, deadline=None)
    def test_in_range_values(self, xmin, width, pick, nbits):
        xmax = xmin + width
        x = np.float32(xmin + width * pick / 100.0)
        err, bound = _roundtrip_bound(np.array([x]), xmin, xmax, nbits)
        assert err[0] <= bound[0]

    def test_gaussian_rows(self):
        for seed in range(20):
            x = gaussian_row(seed, 64)
            xmin, xmax = float(x.min()), float(x.max())
            err, bound = _roundtrip_bound(x, xmin, xmax, 4)
            assert np.all(err <= bound)
