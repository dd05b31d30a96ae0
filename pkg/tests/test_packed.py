"""Packed nibble layout, the pooled-lookup kernel, and the bench byte model."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embquant import (
    EmbeddingTable,
    PackedTable4,
    PooledQuery,
    bench_sls,
    bytes_per_pooled_row,
    clip_range_asym,
    pack_table4,
    sparse_lengths_sum_4bit,
    sparse_lengths_sum_ref,
    unpack_row,
)
from embquant.packed import unpack_row_codes
from embquant.rng import splitmix64
from embquant.uniform import UniformQuantTable, quantize_table_uniform

from oracles import gaussian_row


def _qtable(codes, scale=1.0, bias=0.0, aux="fp32"):
    codes = np.atleast_2d(np.asarray(codes, dtype=np.uint8))
    n = codes.shape[0]
    return UniformQuantTable(codes, np.full(n, scale), np.full(n, bias), 4, aux)


def _random_packed(seed, rows, dim, aux="fp32"):
    t = EmbeddingTable(np.stack([gaussian_row(seed + i, dim) for i in range(rows)]))
    ranges = [clip_range_asym(t.row(i)) for i in range(rows)]
    return t, pack_table4(quantize_table_uniform(t, ranges, 4, aux))


class TestPacking:
    def test_nibble_order(self):
        p = pack_table4(_qtable([[1, 2]]))
        assert p.buffer[0] == 0x21

    def test_odd_d_pad(self):
        p = pack_table4(_qtable([[15]]))
        assert p.buffer[0] == 0x0F

    def test_rejects_8bit(self):
        q = UniformQuantTable(np.zeros((1, 4), dtype=np.uint8), [1.0], [0.0], 8)
        with pytest.raises(ValueError):
            pack_table4(q)

    def test_roundtrip_random_rows(self):
        bits = splitmix64(99, 100 * 7)
        codes = (bits % np.uint64(16)).astype(np.uint8).reshape(100, 7)
        scales = np.linspace(0.01, 2.0, 100).astype(np.float32)
        biases = np.linspace(-3.0, 3.0, 100).astype(np.float32)
        q = UniformQuantTable(codes, scales, biases, 4)
        p = pack_table4(q)
        for i in range(100):
            got_codes, got_scale, got_bias = unpack_row_codes(p, i)
            assert np.array_equal(got_codes, codes[i])
            assert got_scale == scales[i]
            assert got_bias == biases[i]

    @given(st.lists(st.integers(0, 15), min_size=1, max_size=33))
    @settings(max_examples=80, deadline=None)
    def test_packing_bijection(self, code_list):
        p = pack_table4(_qtable([code_list]))
        got, _, _ = unpack_row_codes(p, 0)
        assert got.tolist() == code_list

    def test_row_stride(self):
        assert pack_table4(_qtable([[0] * 128])).row_stride == 64 + 8
        assert pack_table4(_qtable([[0] * 128], aux="fp16")).row_stride == 64 + 4
        assert pack_table4(_qtable([[0] * 7])).row_stride == 4 + 8


class TestUnpackRow:
    def test_known_bytes(self):
        p = pack_table4(_qtable([[1, 2]], scale=1.0, bias=0.0))
        assert unpack_row(p, 0).tolist() == [1.0, 2.0]
        p = pack_table4(_qtable([[1, 2]], scale=0.5, bias=-1.0))
        assert unpack_row(p, 0).tolist() == [-0.5, 0.0]

    def test_fp16_aux_identity_values(self):
        p32 = pack_table4(_qtable([[3, 9]], scale=1.0, bias=0.0, aux="fp32"))
        p16 = pack_table4(_qtable([[3, 9]], scale=1.0, bias=0.0, aux="fp16"))
        assert np.array_equal(unpack_row(p32, 0), unpack_row(p16, 0))

    def test_matches_dequantize(self):
        t, p = _random_packed(700, 10, 17)
        ranges = [clip_range_asym(t.row(i)) for i in range(10)]
        q = quantize_table_uniform(t, ranges, 4)
        deq = q.dequantize()
        for i in range(10):
            assert np.array_equal(unpack_row(p, i), deq[i])

    def test_bounds(self):
        _, p = _random_packed(800, 3, 5)
        with pytest.raises(IndexError):
            unpack_row(p, 3)


class TestPooledKernel:
    def test_empty_segment(self):
        _, p = _random_packed(900, 4, 6)
        out = sparse_lengths_sum_4bit(p, PooledQuery([], [0]))
        assert out.shape == (1, 6)
        assert np.all(out == 0.0)

    def test_single_index_identity(self):
        _, p = _random_packed(901, 5, 9)
        out = sparse_lengths_sum_4bit(p, PooledQuery([3], [1]))
        assert np.array_equal(out[0], unpack_row(p, 3))

    def test_bit_exact_vs_reference(self):
        _, p = _random_packed(17, 8, 11)
        q = PooledQuery([0, 3, 3, 7, 1, 2, 5], [2, 0, 3, 2])
        got = sparse_lengths_sum_4bit(p, q)
        want = sparse_lengths_sum_ref(p, q)
        assert np.array_equal(got, want)

    def test_out_of_range_identifies_position(self):
        _, p = _random_packed(902, 4, 6)
        with pytest.raises(IndexError, match="position 2"):
            sparse_lengths_sum_4bit(p, PooledQuery([0, 1, 9], [3]))

    def test_query_validation(self):
        with pytest.raises(ValueError):
            PooledQuery([1, 2], [1])
        with pytest.raises(ValueError):
            PooledQuery([1], [-1, 2])


class TestReference:
    def test_fp32_path_equals_direct_sums(self):
        t = EmbeddingTable(np.stack([gaussian_row(20 + i, 8) for i in range(6)]))
        q = PooledQuery([0, 1, 5], [1, 1, 1])
        out = sparse_lengths_sum_ref(t, q)
        for s, idx in enumerate([0, 1, 5]):
            assert np.array_equal(out[s], t.row(idx))

    def test_all_zero_lengths(self):
        t = EmbeddingTable(np.ones((2, 3), dtype=np.float32))
        out = sparse_lengths_sum_ref(t, PooledQuery([], [0, 0]))
        assert np.all(out == 0.0)

    def test_int8_path(self):
        t = EmbeddingTable(np.stack([gaussian_row(30 + i, 5) for i in range(4)]))
        ranges = [clip_range_asym(t.row(i)) for i in range(4)]
        q8 = quantize_table_uniform(t, ranges, 8)
        out = sparse_lengths_sum_ref(q8, PooledQuery([2, 2], [2]))
        want = q8.dequantize()[2] + q8.dequantize()[2]
        assert np.allclose(out[0], want, rtol=1e-6)


class TestBytesModel:
    def test_d128_values(self):
        assert bytes_per_pooled_row("fp32", 128) == 512
        assert bytes_per_pooled_row("int8", 128, "fp32") == 136
        assert bytes_per_pooled_row("int4", 128, "fp32") == 72
        assert bytes_per_pooled_row("int4", 128, "fp16") == 68

    @pytest.mark.parametrize("aux,min_d", [("fp32", 3), ("fp16", 2)])
    def test_int4_below_fp32_beyond_trailer_break_even(self, aux, min_d):
        # the scale/bias trailer dominates one- and two-element rows, where
        # packed storage genuinely costs more than raw fp32
        for d in range(1, min_d):
            assert bytes_per_pooled_row("int4", d, aux) > bytes_per_pooled_row("fp32", d)
        for d in range(min_d, 300):
            assert bytes_per_pooled_row("int4", d, aux) < bytes_per_pooled_row("fp32", d)

    def test_ordering_for_wide_rows(self):
        for d in (64, 128, 256, 512):
            int4 = bytes_per_pooled_row("int4", d, "fp32")
            int8 = bytes_per_pooled_row("int8", d, "fp32")
            fp32 = bytes_per_pooled_row("fp32", d)
            assert int4 < int8 < fp32


class TestBench:
    @pytest.mark.parametrize("data_type", ["fp32", "int8", "int4"])
    def test_reports_throughput(self, data_type):
        rep = bench_sls(data_type, dim=16, rows=32, batch=4, pooling=4, repeats=2, seed=1)
        assert rep.giga_sums_per_sec > 0
        assert rep.bytes_per_row == bytes_per_pooled_row(data_type, 16, "fp32")
        assert rep.bytes_read_per_query == rep.bytes_per_row * 16

    def test_cache_flushed_mode(self):
        rep = bench_sls("int4", dim=8, rows=16, batch=2, pooling=2,
                        mode="cache_flushed", repeats=1, seed=2)
        assert rep.mode == "cache_flushed"
        assert rep.giga_sums_per_sec > 0
