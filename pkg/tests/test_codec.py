"""Codec unit tests: capacity, exponent, quantizer, code lengths, round trips."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecsic import codec


class TestCapacity:
    def test_endpoints(self):
        assert codec.z_capacity(0.0) == 1.0
        assert codec.z_capacity(1.0) == 0.0

    def test_half(self):
        assert codec.z_capacity(0.5) == pytest.approx(math.log2(1.25), abs=1e-12)

    def test_strictly_decreasing(self):
        qs = np.linspace(0, 1, 1000)
        vals = np.array([codec.z_capacity(q) for q in qs])
        assert (np.diff(vals) < 0).all()

    def test_domain(self):
        with pytest.raises(ValueError):
            codec.z_capacity(-0.1)
        with pytest.raises(ValueError):
            codec.z_capacity(1.1)


class TestErrorExponent:
    def test_zero_at_capacity(self):
        for q in (0.3, 0.5, 0.7):
            assert codec.error_exponent(q, codec.z_capacity(q)) == pytest.approx(0, abs=1e-6)

    def test_positive_below_capacity(self):
        assert codec.error_exponent(0.5, 0.1) > 0.01

    def test_noiseless_channel_rate_zero(self):
        # E_0 at rho=1, p=1/2 for q=0 is log2(4/...)=1; E_r(0) = 1
        assert codec.error_exponent(0.0, 0.0) == pytest.approx(1.0, abs=1e-6)

    def test_rate_above_capacity_rejected(self):
        with pytest.raises(ValueError):
            codec.error_exponent(0.5, codec.z_capacity(0.5) + 0.01)

    def test_non_increasing_in_rate(self):
        cap = codec.z_capacity(0.4)
        vals = [codec.error_exponent(0.4, r) for r in np.linspace(0, cap, 50)]
        assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))


class TestQuantizer:
    def test_examples(self):
        assert codec.quantize_value(0.5, 8) == 128
        assert codec.dequantize_value(128, 8) == 0.5
        assert codec.quantize_value(0.37, 8) == 94
        assert codec.dequantize_value(94, 8) == 0.3671875
        assert codec.quantize_value(1.0, 8) == 255  # clamped
        assert codec.dequantize_value(255, 8) == 0.99609375

    def test_bit_order_msb_first(self):
        assert codec.quantize(0.5, 8).tolist() == [1, 0, 0, 0, 0, 0, 0, 0]
        assert codec.bits_to_int(np.array([1, 1], dtype=np.uint8)) == 3

    def test_domain(self):
        with pytest.raises(ValueError):
            codec.quantize_value(-0.01, 8)
        with pytest.raises(ValueError):
            codec.quantize_value(1.01, 8)

    @given(st.floats(0, 1, exclude_max=True), st.integers(1, 16))
    def test_error_bound(self, x, q_bits):
        err = abs(codec.dequantize(codec.quantize(x, q_bits)) - x)
        assert err < 2.0**-q_bits

    def test_boundaries(self):
        # at the clamped endpoint x=1 the error is exactly 2^-Q, hence <=
        for q_bits in range(1, 17):
            for x in (0.0, 1.0, 1 - 2.0 ** -(q_bits + 1)):
                err = abs(codec.dequantize(codec.quantize(x, q_bits)) - x)
                assert err <= 2.0**-q_bits
                if x < 1.0:
                    assert err < 2.0**-q_bits


class TestCodeLength:
    def test_reference_setting(self):
        assert codec.code_length("repetition", 8, 10**6, 0.3) == (53, 424)
        assert codec.code_length("flip", 8, 10**6, 0.3) == (51, 408)
        assert codec.code_length("hamming", 8, 10**6, 0.3) == (27, 378)

    def test_formulas(self):
        q_bits, t, mu = 10, 12345, 0.4
        a, n = codec.code_length("repetition", q_bits, t, mu)
        assert a == math.ceil(math.log(q_bits * t) / mu) and n == q_bits * a
        a, n = codec.code_length("flip", q_bits, t, mu)
        assert a == math.ceil(math.log(q_bits * t / 2) / mu) and n == q_bits * a
        a, n = codec.code_length("hamming", q_bits, t, mu)
        # Q=10 pads to 12 -> 21 coded bits
        assert a == math.ceil(math.log(7 * q_bits * t / 8) / (2 * mu)) and n == 21 * a

    def test_reference_length_positive(self):
        assert codec.optimal_reference_length(8, 10**6, 0.3) > 0


class TestRoundTrip:
    @given(
        st.sampled_from(codec.SCHEMES),
        st.integers(1, 16),
        st.integers(1, 5),
        st.integers(0, 2**16 - 1),
        )
    @settings(max_examples=200, deadline=None)
    def test_noiseless_roundtrip(self, scheme, q_bits, a, value):
        bits = codec.int_to_bits(value % 2**q_bits, q_bits)
        coded = codec.encode(scheme, bits, a)
        assert coded.shape == (codec.codeword_length(scheme, q_bits, a),)
        assert np.array_equal(codec.decode(scheme, coded, q_bits, a), bits)

    def test_encode_examples(self):
        assert codec.encode("repetition", np.array([1], dtype=np.uint8), 3).tolist() == [1, 1, 1]
        assert codec.encode("flip", np.array([0, 1], dtype=np.uint8), 2).tolist() == [1, 1, 0, 0]
        assert codec.encode("hamming", np.array([1, 0, 1, 1], dtype=np.uint8), 1).tolist() == [
            0, 1, 1, 0, 0, 1, 1]

    def test_decode_examples(self):
        one = codec.decode("repetition", np.array([1, 1, 1], dtype=np.uint8), 1, 3)
        zero = codec.decode("repetition", np.array([1, 0, 1], dtype=np.uint8), 1, 3)
        assert one.tolist() == [1] and zero.tolist() == [0]

    @given(st.sampled_from(codec.SCHEMES), st.integers(0, 255), st.integers(2, 6))
    @settings(max_examples=100, deadline=None)
    def test_single_flip_survives(self, scheme, value, a):
        # one 0->1 symbol flip never corrupts any scheme (per-bit repetition
        # absorbs it; hamming additionally corrects a full repeated-bit error)
        bits = codec.int_to_bits(value, 8)
        coded = codec.encode(scheme, bits, a)
        zeros = np.nonzero(coded == 0)[0]
        if len(zeros) == 0:
            return
        observed = coded.copy()
        observed[zeros[len(zeros) // 2]] = 1
        assert np.array_equal(codec.decode(scheme, observed, 8, a), bits)


class TestHamming:
    def test_parity(self):
        assert not (codec.HAMMING_H @ codec.HAMMING_G % 2).any()

    def test_exhaustive_single_flip(self):
        for value in range(16):
            bits = codec.int_to_bits(value, 4)
            coded = codec.encode("hamming", bits, 1)
            for pos in range(7):
                observed = coded.copy()
                observed[pos] = 1  # Z-channel errors are only 0->1
                assert np.array_equal(codec.decode("hamming", observed, 4, 1), bits)

    def test_min_distance_three(self):
        words = [codec.encode("hamming", codec.int_to_bits(v, 4), 1) for v in range(16)]
        dists = [
            int((words[i] != words[j]).sum())
            for i in range(16)
            for j in range(i + 1, 16)
        ]
        assert min(dists) == 3


class TestChannel:
    def test_transmit_endpoints(self):
        rng = np.random.default_rng(0)
        syms = np.array([0, 1, 0, 1], dtype=np.uint8)
        assert np.array_equal(codec.transmit(syms, 0.0, rng), syms)
        assert codec.transmit(syms, 1.0, rng).tolist() == [1, 1, 1, 1]

    def test_one_never_flips(self):
        rng = np.random.default_rng(1)
        out = codec.transmit(np.ones(10**4, dtype=np.uint8), 0.9, rng)
        assert (out == 1).all()

    def test_flip_fraction(self):
        rng = np.random.default_rng(2)
        out = codec.transmit(np.zeros(10**5, dtype=np.uint8), 0.3, rng)
        assert abs(out.mean() - 0.3) < 0.01

    def test_word_error_rate_zero_noiseless(self):
        rng = np.random.default_rng(3)
        assert codec.word_error_rate("repetition", 8, 3, 0.0, 1000, rng) == 0.0
