"""Bit packing: frozen byte examples and round-trip coverage."""

import numpy as np
import pytest

from multivec import pack_codes, unpack_codes


class TestFrozenExamples:
    def test_b4_byte_0xb3_decodes_low_nibble_first(self):
        assert unpack_codes(np.array([0xB3], dtype=np.uint8), 4).tolist() == [3, 11]

    def test_b2_byte_0xe4_decodes_low_bits_first(self):
        assert unpack_codes(np.array([0xE4], dtype=np.uint8), 2).tolist() == [0, 1, 2, 3]

    def test_pack_is_the_inverse_direction(self):
        assert pack_codes(np.array([3, 11], dtype=np.uint8), 4).tolist() == [0xB3]
        assert pack_codes(np.array([0, 1, 2, 3], dtype=np.uint8), 2).tolist() == [0xE4]


class TestRoundTrip:
    @pytest.mark.parametrize("b", [2, 4])
    def test_random_matrices_survive_pack_unpack(self, b):
        rng = np.random.default_rng(13)
        for _ in range(300):
            n = int(rng.integers(1, 40))
            codes = rng.integers(0, 1 << b, size=(n, 128)).astype(np.uint8)
            packed = pack_codes(codes, b)
            assert packed.shape == (n, 16 * b)
            assert np.array_equal(unpack_codes(packed, b), codes)

    @pytest.mark.parametrize("b", [2, 4])
    def test_token_rows_pack_to_16b_bytes(self, b):
        codes = np.zeros((5, 128), dtype=np.uint8)
        assert pack_codes(codes, b).shape == (5, 16 * b)


class TestValidation:
    def test_rejects_out_of_range_codes(self):
        with pytest.raises(ValueError):
            pack_codes(np.array([4], dtype=np.uint8), 2)

    def test_rejects_misaligned_length(self):
        with pytest.raises(ValueError):
            pack_codes(np.array([1, 2, 3], dtype=np.uint8), 2)

    def test_rejects_bad_width(self):
        with pytest.raises(ValueError):
            pack_codes(np.zeros(8, dtype=np.uint8), 3)
        with pytest.raises(ValueError):
            unpack_codes(np.zeros(8, dtype=np.uint8), 8)
