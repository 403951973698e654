import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bhattacharyya_bruteforce, generator, kron_F, messages, toeplitz_G
from pacdnn.code import (
    DEFAULT_G, PacCode, bhattacharyya, build_rate_profile, codebook, convolve, encode,
    hamming_weight, parse_bits, polar_transform, rate_profile_map,
)


def test_rate_profile_84():
    weights = [hamming_weight(i) for i in range(8)]
    expected = [i for i in range(8) if weights[i] >= 2]
    assert expected == [3, 5, 6, 7]
    assert list(build_rate_profile(8, 4)) == expected


@pytest.mark.parametrize("N", [2, 8, 16, 32])
def test_rate_profile_full_rate(N):
    assert list(build_rate_profile(N, N)) == list(range(N))


def test_rate_profile_168_tie_break():
    z = bhattacharyya_bruteforce(16)
    heavy = [i for i in range(16) if hamming_weight(i) >= 3]
    w2 = sorted((i for i in range(16) if hamming_weight(i) == 2), key=lambda i: z[i])
    expected = sorted(heavy + w2[:3])
    # frozen from the oracle run: weight-2 picks are 9, 10, 12
    assert expected == [7, 9, 10, 11, 12, 13, 14, 15]
    assert list(build_rate_profile(16, 8)) == expected


def test_bhattacharyya_matches_bruteforce():
    for N in (2, 4, 8, 16, 64):
        np.testing.assert_allclose(bhattacharyya(N), bhattacharyya_bruteforce(N))


@pytest.mark.parametrize("N,K", [(6, 2), (8, 0), (8, 9)])
def test_rate_profile_errors(N, K):
    with pytest.raises(ValueError):
        build_rate_profile(N, K)


def test_code_invariants():
    with pytest.raises(ValueError):
        PacCode(12, 4, (0, 1, 2, 3))
    with pytest.raises(ValueError):
        PacCode(8, 2, (3, 3))
    with pytest.raises(ValueError):
        PacCode(8, 1, (8,))
    with pytest.raises(ValueError):
        PacCode(8, 1, (7,), g=(1, 0, 0))
    c = PacCode.rm_polar(16, 8)
    assert (c.n, c.m, c.rate) == (4, 7, 0.5)
    assert c.g == DEFAULT_G


def test_rate_profile_map_examples():
    A = [3, 5, 6, 7]
    assert list(rate_profile_map([1, 0, 1, 1], A)) == [0, 0, 0, 1, 0, 0, 1, 1]
    assert not rate_profile_map([0, 0, 0, 0], A).any()
    d = np.array([1, 0, 1, 1, 0, 0, 1, 0], dtype=np.uint8)
    np.testing.assert_array_equal(rate_profile_map(d, range(8)), d)
    with pytest.raises(ValueError):
        rate_profile_map([1, 0], A)


def test_frozen_positions_zero(code168):
    rng = np.random.default_rng(1)
    d = rng.integers(0, 2, (100, 8))
    v = rate_profile_map(d, code168)
    assert not v[:, ~code168.info_mask].any()


def test_convolve_examples():
    assert not convolve(np.zeros(16), DEFAULT_G).any()
    imp = np.zeros(16, dtype=np.uint8)
    imp[0] = 1
    assert list(convolve(imp, DEFAULT_G)) == [1, 0, 1, 1, 0, 1, 1] + [0] * 9
    v = np.random.default_rng(0).integers(0, 2, 16)
    np.testing.assert_array_equal(convolve(v, (1,)), v)


@pytest.mark.parametrize("N", [8, 16, 32])
def test_convolve_matches_toeplitz(N):
    rng = np.random.default_rng(N)
    v = rng.integers(0, 2, (1000, N))
    expected = (v @ toeplitz_G(N, DEFAULT_G)) % 2
    np.testing.assert_array_equal(convolve(v, DEFAULT_G), expected)


def test_polar_transform_examples():
    assert list(polar_transform([0, 1])) == [1, 1]
    assert list(polar_transform([1, 0])) == [1, 0]
    assert not polar_transform(np.zeros(16)).any()
    with pytest.raises(ValueError):
        polar_transform(np.zeros(6))


@pytest.mark.parametrize("N", [2, 4, 8, 16, 32])
def test_polar_transform_matches_kronecker(N):
    u = np.random.default_rng(N).integers(0, 2, (200, N))
    np.testing.assert_array_equal(polar_transform(u), (u @ kron_F(N)) % 2)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=16, max_size=16))
def test_polar_transform_involution(bits):
    u = np.array(bits, dtype=np.uint8)
    np.testing.assert_array_equal(polar_transform(polar_transform(u)), u)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=8, max_size=8),
       st.lists(st.integers(0, 1), min_size=8, max_size=8))
def test_encode_linear(a, b):
    code = PacCode.rm_polar(16, 8)
    a, b = np.array(a, dtype=np.uint8), np.array(b, dtype=np.uint8)
    np.testing.assert_array_equal(encode(a, code) ^ encode(b, code), encode(a ^ b, code))


def test_encode_zero(code168):
    assert not encode(np.zeros(8), code168).any()


@pytest.mark.parametrize("N,K", [(8, 4), (16, 8)])
def test_codebook_matches_matrix_oracle(N, K):
    code = PacCode.rm_polar(N, K)
    d = messages(K)
    np.testing.assert_array_equal(encode(d, code), (d @ generator(code)) % 2)
    assert len({tuple(c) for c in codebook(code)}) == 2 ** K


def test_encode_length_error(code168):
    with pytest.raises(ValueError):
        encode(np.zeros(7), code168)


def test_parse_bits():
    assert parse_bits("1011011") == DEFAULT_G
    assert parse_bits("1,0,1") == (1, 0, 1)
    with pytest.raises(ValueError):
        parse_bits("10x")
