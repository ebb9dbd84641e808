import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embedlab.algebra import LinearMap, rank
from embedlab.ciphers import (
    KeyLengthError,
    aes128,
    aes_embedding_field,
    aes_sbox,
    circulant_field_matrix,
    decrypt,
    encrypt,
    field_matrix_to_bits,
    independent_round_keys,
    is_proper_mixing,
    load_known_answers,
    mixcolumns,
    mixing_layer_matrix,
    present80,
    present_player_permutation,
    present_sbox,
    reduced_cipher,
    serpent_sbox,
    shiftrows,
)

# ---------------------------------------------------------------------
# Components


def test_aes_sbox_values():
    assert aes_sbox(0x00) == 0x63
    assert aes_sbox(0x53) == 0xED
    assert sorted(aes_sbox(x) for x in range(256)) == list(range(256))


def test_mixcolumns_known_column():
    state = [0xDB, 0x13, 0x53, 0x45] + [0x01] * 4 + [0xC6] * 4 + [0xD4, 0xD4, 0xD4, 0xD5]
    out = mixcolumns(state)
    assert out[:4] == [0x8E, 0x4D, 0xA1, 0xBC]
    assert out[4:8] == [0x01] * 4
    assert out[8:12] == [0xC6] * 4
    assert out[12:] == [0xD5, 0xD5, 0xD7, 0xD6]


def test_shiftrows_moves_rows_left():
    out = shiftrows(list(range(16)))
    assert out[:4] == [0, 5, 10, 15]
    assert out[4:8] == [4, 9, 14, 3]


def test_present_components():
    assert [present_sbox(x) for x in (0x0, 0x1, 0xF)] == [0xC, 0x5, 0x2]
    assert present_player_permutation(1) == 16
    assert present_player_permutation(63) == 63
    assert sorted(present_player_permutation(i) for i in range(64)) == list(range(64))


@pytest.mark.parametrize(
    "index, x, expected",
    [(0, 0x0, 3), (0, 0xF, 12), (1, 0x0, 15), (2, 0x5, 12), (3, 0x0, 0), (4, 0x1, 15), (5, 0x8, 0), (6, 0xF, 0), (7, 0xF, 6), (8, 0x1, 8)],
)
def test_serpent_sbox_values(index, x, expected):
    assert serpent_sbox(index, x) == expected


def test_serpent_sboxes_are_permutations():
    for index in range(8):
        assert sorted(serpent_sbox(index, x) for x in range(16)) == list(range(16))


def test_isomorphic_embedding_field():
    f = aes_embedding_field()
    assert f.dlog(0x03) == 2
    assert f.mul(0x57, 0x83) == 0xC1


def test_bit_pattern_embedding_field():
    f = aes_embedding_field("bit-pattern")
    assert f.primitive_elem == 0x02
    assert f.dlog(0x02) == 1
    with pytest.raises(ValueError):
        aes_embedding_field("polar")


def test_unknown_mixing_layer():
    with pytest.raises(ValueError):
        mixing_layer_matrix("ShiftColumns")


@pytest.mark.parametrize("name", ["SR", "MC", "AES", "pLayer", "SERPENT"])
def test_mixing_layers_are_invertible(name):
    matrix = mixing_layer_matrix(name)
    assert rank(matrix) == matrix.rows


@pytest.mark.parametrize("name, m", [("AES", 8), ("pLayer", 4)])
def test_mixing_layers_are_proper(name, m):
    matrix = mixing_layer_matrix(name)
    assert is_proper_mixing(LinearMap(matrix), m, matrix.rows // m)


def test_identity_is_not_proper():
    assert not is_proper_mixing(LinearMap.identity(16), 4, 4)


# ---------------------------------------------------------------------
# Known answers


@pytest.mark.parametrize("name", ["aes128", "present80"])
def test_known_answers(name):
    spec = aes128() if name == "aes128" else present80()
    vectors = load_known_answers(name)
    assert vectors
    for key, pt, ct in vectors:
        assert encrypt(spec, key, pt) == ct
        assert decrypt(spec, key, ct) == pt


@pytest.mark.parametrize("name, key_bytes", [("aes128", 16), ("present80", 10)])
def test_decrypt_inverts_encrypt_on_random_pairs(name, key_bytes):
    spec = aes128() if name == "aes128" else present80()
    rng = np.random.Generator(np.random.Philox(key=2024))
    for _ in range(10_000):
        key = int.from_bytes(rng.bytes(key_bytes), "little")
        pt = int.from_bytes(rng.bytes(spec.state_bits // 8), "little")
        assert decrypt(spec, key, encrypt(spec, key, pt)) == pt


def test_key_length_checked():
    with pytest.raises(KeyLengthError):
        present80().round_keys(1 << 80)


def test_block_hex_round_trip():
    spec = present80()
    assert spec.block_to_hex(spec.block_from_hex("5579c1387b228445")) == "5579c1387b228445"


# ---------------------------------------------------------------------
# Reduced cipher


def test_circulant_shapes(gf16):
    assert circulant_field_matrix(gf16, 4)[0] == (2, 3, 1, 1)
    assert circulant_field_matrix(gf16, 4)[1] == (1, 2, 3, 1)
    assert circulant_field_matrix(gf16, 3)[0] == (2, 1, 1)


def test_reduced_cipher_shape():
    reduced = reduced_cipher(4, 4, 4)
    spec = reduced.spec
    assert spec.state_bits == 16
    assert len(spec.round_keys(0xBEEF)) == 5
    assert spec.mixing[0].matrix == field_matrix_to_bits(reduced.field_matrix, reduced.field)


def test_reduced_cipher_rejects_unsupported_m():
    with pytest.raises(ValueError):
        reduced_cipher(9, 2, 2)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 0xFFFF), st.integers(0, 0xFFFF))
def test_reduced_decrypt_inverts_encrypt(key, pt):
    spec = reduced_cipher(4, 4, 4).spec
    assert decrypt(spec, key, encrypt(spec, key, pt)) == pt


def test_reduced_cipher_is_a_permutation():
    spec = reduced_cipher(2, 3, 3).spec
    keys = spec.round_keys(0b101101)
    assert sorted(spec.encrypt_with_round_keys(keys, v) for v in range(64)) == list(range(64))


def test_independent_round_keys_are_seeded():
    a = independent_round_keys(7, 5, 80)
    assert a == independent_round_keys(7, 5, 80)
    assert a != independent_round_keys(8, 5, 80)
    assert all(0 <= k < 1 << 80 for k in a)
