"""Translation-based ciphers: AES-128, PRESENT-80, SERPENT components and a reduced toy cipher.

States are integers of m·b bits; brick j occupies bits [m·j, m·j + m). For AES this
makes state byte i the i-th input byte (column-major State), for PRESENT nibble 0 is
the least significant nibble of the 64-bit block.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Callable, Literal, Sequence

import numpy as np

from .algebra import BitMatrix, BitVector, FieldSpec, LinearMap, rank

logger = logging.getLogger(__name__)

AES_POLY = 0x11B
# x^8 + x^4 + x^3 + x^2 + 1, primitive; used for the embedding's discrete logs
PRIMITIVE_POLY_N = 0x11D

PRIMITIVE_POLYS = {
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: PRIMITIVE_POLY_N,
}

AES_AFFINE_ROWS = (
    (1, 0, 0, 0, 1, 1, 1, 1),
    (1, 1, 0, 0, 0, 1, 1, 1),
    (1, 1, 1, 0, 0, 0, 1, 1),
    (1, 1, 1, 1, 0, 0, 0, 1),
    (1, 1, 1, 1, 1, 0, 0, 0),
    (0, 1, 1, 1, 1, 1, 0, 0),
    (0, 0, 1, 1, 1, 1, 1, 0),
    (0, 0, 0, 1, 1, 1, 1, 1),
)
AES_AFFINE_CONSTANT = 0x63

SHIFT_ROWS = (0, 5, 10, 15, 4, 9, 14, 3, 8, 13, 2, 7, 12, 1, 6, 11)

PRESENT_SBOX = (0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2)

SERPENT_SBOXES = (
    (3, 8, 15, 1, 10, 6, 5, 11, 14, 13, 4, 2, 7, 0, 9, 12),
    (15, 12, 2, 7, 9, 0, 5, 10, 1, 11, 14, 8, 6, 13, 3, 4),
    (8, 6, 7, 9, 3, 12, 10, 15, 13, 1, 14, 4, 0, 11, 5, 2),
    (0, 15, 11, 8, 12, 9, 6, 3, 13, 1, 2, 4, 10, 7, 5, 14),
    (1, 15, 8, 3, 12, 0, 11, 6, 2, 5, 4, 10, 9, 14, 7, 13),
    (15, 5, 2, 11, 4, 10, 9, 12, 0, 3, 14, 8, 13, 6, 7, 1),
    (7, 2, 12, 5, 8, 4, 6, 11, 14, 9, 1, 15, 13, 3, 10, 0),
    (1, 13, 15, 0, 14, 8, 2, 11, 7, 4, 12, 10, 9, 3, 5, 6),
)

MASK32 = 0xFFFFFFFF

StateBlock = BitVector


class KeyLengthError(ValueError):
    pass


def _invert_table(table: Sequence[int]) -> tuple[int, ...]:
    inv = [0] * len(table)
    for x, y in enumerate(table):
        inv[y] = x
    return tuple(inv)


def is_permutation(table: Sequence[int]) -> bool:
    return sorted(table) == list(range(len(table)))


@dataclass(frozen=True)
class TbCipherSpec:
    """γλσ_k rounds after an initial key translation.

    ``bricks[ρ]`` and ``mixing[ρ]`` describe round ρ + 1; the last entry of
    ``mixing`` is the last-round layer.
    """

    name: str
    m: int
    b: int
    rounds: int
    bricks: tuple[tuple[tuple[int, ...], ...], ...]
    mixing: tuple[LinearMap, ...]
    key_bits: int
    key_schedule: Callable[[int], list[int]] = field(repr=False, compare=False)
    byte_order: Literal["little", "big"] = "little"
    _inverse_bricks: tuple = field(init=False, repr=False, compare=False)
    _inverse_mixing: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.bricks) != self.rounds or len(self.mixing) != self.rounds:
            raise ValueError("need one brick layer and one mixing layer per round")
        for layer in self.bricks:
            if len(layer) != self.b:
                raise ValueError("each round needs b brick tables")
            for table in layer:
                if len(table) != 1 << self.m or not is_permutation(table):
                    raise ValueError("brick tables must be permutations of [0, 2^m)")
        inverses: dict[int, LinearMap] = {}
        for lm in self.mixing:
            if lm.n != self.state_bits:
                raise ValueError("mixing layer size must be m*b")
            if id(lm) not in inverses:
                inverses[id(lm)] = lm.inverse()
        object.__setattr__(
            self, "_inverse_bricks", tuple(tuple(_invert_table(t) for t in layer) for layer in self.bricks)
        )
        object.__setattr__(self, "_inverse_mixing", tuple(inverses[id(lm)] for lm in self.mixing))

    @property
    def state_bits(self) -> int:
        return self.m * self.b

    def block_from_hex(self, text: str) -> int:
        return int.from_bytes(bytes.fromhex(text), self.byte_order)

    def block_to_hex(self, value: int, bits: int | None = None) -> str:
        width = (bits or self.state_bits) // 8
        return value.to_bytes(width, self.byte_order).hex()

    def round_keys(self, key: int) -> list[int]:
        if not 0 <= key < 1 << self.key_bits:
            raise KeyLengthError(f"{self.name} needs a {self.key_bits}-bit key")
        keys = self.key_schedule(key)
        if len(keys) != self.rounds + 1:
            raise ValueError(f"key schedule produced {len(keys)} round keys, expected {self.rounds + 1}")
        return keys

    def substitute(self, state: int, layer: Sequence[Sequence[int]]) -> int:
        m = self.m
        mask = (1 << m) - 1
        out = 0
        for j, table in enumerate(layer):
            out |= table[(state >> (m * j)) & mask] << (m * j)
        return out

    def encrypt_with_round_keys(self, round_keys: Sequence[int], state: int) -> int:
        state ^= round_keys[0]
        for rho in range(self.rounds):
            state = self.substitute(state, self.bricks[rho])
            state = self.mixing[rho](state)
            state ^= round_keys[rho + 1]
        return state

    def decrypt_with_round_keys(self, round_keys: Sequence[int], state: int) -> int:
        for rho in range(self.rounds - 1, -1, -1):
            state ^= round_keys[rho + 1]
            state = self._inverse_mixing[rho](state)
            state = self.substitute(state, self._inverse_bricks[rho])
        return state ^ round_keys[0]


def _as_state(spec: TbCipherSpec, pt: BitVector | int) -> int:
    if isinstance(pt, BitVector):
        if pt.length != spec.state_bits:
            raise ValueError(f"{spec.name} blocks are {spec.state_bits} bits, got {pt.length}")
        return pt.bits
    if not 0 <= pt < 1 << spec.state_bits:
        raise ValueError(f"{spec.name} blocks are {spec.state_bits} bits")
    return pt


def encrypt(spec: TbCipherSpec, key: int, pt: BitVector | int) -> BitVector | int:
    out = spec.encrypt_with_round_keys(spec.round_keys(key), _as_state(spec, pt))
    return BitVector(spec.state_bits, out) if isinstance(pt, BitVector) else out


def decrypt(spec: TbCipherSpec, key: int, ct: BitVector | int) -> BitVector | int:
    out = spec.decrypt_with_round_keys(spec.round_keys(key), _as_state(spec, ct))
    return BitVector(spec.state_bits, out) if isinstance(ct, BitVector) else out


# -- AES ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def aes_field() -> FieldSpec:
    return FieldSpec(8, AES_POLY)


def aes_embedding_field(representation: Literal["isomorphic", "bit-pattern"] = "isomorphic") -> FieldSpec:
    """Field whose discrete logs place AES bytes inside the embedding.

    "isomorphic" keeps the AES arithmetic and takes as generator the root γ of
    x^8+x^4+x^3+x^2+1 with γ^2 = 0x03; "bit-pattern" reads the byte directly as
    an element of GF(2)[x]/(x^8+x^4+x^3+x^2+1) with generator x.
    """
    if representation == "bit-pattern":
        return FieldSpec(8, PRIMITIVE_POLY_N, 0x02)
    if representation != "isomorphic":
        raise ValueError(f"unknown representation {representation!r}")
    f = aes_field()
    gamma = f.pow(0x03, 128)
    if gamma not in f.roots(PRIMITIVE_POLY_N):
        raise ArithmeticError("0x03 is not a conjugate root of the primitive polynomial")
    return FieldSpec(8, AES_POLY, gamma)


def _aes_affine(x: int) -> int:
    y = 0
    for i, row in enumerate(AES_AFFINE_ROWS):
        bit = 0
        for j, coeff in enumerate(row):
            bit ^= coeff & (x >> j)
        y |= (bit & 1) << i
    return y ^ AES_AFFINE_CONSTANT


@lru_cache(maxsize=None)
def _aes_sbox_table() -> tuple[int, ...]:
    f = aes_field()
    return tuple(_aes_affine(f.inv_patched(x)) for x in range(256))


def aes_sbox(x: int) -> int:
    if not 0 <= x < 256:
        raise ValueError("AES S-box input must be a byte")
    return _aes_sbox_table()[x]


def _state_bytes(state: int) -> list[int]:
    return list(state.to_bytes(16, "little"))


def _bytes_state(data: Sequence[int]) -> int:
    return int.from_bytes(bytes(data), "little")


def shiftrows(s: Sequence[int]) -> list[int]:
    if len(s) != 16:
        raise ValueError("AES state has 16 bytes")
    return [s[i] for i in SHIFT_ROWS]


def mixcolumns(s: Sequence[int]) -> list[int]:
    if len(s) != 16:
        raise ValueError("AES state has 16 bytes")
    f = aes_field()
    out = [0] * 16
    for c in range(4):
        col = s[4 * c:4 * c + 4]
        for r in range(4):
            out[4 * c + r] = (
                f.mul(0x02, col[r]) ^ f.mul(0x03, col[(r + 1) % 4]) ^ col[(r + 2) % 4] ^ col[(r + 3) % 4]
            )
    return out


def _sr_int(state: int) -> int:
    return _bytes_state(shiftrows(_state_bytes(state)))


def _mc_int(state: int) -> int:
    return _bytes_state(mixcolumns(_state_bytes(state)))


def key_schedule_aes128(key: int) -> list[int]:
    if not 0 <= key < 1 << 128:
        raise KeyLengthError("AES-128 needs a 128-bit key")
    sbox = _aes_sbox_table()
    f = aes_field()
    words = [list(key.to_bytes(16, "little")[4 * i:4 * i + 4]) for i in range(4)]
    rcon = 0x01
    for i in range(4, 44):
        temp = list(words[i - 1])
        if i % 4 == 0:
            temp = [sbox[b] for b in temp[1:] + temp[:1]]
            temp[0] ^= rcon
            rcon = f.mul(rcon, 0x02)
        words.append([a ^ b for a, b in zip(words[i - 4], temp)])
    return [_bytes_state(sum(words[4 * r:4 * r + 4], [])) for r in range(11)]


@lru_cache(maxsize=None)
def aes128() -> TbCipherSpec:
    sbox = _aes_sbox_table()
    layer = (sbox,) * 16
    full = LinearMap(mixing_layer_matrix("AES"))
    last = LinearMap(mixing_layer_matrix("SR"))
    return TbCipherSpec(
        name="aes128",
        m=8,
        b=16,
        rounds=10,
        bricks=(layer,) * 10,
        mixing=(full,) * 9 + (last,),
        key_bits=128,
        key_schedule=key_schedule_aes128,
        byte_order="little",
    )


# -- PRESENT -------------------------------------------------------------------------


def present_sbox(x: int) -> int:
    if not 0 <= x < 16:
        raise ValueError("PRESENT S-box input must be a nibble")
    return PRESENT_SBOX[x]


def present_player_permutation(i: int) -> int:
    if not 0 <= i < 64:
        raise ValueError("pLayer bit index must lie in [0, 64)")
    return 63 if i == 63 else (16 * i) % 63


def _player_int(state: int) -> int:
    out = 0
    for i in range(64):
        out |= ((state >> i) & 1) << present_player_permutation(i)
    return out


def key_schedule_present80(key: int) -> list[int]:
    if not 0 <= key < 1 << 80:
        raise KeyLengthError("PRESENT-80 needs an 80-bit key")
    mask80 = (1 << 80) - 1
    keys = []
    k = key
    for counter in range(1, 33):
        keys.append(k >> 16)
        k = ((k << 61) | (k >> 19)) & mask80
        k = (PRESENT_SBOX[k >> 76] << 76) | (k & ((1 << 76) - 1))
        k ^= counter << 15
    return keys


@lru_cache(maxsize=None)
def present80() -> TbCipherSpec:
    layer = (PRESENT_SBOX,) * 16
    player = LinearMap(mixing_layer_matrix("pLayer"))
    return TbCipherSpec(
        name="present80",
        m=4,
        b=16,
        rounds=31,
        bricks=(layer,) * 31,
        mixing=(player,) * 31,
        key_bits=80,
        key_schedule=key_schedule_present80,
        byte_order="big",
    )


# -- SERPENT ---------------------------------------------------------------------------


def serpent_sbox(index: int, x: int) -> int:
    return SERPENT_SBOXES[index % 8][x]


def serpent_ip_permutation(i: int) -> int:
    """Source bit of output bit ``i`` under the initial permutation."""
    if not 0 <= i < 128:
        raise ValueError("SERPENT bit index must lie in [0, 128)")
    return 32 * (i % 4) + i // 4


def _rotl32(x: int, r: int) -> int:
    return ((x << r) | (x >> (32 - r))) & MASK32


def serpent_lt_bitslice(state: int) -> int:
    x0, x1, x2, x3 = ((state >> (32 * k)) & MASK32 for k in range(4))
    x0 = _rotl32(x0, 13)
    x2 = _rotl32(x2, 3)
    x1 ^= x0 ^ x2
    x3 ^= x2 ^ ((x0 << 3) & MASK32)
    x1 = _rotl32(x1, 1)
    x3 = _rotl32(x3, 7)
    x0 ^= x1 ^ x3
    x2 ^= x3 ^ ((x1 << 7) & MASK32)
    x0 = _rotl32(x0, 5)
    x2 = _rotl32(x2, 22)
    return x0 | (x1 << 32) | (x2 << 64) | (x3 << 96)


def _permute_bits(state: int, source: Callable[[int], int], width: int) -> int:
    out = 0
    for i in range(width):
        out |= ((state >> source(i)) & 1) << i
    return out


def _serpent_lambda(state: int) -> int:
    # nibble-contiguous layout; bit-slice word k bit j is nibble j bit k
    sliced = _permute_bits(state, lambda i: 4 * (i % 32) + i // 32, 128)
    mixed = serpent_lt_bitslice(sliced)
    return _permute_bits(mixed, serpent_ip_permutation, 128)


# -- mixing layers ---------------------------------------------------------------------

_LAYERS: dict[str, tuple[int, Callable[[int], int]]] = {
    "SR": (128, _sr_int),
    "MC": (128, _mc_int),
    "AES": (128, lambda v: _mc_int(_sr_int(v))),
    "pLayer": (64, _player_int),
    "SERPENT": (128, _serpent_lambda),
}


@lru_cache(maxsize=None)
def mixing_layer_matrix(which: str) -> BitMatrix:
    try:
        n, fn = _LAYERS[which]
    except KeyError:
        raise ValueError(f"unknown mixing layer {which!r}; choose from {sorted(_LAYERS)}") from None
    return LinearMap.from_function(n, fn).matrix


def is_proper_mixing(layer: LinearMap, m: int, b: int) -> bool:
    """True when no nonempty proper sum of bricks is mapped into itself."""
    mask = (1 << m) - 1
    support = []
    for i in range(b):
        touched = 0
        for k in range(m):
            image = layer(1 << (m * i + k))
            for j in range(b):
                if (image >> (m * j)) & mask:
                    touched |= 1 << j
        support.append(touched)
    union = [0] * (1 << b)
    full = (1 << b) - 1
    for subset in range(1, full):
        low = subset & -subset
        union[subset] = union[subset ^ low] | support[low.bit_length() - 1]
        if union[subset] & ~subset == 0:
            logger.debug("brick subset %#x is invariant", subset)
            return False
    return True


# -- reduced cipher ----------------------------------------------------------------------


def circulant_field_matrix(field_spec: FieldSpec, b: int) -> tuple[tuple[int, ...], ...]:
    """Circulant over GF(2^m) with first row (2, 3, 1, …, 1) for even b, (2, 1, …, 1) for odd b."""
    first = (2, 3) + (1,) * (b - 2) if b % 2 == 0 else (2,) + (1,) * (b - 1)
    first = first[:b]
    return tuple(tuple(first[(c - r) % b] for c in range(b)) for r in range(b))


def field_matrix_to_bits(matrix: Sequence[Sequence[int]], field_spec: FieldSpec) -> BitMatrix:
    """Binary mb×mb form of a matrix over GF(2^m) acting on brick-ordered states."""
    m = field_spec.m
    b = len(matrix)

    def apply(state: int) -> int:
        mask = (1 << m) - 1
        bricks = [(state >> (m * j)) & mask for j in range(b)]
        out = 0
        for r in range(b):
            acc = 0
            for c in range(b):
                acc ^= field_spec.mul(matrix[r][c], bricks[c])
            out |= acc << (m * r)
        return out

    return LinearMap.from_function(m * b, apply).matrix


@dataclass(frozen=True)
class ReducedCipher:
    spec: TbCipherSpec
    field: FieldSpec
    field_matrix: tuple[tuple[int, ...], ...]


def reduced_cipher(m: int = 4, b: int = 4, rounds: int = 4) -> ReducedCipher:
    """AES-like toy cipher: patched inversion plus a constant, circulant mixing, rotating key schedule."""
    if m not in PRIMITIVE_POLYS:
        raise ValueError(f"reduced cipher supports m in {sorted(PRIMITIVE_POLYS)}")
    if b < 1 or rounds < 1:
        raise ValueError("b and rounds must be positive")
    f = FieldSpec(m, PRIMITIVE_POLYS[m])
    constant = AES_AFFINE_CONSTANT & (f.q - 1)
    brick = tuple(f.inv_patched(x) ^ constant for x in range(f.q))
    fm = circulant_field_matrix(f, b)
    bits = field_matrix_to_bits(fm, f)
    if rank(bits) < m * b:
        raise ValueError(f"no invertible circulant mixing for b={b} over GF(2^{m})")
    layer = LinearMap(bits)
    width = m * b
    full = (1 << width) - 1

    def schedule(key: int) -> list[int]:
        out = []
        for rho in range(rounds + 1):
            shift = (rho * m) % width
            rotated = ((key << shift) | (key >> (width - shift))) & full if shift else key
            out.append(rotated ^ (rho & full))
        return out

    spec = TbCipherSpec(
        name=f"reduced-m{m}-b{b}-r{rounds}",
        m=m,
        b=b,
        rounds=rounds,
        bricks=((brick,) * b,) * rounds,
        mixing=(layer,) * rounds,
        key_bits=width,
        key_schedule=schedule,
        byte_order="big",
    )
    return ReducedCipher(spec=spec, field=f, field_matrix=fm)


def independent_round_keys(seed: int, count: int, width: int) -> list[int]:
    """``count`` round keys of ``width`` bits from a Philox stream keyed by ``seed``."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    nbytes = (width + 7) // 8
    mask = (1 << width) - 1
    return [int.from_bytes(rng.bytes(nbytes), "little") & mask for _ in range(count)]


def cipher_by_name(name: str, m: int = 4, b: int = 4, rounds: int = 4) -> TbCipherSpec:
    if name == "aes128":
        return aes128()
    if name == "present80":
        return present80()
    if name == "reduced":
        return reduced_cipher(m, b, rounds).spec
    raise ValueError(f"no encryption available for cipher {name!r}")


def load_known_answers(name: str) -> list[tuple[int, int, int]]:
    """(key, plaintext, ciphertext) triples from ``data/<name>.txt``."""
    spec = cipher_by_name(name)
    text = resources.files("embedlab.data").joinpath(f"{name}.txt").read_text()
    vectors = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key_hex, pt_hex, ct_hex = line.split()
        vectors.append((
            int.from_bytes(bytes.fromhex(key_hex), spec.byte_order),
            spec.block_from_hex(pt_hex),
            spec.block_from_hex(ct_hex),
        ))
    return vectors
