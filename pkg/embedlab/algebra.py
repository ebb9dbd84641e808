"""GF(2) linear algebra on bit-packed matrices, plus GF(2^m) arithmetic.

Rows of a BitMatrix are stored as little-endian uint64 words: column j of a row
lives in word ``j // 64`` at bit ``j % 64``. Vectors are Python integers wrapped
in BitVector, bit i being coordinate i. Polynomials over GF(2) are integers too,
bit i holding the coefficient of x^i.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from math import lcm
from typing import Callable, Iterable, Sequence

import numpy as np
import sympy

from .settings import M4RI_CHUNK_ROWS, M4RI_MIN_ROWS, M4RI_STRIP_BITS, SMALL_RANK_MAX_COLS

logger = logging.getLogger(__name__)

WORD_BITS = 64


class SingularMatrixError(ValueError):
    pass


class DependentRowsError(ValueError):
    pass


class ReducibleModulusError(ValueError):
    pass


def _nwords(cols: int) -> int:
    return max(1, -(-cols // WORD_BITS))


def _frozen(words: np.ndarray) -> np.ndarray:
    words.flags.writeable = False
    return words


def _words_to_int(words: np.ndarray) -> int:
    return int.from_bytes(np.ascontiguousarray(words, dtype="<u8").tobytes(), "little")


def _int_to_words(value: int, nwords: int) -> np.ndarray:
    return np.frombuffer(value.to_bytes(nwords * 8, "little"), dtype="<u8").astype(np.uint64)


def _parity64(x: np.ndarray) -> np.ndarray:
    x = x.copy()
    for shift in (32, 16, 8, 4, 2, 1):
        x ^= x >> np.uint64(shift)
    return x & np.uint64(1)


@dataclass(frozen=True)
class BitVector:
    length: int
    bits: int = 0

    def __post_init__(self) -> None:
        if self.length <= 0:
            raise ValueError("length must be positive")
        if self.bits < 0 or self.bits >> self.length:
            raise ValueError("payload has bits beyond length")

    @classmethod
    def unit(cls, length: int, index: int) -> "BitVector":
        if not 0 <= index < length:
            raise ValueError(f"index {index} outside [0, {length})")
        return cls(length, 1 << index)

    @classmethod
    def from_positions(cls, length: int, positions: Iterable[int]) -> "BitVector":
        bits = 0
        for p in positions:
            if not 0 <= p < length:
                raise ValueError(f"position {p} outside [0, {length})")
            bits ^= 1 << p
        return cls(length, bits)

    @property
    def weight(self) -> int:
        return self.bits.bit_count()

    def __getitem__(self, index: int) -> int:
        if not 0 <= index < self.length:
            raise IndexError(index)
        return (self.bits >> index) & 1

    def __xor__(self, other: "BitVector") -> "BitVector":
        if other.length != self.length:
            raise ValueError("length mismatch")
        return BitVector(self.length, self.bits ^ other.bits)

    __add__ = __xor__

    def dot(self, other: "BitVector") -> int:
        if other.length != self.length:
            raise ValueError("length mismatch")
        return (self.bits & other.bits).bit_count() & 1

    def positions(self) -> list[int]:
        out = []
        bits = self.bits
        while bits:
            low = bits & -bits
            out.append(low.bit_length() - 1)
            bits ^= low
        return out

    def blocks(self, width: int) -> list[int]:
        """Split into consecutive ``width``-bit integers, lowest block first."""
        if self.length % width:
            raise ValueError("length is not a multiple of the block width")
        mask = (1 << width) - 1
        return [(self.bits >> (i * width)) & mask for i in range(self.length // width)]


@dataclass(frozen=True, eq=False)
class BitMatrix:
    rows: int
    cols: int
    words: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols <= 0:
            raise ValueError("matrix needs rows >= 0 and cols > 0")
        words = self.words
        if not (isinstance(words, np.ndarray) and words.dtype == np.uint64
                and not words.flags.writeable and words.flags.c_contiguous):
            words = _frozen(np.array(words, dtype=np.uint64, copy=True, order="C"))
        if words.shape != (self.rows, _nwords(self.cols)):
            raise ValueError(f"word array shape {words.shape} does not fit {self.rows}x{self.cols}")
        tail = self.cols % WORD_BITS
        if tail and self.rows and np.any(words[:, -1] >> np.uint64(tail)):
            raise ValueError("padding bits beyond cols must be zero")
        object.__setattr__(self, "words", words)

    # -- construction -------------------------------------------------------

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols, _frozen(np.zeros((rows, _nwords(cols)), dtype=np.uint64)))

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_rows([1 << i for i in range(n)], n)

    @classmethod
    def from_rows(cls, values: Sequence[int], cols: int) -> "BitMatrix":
        nw = _nwords(cols)
        for v in values:
            if v < 0 or v >> cols:
                raise ValueError("row value does not fit in cols")
        data = b"".join(v.to_bytes(nw * 8, "little") for v in values)
        words = np.frombuffer(data, dtype="<u8").astype(np.uint64).reshape(len(values), nw)
        return cls(len(values), cols, _frozen(words))

    @classmethod
    def from_vectors(cls, vectors: Sequence[BitVector]) -> "BitMatrix":
        if not vectors:
            raise ValueError("need at least one vector to fix the column count")
        cols = vectors[0].length
        if any(v.length != cols for v in vectors):
            raise ValueError("all rows must share one length")
        return cls.from_rows([v.bits for v in vectors], cols)

    @classmethod
    def from_dense(cls, dense: np.ndarray | Sequence[Sequence[int]]) -> "BitMatrix":
        arr = np.asarray(dense, dtype=np.uint8) & 1
        if arr.ndim != 2:
            raise ValueError("dense matrix must be two-dimensional")
        rows, cols = arr.shape
        nw = _nwords(cols)
        padded = np.zeros((rows, nw * WORD_BITS), dtype=np.uint8)
        padded[:, :cols] = arr
        packed = np.packbits(padded, axis=1, bitorder="little")
        words = np.ascontiguousarray(packed).view("<u8").astype(np.uint64).reshape(rows, nw)
        return cls(rows, cols, _frozen(words))

    @classmethod
    def stack(cls, matrices: Sequence["BitMatrix"]) -> "BitMatrix":
        cols = matrices[0].cols
        if any(m.cols != cols for m in matrices):
            raise ValueError("column counts differ")
        words = np.concatenate([m.words for m in matrices], axis=0)
        return cls(words.shape[0], cols, _frozen(words))

    # -- views ----------------------------------------------------------------

    @property
    def nwords(self) -> int:
        return self.words.shape[1]

    def to_dense(self) -> np.ndarray:
        raw = np.ascontiguousarray(self.words, dtype="<u8").view(np.uint8).reshape(self.rows, self.nwords * 8)
        return np.unpackbits(raw, axis=1, bitorder="little")[:, : self.cols]

    def row_ints(self) -> list[int]:
        data = np.ascontiguousarray(self.words, dtype="<u8").tobytes()
        step = self.nwords * 8
        return [int.from_bytes(data[i * step:(i + 1) * step], "little") for i in range(self.rows)]

    def row(self, index: int) -> BitVector:
        return BitVector(self.cols, _words_to_int(self.words[index]))

    def select_rows(self, indices: Sequence[int]) -> "BitMatrix":
        words = np.ascontiguousarray(self.words[np.asarray(indices, dtype=np.intp)])
        return BitMatrix(len(indices), self.cols, _frozen(words))

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_dense().T)

    def hstack(self, other: "BitMatrix") -> "BitMatrix":
        if other.rows != self.rows:
            raise ValueError("row counts differ")
        shift = self.cols
        return BitMatrix.from_rows(
            [a | (b << shift) for a, b in zip(self.row_ints(), other.row_ints())],
            self.cols + other.cols,
        )

    def apply(self, vector: BitVector) -> BitVector:
        """Column-convention product M·v."""
        if vector.length != self.cols:
            raise ValueError("vector length must equal cols")
        vw = _int_to_words(vector.bits, self.nwords)
        folded = np.bitwise_xor.reduce(self.words & vw, axis=1)
        bits = _parity64(folded).astype(np.uint8)
        return BitVector(self.rows, int.from_bytes(np.packbits(bits, bitorder="little").tobytes(), "little"))

    def left_apply(self, vector: BitVector) -> BitVector:
        """Row-convention product v·M."""
        if vector.length != self.rows:
            raise ValueError("vector length must equal rows")
        idx = vector.positions()
        if not idx:
            return BitVector(self.cols, 0)
        return BitVector(self.cols, _words_to_int(np.bitwise_xor.reduce(self.words[idx], axis=0)))

    def __matmul__(self, other: "BitMatrix") -> "BitMatrix":
        """Product by the method of four Russians (8-row combination tables of ``other``)."""
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.rows}x{self.cols} @ {other.rows}x{other.cols}")
        out = np.zeros((self.rows, other.nwords), dtype=np.uint64)
        for start in range(0, self.cols, M4RI_STRIP_BITS):
            width = min(M4RI_STRIP_BITS, self.cols - start)
            table = _combination_table(other.words[start:start + width])
            idx = (self.words[:, start // WORD_BITS] >> np.uint64(start % WORD_BITS)) & np.uint64((1 << width) - 1)
            out ^= table[idx.astype(np.intp)]
        return BitMatrix(self.rows, other.cols, _frozen(out))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.rows == other.rows and self.cols == other.cols and np.array_equal(self.words, other.words)

    __hash__ = None  # type: ignore[assignment]

    def is_identity(self) -> bool:
        return self.rows == self.cols and self == BitMatrix.identity(self.rows)

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


def _combination_table(block: np.ndarray) -> np.ndarray:
    """All 2^k XOR combinations of the k rows in ``block``; index bit j selects row j."""
    k = block.shape[0]
    table = np.zeros((1 << k, block.shape[1]), dtype=np.uint64)
    for j in range(k):
        table[1 << j:1 << (j + 1)] = table[: 1 << j] ^ block[j]
    return table


# -- elimination ----------------------------------------------------------------


def _gauss_eliminate(a: np.ndarray, ncols: int, reduce_above: bool = False) -> list[int]:
    rows = a.shape[0]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == rows:
            break
        w = c // WORD_BITS
        mask = np.uint64(1 << (c % WORD_BITS))
        hits = np.flatnonzero(a[r:, w] & mask)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            a[[r, p]] = a[[p, r]]
        pivot_row = a[r, w:].copy()
        below = r + 1 + np.flatnonzero(a[r + 1:, w] & mask)
        if below.size:
            a[below, w:] ^= pivot_row
        if reduce_above and r:
            above = np.flatnonzero(a[:r, w] & mask)
            if above.size:
                a[above, w:] ^= pivot_row
        pivots.append(c)
        r += 1
    return pivots


def _reduce_strip_block(block: np.ndarray, w: int, offset: int, width: int) -> list[int]:
    """Gauss-Jordan on the strip columns of a small block whose strip rank equals its height."""
    k = block.shape[0]
    bits: list[int] = []
    row = 0
    for bit in range(width):
        mask = np.uint64(1 << (offset + bit))
        hits = np.flatnonzero(block[row:, w] & mask)
        if hits.size == 0:
            continue
        p = row + int(hits[0])
        if p != row:
            block[[row, p]] = block[[p, row]]
        pivot_row = block[row, w:].copy()
        others = [i for i in range(k) if i != row and block[i, w] & mask]
        if others:
            block[others, w:] ^= pivot_row
        bits.append(bit)
        row += 1
        if row == k:
            break
    return bits


def _m4ri_eliminate(a: np.ndarray, ncols: int) -> int:
    """Row-echelon reduction in strips of M4RI_STRIP_BITS columns; returns the rank.

    For each strip the pivot rows are found on the extracted strip bits alone,
    brought to reduced form among themselves, and then cleared from every
    remaining row with one lookup into their combination table.
    """
    rows = a.shape[0]
    r = 0
    for start in range(0, ncols, M4RI_STRIP_BITS):
        if r == rows:
            break
        width = min(M4RI_STRIP_BITS, ncols - start)
        w, offset = divmod(start, WORD_BITS)
        vals = (a[r:, w] >> np.uint64(offset)) & np.uint64((1 << width) - 1)
        chosen: list[int] = []
        for bit in range(width):
            hits = np.flatnonzero(vals & np.uint64(1 << bit))
            if hits.size == 0:
                continue
            p = int(hits[0])
            vals[hits[1:]] ^= vals[p]
            vals[p] = 0
            chosen.append(r + p)
        if not chosen:
            continue
        for t, src in enumerate(chosen):
            dst = r + t
            if src != dst:
                a[[dst, src]] = a[[src, dst]]
                for later in range(t + 1, len(chosen)):
                    if chosen[later] == dst:
                        chosen[later] = src
        k = len(chosen)
        block = a[r:r + k]
        bits = _reduce_strip_block(block, w, offset, width)
        table = _combination_table(block[:, w:])
        rest = a[r + k:]
        col = rest[:, w]
        idx = np.zeros(rest.shape[0], dtype=np.intp)
        for j, bit in enumerate(bits):
            idx |= ((col >> np.uint64(offset + bit)) & np.uint64(1)).astype(np.intp) << j
        for lo in range(0, rest.shape[0], M4RI_CHUNK_ROWS):
            sel = idx[lo:lo + M4RI_CHUNK_ROWS]
            nz = np.flatnonzero(sel)
            if nz.size:
                rest[lo + nz, w:] ^= table[sel[nz]]
        r += k
        if start % 1024 == 0:
            logger.debug("m4ri strip at column %d, rank so far %d", start, r)
    return r


def rank_of_rows(values: Iterable[int]) -> int:
    """Rank of rows given as integers, by insertion into a reduced XOR basis."""
    basis: list[int] = []
    for v in values:
        for b in basis:
            v = min(v, v ^ b)
        if v:
            basis.append(v)
            basis.sort(reverse=True)
    return len(basis)


def rank(matrix: BitMatrix, method: str = "auto") -> int:
    """Dimension of the row space. ``method`` is "auto", "gauss", "m4ri" or "small"."""
    if matrix.rows == 0:
        return 0
    if method == "auto":
        if matrix.cols <= SMALL_RANK_MAX_COLS:
            method = "small"
        elif matrix.rows >= M4RI_MIN_ROWS and matrix.cols >= M4RI_MIN_ROWS:
            method = "m4ri"
        else:
            method = "gauss"
    if method == "small":
        if matrix.cols > WORD_BITS:
            return rank_of_rows(matrix.row_ints())
        return rank_of_rows(matrix.words[:, 0].tolist())
    work = np.array(matrix.words, copy=True)
    if method == "gauss":
        return len(_gauss_eliminate(work, matrix.cols))
    if method == "m4ri":
        return _m4ri_eliminate(work, matrix.cols)
    raise ValueError(f"unknown rank method {method!r}")


def rref(matrix: BitMatrix) -> tuple[BitMatrix, list[int]]:
    work = np.array(matrix.words, copy=True)
    pivots = _gauss_eliminate(work, matrix.cols, reduce_above=True)
    return BitMatrix(matrix.rows, matrix.cols, _frozen(work)), pivots


def row_basis(matrix: BitMatrix) -> BitMatrix:
    """Nonzero rows of the reduced echelon form."""
    reduced, pivots = rref(matrix)
    if not pivots:
        return BitMatrix.zeros(0, matrix.cols)
    return reduced.select_rows(range(len(pivots)))


def kernel_basis(matrix: BitMatrix) -> BitMatrix:
    """Basis of the left kernel {x : x·M = 0}, one row per basis vector."""
    shift = matrix.cols
    augmented = BitMatrix.from_rows(
        [v | (1 << (shift + i)) for i, v in enumerate(matrix.row_ints())], shift + matrix.rows
    )
    work = np.array(augmented.words, copy=True)
    r = len(_gauss_eliminate(work, shift))
    reduced = BitMatrix(augmented.rows, augmented.cols, _frozen(work))
    kernel = [v >> shift for v in reduced.row_ints()[r:]]
    if not kernel:
        return BitMatrix.zeros(0, matrix.rows)
    return BitMatrix.from_rows(kernel, matrix.rows)


def complete_to_basis(subspace: BitMatrix, ambient_dim: int) -> BitMatrix:
    """Unit vectors that extend independent ``subspace`` rows to a basis, lowest index first.

    Greedy lowest-index selection skips exactly the pivot columns of an echelon
    form computed from the last column backwards.
    """
    if subspace.cols != ambient_dim:
        raise ValueError("subspace vectors must have ambient_dim columns")
    if subspace.rows == 0:
        pivots: set[int] = set()
    else:
        flipped = BitMatrix.from_dense(subspace.to_dense()[:, ::-1])
        work = np.array(flipped.words, copy=True)
        found = _gauss_eliminate(work, ambient_dim)
        if len(found) < subspace.rows:
            raise DependentRowsError("subspace rows are linearly dependent")
        pivots = {ambient_dim - 1 - c for c in found}
    complement = [1 << j for j in range(ambient_dim) if j not in pivots]
    if not complement:
        return BitMatrix.zeros(0, ambient_dim)
    return BitMatrix.from_rows(complement, ambient_dim)


def inverse(matrix: BitMatrix) -> BitMatrix:
    n = matrix.rows
    if n != matrix.cols:
        raise ValueError("only square matrices are invertible")
    augmented = BitMatrix.from_rows([v | (1 << (n + i)) for i, v in enumerate(matrix.row_ints())], 2 * n)
    work = np.array(augmented.words, copy=True)
    pivots = _gauss_eliminate(work, n, reduce_above=True)
    if len(pivots) < n:
        raise SingularMatrixError(f"matrix has rank {len(pivots)} < {n}")
    reduced = BitMatrix(n, 2 * n, _frozen(work))
    return BitMatrix.from_rows([v >> n for v in reduced.row_ints()], n)


def matrix_power(matrix: BitMatrix, exponent: int) -> BitMatrix:
    if matrix.rows != matrix.cols:
        raise ValueError("power needs a square matrix")
    if exponent < 0:
        return matrix_power(inverse(matrix), -exponent)
    result = BitMatrix.identity(matrix.rows)
    base = matrix
    while exponent:
        if exponent & 1:
            result = result @ base
        exponent >>= 1
        if exponent:
            base = base @ base
    return result


# -- GF(2)[x] on integers ----------------------------------------------------------


def poly_mul(a: int, b: int) -> int:
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, modulus: int) -> int:
    dm = modulus.bit_length() - 1
    while a and a.bit_length() - 1 >= dm:
        a ^= modulus << (a.bit_length() - 1 - dm)
    return a


def poly_divmod(a: int, b: int) -> tuple[int, int]:
    if b == 0:
        raise ZeroDivisionError("polynomial division by zero")
    q = 0
    db = b.bit_length() - 1
    while a and a.bit_length() - 1 >= db:
        shift = a.bit_length() - 1 - db
        q ^= 1 << shift
        a ^= b << shift
    return q, a


def poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def poly_lcm(a: int, b: int) -> int:
    return poly_divmod(poly_mul(a, b), poly_gcd(a, b))[0]


def poly_powmod(base: int, exponent: int, modulus: int) -> int:
    result = 1
    base = poly_mod(base, modulus)
    while exponent:
        if exponent & 1:
            result = poly_mod(poly_mul(result, base), modulus)
        base = poly_mod(poly_mul(base, base), modulus)
        exponent >>= 1
    return poly_mod(result, modulus)


def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2."""
    degree = poly.bit_length() - 1
    if degree < 1:
        return False
    for divisor in range(2, 1 << (degree // 2 + 1)):
        if poly_mod(poly, divisor) == 0:
            return False
    return True


def factor_gf2(poly: int) -> list[tuple[int, int]]:
    """Irreducible factorisation of a GF(2) polynomial as (factor, multiplicity) pairs."""
    x = sympy.Symbol("x")
    coeffs = [(poly >> i) & 1 for i in range(poly.bit_length() - 1, -1, -1)]
    _, factors = sympy.Poly(coeffs, x, modulus=2).factor_list()
    out = []
    for f, mult in factors:
        value = 0
        for c in f.all_coeffs():
            value = (value << 1) | (int(c) % 2)
        out.append((value, int(mult)))
    return out


def poly_order(poly: int) -> int:
    """Multiplicative order of x modulo an irreducible ``poly`` other than x."""
    degree = poly.bit_length() - 1
    if poly == 0b10 or degree < 1:
        raise ValueError("x has no order modulo x")
    order = (1 << degree) - 1
    for p, k in sympy.factorint(order).items():
        for _ in range(k):
            if poly_powmod(0b10, order // p, poly) == 1:
                order //= p
            else:
                break
    return order


# -- matrix orders -------------------------------------------------------------------


def _local_minpoly(matrix: BitMatrix, start: int) -> int:
    basis: dict[int, tuple[int, int]] = {}
    vec = start
    k = 0
    while True:
        v, p = vec, 1 << k
        while v:
            top = v.bit_length() - 1
            if top not in basis:
                break
            bv, bp = basis[top]
            v ^= bv
            p ^= bp
        if v == 0:
            return p
        basis[v.bit_length() - 1] = (v, p)
        vec = matrix.apply(BitVector(matrix.cols, vec)).bits
        k += 1


def minimal_polynomial(matrix: BitMatrix) -> int:
    if matrix.rows != matrix.cols:
        raise ValueError("minimal polynomial needs a square matrix")
    mu = 1
    for i in range(matrix.cols):
        mu = poly_lcm(mu, _local_minpoly(matrix, 1 << i))
    return mu


def matrix_order(matrix: BitMatrix, cap: int | None = None) -> int | None:
    """Smallest t >= 1 with M^t = I, or None when t exceeds ``cap``.

    The order comes from the minimal polynomial: lcm of ord(f) over its
    irreducible factors f, times 2^ceil(log2 e) for the largest multiplicity e.
    It is then confirmed by repeated squaring against every maximal divisor.
    """
    if matrix.rows != matrix.cols:
        raise ValueError("order needs a square matrix")
    if rank(matrix) < matrix.rows:
        raise SingularMatrixError("singular matrix has no multiplicative order")
    mu = minimal_polynomial(matrix)
    order = 1
    top_multiplicity = 1
    for factor, mult in factor_gf2(mu):
        if factor != 0b11:
            order = lcm(order, poly_order(factor))
        top_multiplicity = max(top_multiplicity, mult)
    order <<= (top_multiplicity - 1).bit_length()
    logger.debug("minimal polynomial of degree %d gives order %d", mu.bit_length() - 1, order)
    if cap is not None and order > cap:
        return None
    if not matrix_power(matrix, order).is_identity():
        raise ArithmeticError("order check failed: M^t is not the identity")
    for p in sympy.factorint(order):
        if matrix_power(matrix, order // p).is_identity():
            raise ArithmeticError(f"order check failed: M^(t/{p}) is the identity")
    return order


@dataclass(frozen=True, eq=False)
class LinearMap:
    """A square GF(2) matrix acting on integer states through byte lookup tables."""

    matrix: BitMatrix
    _tables: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.matrix.rows != self.matrix.cols:
            raise ValueError("linear map must be square")
        columns = self.matrix.transpose().row_ints()
        tables = []
        for start in range(0, self.n, 8):
            cols = columns[start:start + 8]
            table = [0]
            for c in cols:
                table += [t ^ c for t in table]
            tables.append(tuple(table))
        object.__setattr__(self, "_tables", tuple(tables))

    @classmethod
    def from_function(cls, n: int, fn: Callable[[int], int]) -> "LinearMap":
        return cls(BitMatrix.from_rows([fn(1 << j) for j in range(n)], n).transpose())

    @classmethod
    def identity(cls, n: int) -> "LinearMap":
        return cls(BitMatrix.identity(n))

    @property
    def n(self) -> int:
        return self.matrix.rows

    def __call__(self, state: int) -> int:
        out = 0
        for i, table in enumerate(self._tables):
            out ^= table[(state >> (8 * i)) & 0xFF]
        return out

    def inverse(self) -> "LinearMap":
        return LinearMap(inverse(self.matrix))

    def power(self, exponent: int) -> "LinearMap":
        return LinearMap(matrix_power(self.matrix, exponent))


# -- GF(2^m) ----------------------------------------------------------------------------


def _raw_mulmod(a: int, b: int, poly: int) -> int:
    return poly_mod(poly_mul(a, b), poly)


@dataclass(frozen=True)
class FieldSpec:
    m: int
    poly: int
    primitive_elem: int = 0
    log_table: tuple[int, ...] = field(init=False, repr=False, compare=False)
    antilog_table: tuple[int, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not 1 <= self.m <= 16:
            raise ValueError("field degree m must lie in [1, 16]")
        if self.poly.bit_length() - 1 != self.m:
            raise ValueError(f"polynomial {self.poly:#x} does not have degree {self.m}")
        if not is_irreducible(self.poly):
            raise ReducibleModulusError(f"polynomial {self.poly:#x} is reducible")
        q = 1 << self.m
        group = q - 1
        primes = list(sympy.factorint(group)) if group > 1 else []

        def generates(g: int) -> bool:
            if not 0 < g < q:
                return False
            return all(poly_powmod(g, group // p, self.poly) != 1 for p in primes)

        g = self.primitive_elem
        if g == 0:
            g = next(c for c in range(1, q) if generates(c))
        elif not generates(g):
            raise ValueError(f"{g:#x} does not generate the multiplicative group")
        antilog = [0] * q
        log = [0] * q
        x = 1
        for i in range(group):
            antilog[i] = x
            log[x] = i
            x = _raw_mulmod(x, g, self.poly)
        antilog[group] = 1
        object.__setattr__(self, "primitive_elem", g)
        object.__setattr__(self, "log_table", tuple(log))
        object.__setattr__(self, "antilog_table", tuple(antilog))
        logger.debug("GF(2^%d) mod %#x with generator %#x", self.m, self.poly, g)

    @property
    def q(self) -> int:
        return 1 << self.m

    def _check(self, a: int) -> None:
        if not 0 <= a < self.q:
            raise ValueError(f"{a} is not an element of GF(2^{self.m})")

    def mul(self, a: int, b: int) -> int:
        self._check(a)
        self._check(b)
        if a == 0 or b == 0:
            return 0
        return self.antilog_table[(self.log_table[a] + self.log_table[b]) % (self.q - 1)]

    def pow(self, a: int, exponent: int) -> int:
        self._check(a)
        if exponent == 0:
            return 1
        if a == 0:
            if exponent < 0:
                raise ZeroDivisionError("0 has no inverse")
            return 0
        return self.antilog_table[(self.log_table[a] * exponent) % (self.q - 1)]

    def inv_patched(self, a: int) -> int:
        self._check(a)
        return 0 if a == 0 else self.pow(a, self.q - 2)

    def dlog(self, a: int) -> int:
        self._check(a)
        if a == 0:
            raise ValueError("discrete log of 0 is undefined")
        return self.log_table[a]

    def eval_poly(self, poly: int, x: int) -> int:
        acc = 0
        for i in range(poly.bit_length() - 1, -1, -1):
            acc = self.mul(acc, x) ^ ((poly >> i) & 1)
        return acc

    def roots(self, poly: int) -> list[int]:
        return [x for x in range(self.q) if self.eval_poly(poly, x) == 0]


def gf_mul(f: FieldSpec, a: int, b: int) -> int:
    return f.mul(a, b)


def gf_inv_patched(f: FieldSpec, a: int) -> int:
    return f.inv_patched(a)


def gf_pow(f: FieldSpec, a: int, exponent: int) -> int:
    return f.pow(a, exponent)


def gf_dlog(f: FieldSpec, a: int) -> int:
    return f.dlog(a)
