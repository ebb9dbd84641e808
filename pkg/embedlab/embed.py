"""The embeddings ε (bricks to unit vectors) and α (ε along the orbit of M).

Coordinates of W are laid out segment by segment: segment h holds ε(M^h v),
and inside a segment block j (2^m bits) holds ε'(brick j). ε'(0) sets
coordinate 0, ε'(γ^i) sets coordinate i for 1 <= i <= 2^m - 2, and ε'(1)
sets the last coordinate 2^m - 1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Literal, Sequence

import numpy as np

from .algebra import (
    BitMatrix,
    BitVector,
    DependentRowsError,
    FieldSpec,
    LinearMap,
    complete_to_basis,
    inverse,
    kernel_basis,
    matrix_power,
    rank,
    row_basis,
    rref,
)
from .ciphers import PRIMITIVE_POLYS, aes_embedding_field, mixing_layer_matrix
from .schemas import CounterexampleReport
from .settings import EXHAUSTIVE_MAX_BITS

logger = logging.getLogger(__name__)

# spanning sets larger than this are kept as is instead of being reduced to a basis
BASIS_REDUCTION_MAX_COLS = 4096


class NotExtendibleError(ValueError):
    def __init__(self, message: str, witness: tuple[int, ...] = ()) -> None:
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True, eq=False)
class EmbeddingParams:
    field: FieldSpec
    b: int
    t: int = 1
    mixing: BitMatrix | None = None
    full_orbit: bool = True

    def __post_init__(self) -> None:
        if self.b < 1:
            raise ValueError("b must be positive")
        if self.t < 1:
            raise ValueError("t must be positive")
        if self.t > 1:
            if self.mixing is None:
                raise ValueError("orbit embedding (t > 1) needs a mixing matrix")
            if self.mixing.rows != self.r or self.mixing.cols != self.r:
                raise ValueError(f"mixing matrix must be {self.r}x{self.r}")
            if self.full_orbit and not matrix_power(self.mixing, self.t).is_identity():
                raise ValueError(f"M^{self.t} is not the identity")

    @property
    def m(self) -> int:
        return self.field.m

    @property
    def q(self) -> int:
        return self.field.q

    @property
    def r(self) -> int:
        return self.m * self.b

    @property
    def segment(self) -> int:
        return self.q * self.b

    @property
    def s(self) -> int:
        return self.q * self.b * self.t

    @cached_property
    def coords(self) -> tuple[int, ...]:
        log = self.field.log_table
        last = self.q - 1
        return (0,) + tuple(log[x] or last for x in range(1, self.q))

    @cached_property
    def elements(self) -> tuple[int, ...]:
        """Inverse of ``coords``: the field element encoded by each block coordinate."""
        out = [0] * self.q
        for x, c in enumerate(self.coords):
            out[c] = x
        return tuple(out)

    @cached_property
    def orbit(self) -> tuple[LinearMap, ...]:
        if self.t == 1:
            return ()
        return (LinearMap(self.mixing),)

    def orbit_states(self, v: int) -> list[int]:
        states = [v]
        for _ in range(self.t - 1):
            states.append(self.orbit[0](states[-1]))
        return states


def aes_params(t: int = 1, representation: str = "isomorphic") -> EmbeddingParams:
    f = aes_embedding_field(representation)
    return EmbeddingParams(f, 16, t, mixing_layer_matrix("AES") if t > 1 else None)


def present_params(t: int = 1) -> EmbeddingParams:
    return EmbeddingParams(FieldSpec(4, PRIMITIVE_POLYS[4]), 16, t, mixing_layer_matrix("pLayer") if t > 1 else None)


def serpent_params() -> EmbeddingParams:
    return EmbeddingParams(FieldSpec(4, PRIMITIVE_POLYS[4]), 32)


# -- ε and α -------------------------------------------------------------------------


def _state_int(params: EmbeddingParams, v: BitVector | int) -> int:
    if isinstance(v, BitVector):
        if v.length != params.r:
            raise ValueError(f"state must have {params.r} bits, got {v.length}")
        return v.bits
    if not 0 <= v < 1 << params.r:
        raise ValueError(f"state must have {params.r} bits")
    return v


def eps_prime(params: EmbeddingParams, x: int) -> BitVector:
    if not 0 <= x < params.q:
        raise ValueError(f"{x} is not an element of GF(2^{params.m})")
    return BitVector(params.q, 1 << params.coords[x])


def eps_bits(params: EmbeddingParams, v: int) -> int:
    m, q, coords = params.m, params.q, params.coords
    mask = q - 1
    out = 0
    for j in range(params.b):
        out |= 1 << (q * j + coords[(v >> (m * j)) & mask])
    return out


def alpha_bits(params: EmbeddingParams, v: int) -> int:
    seg = params.segment
    out = 0
    for h, state in enumerate(params.orbit_states(v)):
        out |= eps_bits(params, state) << (h * seg)
    return out


def eps(params: EmbeddingParams, v: BitVector | int) -> BitVector:
    return BitVector(params.segment, eps_bits(params, _state_int(params, v)))


def alpha(params: EmbeddingParams, v: BitVector | int) -> BitVector:
    return BitVector(params.s, alpha_bits(params, _state_int(params, v)))


def decode(params: EmbeddingParams, w: BitVector | int) -> int:
    """State v with α(v) = w; raises ValueError for non-admissible w."""
    bits = w.bits if isinstance(w, BitVector) else w
    q, m = params.q, params.m
    mask = (1 << q) - 1
    v = 0
    for j in range(params.b):
        block = (bits >> (q * j)) & mask
        if block.bit_count() != 1:
            raise ValueError(f"block {j} has weight {block.bit_count()}, not an image of ε")
        v |= params.elements[block.bit_length() - 1] << (m * j)
    if alpha_bits(params, v) != bits:
        raise ValueError("vector is not an image of α")
    return v


def is_admissible(params: EmbeddingParams, w: BitVector | int) -> bool:
    try:
        decode(params, w)
    except ValueError:
        return False
    return True


def segment_rotate(params: EmbeddingParams, w: int, steps: int = 1) -> int:
    """Rotate the t segments of ``w`` so that segment h + steps lands on h."""
    seg, t = params.segment, params.t
    steps %= t
    if not steps:
        return w
    full = (1 << params.s) - 1
    shift = steps * seg
    return ((w >> shift) | (w << (params.s - shift))) & full


def build_H(params: EmbeddingParams, plaintexts: Sequence[BitVector | int]) -> BitMatrix:
    if not plaintexts:
        raise ValueError("need at least one plaintext")
    return BitMatrix.from_rows([eps_bits(params, _state_int(params, p)) for p in plaintexts], params.segment)


def build_D(params: EmbeddingParams, plaintexts: Sequence[BitVector | int]) -> BitMatrix:
    if not plaintexts:
        raise ValueError("need at least one plaintext")
    return BitMatrix.from_rows([alpha_bits(params, _state_int(params, p)) for p in plaintexts], params.s)


def random_states(params: EmbeddingParams, count: int, rng: np.random.Generator) -> list[int]:
    nbytes = (params.r + 7) // 8
    mask = (1 << params.r) - 1
    return [int.from_bytes(rng.bytes(nbytes), "little") & mask for _ in range(count)]


def single_brick_states(params: EmbeddingParams) -> list[int]:
    """The zero state followed by every nonzero value in each brick, bricks in order."""
    states = [0]
    for j in range(params.b):
        for c in range(1, params.q):
            states.append(params.elements[c] << (params.m * j))
    return states


# -- admissible spaces -------------------------------------------------------------------


def dim_formula(params: EmbeddingParams) -> int:
    return params.segment - (params.b - 1)


def dim_orbit_bound(params: EmbeddingParams) -> int:
    return dim_formula(params) * params.t


def dim_orbit_formula(params: EmbeddingParams) -> int:
    b, t = params.b, params.t
    return params.s - (b * t - 1) - params.r * (t - 1)


@dataclass(frozen=True, eq=False)
class AdmissibleSpace:
    params: EmbeddingParams
    basis: BitMatrix
    dim: int
    lower_bound: int
    upper_bound: int
    states: tuple[int, ...] = ()
    independent: bool = True
    exact: bool = True


def is_brick_linear(matrix: BitMatrix, field_spec: FieldSpec, b: int) -> bool:
    """True when every m×m block of ``matrix`` commutes with multiplication by the generator."""
    m = field_spec.m
    if matrix.rows != m * b or matrix.cols != m * b:
        raise ValueError("matrix size must be m*b")
    lm = LinearMap(matrix)
    g = field_spec.primitive_elem
    mask = (1 << m) - 1
    for i in range(b):
        for k in range(m):
            x = 1 << k
            image = lm(x << (m * i))
            scaled = lm(field_spec.mul(g, x) << (m * i))
            for j in range(b):
                if field_spec.mul(g, (image >> (m * j)) & mask) != (scaled >> (m * j)) & mask:
                    return False
    return True


def dual_relations(params: EmbeddingParams) -> BitMatrix:
    """Vectors orthogonal to every α(v).

    Rows are the bt - 1 all-ones pairs over consecutive blocks, then for each
    segment pair (h, h+1), target brick j and bit k the relation equating bit k
    of brick j of M·(M^h v) with the same bit read from segment h + 1. The
    second family needs M to be F_2-linear only.
    """
    q, m, b, t = params.q, params.m, params.b, params.t
    seg = params.segment
    ones = (1 << q) - 1
    rows = [(ones << (q * p)) | (ones << (q * (p + 1))) for p in range(b * t - 1)]
    if t > 1:
        lm = LinearMap(params.mixing)
        coords = params.coords
        bit_masks = [sum(1 << coords[x] for x in range(q) if (x >> k) & 1) for k in range(m)]
        # masks[i][j][k]: coordinates x of block i whose image under M has bit k set in brick j
        masks = [[[0] * m for _ in range(b)] for _ in range(b)]
        for i in range(b):
            for x in range(1, q):
                image = lm(x << (m * i))
                for j in range(b):
                    brick = (image >> (m * j)) & (q - 1)
                    for k in range(m):
                        if (brick >> k) & 1:
                            masks[i][j][k] |= 1 << coords[x]
        for h in range(t - 1):
            for j in range(b):
                for k in range(m):
                    vec = bit_masks[k] << ((h + 1) * seg + q * j)
                    for i in range(b):
                        vec |= masks[i][j][k] << (h * seg + q * i)
                    rows.append(vec)
    relations = BitMatrix.from_rows(rows, params.s)
    found = rank(relations)
    if found < relations.rows:
        raise DependentRowsError(f"relations have rank {found} < {relations.rows}")
    return relations


@lru_cache(maxsize=16)
def admissible_dim(params: EmbeddingParams, seed: int = 0, max_batches: int = 8) -> AdmissibleSpace:
    """Dimension of T = <Im α> with a spanning basis.

    For t = 1 this ranks the explicit basis {ε(0)} ∪ {single-brick images}.
    For t > 1 images of single-brick states and then of Philox-random states
    are ranked until the ceiling s - #dual relations is reached.
    """
    lower = dim_formula(params)
    if params.t == 1:
        states = single_brick_states(params)
        basis = BitMatrix.from_rows([eps_bits(params, v) for v in states], params.segment)
        z = rank(basis)
        if z != lower:
            raise ArithmeticError(f"explicit basis has rank {z}, expected {lower}")
        logger.info("admissible dimension %d for m=%d b=%d", z, params.m, params.b)
        return AdmissibleSpace(params, basis, z, lower, lower, tuple(states))

    upper = dim_orbit_bound(params)
    try:
        ceiling = params.s - dual_relations(params).rows
    except DependentRowsError:
        logger.warning("dual relations are dependent, falling back to the product bound")
        ceiling = upper
    rng = np.random.Generator(np.random.Philox(key=seed))
    states = single_brick_states(params)
    if len(states) < ceiling + 64:
        states += random_states(params, ceiling + 64 - len(states), rng)
    rows = [alpha_bits(params, v) for v in states]
    spanning = BitMatrix.from_rows(rows, params.s)
    z = rank(spanning)
    batch = 64
    for _ in range(max_batches):
        if z >= ceiling:
            break
        logger.debug("rank %d below ceiling %d after %d rows", z, ceiling, len(rows))
        extra = random_states(params, batch, rng)
        states += extra
        rows += [alpha_bits(params, v) for v in extra]
        batch *= 2
        spanning = BitMatrix.from_rows(rows, params.s)
        z = rank(spanning)
    exact = z == ceiling
    if not exact:
        logger.warning("rank %d did not reach ceiling %d; reporting a lower bound", z, ceiling)
    if not lower <= z <= upper:
        raise ArithmeticError(f"dimension {z} outside [{lower}, {upper}]")
    independent = params.s <= BASIS_REDUCTION_MAX_COLS
    basis = row_basis(spanning) if independent else spanning
    logger.info("admissible dimension %d for m=%d b=%d t=%d", z, params.m, params.b, params.t)
    return AdmissibleSpace(
        params, basis, z, lower, upper, tuple(states), independent=independent, exact=exact
    )


def annihilator(params: EmbeddingParams) -> BitMatrix:
    """Rows spanning the orthogonal space of T."""
    relations = dual_relations(params)
    if params.t == 1:
        return relations
    space = admissible_dim(params)
    if space.exact and space.dim + relations.rows == params.s:
        return relations
    return kernel_basis(space.basis.transpose())


# -- permutations of V and their lifts ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StructuredMap:
    """A permutation of V whose lift to W is a coordinate permutation.

    kinds: "affine" v -> a·v + d, "parallel" per-brick tables (ε only),
    "bricks" moves brick j to ``destination[j]`` (ε only), "mixing" v -> M v.
    """

    params: EmbeddingParams
    kind: Literal["affine", "parallel", "bricks", "mixing"]
    scale: int = 1
    shift: int = 0
    tables: tuple[tuple[int, ...], ...] = ()
    destination: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        p = self.params
        if self.kind == "affine":
            if not 0 < self.scale < p.q:
                raise ValueError("scale must be a nonzero field element")
            if not 0 <= self.shift < 1 << p.r:
                raise ValueError("shift must be a state")
            if self.scale != 1 and p.t > 1 and not is_brick_linear(p.mixing, p.field, p.b):
                raise ValueError("scalar multiplication lifts under α only for brick-linear M")
        elif self.kind == "parallel":
            if p.t != 1:
                raise ValueError("arbitrary parallel maps lift under ε only")
            if len(self.tables) != p.b or any(sorted(tb) != list(range(p.q)) for tb in self.tables):
                raise ValueError("need b permutation tables on the field")
        elif self.kind == "bricks":
            if p.t != 1:
                raise ValueError("brick permutations lift under ε only")
            if sorted(self.destination) != list(range(p.b)):
                raise ValueError("destination must permute the bricks")
        elif self.kind == "mixing":
            if p.t == 1 or not p.full_orbit:
                raise ValueError("the mixing layer lifts only under the full orbit embedding")
        else:
            raise ValueError(f"unknown structured map kind {self.kind!r}")

    @classmethod
    def translation(cls, params: EmbeddingParams, d: int) -> "StructuredMap":
        return cls(params, "affine", 1, d)

    @classmethod
    def affine(cls, params: EmbeddingParams, a: int, c: Sequence[int] | int) -> "StructuredMap":
        if isinstance(c, int):
            c = [c] * params.b
        shift = sum(cj << (params.m * j) for j, cj in enumerate(c))
        return cls(params, "affine", a, shift)

    @classmethod
    def parallel(cls, params: EmbeddingParams, tables: Sequence[Sequence[int]]) -> "StructuredMap":
        return cls(params, "parallel", tables=tuple(tuple(tb) for tb in tables))

    @classmethod
    def brick_permutation(cls, params: EmbeddingParams, destination: Sequence[int]) -> "StructuredMap":
        return cls(params, "bricks", destination=tuple(destination))

    @classmethod
    def from_gather(cls, params: EmbeddingParams, source: Sequence[int]) -> "StructuredMap":
        """Brick permutation given as out[i] = in[source[i]] (the ShiftRows convention)."""
        destination = [0] * len(source)
        for i, src in enumerate(source):
            destination[src] = i
        return cls.brick_permutation(params, destination)

    @classmethod
    def mixing_layer(cls, params: EmbeddingParams) -> "StructuredMap":
        return cls(params, "mixing")

    def _bricks(self, v: int) -> list[int]:
        m, mask = self.params.m, self.params.q - 1
        return [(v >> (m * j)) & mask for j in range(self.params.b)]

    def __call__(self, v: int) -> int:
        p = self.params
        m = p.m
        if self.kind == "affine":
            bricks = self._bricks(v)
            return sum(p.field.mul(self.scale, x) << (m * j) for j, x in enumerate(bricks)) ^ self.shift
        if self.kind == "parallel":
            return sum(self.tables[j][x] << (m * j) for j, x in enumerate(self._bricks(v)))
        if self.kind == "bricks":
            return sum(x << (m * self.destination[j]) for j, x in enumerate(self._bricks(v)))
        return p.orbit[0](v)

    def coordinate_map(self) -> tuple[int, ...]:
        """Destination of every coordinate of W under the lift."""
        p = self.params
        q, seg, coords, elements = p.q, p.segment, p.coords, p.elements
        dest = list(range(p.s))
        if self.kind == "mixing":
            return tuple((i - seg) % p.s for i in range(p.s))
        if self.kind == "bricks":
            for j in range(p.b):
                for c in range(q):
                    dest[q * j + c] = q * self.destination[j] + c
            return tuple(dest)
        if self.kind == "parallel":
            for j in range(p.b):
                table = self.tables[j]
                for c in range(q):
                    dest[q * j + c] = q * j + coords[table[elements[c]]]
            return tuple(dest)
        shifts = p.orbit_states(self.shift)
        mask = q - 1
        for h, d in enumerate(shifts):
            for j in range(p.b):
                dj = (d >> (p.m * j)) & mask
                base = h * seg + q * j
                for c in range(q):
                    dest[base + c] = base + coords[p.field.mul(self.scale, elements[c]) ^ dj]
        return tuple(dest)


Permutation = Callable[[int], int] | StructuredMap


def _permute_coordinates(bits: int, destination: Sequence[int]) -> int:
    out = 0
    while bits:
        low = bits & -bits
        out |= 1 << destination[low.bit_length() - 1]
        bits ^= low
    return out


@dataclass(frozen=True, eq=False)
class LinearExtension:
    """A_σ: given densely, or as a coordinate permutation on T plus the identity on <B>."""

    params: EmbeddingParams
    complement: tuple[int, ...]
    dense: BitMatrix | None = None
    destination: tuple[int, ...] | None = None
    projection: BitMatrix | None = field(default=None, repr=False)

    def apply(self, w: BitVector) -> BitVector:
        if w.length != self.params.s:
            raise ValueError(f"vector must have {self.params.s} bits")
        if self.dense is not None:
            return self.dense.apply(w)
        coeffs = self.projection.apply(w).bits if self.complement else 0
        part = 0
        for k, coord in enumerate(self.complement):
            if (coeffs >> k) & 1:
                part |= 1 << coord
        bits = _permute_coordinates(w.bits, self.destination)
        return BitVector(w.length, bits ^ part ^ _permute_coordinates(part, self.destination))

    @cached_property
    def matrix(self) -> BitMatrix:
        if self.dense is not None:
            return self.dense
        s = self.params.s
        per_coord = self.projection.transpose().row_ints() if self.complement else [0] * s
        columns = []
        for j in range(s):
            part = 0
            coeffs = per_coord[j]
            for k, coord in enumerate(self.complement):
                if (coeffs >> k) & 1:
                    part |= 1 << coord
            columns.append((1 << self.destination[j]) ^ part ^ _permute_coordinates(part, self.destination))
        return BitMatrix.from_rows(columns, s).transpose()


def _all_states(params: EmbeddingParams) -> range:
    if params.r > EXHAUSTIVE_MAX_BITS:
        raise ValueError(f"exhaustive mode needs m*b <= {EXHAUSTIVE_MAX_BITS}, got {params.r}")
    return range(1 << params.r)


def _image_matrices(sigma: Callable[[int], int], params: EmbeddingParams) -> tuple[list[int], list[int]]:
    states = _all_states(params)
    return [alpha_bits(params, v) for v in states], [alpha_bits(params, sigma(v)) for v in states]


def is_linearly_extendible(sigma: Permutation, params: EmbeddingParams) -> bool:
    if isinstance(sigma, StructuredMap):
        return True
    p_rows, q_rows = _image_matrices(sigma, params)
    p_matrix = BitMatrix.from_rows(p_rows, params.s)
    q_matrix = BitMatrix.from_rows(q_rows, params.s)
    return rank(p_matrix) == rank(q_matrix) == rank(p_matrix.hstack(q_matrix))


def _find_witness(p_rows: list[int], q_rows: list[int], s: int) -> tuple[int, ...]:
    for left, right in ((p_rows, q_rows), (q_rows, p_rows)):
        kernel = kernel_basis(BitMatrix.from_rows(left, s))
        image = BitMatrix.from_rows(right, s)
        candidates = sorted(kernel.row_ints(), key=lambda x: (x.bit_count(), x))
        for x in candidates:
            if image.left_apply(BitVector(len(right), x)).bits:
                return tuple(BitVector(len(right), x).positions())
    return ()


def _structured_extension(sigma: StructuredMap) -> LinearExtension:
    params = sigma.params
    relations = annihilator(params)
    destination = sigma.coordinate_map()
    if relations.rows == 0:
        return LinearExtension(params, (), destination=destination)
    _, pivots = rref(relations)
    k_matrix = BitMatrix.from_dense(relations.to_dense()[:, pivots])
    projection = inverse(k_matrix) @ relations
    return LinearExtension(params, tuple(pivots), destination=destination, projection=projection)


def _exhaustive_extension(sigma: Callable[[int], int], params: EmbeddingParams) -> LinearExtension:
    s = params.s
    p_rows, q_rows = _image_matrices(sigma, params)
    if not is_linearly_extendible(sigma, params):
        witness = _find_witness(p_rows, q_rows, s)
        raise NotExtendibleError(f"relation among states {witness} is not preserved", witness)
    reduced: dict[int, int] = {}
    chosen: list[int] = []
    for idx, row in enumerate(p_rows):
        v = row
        while v and v.bit_length() - 1 in reduced:
            v ^= reduced[v.bit_length() - 1]
        if v:
            reduced[v.bit_length() - 1] = v
            chosen.append(idx)
    t_basis = BitMatrix.from_rows([p_rows[i] for i in chosen], s)
    comp = complete_to_basis(t_basis, s)
    comp_rows = comp.row_ints()
    full = BitMatrix.from_rows(t_basis.row_ints() + comp_rows, s)
    images = BitMatrix.from_rows([q_rows[i] for i in chosen] + comp_rows, s)
    dense = (inverse(full) @ images).transpose()
    complement = tuple(v.bit_length() - 1 for v in comp_rows)
    return LinearExtension(params, complement, dense=dense)


def linear_extension(sigma: Permutation, params: EmbeddingParams | None = None) -> LinearExtension:
    """A_σ with α(σ(v)) = A_σ·α(v), identity on the lowest-index complement of T."""
    if isinstance(sigma, StructuredMap):
        if params is not None and params is not sigma.params:
            raise ValueError("structured map was built for different parameters")
        return _structured_extension(sigma)
    if params is None:
        raise ValueError("exhaustive mode needs params")
    return _exhaustive_extension(sigma, params)


# -- extension panels ------------------------------------------------------------------------


@dataclass
class ExtensionPanelReport:
    maps: list[str]
    states: int
    mismatches: list[str] = field(default_factory=list)
    singular: list[str] = field(default_factory=list)
    pairs: list[tuple[str, str]] = field(default_factory=list)
    homomorphism_failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not (self.mismatches or self.singular or self.homomorphism_failures)


def extension_panel(params: EmbeddingParams, count: int, rng: np.random.Generator) -> list[tuple[str, StructuredMap]]:
    """The mixing layer (for full orbits) followed by random translations and affine maps."""
    panel: list[tuple[str, StructuredMap]] = []
    if params.t > 1 and params.full_orbit:
        panel.append(("M", StructuredMap.mixing_layer(params)))
    scalable = params.t == 1 or is_brick_linear(params.mixing, params.field, params.b)
    while len(panel) < count:
        shift = int(rng.integers(0, 1 << params.r))
        if len(panel) % 2 or not scalable:
            panel.append((f"translation({shift:#x})", StructuredMap.translation(params, shift)))
        else:
            scale = int(rng.integers(1, params.q))
            panel.append((f"affine({scale}, {shift:#x})", StructuredMap(params, "affine", scale, shift)))
    return panel


def check_extension_panel(
    params: EmbeddingParams, count: int = 50, pairs: int = 20, seed: int = 0
) -> ExtensionPanelReport:
    """Lift every panel map, check it on all states, then check A_στ = A_σ·A_τ on random pairs.

    Products are compared between exhaustive lifts, which share one complement of T.
    """
    rng = np.random.Generator(np.random.Philox(key=seed))
    panel = extension_panel(params, count, rng)
    states = _all_states(params)
    report = ExtensionPanelReport(maps=[name for name, _ in panel], states=len(states))
    for name, sigma in panel:
        ext = linear_extension(sigma)
        if any(ext.apply(alpha(params, v)) != alpha(params, sigma(v)) for v in states):
            report.mismatches.append(name)
        if rank(ext.matrix) != params.s:
            report.singular.append(name)

    lifts: dict[int, BitMatrix] = {}

    def lift(index: int) -> BitMatrix:
        if index not in lifts:
            lifts[index] = _exhaustive_extension(panel[index][1], params).matrix
        return lifts[index]

    for _ in range(pairs):
        i, j = (int(x) for x in rng.choice(len(panel), size=2, replace=False))
        outer, inner = panel[i][1], panel[j][1]
        composed = _exhaustive_extension(lambda v: outer(inner(v)), params).matrix
        names = (panel[i][0], panel[j][0])
        report.pairs.append(names)
        if composed != lift(i) @ lift(j):
            report.homomorphism_failures.append(names)
    logger.info(
        "extension panel: %d maps, %d pairs, %d mismatches, %d singular, %d product failures",
        len(panel), pairs, len(report.mismatches), len(report.singular), len(report.homomorphism_failures),
    )
    return report


# -- counterexamples -------------------------------------------------------------------------


def _counterexample(
    params: EmbeddingParams,
    layer_name: str,
    layer: LinearMap,
    zeta: int,
    blocks: Sequence[int],
) -> CounterexampleReport:
    m = params.m
    w1 = (zeta << 0) | (zeta << m)
    w2 = (zeta << 0) | (zeta << (2 * m))
    w3 = zeta << (2 * m)
    w4 = zeta << m
    lifted = [eps_bits(params, v) for v in (w1, w2, w3, w4)]
    consistent = lifted[0] ^ lifted[1] ^ lifted[2] == lifted[3]
    outputs = [layer(v) for v in (w1, w2, w3, w4)]
    images = [eps_bits(params, y) for y in outputs]
    mask = params.q - 1
    values = [[(y >> (m * j)) & mask for j in blocks] for y in outputs]
    exponents = [[None if x == 0 else params.field.dlog(x) for x in row] for row in values]
    total = images[0] ^ images[1] ^ images[2]
    block_mask = (1 << params.q) - 1
    weights = [((total >> (params.q * j)) & block_mask).bit_count() for j in range(params.b)]
    offending = next((j for j, wt in enumerate(weights) if wt != 1), None)
    report = CounterexampleReport(
        layer=layer_name,
        blocks=list(blocks),
        inputs_consistent=consistent,
        image_values=values,
        image_exponents=exponents,
        sum_block_weights=weights,
        offending_block=offending,
        offending_weight=0 if offending is None else weights[offending],
        linear=total == images[3],
    )
    logger.info("%s counterexample: offending block %s of weight %d", layer_name, offending, report.offending_weight)
    return report


def verify_mc_counterexample(representation: str = "isomorphic") -> CounterexampleReport:
    """MixColumns images of (γ,γ,0,…), (γ,0,γ,…), (0,0,γ,…), (0,γ,0,…) under ε."""
    params = aes_params(1, representation)
    layer = LinearMap(mixing_layer_matrix("MC"))
    return _counterexample(params, "MixColumns", layer, params.field.primitive_elem, [0, 1, 2, 3])


def verify_player_counterexample(zeta: int = 0xF) -> CounterexampleReport:
    params = present_params(1)
    layer = LinearMap(mixing_layer_matrix("pLayer"))
    return _counterexample(params, "pLayer", layer, zeta, [0, 4, 8, 12])


def parity_relation_holds(params: EmbeddingParams, values: Iterable[int]) -> bool:
    """Σ ε'(x) = 0 over the multiset ``values``."""
    acc = 0
    for x in values:
        acc ^= 1 << params.coords[x]
    return acc == 0
