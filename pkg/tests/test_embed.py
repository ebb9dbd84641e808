import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from embedlab.algebra import BitVector, LinearMap, rank
from embedlab.ciphers import SHIFT_ROWS, mixing_layer_matrix, reduced_cipher, shiftrows
from embedlab.embed import (
    EmbeddingParams,
    NotExtendibleError,
    StructuredMap,
    admissible_dim,
    aes_params,
    alpha,
    alpha_bits,
    annihilator,
    build_D,
    build_H,
    check_extension_panel,
    decode,
    dim_formula,
    dim_orbit_formula,
    dual_relations,
    eps,
    eps_bits,
    eps_prime,
    is_admissible,
    is_linearly_extendible,
    linear_extension,
    parity_relation_holds,
    present_params,
    random_states,
    segment_rotate,
    serpent_params,
    single_brick_states,
    verify_mc_counterexample,
    verify_player_counterexample,
)
from embedlab.executor import embedding_for
from embedlab.schemas import CipherName, EmbeddingKind

# ---------------------------------------------------------------------
# ε and α


def test_eps_prime_layout(tiny_params):
    # GF(4) with generator 2: 0 -> coordinate 0, γ -> 1, γ^2 = 3 -> 2, 1 -> last
    assert [eps_prime(tiny_params, x).positions() for x in range(4)] == [[0], [3], [1], [2]]
    assert tiny_params.elements == (0, 2, 3, 1)


def test_eps_places_each_brick_in_its_block(tiny_params):
    # brick 0 = 1 (coordinate 3), brick 1 = 2 (coordinate 1 of block 1)
    v = 0b10_01
    assert eps(tiny_params, v).positions() == [3, 5]
    assert eps(tiny_params, BitVector(4, v)) == eps(tiny_params, v)


def test_eps_rejects_wrong_width(tiny_params):
    with pytest.raises(ValueError):
        eps(tiny_params, BitVector(5, 0))
    with pytest.raises(ValueError):
        eps(tiny_params, 1 << 4)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 0xFFFF))
def test_decode_inverts_alpha(v):
    reduced = reduced_cipher(4, 4, 1)
    params = EmbeddingParams(reduced.field, 4)
    w = alpha(params, v)
    assert w.weight == params.b
    assert decode(params, w) == v


def test_non_images_are_not_admissible(tiny_params):
    assert not is_admissible(tiny_params, 0)
    assert not is_admissible(tiny_params, eps_bits(tiny_params, 0) ^ eps_bits(tiny_params, 5))
    assert is_admissible(tiny_params, eps_bits(tiny_params, 5))


def test_alpha_concatenates_the_orbit():
    params = present_params(3)
    v = 0x0123456789ABCDEF
    layer = LinearMap(mixing_layer_matrix("pLayer"))
    seg = params.segment
    bits = alpha_bits(params, v)
    assert bits & ((1 << seg) - 1) == eps_bits(params, v)
    assert (bits >> seg) & ((1 << seg) - 1) == eps_bits(params, layer(v))
    assert bits >> (2 * seg) == eps_bits(params, layer(layer(v)))


def test_segment_rotation_follows_the_mixing_layer():
    params = present_params(3)
    v = 0xFEDCBA9876543210
    layer = LinearMap(mixing_layer_matrix("pLayer"))
    assert segment_rotate(params, alpha_bits(params, v)) == alpha_bits(params, layer(v))


def test_orbit_params_need_identity_power():
    with pytest.raises(ValueError):
        EmbeddingParams(present_params(1).field, 16, 2, mixing_layer_matrix("pLayer"))
    with pytest.raises(ValueError):
        EmbeddingParams(present_params(1).field, 16, 3)


def test_build_matrices(tiny_params):
    h = build_H(tiny_params, [0, 5, 15])
    assert (h.rows, h.cols) == (3, 8)
    assert h.row_ints()[1] == eps_bits(tiny_params, 5)
    d = build_D(present_params(3), [0, 1])
    assert (d.rows, d.cols) == (2, 768)
    with pytest.raises(ValueError):
        build_H(tiny_params, [])


def test_random_states_are_seeded(tiny_params):
    first = random_states(tiny_params, 10, np.random.Generator(np.random.Philox(key=3)))
    again = random_states(tiny_params, 10, np.random.Generator(np.random.Philox(key=3)))
    assert first == again
    assert all(0 <= v < 16 for v in first)


# ---------------------------------------------------------------------
# Admissible dimensions


def test_single_brick_states(tiny_params):
    states = single_brick_states(tiny_params)
    assert len(states) == 1 + 2 * 3
    assert states[0] == 0


@pytest.mark.parametrize(
    "params, expected",
    [
        (present_params(1), 241),
        (serpent_params(), 481),
    ],
    ids=["present-eps", "serpent-eps"],
)
def test_eps_dimensions(params, expected):
    assert dim_formula(params) == expected
    space = admissible_dim(params)
    assert space.dim == expected
    assert space.exact


def test_tiny_dimension(tiny_params):
    assert admissible_dim(tiny_params).dim == 7


def test_present_alpha_dimension():
    params = present_params(3)
    assert dim_orbit_formula(params) == 593
    space = admissible_dim(params)
    assert space.dim == 593
    assert space.lower_bound == 241 <= space.dim <= space.upper_bound == 723


def test_aes_alpha_formula():
    assert dim_orbit_formula(aes_params(8)) == 31745


@pytest.mark.slow
def test_aes_eps_dimension():
    assert admissible_dim(aes_params(1)).dim == 4081


@pytest.mark.slow
def test_aes_alpha_dimension():
    assert admissible_dim(aes_params(8)).dim == 31745


def test_dual_relations_annihilate_images():
    params = present_params(3)
    relations = dual_relations(params)
    assert relations.rows == params.s - 593
    rng = np.random.Generator(np.random.Philox(key=11))
    for v in random_states(params, 20, rng):
        w = BitVector(params.s, alpha_bits(params, v))
        assert relations.apply(w).bits == 0


def test_annihilator_of_eps(tiny_params):
    rows = annihilator(tiny_params)
    assert rows.rows == 1
    assert rank(rows) == 1


# ---------------------------------------------------------------------
# Linear extensions


def test_translation_lifts(tiny_params):
    sigma = StructuredMap.translation(tiny_params, 0b0110)
    ext = linear_extension(sigma)
    for v in range(16):
        assert ext.apply(eps(tiny_params, v)) == eps(tiny_params, sigma(v))


def test_affine_lift_matches_dense_matrix(gf16):
    params = EmbeddingParams(gf16, 3)
    sigma = StructuredMap.affine(params, 7, [1, 0, 9])
    ext = linear_extension(sigma)
    dense = ext.matrix
    for v in (0, 1, 0x123, 0xFFF, 0xA5C):
        assert dense.apply(eps(params, v)) == eps(params, sigma(v))


def test_brick_permutation_and_parallel_lift(gf4):
    params = EmbeddingParams(gf4, 3)
    moves = StructuredMap.brick_permutation(params, [2, 0, 1])
    tables = StructuredMap.parallel(params, [[1, 0, 3, 2], [0, 2, 3, 1], [3, 2, 1, 0]])
    for sigma in (moves, tables):
        ext = linear_extension(sigma)
        for v in range(64):
            assert ext.apply(eps(params, v)) == eps(params, sigma(v))


def test_mixing_layer_lifts_to_segment_rotation():
    params = present_params(3)
    sigma = StructuredMap.mixing_layer(params)
    ext = linear_extension(sigma)
    for v in (0, 0xDEADBEEF, 0x0123456789ABCDEF):
        assert ext.apply(alpha(params, v)) == alpha(params, sigma(v))


def test_structured_kinds_are_validated(tiny_params):
    with pytest.raises(ValueError):
        StructuredMap.mixing_layer(tiny_params)
    with pytest.raises(ValueError):
        StructuredMap.brick_permutation(tiny_params, [0, 0])
    with pytest.raises(ValueError):
        StructuredMap.parallel(present_params(3), [list(range(16))] * 16)


def test_exhaustive_lift_of_parallel_callable(tiny_params):
    inv = tiny_params.field.inv_patched

    def sigma(v: int) -> int:
        return inv(v & 3) | (inv(v >> 2) << 2)

    assert is_linearly_extendible(sigma, tiny_params)
    ext = linear_extension(sigma, tiny_params)
    for v in range(16):
        assert ext.apply(eps(tiny_params, v)) == eps(tiny_params, sigma(v))


def test_brick_mixing_is_not_extendible(tiny_params):
    # brick 0 absorbs brick 1; the relation ε(0,0)+ε(0,2)+ε(1,0)+ε(1,2) = 0 is lost
    def sigma(v: int) -> int:
        return v ^ (v >> 2)

    assert not is_linearly_extendible(sigma, tiny_params)
    with pytest.raises(NotExtendibleError) as info:
        linear_extension(sigma, tiny_params)
    assert info.value.witness


def test_exhaustive_needs_params(tiny_params):
    with pytest.raises(ValueError):
        linear_extension(lambda v: v)


def test_extension_panel_lifts_and_composes():
    _, params = embedding_for(CipherName.REDUCED, EmbeddingKind.ALPHA, 2, 2)
    assert params.t == 2
    report = check_extension_panel(params, count=50, pairs=20, seed=3)
    assert len(report.maps) == 50
    assert report.maps[0] == "M"
    assert report.states == 16
    assert len(report.pairs) == 20
    assert report.passed


def test_shiftrows_lifts_under_eps():
    params = aes_params(1)
    sigma = StructuredMap.from_gather(params, SHIFT_ROWS)
    ext = linear_extension(sigma)
    rng = np.random.Generator(np.random.Philox(key=11))
    for v in random_states(params, 20, rng):
        expected = int.from_bytes(bytes(shiftrows(list(v.to_bytes(16, "little")))), "little")
        assert sigma(v) == expected
        assert ext.apply(eps(params, v)) == eps(params, expected)


# ---------------------------------------------------------------------
# Counterexamples


def test_mixcolumns_counterexample():
    report = verify_mc_counterexample()
    assert report.inputs_consistent
    exponents = sorted({e for row in report.image_exponents for e in row if e is not None})
    assert exponents == [1, 3, 51]
    assert report.offending_weight == 3
    assert not report.linear


def test_player_counterexample():
    report = verify_player_counterexample()
    assert report.inputs_consistent
    assert (report.offending_block, report.offending_weight) == (0, 3)
    assert not report.linear


def test_parity_relation(tiny_params):
    assert parity_relation_holds(tiny_params, [1, 2, 1, 2])
    assert not parity_relation_holds(tiny_params, [1, 2, 3])
