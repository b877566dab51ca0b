"""Pruebas del reparto de imágenes y de HDE-ED."""

import itertools
import logging

import numpy as np
import pytest

import config
from crt_core import lift_array
from demo_images import DemoImageGenerator
from errors import (DimensionMismatch, InconsistentShares, InsufficientShares, LabeledKey,
                    MixedRoles, OddWidth, PayloadTooLarge, RoleMismatch, SideInfoMismatch)
from keying import (PublicRandomness, SisKeyMatrix, gen_permutation,
                    gen_public_randomness, gen_sis_keys)
from sharing_pipeline import (PreprocessedImage, ShareRole, hde_embed,
                              hde_extract_restore, preprocess_image,
                              reconstruct_image, share_image)


def _deal(img, params, seed=0, h_fid=config.H_FID):
    height, width = img.shape
    pre, side = preprocess_image(img, h_fid, seed)
    keys = gen_sis_keys(params, height, width, seed)
    randomness = gen_public_randomness(params, height, width, seed)
    return pre, side, keys, randomness, share_image(pre, keys, randomness, params)


def _fixed_keys(params, shape):
    """Claves con el primo i-ésimo del conjunto en todas las posiciones (desplazado por columna)."""
    height, width = shape
    keys = []
    for i in range(params.n):
        primes = np.empty(shape, dtype=np.int64)
        for x in range(width):
            primes[:, x] = params.pool[(i + x) % len(params.pool)]
        keys.append(SisKeyMatrix(i + 1, primes))
    return keys


# --------------------------------------------------------
# Preprocesado
# --------------------------------------------------------
def test_preprocess_small_example():
    img = np.array([[206, 201], [9, 9]], dtype=np.uint8)
    pre, side = preprocess_image(img, 10, scramble_seed=3)
    forward = gen_permutation(3, 2).forward
    expected = {0: [5, 203], 1: [0, 9]}
    for k in range(2):
        assert pre.values[k].tolist() == expected[forward[k]]
        assert side.m_ava[k].tolist() == [1, 0]
    assert side.available_count == 2
    assert side.payload_length == 0


def test_preprocess_extreme_pairs_stay_raw():
    img = np.array([[255, 0], [0, 255]], dtype=np.uint8)
    pre, side = preprocess_image(img, config.H_FID_INFINITE, scramble_seed=8)
    forward = gen_permutation(8, 2).forward
    assert not side.m_ava.any()
    for k in range(2):
        assert pre.values[k].tolist() == img[forward[k]].tolist()


def test_preprocess_constant_image_full_capacity():
    img = np.full((64, 64), 128, dtype=np.uint8)
    _, side = preprocess_image(img, config.H_FID, scramble_seed=1)
    assert side.available_count == 64 * 64 // 2


def test_preprocess_marks_at_most_one_per_pair(natural_image):
    pre, side = preprocess_image(natural_image, config.H_FID, 5)
    assert not np.any(side.m_ava[:, 0::2] & side.m_ava[:, 1::2])
    assert pre.values.max() < 257


def test_preprocess_odd_width():
    with pytest.raises(OddWidth):
        preprocess_image(np.zeros((2, 3), dtype=np.uint8), 10, 0)


# --------------------------------------------------------
# Reparto y reconstrucción
# --------------------------------------------------------
def test_share_image_example(params):
    pre = PreprocessedImage(values=np.array([[5, 0]]))
    keys = _fixed_keys(params, (1, 2))
    randomness = PublicRandomness(r=np.array([[10, 0]]))
    shares = share_image(pre, keys, randomness, params)
    assert keys[0].primes[0, 0] == 457
    assert shares[0].residues[0, 0] == 290
    assert all(s.residues[0, 1] == 0 for s in shares)
    assert all(s.role == ShareRole.PLAIN for s in shares)


def test_share_image_rejects_labeled_key(params, natural_image):
    pre, _ = preprocess_image(natural_image, 10, 0)
    keys = gen_sis_keys(params, 64, 64, 0)
    keys[2].primes[0, 0] -= 1
    with pytest.raises(LabeledKey):
        share_image(pre, keys, gen_public_randomness(params, 64, 64, 0), params)


def test_share_image_dimension_mismatch(params, natural_image):
    pre, _ = preprocess_image(natural_image, 10, 0)
    keys = gen_sis_keys(params, 32, 64, 0)
    with pytest.raises(DimensionMismatch):
        share_image(pre, keys, gen_public_randomness(params, 64, 64, 0), params)


def test_every_subset_reconstructs_original(params, natural_image):
    _, side, keys, _, shares = _deal(natural_image, params, seed=4)
    for subset in itertools.combinations(shares, params.t):
        assert np.array_equal(reconstruct_image(subset, keys, params, side), natural_image)


def test_reconstruct_below_threshold(params, natural_image):
    _, side, keys, _, shares = _deal(natural_image, params)
    with pytest.raises(InsufficientShares):
        reconstruct_image(shares[:params.t - 1], keys, params, side)


def test_repeated_share_counts_once(params, natural_image):
    _, side, keys, _, shares = _deal(natural_image, params)
    with pytest.raises(InsufficientShares):
        reconstruct_image([shares[0]] * params.t, keys, params, side)
    with pytest.raises(InsufficientShares):
        reconstruct_image(shares[:params.t - 1] * 2, keys, params, side)


def test_repeated_share_is_dropped(params, natural_image):
    _, side, keys, _, shares = _deal(natural_image, params)
    subset = [shares[0], shares[0]] + shares[1:params.t]
    assert np.array_equal(reconstruct_image(subset, keys, params, side), natural_image)


def test_conflicting_copies_of_a_share(params, natural_image):
    _, side, keys, _, shares = _deal(natural_image, params)
    forged = shares[0].copy()
    forged.residues[0, 0] = (forged.residues[0, 0] + 1) % keys[0].primes[0, 0]
    with pytest.raises(InconsistentShares):
        reconstruct_image([shares[0], forged] + shares[1:params.t], keys, params, side)


def test_hde_embed_counts_distinct_holders(params, natural_image):
    _, side, keys, _, shares = _deal(natural_image, params)
    with pytest.raises(InsufficientShares):
        hde_embed([shares[1]] * params.n, keys, side, [1, 0], params)


def test_reconstruct_mixed_roles(params, natural_image):
    _, side, keys, _, shares = _deal(natural_image, params)
    marked, side2 = hde_embed(shares, keys, side, [], params)
    with pytest.raises(MixedRoles):
        reconstruct_image(shares[:3] + marked[3:5], keys, params, side2)


def test_reconstruct_refuses_deis_shares(params, natural_image):
    _, side, keys, _, shares = _deal(natural_image, params)
    for share in shares:
        share.role = ShareRole.DEIS_MARKED
    with pytest.raises(RoleMismatch):
        reconstruct_image(shares, keys, params, side)


def test_reconstruct_side_info_shape(params, natural_image):
    _, _, keys, _, shares = _deal(natural_image, params)
    _, other_side = preprocess_image(natural_image[:32], 10, 0)
    with pytest.raises(SideInfoMismatch):
        reconstruct_image(shares, keys, params, other_side)


# --------------------------------------------------------
# HDE-ED
# --------------------------------------------------------
def _single_pair_setup(params):
    img = np.array([[206, 201]], dtype=np.uint8)
    pre, side = preprocess_image(img, 10, 0)
    keys = _fixed_keys(params, (1, 2))
    shares = share_image(pre, keys, PublicRandomness(r=np.array([[10, 3]])), params)
    return img, keys, side, shares


@pytest.mark.parametrize("bit, expected", [(1, 124), (0, 123)])
def test_hde_embed_residue_example(params, bit, expected):
    _, keys, side, shares = _single_pair_setup(params)
    assert shares[0].residues[0, 0] == 290
    marked, new_side = hde_embed(shares, keys, side, [bit], params)
    assert marked[0].residues[0, 0] == expected
    assert new_side.payload_length == 1
    assert all(m.role == ShareRole.HDE_MARKED for m in marked)


def test_hde_marked_pair_chain(params):
    img, keys, side, shares = _single_pair_setup(params)
    marked, new_side = hde_embed(shares, keys, side, [1], params)
    marked_img = reconstruct_image(marked, keys, params, new_side)
    assert marked_img.tolist() == [[209, 198]]
    bits, restored = hde_extract_restore(marked_img, new_side)
    assert bits.tolist() == [1]
    assert np.array_equal(restored, img)


def test_hde_embed_zero_payload(params, natural_image):
    _, side, keys, _, shares = _deal(natural_image, params)
    marked, new_side = hde_embed(shares, keys, side, [], params)
    assert all(np.array_equal(a.residues, b.residues) for a, b in zip(shares, marked))
    assert new_side.payload_length == 0
    bits, restored = hde_extract_restore(natural_image, new_side)
    assert bits.size == 0
    assert np.array_equal(restored, natural_image)


def test_hde_embed_locality(params, natural_image, rng):
    _, side, keys, _, shares = _deal(natural_image, params, seed=6)
    payload = rng.integers(0, 2, size=side.available_count // 2)
    marked, _ = hde_embed(shares, keys, side, payload, params)

    moduli = np.stack([k.primes for k in keys])
    before = lift_array(np.stack([s.residues for s in shares]), moduli, params.t)
    after = lift_array(np.stack([s.residues for s in marked]), moduli, params.t)

    consumed = np.zeros(side.available_count, dtype=bool)
    consumed[:payload.size] = True
    covered = np.zeros(side.available_pairs.shape, dtype=bool)
    covered[side.available_pairs] = consumed
    bits = np.zeros(covered.shape, dtype=np.int64)
    bits[covered] = payload

    expected_left = np.where(covered, 2 * before[:, 0::2] + bits, before[:, 0::2])
    assert np.array_equal(after[:, 0::2], expected_left)
    assert np.array_equal(after[:, 1::2], before[:, 1::2])


def test_hde_embed_payload_too_large(params, natural_image):
    _, side, keys, _, shares = _deal(natural_image, params)
    with pytest.raises(PayloadTooLarge):
        hde_embed(shares, keys, side, np.zeros(side.available_count + 1), params)


def test_hde_embed_requires_plain_shares(params, natural_image):
    _, side, keys, _, shares = _deal(natural_image, params)
    marked, side2 = hde_embed(shares, keys, side, [], params)
    with pytest.raises(RoleMismatch):
        hde_embed(marked, keys, side2, [], params)


@pytest.mark.parametrize("kind", ["natural", "random", "constant"])
def test_full_cycle_at_max_capacity(params, kind, rng):
    img = DemoImageGenerator(64, 64, seed=3).generate(kind)
    _, side, keys, _, shares = _deal(img, params, seed=10)
    payload = rng.integers(0, 2, size=side.available_count).astype(np.uint8)
    marked, side = hde_embed(shares, keys, side, payload, params)

    images = [reconstruct_image(subset, keys, params, side)
              for subset in itertools.combinations(marked, params.t)]
    assert all(np.array_equal(images[0], other) for other in images[1:])

    bits, restored = hde_extract_restore(images[0], side)
    assert np.array_equal(bits, payload)
    assert np.array_equal(restored, img)


def test_marked_pixels_stay_close(params, natural_image, rng):
    _, side, keys, _, shares = _deal(natural_image, params, seed=2)
    payload = rng.integers(0, 2, size=side.available_count)
    marked, side = hde_embed(shares, keys, side, payload, params)
    marked_img = reconstruct_image(marked, keys, params, side)
    diff = np.abs(marked_img.astype(int) - natural_image.astype(int))
    assert diff.max() <= config.H_FID + 1


def test_overflow_pairs_are_demoted_losslessly(params, natural_image, rng, caplog):
    """Con R fuera de rango en las filas pares, esos pares se degradan sin pérdidas."""
    height, width = natural_image.shape
    pre, side = preprocess_image(natural_image, config.H_FID, 12)
    keys = gen_sis_keys(params, height, width, 12)
    r = gen_public_randomness(params, height, width, 12).r

    limit = np.prod(np.sort(np.stack([k.primes for k in keys]), axis=0)[:params.t], axis=0)
    overflow = (limit - 300) // params.q0
    r[0::2] = overflow[0::2]
    shares = share_image(pre, keys, PublicRandomness(r=r), params)

    fits = side.available_pairs.copy()
    fits[0::2] = False
    payload = rng.integers(0, 2, size=int(fits.sum())).astype(np.uint8)

    with caplog.at_level(logging.WARNING, logger="Reparto"):
        marked, new_side = hde_embed(shares, keys, side, payload, params)
    assert "degradados" in caplog.text
    assert new_side.available_count < side.available_count
    assert np.array_equal(new_side.available_pairs & fits, fits)

    marked_img = reconstruct_image(marked[2:], keys, params, new_side)
    bits, restored = hde_extract_restore(marked_img, new_side)
    assert np.array_equal(bits, payload)
    assert np.array_equal(restored, natural_image)


def test_extract_rejects_wrong_shape(params, natural_image):
    _, side = preprocess_image(natural_image, 10, 0)
    with pytest.raises(SideInfoMismatch):
        hde_extract_restore(natural_image[:, :32], side)
