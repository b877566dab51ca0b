"""Pruebas del reparto escalar y matricial de Asmuth-Bloom."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import config
from crt_core import (ScalarShare, all_subsets_hold, exact_dtype, homomorphic_add,
                      lift_array, lift_scalar, reconstruct_array, reconstruct_scalar,
                      share_array, share_scalar, subset_condition_holds,
                      validate_params)
from errors import (DuplicateModulus, InconsistentShares, InsufficientShares,
                    ModulusMismatch, NotPrime, PoolOutOfRange, PoolTooSmall,
                    RandomizerOutOfRange, ThresholdConditionViolated,
                    ValueOutOfRange)

U_DEFAULT = 21_819_787_184_543


# --------------------------------------------------------
# Parámetros
# --------------------------------------------------------
def test_default_params_validate(params):
    assert params.u == U_DEFAULT
    assert params.u > 16_121_332_245_451
    assert config.Q0 * 509 * 503 * 499 * 491 == 16_121_332_245_451
    assert params.r_bound == U_DEFAULT // (2 * 257)
    assert params.pool == config.PRIME_POOL
    assert params.residue_limit == 512


def test_every_seven_subset_of_default_pool_holds(params):
    subsets = list(itertools.combinations(params.pool, params.n))
    assert len(subsets) == 120
    assert all_subsets_hold(params)


def test_toy_pool_out_of_range_for_w3():
    with pytest.raises(PoolOutOfRange):
        validate_params(w=3, t=2, n=3, q0=7, pool=(11, 13, 17))


def test_toy_pool_with_valid_q0_still_rejects_17():
    with pytest.raises(PoolOutOfRange):
        validate_params(w=3, t=2, n=3, q0=11, pool=(13, 17, 19))


def test_q0_not_prime():
    with pytest.raises(NotPrime):
        validate_params(q0=256)


def test_pool_member_not_prime():
    with pytest.raises(NotPrime):
        validate_params(pool=config.PRIME_POOL[:-1] + (459,))


def test_pool_too_small():
    with pytest.raises(PoolTooSmall):
        validate_params(pool=config.PRIME_POOL[:6])


def test_duplicate_pool_prime():
    with pytest.raises(DuplicateModulus):
        validate_params(pool=config.PRIME_POOL + (457,))


def test_threshold_condition_fails():
    with pytest.raises(ThresholdConditionViolated):
        validate_params(t=2, n=3, pool=(263, 269, 509))


@pytest.mark.parametrize("t, n", [(1, 3), (5, 5), (6, 5)])
def test_threshold_shape_rejected(t, n):
    with pytest.raises(ThresholdConditionViolated):
        validate_params(t=t, n=n)


def test_pool_is_sorted():
    params = validate_params(pool=tuple(reversed(config.PRIME_POOL)))
    assert params.pool == config.PRIME_POOL


def test_subset_condition_helper():
    assert subset_condition_holds(config.PRIME_POOL[:7], 257, 5)
    assert not subset_condition_holds((263, 269, 509), 257, 2)


# --------------------------------------------------------
# Escalares
# --------------------------------------------------------
def test_share_scalar_toy_example(toy_params):
    shares = share_scalar(5, 1, [11, 13, 17], toy_params.q0, toy_params.r_bound)
    assert [s.residue for s in shares] == [1, 12, 12]
    assert [s.modulus for s in shares] == [11, 13, 17]


def test_share_scalar_zero(toy_params):
    shares = share_scalar(0, 0, [11, 13, 17], toy_params.q0, toy_params.r_bound)
    assert all(s.residue == 0 for s in shares)


def test_share_scalar_default_example(params):
    shares = share_scalar(100, 10, [457, 461], params.q0, params.r_bound)
    assert [s.residue for s in shares] == [385, 365]


@pytest.mark.parametrize("m, r, moduli, error", [
    (7, 0, [11, 13], ValueOutOfRange),
    (-1, 0, [11, 13], ValueOutOfRange),
    (1, 10, [11, 13], RandomizerOutOfRange),
    (1, 0, [11, 11], DuplicateModulus),
])
def test_share_scalar_errors(toy_params, m, r, moduli, error):
    with pytest.raises(error):
        share_scalar(m, r, moduli, toy_params.q0, toy_params.r_bound)


def test_scalar_share_range():
    with pytest.raises(ValueOutOfRange):
        ScalarShare(11, 11)


def test_reconstruct_toy_examples():
    assert reconstruct_scalar([ScalarShare(11, 1), ScalarShare(13, 12)], 7, 2) == 5
    assert reconstruct_scalar([ScalarShare(13, 12), ScalarShare(17, 12)], 7, 2) == 5
    assert lift_scalar([ScalarShare(11, 1), ScalarShare(13, 12)], 2) == 12


def test_reconstruct_refuses_below_threshold():
    with pytest.raises(InsufficientShares):
        reconstruct_scalar([ScalarShare(11, 1)], 7, 2)


def test_extra_share_is_checked():
    shares = [ScalarShare(11, 1), ScalarShare(13, 12), ScalarShare(17, 5)]
    with pytest.raises(InconsistentShares):
        reconstruct_scalar(shares, 7, 2)
    shares[2] = ScalarShare(17, 12)
    assert reconstruct_scalar(shares, 7, 2) == 5


def test_reconstruct_duplicate_moduli():
    with pytest.raises(DuplicateModulus):
        reconstruct_scalar([ScalarShare(11, 1), ScalarShare(11, 1)], 7, 2)


def test_toy_round_trip_exhaustive(toy_params):
    for m in range(toy_params.q0):
        for r in range(toy_params.r_bound):
            shares = share_scalar(m, r, [11, 13, 17], toy_params.q0, toy_params.r_bound)
            for subset in itertools.combinations(shares, 2):
                assert reconstruct_scalar(subset, toy_params.q0, 2) == m


def test_toy_oracle_agreement(rng):
    """Reconstrucción CRT frente a una tabla construida por búsqueda exhaustiva."""
    moduli = (11, 13, 17)
    pairs = list(itertools.permutations(moduli, 2))
    tables = {}
    for a, b in pairs:
        table = {}
        for g in range(a * b):
            table[(g % a, g % b)] = g
        tables[(a, b)] = table

    choices = rng.integers(0, len(pairs), size=100_000)
    values = rng.integers(0, 11 * 13, size=100_000)
    for choice, g in zip(choices, values):
        a, b = pairs[choice]
        g = int(g)
        shares = [ScalarShare(a, g % a), ScalarShare(b, g % b)]
        assert lift_scalar(shares, 2) == tables[(a, b)][(g % a, g % b)] == g


@settings(max_examples=200, deadline=None)
@given(m=st.integers(0, 256), r_frac=st.floats(0, 1, exclude_max=True),
       seed=st.integers(0, 2**32 - 1))
def test_default_round_trip_any_subset(params, m, r_frac, seed):
    r = min(int(r_frac * params.r_bound), params.r_bound - 1)
    picker = np.random.default_rng(seed)
    moduli = [int(q) for q in picker.choice(params.pool, size=params.n, replace=False)]
    shares = share_scalar(m, r, moduli, params.q0, params.r_bound)
    subset = [shares[i] for i in picker.choice(params.n, size=params.t, replace=False)]
    assert reconstruct_scalar(subset, params.q0, params.t) == m


# --------------------------------------------------------
# Homomorfismo
# --------------------------------------------------------
def test_homomorphic_add_examples():
    assert homomorphic_add(ScalarShare(11, 1), ScalarShare(11, 1)) == ScalarShare(11, 2)
    assert homomorphic_add(ScalarShare(13, 12), ScalarShare(13, 1)) == ScalarShare(13, 0)


def test_homomorphic_add_mismatch():
    with pytest.raises(ModulusMismatch):
        homomorphic_add(ScalarShare(11, 1), ScalarShare(13, 1))


def test_homomorphic_sum_reconstructs_sum(toy_params):
    a = share_scalar(5, 1, [11, 13], toy_params.q0, toy_params.r_bound)
    b = share_scalar(1, 0, [11, 13], toy_params.q0, toy_params.r_bound)
    summed = [homomorphic_add(x, y) for x, y in zip(a, b)]
    assert reconstruct_scalar(summed, toy_params.q0, 2) == 6


@settings(max_examples=200, deadline=None)
@given(m1=st.integers(0, 256), m2=st.integers(0, 256),
       r1=st.integers(0, 10**9), r2=st.integers(0, 10**9))
def test_additive_homomorphism_default(params, m1, m2, r1, r2):
    moduli = list(params.pool[:params.n])
    a = share_scalar(m1, r1, moduli, params.q0, params.r_bound)
    b = share_scalar(m2, r2, moduli, params.q0, params.r_bound)
    summed = [homomorphic_add(x, y) for x, y in zip(a, b)]
    assert reconstruct_scalar(summed[2:], params.q0, params.t) == (m1 + m2) % params.q0


# --------------------------------------------------------
# Matricial
# --------------------------------------------------------
def _moduli_stack(params, shape, rng):
    height, width = shape
    order = np.argsort(rng.random((height * width, len(params.pool))), axis=1)[:, :params.n]
    chosen = np.asarray(params.pool)[order]
    return np.moveaxis(chosen.reshape(height, width, params.n), -1, 0)


def test_array_round_trip_every_subset(params, rng):
    moduli = _moduli_stack(params, (6, 8), rng)
    values = rng.integers(0, params.q0, size=(6, 8))
    r = rng.integers(0, params.r_bound, size=(6, 8))
    residues = share_array(values, r, moduli, params.q0)
    assert residues.shape == (params.n, 6, 8)
    for subset in itertools.combinations(range(params.n), params.t):
        idx = list(subset)
        assert np.array_equal(
            reconstruct_array(residues[idx], moduli[idx], params.q0, params.t), values)


def test_lift_array_matches_scalar(params, rng):
    moduli = _moduli_stack(params, (3, 4), rng)
    values = rng.integers(0, params.q0, size=(3, 4))
    r = rng.integers(0, params.r_bound, size=(3, 4))
    residues = share_array(values, r, moduli, params.q0)
    g = lift_array(residues, moduli, params.t)
    for y in range(3):
        for x in range(4):
            shares = [ScalarShare(int(moduli[i, y, x]), int(residues[i, y, x]))
                      for i in range(params.n)]
            assert int(g[y, x]) == lift_scalar(shares, params.t) == values[y, x] + r[y, x] * 257


def test_lift_array_detects_tampering(params, rng):
    moduli = _moduli_stack(params, (2, 2), rng)
    residues = share_array(np.zeros((2, 2), dtype=np.int64),
                           np.full((2, 2), 1234), moduli, params.q0)
    residues[-1, 0, 0] = (residues[-1, 0, 0] + 1) % moduli[-1, 0, 0]
    with pytest.raises(InconsistentShares):
        lift_array(residues, moduli, params.t)


def test_lift_array_below_threshold(params, rng):
    moduli = _moduli_stack(params, (2, 2), rng)
    residues = share_array(np.zeros((2, 2), dtype=np.int64),
                           np.zeros((2, 2), dtype=np.int64), moduli, params.q0)
    with pytest.raises(InsufficientShares):
        lift_array(residues[:4], moduli[:4], params.t)


def test_lift_array_duplicate_layers(params, rng):
    moduli = _moduli_stack(params, (2, 2), rng)
    moduli[1] = moduli[0]
    residues = np.zeros_like(moduli)
    with pytest.raises(DuplicateModulus):
        lift_array(residues, moduli, params.t)


def test_exact_dtype_switches_to_object():
    assert exact_dtype(509, 5) is np.int64
    assert exact_dtype(65521, 5) is object
    assert math.prod([509] * 5) < 2**62
