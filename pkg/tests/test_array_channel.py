import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beamsteer import ConfigurationError
from beamsteer.array_channel import (ArrayGeometry, LinkBudget, PathParams, assemble_channel,
                                     dbm_to_watts, free_space_path_loss, resolve_link_budget,
                                     sample_paths, steering_matrix, steering_vector)
from beamsteer.config import SystemConfig

UNIT = LinkBudget(tx_power=1.0, noise_power=1.0, path_loss=1.0, snr=1.0, beta=1.0)


def test_broadside_steering():
    v = steering_vector(ArrayGeometry(4), 0.0)
    np.testing.assert_allclose(v, 0.5 * np.ones((4, 1)))


def test_steering_half_pi():
    g = ArrayGeometry(2, 0.5)
    psi = g.psi(np.pi / 6)
    assert psi == pytest.approx(np.pi / 2)
    np.testing.assert_allclose(steering_vector(g, psi).ravel(), np.array([1, 1j]) / np.sqrt(2), atol=1e-15)


@given(n=st.integers(1, 256), psi=st.floats(-10, 10))
def test_steering_unit_norm_and_conjugate_symmetry(n, psi):
    g = ArrayGeometry(n)
    v = steering_vector(g, psi)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(steering_vector(g, -psi), v.conj(), atol=1e-15)


def test_geometry_rejects_bad_values():
    with pytest.raises(ConfigurationError):
        ArrayGeometry(0)
    with pytest.raises(ConfigurationError):
        ArrayGeometry(4, 0.0)


def test_sampling_is_seeded_and_bounded():
    a = sample_paths(3, [1 / 3] * 3, np.random.default_rng(42))
    b = sample_paths(3, [1 / 3] * 3, np.random.default_rng(42))
    for name in ("aod", "aoa", "gains"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert np.all(np.abs(a.aod) <= np.pi / 2) and np.all(np.abs(a.aoa) <= np.pi / 2)


def test_sampling_gain_power_law_of_large_numbers():
    rng = np.random.default_rng(7)
    n = 10 ** 6
    z = rng.standard_normal((2, n))
    # same construction as sample_paths, vectorized over draws
    g = np.sqrt((1 / 3) / 2) * (z[0] + 1j * z[1])
    assert abs(np.mean(np.abs(g) ** 2) - 1 / 3) <= 3 * (1 / 3) / 1e3
    # and through the public sampler on a smaller sample
    p = np.array([sample_paths(3, None, rng).gains[0] for _ in range(20000)])
    assert abs(np.mean(np.abs(p) ** 2) - 1 / 3) < 4 * (1 / 3) / math.sqrt(20000)


@pytest.mark.parametrize("l,var", [(0, []), (2, [1.0]), (2, [1.0, -1.0])])
def test_sampling_rejects_bad_config(l, var):
    with pytest.raises(ConfigurationError):
        sample_paths(l, var, np.random.default_rng(0))


def test_rank_one_broadside_channel():
    bs, ue = ArrayGeometry(8), ArrayGeometry(4)
    p = PathParams(1, np.zeros(1), np.zeros(1), np.ones(1, complex), np.ones(1))
    budget = LinkBudget(1.0, 1.0, path_loss=32.0, snr=1.0, beta=1.0)
    ch = assemble_channel(p, bs, ue, budget)
    np.testing.assert_allclose(ch.h, np.full((4, 8), 1 / math.sqrt(32)), atol=1e-15)


def test_sum_form_matches_product_form(rng):
    bs, ue = ArrayGeometry(4), ArrayGeometry(4)
    p = sample_paths(2, None, rng)
    ch = assemble_channel(p, bs, ue, UNIT)
    total = np.zeros((4, 4), complex)
    for l in range(2):
        a_ue = steering_vector(ue, ue.psi(p.aoa[l]))
        a_bs = steering_vector(bs, bs.psi(p.aod[l]))
        total += ch.scaled_gains[l] * a_ue @ a_bs.conj().T
    np.testing.assert_allclose(ch.h, total, atol=1e-12)
    assert np.allclose(ch.scaled_gains, 4 * p.gains)


def test_rank_and_linearity(rng, geoms):
    bs, ue = geoms
    p = sample_paths(3, None, rng)
    ch = assemble_channel(p, bs, ue, UNIT)
    s = np.linalg.svd(ch.h, compute_uv=False)
    assert np.all(s[3:] < 1e-10 * s[0])
    p2 = PathParams(3, p.aod, p.aoa, 2 * p.gains, p.path_variances)
    np.testing.assert_allclose(assemble_channel(p2, bs, ue, UNIT).h, 2 * ch.h, atol=1e-14)


def test_link_budget_identity_closure():
    cfg = SystemConfig(tx_power_dbm=30.0, distance_m=None, n_paths=1, n_bs=4, n_ue=4)
    b = resolve_link_budget(cfg, snr_db=0.0)
    assert b.tx_power == pytest.approx(1.0)
    assert b.path_loss == 1.0
    assert b.noise_power == pytest.approx(1.0)
    assert b.beta == pytest.approx(16.0)


def test_dbm_and_path_loss_constants():
    assert dbm_to_watts(27) == pytest.approx(0.5012, abs=1e-4)
    rho = free_space_path_loss(28e9, 50.0, 2.0)
    lam = 299_792_458.0 / 28e9
    assert lam == pytest.approx(0.01071, abs=1e-5)
    assert 10 * math.log10(rho) == pytest.approx(95.4, abs=0.05)


def test_link_budget_round_trip_noise_and_snr():
    cfg = SystemConfig()
    b1 = resolve_link_budget(cfg, snr_db=-10.0)
    b2 = resolve_link_budget(cfg, noise_power=b1.noise_power)
    assert b2.snr_db == pytest.approx(-10.0)
    assert b1.snr == pytest.approx(b1.tx_power * 1.0 / (b1.path_loss * b1.noise_power))


def test_link_budget_requires_exactly_one():
    cfg = SystemConfig()
    with pytest.raises(ConfigurationError):
        resolve_link_budget(cfg)
    with pytest.raises(ConfigurationError):
        resolve_link_budget(cfg, snr_db=0.0, noise_power=1.0)


@settings(max_examples=30)
@given(psis=st.lists(st.floats(-3, 3), min_size=1, max_size=5))
def test_steering_matrix_columns(psis):
    g = ArrayGeometry(16)
    m = steering_matrix(g, psis)
    for i, p in enumerate(psis):
        np.testing.assert_allclose(m[:, [i]], steering_vector(g, p))
