import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from beamsteer.array_channel import (ArrayGeometry, assemble_channel, resolve_link_budget,
                                     sample_paths)
from beamsteer.beamforming import (EffectiveChannel, analog_infinite, dirichlet_gain,
                                   effective_channel, svd_reference)
from beamsteer.config import SystemConfig
from beamsteer.rates import (condition_number, mc_estimate, rate_analog, rate_diag_approx,
                             rate_digital, sample_at, trial_rng)

from .conftest import random_complex


def eig_route_rate(eff, c):
    """Independent oracle: general (non-Hermitian) eigenvalues of W^-1 Hbar Hbar^H."""
    m = np.linalg.solve(eff.w_gram, eff.h_bar @ eff.h_bar.conj().T)
    lam = np.linalg.eigvals(m)
    return float(np.sum(np.log2(np.abs(1 + c * lam))))


def random_eff(rng, l):
    w = random_complex(rng, l, l + 3)
    w /= np.linalg.norm(w, axis=1, keepdims=True)
    h = random_complex(rng, l + 3, l + 5)
    f = random_complex(rng, l + 5, l)
    return effective_channel(w, h, f)


def test_rate_digital_examples():
    assert rate_digital([1, 1], 1.0) == pytest.approx(2.0)
    assert rate_digital([2, 1], 1.0) == pytest.approx(math.log2(5) + 1)
    assert rate_digital([2, 1], 1.0) == pytest.approx(3.3219, abs=5e-5)
    assert rate_digital([0, 0, 0], 5.0) == 0.0
    with pytest.raises(ValueError):
        rate_digital([-1.0], 1.0)


@pytest.mark.parametrize("l", [1, 2, 3, 4])
def test_rate_analog_identity(l):
    eff = EffectiveChannel(np.eye(l), np.eye(l))
    assert rate_analog(eff, 1.0) == pytest.approx(l)


def test_rate_analog_siso_reduction(rng):
    bs, ue = ArrayGeometry(64), ArrayGeometry(8)
    p = sample_paths(1, None, rng)
    cfg = SystemConfig(n_paths=1)
    b = resolve_link_budget(cfg, snr_db=-5.0)
    ch = assemble_channel(p, bs, ue, b)
    bf = analog_infinite(p, bs, ue)
    eff = effective_channel(bf.w_a, ch.h, bf.f_a)
    c = b.ps_over_sigma_n2
    expected = math.log2(1 + c * abs(ch.scaled_gains[0]) ** 2)
    assert rate_analog(eff, c) == pytest.approx(expected, rel=1e-10)


def test_rate_analog_against_eigen_oracle(rng):
    for _ in range(20):
        eff = random_eff(rng, 3)
        c = 10 ** rng.uniform(-2, 2)
        assert rate_analog(eff, c) == pytest.approx(eig_route_rate(eff, c), abs=1e-9)


def test_rate_analog_whitening_invariance(rng):
    eff = random_eff(rng, 3)
    q, _ = np.linalg.qr(random_complex(rng, 3, 3))
    rotated = EffectiveChannel(q @ eff.h_bar, q @ eff.w_gram @ q.conj().T)
    assert rate_analog(rotated, 2.5) == pytest.approx(rate_analog(eff, 2.5), abs=1e-9)


def test_rate_analog_singular_gram_is_pseudo_inverted():
    # two identical receive rows: the second stream carries no new information
    w = np.array([[1, 0], [1, 0]], dtype=complex)
    h = np.eye(2)
    eff = effective_channel(w, h, np.eye(2))
    assert np.isfinite(rate_analog(eff, 3.0))
    assert rate_analog(eff, 3.0) == pytest.approx(math.log2(1 + 3.0))


@settings(max_examples=30)
@given(seed=st.integers(0, 10_000), c1=st.floats(1e-3, 1e3), c2=st.floats(1e-3, 1e3))
def test_rates_monotone_in_snr(seed, c1, c2):
    rng = np.random.default_rng(seed)
    lo, hi = sorted((c1, c2))
    eff = random_eff(rng, 2)
    assert rate_analog(eff, lo) <= rate_analog(eff, hi) + 1e-12
    s = np.abs(rng.standard_normal(3))
    assert rate_digital(s, lo) <= rate_digital(s, hi)
    g = random_complex(rng, 3)
    assert rate_diag_approx(g, lo) <= rate_diag_approx(g, hi)


def test_rate_diag_examples():
    g = np.ones(3)
    assert rate_diag_approx(g, 1.0) == pytest.approx(3.0)
    assert rate_diag_approx(g, 1.0, deltas=(np.zeros(3), np.zeros(3))) == 0.0
    d = dirichlet_gain(8, np.pi / 16)
    x = 7.3
    got = rate_diag_approx([1.0], x, deltas=([d], [d]))
    assert got == pytest.approx(math.log2(1 + d ** 4 * x), rel=1e-14)


def test_condition_number_examples(rng):
    assert condition_number(np.eye(3)) == pytest.approx(1.0)
    assert condition_number(np.diag([10, 0.1])) == pytest.approx(100.0)
    m = random_complex(rng, 2, 2)
    s = svd_reference(m, 2).sigma_l
    assert condition_number(m) == pytest.approx(s[0] / s[-1], rel=1e-10)
    assert condition_number(np.diag([1.0, 0.0])) == math.inf
    with pytest.raises(ValueError):
        condition_number(np.zeros((2, 2)))


SMALL = SystemConfig(n_bs=16, n_ue=8, snr_grid_db=[-20.0, 0.0, 20.0], n_trials=50,
                     codebook_bs=32, codebook_ue=16, master_seed=3)


def test_single_trial_reduces_to_direct_sample():
    res = mc_estimate(SMALL, n_trials=1)
    bs, ue = ArrayGeometry(16), ArrayGeometry(8)
    p = sample_paths(3, None, trial_rng(3, 0))
    for r in res:
        b = resolve_link_budget(SMALL, snr_db=r.snr_db)
        ch = assemble_channel(p, bs, ue, b)
        bf = analog_infinite(p, bs, ue)
        eff = effective_channel(bf.w_a, ch.h, bf.f_a)
        c = b.ps_over_sigma_n2
        assert r.means["rate_analog_inf"] == pytest.approx(rate_analog(eff, c), rel=1e-12)
        assert r.means["rate_digital"] == pytest.approx(rate_digital(svd_reference(ch.h, 3).sigma_l, c), rel=1e-12)
        assert r.means["rate_diag"] == pytest.approx(rate_diag_approx(ch.scaled_gains, c), rel=1e-12)
        rs = sample_at(r, 0)
        assert rs.rate_analog == r.means["rate_analog_inf"]
        assert rs.cond_analog >= 1 and rs.cond_digital >= 1


def test_mc_is_deterministic_and_worker_independent():
    a = mc_estimate(SMALL)
    b = mc_estimate(SMALL)
    c = mc_estimate(SMALL, workers=3)
    for x, y, z in zip(a, b, c):
        assert x.means == y.means == z.means
        for k in x.samples:
            assert np.array_equal(x.samples[k], z.samples[k], equal_nan=True)


def test_trials_shared_across_snr_grids():
    a = mc_estimate(SMALL, snr_grid=[0.0])
    b = mc_estimate(SMALL, snr_grid=[-20.0, 0.0])
    assert np.array_equal(a[0].samples["rate_analog_fin"], b[1].samples["rate_analog_fin"])


def test_stderr_is_sample_std_over_root_n():
    r = mc_estimate(SMALL)[1]
    x = r.samples["rate_digital"]
    assert r.stderrs["rate_digital"] == pytest.approx(np.std(x, ddof=1) / math.sqrt(50))


def test_stderr_scaling_with_trials():
    cfg = SystemConfig(n_bs=8, n_ue=8, snr_grid_db=[0.0], codebook_bs=8, codebook_ue=8)
    s1 = mc_estimate(cfg, n_trials=1000, master_seed=11)[0].stderrs["rate_analog_fin"]
    s4 = mc_estimate(cfg, n_trials=4000, master_seed=12)[0].stderrs["rate_analog_fin"]
    assert s1 / s4 == pytest.approx(2.0, rel=0.2)


def test_rate_invariants_in_samples():
    r = mc_estimate(SMALL)
    for x in r:
        for k in ("rate_digital", "rate_analog_inf", "rate_diag", "rate_analog_fin"):
            assert np.all(x.samples[k] >= 0)
        assert np.all(x.samples["cond_analog"] >= 1) and np.all(x.samples["cond_digital"] >= 1)


def test_mean_ordering_inf_over_finite_and_digital_at_high_snr():
    cfg = SystemConfig(n_bs=64, n_ue=8, codebook_bs=128, codebook_ue=16,
                       snr_grid_db=[-30.0, 0.0, 20.0], n_trials=400)
    res = mc_estimate(cfg)
    for r in res:
        slack = 3 * r.stderrs["loss"]
        assert r.means["rate_analog_inf"] >= r.means["rate_analog_fin"] - slack
    hi = res[-1]
    se = math.hypot(hi.stderrs["rate_digital"], hi.stderrs["rate_analog_inf"])
    assert hi.means["rate_digital"] >= hi.means["rate_analog_inf"] - 3 * se


def test_low_snr_analog_excess_matches_beam_overlap_power():
    # at vanishing SNR, E[R_analog] / E[R_diag] -> 1 + (L-1) E|D_N(dpsi)|^2
    cfg = SystemConfig(n_bs=64, n_ue=8, snr_grid_db=[-60.0], n_trials=3000)
    r = mc_estimate(cfg)[0]
    ratio = r.means["rate_analog_inf"] / r.means["rate_diag"]
    rng = np.random.default_rng(99)
    a, b = rng.uniform(-np.pi / 2, np.pi / 2, (2, 10 ** 6))
    overlap = np.mean(dirichlet_gain(64, np.pi * (np.sin(a) - np.sin(b))) ** 2)
    assert ratio == pytest.approx(1 + 2 * overlap, abs=0.015)


def test_diag_overestimates_at_high_snr():
    cfg = SystemConfig(n_bs=64, n_ue=8, snr_grid_db=[10.0, 20.0], n_trials=300)
    for r in mc_estimate(cfg):
        assert r.means["rate_diag"] >= r.means["rate_analog_inf"] - 2 * r.stderrs["rate_analog_inf"]


def test_invalid_trials():
    with pytest.raises(ValueError):
        mc_estimate(SMALL, n_trials=0)
