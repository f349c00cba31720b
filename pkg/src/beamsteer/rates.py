"""Achievable rates, condition numbers and the seeded Monte Carlo driver.

Per-trial randomness comes only from ``(master_seed, trial_index)`` through
``numpy.random.SeedSequence`` spawn keys feeding a PCG64 generator, so the
same trial produces the same channel regardless of which worker runs it or
which SNR grid is requested. Every SNR point therefore sees the same set of
channel draws (common random numbers).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import NumericError
from .array_channel import ArrayGeometry, assemble_channel, resolve_link_budget, sample_paths
from .beamforming import (EffectiveChannel, analog_finite, analog_infinite, build_codebook,
                          dirichlet_gain, effective_channel, svd_reference)

LOG2E = 1.0 / math.log(2.0)

METRICS = (
    "rate_digital", "rate_analog_inf", "rate_diag",
    "rate_analog_fin", "rate_diag_fin", "loss",
    "cond_analog", "cond_analog_whitened", "cond_digital", "flagged", "collision",
)


@dataclass(frozen=True)
class RateSample:
    rate_digital: float
    rate_analog: float
    rate_diag: float
    cond_analog: float
    cond_digital: float


@dataclass
class MonteCarloResult:
    snr_db: float
    n_trials: int
    master_seed: int
    means: Dict[str, float] = field(default_factory=dict)
    stderrs: Dict[str, float] = field(default_factory=dict)
    samples: Dict[str, np.ndarray] = field(default_factory=dict)

    def mean(self, metric: str) -> float:
        return self.means[metric]

    def stderr(self, metric: str) -> float:
        return self.stderrs[metric]


def rate_digital(sigma_l, ps_over_sigma_n2: float) -> float:
    """sum_l log2(1 + c * sigma_l^2) for the SVD-precoded channel."""
    s = np.asarray(sigma_l, dtype=float)
    if np.any(s < 0) or ps_over_sigma_n2 < 0:
        raise ValueError("singular values and SNR ratio must be nonnegative")
    return float(np.sum(np.log1p(ps_over_sigma_n2 * s ** 2)) * LOG2E)


def whitened_spectrum(eff: EffectiveChannel, rcond: float = 1e-10):
    """Eigenvalues of ``T h_bar h_bar^H T^H`` where ``T T^H`` inverts ``w_gram``.

    ``T`` is built from the eigenvectors of ``w_gram`` whose eigenvalues
    exceed ``rcond`` times the largest, so a rank-deficient gram (codebook
    collisions) is pseudo-inverted on its row space. Returns the
    nonnegative eigenvalues and whether the pseudo-inverse was needed.
    """
    mu, q = np.linalg.eigh(eff.w_gram)
    keep = mu > rcond * max(mu[-1], 0.0)
    flagged = not bool(np.all(keep))
    t = (q[:, keep] / np.sqrt(mu[keep])).conj().T
    g = t @ eff.h_bar
    m = g @ g.conj().T
    lam = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return np.clip(lam, 0.0, None), flagged


def rate_from_spectrum(lam, ps_over_sigma_n2) -> np.ndarray:
    """log2 det(I + c M) from the eigenvalues of Hermitian ``M``, vectorized over ``c``."""
    c = np.atleast_1d(np.asarray(ps_over_sigma_n2, dtype=float))
    return np.sum(np.log1p(c[:, None] * np.asarray(lam)[None, :]), axis=1) * LOG2E


def rate_analog(eff: EffectiveChannel, ps_over_sigma_n2: float) -> float:
    """log2 det(I + c w_gram^-1 h_bar h_bar^H), noise whitened after combining."""
    lam, _ = whitened_spectrum(eff)
    r = float(rate_from_spectrum(lam, ps_over_sigma_n2)[0])
    if not math.isfinite(r):
        raise NumericError("non-finite analog rate", h_bar=eff.h_bar, w_gram=eff.w_gram)
    return r


def rate_diag_approx(gains_tilde, ps_over_sigma_n2: float, deltas=None) -> float:
    """sum_l log2(1 + c |D_bs,l|^2 |D_ue,l|^2 |g~_l|^2), D factors default to 1."""
    p = np.abs(np.asarray(gains_tilde)) ** 2
    if deltas is not None:
        d_bs, d_ue = (np.abs(np.asarray(d)) for d in deltas)
        p = p * d_bs ** 2 * d_ue ** 2
    return float(np.sum(np.log1p(ps_over_sigma_n2 * p)) * LOG2E)


def condition_number(m) -> float:
    """sigma_max / sigma_min, +inf when sigma_min is numerically zero."""
    m = np.asarray(m)
    s = np.linalg.svd(m, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        raise ValueError("condition number of an all-zero matrix is undefined")
    if s[-1] <= s[0] * np.finfo(float).eps * max(m.shape):
        return math.inf
    return float(s[0] / s[-1])


def _whitened_cond(eff: EffectiveChannel) -> float:
    """cond of the noise-whitened Gram ``T h_bar h_bar^H T^H``."""
    mu, q = np.linalg.eigh(eff.w_gram)
    if mu[0] <= 1e-10 * mu[-1]:
        return math.inf
    g = (q / np.sqrt(mu)).conj().T @ eff.h_bar
    return condition_number(g @ g.conj().T)


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=(trial_index,))))


def _codebook(size, d_over_lambda):
    if size is None or size == "infinite":
        return None
    return build_codebook(int(size), d_over_lambda)


def _trial_block(scenario, snr_grid, master_seed: int, indices: Sequence[int]) -> Dict[str, np.ndarray]:
    bs = ArrayGeometry(scenario.n_bs, scenario.d_over_lambda)
    ue = ArrayGeometry(scenario.n_ue, scenario.d_over_lambda)
    cb_bs = _codebook(scenario.codebook_bs, scenario.d_over_lambda)
    cb_ue = _codebook(scenario.codebook_ue, scenario.d_over_lambda)
    budgets = [resolve_link_budget(scenario, snr_db=x) for x in snr_grid]
    c = np.array([b.ps_over_sigma_n2 for b in budgets])
    l = scenario.n_paths

    out = {k: np.empty((len(indices), len(snr_grid))) for k in METRICS}
    for row, t in enumerate(indices):
        rng = trial_rng(master_seed, t)
        paths = sample_paths(l, scenario.path_variances, rng)
        ch = assemble_channel(paths, bs, ue, budgets[0])

        ref = svd_reference(ch.h, l)
        out["rate_digital"][row] = np.sum(np.log1p(c[:, None] * ref.sigma_l[None, :] ** 2), axis=1) * LOG2E
        s = ref.sigma_l
        out["cond_digital"][row] = (s[0] / s[-1]) ** 2 if s[-1] > s[0] * 1e-15 else math.inf

        inf_bf = analog_infinite(paths, bs, ue)
        eff = effective_channel(inf_bf.w_a, ch.h, inf_bf.f_a)
        lam, flag_inf = whitened_spectrum(eff)
        out["rate_analog_inf"][row] = rate_from_spectrum(lam, c)
        out["cond_analog"][row] = condition_number(eff.h_bar @ eff.h_bar.conj().T)
        out["cond_analog_whitened"][row] = _whitened_cond(eff)
        g2 = np.abs(ch.scaled_gains) ** 2
        out["rate_diag"][row] = np.sum(np.log1p(c[:, None] * g2[None, :]), axis=1) * LOG2E

        if cb_bs is None and cb_ue is None:
            out["rate_analog_fin"][row] = out["rate_analog_inf"][row]
            out["rate_diag_fin"][row] = out["rate_diag"][row]
            flag_fin, coll = False, False
        else:
            fin_bf = analog_finite(paths, bs, ue, cb_bs, cb_ue)
            eff_f = effective_channel(fin_bf.w_a, ch.h, fin_bf.f_a)
            lam_f, flag_fin = whitened_spectrum(eff_f)
            out["rate_analog_fin"][row] = rate_from_spectrum(lam_f, c)
            p = g2 * dirichlet_gain(bs.n_elements, fin_bf.psi_err_bs) ** 2 \
                * dirichlet_gain(ue.n_elements, fin_bf.psi_err_ue) ** 2
            out["rate_diag_fin"][row] = np.sum(np.log1p(c[:, None] * p[None, :]), axis=1) * LOG2E
            coll = fin_bf.collision
        out["loss"][row] = out["rate_analog_inf"][row] - out["rate_analog_fin"][row]
        out["flagged"][row] = float(flag_inf or flag_fin)
        out["collision"][row] = float(coll)

        bad = [k for k in ("rate_digital", "rate_analog_inf", "rate_analog_fin")
               if not np.all(np.isfinite(out[k][row]))]
        if bad:
            raise NumericError(f"non-finite {bad[0]} in trial {t}", trial_index=t, master_seed=master_seed,
                               paths=paths)
    return out


def _chunks(n: int, parts: int) -> List[range]:
    parts = max(1, min(parts, n))
    bounds = np.linspace(0, n, parts + 1).astype(int)
    return [range(bounds[i], bounds[i + 1]) for i in range(parts)]


def _run_chunk(args):
    scenario, snr_grid, seed, idx = args
    return _trial_block(scenario, snr_grid, seed, list(idx))


def mc_estimate(scenario, snr_grid: Optional[Sequence[float]] = None, n_trials: Optional[int] = None,
                master_seed: Optional[int] = None, workers: int = 1) -> List[MonteCarloResult]:
    """Monte Carlo expectation of every rate metric on an SNR grid (dB).

    Unspecified arguments fall back to ``scenario.snr_grid_db``,
    ``scenario.n_trials`` and ``scenario.master_seed``. Output is identical
    for any ``workers`` count.
    """
    snr_grid = list(scenario.snr_grid_db if snr_grid is None else snr_grid)
    n_trials = scenario.n_trials if n_trials is None else n_trials
    master_seed = scenario.master_seed if master_seed is None else master_seed
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    if not snr_grid:
        raise ValueError("empty SNR grid")

    chunks = _chunks(n_trials, workers)
    jobs = [(scenario, snr_grid, master_seed, c) for c in chunks]
    if len(chunks) == 1:
        blocks = [_run_chunk(jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=len(chunks)) as pool:
            blocks = list(pool.map(_run_chunk, jobs))
    data = {k: np.concatenate([b[k] for b in blocks], axis=0) for k in METRICS}

    results = []
    for j, snr in enumerate(snr_grid):
        res = MonteCarloResult(snr_db=float(snr), n_trials=n_trials, master_seed=master_seed)
        for k in METRICS:
            col = np.ascontiguousarray(data[k][:, j])
            res.samples[k] = col
            res.means[k] = float(np.mean(col))
            if n_trials > 1 and np.all(np.isfinite(col)):
                res.stderrs[k] = float(np.std(col, ddof=1) / math.sqrt(n_trials))
            else:
                res.stderrs[k] = math.nan
        results.append(res)
    return results


def sample_at(result: MonteCarloResult, trial: int) -> RateSample:
    """The per-trial record behind ``result`` (exact-codebook analog rate)."""
    s = result.samples
    return RateSample(rate_digital=float(s["rate_digital"][trial]),
                      rate_analog=float(s["rate_analog_inf"][trial]),
                      rate_diag=float(s["rate_diag"][trial]),
                      cond_analog=float(s["cond_analog"][trial]),
                      cond_digital=float(s["cond_digital"][trial]))
