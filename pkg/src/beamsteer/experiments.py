"""Experiment presets, generic simulation tables and closed-form analysis tables."""

from __future__ import annotations

from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from . import ConfigurationError
from .closed_form import gamma_ratio, min_codebook_size, rate_loss_predict
from .array_channel import resolve_link_budget
from .config import INFINITE, SystemConfig, parse_overrides
from .output import ResultTable
from .rates import METRICS, mc_estimate

PRESETS = ("fig2", "fig3", "fig4", "fig5")

FIG2_N_BS = (8, 64)
FIG3_N_BS = (8, 64)
FIG3_THRESHOLDS = tuple(float(m * 10 ** e) for e in range(0, 4) for m in (1, 2, 5)) + (1e4,)
FIG4_CODEBOOKS = ((128, 16), (64, 8), (16, 4))
FIG5_N_BS = tuple(2 ** q for q in range(3, 11))
FIG5_GAMMAS = (0.5, 1.0, 2.0)
FIG5_SNR_DB = -10.0


def _provenance(cfg: SystemConfig, **extra) -> Dict[str, str]:
    prov = {"config_digest": cfg.digest(), "master_seed": str(cfg.master_seed), "n_trials": str(cfg.n_trials)}
    prov.update({k: str(v) for k, v in extra.items()})
    return prov


def _append(cols: Dict[str, list], **values):
    for k, v in values.items():
        cols.setdefault(k, []).append(v)


def preset_base(name: str) -> SystemConfig:
    if name == "fig2":
        return SystemConfig()
    if name == "fig3":
        return SystemConfig(snr_grid_db=[0.0])
    if name == "fig4":
        return SystemConfig(n_bs=64, snr_grid_db=[float(x) for x in range(-40, 5, 5)])
    if name == "fig5":
        return SystemConfig(codebook_ue=16, snr_grid_db=[FIG5_SNR_DB])
    raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def fig2(cfg: SystemConfig, n_bs_values: Iterable[int] = FIG2_N_BS, workers: int = 1) -> ResultTable:
    cols: Dict[str, list] = {}
    for n_bs in n_bs_values:
        run = cfg.replace(n_bs=n_bs, codebook_bs=INFINITE, codebook_ue=INFINITE)
        for r in mc_estimate(run, workers=workers):
            m, s = r.means, r.stderrs
            _append(cols, snr_db=r.snr_db, n_bs=n_bs,
                    rate_digital_mean=m["rate_digital"], rate_digital_stderr=s["rate_digital"],
                    rate_analog_inf_mean=m["rate_analog_inf"], rate_analog_inf_stderr=s["rate_analog_inf"],
                    rate_diag_approx_mean=m["rate_diag"], rate_diag_approx_stderr=s["rate_diag"],
                    n_trials=r.n_trials)
    return ResultTable(cols, _provenance(cfg, preset="fig2"))


def empirical_cdf(samples: np.ndarray, thresholds: Sequence[float]) -> list:
    """P[X < t] for each threshold (inf samples count as above every threshold)."""
    x = np.asarray(samples)
    return [float(np.mean(x < t)) for t in thresholds]


def fig3(cfg: SystemConfig, n_bs_values: Sequence[int] = FIG3_N_BS,
         thresholds: Sequence[float] = FIG3_THRESHOLDS, workers: int = 1) -> ResultTable:
    """CDFs of cond(H_bar H_bar^H) (analog) and cond(Lambda Lambda^H) (digital).

    ``cdf_digital`` is the digital CDF at the largest BS array; the
    per-array digital CDFs and the noise-whitened analog CDFs are extra
    columns.
    """
    cols: Dict[str, list] = {"threshold": list(thresholds)}
    per = {}
    for n_bs in n_bs_values:
        run = cfg.replace(n_bs=n_bs, codebook_bs=INFINITE, codebook_ue=INFINITE, snr_grid_db=[cfg.snr_grid_db[0]])
        per[n_bs] = mc_estimate(run, workers=workers)[0].samples
    cols["cdf_digital"] = empirical_cdf(per[max(n_bs_values)]["cond_digital"], thresholds)
    for n_bs in n_bs_values:
        cols[f"cdf_analog_nbs{n_bs}"] = empirical_cdf(per[n_bs]["cond_analog"], thresholds)
    for n_bs in n_bs_values:
        cols[f"cdf_digital_nbs{n_bs}"] = empirical_cdf(per[n_bs]["cond_digital"], thresholds)
    for n_bs in n_bs_values:
        cols[f"cdf_analog_whitened_nbs{n_bs}"] = empirical_cdf(per[n_bs]["cond_analog_whitened"], thresholds)
    cols["n_trials"] = [cfg.n_trials] * len(thresholds)
    return ResultTable(cols, _provenance(cfg, preset="fig3"))


def fig4(cfg: SystemConfig, codebooks: Sequence = FIG4_CODEBOOKS, workers: int = 1) -> ResultTable:
    cols: Dict[str, list] = {}
    for c_bs, c_ue in codebooks:
        run = cfg.replace(codebook_bs=c_bs, codebook_ue=c_ue)
        for r in mc_estimate(run, workers=workers):
            m, s = r.means, r.stderrs
            _append(cols, snr_db=r.snr_db, c_bs=c_bs, c_ue=c_ue,
                    gamma_bs=gamma_ratio(cfg.n_bs, c_bs), gamma_ue=gamma_ratio(cfg.n_ue, c_ue),
                    rate_digital_mean=m["rate_digital"], rate_digital_stderr=s["rate_digital"],
                    rate_analog_inf_mean=m["rate_analog_inf"], rate_analog_inf_stderr=s["rate_analog_inf"],
                    rate_analog_fin_mean=m["rate_analog_fin"], rate_analog_fin_stderr=s["rate_analog_fin"],
                    loss_mean=m["loss"], loss_stderr=s["loss"], n_trials=r.n_trials)
    return ResultTable(cols, _provenance(cfg, preset="fig4"))


def fig5(cfg: SystemConfig, n_bs_values: Sequence[int] = FIG5_N_BS,
         gammas: Sequence[float] = FIG5_GAMMAS, workers: int = 1) -> ResultTable:
    """Codebook loss vs BS array size with C_bs = N_bs / gamma: Monte Carlo and closed form."""
    cols: Dict[str, list] = {}
    snr = cfg.snr_grid_db[0]
    for n_bs in n_bs_values:
        for g in gammas:
            c_bs = int(round(n_bs / g))
            run = cfg.replace(n_bs=n_bs, codebook_bs=c_bs, snr_grid_db=[snr])
            r = mc_estimate(run, workers=workers)[0]
            pred = rate_loss_predict(run, snr)
            m, s = r.means, r.stderrs
            _append(cols, n_bs=n_bs, gamma=g, c_bs=c_bs, c_ue=cfg.codebook_ue, snr_db=snr,
                    rate_analog_inf_mean=m["rate_analog_inf"], rate_analog_inf_stderr=s["rate_analog_inf"],
                    rate_analog_fin_mean=m["rate_analog_fin"], rate_analog_fin_stderr=s["rate_analog_fin"],
                    loss_mc=m["loss"], loss_mc_stderr=s["loss"],
                    loss_closed_form=pred.total_bits, closed_form_valid=int(pred.valid),
                    n_trials=r.n_trials)
    return ResultTable(cols, _provenance(cfg, preset="fig5"))


def run_preset(name: str, overrides: Optional[Sequence[str]] = None, workers: int = 1,
               seed: Optional[int] = None, **sweep) -> ResultTable:
    """Run a figure preset. ``overrides`` are ``key=value`` strings applied to the preset base."""
    base = preset_base(name)
    cfg = parse_overrides(overrides, base)
    if seed is not None:
        cfg = cfg.replace(master_seed=seed)
    fn = {"fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5}[name]
    return fn(cfg, workers=workers, **sweep)


def simulate(cfg: SystemConfig, workers: int = 1) -> ResultTable:
    """Every Monte Carlo metric on the config's SNR grid for its own array/codebook setup."""
    cols: Dict[str, list] = {}
    for r in mc_estimate(cfg, workers=workers):
        row = {"snr_db": r.snr_db, "n_bs": cfg.n_bs, "n_ue": cfg.n_ue,
               "c_bs": str(cfg.codebook_bs), "c_ue": str(cfg.codebook_ue)}
        for k in METRICS:
            row[f"{k}_mean"] = r.means[k]
            row[f"{k}_stderr"] = r.stderrs[k]
        row["n_trials"] = r.n_trials
        _append(cols, **row)
    return ResultTable(cols, _provenance(cfg, command="simulate"))


def analyze(cfg: SystemConfig) -> ResultTable:
    """Closed-form loss chain on the config's SNR grid (no Monte Carlo)."""
    cols: Dict[str, list] = {}
    for snr in cfg.snr_grid_db:
        pred = rate_loss_predict(cfg, snr)
        budget = resolve_link_budget(cfg, snr_db=snr)
        row = {"snr_db": snr, "n_bs": cfg.n_bs, "c_bs": str(cfg.codebook_bs),
               "n_ue": cfg.n_ue, "c_ue": str(cfg.codebook_ue),
               "gamma_bs": gamma_ratio(cfg.n_bs, cfg.codebook_bs),
               "gamma_ue": gamma_ratio(cfg.n_ue, cfg.codebook_ue)}
        for i, (var, p) in enumerate(zip(cfg.path_variances, pred.per_path), start=1):
            row[f"mean_path_snr_{i}"] = budget.beta * var / budget.noise_power
            row[f"r0_{i}"] = p.r0
        row["r1"] = pred.per_path[0].r1
        row["loss_closed_form"] = pred.total_bits
        row["valid"] = int(pred.valid)
        row["min_codebook_bs"] = min_codebook_size(cfg.n_bs, cfg.d_over_lambda) if cfg.n_bs >= 2 else 1
        row["min_codebook_ue"] = min_codebook_size(cfg.n_ue, cfg.d_over_lambda) if cfg.n_ue >= 2 else 1
        _append(cols, **row)
    return ResultTable(cols, _provenance(cfg, command="analyze"))


def codebook_table(d_over_lambda: float = 0.5, n_values: Iterable[int] = FIG5_N_BS) -> ResultTable:
    """Minimal codebook size per array size, with the ratio C/N."""
    cols: Dict[str, list] = {}
    for n in n_values:
        c = min_codebook_size(n, d_over_lambda)
        _append(cols, n=n, min_codebook_size=c, ratio=c / n)
    return ResultTable(cols, {"command": "analyze", "d_over_lambda": repr(d_over_lambda)})
