"""Closed-form finite-codebook rate loss and codebook sizing.

The loss per path is the product of an SNR term ``r0`` (mean of X/(X+1)
for exponentially distributed per-path SNR X) and a quantization term
``r1`` (one minus the mean squared beam gain under uniformly distributed
steering phase error), summed over paths and converted to bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List

from .array_channel import resolve_link_budget

EULER_GAMMA = 0.57721566490153286061
# 1 / (6 * (1 - 1/sqrt(2))) = 0.569, rounded as in the published sizing rule
CODEBOOK_RULE_FACTOR = 0.57


@dataclass(frozen=True)
class PathLoss:
    r0: float
    r1: float


@dataclass
class LossBreakdown:
    per_path: List[PathLoss]
    total_bits: float
    valid: bool = True
    advisories: List[str] = field(default_factory=list)


def _e1_series(x: float) -> float:
    total, term, k = 0.0, 1.0, 1
    while True:
        term *= -x / k
        inc = term / k
        total += inc
        if abs(inc) < 1e-17 * abs(total) or k > 200:
            break
        k += 1
    return -EULER_GAMMA - math.log(x) - total


def _e1_scaled_cf(x: float) -> float:
    """exp(x) * E1(x) by modified Lentz on the continued fraction (x > 1)."""
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10_000):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def exp_e1(x: float) -> float:
    """Exponential integral E1(x) = int_1^inf exp(-x t)/t dt for x > 0."""
    if not x > 0:
        raise ValueError(f"E1 is defined here for x > 0, got {x!r}")
    if x <= 1.0:
        return _e1_series(x)
    return _e1_scaled_cf(x) * math.exp(-x)


def exp_e1_scaled(x: float) -> float:
    """exp(x) * E1(x), finite for large x where the two factors over/underflow."""
    if not x > 0:
        raise ValueError(f"E1 is defined here for x > 0, got {x!r}")
    if x <= 1.0:
        return math.exp(x) * _e1_series(x)
    return _e1_scaled_cf(x)


def r0_term(mean_path_snr: float) -> float:
    """E[X/(X+1)] for X exponential with mean ``s``: 1 - (1/s) e^(1/s) E1(1/s)."""
    s = mean_path_snr
    if not s > 0:
        raise ValueError(f"mean path SNR must be positive, got {s!r}")
    x = 1.0 / s
    return min(max(1.0 - x * exp_e1_scaled(x), 0.0), 1.0)


def delta_sq_approx(n: int, psi_err: float) -> float:
    """Small-error approximation of the squared beam gain, (1 - (n^2-1) x^2 / 24)^2."""
    base = 1.0 - (n * n - 1) * psi_err * psi_err / 24.0
    return min(max(base, 0.0), 1.0) ** 2


def min_codebook_size(n: int, d_over_lambda: float = 0.5) -> int:
    """Smallest C keeping the worst-case quantization power loss under 3 dB."""
    if n < 2:
        raise ValueError(f"need at least 2 antennas, got {n!r}")
    q = CODEBOOK_RULE_FACTOR * math.pi ** 2 * d_over_lambda ** 2 * (n * n - 1)
    c = math.ceil(math.sqrt(q))
    while (c - 1) ** 2 >= q:
        c -= 1
    while c * c < q:
        c += 1
    return c


def _side_term(gamma: float, d_over_lambda: float) -> float:
    a = (math.pi * d_over_lambda) ** 2 / 6.0
    g2a = gamma * gamma * a
    return 1.0 + g2a * g2a / 5.0 - 2.0 * g2a / 3.0


def gamma_ratio(n: int, c) -> float:
    """N/C, with 0 for an unlimited codebook (``c`` None, inf or "infinite")."""
    if c is None or c == "infinite" or c == math.inf:
        return 0.0
    return n / c


def r1_upper(n_bs: int, c_bs, n_ue: int, c_ue, d_over_lambda: float = 0.5) -> float:
    """Upper bound on 1 - E[|D_bs|^2 |D_ue|^2] under uniform steering phase error."""
    prod = _side_term(gamma_ratio(n_bs, c_bs), d_over_lambda) * _side_term(gamma_ratio(n_ue, c_ue), d_over_lambda)
    return min(max(1.0 - prod, 0.0), 1.0)


def rate_loss_predict(scenario, snr_db: float) -> LossBreakdown:
    """First-order closed-form rate loss (bits/s/Hz) of codebook steering at ``snr_db``."""
    budget = resolve_link_budget(scenario, snr_db=snr_db)
    variances = scenario.path_variances or [1.0 / scenario.n_paths] * scenario.n_paths
    g_bs = gamma_ratio(scenario.n_bs, scenario.codebook_bs)
    g_ue = gamma_ratio(scenario.n_ue, scenario.codebook_ue)
    r1 = r1_upper(scenario.n_bs, scenario.codebook_bs, scenario.n_ue, scenario.codebook_ue,
                  scenario.d_over_lambda)

    advisories = []
    for side, g in (("bs", g_bs), ("ue", g_ue)):
        if g > 1.0:
            advisories.append(f"gamma_{side} = {g:g} > 1: small phase-error approximation not reliable")
    raw = 1.0 - _side_term(g_bs, scenario.d_over_lambda) * _side_term(g_ue, scenario.d_over_lambda)
    if not 0.0 <= raw <= 1.0:
        advisories.append("r1 clamped to [0, 1]")

    per_path = []
    for var in variances:
        s = budget.beta * var / budget.noise_power
        per_path.append(PathLoss(r0=r0_term(s), r1=r1))
    total = sum(p.r0 * p.r1 for p in per_path) / math.log(2.0)
    return LossBreakdown(per_path=per_path, total_bits=total, valid=not advisories, advisories=advisories)
