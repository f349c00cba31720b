"""ULA steering vectors, sparse geometric channels and the link budget.

All array math is carried out in the normalized spatial frequency
``psi = 2*pi*(d/lambda)*sin(angle)`` (phase increment per element), so the
wavelength never appears below the angle/psi boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import ConfigurationError

SPEED_OF_LIGHT = 299_792_458.0


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear array: element count and spacing in wavelengths."""

    n_elements: int
    d_over_lambda: float = 0.5

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ConfigurationError(f"n_elements must be a positive integer, got {self.n_elements!r}")
        if not self.d_over_lambda > 0:
            raise ConfigurationError(f"d_over_lambda must be > 0, got {self.d_over_lambda!r}")

    def psi(self, angle):
        """Phase increment per element for a plane wave at ``angle`` (rad)."""
        return 2.0 * np.pi * self.d_over_lambda * np.sin(angle)


@dataclass(frozen=True)
class PathParams:
    n_paths: int
    aod: np.ndarray
    aoa: np.ndarray
    gains: np.ndarray
    path_variances: np.ndarray

    def __post_init__(self):
        for name in ("aod", "aoa", "gains", "path_variances"):
            arr = np.asarray(getattr(self, name))
            if arr.shape != (self.n_paths,):
                raise ConfigurationError(f"{name} must have length {self.n_paths}, got shape {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        half_pi = np.pi / 2
        if np.any(np.abs(self.aod) > half_pi) or np.any(np.abs(self.aoa) > half_pi):
            raise ConfigurationError("path angles must lie in [-pi/2, pi/2]")
        if np.any(self.path_variances <= 0):
            raise ConfigurationError("path variances must be positive")


@dataclass(frozen=True)
class LinkBudget:
    """Resolved link budget, all quantities linear.

    ``snr`` is the per-antenna SNR ``tx_power * sum(var) / (path_loss * noise_power)``
    and ``beta`` is ``tx_power * n_ue * n_bs / path_loss``.
    """

    tx_power: float
    noise_power: float
    path_loss: float
    snr: float
    beta: float

    @property
    def ps_over_sigma_n2(self) -> float:
        return self.tx_power / self.noise_power

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr)


@dataclass(frozen=True)
class ChannelRealization:
    paths: PathParams
    scaled_gains: np.ndarray
    h: np.ndarray


def steering_vector(geom: ArrayGeometry, psi: float) -> np.ndarray:
    """Unit-norm ULA response as an ``(n, 1)`` column: ``exp(1j*k*psi)/sqrt(n)``."""
    k = np.arange(geom.n_elements)
    return (np.exp(1j * k * psi) / np.sqrt(geom.n_elements))[:, None]


def steering_matrix(geom: ArrayGeometry, psis) -> np.ndarray:
    """Stack steering vectors for each entry of ``psis`` as columns."""
    psis = np.atleast_1d(np.asarray(psis, dtype=float))
    k = np.arange(geom.n_elements)[:, None]
    return np.exp(1j * k * psis[None, :]) / np.sqrt(geom.n_elements)


def sample_paths(l: int, variances: Optional[Sequence[float]], rng: np.random.Generator) -> PathParams:
    """Draw L paths: uniform AoD/AoA on [-pi/2, pi/2], gains ~ CN(0, var_l).

    ``variances=None`` means ``1/L`` for every path.
    """
    if int(l) != l or l < 1:
        raise ConfigurationError(f"number of paths must be a positive integer, got {l!r}")
    if variances is None:
        variances = np.full(l, 1.0 / l)
    variances = np.asarray(variances, dtype=float)
    if variances.shape != (l,):
        raise ConfigurationError(f"expected {l} path variances, got {variances.size}")
    if np.any(variances <= 0):
        raise ConfigurationError("path variances must be positive")

    aod = rng.uniform(-np.pi / 2, np.pi / 2, size=l)
    aoa = rng.uniform(-np.pi / 2, np.pi / 2, size=l)
    z = rng.standard_normal((2, l))
    gains = np.sqrt(variances / 2.0) * (z[0] + 1j * z[1])
    return PathParams(n_paths=l, aod=aod, aoa=aoa, gains=gains, path_variances=variances)


def assemble_channel(paths: PathParams, bs: ArrayGeometry, ue: ArrayGeometry,
                     budget: LinkBudget) -> ChannelRealization:
    """H = A_ue diag(g~) A_bs^H with g~ = sqrt(n_ue*n_bs/path_loss) * g."""
    scale = math.sqrt(ue.n_elements * bs.n_elements / budget.path_loss)
    g = scale * paths.gains
    a_bs = steering_matrix(bs, bs.psi(paths.aod))
    a_ue = steering_matrix(ue, ue.psi(paths.aoa))
    h = (a_ue * g[None, :]) @ a_bs.conj().T
    return ChannelRealization(paths=paths, scaled_gains=g, h=h)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def free_space_path_loss(carrier_freq_hz: float, distance_m: Optional[float], exponent: float) -> float:
    """(4*pi*distance/lambda)**exponent, or 1 when no distance is given."""
    if distance_m is None:
        return 1.0
    if distance_m <= 0 or carrier_freq_hz <= 0:
        raise ConfigurationError("distance and carrier frequency must be positive")
    wavelength = SPEED_OF_LIGHT / carrier_freq_hz
    return (4.0 * math.pi * distance_m / wavelength) ** exponent


def resolve_link_budget(config, snr_db: Optional[float] = None,
                        noise_power: Optional[float] = None) -> LinkBudget:
    """Close ``snr = P_s * sum(var) / (rho * noise)`` for whichever side is missing.

    ``config`` needs ``tx_power_dbm``, ``carrier_freq_hz``, ``distance_m``,
    ``pathloss_exponent``, ``n_bs``, ``n_ue`` and ``path_variances``
    (or ``n_paths`` for the 1/L default).
    """
    if (snr_db is None) == (noise_power is None):
        raise ConfigurationError("specify exactly one of snr_db or noise_power")

    tx_power = dbm_to_watts(config.tx_power_dbm)
    rho = free_space_path_loss(config.carrier_freq_hz, getattr(config, "distance_m", None),
                               config.pathloss_exponent)
    variances = getattr(config, "path_variances", None)
    if variances is None:
        variances = [1.0 / config.n_paths] * config.n_paths
    total_var = float(np.sum(variances))

    if snr_db is not None:
        snr = 10.0 ** (snr_db / 10.0)
        noise_power = tx_power * total_var / (rho * snr)
    else:
        if not noise_power > 0:
            raise ConfigurationError("noise_power must be positive")
        snr = tx_power * total_var / (rho * noise_power)
    beta = tx_power * config.n_ue * config.n_bs / rho
    return LinkBudget(tx_power=tx_power, noise_power=noise_power, path_loss=rho, snr=snr, beta=beta)
