"""Digital SVD reference, analog beamsteerers, codebooks and effective channels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import ConfigurationError, DimensionError
from .array_channel import ArrayGeometry, PathParams, steering_matrix


@dataclass(frozen=True)
class SvdReference:
    u_l: np.ndarray
    sigma_l: np.ndarray
    v_l: np.ndarray

    @property
    def f_opt(self) -> np.ndarray:
        return self.v_l

    @property
    def combiner(self) -> np.ndarray:
        return self.u_l.conj().T


@dataclass(frozen=True)
class Codebook:
    """Uniformly spaced steering phases over [-2*pi*d/lambda, 2*pi*d/lambda)."""

    size: int
    d_over_lambda: float
    entries_psi: np.ndarray

    @property
    def spacing(self) -> float:
        return 4.0 * np.pi * self.d_over_lambda / self.size

    @property
    def psi_max(self) -> float:
        return 2.0 * np.pi * self.d_over_lambda


@dataclass(frozen=True)
class AnalogBeamformers:
    """Transmit steering matrix ``f_a`` (N_bs x L) and receive ``w_a`` (L x N_ue).

    ``psi_err_*`` is the steering phase error (channel minus chosen) per path,
    zero for the exact beamformers. ``index_*`` is None on a side without
    a codebook.
    """

    f_a: np.ndarray
    w_a: np.ndarray
    chosen_psi_bs: np.ndarray
    chosen_psi_ue: np.ndarray
    psi_err_bs: np.ndarray
    psi_err_ue: np.ndarray
    index_bs: Optional[np.ndarray] = None
    index_ue: Optional[np.ndarray] = None
    collision: bool = False
    clamped: bool = False


@dataclass(frozen=True)
class EffectiveChannel:
    h_bar: np.ndarray
    w_gram: np.ndarray


class Quantized(NamedTuple):
    psi: float
    index: int
    clamped: bool


def _fix_phase(u: np.ndarray) -> np.ndarray:
    """Per-column unit phase making each column's largest entry real >= 0."""
    idx = np.argmax(np.abs(u), axis=0)
    pivot = u[idx, np.arange(u.shape[1])]
    mag = np.abs(pivot)
    return np.where(mag > 0, pivot.conj() / np.where(mag > 0, mag, 1.0), 1.0)


def svd_reference(h: np.ndarray, l: int) -> SvdReference:
    """Top-``l`` singular triplets of ``h``.

    Phases are pinned so the largest-magnitude entry of every left singular
    vector is real and nonnegative; the matching right vector absorbs the
    same phase so ``u diag(s) v^H`` is unchanged.
    """
    h = np.asarray(h)
    if h.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {h.shape}")
    if not 1 <= l <= min(h.shape):
        raise DimensionError(f"l={l} exceeds min dimension of {h.shape}")
    u, s, vh = np.linalg.svd(h, full_matrices=False)
    u, s, v = u[:, :l], s[:l], vh[:l].conj().T
    ph = _fix_phase(u)
    return SvdReference(u_l=u * ph, sigma_l=s, v_l=v * ph)


def build_codebook(c: int, d_over_lambda: float = 0.5) -> Codebook:
    if int(c) != c or c < 1:
        raise ConfigurationError(f"codebook size must be a positive integer, got {c!r}")
    if not d_over_lambda > 0:
        raise ConfigurationError(f"d_over_lambda must be > 0, got {d_over_lambda!r}")
    n = np.arange(c)
    # 2*pi*(d/lambda)*(2n/C - 1) keeps dyadic entries exact (ties stay ties)
    entries = 2.0 * np.pi * d_over_lambda * (2.0 * n / c - 1.0)
    entries.setflags(write=False)
    return Codebook(size=int(c), d_over_lambda=float(d_over_lambda), entries_psi=entries)


def wrap_phase(x):
    """Map to [-pi, pi)."""
    return (np.asarray(x) + np.pi) % (2.0 * np.pi) - np.pi


def _distances(psi: float, cb: Codebook, wrap: bool) -> np.ndarray:
    diff = psi - cb.entries_psi
    return np.abs(wrap_phase(diff)) if wrap else np.abs(diff)


def _nearest(dist: np.ndarray, scale: float) -> int:
    best = dist.min()
    tol = 1e-12 * max(1.0, scale)
    return int(np.flatnonzero(dist <= best + tol)[0])


def quantize_psi(psi: float, cb: Codebook, wrap: bool = False) -> Quantized:
    """Nearest codebook entry to ``psi``; ties go to the lower index.

    With ``wrap=False`` the distance is plain ``|psi - entry|``. Inputs
    outside the codebook span are clamped to the span and flagged.
    ``wrap=True`` measures distance modulo 2*pi, which is the metric the
    steering vectors themselves obey; nothing is clamped in that mode.
    """
    clamped = False
    if not wrap:
        lim = cb.psi_max
        if psi < -lim or psi > lim:
            psi = min(max(psi, -lim), lim)
            clamped = True
    dist = _distances(psi, cb, wrap)
    i = _nearest(dist, abs(psi))
    return Quantized(float(cb.entries_psi[i]), i, clamped)


def _quantize_side(psis: np.ndarray, cb: Codebook, distinct: bool):
    idx = np.empty(len(psis), dtype=int)
    clamped = False
    for l, p in enumerate(psis):
        q = quantize_psi(float(p), cb, wrap=True)
        idx[l], clamped = q.index, clamped or q.clamped
    if distinct and cb.size >= len(psis):
        used = set()
        for l, p in enumerate(psis):
            dist = _distances(float(p), cb, wrap=True)
            order = np.lexsort((np.arange(cb.size), np.round(dist, 12)))
            pick = next(int(i) for i in order if int(i) not in used)
            idx[l] = pick
            used.add(pick)
    chosen = cb.entries_psi[idx]
    err = wrap_phase(psis - chosen)
    collision = len(set(idx.tolist())) < len(idx)
    return chosen, err, idx, collision, clamped


def analog_infinite(paths: PathParams, bs: ArrayGeometry, ue: ArrayGeometry) -> AnalogBeamformers:
    """Exact array-response steering: ``F_A = A_bs``, ``W_A = A_ue^H``."""
    psi_bs = bs.psi(paths.aod)
    psi_ue = ue.psi(paths.aoa)
    zeros = np.zeros(paths.n_paths)
    return AnalogBeamformers(
        f_a=steering_matrix(bs, psi_bs),
        w_a=steering_matrix(ue, psi_ue).conj().T,
        chosen_psi_bs=psi_bs, chosen_psi_ue=psi_ue,
        psi_err_bs=zeros, psi_err_ue=zeros.copy(),
    )


def analog_finite(paths: PathParams, bs: ArrayGeometry, ue: ArrayGeometry,
                  cb_bs: Optional[Codebook], cb_ue: Optional[Codebook],
                  distinct: bool = False) -> AnalogBeamformers:
    """Steering toward the nearest codebook entry of each path.

    A side whose codebook is ``None`` steers exactly. Two paths mapped to
    the same entry are kept (``collision`` is set) unless ``distinct`` asks
    for the next-nearest unused entry.
    """
    psi_bs = bs.psi(paths.aod)
    psi_ue = ue.psi(paths.aoa)
    out = {}
    collision = clamped = False
    for side, psis, cb in (("bs", psi_bs, cb_bs), ("ue", psi_ue, cb_ue)):
        if cb is None:
            out[side] = (psis, np.zeros_like(psis), None)
            continue
        chosen, err, idx, coll, clp = _quantize_side(psis, cb, distinct)
        out[side] = (chosen, err, idx)
        collision |= coll
        clamped |= clp
    return AnalogBeamformers(
        f_a=steering_matrix(bs, out["bs"][0]),
        w_a=steering_matrix(ue, out["ue"][0]).conj().T,
        chosen_psi_bs=out["bs"][0], chosen_psi_ue=out["ue"][0],
        psi_err_bs=out["bs"][1], psi_err_ue=out["ue"][1],
        index_bs=out["bs"][2], index_ue=out["ue"][2],
        collision=collision, clamped=clamped,
    )


def effective_channel(w: np.ndarray, h: np.ndarray, f: np.ndarray) -> EffectiveChannel:
    w, h, f = np.asarray(w), np.asarray(h), np.asarray(f)
    if w.ndim != 2 or h.ndim != 2 or f.ndim != 2 or w.shape[1] != h.shape[0] or h.shape[1] != f.shape[0]:
        raise DimensionError(f"cannot form W H F with shapes {w.shape}, {h.shape}, {f.shape}")
    return EffectiveChannel(h_bar=w @ h @ f, w_gram=w @ w.conj().T)


def dirichlet_gain(n: int, psi_err):
    """Array overlap amplitude ``|sin(n x/2) / (n sin(x/2))|`` (1 at x = 0 mod 2*pi)."""
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n!r}")
    x = np.asarray(psi_err, dtype=float)
    s = np.sin(x / 2.0)
    # below this the kernel equals 1 to double precision
    small = np.abs(s) < 1e-12
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.abs(np.sin(n * x / 2.0) / (n * np.where(small, 1.0, s)))
    g = np.where(small, 1.0, np.minimum(g, 1.0))
    return float(g) if g.ndim == 0 else g
