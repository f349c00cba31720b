"""System configuration and the line-oriented ``key = value`` config format.

Lists are comma separated, ``#`` starts a comment, and any key left out
takes the default below (28 GHz carrier, 3 paths with variance 1/L,
27 dBm transmit power, 50 m free-space link with exponent 2, 8 UE
antennas).
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from typing import List, Optional, Union


from . import ConfigurationError

INFINITE = "infinite"
CodebookSize = Union[int, str]


def _default_grid():
    return [float(x) for x in range(-40, 25, 5)]


@dataclass
class SystemConfig:
    carrier_freq_hz: float = 28e9
    n_paths: int = 3
    path_variances: Optional[List[float]] = None
    pathloss_exponent: float = 2.0
    distance_m: Optional[float] = 50.0
    tx_power_dbm: float = 27.0
    n_bs: int = 64
    n_ue: int = 8
    m_bs: Optional[int] = None
    m_ue: Optional[int] = None
    d_over_lambda: float = 0.5
    codebook_bs: CodebookSize = INFINITE
    codebook_ue: CodebookSize = INFINITE
    snr_grid_db: List[float] = field(default_factory=_default_grid)
    n_trials: int = 2000
    master_seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.n_paths < 1:
            raise ConfigurationError("n_paths: must be >= 1")
        if self.path_variances is None:
            self.path_variances = [1.0 / self.n_paths] * self.n_paths
        if len(self.path_variances) != self.n_paths:
            raise ConfigurationError(f"path_variances: expected {self.n_paths} values, got {len(self.path_variances)}")
        if any(v <= 0 for v in self.path_variances):
            raise ConfigurationError("path_variances: must all be positive")
        for key in ("m_bs", "m_ue"):
            val = getattr(self, key)
            if val is None:
                setattr(self, key, self.n_paths)
            elif val != self.n_paths:
                raise ConfigurationError(f"{key}: transceiver count must equal the number of paths "
                                         f"(M = L = {self.n_paths}), got {val}")
        for key in ("n_bs", "n_ue"):
            if getattr(self, key) < 1:
                raise ConfigurationError(f"{key}: must be >= 1")
        if self.n_paths > min(self.n_bs, self.n_ue):
            raise ConfigurationError(f"n_paths: L = {self.n_paths} exceeds min(n_bs, n_ue)")
        for key in ("codebook_bs", "codebook_ue"):
            val = getattr(self, key)
            if val != INFINITE and (not isinstance(val, int) or val < 1):
                raise ConfigurationError(f"{key}: must be a positive integer or '{INFINITE}'")
        if not self.d_over_lambda > 0:
            raise ConfigurationError("d_over_lambda: must be > 0")
        if not self.snr_grid_db:
            raise ConfigurationError("snr_grid_db: must be nonempty")
        if self.n_trials < 1:
            raise ConfigurationError("n_trials: must be >= 1")
        if self.carrier_freq_hz <= 0:
            raise ConfigurationError("carrier_freq_hz: must be > 0")
        if self.distance_m is not None and self.distance_m <= 0:
            raise ConfigurationError("distance_m: must be > 0 or 'none'")

    def replace(self, **changes) -> "SystemConfig":
        """Copy with ``changes``; M and the variances are re-derived if L changes."""
        if "n_paths" in changes:
            changes.setdefault("path_variances", None)
            changes.setdefault("m_bs", None)
            changes.setdefault("m_ue", None)
        return dataclasses.replace(self, **changes)

    def to_text(self) -> str:
        """Canonical config text; parsing it gives back an equal config."""
        lines = []
        for f in dataclasses.fields(self):
            lines.append(f"{f.name} = {_format_value(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()[:16]


def _format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, (list, tuple)):
        return ", ".join(_format_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _int(s: str) -> int:
    f = float(s)
    if f != int(f):
        raise ValueError(f"not an integer: {s}")
    return int(f)


def _float_list(s: str) -> List[float]:
    return [float(x) for x in s.split(",") if x.strip()]


def _optional_float(s: str) -> Optional[float]:
    return None if s.lower() in ("none", "") else float(s)


def _codebook(s: str) -> CodebookSize:
    return INFINITE if s.lower() in (INFINITE, "inf") else _int(s)


def _optional_int(s: str) -> Optional[int]:
    return None if s.lower() == "none" else _int(s)


PARSERS = {
    "carrier_freq_hz": float,
    "n_paths": _int,
    "path_variances": lambda s: None if s.lower() == "none" else _float_list(s),
    "pathloss_exponent": float,
    "distance_m": _optional_float,
    "tx_power_dbm": float,
    "n_bs": _int,
    "n_ue": _int,
    "m_bs": _optional_int,
    "m_ue": _optional_int,
    "d_over_lambda": float,
    "codebook_bs": _codebook,
    "codebook_ue": _codebook,
    "snr_grid_db": _float_list,
    "n_trials": _int,
    "master_seed": _int,
}


def parse_assignments(pairs, base: Optional[SystemConfig] = None, source: str = "<config>") -> SystemConfig:
    """Apply ``(lineno, key, raw_value)`` triples on top of ``base`` (defaults if None)."""
    values = {}
    for lineno, key, raw in pairs:
        if key not in PARSERS:
            raise ConfigurationError(f"{source}:{lineno}: unknown key '{key}'")
        try:
            values[key] = PARSERS[key](raw.strip())
        except ValueError as exc:
            raise ConfigurationError(f"{source}:{lineno}: malformed value for '{key}': {raw.strip()!r}") from exc
    try:
        if base is None:
            return SystemConfig(**values)
        return base.replace(**values)
    except ConfigurationError as exc:
        key = str(exc).split(":", 1)[0]
        where = next((f"{source}:{ln}: " for ln, k, _ in pairs if k == key), f"{source}: ")
        raise ConfigurationError(where + str(exc)) from None


def parse_config(text: str, base: Optional[SystemConfig] = None, source: str = "<config>") -> SystemConfig:
    pairs = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, raw = line.split("=", 1)
        pairs.append((lineno, key.strip(), raw))
    return parse_assignments(pairs, base, source)


def parse_overrides(items, base: Optional[SystemConfig] = None) -> SystemConfig:
    """``--set key=value`` style overrides."""
    pairs = []
    for i, item in enumerate(items or [], start=1):
        if "=" not in item:
            raise ConfigurationError(f"--set #{i}: expected key=value, got {item!r}")
        key, raw = item.split("=", 1)
        pairs.append((i, key.strip(), raw))
    return parse_assignments(pairs, base, source="--set")
