"""Scenario configuration, physical-constant conversions, and per-target link parameters.

Everything downstream (waveform generation, echo synthesis, analytics,
estimators) works off the value types defined here. All types are immutable
and all functions are pure, so they are safe to share across workers.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, asdict, replace
from typing import Optional, Sequence

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0  # m/s, exact
BOLTZMANN = 1.380649e-23  # J/K, exact (2019 SI)

# Constellations the analytics support. BPSK and 8-QAM are excluded because
# the sidelobe/covariance analysis requires E{s^2} = 0.
SUPPORTED_CONSTELLATIONS = ("QPSK", "16QAM", "64QAM", "256QAM", "1024QAM")
NONZERO_SECOND_MOMENT = ("BPSK", "8QAM")


class ConfigError(ValueError):
    """Raised for invalid scenario configurations or experiment files."""


@dataclass(frozen=True)
class ScenarioConfig:
    """OFDM numerology, RF constants, and the receiver noise model.

    ``N_cp`` is the cyclic-prefix length in samples at the signal bandwidth
    ``B = N * delta_f``. ``snr_override_dB``, when set, rescales all target
    reflection coefficients by one common factor so that the mean per-target
    pre-processing SNR, ``sum_q |alpha_q|^2 / (Q * sigma^2)``, equals the
    requested value.
    """

    fc: float = 28e9
    delta_f: float = 120e3
    N: int = 128
    M: int = 64
    N_cp: int = 9
    noise_figure_dB: float = 3.0
    T_temp: float = 290.0
    constellation: str = "1024QAM"
    seed: int = 0
    snr_override_dB: Optional[float] = None

    @property
    def B(self) -> float:
        """Signal bandwidth (Hz)."""
        return self.N * self.delta_f

    @property
    def T(self) -> float:
        """Useful OFDM symbol duration, 1/delta_f (s)."""
        return 1.0 / self.delta_f

    @property
    def T_cp(self) -> float:
        """Cyclic-prefix duration (s)."""
        return self.N_cp / self.B

    @property
    def T_s(self) -> float:
        """Total symbol duration including the CP (s)."""
        return self.T + self.T_cp

    def with_cp(self, n_cp: int) -> "ScenarioConfig":
        """Copy of this config with a different CP length."""
        return replace(self, N_cp=n_cp)


@dataclass(frozen=True)
class TargetTruth:
    """Physical point target: range (m), signed radial velocity (m/s), RCS (m^2)."""

    range_m: float
    velocity_mps: float = 0.0
    rcs_m2: float = 1.0


@dataclass(frozen=True)
class TargetLink:
    """Derived link parameters for one target against one config.

    ``l`` is the delay tap round(tau * B); ``rho`` the normalized excess delay
    (l - N_cp)/N clipped at zero; ``beyond_cp`` is True iff l > N_cp.
    """

    alpha: complex
    tau_s: float
    fd_hz: float
    l: int
    rho: float
    beyond_cp: bool

    def effective_alpha(self) -> complex:
        """Mainlobe amplitude: alpha shrunk to (1 - rho) * alpha beyond the CP."""
        return self.alpha * (1.0 - self.rho) if self.beyond_cp else self.alpha


@dataclass(frozen=True)
class RangeLimits:
    isi_free_range_m: float
    max_range_m: float


def _round_half_away(x: float) -> int:
    """Round with .5 ties away from zero (delay taps are always >= 0 here)."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """Return all violated invariants as human-readable messages (empty = ok)."""
    errors = []
    if cfg.N < 2:
        errors.append(f"subcarrier count N must be >= 2, got {cfg.N}")
    if cfg.M < 2:
        errors.append(f"symbol count M must be >= 2, got {cfg.M}")
    if not 0 <= cfg.N_cp <= cfg.N:
        if cfg.N_cp > cfg.N:
            errors.append(f"CP exceeds symbol length: N_cp={cfg.N_cp} > N={cfg.N}")
        else:
            errors.append(f"N_cp must be non-negative, got {cfg.N_cp}")
    if cfg.delta_f <= 0:
        errors.append(f"subcarrier spacing must be positive, got {cfg.delta_f}")
    if cfg.fc <= 0:
        errors.append(f"carrier frequency must be positive, got {cfg.fc}")
    if cfg.T_temp <= 0:
        errors.append(f"noise temperature must be positive, got {cfg.T_temp}")
    if cfg.constellation in NONZERO_SECOND_MOMENT:
        errors.append(
            f"constellation {cfg.constellation} has E{{s^2}} != 0; the sidelobe "
            "and covariance analytics require a zero second moment"
        )
    elif cfg.constellation not in SUPPORTED_CONSTELLATIONS:
        errors.append(
            f"unsupported constellation {cfg.constellation!r}; "
            f"choose one of {', '.join(SUPPORTED_CONSTELLATIONS)}"
        )
    return errors


def require_valid(cfg: ScenarioConfig) -> None:
    errors = validate_config(cfg)
    if errors:
        raise ConfigError("; ".join(errors))


def noise_power(cfg: ScenarioConfig) -> float:
    """Per-subcarrier noise power sigma^2 = F * k_B * delta_f * T_temp (W)."""
    return 10.0 ** (cfg.noise_figure_dB / 10.0) * BOLTZMANN * cfg.delta_f * cfg.T_temp


def unambiguous_ranges(cfg: ScenarioConfig) -> RangeLimits:
    """Interference-free range (set by the CP) and maximum unambiguous range."""
    return RangeLimits(
        isi_free_range_m=SPEED_OF_LIGHT * cfg.T_cp / 2.0,
        max_range_m=SPEED_OF_LIGHT * cfg.N / (2.0 * cfg.B),
    )


def reflection_magnitude(target: TargetTruth, cfg: ScenarioConfig) -> float:
    """|alpha| from the radar equation: sqrt(rcs c0^2 / ((4 pi)^3 R^4 fc^2))."""
    return math.sqrt(
        target.rcs_m2
        * SPEED_OF_LIGHT**2
        / ((4.0 * math.pi) ** 3 * target.range_m**4 * cfg.fc**2)
    )


def derive_link(target: TargetTruth, cfg: ScenarioConfig, phase: float = 0.0) -> TargetLink:
    """Convert a physical target into its link parameters for ``cfg``.

    ``phase`` sets the argument of the complex reflection coefficient; the
    magnitude comes from the radar equation.

    Raises ValueError for non-positive range/RCS and for delays at or beyond
    the unambiguous window (l >= N).
    """
    if target.range_m <= 0:
        raise ValueError(f"target range must be positive, got {target.range_m}")
    if target.rcs_m2 <= 0:
        raise ValueError(f"target RCS must be positive, got {target.rcs_m2}")
    tau = 2.0 * target.range_m / SPEED_OF_LIGHT
    l = _round_half_away(tau * cfg.B)
    if l >= cfg.N:
        raise ValueError(
            f"target at {target.range_m} m (tap {l}) lies outside the "
            f"unambiguous delay window of {cfg.N} taps"
        )
    fd = 2.0 * target.velocity_mps * cfg.fc / SPEED_OF_LIGHT
    rho = max(0, l - cfg.N_cp) / cfg.N
    mag = reflection_magnitude(target, cfg)
    return TargetLink(
        alpha=mag * complex(math.cos(phase), math.sin(phase)),
        tau_s=tau,
        fd_hz=fd,
        l=l,
        rho=rho,
        beyond_cp=l > cfg.N_cp,
    )


def scenario_links(
    cfg: ScenarioConfig,
    targets: Sequence[TargetTruth],
    rng: Optional[np.random.Generator] = None,
) -> list[TargetLink]:
    """Derive links for all targets, drawing reflection phases and applying the SNR override.

    Phases are uniform in [0, 2pi) per target when ``rng`` is given, zero
    otherwise. When ``cfg.snr_override_dB`` is set, all |alpha_q| are rescaled
    by one common factor so that sum_q |alpha_q|^2 / (Q sigma^2) matches it;
    relative target strengths are preserved.
    """
    phases = rng.uniform(0.0, 2.0 * math.pi, size=len(targets)) if rng is not None else [0.0] * len(targets)
    links = [derive_link(t, cfg, phase=p) for t, p in zip(targets, phases)]
    if cfg.snr_override_dB is not None and links:
        total = sum(abs(lk.alpha) ** 2 for lk in links)
        want = 10.0 ** (cfg.snr_override_dB / 10.0) * len(links) * noise_power(cfg)
        gain = math.sqrt(want / total)
        links = [replace(lk, alpha=lk.alpha * gain) for lk in links]
    return links


# ---------------------------------------------------------------------------
# JSON serialization. Field names match the dataclass exactly; unknown keys
# are rejected so typos in experiment files fail loudly.
# ---------------------------------------------------------------------------

_CONFIG_FIELDS = (
    "fc", "delta_f", "N", "M", "N_cp", "noise_figure_dB",
    "T_temp", "constellation", "seed", "snr_override_dB",
)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return asdict(cfg)


def config_to_json(cfg: ScenarioConfig, indent: int | None = 2) -> str:
    return json.dumps(config_to_dict(cfg), indent=indent, sort_keys=True)


def config_from_dict(doc: dict) -> ScenarioConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"config document must be a JSON object, got {type(doc).__name__}")
    unknown = set(doc) - set(_CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    merged = {**config_to_dict(ScenarioConfig()), **doc}
    for key in ("N", "M", "N_cp", "seed"):
        merged[key] = int(merged[key])
    for key in ("fc", "delta_f", "noise_figure_dB", "T_temp"):
        merged[key] = float(merged[key])
    if merged["snr_override_dB"] is not None:
        merged["snr_override_dB"] = float(merged["snr_override_dB"])
    return ScenarioConfig(**merged)


def config_from_json(text: str) -> ScenarioConfig:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return config_from_dict(doc)


def config_hash(cfg: ScenarioConfig) -> str:
    """Short content hash used to tag exported rows with their provenance."""
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]
