"""Structured frequency-domain echo synthesis and its time-domain oracle.

The structured model builds the interference-free, ISI, and ICI components of
the receive frame from steering vectors and the CP-excess phase-coupling
matrix. ``time_domain_oracle`` independently generates the same observation by
brute force in the time domain (IDFT + CP + integer-sample delay + per-symbol
Doppler phase + windowed DFT); the two must agree for on-grid delays, which is
the main cross-validation of the model.

Sign conventions, fixed once and relied on everywhere:
  - delay steering  b(tau)[n] = exp(-j 2 pi n delta_f tau)
  - Doppler steering c(fd)[m] = exp(-j 2 pi m fd T_s); the observation uses
    c^H, so symbol m carries the phase exp(+j 2 pi m fd T_s)
  - the ICI component enters the total with a negative sign
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import json

import numpy as np

from .params import ScenarioConfig, TargetLink, config_hash, noise_power


@dataclass(frozen=True)
class SteeringVectors:
    """Frequency-domain (delay) and temporal (Doppler) steering vectors."""

    b_tau: np.ndarray = field(repr=False)
    c_fd: np.ndarray = field(repr=False)


def delay_steering(tau_s: float, cfg: ScenarioConfig) -> np.ndarray:
    """b(tau)[n] = exp(-j 2 pi n delta_f tau), length N."""
    return np.exp(-2j * np.pi * np.arange(cfg.N) * cfg.delta_f * tau_s)


def doppler_steering(fd_hz: float, cfg: ScenarioConfig) -> np.ndarray:
    """c(fd)[m] = exp(-j 2 pi m fd T_s), length M."""
    return np.exp(-2j * np.pi * np.arange(cfg.M) * fd_hz * cfg.T_s)


def steering_vectors(tau_s: float, fd_hz: float, cfg: ScenarioConfig) -> SteeringVectors:
    return SteeringVectors(b_tau=delay_steering(tau_s, cfg), c_fd=doppler_steering(fd_hz, cfg))


def phase_coupling_matrix(l: int, cfg: ScenarioConfig) -> np.ndarray:
    """N x N coupling matrix of a tap-l echo: (1/N) sum_{i<l-N_cp} exp(j 2 pi (n'-n) i / N).

    Zero when the echo fits inside the CP. Evaluated via the closed geometric
    sum; every diagonal entry equals the normalized excess delay (l - N_cp)/N.
    """
    if not 0 <= l < cfg.N:
        raise ValueError(f"delay tap must satisfy 0 <= l < N={cfg.N}, got {l}")
    N = cfg.N
    excess = l - cfg.N_cp
    if excess <= 0:
        return np.zeros((N, N), dtype=complex)
    n = np.arange(N)
    d = n[None, :] - n[:, None]
    off = d != 0
    ratio = np.exp(2j * np.pi * d / N)
    phi = np.full((N, N), excess / N, dtype=complex)
    phi[off] = (np.exp(2j * np.pi * d[off] * excess / N) - 1.0) / (ratio[off] - 1.0) / N
    return phi


def _shift_columns_right(G: np.ndarray) -> np.ndarray:
    """Right-multiplication by the one-symbol shift matrix: column m picks up column m-1."""
    out = np.zeros_like(G)
    out[:, 1:] = G[:, :-1]
    return out


def _interference_pair(
    cfg: ScenarioConfig, links: Sequence[TargetLink], S: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """ISI and ICI matrices summed over the beyond-CP targets.

    Shared by the synthesizer and by interference reconstruction so the two
    are exact mirrors of each other.
    """
    Y_isi = np.zeros_like(S, dtype=complex)
    Y_ici = np.zeros_like(S, dtype=complex)
    for lk in links:
        if not lk.beyond_cp:
            continue
        phi = phase_coupling_matrix(lk.l, cfg)
        c_conj = np.conj(doppler_steering(lk.fd_hz, cfg))
        G_ici = delay_steering(lk.tau_s, cfg)[:, None] * c_conj[None, :] * S
        G_isi = delay_steering(lk.tau_s - cfg.T_cp, cfg)[:, None] * c_conj[None, :] * S
        Y_isi += lk.alpha * (phi @ _shift_columns_right(G_isi))
        Y_ici += lk.alpha * (phi @ G_ici)
    return Y_isi, Y_ici


@dataclass(frozen=True)
class EchoComponents:
    """Decomposed receive frame: Y = Y_free + Y_ISI - Y_ICI + Z."""

    Y_free: np.ndarray = field(repr=False)
    Y_ISI: np.ndarray = field(repr=False)
    Y_ICI: np.ndarray = field(repr=False)
    Z: np.ndarray = field(repr=False)

    @property
    def Y(self) -> np.ndarray:
        return self.Y_free + self.Y_ISI - self.Y_ICI + self.Z

    @property
    def interference(self) -> np.ndarray:
        return self.Y_ISI - self.Y_ICI


def synth_components(
    cfg: ScenarioConfig, links: Sequence[TargetLink], S: np.ndarray
) -> EchoComponents:
    """Noiseless structured synthesis of the echo frame for the given targets."""
    if S.shape != (cfg.N, cfg.M):
        raise ValueError(f"frame shape {S.shape} does not match config ({cfg.N}, {cfg.M})")
    Y_free = np.zeros_like(S, dtype=complex)
    for lk in links:
        c_conj = np.conj(doppler_steering(lk.fd_hz, cfg))
        Y_free += lk.alpha * (delay_steering(lk.tau_s, cfg)[:, None] * c_conj[None, :] * S)
    Y_isi, Y_ici = _interference_pair(cfg, links, S)
    return EchoComponents(Y_free=Y_free, Y_ISI=Y_isi, Y_ICI=Y_ici, Z=np.zeros_like(S, dtype=complex))


def add_noise(
    components: EchoComponents, cfg: ScenarioConfig, rng: np.random.Generator
) -> EchoComponents:
    """Add circularly-symmetric AWGN with per-entry variance sigma^2 from the config."""
    sigma2 = noise_power(cfg)
    shape = components.Y_free.shape
    Z = np.sqrt(sigma2 / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    return replace(components, Z=Z)


def time_domain_oracle(
    cfg: ScenarioConfig,
    links: Sequence[TargetLink],
    S: np.ndarray,
    rng: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Brute-force receive frame: IDFT + CP, integer-sample delays, windowed DFT.

    Each target's transmit stream is shifted by its delay tap (zero-filled
    before arrival, so the first symbol sees no ISI) and symbol m carries the
    Doppler phase exp(j 2 pi m fd T_s). The receiver takes the N samples after
    each CP and applies the unitary DFT. Pass ``rng`` to add AWGN.
    """
    if S.shape != (cfg.N, cfg.M):
        raise ValueError(f"frame shape {S.shape} does not match config ({cfg.N}, {cfg.M})")
    N, M, N_cp = cfg.N, cfg.M, cfg.N_cp
    N_s = N + N_cp
    total = M * N_s
    payload = np.fft.ifft(S, axis=0, norm="ortho")
    with_cp = np.vstack([payload[N - N_cp :, :], payload]) if N_cp else payload
    rx = np.zeros(total, dtype=complex)
    for lk in links:
        phases = np.exp(2j * np.pi * np.arange(M) * lk.fd_hz * cfg.T_s)
        stream = (with_cp * phases[None, :]).reshape(-1, order="F")
        rx[lk.l :] += lk.alpha * stream[: total - lk.l]
    if rng is not None:
        sigma2 = noise_power(cfg)
        rx = rx + np.sqrt(sigma2 / 2.0) * (
            rng.standard_normal(total) + 1j * rng.standard_normal(total)
        )
    windows = rx.reshape(N_s, M, order="F")[N_cp:, :]
    return np.fft.fft(windows, axis=0, norm="ortho")


# ---------------------------------------------------------------------------
# Debug exports
# ---------------------------------------------------------------------------

_COMPONENT_NAMES = ("Y_free", "Y_ISI", "Y_ICI", "Z", "Y")


def components_to_csv(components: EchoComponents, path) -> None:
    """Long-format CSV dump: component, subcarrier, symbol, re, im."""
    with open(path, "w") as fh:
        fh.write("component,n,m,re,im\n")
        for name in _COMPONENT_NAMES:
            mat = getattr(components, name)
            for n in range(mat.shape[0]):
                for m in range(mat.shape[1]):
                    z = mat[n, m]
                    fh.write(f"{name},{n},{m},{z.real!r},{z.imag!r}\n")


def components_to_json(components: EchoComponents, cfg: ScenarioConfig) -> str:
    """Compact JSON envelope with the config hash for provenance."""
    doc = {
        "config_hash": config_hash(cfg),
        "shape": list(components.Y_free.shape),
        "components": {
            name: [
                [[z.real, z.imag] for z in row] for row in getattr(components, name)
            ]
            for name in _COMPONENT_NAMES
        },
    }
    return json.dumps(doc)
