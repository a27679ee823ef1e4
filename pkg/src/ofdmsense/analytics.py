"""Closed-form sensing-performance predictions and their Monte-Carlo estimators.

Closed forms: echo SINR (exact and large-frame asymptotic), range-Doppler
sidelobe level and per-target PSLR, the second-order moment of the RDM at an
arbitrary (possibly fractional) delay-Doppler point, and the factored
covariance model of the data-removed channel estimate. Each has an empirical
counterpart that averages over independently synthesized frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .echo import add_noise, synth_components
from .params import ScenarioConfig, TargetLink, noise_power
from .rdm import compute_rdm
from .waveform import gen_frame, make_constellation


def harmonic_number(k: int) -> float:
    """Exact partial harmonic sum H_k = sum_{i=1..k} 1/i (summed small-to-large)."""
    if k < 0:
        raise ValueError(f"harmonic number needs k >= 0, got {k}")
    return float(sum(1.0 / i for i in range(k, 0, -1)))


def dirichlet_kernel(x, N: int):
    """Periodic Dirichlet kernel sin(pi x)/sin(pi x / N) * exp(j pi (N-1) x / N).

    N-periodic with |D_N| <= N; the removable singularity at x = 0 (mod N)
    evaluates to N. Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=float)
    den = np.sin(np.pi * x / N)
    singular = np.isclose(den, 0.0, atol=1e-12) & np.isclose(
        x / N, np.round(x / N), atol=1e-9
    )
    safe = np.where(singular, 1.0, den)
    out = np.where(
        singular,
        N + 0j,
        np.sin(np.pi * x) / safe * np.exp(1j * np.pi * (N - 1) * x / N),
    )
    return out if out.ndim else complex(out)


# ---------------------------------------------------------------------------
# SINR (closed form and empirical)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SinrReport:
    sinr_exact: float
    sinr_asymptotic: float
    numerator_W: float
    interference_W: float
    noise_W: float

    @property
    def sinr_exact_dB(self) -> float:
        return 10.0 * np.log10(self.sinr_exact)


def sinr_closed_form(cfg: ScenarioConfig, links: Sequence[TargetLink]) -> SinrReport:
    """Echo SINR: MN sum|a|^2 / ((2M-1) N sum_beyond rho|a|^2 + MN sigma^2).

    The asymptotic variant drops the -1/(2M) correction of the interference
    weight, valid for a large number of symbols.
    """
    sigma2 = noise_power(cfg)
    N, M = cfg.N, cfg.M
    total = sum(abs(lk.alpha) ** 2 for lk in links)
    excess = sum(lk.rho * abs(lk.alpha) ** 2 for lk in links if lk.beyond_cp)
    numerator = M * N * total
    interference = (2 * M - 1) * N * excess
    noise = M * N * sigma2
    asym = total / (2.0 * excess + sigma2)
    return SinrReport(
        sinr_exact=numerator / (interference + noise),
        sinr_asymptotic=asym,
        numerator_W=numerator,
        interference_W=interference,
        noise_W=noise,
    )


def sinr_empirical(
    cfg: ScenarioConfig,
    links: Sequence[TargetLink],
    trials: int,
    rng: np.random.Generator,
) -> float:
    """Monte-Carlo SINR: trial-averaged component energies, then the ratio."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    const = make_constellation(cfg.constellation)
    free = interference = noise = 0.0
    for _ in range(trials):
        S = gen_frame(cfg, const, rng)
        comp = add_noise(synth_components(cfg, links, S), cfg, rng)
        free += np.vdot(comp.Y_free, comp.Y_free).real
        delta = comp.interference
        interference += np.vdot(delta, delta).real
        noise += np.vdot(comp.Z, comp.Z).real
    if interference + noise == 0.0:
        return np.inf if free > 0 else 0.0
    return free / (interference + noise)


# ---------------------------------------------------------------------------
# Sidelobe level, PSLR, RDM second moment
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SidelobeReport:
    sigma_sl_sq: float
    pslr_per_target: tuple[float, ...]
    harmonic_H: float
    effective_alphas: tuple[complex, ...]


def sidelobe_level(
    cfg: ScenarioConfig, links: Sequence[TargetLink], mu4_value: float
) -> SidelobeReport:
    """Sidelobe floor of the RDM and the expected PSLR for each target.

    Floor: (mu4 - 1) sum |a_eff|^2 + sum_beyond rho (2 - rho) |a|^2 + sigma^2.
    PSLR_q: H * floor / (MN |a_eff,q|^2 + floor), H the harmonic number over
    the MN - Q sidelobe bins.
    """
    sigma2 = noise_power(cfg)
    eff = tuple(lk.effective_alpha() for lk in links)
    floor = (
        (mu4_value - 1.0) * sum(abs(a) ** 2 for a in eff)
        + sum(lk.rho * (2.0 - lk.rho) * abs(lk.alpha) ** 2 for lk in links if lk.beyond_cp)
        + sigma2
    )
    H = harmonic_number(cfg.N * cfg.M - len(links))
    mn = cfg.N * cfg.M
    pslr = tuple(H * floor / (mn * abs(a) ** 2 + floor) for a in eff)
    return SidelobeReport(
        sigma_sl_sq=floor, pslr_per_target=pslr, harmonic_H=H, effective_alphas=eff
    )


def rdm_second_moment(
    cfg: ScenarioConfig,
    links: Sequence[TargetLink],
    mu4_value: float,
    l: float,
    nu: float,
) -> float:
    """Expected |chi(l, nu)|^2 at a (possibly fractional) delay-Doppler point."""
    floor = sidelobe_level(cfg, links, mu4_value).sigma_sl_sq
    mn = cfg.N * cfg.M
    power = floor
    for lk in links:
        l_t = lk.tau_s * cfg.B
        nu_t = lk.fd_hz * cfg.M * cfg.T_s
        kernel = (
            np.abs(dirichlet_kernel(l - l_t, cfg.N)) ** 2
            * np.abs(dirichlet_kernel(nu - nu_t, cfg.M)) ** 2
        )
        power += abs(lk.effective_alpha()) ** 2 / mn * kernel
    return float(power)


# ---------------------------------------------------------------------------
# Covariance model of the data-removed channel estimate (factored)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CovarianceModel:
    """R = A diag(p) A^H + floor * I, kept in factored form.

    ``steering`` holds one column per target, a_q = conj(c_q) kron b_q, with
    the subcarrier index fastest; ``powers`` are the |effective alpha|^2.
    """

    steering: np.ndarray = field(repr=False)
    powers: np.ndarray = field(repr=False)
    sigma_sl_sq: float = 0.0

    def dense(self) -> np.ndarray:
        mn = self.steering.shape[0]
        if mn > 4096:
            raise ValueError(
                f"refusing to materialize a {mn} x {mn} covariance; use the factors"
            )
        A = self.steering
        return (A * self.powers) @ A.conj().T + self.sigma_sl_sq * np.eye(mn)


def covariance_model(
    cfg: ScenarioConfig, links: Sequence[TargetLink], mu4_value: float
) -> CovarianceModel:
    """Second-moment model of vec(Y o S*): target dyads on the raised floor."""
    from .echo import delay_steering, doppler_steering

    floor = sidelobe_level(cfg, links, mu4_value).sigma_sl_sq
    mn = cfg.N * cfg.M
    A = np.empty((mn, len(links)), dtype=complex)
    for q, lk in enumerate(links):
        A[:, q] = np.kron(
            np.conj(doppler_steering(lk.fd_hz, cfg)), delay_steering(lk.tau_s, cfg)
        )
    powers = np.array([abs(lk.effective_alpha()) ** 2 for lk in links])
    return CovarianceModel(steering=A, powers=powers, sigma_sl_sq=floor)


def covariance_empirical(
    cfg: ScenarioConfig,
    links: Sequence[TargetLink],
    trials: int,
    rng: np.random.Generator,
    randomize_phases: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Trial-averaged second moment of vec(Y o S*) plus a per-entry standard error.

    Returns ``(R_hat, se)`` where ``se[i, j]`` is the standard error of the
    complex entry estimate (real and imaginary parts combined). Refuses
    MN > 4096 to bound memory.
    """
    mn = cfg.N * cfg.M
    if mn > 4096:
        raise ValueError("covariance_empirical is limited to N*M <= 4096")
    const = make_constellation(cfg.constellation)
    acc = np.zeros((mn, mn), dtype=complex)
    acc_sq = np.zeros((mn, mn))
    for _ in range(trials):
        trial_links = links
        if randomize_phases:
            trial_links = [
                replace(lk, alpha=abs(lk.alpha) * np.exp(2j * np.pi * rng.uniform()))
                for lk in links
            ]
        S = gen_frame(cfg, const, rng)
        comp = add_noise(synth_components(cfg, trial_links, S), cfg, rng)
        h = (comp.Y * np.conj(S)).reshape(-1, order="F")
        outer = np.outer(h, np.conj(h))
        acc += outer
        acc_sq += outer.real**2 + outer.imag**2
    mean = acc / trials
    var = acc_sq / trials - (mean.real**2 + mean.imag**2)
    se = np.sqrt(np.maximum(var, 0.0) / trials)
    return mean, se


# ---------------------------------------------------------------------------
# Monte-Carlo RDM statistics (peak powers, sidelobe floor, empirical PSLR)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RdmTrialStats:
    """Trial-averaged |chi|^2 map plus peak-sidelobe statistics.

    ``mean_power`` is indexed like a centered RangeDopplerMap;
    ``target_cells`` are its (row, col) indices for the true target bins and
    the sidelobe region is everything else.
    """

    mean_power: np.ndarray = field(repr=False)
    mean_peak_sidelobe: float = 0.0
    target_cells: tuple[tuple[int, int], ...] = ()

    def mean_power_at(self, cell: tuple[int, int]) -> float:
        return float(self.mean_power[cell])

    def pslr_empirical(self) -> tuple[float, ...]:
        return tuple(
            self.mean_peak_sidelobe / self.mean_power_at(cell) for cell in self.target_cells
        )


def rdm_statistics(
    cfg: ScenarioConfig,
    links: Sequence[TargetLink],
    trials: int,
    rng: np.random.Generator,
    randomize_phases: bool = True,
    frames: Optional[Sequence[np.ndarray]] = None,
) -> RdmTrialStats:
    """Average |chi|^2 over synthesized frames; targets are assumed on-grid.

    When ``frames`` is given (pre-computed observation matrices Y paired with
    the symbol frames), pass tuples of (Y, S) instead of synthesizing.
    """
    const = make_constellation(cfg.constellation)
    mask = np.zeros((cfg.N, cfg.M), dtype=bool)
    cells = []
    for lk in links:
        row = int(round(lk.tau_s * cfg.B)) % cfg.N
        col = (int(round(lk.fd_hz * cfg.M * cfg.T_s)) + cfg.M // 2) % cfg.M
        mask[row, col] = True
        cells.append((row, col))
    acc = np.zeros((cfg.N, cfg.M))
    peak_sl = 0.0
    for t in range(trials):
        if frames is not None:
            Y, S = frames[t]
        else:
            trial_links = links
            if randomize_phases:
                trial_links = [
                    replace(lk, alpha=abs(lk.alpha) * np.exp(2j * np.pi * rng.uniform()))
                    for lk in links
                ]
            S = gen_frame(cfg, const, rng)
            Y = add_noise(synth_components(cfg, trial_links, S), cfg, rng).Y
        power = np.abs(compute_rdm(Y, S, cfg).chi) ** 2
        acc += power
        peak_sl += power[~mask].max() if (~mask).any() else 0.0
    n = max(trials, 1)
    return RdmTrialStats(
        mean_power=acc / n, mean_peak_sidelobe=peak_sl / n, target_cells=tuple(cells)
    )
