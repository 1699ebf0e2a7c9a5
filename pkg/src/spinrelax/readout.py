"""Forward model of the ionization detection chain and its inversion.

A readout at evolution time t and phase φ ionizes the up-state population.
What the detector reports is contaminated by a slowly growing auxiliary
population N_a (black-body redistribution into states above the ionization
threshold) and scaled by the detection efficiency η:

    M_up(φ)   = η (N_up(φ) + leakage·N_down(φ) + N_a),
    M_up+down = η (N_up+down + N_a),      N_a(t) = rate · t · N_up+down(0).

Scanning φ and fitting the sinusoid M̄ + A cos(φ - φ0) lets one invert the
linear system: N_up+down = 2(M_up+down - M̄), N_a = M̄ - N_up+down/2, and
<S_φ> = (M_up(φ) - M̄)/N_up+down. The efficiency cancels in every
magnetization, so inferred populations are reported in detected-count
units (η times the true atom numbers).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FitDegenerate, NonPhysical

__all__ = [
    "CountingNoise", "DetectionModel", "PhaseScan", "SinusoidFit",
    "Reconstruction", "simulate_counts", "simulate_phase_scan",
    "sinusoidal_fit", "reconstruct_magnetization", "default_phases",
]


class CountingNoise(enum.Enum):
    POISSONIAN = "poissonian"
    NONE = "none"


@dataclass(frozen=True)
class DetectionModel:
    """Detection efficiency, auxiliary growth rate and noise model."""

    eta: float = 0.173
    aux_rate_khz: float = 7.0
    noise: CountingNoise = CountingNoise.POISSONIAN
    depump_leakage: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.eta <= 1.0:
            raise ConfigError("eta must be in (0, 1]")
        if self.aux_rate_khz < 0:
            raise ConfigError("aux_rate must be >= 0")
        if not 0.0 <= self.depump_leakage <= 1.0:
            raise ConfigError("depump_leakage must be in [0, 1]")

    def aux_population(self, t_us: float, n_total: float) -> float:
        """Auxiliary atoms above threshold after t μs (linear growth)."""
        return self.aux_rate_khz * 1e-3 * t_us * n_total


def default_phases(n: int = 8) -> np.ndarray:
    """Equally spaced readout phases over a full turn."""
    return np.arange(n) * (2.0 * math.pi / n)


@dataclass
class PhaseScan:
    """Measured counts versus readout phase at one evolution time."""

    phases: np.ndarray
    m_up: np.ndarray
    m_total: np.ndarray
    t_us: float
    truth: dict = field(default_factory=dict)

    def __post_init__(self):
        self.phases = np.asarray(self.phases, dtype=float)
        self.m_up = np.asarray(self.m_up, dtype=float)
        self.m_total = np.asarray(self.m_total, dtype=float)
        if not (self.phases.shape == self.m_up.shape == self.m_total.shape):
            raise ConfigError("phases, m_up and m_total must align")
        if np.any(self.m_up < 0) or np.any(self.m_total < 0):
            raise ConfigError("counts must be >= 0")
        if np.unique(self.phases).size < 4:
            raise ConfigError("need at least 4 distinct readout phases")

    def save(self, path: str | Path) -> None:
        header = ["spinrelax phase scan v1", f"t_us: {self.t_us:g}",
                  "columns: t_us phi_rad M_up M_total"]
        body = np.column_stack([
            np.full_like(self.phases, self.t_us), self.phases,
            self.m_up, self.m_total,
        ])
        np.savetxt(path, body, header="\n".join(header), fmt="%.12e")


def simulate_counts(true_up: float, true_down: float, t_us: float,
                    model: DetectionModel,
                    rng: np.random.Generator | int | None = None
                    ) -> tuple[float, float]:
    """One readout: detected (M_up, M_up+down) for true populations."""
    if true_up < 0 or true_down < 0:
        raise ConfigError("populations must be >= 0")
    n_a = model.aux_population(t_us, true_up + true_down)
    lam_up = model.eta * (true_up + model.depump_leakage * true_down + n_a)
    lam_tot = model.eta * (true_up + true_down + n_a)
    if model.noise is CountingNoise.NONE:
        return lam_up, lam_tot
    if not isinstance(rng, np.random.Generator):
        rng = np.random.Generator(np.random.Philox(key=np.uint64(rng or 0)))
    return float(rng.poisson(lam_up)), float(rng.poisson(lam_tot))


def simulate_phase_scan(sx: float, sy: float, n_spins: float, t_us: float,
                        model: DetectionModel, phases=None,
                        seed: int | None = None) -> PhaseScan:
    """Forward-simulate a full phase scan for planar magnetization (sx, sy).

    The readout pulse maps <S_φ> = cosφ·sx + sinφ·sy onto the measured up
    population, N_up(φ) = N(1/2 + <S_φ>).
    """
    phases = default_phases() if phases is None else np.asarray(phases, float)
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed or 0)))
    m_up = np.empty_like(phases)
    m_tot = np.empty_like(phases)
    for k, phi in enumerate(phases):
        s_phi = sx * math.cos(phi) + sy * math.sin(phi)
        if abs(s_phi) > 0.5 + 1e-12:
            raise ConfigError("planar magnetization exceeds 1/2")
        n_up = n_spins * (0.5 + s_phi)
        m_up[k], m_tot[k] = simulate_counts(n_up, n_spins - n_up, t_us,
                                            model, rng)
    scan = PhaseScan(phases, m_up, m_tot, t_us)
    scan.truth = {
        "sx": sx, "sy": sy, "n_spins": n_spins,
        "n_a": model.aux_population(t_us, n_spins), "eta": model.eta,
    }
    return scan


@dataclass
class SinusoidFit:
    """Weighted least-squares fit of M̄ + A cos(φ - φ0)."""

    amplitude: float
    mean: float
    phase0: float
    covariance: np.ndarray  # over (mean, A·cosφ0, A·sinφ0)
    amplitude_err: float
    mean_err: float


def sinusoidal_fit(scan: PhaseScan) -> SinusoidFit:
    """Fit the phase scan; amplitude is non-negative by phase convention.

    Weights are inverse-variance with the Poisson plug-in Var ≈ max(M, 1).
    """
    phases = scan.phases
    span = phases.max() - phases.min()
    if span < math.pi - 1e-9:
        raise ConfigError("phases must span at least pi")
    x = np.column_stack([np.ones_like(phases), np.cos(phases), np.sin(phases)])
    w = 1.0 / np.sqrt(np.maximum(scan.m_up, 1.0))
    xw = x * w[:, None]
    yw = scan.m_up * w
    gram = xw.T @ xw
    if np.linalg.matrix_rank(gram) < 3:
        raise FitDegenerate("phase design matrix is rank deficient")
    coef = np.linalg.solve(gram, xw.T @ yw)
    cov = np.linalg.inv(gram)
    mean, c1, c2 = coef
    amplitude = math.hypot(c1, c2)
    phase0 = math.atan2(c2, c1)
    if amplitude > 0:
        grad = np.array([0.0, c1 / amplitude, c2 / amplitude])
        amp_var = float(grad @ cov @ grad)
    else:
        amp_var = float(cov[1, 1] + cov[2, 2])
    return SinusoidFit(
        amplitude=amplitude, mean=float(mean), phase0=phase0,
        covariance=cov, amplitude_err=math.sqrt(max(amp_var, 0.0)),
        mean_err=math.sqrt(max(float(cov[0, 0]), 0.0)),
    )


@dataclass
class Reconstruction:
    """Inverted magnetizations and populations (detected-count units)."""

    s_phi: np.ndarray
    s_phi_err: np.ndarray
    planar_amplitude: float
    planar_err: float
    n_total: float
    n_total_err: float
    n_a: float
    n_a_err: float
    fit: SinusoidFit


def reconstruct_magnetization(scan: PhaseScan,
                              nonphysical_tol: float = 4.0) -> Reconstruction:
    """Invert a phase scan into <S_φ>, N_up+down, N_a and A/N_up+down.

    ``nonphysical_tol`` is the number of standard errors by which the
    inferred auxiliary population may undershoot zero before the scan is
    rejected as non-physical.
    """
    fit = sinusoidal_fit(scan)
    w = 1.0 / np.maximum(scan.m_total, 1.0)
    m_tot_mean = float(np.sum(w * scan.m_total) / np.sum(w))
    m_tot_var = 1.0 / float(np.sum(w))  # Poisson plug-in
    n_total = 2.0 * (m_tot_mean - fit.mean)
    n_total_var = 4.0 * (m_tot_var + fit.mean_err**2)
    # n_a = 2*mean - m_tot_mean, so the variances add with a factor 4
    n_a = fit.mean - 0.5 * n_total
    n_a_var = m_tot_var + 4.0 * fit.mean_err**2
    n_a_err = math.sqrt(max(n_a_var, 0.0))
    if n_total <= 0.0:
        raise NonPhysical(f"inferred N_up+down = {n_total:g} <= 0")
    if n_a < -nonphysical_tol * max(n_a_err, 1e-12):
        raise NonPhysical(f"inferred N_a = {n_a:g} below zero")
    s_phi = (scan.m_up - fit.mean) / n_total
    # per-phase error: counting noise of M_up plus the shared-mean error
    m_up_var = np.maximum(scan.m_up, 1.0)
    s_phi_var = (m_up_var + fit.mean_err**2) / n_total**2 \
        + (s_phi / n_total) ** 2 * n_total_var
    planar = fit.amplitude / n_total
    planar_var = (fit.amplitude_err / n_total) ** 2 \
        + (fit.amplitude / n_total**2) ** 2 * n_total_var
    return Reconstruction(
        s_phi=s_phi, s_phi_err=np.sqrt(s_phi_var),
        planar_amplitude=planar, planar_err=math.sqrt(planar_var),
        n_total=n_total, n_total_err=math.sqrt(max(n_total_var, 0.0)),
        n_a=n_a, n_a_err=n_a_err, fit=fit,
    )
