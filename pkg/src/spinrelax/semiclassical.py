"""Mean-field and discrete truncated Wigner (dTWA) spin dynamics.

Classical spins s^(i) precess in the field of all others,

    ds^(i)/dt = 2π · B^(i) × s^(i),
    B^(i) = Σ_j J_ij (s_x^(j), s_y^(j), δ s_z^(j)) + external field,

which is Hamilton's equation for the classical XXZ energy function under
the spin Poisson bracket (the same dynamics quantum Heisenberg evolution
reduces to for product states; a unit test pins the precession sense
against the exact two-level solution). J and all field components are
ordinary frequencies in MHz; the 2π above is the only angular conversion
in this module's dynamics.

Mean field evolves the single unsampled initial state and shows no
relaxation from the perfectly x-polarized state (it is a fixed point).
dTWA draws discrete initial conditions -- the component along the
polarization axis fixed at +1/2, the two transverse components independent
fair coins on ±1/2 -- and averages trajectories; the trajectory mean of
s_α estimates <S_α> directly.

The integrator is the Tsitouras 5(4) embedded Runge-Kutta pair with PI
step-size control, stepping exactly onto requested output times. State
arrays have shape (3, n_spins, n_traj) so each field evaluation is three
BLAS matrix products.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .couplings import CouplingMatrix, ExternalField
from .curves import ObservableSeries
from .errors import ConfigError, DimensionMismatch, StepSizeUnderflow
from .protocol import RamseyProtocol
from .units import OMEGA_PER_MHZ

__all__ = [
    "Scheme", "ClassicalSpinEnsemble", "sample_dtwa_initial",
    "mean_field_initial", "effective_field", "equations_of_motion",
    "classical_energy", "integrate", "trajectory_observables",
    "series_from_trajectories", "run_dtwa", "run_mean_field",
    "emch_radin_ising", "rotate_about_z", "readout_projection",
    "DEFAULT_RTOL", "DEFAULT_ATOL", "DEFAULT_N_TRAJ",
]

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10

#: Default dTWA trajectory count (the converged sampling budget).
DEFAULT_N_TRAJ = 100


class Scheme(enum.Enum):
    MEAN_FIELD = "mean_field"
    DTWA = "dtwa"


@dataclass
class ClassicalSpinEnsemble:
    """Per-trajectory classical spin vectors, shape (3, n_spins, n_traj)."""

    spins: np.ndarray
    scheme: Scheme

    def __post_init__(self):
        self.spins = np.asarray(self.spins, dtype=float)
        if self.spins.ndim != 3 or self.spins.shape[0] != 3:
            raise ConfigError("spins must have shape (3, n_spins, n_traj)")

    @property
    def n_spins(self) -> int:
        return self.spins.shape[1]

    @property
    def n_traj(self) -> int:
        return self.spins.shape[2]

    def norms(self) -> np.ndarray:
        """Per spin and trajectory |s|, conserved by the exact flow."""
        return np.sqrt((self.spins**2).sum(axis=0))

    def copy(self) -> "ClassicalSpinEnsemble":
        return ClassicalSpinEnsemble(self.spins.copy(), self.scheme)


_AXES = {"+x": (0, 0.5), "-x": (0, -0.5), "+z": (2, 0.5), "-z": (2, -0.5)}


def sample_dtwa_initial(n_spins: int, n_traj: int, seed: int,
                        axis: str = "+x") -> ClassicalSpinEnsemble:
    """Discrete phase-space sampling around a polarized product state.

    The component along ``axis`` is deterministic (±1/2); the other two are
    independent fair draws from {-1/2, +1/2}, so every sampled spin has
    length sqrt(3)/2 exactly.
    """
    if n_traj < 1:
        raise ConfigError("n_traj must be >= 1")
    if axis not in _AXES:
        raise ConfigError(f"axis must be one of {sorted(_AXES)}")
    comp, value = _AXES[axis]
    rng = np.random.Generator(np.random.Philox(key=np.uint64(seed)))
    spins = rng.integers(0, 2, size=(3, n_spins, n_traj)).astype(float) - 0.5
    spins[comp] = value
    return ClassicalSpinEnsemble(spins, Scheme.DTWA)


def mean_field_initial(n_spins: int, axis: str = "+x") -> ClassicalSpinEnsemble:
    """The single unsampled spin-1/2 product state (|s| = 1/2)."""
    comp, value = _AXES[axis]
    spins = np.zeros((3, n_spins, 1))
    spins[comp] = value
    return ClassicalSpinEnsemble(spins, Scheme.MEAN_FIELD)


def _field_components(spins: np.ndarray, couplings: CouplingMatrix,
                      ext_vec: np.ndarray | None):
    """B components (MHz) for a (3, n, T) spin array."""
    j = couplings.j
    if couplings.ising_mode:
        bx = np.zeros_like(spins[0])
        by = np.zeros_like(spins[1])
    else:
        bx = j @ spins[0]
        by = j @ spins[1]
    bz = (couplings.delta * j) @ spins[2]
    if couplings.delta_vdw:
        bz = bz - couplings.delta_vdw
    if ext_vec is not None:
        bx = bx + ext_vec[0]
        by = by + ext_vec[1]
        bz = bz + ext_vec[2]
    return bx, by, bz


def effective_field(ensemble: ClassicalSpinEnsemble, couplings: CouplingMatrix,
                    ext: ExternalField | None = None) -> np.ndarray:
    """Effective field B (MHz) seen by each spin, shape (3, n, T)."""
    if ensemble.n_spins != couplings.n:
        raise DimensionMismatch("ensemble and couplings disagree on n_spins")
    ext_vec = ext.vector() if ext is not None else None
    return np.stack(_field_components(ensemble.spins, couplings, ext_vec))


def _rhs(spins: np.ndarray, couplings: CouplingMatrix,
         ext_vec: np.ndarray | None) -> np.ndarray:
    sx, sy, sz = spins
    bx, by, bz = _field_components(spins, couplings, ext_vec)
    out = np.empty_like(spins)
    np.multiply(by, sz, out=out[0])
    out[0] -= bz * sy
    np.multiply(bz, sx, out=out[1])
    out[1] -= bx * sz
    np.multiply(bx, sy, out=out[2])
    out[2] -= by * sx
    out *= OMEGA_PER_MHZ
    return out


def equations_of_motion(ensemble: ClassicalSpinEnsemble,
                        couplings: CouplingMatrix,
                        ext: ExternalField | None = None) -> np.ndarray:
    """Time derivatives ds/dt = 2π B × s in 1/μs, shape (3, n, T)."""
    if ensemble.n_spins != couplings.n:
        raise DimensionMismatch("ensemble and couplings disagree on n_spins")
    ext_vec = ext.vector() if ext is not None else None
    return _rhs(ensemble.spins, couplings, ext_vec)


def classical_energy(ensemble: ClassicalSpinEnsemble, couplings: CouplingMatrix,
                     ext: ExternalField | None = None) -> np.ndarray:
    """Classical energy per trajectory (MHz), pairs counted once."""
    spins = ensemble.spins
    bx, by, bz = _field_components(spins, couplings, None)
    if couplings.delta_vdw:
        bz = bz + couplings.delta_vdw  # keep the pair part only
    e = 0.5 * (spins[0] * bx + spins[1] * by + spins[2] * bz).sum(axis=0)
    if couplings.delta_vdw:
        e = e - couplings.delta_vdw * spins[2].sum(axis=0)
    if ext is not None:
        e = e + np.tensordot(ext.vector(), spins.sum(axis=1), axes=(0, 0))
    return e


# --------------------------------------------------------------------------
# Tsitouras 5(4) with PI step control
# --------------------------------------------------------------------------

_C = np.array([0.0, 0.161, 0.327, 0.9, 0.9800255409045097, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([0.161]),
    np.array([-0.008480655492356989, 0.335480655492357]),
    np.array([2.8971530571054935, -6.359448489975075, 4.3622954328695815]),
    np.array([5.325864828439257, -11.748883564062828, 7.4955393428898365,
              -0.09249506636175525]),
    np.array([5.86145544294642, -12.92096931784711, 8.159367898576159,
              -0.071584973281401, -0.028269050394068383]),
    np.array([0.09646076681806523, 0.01, 0.4798896504144996,
              1.379008574103742, -3.290069515436081, 2.324710524099774]),
]
_B = np.array([0.09646076681806523, 0.01, 0.4798896504144996,
               1.379008574103742, -3.290069515436081, 2.324710524099774, 0.0])
_BT = np.array([-0.00178001105222577714, -0.0008164344596567469,
                0.007880878010261995, -0.1447110071732629,
                0.5823571654525552, -0.45808210592918697, 1.0 / 66.0])

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
# PI exponents for an order-5 pair (Hairer/Wanner style)
_ALPHA = 0.14
_BETA = 0.08


def _step(f, y, k1, h, project=None):
    """One Tsit5 stage sweep; returns (y_new, k_new, error_vector).

    ``project`` optionally maps the candidate solution back onto the
    constraint manifold (per-spin norms) before the FSAL evaluation, so
    enforcing the constraint costs no extra field evaluation.
    """
    ks = [k1]
    for i in range(1, 7):
        yi = y + (h * _A[i][0]) * ks[0]
        for a, k in zip(_A[i][1:], ks[1:]):
            yi += (h * a) * k
        ks.append(f(yi))
    y_new = y + (h * _B[0]) * ks[0]
    for b, k in zip(_B[1:6], ks[1:6]):
        y_new += (h * b) * k
    err = (h * _BT[0]) * ks[0]
    for b, k in zip(_BT[1:6], ks[1:6]):
        err += (h * b) * k
    if project is not None:
        y_new = project(y_new)
    # FSAL: stage 7 is f at the (projected) candidate solution
    k_new = f(y_new)
    err += (h * _BT[6]) * k_new
    return y_new, k_new, err


def integrate(ensemble: ClassicalSpinEnsemble, couplings: CouplingMatrix,
              ext: ExternalField | None, t_span: tuple[float, float],
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
              t_eval=None, max_steps: int = 20_000_000,
              project_norms: bool = False):
    """Adaptively integrate the spin precession over ``t_span``.

    Returns the final ensemble, or a list of ensembles at ``t_eval`` (which
    must be increasing and inside the span). Output times are hit exactly
    by clamping steps, so a run is independent of how callers slice the
    time axis. ``project_norms`` rescales every spin back to its initial
    length after each accepted step -- the exact flow conserves those
    lengths, so this only removes the integrator's radial error; it is the
    recommended mode for long relaxation runs.
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 < t0:
        raise ConfigError("t_span must be increasing")
    if rtol <= 0 or atol <= 0:
        raise ConfigError("tolerances must be > 0")
    if ensemble.n_spins != couplings.n:
        raise DimensionMismatch("ensemble and couplings disagree on n_spins")
    ext_vec = ext.vector() if ext is not None else None

    targets = [t1] if t_eval is None else [float(t) for t in t_eval]
    arr = np.asarray(targets)
    if arr.size and (np.any(np.diff(arr) < 0) or arr[0] < t0 or arr[-1] > t1):
        raise ConfigError("t_eval must be increasing and inside t_span")

    def f(state):
        return _rhs(state, couplings, ext_vec)

    project = None
    if project_norms:
        norms0 = np.sqrt((ensemble.spins**2).sum(axis=0, keepdims=True))

        def project(state):
            cur = np.sqrt((state**2).sum(axis=0, keepdims=True))
            return state * (norms0 / np.maximum(cur, 1e-300))

    y = ensemble.spins.copy()
    t = t0
    span = t1 - t0
    outputs: list[np.ndarray] = []

    if span == 0.0:
        outputs = [y.copy() for _ in targets]
    else:
        k1 = f(y)
        scale = atol + rtol * np.abs(y)
        d0 = math.sqrt(float(np.mean((y / scale) ** 2)))
        d1 = math.sqrt(float(np.mean((k1 / scale) ** 2)))
        h = min(span, 0.01 * d0 / d1 if d1 > 0 else span)
        h_min = max(span * 1e-14, 1e-300)
        err_prev = 1.0
        n_steps = 0
        for target in targets:
            while t < target:
                clamped = h >= target - t
                h_try = target - t if clamped else h
                y_new, k_new, err_vec = _step(f, y, k1, h_try, project)
                w = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
                err = math.sqrt(float(np.mean((err_vec / w) ** 2)))
                n_steps += 1
                if n_steps > max_steps:
                    raise StepSizeUnderflow(
                        f"step budget {max_steps} exhausted at t={t:g}"
                    )
                if err <= 1.0:
                    t = target if clamped else t + h_try
                    y = y_new
                    k1 = k_new
                    if err == 0.0:
                        factor = _MAX_FACTOR
                    else:
                        factor = min(_MAX_FACTOR, max(
                            _MIN_FACTOR,
                            _SAFETY * err ** -_ALPHA * err_prev ** _BETA,
                        ))
                    err_prev = max(err, 1e-10)
                    h = max(h_try * factor, h_min)
                else:
                    h = max(h_try * max(_MIN_FACTOR,
                                        _SAFETY * err ** -0.2), h_min)
                    if h <= h_min:
                        raise StepSizeUnderflow(
                            f"step size underflow at t={t:g} (err={err:.3g})"
                        )
            outputs.append(y.copy())

    ensembles = [ClassicalSpinEnsemble(o, ensemble.scheme) for o in outputs]
    return ensembles if t_eval is not None else ensembles[-1]


# --------------------------------------------------------------------------
# protocol runs
# --------------------------------------------------------------------------

def readout_projection(ensemble: ClassicalSpinEnsemble, phi: float) -> np.ndarray:
    """Per-trajectory spin-averaged <S_phi> = cosφ·Sx + sinφ·Sy."""
    sx = ensemble.spins[0].mean(axis=0)
    sy = ensemble.spins[1].mean(axis=0)
    return math.cos(phi) * sx + math.sin(phi) * sy


def rotate_about_z(ensemble: ClassicalSpinEnsemble, angle: float
                   ) -> ClassicalSpinEnsemble:
    """Counterclockwise rotation of every spin about +z."""
    c, s = math.cos(angle), math.sin(angle)
    out = ensemble.spins.copy()
    out[0] = c * ensemble.spins[0] - s * ensemble.spins[1]
    out[1] = s * ensemble.spins[0] + c * ensemble.spins[1]
    return ClassicalSpinEnsemble(out, ensemble.scheme)


def _measure_planar(ens: ClassicalSpinEnsemble, couplings: CouplingMatrix,
                    protocol: RamseyProtocol, rtol: float, atol: float,
                    project_norms: bool):
    """Trajectory-resolved (Sx, Sy, Sz) with the protocol's readout."""
    phi0 = protocol.readout_phase
    if not protocol.include_pulses:
        s_a = readout_projection(ens, phi0)
        s_b = readout_projection(ens, phi0 + 0.5 * math.pi)
    else:
        read = []
        for phi in (phi0, phi0 + 0.5 * math.pi):
            ext = ExternalField(rabi=protocol.rabi,
                                detuning=protocol.detuning, phase=phi)
            rotated = integrate(ens.copy(), couplings, ext,
                                (0.0, protocol.pulse_time), rtol, atol,
                                project_norms=project_norms)
            read.append(rotated.spins[2].mean(axis=0))
        s_a, s_b = read
    # tomographic pair back to lab x/y components
    c, s = math.cos(phi0), math.sin(phi0)
    sx_traj = c * s_a - s * s_b
    sy_traj = s * s_a + c * s_b
    sz_traj = ens.spins[2].mean(axis=0)
    return sx_traj, sy_traj, sz_traj


def trajectory_observables(initial: ClassicalSpinEnsemble,
                           couplings: CouplingMatrix,
                           protocol: RamseyProtocol, times,
                           rtol: float = DEFAULT_RTOL,
                           atol: float = DEFAULT_ATOL,
                           project_norms: bool = False
                           ) -> tuple[dict, dict]:
    """Run the Ramsey sequence, keeping per-trajectory observables.

    Returns ``(obs, conservation)`` where ``obs`` maps sx/sy/sz to arrays
    of shape (n_times, n_traj). This is the deterministic unit the
    orchestrator combines over fixed trajectory blocks; conservation
    metrics are measured on the free-evolution segment.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or np.any(np.diff(times) < 0):
        raise ConfigError("times must be a non-decreasing 1-d grid")
    if times[0] < 0:
        raise ConfigError("times must be >= 0")
    ens = initial
    if protocol.include_pulses:
        prep = ExternalField(rabi=protocol.rabi, detuning=protocol.detuning,
                             phase=0.0)
        ens = integrate(ens, couplings, prep, (0.0, protocol.pulse_time),
                        rtol, atol, project_norms=project_norms)
    norms0 = ens.norms()
    snaps = integrate(ens, couplings, None, (0.0, float(times[-1])),
                      rtol, atol, t_eval=times, project_norms=project_norms)
    obs = {k: np.empty((times.size, initial.n_traj))
           for k in ("sx", "sy", "sz")}
    energy0 = classical_energy(snaps[0], couplings)
    e_scale = max(float(np.mean(np.abs(energy0))), 1e-30)
    norm_drift = 0.0
    energy_drift = 0.0
    for k, snap in enumerate(snaps):
        norm_drift = max(norm_drift,
                         float(np.abs(snap.norms() - norms0).max()))
        energy = classical_energy(snap, couplings)
        energy_drift = max(energy_drift,
                           float(np.mean(np.abs(energy - energy0))) / e_scale)
        sx_t, sy_t, sz_t = _measure_planar(snap, couplings, protocol,
                                           rtol, atol, project_norms)
        obs["sx"][k] = sx_t
        obs["sy"][k] = sy_t
        obs["sz"][k] = sz_t
    conservation = {"norm_drift": norm_drift,
                    "energy_drift_rel": energy_drift}
    return obs, conservation


def series_from_trajectories(times, obs: dict, meta: dict | None = None
                             ) -> ObservableSeries:
    """Reduce (n_times, n_traj) observables to means and standard errors."""
    times = np.asarray(times, dtype=float)
    n_traj = obs["sx"].shape[1]
    fields = {}
    for name in ("sx", "sy", "sz"):
        block = obs[name]
        fields[name] = block.mean(axis=1)
        fields[name + "_err"] = (
            block.std(axis=1, ddof=1) / math.sqrt(n_traj)
            if n_traj > 1 else np.zeros(times.size)
        )
    series = ObservableSeries(times=times.copy(), **fields)
    series.meta["n_traj"] = n_traj
    if meta:
        series.meta.update(meta)
    return series


def run_dtwa(couplings: CouplingMatrix, protocol: RamseyProtocol | None,
             n_traj: int, times, seed: int,
             rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
             project_norms: bool = False) -> ObservableSeries:
    """Full Ramsey sequence averaged over dTWA trajectories.

    With ``include_pulses`` the initial fluctuations are sampled around the
    all-down state and both π/2 pulses are integrated with interactions
    active; otherwise sampling is around +x and the readout is the ideal
    projection onto cosφ·Sx + sinφ·Sy. Standard errors are over
    trajectories.
    """
    protocol = protocol or RamseyProtocol.ideal()
    axis = "-z" if protocol.include_pulses else "+x"
    initial = sample_dtwa_initial(couplings.n, n_traj, seed, axis=axis)
    obs, conservation = trajectory_observables(
        initial, couplings, protocol, times, rtol, atol, project_norms)
    series = series_from_trajectories(times, obs, conservation)
    series.meta.update(scheme=Scheme.DTWA.value, seed=seed, rtol=rtol,
                       atol=atol, include_pulses=protocol.include_pulses)
    return series


def run_mean_field(couplings: CouplingMatrix, protocol: RamseyProtocol | None,
                   times, rtol: float = DEFAULT_RTOL,
                   atol: float = DEFAULT_ATOL,
                   project_norms: bool = False) -> ObservableSeries:
    """Single-trajectory mean-field evolution (no initial sampling)."""
    protocol = protocol or RamseyProtocol.ideal()
    axis = "-z" if protocol.include_pulses else "+x"
    initial = mean_field_initial(couplings.n, axis=axis)
    obs, conservation = trajectory_observables(
        initial, couplings, protocol, times, rtol, atol, project_norms)
    series = series_from_trajectories(times, obs, conservation)
    series.meta.update(scheme=Scheme.MEAN_FIELD.value, rtol=rtol, atol=atol,
                       include_pulses=protocol.include_pulses)
    return series


def emch_radin_ising(couplings, times) -> ObservableSeries:
    """Closed-form Ising dephasing <S_x^{(i)}> = 1/2 Π_j cos(2π J_ij t / 2).

    ``couplings`` may be a CouplingMatrix or a bare symmetric matrix; its
    entries are interpreted as the Ising (zz) couplings in MHz. The y and z
    components vanish identically for the +x initial state.
    """
    j = couplings.j if isinstance(couplings, CouplingMatrix) else np.asarray(
        couplings, dtype=float)
    n = j.shape[0]
    times = np.asarray(times, dtype=float)
    sx = np.empty(times.size)
    per_spin = np.empty((times.size, n))
    half_omega = 0.5 * OMEGA_PER_MHZ
    for k, t in enumerate(times):
        c = np.cos(half_omega * j * t)
        np.fill_diagonal(c, 1.0)
        per_spin[k] = 0.5 * np.prod(c, axis=1)
        sx[k] = per_spin[k].mean()
    series = ObservableSeries(times=times.copy(), sx=sx,
                              sy=np.zeros_like(sx), sz=np.zeros_like(sx),
                              per_spin=per_spin)
    series.meta["scheme"] = "emch_radin"
    return series
