"""Exact quantum evolution for small spin counts.

State vectors live on the 2^N bitstring basis: bit i of the basis index is
spin i (little-endian), bit value 1 means spin up, and Sz|up> = +|up>/2.
The Hamiltonian is applied matrix-free: a precomputed diagonal carries the
zz channel plus any detunings, and each coupled pair (i, j) exchanges
amplitude between the 01 and 10 bit patterns with weight J_ij/2.

Energies are ordinary frequencies in MHz; propagators use the phase
2π·H·t with t in μs (:data:`spinrelax.units.OMEGA_PER_MHZ` enters only
there).

Three propagation paths:

* ``krylov`` -- adaptive Lanczos stepping, tolerance on the propagated
  vector (default path, required once pulses make H time dependent).
* ``dense`` -- full eigendecomposition; the brute-force oracle for N <= 8.
* ``sector`` -- eigendecomposition inside conserved total-Sz blocks; only
  valid without a transverse drive, but much faster for long time series,
  which is what disorder-averaged relaxation studies need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .couplings import CouplingMatrix, ExternalField
from .curves import ObservableSeries
from .errors import (
    ConfigError,
    ConvergenceFailure,
    DimensionMismatch,
    IndexOutOfRange,
)
from .protocol import RamseyProtocol
from .units import OMEGA_PER_MHZ

__all__ = [
    "QuantumStateVector", "apply_hamiltonian", "evolve_exact",
    "evolve_series", "magnetization", "renyi_entropy", "mean_renyi_entropy",
    "total_sz", "energy_expectation", "evolve_mace", "EXACT_CAP",
]

#: Default cap on exact spin counts (2^14 amplitudes ~ 0.26 MB).
EXACT_CAP = 14


@dataclass
class QuantumStateVector:
    """2^n complex amplitudes over the spin-bitstring basis."""

    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2 ** self.n,):
            raise ConfigError(
                f"state for n={self.n} needs {2**self.n} amplitudes"
            )

    @classmethod
    def x_polarized(cls, n: int) -> "QuantumStateVector":
        """|->>^n: every spin along +x (uniform amplitudes)."""
        dim = 2 ** n
        return cls(n, np.full(dim, dim ** -0.5, dtype=complex))

    @classmethod
    def all_up(cls, n: int) -> "QuantumStateVector":
        amps = np.zeros(2 ** n, dtype=complex)
        amps[-1] = 1.0
        return cls(n, amps)

    @classmethod
    def all_down(cls, n: int) -> "QuantumStateVector":
        amps = np.zeros(2 ** n, dtype=complex)
        amps[0] = 1.0
        return cls(n, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def validate(self, tol: float = 1e-10) -> None:
        """Norm drift is an error signal; renormalizing would hide it."""
        drift = abs(self.norm() - 1.0)
        if drift > tol:
            raise ConvergenceFailure(f"state norm drifted by {drift:.3e}")


@lru_cache(maxsize=8)
def _bit_values(n: int) -> np.ndarray:
    """(2^n, n) array of bits; bit i of basis index b at column i."""
    basis = np.arange(2 ** n, dtype=np.int64)
    return ((basis[:, None] >> np.arange(n)) & 1).astype(np.float64)


class XXZHamiltonian:
    """Matrix-free H (MHz) for one coupling matrix and optional drive."""

    def __init__(self, couplings: CouplingMatrix,
                 ext: ExternalField | None = None):
        self.n = couplings.n
        self.couplings = couplings
        self.ext = ext
        dim = 2 ** self.n
        bits = _bit_values(self.n)
        z = bits - 0.5
        j = couplings.j
        # zz channel: delta * sum_{i<j} J_ij z_i z_j
        self.diag = 0.5 * couplings.delta * ((z @ j) * z).sum(axis=1)
        if couplings.delta_vdw:
            # sign fixed by Delta_vdW = (E_dd - E_uu)/2: up-up pairs shift down
            self.diag -= couplings.delta_vdw * z.sum(axis=1)
        self._pairs = []
        if not couplings.ising_mode:
            basis = np.arange(dim, dtype=np.int64)
            for i in range(self.n):
                for k in range(i + 1, self.n):
                    # states with bit_i = 0, bit_k = 1; partner swaps the pair
                    sel = basis[(bits[:, i] == 0.0) & (bits[:, k] == 1.0)]
                    partner = sel + (1 << i) - (1 << k)
                    self._pairs.append((sel, partner, 0.5 * j[i, k]))
        self._drive = None
        if ext is not None and (ext.rabi != 0.0 or ext.detuning != 0.0):
            if ext.detuning:
                self.diag = self.diag + ext.detuning * z.sum(axis=1)
            if ext.rabi != 0.0:
                # <b^i|H|b> for raising is Omega(sin phi + i cos phi)/2
                up = 0.5 * ext.rabi * (np.sin(ext.phase) + 1j * np.cos(ext.phase))
                flips = [np.arange(dim, dtype=np.int64) ^ (1 << i)
                         for i in range(self.n)]
                self._drive = (np.stack(flips), up, bits)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        out = self.diag * psi
        for sel, partner, w in self._pairs:
            out[partner] += w * psi[sel]
            out[sel] += w * psi[partner]
        if self._drive is not None:
            flips, up, bits = self._drive
            for i in range(self.n):
                coeff = np.where(bits[:, i] == 1.0, up, np.conj(up))
                out += coeff * psi[flips[i]]
        return out

    def norm_bound(self) -> float:
        """Cheap upper bound on the spectral radius (MHz)."""
        bound = float(np.abs(self.diag).max())
        bound += 0.5 * float(self.couplings.j.sum(axis=1).max())
        if self.ext is not None:
            bound += 0.5 * abs(self.ext.rabi) * self.n
        return bound

    def dense(self) -> np.ndarray:
        dim = 2 ** self.n
        h = np.zeros((dim, dim), dtype=complex)
        h[np.diag_indices(dim)] = self.diag
        for sel, partner, w in self._pairs:
            h[partner, sel] += w
            h[sel, partner] += w
        if self._drive is not None:
            flips, up, bits = self._drive
            for i in range(self.n):
                coeff = np.where(bits[:, i] == 1.0, up, np.conj(up))
                h[np.arange(dim), flips[i]] += coeff
        return h

    @property
    def sz_conserved(self) -> bool:
        return self.ext is None or self.ext.rabi == 0.0


def apply_hamiltonian(state: QuantumStateVector, couplings: CouplingMatrix,
                      ext: ExternalField | None = None) -> QuantumStateVector:
    """Return H|ψ> (an unnormalized vector in the same basis)."""
    if state.n != couplings.n:
        raise DimensionMismatch(
            f"state has {state.n} spins, couplings {couplings.n}"
        )
    h = XXZHamiltonian(couplings, ext)
    return QuantumStateVector(state.n, h.apply(state.amplitudes.copy()))


# --------------------------------------------------------------------------
# propagators
# --------------------------------------------------------------------------

def _lanczos_step(h: XXZHamiltonian, psi: np.ndarray, theta: float,
                  m: int, tol: float):
    """One Krylov step of phase ``theta`` (rad); returns (psi', err, beta)."""
    dim = psi.size
    m = min(m, dim)
    nrm = np.linalg.norm(psi)
    v = np.empty((m, dim), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    v[0] = psi / nrm
    w = h.apply(v[0])
    alpha[0] = np.vdot(v[0], w).real
    w -= alpha[0] * v[0]
    k_used = m
    happy = False
    for k in range(1, m):
        beta[k] = np.linalg.norm(w)
        if beta[k] < 1e-14 * max(1.0, float(np.abs(alpha[:k]).max())):
            k_used, happy = k, True
            break
        v[k] = w / beta[k]
        w = h.apply(v[k])
        w -= beta[k] * v[k - 1]
        alpha[k] = np.vdot(v[k], w).real
        w -= alpha[k] * v[k]
        # full reorthogonalization keeps the small basis numerically clean
        w -= v[: k + 1].T @ (v[: k + 1].conj() @ w)
    beta_next = np.linalg.norm(w)
    evals, evecs = np.linalg.eigh(
        np.diag(alpha[:k_used]) + np.diag(beta[1:k_used], 1)
        + np.diag(beta[1:k_used], -1)
    )
    u = evecs @ (np.exp(-1j * theta * evals) * evecs[0].conj())
    err = 0.0 if happy else float(beta_next * abs(u[-1]) * abs(theta))
    return nrm * (u @ v[:k_used]), err, happy


def _krylov_evolve(h: XXZHamiltonian, psi: np.ndarray, t: float,
                   tol: float, m: int = 30) -> np.ndarray:
    """e^{-2πi H t}|ψ> with adaptive substeps; tol bounds the 2-norm error."""
    if t == 0.0:
        return psi.copy()
    theta_total = OMEGA_PER_MHZ * t * max(h.norm_bound(), 1e-30)
    n_sub = max(1, int(math.ceil(theta_total / (0.5 * m))))
    dt = t / n_sub
    psi = psi.copy()
    remaining = t
    while remaining > 1e-15 * t:
        dt = min(dt, remaining)
        for _ in range(60):
            cand, err, happy = _lanczos_step(
                h, psi, OMEGA_PER_MHZ * dt, m, tol
            )
            budget = tol * (dt / t)
            if happy or err <= budget:
                break
            dt *= 0.5
            if dt < 1e-12 * t:
                raise ConvergenceFailure(
                    f"Krylov step underflow at residual {err:.3e}"
                )
        else:
            raise ConvergenceFailure("Krylov refinement did not converge")
        psi = cand
        remaining -= dt
        if not happy and err < 0.1 * budget:
            dt *= 1.6
    return psi


class _SpectralEvolver:
    """Dense or Sz-sector eigendecomposition, reusable across many times."""

    def __init__(self, h: XXZHamiltonian, sector: bool):
        dim = 2 ** h.n
        self.blocks = []
        if not sector:
            evals, evecs = np.linalg.eigh(h.dense())
            self.blocks.append((np.arange(dim), evals, evecs))
            return
        if not h.sz_conserved:
            raise ConfigError("sector evolution requires a z-conserving H")
        bits = _bit_values(h.n)
        pop = bits.sum(axis=1).astype(int)
        for k in range(h.n + 1):
            states = np.flatnonzero(pop == k)
            hk = np.zeros((states.size, states.size))
            hk[np.diag_indices(states.size)] = h.diag[states]
            for sel, partner, w in h._pairs:
                inside = pop[sel] == k
                rows = np.searchsorted(states, sel[inside])
                cols = np.searchsorted(states, partner[inside])
                hk[rows, cols] += w
                hk[cols, rows] += w
            evals, evecs = np.linalg.eigh(hk)
            self.blocks.append((states, evals, evecs))

    def prepare(self, psi: np.ndarray):
        return [evecs.conj().T @ psi[states]
                for states, evals, evecs in self.blocks]

    def at(self, coeffs, t: float, out: np.ndarray) -> np.ndarray:
        for (states, evals, evecs), c in zip(self.blocks, coeffs):
            out[states] = evecs @ (np.exp(-1j * OMEGA_PER_MHZ * t * evals) * c)
        return out


def evolve_exact(state: QuantumStateVector, couplings: CouplingMatrix,
                 ext: ExternalField | None = None, t: float = 0.0,
                 tol: float = 1e-10, method: str = "auto",
                 cap: int = EXACT_CAP) -> QuantumStateVector:
    """Propagate |ψ> by e^{-2πi H t} (t in μs, H in MHz).

    ``method`` is one of ``auto`` (Krylov), ``krylov``, ``dense`` or
    ``sector``; the dense path is the brute-force oracle used by the tests
    for small N.
    """
    if state.n != couplings.n:
        raise DimensionMismatch(
            f"state has {state.n} spins, couplings {couplings.n}"
        )
    if state.n > cap:
        raise ConfigError(f"n={state.n} exceeds the exact cap {cap}")
    if t < 0:
        raise ConfigError("evolution time must be >= 0")
    h = XXZHamiltonian(couplings, ext)
    if method in ("auto", "krylov"):
        amps = _krylov_evolve(h, state.amplitudes, t, tol)
    elif method in ("dense", "sector"):
        ev = _SpectralEvolver(h, sector=(method == "sector"))
        coeffs = ev.prepare(state.amplitudes)
        amps = ev.at(coeffs, t, np.empty_like(state.amplitudes))
    else:
        raise ConfigError(f"unknown method {method!r}")
    return QuantumStateVector(state.n, amps)


# --------------------------------------------------------------------------
# observables
# --------------------------------------------------------------------------

def _check_spin_index(n: int, i: int) -> None:
    if not 0 <= i < n:
        raise IndexOutOfRange(f"spin index {i} outside [0, {n})")


def magnetization(state: QuantumStateVector, axis: str = "x"
                  ) -> tuple[np.ndarray, float]:
    """Per-spin <S_axis^{(i)}> and their mean."""
    psi = state.amplitudes
    n = state.n
    bits = _bit_values(n)
    per_spin = np.empty(n)
    if axis == "z":
        prob = np.abs(psi) ** 2
        per_spin[:] = prob @ (bits - 0.5)
    elif axis in ("x", "y"):
        basis = np.arange(2 ** n, dtype=np.int64)
        for i in range(n):
            overlap = psi.conj() * psi[basis ^ (1 << i)]
            if axis == "x":
                per_spin[i] = 0.5 * overlap.sum().real
            else:
                # (S_y psi)(b) = (i/2)(1 - 2 bit_i(b)) psi(b ^ 2^i)
                sign = 1.0 - 2.0 * bits[:, i]
                per_spin[i] = (0.5j * (sign * overlap).sum()).real
    else:
        raise ConfigError(f"axis must be x, y or z, not {axis!r}")
    return per_spin, float(per_spin.mean())


def total_sz(state: QuantumStateVector) -> float:
    bits = _bit_values(state.n)
    prob = np.abs(state.amplitudes) ** 2
    return float(prob @ (bits.sum(axis=1) - 0.5 * state.n))


def energy_expectation(state: QuantumStateVector, couplings: CouplingMatrix,
                       ext: ExternalField | None = None) -> float:
    """<H> in MHz."""
    h = XXZHamiltonian(couplings, ext)
    return float(np.vdot(state.amplitudes, h.apply(state.amplitudes)).real)


def renyi_entropy(state: QuantumStateVector, i: int) -> float:
    """Second-order Rényi entropy -log2 Tr(ρ_i²) of one spin, in [0, 1]."""
    _check_spin_index(state.n, i)
    psi = state.amplitudes
    mask = _bit_values(state.n)[:, i] == 1.0
    a1 = psi[mask]
    a0 = psi[~mask]
    r00 = float(np.vdot(a0, a0).real)
    r11 = float(np.vdot(a1, a1).real)
    r01 = complex(np.vdot(a1, a0))  # <up|rho|down> up to ordering
    purity = r00**2 + r11**2 + 2.0 * abs(r01) ** 2
    norm = r00 + r11
    purity /= norm**2
    return float(-np.log2(min(max(purity, 0.5), 1.0)))


def mean_renyi_entropy(state: QuantumStateVector) -> float:
    return float(np.mean([renyi_entropy(state, i) for i in range(state.n)]))


# --------------------------------------------------------------------------
# time series and MACE
# --------------------------------------------------------------------------

def evolve_series(state: QuantumStateVector, couplings: CouplingMatrix,
                  times, ext: ExternalField | None = None,
                  tol: float = 1e-10, method: str = "auto",
                  entropy: bool = False, per_spin: bool = False,
                  cap: int = EXACT_CAP) -> ObservableSeries:
    """Observables along an increasing time grid (free evolution).

    With a z-conserving Hamiltonian the default path is one sector-blocked
    eigendecomposition reused for every output time; otherwise Krylov steps
    connect consecutive grid points.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0) or times[0] < 0:
        raise ConfigError("times must be a non-decreasing grid of t >= 0")
    if state.n > cap:
        raise ConfigError(f"n={state.n} exceeds the exact cap {cap}")
    if state.n != couplings.n:
        raise DimensionMismatch(
            f"state has {state.n} spins, couplings {couplings.n}"
        )
    h = XXZHamiltonian(couplings, ext)
    if method == "auto":
        method = "sector" if h.sz_conserved else "krylov"
    out = {k: np.empty(times.size) for k in ("sx", "sy", "sz")}
    ent = np.empty(times.size) if entropy else None
    spins = np.empty((times.size, state.n)) if per_spin else None
    norms = np.empty(times.size)
    sz_tot = np.empty(times.size)
    energies = np.empty(times.size)

    def record(k, psi_t):
        snap = QuantumStateVector(state.n, psi_t)
        for axis in ("sx", "sy", "sz"):
            vals, mean = magnetization(snap, axis[-1])
            out[axis][k] = mean
            if per_spin and axis == "sx":
                spins[k] = vals
        if entropy:
            ent[k] = mean_renyi_entropy(snap)
        norms[k] = snap.norm()
        sz_tot[k] = total_sz(snap)
        energies[k] = float(np.vdot(psi_t, h.apply(psi_t)).real)

    if method in ("sector", "dense"):
        ev = _SpectralEvolver(h, sector=(method == "sector"))
        coeffs = ev.prepare(state.amplitudes)
        buf = np.empty_like(state.amplitudes)
        for k, t in enumerate(times):
            record(k, ev.at(coeffs, t, buf))
    elif method == "krylov":
        psi = state.amplitudes.copy()
        t_prev = 0.0
        for k, t in enumerate(times):
            psi = _krylov_evolve(h, psi, t - t_prev, tol)
            t_prev = t
            record(k, psi)
    else:
        raise ConfigError(f"unknown method {method!r}")

    series = ObservableSeries(times=times.copy(), sx=out["sx"],
                              sy=out["sy"], sz=out["sz"],
                              entropy=ent, per_spin=spins)
    series.meta["norm_drift"] = float(np.abs(norms - norms[0]).max())
    series.meta["sz_total_drift"] = float(np.abs(sz_tot - sz_tot[0]).max())
    scale = max(abs(energies[0]), couplings.j_max, 1e-30)
    series.meta["energy_drift_rel"] = float(
        np.abs(energies - energies[0]).max() / scale
    )
    series.meta["method"] = method
    return series


def prepare_ramsey_state(n: int, couplings: CouplingMatrix,
                         protocol: RamseyProtocol | None, tol: float = 1e-10
                         ) -> QuantumStateVector:
    """Ideal +x product state, or the pulse-prepared imperfect one."""
    if protocol is None or not protocol.include_pulses:
        return QuantumStateVector.x_polarized(n)
    ext = ExternalField(rabi=protocol.rabi, detuning=protocol.detuning,
                        phase=0.0)
    state = QuantumStateVector.all_down(n)
    return evolve_exact(state, couplings, ext=ext, t=protocol.pulse_time,
                        tol=tol, method="krylov")


def evolve_mace(couplings: CouplingMatrix, cluster_size: int,
                protocol: RamseyProtocol | None, times,
                tol: float = 1e-10, cap: int = EXACT_CAP,
                entropy: bool = False) -> ObservableSeries:
    """Moving-average cluster expansion over strongest-coupled clusters.

    Every spin is evolved exactly inside the cluster of itself plus its
    ``cluster_size - 1`` strongest partners (ties to the smaller index),
    and contributes only its own single-spin observables; the ensemble mean
    runs over all spins.
    """
    n = couplings.n
    if not 1 <= cluster_size <= min(n, cap):
        raise ConfigError(
            f"cluster_size must lie in [1, min(n, cap)={min(n, cap)}]"
        )
    times = np.asarray(times, dtype=float)
    acc = {k: np.zeros((times.size, n)) for k in ("sx", "sy", "sz")}
    ent = np.zeros((times.size, n)) if entropy else None
    for i in range(n):
        if cluster_size == 1:
            members = [i]
        else:
            order = np.argsort(-couplings.j[i], kind="stable")
            partners = [int(p) for p in order if p != i][: cluster_size - 1]
            members = sorted(partners + [i])
        local = members.index(i)
        sub = couplings.submatrix(members)
        state = _prepare_initial(len(members), sub, protocol, tol)
        h = XXZHamiltonian(sub)
        ev = _SpectralEvolver(h, sector=True)
        coeffs = ev.prepare(state.amplitudes)
        buf = np.empty_like(state.amplitudes)
        for k, t in enumerate(times):
            snap = QuantumStateVector(len(members), ev.at(coeffs, t, buf))
            for axis in ("x", "y", "z"):
                vals, _ = magnetization(snap, axis)
                acc["s" + axis][k, i] = vals[local]
            if entropy:
                ent[k, i] = renyi_entropy(snap, local)
    series = ObservableSeries(
        times=times.copy(),
        sx=acc["sx"].mean(axis=1), sy=acc["sy"].mean(axis=1),
        sz=acc["sz"].mean(axis=1),
        entropy=ent.mean(axis=1) if entropy else None,
        per_spin=acc["sx"],
    )
    series.meta["cluster_size"] = cluster_size
    return series
