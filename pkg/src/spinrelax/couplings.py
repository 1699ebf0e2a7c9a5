"""Power-law XXZ coupling matrices and the two-atom pair-state mapping.

Couplings follow J_ij = C6/r_ij⁶ with C6 stored in MHz·μm⁶ (ordinary
frequency; see :mod:`spinrelax.units`). The many-body Hamiltonian carries a
1/2 in front of an unrestricted double sum; internally every unordered pair
is stored once and summed once, absorbing that factor:

    H = Σ_{i<j} J_ij (SxSx + SySy + δ SzSz)   [+ detuning, external field]

A two-spin system with coupling J therefore has eigenvalues
{Jδ/4, Jδ/4, -Jδ/4 ± J/2}; a unit test pins this oscillation frequency so
nobody can silently double count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .disorder import SpinConfiguration, pairwise_distances
from .errors import ConfigError, DegenerateConfig, ZeroExchange

__all__ = [
    "XXZParameters", "CouplingMatrix", "PairMatrixElements", "ExternalField",
    "build_coupling_matrix", "pair_to_xxz", "pair_matrix_from_xxz",
]


@dataclass(frozen=True)
class XXZParameters:
    """Interaction constants of the spin model.

    ``c6`` in MHz·μm⁶ (the value quoted as C6/2π in angular-unit sources),
    ``delta`` the dimensionless zz anisotropy, ``delta_vdw`` the residual
    single-spin detuning in MHz. The detuning is off by default: it is an
    order of magnitude below the couplings at the operating point and only
    matters for sensitivity studies.
    """

    c6: float
    delta: float
    delta_vdw: float = 0.0
    include_detuning: bool = False

    def __post_init__(self):
        if not np.isfinite(self.c6) or self.c6 <= 0:
            raise ConfigError("c6 must be finite and > 0 (MHz um^6)")
        if not np.isfinite(self.delta):
            raise ConfigError("delta must be finite")


@dataclass(frozen=True)
class ExternalField:
    """Microwave drive (Ω sinφ Sx - Ω cosφ Sy + Δ Sz per spin), MHz."""

    rabi: float
    detuning: float = 0.0
    phase: float = 0.0

    def vector(self) -> np.ndarray:
        """Cartesian field components in MHz (nu)."""
        return np.array([
            self.rabi * np.sin(self.phase),
            -self.rabi * np.cos(self.phase),
            self.detuning,
        ])


@dataclass
class CouplingMatrix:
    """Symmetric N×N couplings (MHz) plus cached energy scales.

    ``ising_mode`` zeroes the flip-flop (xx+yy) channel while keeping the
    δ-weighted zz channel, so the same evolution engines serve the
    dephasing-only cross-check. ``delta_vdw`` (MHz) is the optional
    single-spin detuning; zero disables it.
    """

    j: np.ndarray
    delta: float
    j_max: float = field(init=False)
    j_mf_median: float = field(init=False)
    delta_vdw: float = 0.0
    ising_mode: bool = False

    def __post_init__(self):
        self.j = np.asarray(self.j, dtype=float)
        n = self.j.shape[0]
        if self.j.shape != (n, n):
            raise ConfigError("coupling matrix must be square")
        if not np.array_equal(self.j, self.j.T):
            raise ConfigError("coupling matrix must be exactly symmetric")
        if np.any(np.diag(self.j) != 0.0):
            raise ConfigError("coupling matrix must have a zero diagonal")
        off = self.j[np.triu_indices(n, k=1)]
        if off.size and np.any(off <= 0.0):
            raise ConfigError("couplings must be positive for distinct spins")
        self.j_max = float(off.max()) if off.size else 0.0
        self.j_mf_median = float(np.median(self.j.sum(axis=1))) if n > 1 else 0.0

    @property
    def n(self) -> int:
        return self.j.shape[0]

    def ising_copy(self) -> "CouplingMatrix":
        return CouplingMatrix(self.j.copy(), self.delta,
                              delta_vdw=self.delta_vdw, ising_mode=True)

    def submatrix(self, indices) -> "CouplingMatrix":
        sub = self.j[np.ix_(indices, indices)]
        return CouplingMatrix(sub, self.delta, delta_vdw=self.delta_vdw,
                              ising_mode=self.ising_mode)

    def save(self, path: str | Path, c6: float | None = None) -> None:
        n = self.n
        iu, ju = np.triu_indices(n, k=1)
        lines = ["spinrelax coupling matrix v1",
                 f"n: {n}", f"delta: {self.delta:.12g}",
                 f"delta_vdw_mhz: {self.delta_vdw:.12g}",
                 "convention: J in MHz (nu); pair stored once"]
        if c6 is not None:
            lines.insert(2, f"c6_mhz_um6: {c6:.12g}")
        lines.append("columns: i j J_mhz")
        body = np.column_stack([iu, ju, self.j[iu, ju]])
        np.savetxt(path, body, header="\n".join(lines),
                   fmt=["%d", "%d", "%.16e"])


def build_coupling_matrix(config: SpinConfiguration, params: XXZParameters,
                          min_image_box=None) -> CouplingMatrix:
    """J_ij = C6/r_ij⁶ from positions; raises on coincident spins."""
    d = pairwise_distances(config.positions, min_image_box)
    n = config.n
    off_diag = ~np.eye(n, dtype=bool)
    if np.any(d[off_diag] == 0.0):
        raise DegenerateConfig("coincident spins give divergent couplings")
    j = np.zeros_like(d)
    j[off_diag] = params.c6 / d[off_diag] ** 6
    j = 0.5 * (j + j.T)  # exact symmetry against floating-point asymmetries
    return CouplingMatrix(
        j, params.delta,
        delta_vdw=params.delta_vdw if params.include_detuning else 0.0,
    )


@dataclass(frozen=True)
class PairMatrixElements:
    """Diagonal pair-state energies and the exchange element (MHz).

    ``j_ex`` is the matrix element <up,down|H|down,up> coupling the two
    single-excitation pair states.
    """

    e_uu: float
    e_du: float
    e_dd: float
    j_ex: float

    def __post_init__(self):
        for name in ("e_uu", "e_du", "e_dd", "j_ex"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")


def pair_to_xxz(elements: PairMatrixElements) -> tuple[float, float, float]:
    """Map pair-state matrix elements to (J, δ, Δ_vdW).

    J = 2 J_ex, δ = (E_dd + E_uu - 2 E_du)/J, Δ_vdW = (E_dd - E_uu)/2.
    """
    if elements.j_ex == 0.0:
        raise ZeroExchange("anisotropy is undefined for zero exchange")
    j = 2.0 * elements.j_ex
    delta = (elements.e_dd + elements.e_uu - 2.0 * elements.e_du) / j
    delta_vdw = (elements.e_dd - elements.e_uu) / 2.0
    return j, delta, delta_vdw


def pair_matrix_from_xxz(j: float, delta: float, delta_vdw: float = 0.0,
                         e_du: float = 0.0) -> np.ndarray:
    """Rebuild the 4×4 two-atom matrix in the (uu, ud, du, dd) basis.

    The inverse of :func:`pair_to_xxz` in the gauge fixed by ``e_du``. The
    off-diagonal entries are J_ex = J/2, i.e. the exchange matrix element
    itself. Spin-up pair states sit *below* spin-down ones for positive
    ``delta_vdw``, matching Δ_vdW = (E_dd - E_uu)/2.
    """
    e_uu = e_du + 0.5 * delta * j - delta_vdw
    e_dd = e_du + 0.5 * delta * j + delta_vdw
    j_ex = 0.5 * j
    return np.array([
        [e_uu, 0.0, 0.0, 0.0],
        [0.0, e_du, j_ex, 0.0],
        [0.0, j_ex, e_du, 0.0],
        [0.0, 0.0, 0.0, e_dd],
    ])
