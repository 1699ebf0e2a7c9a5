"""Random spin configurations with blockade constraints, and disorder metrics.

Two samplers produce spin positions:

* :func:`sample_blockaded_box` -- uniform points in a box, rejected when
  closer than the blockade radius to an accepted point, until the target
  count is reached.
* :func:`sample_gaussian_cloud` -- an excitation model for a trapped cloud:
  ground-state atoms drawn from an anisotropic Gaussian are excited one at a
  time with a probability set by the excitation-beam profile times a
  collective enhancement factor, zeroed inside the blockade radius of an
  existing excitation.

Disorder strength is quantified through nearest-neighbour / mean-field
coupling distributions, their Kullback-Leibler divergence from the
unconstrained (Hertz) reference, and the median mean-field energy scale
``J_mf = median_i(C6 * sum_j r_ij^-6)`` with its effective radius
``a_tilde = (C6/J_mf)^(1/6)``.

All randomness flows through :class:`numpy.random.Philox`, a counter-based
generator: identical (geometry, seed) inputs reproduce configurations
bit-for-bit, and distinct seeds give independent streams.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import (
    BinningMismatch,
    ConfigError,
    DegenerateConfig,
    DomainError,
    PackingInfeasible,
    TargetUnreachable,
)

__all__ = [
    "GeometryKind", "CloudGeometry", "SpinConfiguration", "BinSpec",
    "CouplingDistribution", "Provenance", "sample_blockaded_box",
    "sample_gaussian_cloud", "wigner_seitz_radius", "hertz_density",
    "hertz_cdf", "coupling_values", "coupling_distribution",
    "pooled_coupling_distribution", "hertz_coupling_distribution",
    "kl_divergence", "mean_field_scale", "pairwise_distances",
    "sqrt_enhancement",
]

#: Maximum blockade-sphere packing fraction accepted by the box sampler.
MAX_PACKING_FRACTION = 0.3

#: Consecutive-rejection budget per requested spin before giving up.
REJECTION_LIMIT_PER_SPIN = 10_000


class GeometryKind(enum.Enum):
    GAUSSIAN_CLOUD = "gaussian_cloud"
    UNIFORM_BOX = "uniform_box"


class Provenance(enum.Enum):
    """Which per-spin coupling statistic a distribution was built from."""

    NEAREST_NEIGHBOR = "nearest_neighbor"
    MEAN_FIELD = "mean_field"


@dataclass(frozen=True)
class CloudGeometry:
    """Sampling region, excitation profile and blockade constraint.

    Lengths are in μm, densities in μm^-3. Exactly one of ``n_spins`` /
    ``density`` must be given as the target. For a uniform box ``extents``
    holds the edge lengths; for a Gaussian cloud ``sigmas`` holds the
    ground-cloud e^{-1/2} radii and ``laser_sigma`` the e^{-1/2} radius of
    the two-photon Rabi frequency of the excitation beam (assumed to
    propagate along x). ``ground_density`` is the peak density of the
    ground-state cloud the excitation model draws candidates from.
    """

    kind: GeometryKind
    r_bl: float
    n_spins: int | None = None
    density: float | None = None
    extents: tuple[float, float, float] | None = None
    sigmas: tuple[float, float, float] | None = None
    laser_sigma: float | None = None
    ground_density: float = 0.179  # Table-scale trapped-cloud peak, μm^-3

    def __post_init__(self):
        if self.r_bl < 0:
            raise ConfigError("blockade radius must be >= 0")
        if (self.n_spins is None) == (self.density is None):
            raise ConfigError("give exactly one of n_spins or density")
        if self.n_spins is not None and self.n_spins < 1:
            raise ConfigError("target spin count must be >= 1")
        if self.density is not None and self.density <= 0:
            raise ConfigError("target density must be > 0")
        if self.kind is GeometryKind.UNIFORM_BOX:
            if self.extents is None or any(e <= 0 for e in self.extents):
                raise ConfigError("box extents must be three positive lengths")
        else:
            if self.sigmas is None or any(s <= 0 for s in self.sigmas):
                raise ConfigError("cloud sigmas must be three positive lengths")
            if self.laser_sigma is None or self.laser_sigma <= 0:
                raise ConfigError("laser_sigma must be a positive length")
            if self.ground_density <= 0:
                raise ConfigError("ground_density must be > 0")

    @classmethod
    def uniform_box(cls, extents, r_bl, n_spins=None, density=None) -> "CloudGeometry":
        return cls(kind=GeometryKind.UNIFORM_BOX, r_bl=r_bl,
                   n_spins=n_spins, density=density,
                   extents=tuple(float(e) for e in extents))

    @classmethod
    def gaussian_cloud(cls, sigmas, laser_sigma, r_bl, n_spins=None,
                       density=None, ground_density=0.179) -> "CloudGeometry":
        return cls(kind=GeometryKind.GAUSSIAN_CLOUD, r_bl=r_bl,
                   n_spins=n_spins, density=density,
                   sigmas=tuple(float(s) for s in sigmas),
                   laser_sigma=float(laser_sigma),
                   ground_density=float(ground_density))

    @property
    def volume(self) -> float:
        if self.kind is not GeometryKind.UNIFORM_BOX:
            raise ConfigError("volume is defined for boxes only")
        ex = self.extents
        return ex[0] * ex[1] * ex[2]

    def spin_profile_sigmas(self) -> tuple[float, float, float]:
        """Gaussian radii of the unconstrained spin profile (cloud × beam²).

        The excitation probability carries the squared beam Rabi profile,
        so the product density is Gaussian with
        1/σ_yz² = 1/σ_cloud² + 2/σ_L² transverse to the beam axis.
        """
        sx, sy, sz = self.sigmas
        sl = self.laser_sigma
        syz = lambda s: 1.0 / math.sqrt(1.0 / s**2 + 2.0 / sl**2)
        return (sx, syz(sy), syz(sz))

    def target_count(self) -> int:
        """Resolve the target spin number from count or density."""
        if self.n_spins is not None:
            return int(self.n_spins)
        if self.kind is GeometryKind.UNIFORM_BOX:
            return max(1, int(round(self.density * self.volume)))
        # Gaussian cloud with a peak-density target: convert through the
        # unconstrained profile volume (estimate; blockade reduces the peak).
        sp = self.spin_profile_sigmas()
        v_eff = (2.0 * math.pi) ** 1.5 * sp[0] * sp[1] * sp[2]
        return max(1, int(round(self.density * v_eff)))

    def nominal_density(self) -> float:
        """Density used for default binning and rescaling (μm^-3)."""
        if self.kind is GeometryKind.UNIFORM_BOX:
            return self.target_count() / self.volume
        if self.density is not None:
            return self.density
        sp = self.spin_profile_sigmas()
        v_eff = (2.0 * math.pi) ** 1.5 * sp[0] * sp[1] * sp[2]
        return self.target_count() / v_eff

    def header_items(self) -> list[tuple[str, str]]:
        items = [("kind", self.kind.value), ("r_bl_um", f"{self.r_bl:g}")]
        if self.kind is GeometryKind.UNIFORM_BOX:
            items.append(("box_um", "x".join(f"{e:g}" for e in self.extents)))
        else:
            items.append(("sigmas_um", "x".join(f"{s:g}" for s in self.sigmas)))
            items.append(("laser_sigma_um", f"{self.laser_sigma:g}"))
            items.append(("ground_density_um3", f"{self.ground_density:g}"))
        if self.n_spins is not None:
            items.append(("target_n", str(self.n_spins)))
        else:
            items.append(("target_density_um3", f"{self.density:g}"))
        return items


@dataclass
class SpinConfiguration:
    """Positions (μm) of the sampled spins plus their provenance."""

    positions: np.ndarray
    geometry: CloudGeometry
    seed: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if self.positions.shape[1] != 3:
            raise ConfigError("positions must be an (N, 3) array")
        if not np.all(np.isfinite(self.positions)):
            raise ConfigError("positions must be finite")

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    def min_pair_distance(self) -> float:
        if self.n < 2:
            return math.inf
        d = pairwise_distances(self.positions)
        return float(d[np.triu_indices(self.n, k=1)].min())

    def nearest_neighbor_distances(self, min_image_box=None) -> np.ndarray:
        d = pairwise_distances(self.positions, min_image_box)
        np.fill_diagonal(d, np.inf)
        return d.min(axis=1)

    def save(self, path: str | Path) -> None:
        lines = ["spinrelax configuration v1",
                 f"seed: {self.seed}", f"n: {self.n}"]
        lines += [f"{k}: {v}" for k, v in self.geometry.header_items()]
        for key in sorted(self.meta):
            lines.append(f"{key}: {self.meta[key]}")
        lines.append("columns: index x_um y_um z_um")
        body = np.column_stack([np.arange(self.n), self.positions])
        np.savetxt(path, body, header="\n".join(lines),
                   fmt=["%d", "%.12e", "%.12e", "%.12e"])


def pairwise_distances(positions: np.ndarray, min_image_box=None) -> np.ndarray:
    """Full (N, N) distance matrix; optionally with minimum-image wrapping.

    ``min_image_box`` gives box edge lengths for periodic wrapping; the
    default (None) is open boundaries, matching the samplers.
    """
    delta = positions[:, None, :] - positions[None, :, :]
    if min_image_box is not None:
        box = np.asarray(min_image_box, dtype=float)
        delta -= box * np.round(delta / box)
    return np.sqrt((delta**2).sum(axis=-1))


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def sample_blockaded_box(geometry: CloudGeometry, seed: int) -> SpinConfiguration:
    """Rejection-sample spins in a uniform box with a hard-core constraint.

    Raises :class:`PackingInfeasible` when the blockade spheres cannot fit
    (packing fraction >= 0.3) or when the sampler exhausts its rejection
    budget.
    """
    if geometry.kind is not GeometryKind.UNIFORM_BOX:
        raise ConfigError("sample_blockaded_box needs a UniformBox geometry")
    n_target = geometry.target_count()
    ext = np.asarray(geometry.extents)
    r_bl = geometry.r_bl
    packing = n_target * (4.0 * math.pi / 3.0) * (r_bl / 2.0) ** 3 / geometry.volume
    if packing >= MAX_PACKING_FRACTION:
        raise PackingInfeasible(
            f"packing fraction {packing:.3f} >= {MAX_PACKING_FRACTION} "
            f"for {n_target} spins with R_bl={r_bl} um"
        )
    rng = _rng(seed)
    accepted = np.empty((n_target, 3))
    n_acc = 0
    rejections = 0
    limit = REJECTION_LIMIT_PER_SPIN * n_target
    r2 = r_bl * r_bl
    # fixed-size candidate blocks keep the stream identical across runs
    block = 512
    while n_acc < n_target:
        cands = rng.random((block, 3)) * ext
        for cand in cands:
            if n_acc == n_target:
                break
            if r_bl > 0.0 and n_acc:
                d2 = ((accepted[:n_acc] - cand) ** 2).sum(axis=1)
                if d2.min() < r2:
                    rejections += 1
                    if rejections > limit:
                        raise PackingInfeasible(
                            f"acceptance stalled after {rejections} consecutive "
                            f"rejections ({n_acc}/{n_target} spins placed)"
                        )
                    continue
            accepted[n_acc] = cand
            n_acc += 1
            rejections = 0
    config = SpinConfiguration(accepted, geometry, seed)
    config.meta["realized_density_um3"] = f"{n_target / geometry.volume:.6e}"
    return config


def sqrt_enhancement(cap: float = 10.0) -> Callable[[np.ndarray], np.ndarray]:
    """Collective enhancement from the atoms sharing a blockade sphere.

    The excitation probability is boosted by sqrt(n_bl) -- the collectively
    enhanced Rabi coupling of n_bl candidate atoms -- capped to keep single
    outliers from dominating.
    """

    def factor(n_bl):
        return np.minimum(np.sqrt(np.maximum(n_bl, 1)), cap)

    return factor


def sample_gaussian_cloud(
    geometry: CloudGeometry,
    peak_rabi_scale: float,
    seed: int,
    enhancement: Callable[[np.ndarray], np.ndarray] | None = None,
    max_stale_attempts: int = 100_000,
) -> SpinConfiguration:
    """Excite spins out of a Gaussian cloud under the blockade constraint.

    Ground-state atoms are drawn from the anisotropic cloud; candidates are
    picked uniformly at random and excited with probability

        p = min(1, peak_rabi_scale² · exp(-(y²+z²)/σ_L²) · f(n_bl))

    where the Gaussian factor is the squared beam Rabi profile, ``f`` the
    collective enhancement (default sqrt(n_bl), capped) counting ground
    atoms inside the blockade sphere, and p is forced to zero within
    ``r_bl`` of an accepted excitation. Sampling stops at the target count;
    :class:`TargetUnreachable` is raised when acceptance stalls first.
    """
    if geometry.kind is not GeometryKind.GAUSSIAN_CLOUD:
        raise ConfigError("sample_gaussian_cloud needs a GaussianCloud geometry")
    if peak_rabi_scale <= 0:
        raise ConfigError("peak_rabi_scale must be > 0")
    n_target = geometry.target_count()
    rng = _rng(seed)
    sig = np.asarray(geometry.sigmas)
    v_cloud = (2.0 * math.pi) ** 1.5 * sig.prod()
    n_ground = max(n_target, int(round(geometry.ground_density * v_cloud)))
    ground = rng.normal(size=(n_ground, 3)) * sig
    tree = cKDTree(ground)
    factor = enhancement if enhancement is not None else sqrt_enhancement()
    p_peak = min(1.0, peak_rabi_scale**2)
    sl2 = geometry.laser_sigma**2
    r_bl = geometry.r_bl
    r2 = r_bl * r_bl

    accepted = np.empty((n_target, 3))
    taken: set[int] = set()
    n_acc = 0
    stale = 0
    while n_acc < n_target:
        idx = int(rng.integers(n_ground))
        stale += 1
        if stale > max_stale_attempts:
            raise TargetUnreachable(
                f"placed {n_acc}/{n_target} spins before acceptance stalled; "
                "blockade saturates the cloud"
            )
        if idx in taken:
            continue
        pos = ground[idx]
        if r_bl > 0.0 and n_acc:
            d2 = ((accepted[:n_acc] - pos) ** 2).sum(axis=1)
            if d2.min() < r2:
                continue
        if r_bl > 0.0:
            n_bl = tree.query_ball_point(pos, r_bl, return_length=True)
        else:
            n_bl = 1
        p = p_peak * math.exp(-(pos[1] ** 2 + pos[2] ** 2) / sl2)
        p = min(1.0, p * float(factor(np.asarray(n_bl))))
        if rng.random() < p:
            accepted[n_acc] = pos
            taken.add(idx)
            n_acc += 1
            stale = 0
    config = SpinConfiguration(accepted, geometry, seed)
    config.meta["realized_peak_density_um3"] = f"{_peak_density(config):.6e}"
    return config


def _peak_density(config: SpinConfiguration, core: float = 0.7) -> float:
    """Estimate the peak density of a cloud sample from its central core.

    Counts spins inside the ellipsoid of scaled radius ``core`` (in units of
    the unconstrained profile sigmas) and corrects for the Gaussian falloff
    across the core.
    """
    sp = np.asarray(config.geometry.spin_profile_sigmas())
    u2 = ((config.positions / sp) ** 2).sum(axis=1)
    count = int((u2 <= core**2).sum())
    volume = (4.0 * math.pi / 3.0) * core**3 * sp.prod()
    # mean of exp(-u²/2) over the ellipsoid, relative to the peak
    u = np.linspace(0.0, core, 512)
    correction = np.trapz(u**2 * np.exp(-(u**2) / 2.0), u) / (core**3 / 3.0)
    return count / (volume * correction)


def wigner_seitz_radius(density: float) -> float:
    """Mean inter-particle distance a = (4πρ/3)^(-1/3) for density ρ (μm^-3)."""
    if density <= 0:
        raise DomainError(f"density must be > 0, got {density}")
    return (4.0 * math.pi * density / 3.0) ** (-1.0 / 3.0)


def hertz_density(r, a: float):
    """Nearest-neighbour distance density (3/a)(r/a)² exp(-(r/a)³).

    This is the exact nearest-neighbour law for uniformly random points with
    Wigner-Seitz radius ``a``; the blockade modifies it only below ~R_bl.
    """
    if a <= 0:
        raise DomainError("Wigner-Seitz radius must be > 0")
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise DomainError("distances must be >= 0")
    x = r / a
    return (3.0 / a) * x**2 * np.exp(-(x**3))


def hertz_cdf(r, a: float):
    """CDF of :func:`hertz_density`: 1 - exp(-(r/a)³)."""
    if a <= 0:
        raise DomainError("Wigner-Seitz radius must be > 0")
    r = np.asarray(r, dtype=float)
    return 1.0 - np.exp(-((r / a) ** 3))


# --------------------------------------------------------------------------
# coupling distributions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BinSpec:
    """Histogram binning over coupling strength (MHz)."""

    lo: float
    hi: float
    n: int = 64
    log: bool = True

    def edges(self) -> np.ndarray:
        if not (0 < self.lo < self.hi) or self.n < 1:
            raise ConfigError("need 0 < lo < hi and n >= 1 bins")
        if self.log:
            return np.geomspace(self.lo, self.hi, self.n + 1)
        return np.linspace(self.lo, self.hi, self.n + 1)

    @classmethod
    def default(cls, c6: float, a: float, j_ceiling: float | None = None,
                n: int = 64) -> "BinSpec":
        """Log bins spanning [1e-3, 10]·C6/a⁶, widened to any known ceiling.

        The upper edge is raised above 10·C6/a⁶ when a larger coupling is
        known to occur (e.g. the blockade cutoff C6/R_bl⁶ at low density);
        otherwise close pairs would fall off the histogram and break its
        normalization.
        """
        scale = c6 / a**6
        hi = 10.0 * scale
        if j_ceiling is not None:
            hi = max(hi, 1.0000001 * j_ceiling)
        return cls(lo=1e-3 * scale, hi=hi, n=n)


@dataclass
class CouplingDistribution:
    """Normalized histogram over coupling strength J (MHz)."""

    bin_edges: np.ndarray
    density: np.ndarray
    provenance: Provenance
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.density = np.asarray(self.density, dtype=float)
        if self.bin_edges.size != self.density.size + 1:
            raise ConfigError("need len(edges) == len(density) + 1")
        if np.any(self.density < 0):
            raise ConfigError("densities must be >= 0")
        total = float(self.masses().sum())
        if total > 0 and abs(total - 1.0) > 1e-9:
            raise ConfigError(f"density must integrate to 1, got {total}")

    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def centers(self) -> np.ndarray:
        edges = self.bin_edges
        if self.meta.get("log_bins", True):
            return np.sqrt(edges[:-1] * edges[1:])
        return 0.5 * (edges[:-1] + edges[1:])

    def masses(self) -> np.ndarray:
        return self.density * self.widths()

    def save(self, path: str | Path) -> None:
        lines = ["spinrelax coupling distribution v1",
                 f"provenance: {self.provenance.value}",
                 "units: J in MHz (nu)"]
        lines += [f"{k}: {self.meta[k]}" for k in sorted(self.meta)]
        lines.append("columns: bin_left bin_right density")
        body = np.column_stack([self.bin_edges[:-1], self.bin_edges[1:],
                                self.density])
        np.savetxt(path, body, header="\n".join(lines), fmt="%.12e")


def coupling_values(config: SpinConfiguration, c6: float,
                    provenance: Provenance, min_image_box=None) -> np.ndarray:
    """Per-spin coupling statistic: C6/r_nn⁶ or the mean-field sum C6·Σr⁻⁶."""
    if config.n < 2:
        raise ConfigError("need at least 2 spins")
    if c6 <= 0:
        raise ConfigError("c6 must be > 0 (MHz um^6)")
    d = pairwise_distances(config.positions, min_image_box)
    np.fill_diagonal(d, np.inf)
    if np.any(d[np.isfinite(d)] == 0.0):
        raise DegenerateConfig("coincident spins")
    if provenance is Provenance.NEAREST_NEIGHBOR:
        return c6 / d.min(axis=1) ** 6
    return c6 * (d ** -6).sum(axis=1)


def _histogram(values: np.ndarray, bins: BinSpec, provenance: Provenance,
               meta: dict) -> CouplingDistribution:
    edges = bins.edges()
    counts, _ = np.histogram(values, bins=edges)
    dropped = values.size - int(counts.sum())
    norm = max(int(counts.sum()), 1)
    density = counts / (norm * np.diff(edges))
    meta = dict(meta, log_bins=bins.log, n_values=values.size, n_dropped=dropped)
    return CouplingDistribution(edges, density, provenance, meta)


def coupling_distribution(config: SpinConfiguration, c6: float,
                          provenance: Provenance = Provenance.NEAREST_NEIGHBOR,
                          bins: BinSpec | None = None,
                          min_image_box=None) -> CouplingDistribution:
    """Histogram of per-spin coupling strengths for one configuration."""
    values = coupling_values(config, c6, provenance, min_image_box)
    if bins is None:
        a = wigner_seitz_radius(config.geometry.nominal_density())
        bins = BinSpec.default(c6, a, j_ceiling=float(values.max()))
    return _histogram(values, bins, provenance, {})


def pooled_coupling_distribution(configs: Sequence[SpinConfiguration], c6: float,
                                 provenance: Provenance = Provenance.NEAREST_NEIGHBOR,
                                 bins: BinSpec | None = None,
                                 min_image_box=None) -> CouplingDistribution:
    """Histogram pooled over disorder realizations (shared binning)."""
    if not configs:
        raise ConfigError("need at least one configuration")
    values = np.concatenate([
        coupling_values(c, c6, provenance, min_image_box) for c in configs
    ])
    if bins is None:
        a = wigner_seitz_radius(configs[0].geometry.nominal_density())
        bins = BinSpec.default(c6, a, j_ceiling=float(values.max()))
    return _histogram(values, bins, provenance,
                      {"n_realizations": len(configs)})


def hertz_coupling_distribution(a: float, c6: float, bins: BinSpec,
                                provenance: Provenance = Provenance.NEAREST_NEIGHBOR
                                ) -> CouplingDistribution:
    """Blockade-free reference distribution h(J) on the given bins.

    Uses the exact tail law P(J > x) = 1 - exp(-sqrt(C6/(x a⁶))) implied by
    the Hertz nearest-neighbour density under J = C6/r⁶, with the mass
    outside the binning range folded into nothing (densities renormalized
    over the covered range is *not* done; the reference keeps its absolute
    normalization so divergences remain comparable across binnings).
    """
    edges = bins.edges()

    def tail(x):
        return 1.0 - np.exp(-np.sqrt(c6 / (x * a**6)))

    mass = tail(edges[:-1]) - tail(edges[1:])
    density = mass / np.diff(edges)
    total = float(mass.sum())
    meta = {"log_bins": bins.log, "covered_mass": total, "analytic": True}
    # renormalize so the invariant integral-to-one holds on the covered range
    if total > 0:
        density = density / total
    return CouplingDistribution(edges, density, provenance, meta)


def kl_divergence(g: CouplingDistribution, h: CouplingDistribution,
                  smoothing: float = 1e-12, return_details: bool = False):
    """Kullback-Leibler divergence D(g‖h) in nats over shared bins.

    Reference bins with h=0 under g>0 are lifted by ``smoothing`` so finite
    sampling cannot produce infinities; the number of smoothed bins is
    reported in the details.
    """
    if g.bin_edges.shape != h.bin_edges.shape or not np.allclose(
            g.bin_edges, h.bin_edges, rtol=0, atol=0):
        raise BinningMismatch("distributions use different bin edges")
    widths = g.widths()
    gk = g.density
    hk = h.density.copy()
    bad = (hk <= 0) & (gk > 0)
    hk[bad] = smoothing
    mask = gk > 0
    div = float(np.sum(gk[mask] * np.log(gk[mask] / hk[mask]) * widths[mask]))
    if return_details:
        return div, {"smoothed_bins": int(bad.sum()), "smoothing": smoothing}
    return div


def mean_field_scale(config: SpinConfiguration, c6: float,
                     min_image_box=None) -> tuple[float, float]:
    """Median mean-field energy J_mf (MHz) and effective radius ã (μm)."""
    j_tilde = coupling_values(config, c6, Provenance.MEAN_FIELD, min_image_box)
    j_mf = float(np.median(j_tilde))
    a_tilde = (c6 / j_mf) ** (1.0 / 6.0)
    return j_mf, a_tilde
