"""Shared time-series container and the common curve file format.

Curve files are plain text: ``#``-prefixed header lines followed by columns
``t_us Sx Sx_err Sy Sy_err Sz Sz_err`` and, when entanglement entropy was
recorded, a trailing ``S2 S2_err`` pair. The format is intentionally dull so
files diff cleanly and can be consumed by other tooling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_COLUMNS = ("t_us", "Sx", "Sx_err", "Sy", "Sy_err", "Sz", "Sz_err")
_ENTROPY_COLUMNS = ("S2", "S2_err")


@dataclass
class ObservableSeries:
    """Ensemble-averaged magnetization components on a time grid.

    ``times`` are in μs; magnetizations are spin-1/2 expectation values in
    [-1/2, 1/2]. Standard errors are zero where the estimate is exact
    (single deterministic trajectory, exact diagonalization). ``entropy``
    holds the spin-averaged second-order Rényi entropy when recorded.
    ``per_spin`` optionally stores the (n_times, n_spins) x-magnetization.
    ``meta`` carries run bookkeeping (seeds, tolerances, conservation drift).
    """

    times: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    sx_err: np.ndarray | None = None
    sy_err: np.ndarray | None = None
    sz_err: np.ndarray | None = None
    entropy: np.ndarray | None = None
    entropy_err: np.ndarray | None = None
    per_spin: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        for name in ("sx", "sy", "sz"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.times.ndim != 1 or any(
            getattr(self, n).shape != self.times.shape for n in ("sx", "sy", "sz")
        ):
            raise ValueError("times/sx/sy/sz must be 1-d arrays of equal length")
        if np.any(np.diff(self.times) < 0):
            raise ValueError("times must be non-decreasing")

    @property
    def n_times(self) -> int:
        return self.times.size

    def _err(self, name: str) -> np.ndarray:
        err = getattr(self, name)
        return np.zeros_like(self.times) if err is None else np.asarray(err)

    def to_array(self) -> np.ndarray:
        cols = [self.times, self.sx, self._err("sx_err"), self.sy,
                self._err("sy_err"), self.sz, self._err("sz_err")]
        if self.entropy is not None:
            cols += [self.entropy, self._err("entropy_err")]
        return np.column_stack(cols)

    def save(self, path: str | Path, header_extra: dict | None = None) -> None:
        names = _COLUMNS + (_ENTROPY_COLUMNS if self.entropy is not None else ())
        lines = ["spinrelax curve v1", "units: t in us; S in spin-1/2 units"]
        extras = dict(self.meta)
        if header_extra:
            extras.update(header_extra)
        for key in sorted(extras):
            lines.append(f"{key}: {extras[key]}")
        lines.append(" ".join(names))
        np.savetxt(path, self.to_array(), header="\n".join(lines), fmt="%.16e")

    @classmethod
    def load(cls, path: str | Path) -> "ObservableSeries":
        meta = {}
        with open(path) as fh:
            for line in fh:
                if not line.startswith("#"):
                    break
                text = line[1:].strip()
                if ": " in text:
                    key, val = text.split(": ", 1)
                    meta[key] = val
        data = np.loadtxt(path, ndmin=2)
        if data.shape[1] not in (7, 9):
            raise ValueError(f"unexpected column count {data.shape[1]} in {path}")
        series = cls(
            times=data[:, 0], sx=data[:, 1], sy=data[:, 3], sz=data[:, 5],
            sx_err=data[:, 2], sy_err=data[:, 4], sz_err=data[:, 6],
        )
        if data.shape[1] == 9:
            series.entropy = data[:, 7]
            series.entropy_err = data[:, 8]
        series.meta = meta
        return series


def average_series(curves: list[ObservableSeries]) -> ObservableSeries:
    """Average realization curves sharing one time grid.

    The mean is taken in fixed list order so that results do not depend on
    how realizations were scheduled across workers; the standard error is
    the sample spread over realizations.
    """
    if not curves:
        raise ValueError("no curves to average")
    times = curves[0].times
    for c in curves[1:]:
        if c.times.shape != times.shape or not np.array_equal(c.times, times):
            raise ValueError("realization curves must share one time grid")
    n = len(curves)

    def stack(name):
        return np.stack([getattr(c, name) for c in curves])

    out = {}
    for name in ("sx", "sy", "sz"):
        block = stack(name)
        out[name] = block.mean(axis=0)
        out[name + "_err"] = (
            block.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(times)
        )
    series = ObservableSeries(times=times.copy(), **out)
    if all(c.entropy is not None for c in curves):
        block = np.stack([c.entropy for c in curves])
        series.entropy = block.mean(axis=0)
        series.entropy_err = (
            block.std(axis=0, ddof=1) / np.sqrt(n) if n > 1 else np.zeros_like(times)
        )
    series.meta["n_realizations"] = n
    return series
