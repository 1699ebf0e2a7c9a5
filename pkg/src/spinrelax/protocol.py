"""Ramsey pulse sequence description shared by all evolution engines.

The sequence is: a π/2 preparation pulse taking all spins from -z to +x,
free evolution for a variable time, and a π/2 readout pulse of phase φ that
maps cosφ·Sx + sinφ·Sy onto the measured z population. With
``include_pulses`` the pulses are integrated with interactions active
(piecewise-constant external field, exact switching times); otherwise they
are ideal instantaneous rotations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigError


@dataclass(frozen=True)
class RamseyProtocol:
    """Pulse parameters in ordinary-frequency units (MHz, μs, rad).

    ``pulse_duration`` defaults to a quarter Rabi period 1/(4Ω), i.e. a π/2
    area; set it explicitly for deliberately miscalibrated pulses.
    ``readout_phase`` is the tomography phase φ of the second pulse; the
    engines additionally read out at φ+π/2 to recover both planar
    components.
    """

    rabi: float = 0.0
    detuning: float = 0.0
    include_pulses: bool = True
    pulse_duration: float | None = None
    readout_phase: float = 0.0

    def __post_init__(self):
        if self.include_pulses and self.rabi <= 0:
            raise ConfigError("pulsed protocol needs a positive Rabi frequency")
        if self.pulse_duration is not None and self.pulse_duration < 0:
            raise ConfigError("pulse duration must be >= 0")

    @classmethod
    def ideal(cls, readout_phase: float = 0.0) -> "RamseyProtocol":
        """Instantaneous, perfect rotations (pure free-evolution study)."""
        return cls(rabi=0.0, detuning=0.0, include_pulses=False,
                   readout_phase=readout_phase)

    @property
    def pulse_time(self) -> float:
        """Duration of one π/2 pulse in μs."""
        if not self.include_pulses:
            return 0.0
        if self.pulse_duration is not None:
            return self.pulse_duration
        return 1.0 / (4.0 * self.rabi)
