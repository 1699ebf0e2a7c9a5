"""Exception types raised across the package.

Grouped here so that callers (and the CLI exit-code mapping) can tell
configuration problems apart from numerical failures.
"""


class SpinRelaxError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(SpinRelaxError):
    """Invalid experiment configuration (bad units, missing fields, caps)."""


# --- geometry / sampling -------------------------------------------------

class PackingInfeasible(SpinRelaxError):
    """Requested spin count cannot be packed under the blockade constraint."""


class TargetUnreachable(SpinRelaxError):
    """Blockade saturated the cloud before the target excitation count."""


class DomainError(SpinRelaxError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateConfig(SpinRelaxError):
    """Two spins coincide; power-law couplings are undefined."""


# --- distributions --------------------------------------------------------

class BinningMismatch(SpinRelaxError):
    """Two histograms do not share identical bin edges."""


# --- couplings ------------------------------------------------------------

class ZeroExchange(SpinRelaxError):
    """Pair exchange element is zero; anisotropy is undefined."""


# --- quantum evolution ----------------------------------------------------

class DimensionMismatch(SpinRelaxError):
    """State vector and coupling matrix disagree on the spin count."""


class ConvergenceFailure(SpinRelaxError):
    """Krylov propagation could not reach the requested tolerance."""


class IndexOutOfRange(SpinRelaxError, IndexError):
    """Spin index outside [0, n)."""


# --- classical integration --------------------------------------------------

class StepSizeUnderflow(SpinRelaxError):
    """Adaptive integrator step size fell below the representable minimum."""


# --- readout ----------------------------------------------------------------

class FitDegenerate(SpinRelaxError):
    """Design matrix of the sinusoidal fit is rank deficient."""


class NonPhysical(SpinRelaxError):
    """Reconstructed populations are outside the physical region."""


# --- analysis ----------------------------------------------------------------

class WindowTooSmall(SpinRelaxError):
    """Not enough samples inside the requested fit window."""


class NonConvergence(SpinRelaxError):
    """Nonlinear fit failed from every starting point."""


class NoOverlap(SpinRelaxError):
    """Rescaled curves have disjoint time supports."""
