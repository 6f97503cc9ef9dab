"""Exception types shared across the package.

Every error raised by gridfreq derives from GridFreqError so callers (and the
CLI exit-code mapping) can distinguish validation problems, numeric blow-ups
and failed verification checks.
"""


class GridFreqError(Exception):
    """Base class for all gridfreq errors."""


# --- network / case validation -------------------------------------------

class DisconnectedGraphError(GridFreqError):
    """The undirected bus graph is not connected."""


class NonpositiveParameterError(GridFreqError):
    """A susceptance, damping or inertia value is <= 0."""


class BadThermalLimitsError(GridFreqError):
    """A line has thermal_min >= thermal_max."""


class DuplicateLineError(GridFreqError):
    """The same unordered bus pair appears twice in the line list."""


class DimensionMismatchError(GridFreqError):
    """A vector argument has the wrong length for this network."""


class SchemaError(GridFreqError):
    """A case file violates the JSON schema.

    ``pointer`` holds a JSON-pointer-style path to the offending element.
    """

    def __init__(self, pointer: str, message: str):
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")


class UnsortedEventsError(GridFreqError):
    """Step events were supplied with decreasing times."""


class EmptyBusSetError(GridFreqError):
    """A sinusoidal modifier was given no target buses."""


# --- costs -----------------------------------------------------------------

class ZeroCurvatureError(GridFreqError):
    """Some quadratic coefficient a_i is zero; strong convexity cannot be met."""


# --- integration / simulation ---------------------------------------------

class NonFiniteStateError(GridFreqError):
    """NaN or Inf appeared in the integrated state."""

    def __init__(self, t: float, message: str = ""):
        self.t = t
        super().__init__(message or f"non-finite state at t={t:.6g}")


# --- diagnostics ------------------------------------------------------------

class EmptyTrajectoryError(GridFreqError):
    """A diagnostic was asked to operate on a trajectory with no samples."""


class NotConvergedError(GridFreqError):
    """A steady-state diagnostic was invoked before the run settled."""


class BadEquilibriumError(GridFreqError):
    """The supplied equilibrium fails its KKT residual gate."""


# --- oracle ------------------------------------------------------------------

class NotTwoBusError(GridFreqError):
    """The analytic two-bus oracle was applied to a different network."""


class BindingLimitError(GridFreqError):
    """The two-bus analytic optimum violates a line limit; use the grid oracle."""


class TooLargeError(GridFreqError):
    """Grid search only supports up to three controllable buses."""


class InfeasibleError(GridFreqError):
    """No grid point satisfies balance, box and thermal constraints."""
