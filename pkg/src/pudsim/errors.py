"""Exception types shared across the package.

The CLI maps these onto exit codes, so keep the hierarchy flat and stable:
InvalidConfigError -> 2, CapabilityError -> 3, OSError -> 4.
"""


class PudsimError(Exception):
    """Base class for all simulator errors."""


class InvalidConfigError(PudsimError):
    """Bad topology/profile/experiment parameters or a malformed config file."""


class NotAdjacentError(PudsimError):
    """Operation requires physically adjacent subarrays."""


class CapabilityError(PudsimError):
    """The selected chip profile cannot perform the requested operation."""


class TraceError(PudsimError):
    """Malformed command trace (bad ordering, negative delay, bad address)."""


class NotActivatedError(PudsimError):
    """RD/WR issued while no sense amplifier is latched for the target row."""


class AmbiguousOrderError(PudsimError):
    """Row-order inference produced a graph that is not a single path."""
