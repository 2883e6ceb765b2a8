"""Exception hierarchy shared across the package."""


class VCProbeError(Exception):
    """Base class for every error raised by vcprobe."""

    exit_code = 3


class DomainError(VCProbeError, ValueError):
    """An argument lies outside the domain of the operation."""


class BranchBoundaryError(DomainError):
    """A finite-difference stencil straddles the n = h/2 kink of the bound curve."""


class DegeneracyError(VCProbeError):
    """A numerically computed constant collapsed to a non-positive value."""

    def __init__(self, message, n=None):
        super().__init__(message)
        self.n = n


class UnreachableTargetError(VCProbeError, ValueError):
    """The requested risk level lies below the floor of the bound."""


class ConfigError(VCProbeError):
    exit_code = 2


class SimulationError(VCProbeError):
    """A single simulation run failed; carries its (design point, repetition) index."""

    def __init__(self, message, point_index=None, rep=None):
        super().__init__(message)
        self.point_index = point_index
        self.rep = rep


class AdapterError(VCProbeError):
    """The external classifier process broke the line protocol, crashed or timed out."""

    exit_code = 4

    def __init__(self, message, stderr="", returncode=None):
        super().__init__(message)
        self.stderr = stderr
        self.returncode = returncode

    def __str__(self):
        msg = super().__str__()
        if self.stderr:
            msg += f"\n--- child stderr ---\n{self.stderr.rstrip()}"
        return msg
