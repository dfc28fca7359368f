"""Exception types shared across the orchestrator modules."""

from __future__ import annotations


class OplaceranError(Exception):
    """Base class for all orchestrator errors."""


class ParseError(OplaceranError):
    """A scenario or catalog document is structurally malformed."""


class ValidationError(OplaceranError):
    """Parsed data violates a domain invariant.

    Carries the itemized violations so callers can report them.
    """

    def __init__(self, message: str, violations: list | None = None) -> None:
        super().__init__(message)
        self.violations = list(violations or [])


class NoPath(OplaceranError):
    """No route exists between the requested endpoints."""


class UnknownNode(OplaceranError):
    """A referenced node id is not part of the topology."""


class UnknownSolver(OplaceranError):
    """The requested solver id is not registered."""


class UnknownToken(OplaceranError):
    """No placement job exists for the given token."""


class UnknownDeployment(OplaceranError):
    """No deployment exists for the given id."""


class MissingEntry(OplaceranError):
    """A required catalog entry is absent."""


class DuplicateId(OplaceranError):
    """An id is already registered."""


class InfeasibleRequest(OplaceranError):
    """No placement satisfies the request's constraints.

    Infeasibility is an expected outcome, not a fault; the violations
    list explains what blocked the last candidate considered.
    """

    def __init__(self, message: str, violations: list | None = None) -> None:
        super().__init__(message)
        self.violations = list(violations or [])


class TooLarge(OplaceranError):
    """The brute-force enumeration would exceed its safety guard."""


class InsufficientResources(OplaceranError):
    """A node lacks the CPU or memory needed by an allocation plan."""


class LinkOverCommit(OplaceranError):
    """A link lacks the residual bandwidth needed by an allocation plan."""


class SimulatorUnavailable(OplaceranError):
    """The simulated NFVI cannot be reached."""


class CatalogUnavailable(OplaceranError):
    """A required sub-catalog has not been loaded."""


class OptimizerFailure(OplaceranError):
    """A placement job terminated in the Failed state."""


class DeployerFailure(OplaceranError):
    """Plan deployment failed after placement succeeded."""
