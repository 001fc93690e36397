from __future__ import annotations

from typing import Optional


class GadgetForgeError(Exception):
    """Base class for every error raised by gadgetforge."""


# =============================================================================
# GADGETS
# =============================================================================

class UnknownKind(GadgetForgeError):
    pass


class InvalidState(GadgetForgeError):
    pass


class UnknownLocation(GadgetForgeError):
    pass


class AmbiguousTransition(GadgetForgeError):
    pass


class MalformedGadget(GadgetForgeError):
    pass


# =============================================================================
# NETWORKS
# =============================================================================

class DslSyntaxError(GadgetForgeError):
    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateIdentifier(DslSyntaxError):
    pass


class UndeclaredReference(DslSyntaxError):
    def __init__(self, name: str, line: Optional[int] = None) -> None:
        self.name = name
        super().__init__(f"undeclared reference {name!r}", line)


# =============================================================================
# SOLVER
# =============================================================================

class ResourceLimit(GadgetForgeError):
    def __init__(self, budget: int) -> None:
        self.budget = budget
        super().__init__(f"configuration budget of {budget} exceeded")


class NondeterminismDetected(GadgetForgeError):
    pass


class WitnessInvalid(GadgetForgeError):
    pass


# =============================================================================
# EQUIVALENCE / TRANSFORMS
# =============================================================================

class LeakDetected(GadgetForgeError):
    pass


class LabelMismatch(GadgetForgeError):
    pass


class UnsupportedGadget(GadgetForgeError):
    pass


class PlanarityStillViolated(GadgetForgeError):
    pass


# =============================================================================
# LEVELS / SIMULATION
# =============================================================================

class FlavorMismatch(GadgetForgeError):
    pass


class InitialStateUnsupported(GadgetForgeError):
    pass


class RoutingFailure(GadgetForgeError):
    pass


class BranchingWire(GadgetForgeError):
    pass


class MissingAnnotation(GadgetForgeError):
    pass


class LevelFormatError(GadgetForgeError):
    pass


class InconsistentState(GadgetForgeError):
    pass
