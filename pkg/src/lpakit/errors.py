"""Exception taxonomy shared across the package.

LpakitError is the base for everything we raise on purpose.  Subclasses
split along how a caller should react: bad input (ModelError, FormatError,
DomainError, PreconditionError), an honest refusal to answer (Unrepresentable,
NeedsDeeperUnroll, NonTerminating), and internal invariant breakage that
should never escape a correct build (LatticeViolation, LiftingViolation).
"""

from __future__ import annotations

__all__ = [
    "LpakitError",
    "ModelError",
    "FormatError",
    "DomainError",
    "NoInfinitePaths",
    "TailUnsupported",
    "PreconditionError",
    "TargetHypothesisViolated",
    "Unrepresentable",
    "InfiniteClusterFamily",
    "NeedsDeeperUnroll",
    "NonTerminating",
    "LatticeViolation",
    "LiftingViolation",
]


class LpakitError(Exception):
    """Base class for all deliberate failures."""


class ModelError(LpakitError):
    """A graph presentation violates a structural rule."""


class FormatError(LpakitError):
    """Text input could not be parsed."""


class DomainError(LpakitError):
    """An operation was asked outside its domain (empty graph, bad vertex)."""


class NoInfinitePaths(DomainError):
    """The graph has no infinite paths at all, so ray questions are vacuous."""


class TailUnsupported(DomainError):
    """This operation is defined for tail-free graphs only."""


class PreconditionError(LpakitError):
    """A documented precondition of an operation does not hold."""


class TargetHypothesisViolated(PreconditionError):
    """A localization target does not satisfy its shape hypothesis."""


class Unrepresentable(LpakitError):
    """The exact answer exists but falls outside the finite presentations
    this package can emit.  Carries a human-readable witness."""

    def __init__(self, message: str, witness: object = None):
        super().__init__(message)
        self.witness = witness


class InfiniteClusterFamily(LpakitError):
    """A per-cluster enumeration was asked on a graph whose cluster census
    is infinite.  Carries the offending column family."""

    def __init__(self, message: str, witness: object = None):
        super().__init__(message)
        self.witness = witness


class NeedsDeeperUnroll(LpakitError):
    """Window-based computation failed to stabilize within the retry budget."""

    def __init__(self, message: str, depth: int = 0):
        super().__init__(message)
        self.depth = depth


class NonTerminating(LpakitError):
    """An iterative construction provably repeats itself.  Carries the
    certificate (the repeating presentation) and the progress made so far."""

    def __init__(self, message: str, certificate: object = None, prefix: object = None):
        super().__init__(message)
        self.certificate = certificate
        self.prefix = prefix


class LatticeViolation(LpakitError):
    """Order-theoretic sanity check failed (meet/join laws)."""


class LiftingViolation(LpakitError):
    """A lifted pair stopped being admissible while building a chain."""
