"""Exception types raised across the package."""


class PrimeSqfreeError(Exception):
    """Base class for all package errors."""


class CapacityError(PrimeSqfreeError):
    """A table or range would exceed the configured memory/segment budget."""


class NoInverse(PrimeSqfreeError, ValueError):
    """x has no multiplicative inverse modulo q."""


class InvalidResidue(PrimeSqfreeError, ValueError):
    """The residue a is not coprime to the modulus q."""


class DegenerateRange(PrimeSqfreeError, ValueError):
    """log P is too small for the regime split to be meaningful."""


class EmptySequence(PrimeSqfreeError, ValueError):
    """No points to measure (no primes coprime to q up to the bound)."""
