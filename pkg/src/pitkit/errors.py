"""Exception hierarchy shared by every module.

The CLI maps these onto its exit-code contract: structural/parse problems
exit 2, capability limits (ceilings, small modulus) exit 3.
"""


class PitError(Exception):
    """Base class for all toolkit errors."""


class StructuralError(PitError):
    """Malformed input: mismatched widths/moduli, ragged vectors, bad files."""


class PreconditionError(PitError):
    """A documented operation precondition was violated by the caller."""


class CapabilityError(PitError):
    """The request exceeds a configured ceiling or the field is too small."""


class ModulusTooSmallError(CapabilityError):
    """The prime modulus cannot supply enough distinct points."""


class InternalInconsistencyError(PitError):
    """A guaranteed property failed; this signals a bug, not bad input."""
