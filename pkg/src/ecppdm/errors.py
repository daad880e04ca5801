"""Exception types shared across the package."""


class EcppdmError(Exception):
    """Base class for all package errors."""


# -- field arithmetic ------------------------------------------------------

class NotPrime(EcppdmError):
    pass


class ModulusMismatch(EcppdmError):
    pass


class NoInverse(EcppdmError):
    pass


# -- curve group -----------------------------------------------------------

class SingularCurve(EcppdmError):
    pass


class OffCurveInput(EcppdmError):
    pass


class InvalidDomain(EcppdmError):
    pass


# -- elgamal ---------------------------------------------------------------

class ScalarOutOfRange(EcppdmError):
    pass


class MessageOutOfRange(EcppdmError):
    pass


class EncodingFailed(EcppdmError):
    pass


class NotAMessagePoint(EcppdmError):
    pass


# -- transport -------------------------------------------------------------

class FrameError(EcppdmError):
    pass


class BadMagic(FrameError):
    pass


class UnsupportedVersion(FrameError):
    pass


class DomainMismatch(UnsupportedVersion):
    """Frame header carries curve parameters that differ from the warehouse's."""


class TruncatedFrame(FrameError):
    pass


class ChecksumMismatch(FrameError):
    pass


class IncompleteDelivery(EcppdmError):
    pass


# -- etl -------------------------------------------------------------------

class SchemaMismatch(EcppdmError):
    pass


class HeaderMismatch(EcppdmError):
    pass


class IoFailure(EcppdmError):
    pass


# -- perturbation ----------------------------------------------------------

class NegativeVariance(EcppdmError):
    pass


class PlanIncomplete(EcppdmError):
    pass


# -- mining ----------------------------------------------------------------

class UnfittedItemizer(EcppdmError):
    pass


class EmptyTransactions(EcppdmError):
    pass


class NoBaselineRules(EcppdmError):
    pass


# -- cli / pipeline --------------------------------------------------------

class ConfigError(EcppdmError):
    pass


class StageError(EcppdmError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
