"""Typed error hierarchy shared across the package.

The CLI maps these onto exit codes: malformed or missing inputs exit 2,
cross-artifact contract mismatches exit 3, everything else exits 1.
"""


class TodpruneError(Exception):
    """Base class for every error this package raises deliberately."""


class DumpFormatError(TodpruneError):
    """A dump file or dump object violates the binary format contract."""


class BadMagicError(DumpFormatError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersionError(DumpFormatError):
    """File declares a format version this reader does not know."""


class TruncatedDumpError(DumpFormatError):
    """File is shorter than its header-declared payload."""


class ContractError(TodpruneError):
    """Individually valid artifacts that do not belong together
    (layer-id or shape disagreement between dumps, plan vs checkpoint)."""


class TrainingDivergedError(TodpruneError):
    """Training produced a non-finite loss."""
