"""Exception types shared across the package.

The CLI maps these onto exit codes: usage errors are handled by the
argument parser, ``DataFormatError`` exits with 2, anything else with 3.
"""


class SdcError(Exception):
    """Base class for errors raised by this package."""


class DataFormatError(SdcError):
    """Malformed or inconsistent input data (corpus files, embedding
    files, score tables, stores, reports)."""
