"""Shared exception types."""


class DataError(ValueError):
    """Malformed or out-of-contract input: parse failures, schema violations,
    empty inputs, bad configuration values."""


class NumericalError(RuntimeError):
    """A computation left its supported regime (enumeration caps, degree-of-
    freedom blowups, non-finite objectives)."""
