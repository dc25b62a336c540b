"""Shared exception types and CLI exit codes."""

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_SERVICE = 4


class ClaimNormError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(ClaimNormError):
    """Invalid or unresolvable configuration."""

    exit_code = EXIT_CONFIG


class DataError(ClaimNormError):
    """Malformed, missing, or inconsistent input data."""

    exit_code = EXIT_DATA


class ServiceError(ClaimNormError):
    """Upstream LLM or embedding service failed after retries."""

    exit_code = EXIT_SERVICE


class ParseError(ClaimNormError):
    """No JSON object could be extracted from a model response."""

    exit_code = EXIT_SERVICE


class SchemaError(ClaimNormError):
    """Extracted JSON does not match the expected structure."""

    exit_code = EXIT_SERVICE

    def __init__(self, key: str, message: str | None = None):
        self.key = key
        super().__init__(message or f"missing or invalid field: {key!r}")
