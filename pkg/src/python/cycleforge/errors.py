"""Error types for the application"""

from typing import Any


class ForgeError(Exception):
    """Base exception for construction, audit and verification errors"""

    def __init__(self, message: str, original_exception: Exception | None = None):
        super().__init__(message)
        self.original_exception = original_exception


class ValidationError(ForgeError):
    """Exception raised for parameter and precondition violations"""

    def __init__(
        self, message: str, original_exception: Exception | None = None, field: str | None = None
    ):
        super().__init__(message, original_exception)
        self.field = field


class InvalidMatchingError(ValidationError):
    """Exception raised when two blocks cannot coexist in one matching"""

    def __init__(self, message: str, first: Any = None, second: Any = None):
        super().__init__(message, field="blocks")
        self.first = first
        self.second = second


class ColouringMismatchError(ValidationError):
    """Exception raised when a colouring disagrees with the matching it claims to extend"""

    def __init__(self, message: str, edge: tuple[int, int] | None = None):
        super().__init__(message, field="colouring")
        self.edge = edge


class PartialColouringError(ValidationError):
    """Exception raised when a total colouring is required"""

    def __init__(self, message: str, uncoloured: int = 0):
        super().__init__(message, field="colouring")
        self.uncoloured = uncoloured


class CapExceededError(ForgeError):
    """Exception raised when an exhaustive computation would exceed its cap"""

    def __init__(self, message: str, cap: int | None = None, required: int | None = None):
        super().__init__(message)
        self.cap = cap
        self.required = required


class CertificateFormatError(ForgeError):
    """Exception raised for malformed certificate input"""

    def __init__(
        self,
        message: str,
        original_exception: Exception | None = None,
        offset: int | None = None,
        line: int | None = None,
    ):
        super().__init__(message, original_exception)
        self.offset = offset
        self.line = line


class StageFailure(ForgeError):
    """Exception raised when a pipeline attempt ends uncertified"""

    def __init__(
        self,
        message: str,
        certificate: Any = None,
        retry_allowed: bool = True,
    ):
        super().__init__(message)
        self.certificate = certificate
        self.retry_allowed = retry_allowed


class RetriesExhaustedError(ForgeError):
    """Exception raised when the restart budget is used up"""

    def __init__(
        self,
        message: str,
        original_exception: Exception | None = None,
        attempts: int = 0,
        certificate: Any = None,
    ):
        super().__init__(message, original_exception)
        self.attempts = attempts
        self.certificate = certificate


class ConfigurationError(ForgeError):
    """Exception raised for configuration errors"""

    pass
