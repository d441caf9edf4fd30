"""
Exception hierarchy for the buy-back lab.

Library code raises these; only the CLI turns them into process exit codes.
"""

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2
EXIT_VALIDATION = 3


class BuybackLabError(Exception):
    """Base class for every error the lab raises on purpose."""
    exit_code = EXIT_USAGE


class ConfigurationError(BuybackLabError):
    """A scenario or application setting is missing or out of range."""
    exit_code = EXIT_USAGE

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class ParameterError(BuybackLabError):
    """A call-site argument is outside the supported range."""
    exit_code = EXIT_USAGE


class DomainError(BuybackLabError):
    """The computation is undefined for the given inputs (empty series, zero shares...)."""
    exit_code = EXIT_VALIDATION


class ValidationError(BuybackLabError):
    """A disclosure tape or record failed validation."""
    exit_code = EXIT_VALIDATION

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InfeasibleError(BuybackLabError):
    """The requested programme cannot be executed under the regulatory limits."""
    exit_code = EXIT_INFEASIBLE

    def __init__(self, message, max_feasible_value=None):
        self.max_feasible_value = max_feasible_value
        if max_feasible_value is not None:
            message = f"{message} (max feasible value {max_feasible_value:,.2f})"
        super().__init__(message)
