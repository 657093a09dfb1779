"""Exception types and diagnostic helpers."""
from typing import Dict, List, Optional


class RelayError(Exception):
    """Generic RelayError exception."""

    pass


class DomainError(RelayError, ValueError):
    """An argument lies outside the domain of the function."""

    pass


class ConvergenceError(RelayError, ArithmeticError):
    """A numerical evaluation did not reach its tolerance."""

    pass


class ConfigurationError(RelayError, ValueError):
    """Invalid system configuration or simulation controls."""

    pass


class SpecParseError(ConfigurationError):
    """An experiment spec file could not be parsed.

    Attributes:
        line: Line number of the offending text, if known.
        field: Section/key of the offending value, if known.
    """

    def __init__(
        self,
        message: str,
        line: Optional[int] = None,
        field: Optional[str] = None,
    ):
        """Keep the location next to the message."""
        location = ", ".join(
            part
            for part in (
                f"line {line}" if line is not None else "",
                f"field '{field}'" if field else "",
            )
            if part
        )
        super().__init__(f"{message} ({location})" if location else message)
        self.line = line
        self.field = field


class SpecValidationError(ConfigurationError):
    """An experiment spec violates one or more invariants.

    Attributes:
        violations: Every violated invariant, in the order found.
    """

    def __init__(self, violations: List[str]):
        """Join the violations into a single message."""
        super().__init__("; ".join(violations))
        self.violations = list(violations)


def missing_required_keys(
    required_keys: List[str], found_keys: List[str]
) -> Dict[str, str]:
    """Computes an error message indicating missing input keys.

    Arguments:
        required_keys: List of required keys.
        found_keys: List of keys that were found in the input.

    Returns:
        A dictionary with a pre-formatted error message.

    Raises:
        TypeError if either argument is not a list.
        ValueError if all the required keys are present.
    """
    if not isinstance(required_keys, list) or not isinstance(
        found_keys, list
    ):
        raise TypeError("argument must be a list type")

    missing_keys = [key for key in required_keys if key not in found_keys]
    if not missing_keys:
        raise ValueError("there were no missing keys")
    return {
        "msg": "Required field(s) not found",
        "data": (
            f"'{missing_keys}' field(s) not optional. "
            f"Found: {found_keys}.  Required: {required_keys}"
        ),
        "level": "critical",
    }
