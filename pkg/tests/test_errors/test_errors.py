import pytest as _pytest

from mbm_relay.errors import (
    ConfigurationError,
    ConvergenceError,
    DomainError,
    RelayError,
    SpecParseError,
    SpecValidationError,
    missing_required_keys,
)


class TestHierarchy:
    @_pytest.mark.parametrize(
        ("exc_type", "builtin"),
        [
            (DomainError, ValueError),
            (ConvergenceError, ArithmeticError),
            (ConfigurationError, ValueError),
            (SpecParseError, ConfigurationError),
            (SpecValidationError, ConfigurationError),
        ],
    )
    def test_subclasses(self, exc_type, builtin):
        assert issubclass(exc_type, RelayError)
        assert issubclass(exc_type, builtin)


class TestSpecParseError:
    def test_location_in_message(self):
        exc = SpecParseError("bad value", line=7, field="system.m_g")

        assert str(exc) == "bad value (line 7, field 'system.m_g')"
        assert exc.line == 7
        assert exc.field == "system.m_g"

    def test_without_location(self):
        exc = SpecParseError("unreadable")

        assert str(exc) == "unreadable"
        assert exc.line is None
        assert exc.field is None


def test_validation_error_keeps_every_violation():
    exc = SpecValidationError(["first", "second"])

    assert exc.violations == ["first", "second"]
    assert str(exc) == "first; second"


class TestMissingRequiredKeys:
    @_pytest.mark.parametrize(
        ("required", "found", "expected"),
        [
            (
                ["command", "body"],
                ["body"],
                {
                    "msg": "Required field(s) not found",
                    "data": "'['command']' field(s) not optional. "
                    "Found: ['body'].  Required: ['command', 'body']",
                    "level": "critical",
                },
            ),
            (
                ["spec"],
                [],
                {
                    "msg": "Required field(s) not found",
                    "data": "'['spec']' field(s) not optional. "
                    "Found: [].  Required: ['spec']",
                    "level": "critical",
                },
            ),
        ],
    )
    def test_message(self, required, found, expected):
        assert missing_required_keys(required, found) == expected

    def test_nothing_missing(self):
        with _pytest.raises(ValueError):
            missing_required_keys(["spec"], ["spec", "out"])

    @_pytest.mark.parametrize(
        ("required", "found"), [("spec", []), (["spec"], "spec")]
    )
    def test_requires_lists(self, required, found):
        with _pytest.raises(TypeError):
            missing_required_keys(required, found)
