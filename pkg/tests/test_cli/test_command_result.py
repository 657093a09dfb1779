import ast

import pytest as _pytest

import mbm_relay.cli as cli
from mbm_relay.cli import CommandError, CommandResult
from mbm_relay.errors import ConfigurationError


class TestCommandResult:
    def test_CommandResult_with_body(self, result_with_body):
        assert result_with_body.body == {"csv": "out.csv", "points": 3}
        assert result_with_body.exc is None
        assert result_with_body.error == {}

    def test_CommandResult_with_exception(
        self, result_with_exception, test_exception
    ):
        assert result_with_exception.body == {}
        assert isinstance(result_with_exception.exc, test_exception)
        assert isinstance(result_with_exception.error, dict)
        assert all(
            key in result_with_exception.error
            for key in ("title", "message", "traceback")
        )
        assert result_with_exception.error["title"] == "TestException"
        assert result_with_exception.error["message"] == "Test exception"
        assert result_with_exception.error["traceback"][0] == [
            "Traceback (most recent call last):",
            "",
        ]

    def test_CommandResult_with_neither(
        self, inputerror_exception, commandresult
    ):
        with _pytest.raises(inputerror_exception):
            commandresult()

    def test_CommandResult_rejects_non_dict(self, inputerror_exception):
        with _pytest.raises(inputerror_exception):
            CommandResult(response=[1, 2])

    def test_input_error_is_configuration_error(self, inputerror_exception):
        assert issubclass(inputerror_exception, ConfigurationError)
        assert issubclass(inputerror_exception, CommandError)
        assert not issubclass(inputerror_exception, AttributeError)

    def test_CommandResult_with_failures(self):
        """A sweep that finished with failed points reports them as errors."""
        response = {
            "csv": "out.csv",
            "failures": [{"x": 10.0, "errors": [{"output": "simulation"}]}],
        }
        result_with_failures = CommandResult(response=response)
        assert result_with_failures.body == response
        assert result_with_failures.exc is None
        assert result_with_failures.error == {
            "message": [{"x": 10.0, "errors": [{"output": "simulation"}]}],
            "title": "Response included failures",
            "traceback": None,
        }

    def test_CommandResult_empty_failures(self):
        result = CommandResult(response={"failures": []})
        assert result.error == {}

    def test_CommandResult_repr(self, result_with_body, result_with_exception):
        assert repr(result_with_body) == "{'csv': 'out.csv', 'points': 3}"

        result_dict = ast.literal_eval(repr(result_with_exception))
        assert result_dict.get("title") == "TestException"
        assert result_dict.get("message") == "Test exception"
        assert isinstance(result_dict.get("traceback"), list)


class TestInvoke:
    def test_invoke_body(self, mocker):
        mock_function = mocker.Mock(return_value={"sep_closed": 0.01})
        params = {"config": "some_config", "hop1": 0.5}

        result = cli.invoke(mock_function, **params)

        mock_function.assert_called_once_with(**params)
        assert isinstance(result, CommandResult)
        assert result.body == {"sep_closed": 0.01}
        assert result.exc is None

    def test_invoke_exc(self, test_exception_raiser):
        result = cli.invoke(test_exception_raiser)

        assert isinstance(result, CommandResult)
        assert result.body == {}
        assert isinstance(result.exc, CommandError)

    def test_invoke_none_is_empty_body(self, mocker):
        result = cli.invoke(mocker.Mock(return_value=None))

        assert result.body == {}
        assert result.error == {}

    def test_invoke_non_dict_raises(self, mocker, inputerror_exception):
        with _pytest.raises(inputerror_exception):
            cli.invoke(mocker.Mock(return_value=3.0))

    def test_invoke_with_test_function(self, test_function):
        result = cli.invoke(test_function, string="abc")

        assert result.body == {"echo": "your string was abc"}
