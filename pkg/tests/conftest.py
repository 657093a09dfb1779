from pathlib import Path

import pytest as _pytest

from mbm_relay.channel import RngStream
from mbm_relay.cli import CommandError, CommandInputError, CommandResult

DATA_DIR = Path(__file__).resolve().parent / "data"


@_pytest.fixture
def test_exception():
    class TestException(Exception):
        pass

    return TestException


@_pytest.fixture
def inputerror_exception():
    return CommandInputError


@_pytest.fixture
def commandresult():
    return CommandResult


@_pytest.fixture
def test_function():
    def foo(string):
        return {"echo": f"your string was {string}"}

    return foo


@_pytest.fixture
def test_exception_raiser(mocker):
    return mocker.Mock(side_effect=CommandError("test_error"))


@_pytest.fixture
def result_with_body():
    return CommandResult(response={"csv": "out.csv", "points": 3})


@_pytest.fixture
def result_with_exception(test_exception):
    try:
        raise test_exception("Test exception")
    except test_exception as te:
        return CommandResult(response=None, exc=te)


@_pytest.fixture
def data_dir():
    return DATA_DIR


@_pytest.fixture
def rng():
    return RngStream(seed=1234, stream_id=0).generator()
