import pytest
from pydantic import ValidationError

from config.run_config import DesignConfig
from utils.error_handler import (
    ConfigError,
    DataIOError,
    EmptySampleError,
    ErrorHandler,
    NotIdentifiedError,
    RootBracketError,
    handle_cli_errors,
)


@pytest.mark.parametrize(
    "error, expected",
    [
        (ConfigError("bad"), 2),
        (NotIdentifiedError("none"), 3),
        (RootBracketError("same sign"), 4),
        (EmptySampleError("empty"), 4),
        (DataIOError("disk"), 5),
        (FileNotFoundError("gone"), 5),
        (RuntimeError("boom"), 1),
    ],
)
def test_exit_codes(error, expected):
    assert ErrorHandler.exit_code_for(error) == expected


def test_pydantic_errors_count_as_config():
    with pytest.raises(ValidationError) as info:
        DesignConfig(truncation="reserve")
    assert ErrorHandler.get_error_type(info.value) == "ConfigError"


def test_format_error_includes_context():
    text = ErrorHandler.format_error(NotIdentifiedError("FP 只看成交價"), context="識別")
    assert "無法識別" in text
    assert "（識別）" in text
    assert "FP 只看成交價" in text


@handle_cli_errors(context="測試")
def _command(error=None):
    if error is not None:
        raise error
    return None


def test_handle_cli_errors(capsys):
    assert _command() == 0
    assert _command(NotIdentifiedError("x")) == 3
    assert "無法識別" in capsys.readouterr().err


def test_handle_cli_errors_keeps_keyboard_interrupt():
    with pytest.raises(KeyboardInterrupt):
        _command(KeyboardInterrupt())
