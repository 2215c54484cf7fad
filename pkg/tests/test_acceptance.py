"""One test per acceptance criterion; each prints a single PASS/FAIL line.

The lines are also collected in ``LINES`` and repeated in the pytest
terminal summary (see ``conftest.py``).
"""
import pytest

from pasmamba import acceptance

LINES = []


@pytest.mark.parametrize("check", acceptance.CHECKS, ids=lambda fn: fn.__name__.removeprefix("check_"))
def test_criterion(check):
    result = check()
    LINES.append(result.line())
    print(result.line())
    assert result.passed, result.line()


def test_config_file_parse_errors():
    from pasmamba.config import parse_config
    from pasmamba.network import ConfigError

    with pytest.raises(ConfigError, match="run.cfg:2: height"):
        parse_config("channels = 2\nheight = tall\n", "run.cfg")
