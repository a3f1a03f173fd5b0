import logging

import pytest

from visclimit.errors import UsageError
from visclimit.settings import (
    DEFAULT_SETTINGS,
    THREADS_ENV,
    LabSettings,
    build_settings,
    configure_logging,
    parse_nu_grid,
    read_config_file,
)


def test_defaults():
    assert DEFAULT_SETTINGS.method == "DOP853"
    assert DEFAULT_SETTINGS.rtol == 1e-12
    assert DEFAULT_SETTINGS.tolerance(0.0) == 1e-12
    nus = DEFAULT_SETTINGS.nu_values()
    assert len(nus) == 8
    assert nus[0] == pytest.approx(0.1)
    assert nus[-1] == pytest.approx(10 ** -3.5)


def test_nu_grid_is_log_spaced_and_inclusive():
    assert parse_nu_grid("1e-1:1e-3:3") == pytest.approx([1e-1, 1e-2, 1e-3])


@pytest.mark.parametrize("text", ["1e-1:1e-3", "a:b:c", "0:1e-3:4", "1e-1:1e-3:0"])
def test_malformed_nu_grid(text):
    with pytest.raises(UsageError):
        parse_nu_grid(text)


def test_config_file_parsing(tmp_path):
    path = tmp_path / "lab.cfg"
    path.write_text("# tolerances\nrtol = 1e-9\n\n--cheb-points=501\nnu=0.02\n")
    values = read_config_file(path)
    assert values == {"rtol": "1e-9", "cheb_points": "501", "nu": "0.02"}


def test_config_file_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("rtol 1e-9\n")
    with pytest.raises(UsageError):
        read_config_file(path)
    with pytest.raises(UsageError):
        read_config_file(tmp_path / "missing.cfg")


def test_precedence():
    settings = build_settings({"rtol": "1e-9", "threads": "2"}, {"rtol": 1e-8, "threads": None}, environ={})
    assert settings.rtol == 1e-8
    assert settings.threads == 2


def test_environment_caps_threads():
    settings = build_settings({}, {"threads": 8}, environ={THREADS_ENV: "3"})
    assert settings.threads == 3
    settings = build_settings({}, {}, environ={THREADS_ENV: "3"})
    assert settings.threads == 3


def test_invalid_values_are_usage_errors():
    with pytest.raises(UsageError):
        build_settings({"method": "Euler"}, environ={})
    with pytest.raises(UsageError):
        build_settings({"unknown_key": "1"}, environ={})
    with pytest.raises(UsageError):
        build_settings({}, {}, environ={THREADS_ENV: "many"})


def test_settings_are_frozen():
    with pytest.raises(Exception):
        LabSettings().rtol = 1.0


def test_configure_logging_sets_level():
    configure_logging("DEBUG")
    assert logging.getLogger().level == logging.DEBUG
    configure_logging("INFO")
    assert logging.getLogger("matplotlib").level == logging.WARNING
