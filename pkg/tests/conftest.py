"""Shared fixtures and the per-criterion acceptance summary."""

from __future__ import annotations

import pytest

from lossnet.config import bundled_config_path, parse_config

_CRITERIA: dict[int, list[bool]] = {}


@pytest.fixture(scope="session")
def network_config():
    return parse_config(bundled_config_path())


@pytest.fixture(scope="session")
def units(network_config):
    return {u.name: u for u in network_config.models()}


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            _CRITERIA.setdefault(marker.args[0], [])
            item.user_properties.append(("criterion", marker.args[0]))


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _CRITERIA.setdefault(value, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not any(_CRITERIA.values()):
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        results = _CRITERIA[number]
        if not results:
            continue
        status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d}: {status} ({sum(results)}/{len(results)} checks)")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
