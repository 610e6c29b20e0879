"""Shared fixtures and the acceptance-line reporter."""

from __future__ import annotations

import numpy as np
import pytest

from bmti.geometry import PointCloud

_criterion_lines: list[str] = []


def record_criterion(line: str) -> None:
    """Queue one acceptance verdict line for the terminal summary."""
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_cloud(rng, n: int, dim: int, truth: bool = False) -> PointCloud:
    pts = rng.standard_normal((n, dim))
    t = rng.standard_normal(n) if truth else None
    return PointCloud(points=pts, truth_F=t)
