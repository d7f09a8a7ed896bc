from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from spinframes.chart import Chart, Field, field_from_def
from spinframes.fieldlang import FieldDef

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_field(nested, chart: Chart, cls=Field, **kwargs):
    return field_from_def(FieldDef.from_nested(nested, chart.coords), chart, cls=cls, **kwargs)


@pytest.fixture
def polar_chart() -> Chart:
    return Chart.create(["r", "th"], [(1.0, 2.0), (0.2, 1.2)], samples=8)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
