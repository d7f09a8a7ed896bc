from __future__ import annotations

import numpy as np
import pytest
from conftest import make_field

from spinframes.chart import Chart, FrameField, MetricField, induce_metric
from spinframes.connection import (
    ContorsionField,
    LinearConnection,
    SymmetryError,
    TorsionField,
    connection_from_contorsion,
    connection_from_torsion_tensor,
    contorsion_frame,
    contorsion_from_torsion,
    levi_civita,
    metric_compatibility,
    projectability_defect,
    spin_coeffs,
    torsion,
)

K_RAW = [[[f"{0.3 * (i + 1)}*sin({j + 1}*r + {l}*th)" for l in range(2)] for j in range(2)] for i in range(2)]


@pytest.fixture
def polar(polar_chart):
    e = make_field([["1", "0"], ["0", "1/r"]], polar_chart, FrameField)
    return e, induce_metric(e, np.eye(2))


@pytest.fixture
def contorsion(polar_chart):
    raw = make_field(K_RAW, polar_chart)
    return ContorsionField(polar_chart, raw.fn, antisymmetrize=True)


def test_polar_christoffel(polar):
    _, g = polar
    lc = levi_civita(g).values
    r = g.chart.points[:, 0]
    np.testing.assert_allclose(lc[:, 0, 1, 1], -r, atol=1e-9)
    np.testing.assert_allclose(lc[:, 1, 0, 1], 1 / r, atol=1e-9)
    np.testing.assert_allclose(lc[:, 1, 1, 0], 1 / r, atol=1e-9)
    np.testing.assert_allclose(lc[:, 0, 0, 0], 0.0, atol=1e-9)


def test_polar_spin_coefficients(polar):
    e, g = polar
    sc = spin_coeffs(levi_civita(g), e, np.eye(2)).values
    np.testing.assert_allclose(sc[:, 0, 1, 1], -1.0, atol=1e-9)
    np.testing.assert_allclose(sc[:, 1, 0, 1], 1.0, atol=1e-9)
    np.testing.assert_allclose(sc[:, :, :, 0], 0.0, atol=1e-9)


def test_flat_cartesian_levi_civita_vanishes():
    chart = Chart.create(["x", "y"], [(0, 1), (0, 1)], samples=4)
    g = make_field([["1", "0"], ["0", "1"]], chart, MetricField)
    assert np.max(np.abs(levi_civita(g).values)) == 0.0


def test_metric_compatibility(polar, contorsion):
    _, g = polar
    assert metric_compatibility(levi_civita(g), g).max_abs() < 1e-9
    assert metric_compatibility(connection_from_contorsion(g, contorsion), g).max_abs() < 1e-9


def test_projectability(polar, contorsion):
    e, g = polar
    assert projectability_defect(spin_coeffs(levi_civita(g), e, np.eye(2))).projectable(1e-7)
    assert projectability_defect(spin_coeffs(connection_from_contorsion(g, contorsion), e, np.eye(2))).defect < 1e-7
    # a symmetric shift is not projectable
    sym = make_field([[["0", "0"], ["r", "0"]], [["r", "0"], ["0", "0"]]], g.chart)
    bad = LinearConnection(g.chart, lambda x: levi_civita(g).at(x) + sym.at(x), fd_depth=1)
    assert projectability_defect(spin_coeffs(bad, e, np.eye(2))).defect > 0.5


def test_contorsion_torsion_relation(polar, contorsion):
    _, g = polar
    t = torsion(connection_from_contorsion(g, contorsion))
    tl = t.lowered(g).values
    k = contorsion.values
    # K_{r s m} - K_{r m s} = T_{r s m}
    np.testing.assert_allclose(k - np.swapaxes(k, -1, -2), tl, atol=1e-12)
    back = contorsion_from_torsion(g, t)
    np.testing.assert_allclose(back.values, k, atol=1e-12)


def test_levi_civita_is_torsion_free(polar):
    _, g = polar
    assert torsion(levi_civita(g)).max_abs() == 0.0


def test_connection_from_torsion_tensor(polar_chart, polar):
    _, g = polar
    raw = make_field(K_RAW, polar_chart)
    i = TorsionField(polar_chart, raw.fn, antisymmetrize=True)
    w = connection_from_torsion_tensor(g, i)
    np.testing.assert_allclose(torsion(w).values, i.values, atol=1e-12)
    assert metric_compatibility(w, g).max_abs() < 1e-9


def test_symmetry_errors(polar_chart):
    raw = make_field(K_RAW, polar_chart)
    with pytest.raises(SymmetryError):
        ContorsionField(polar_chart, raw.fn)
    with pytest.raises(SymmetryError):
        TorsionField(polar_chart, raw.fn)


def test_contorsion_frame_components(polar, contorsion):
    e, _ = polar
    kf = contorsion_frame(contorsion, e, np.eye(2)).values
    r = e.chart.points[:, 0]
    # e^th_2 = 1/r scales the second frame slot
    np.testing.assert_allclose(kf[:, 0, 1], contorsion.values[:, 0, 1] / r[:, None], atol=1e-14)
    np.testing.assert_allclose(kf, -np.swapaxes(kf, 1, 2), atol=1e-14)
