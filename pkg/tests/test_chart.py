from __future__ import annotations

import numpy as np
import pytest
from conftest import make_field

from spinframes.chart import (
    Chart,
    ChartError,
    Field,
    FrameField,
    MetricField,
    NonFiniteSample,
    SingularField,
    SpinField,
    TransformField,
    change_trivialization,
    induce_metric,
    pointwise,
    transform_frame,
    transform_metric,
)
from spinframes.clifford import Signature, build_eta, build_gamma


def test_chart_validation():
    with pytest.raises(ChartError):
        Chart.create(["r", "r"], [(0, 1), (0, 1)])
    with pytest.raises(ChartError):
        Chart.create(["r"], [(1, 1)])
    with pytest.raises(ChartError):
        Chart.create(["sin"], [(0, 1)])
    with pytest.raises(ChartError):
        Chart.create(["r"], [(0, 1)], samples=1)
    with pytest.raises(ChartError):
        Chart.create(["r"], [(0, 1)], fd_step=1e-14)
    with pytest.raises(ChartError):
        Chart.create(["r", "th"], [(0, 1)])


def test_grid_is_row_major(polar_chart):
    pts = polar_chart.points
    assert pts.shape == (64, 2)
    np.testing.assert_allclose(pts[0], [1.0, 0.2])
    np.testing.assert_allclose(pts[1], [1.0, 0.2 + 1.0 / 7])
    np.testing.assert_allclose(pts[8], [1.0 + 1.0 / 7, 0.2])
    assert not pts.flags.writeable


def test_finite_differences_of_smooth_field(polar_chart):
    f = make_field("r^2*sin(th)", polar_chart)
    r, th = polar_chart.points.T
    exact = np.stack([2 * r * np.sin(th), r**2 * np.cos(th)], axis=-1)
    np.testing.assert_allclose(f.jacobian, exact, atol=1e-9)
    np.testing.assert_allclose(f.partial(1).values, exact[:, 1], atol=1e-9)


def test_stencil_fallback_for_sampled_field(polar_chart):
    r, th = polar_chart.points.T
    f = Field(polar_chart, values=r**2)
    assert not f.smooth
    # second-order stencil is exact on quadratics
    np.testing.assert_allclose(f.jacobian[:, 0], 2 * r, atol=1e-12)
    with pytest.raises(ChartError):
        f.at(polar_chart.points)
    with pytest.raises(ChartError):
        f.grad_at(polar_chart.points[:3] + 0.01)


def test_nonfinite_sample_names_point():
    chart = Chart.create(["r"], [(0.0, 1.0)], samples=3)
    with pytest.raises(NonFiniteSample) as info:
        make_field(["1/r"], chart)
    assert info.value.point == {"r": 0.0}
    assert "r=0" in str(info.value)


def test_singular_frame_rejected(polar_chart):
    with pytest.raises(SingularField):
        make_field([["1", "r"], ["1", "r"]], polar_chart, FrameField)


def test_metric_validation(polar_chart):
    with pytest.raises(ChartError):
        make_field([["1", "r"], ["0", "1"]], polar_chart, MetricField)
    with pytest.raises(ChartError):
        make_field([["1", "0"], ["0", "-1"]], polar_chart, MetricField, signature=Signature(2, 0))
    g = make_field([["1", "0"], ["0", "-1"]], polar_chart, MetricField, signature=Signature(1, 1))
    np.testing.assert_allclose(g.inverse.values, g.values)


def test_polar_metric(polar_chart):
    e = make_field([["1", "0"], ["0", "1/r"]], polar_chart, FrameField)
    g = induce_metric(e, np.eye(2), signature=Signature(2, 0))
    r = polar_chart.points[:, 0]
    np.testing.assert_allclose(g.values[:, 1, 1], r**2, atol=1e-12)
    np.testing.assert_allclose(g.values[:, 0, 0], 1.0)
    assert e.duality_defect() < 1e-15


def test_transform_metric_matches_induced(polar_chart):
    e = make_field([["1", "0.1*th"], ["0.2", "1/r"]], polar_chart, FrameField)
    phi = make_field([["1 + 0.1*r", "0.3*th"], ["0", "r"]], polar_chart, TransformField)
    eta = np.eye(2)
    direct = induce_metric(transform_frame(e, phi), eta)
    via = transform_metric(induce_metric(e, eta), phi)
    np.testing.assert_allclose(direct.values, via.values, atol=1e-13)
    # a non-orthogonal transformation changes the metric
    assert np.max(np.abs(direct.values - induce_metric(e, eta).values)) > 1e-2


def test_compose_transformations(polar_chart):
    a = make_field([["1", "r"], ["0", "1"]], polar_chart, TransformField)
    b = make_field([["2", "0"], ["th", "1"]], polar_chart, TransformField)
    np.testing.assert_allclose(a.compose(b).values, a.values @ b.values)
    np.testing.assert_allclose(a.inverse.values @ a.values, np.broadcast_to(np.eye(2), (64, 2, 2)), atol=1e-14)


def test_vertical_change_preserves_metric(polar_chart):
    rep = build_gamma(Signature(2, 0))
    e = make_field([["1", "0"], ["0", "1/r"]], polar_chart, FrameField)
    theta = make_field([["0", "r*th"], ["-r*th", "0"]], polar_chart)
    s = SpinField.from_theta(rep, theta)
    e2 = change_trivialization(e, s)
    eta = build_eta(Signature(2, 0))
    np.testing.assert_allclose(induce_metric(e2, eta).values, induce_metric(e, eta).values, atol=1e-13)
    assert np.max(np.abs(e2.values - e.values)) > 0.1
    lor = s.lorentz().values
    np.testing.assert_allclose(lor[:, 0, 0], np.cos(polar_chart.points[:, 0] * polar_chart.points[:, 1]), atol=1e-13)


def test_pointwise_without_evaluator(polar_chart):
    f = Field(polar_chart, values=np.ones(64))
    g = make_field("r", polar_chart)
    h = pointwise(np.add, f, g)
    assert h.fn is None
    np.testing.assert_allclose(h.values, 1 + polar_chart.points[:, 0])
