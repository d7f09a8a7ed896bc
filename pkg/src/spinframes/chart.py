"""Coordinate charts, sampled fields and finite differences.

Every field is a pair (chart, evaluator).  The evaluator maps stacked points of
shape (N, m) to values of shape (N, *field_shape), so derivatives are taken by
re-evaluating at ``x +- h e_mu`` instead of differencing grid samples.  Fields
built from raw arrays have no evaluator and fall back to grid stencils.

Index layout of the stored arrays (leading axis = grid point):

* frame        ``E[n, mu, a] = e^mu_a``
* coframe      ``C[n, a, mu] = e^a_mu``
* metric       ``g[n, mu, nu]``
* transform    ``phi[n, mu, nu] = phi^mu_nu``
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .clifford import GammaRep, covering_map, expm, spin_algebra_element
from .fieldlang import RESERVED, FieldDef

DEFAULT_SAMPLES = 8
DEFAULT_REL_STEP = 1e-5
MIN_REL_STEP = 1e-12
DET_FLOOR = 1e-12


class ChartError(ValueError):
    pass


class NonFiniteSample(ChartError):
    def __init__(self, point: dict, entry: tuple, source: str = ""):
        self.point = point
        self.entry = entry
        self.source = source
        where = ", ".join(f"{k}={v:.17g}" for k, v in point.items())
        what = f" ({source!r})" if source else ""
        super().__init__(f"non-finite value of entry {entry}{what} at {where}")


class SingularField(ChartError):
    pass


@dataclass(frozen=True)
class Chart:
    coords: tuple
    ranges: tuple  # ((lo, hi), ...)
    samples: tuple
    fd_step: tuple  # absolute step per axis

    @classmethod
    def create(cls, coords: Sequence[str], ranges, samples=DEFAULT_SAMPLES, fd_step=None) -> Chart:
        coords = tuple(coords)
        m = len(coords)
        if m < 1:
            raise ChartError("a chart needs at least one coordinate")
        if len(set(coords)) != m:
            raise ChartError(f"duplicate coordinate names in {coords}")
        for name in coords:
            if name in RESERVED:
                raise ChartError(f"coordinate name {name!r} is reserved")
        ranges = tuple((float(lo), float(hi)) for lo, hi in ranges)
        if len(ranges) != m:
            raise ChartError(f"expected {m} ranges, got {len(ranges)}")
        for name, (lo, hi) in zip(coords, ranges):
            if not lo < hi:
                raise ChartError(f"empty range for {name}: [{lo}, {hi}]")
        samples = _per_axis(samples, m, int)
        if any(n < 2 for n in samples):
            raise ChartError("each axis needs at least 2 samples")
        widths = [hi - lo for lo, hi in ranges]
        if fd_step is None:
            fd_step = tuple(DEFAULT_REL_STEP * w for w in widths)
        else:
            fd_step = _per_axis(fd_step, m, float)
        for name, h, w in zip(coords, fd_step, widths):
            if not h >= MIN_REL_STEP * w:
                raise ChartError(f"finite-difference step {h} for {name} underflows (range {w})")
        return cls(coords, ranges, samples, fd_step)

    @property
    def m(self) -> int:
        return len(self.coords)

    @property
    def shape(self) -> tuple:
        return self.samples

    @property
    def n_points(self) -> int:
        return int(np.prod(self.samples))

    @cached_property
    def axes(self) -> tuple:
        return tuple(np.linspace(lo, hi, n) for (lo, hi), n in zip(self.ranges, self.samples))

    @cached_property
    def points(self) -> np.ndarray:
        """Grid points in row-major order, shape (N, m)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        pts = np.stack([c.reshape(-1) for c in mesh], axis=-1)
        pts.setflags(write=False)
        return pts

    def point_dict(self, x) -> dict:
        return {name: float(v) for name, v in zip(self.coords, x)}


def _per_axis(value, m, kind):
    if np.ndim(value) == 0:
        return (kind(value),) * m
    value = tuple(kind(v) for v in value)
    if len(value) != m:
        raise ChartError(f"expected {m} per-axis values, got {len(value)}")
    return value


Evaluator = Callable[[np.ndarray], np.ndarray]


class Field:
    """A tensor-valued field on a chart.

    ``fn`` evaluates at arbitrary stacked points; ``values`` caches the grid
    samples.  ``fd_depth`` counts the finite differences already inside ``fn``.
    """

    def __init__(self, chart: Chart, fn: Optional[Evaluator] = None, values=None, fd_depth: int = 0):
        if fn is None and values is None:
            raise ChartError("a field needs an evaluator or grid values")
        self.chart = chart
        self.fn = fn
        self.fd_depth = fd_depth
        if values is not None:
            values = np.asarray(values)
            if values.shape[0] != chart.n_points:
                raise ChartError(f"values have {values.shape[0]} points, chart has {chart.n_points}")
            values.setflags(write=False)
            self.__dict__["values"] = values

    @cached_property
    def values(self) -> np.ndarray:
        vals = np.asarray(self.fn(self.chart.points))
        vals.setflags(write=False)
        return vals

    @property
    def shape(self) -> tuple:
        return self.values.shape[1:]

    def at(self, points) -> np.ndarray:
        if self.fn is None:
            raise ChartError("field has no evaluator; only grid values are available")
        return self.fn(np.asarray(points, dtype=float))

    def jacobian_at(self, points) -> np.ndarray:
        """Central differences of the evaluator; derivative index appended last."""
        x = np.asarray(points, dtype=float)
        parts = []
        for mu, h in enumerate(self.chart.fd_step):
            shift = np.zeros(self.chart.m)
            shift[mu] = h
            parts.append((self.fn(x + shift) - self.fn(x - shift)) / (2.0 * h))
        return np.stack(parts, axis=-1)

    @cached_property
    def jacobian(self) -> np.ndarray:
        """Derivatives on the grid, shape (N, *shape, m)."""
        if self.smooth:
            jac = self.jacobian_at(self.chart.points)
        else:
            jac = np.stack([_stencil(self.values, self.chart, mu) for mu in range(self.chart.m)], axis=-1)
        jac.setflags(write=False)
        return jac

    @property
    def smooth(self) -> bool:
        """True if derivatives can be taken by re-evaluation (no nested differences)."""
        return self.fn is not None and self.fd_depth == 0

    def grad_at(self, points) -> np.ndarray:
        """Jacobian at ``points``; sampled or already-differenced fields only on the grid."""
        if self.smooth:
            return self.jacobian_at(points)
        if points is self.chart.points or np.array_equal(points, self.chart.points):
            return self.jacobian
        raise ChartError("derivative of this field is only available on the grid")

    def partial(self, mu: int) -> Field:
        if not self.smooth:
            return Field(self.chart, values=_stencil(self.values, self.chart, mu), fd_depth=self.fd_depth + 1)
        h = self.chart.fd_step[mu]
        shift = np.zeros(self.chart.m)
        shift[mu] = h
        fn = self.fn
        return Field(self.chart, lambda x: (fn(x + shift) - fn(x - shift)) / (2.0 * h), fd_depth=self.fd_depth + 1)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))


def _stencil(values: np.ndarray, chart: Chart, mu: int) -> np.ndarray:
    field_shape = values.shape[1:]
    grid = values.reshape(chart.shape + field_shape)
    d = np.gradient(grid, chart.axes[mu], axis=mu, edge_order=2)
    return d.reshape(values.shape)


def pointwise(func: Callable, *fields: Field, cls=Field, **kwargs) -> Field:
    """Field whose value at x is ``func(f1(x), f2(x), ...)``."""
    chart = fields[0].chart
    depth = max(f.fd_depth for f in fields)
    if all(f.fn is not None for f in fields):
        return cls(chart, lambda x: func(*(f.at(x) for f in fields)), fd_depth=depth, **kwargs)
    return cls(chart, values=func(*(f.values for f in fields)), fd_depth=depth, **kwargs)


def sample(fdef: FieldDef, chart: Chart) -> np.ndarray:
    """Evaluate a field definition on the chart grid; reject non-finite samples."""
    if tuple(fdef.coords) != chart.coords:
        raise ChartError(f"field coordinates {fdef.coords} do not match chart {chart.coords}")
    vals = fdef(chart.points)
    bad = ~np.isfinite(vals)
    if bad.any():
        n, *entry = np.argwhere(bad)[0]
        entry = tuple(int(i) for i in entry)
        flat = int(np.ravel_multi_index(entry, fdef.shape)) if entry else 0
        raise NonFiniteSample(chart.point_dict(chart.points[n]), entry, fdef.sources[flat])
    return vals


def field_from_def(fdef: FieldDef, chart: Chart, cls=Field, **kwargs) -> Field:
    vals = sample(fdef, chart)
    return cls(chart, fdef, values=vals, **kwargs)


def _check_invertible(mats: np.ndarray, chart: Chart, what: str) -> None:
    det = np.linalg.det(mats)
    bad = np.abs(det) <= DET_FLOOR
    if bad.any():
        n = int(np.argmax(bad))
        raise SingularField(f"{what} is singular at {chart.point_dict(chart.points[n])} (det={det[n]:.3e})")


class FrameField(Field):
    """``e^mu_a``: columns are the frame vectors in coordinate components."""

    def __init__(self, chart, fn=None, values=None, fd_depth=0):
        super().__init__(chart, fn, values, fd_depth)
        _check_invertible(self.values, chart, "frame")

    @cached_property
    def coframe(self) -> Field:
        return pointwise(np.linalg.inv, self)

    def duality_defect(self) -> float:
        prod = np.einsum("nam,nmb->nab", self.coframe.values, self.values)
        return float(np.max(np.abs(prod - np.eye(self.chart.m))))


class MetricField(Field):
    def __init__(self, chart, fn=None, values=None, fd_depth=0, signature=None):
        super().__init__(chart, fn, values, fd_depth)
        g = self.values
        if np.max(np.abs(g - np.swapaxes(g, -1, -2))) > 1e-12 * max(1.0, float(np.max(np.abs(g)))):
            raise ChartError("metric is not symmetric")
        _check_invertible(g, chart, "metric")
        if signature is not None:
            eig = np.linalg.eigvalsh(g)
            plus = np.sum(eig > 0, axis=-1)
            if np.any(plus != signature.plus) or np.any(np.sum(eig < 0, axis=-1) != signature.minus):
                raise ChartError(f"metric signature differs from ({signature.plus}, {signature.minus})")

    @cached_property
    def inverse(self) -> Field:
        return pointwise(np.linalg.inv, self)


class TransformField(Field):
    """``phi^mu_nu``, pointwise invertible."""

    def __init__(self, chart, fn=None, values=None, fd_depth=0):
        super().__init__(chart, fn, values, fd_depth)
        _check_invertible(self.values, chart, "transformation")

    @cached_property
    def inverse(self) -> Field:
        return pointwise(np.linalg.inv, self)

    def compose(self, first: TransformField) -> TransformField:
        """``self . first``: apply ``first`` and then ``self``."""
        return pointwise(np.matmul, self, first, cls=TransformField)


class SpinField(Field):
    """Pointwise spin-group elements ``S(x)`` as k x k matrices."""

    def __init__(self, chart, rep: GammaRep, fn=None, values=None, fd_depth=0):
        super().__init__(chart, fn, values, fd_depth)
        self.rep = rep

    @classmethod
    def from_theta(cls, rep: GammaRep, theta: Field) -> SpinField:
        """``S(x) = exp(theta_ab(x) sigma^ab / 2)`` for an antisymmetric parameter field."""
        return cls(theta.chart, rep, lambda x: expm(spin_algebra_element(rep, theta.at(x))), fd_depth=theta.fd_depth)

    @cached_property
    def inverse(self) -> SpinField:
        return SpinField(self.chart, self.rep, lambda x: np.linalg.inv(self.at(x)), fd_depth=self.fd_depth)

    def lorentz(self) -> Field:
        return pointwise(lambda s: covering_map(self.rep, s), self)


def induce_metric(e: FrameField, eta, signature=None) -> MetricField:
    """``g_{mu nu} = e^a_mu eta_ab e^b_nu``."""
    eta = np.asarray(eta, dtype=float)

    def metric(frame):
        co = np.linalg.inv(frame)
        g = np.einsum("...am,ab,...bn->...mn", co, eta, co)
        return 0.5 * (g + np.swapaxes(g, -1, -2))

    return pointwise(metric, e, cls=MetricField, signature=signature)


def transform_frame(e: FrameField, phi: TransformField) -> FrameField:
    """``e~^mu_a = phi^mu_nu e^nu_a``."""
    return pointwise(np.matmul, phi, e, cls=FrameField)


def transform_metric(g: MetricField, phi: TransformField) -> MetricField:
    """``g~_{mu nu} = phibar^rho_mu g_{rho sigma} phibar^sigma_nu``."""
    def metric(gx, phibar):
        out = np.einsum("...rm,...rs,...sn->...mn", phibar, gx, phibar)
        return 0.5 * (out + np.swapaxes(out, -1, -2))

    return pointwise(metric, g, phi.inverse, cls=MetricField)


def change_trivialization(e: FrameField, s: SpinField) -> FrameField:
    """``e'^mu_a = e^mu_b L(S(x))^b_a``: a vertical change of trivialization."""
    return pointwise(lambda frame, mats: frame @ covering_map(s.rep, mats), e, s, cls=FrameField)
