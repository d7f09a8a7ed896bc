"""Linear connections, spin-connection coefficients, torsion and contorsion.

Index layouts (leading grid axis omitted):

* LinearConnection       ``w[alpha, beta, mu] = w^alpha_{beta mu}``, ``nabla_mu V^a = d_mu V^a + w^a_{b mu} V^b``
* SpinConnectionCoeffs   ``w[a, b, mu] = w^{ab}_mu``
* TorsionField           ``T[lam, beta, mu] = w^lam_{beta mu} - w^lam_{mu beta}``
* ContorsionField        ``K[gamma, beta, mu]``, antisymmetric in (gamma, beta)
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .chart import ChartError, Field, FrameField, MetricField, pointwise

EXACT_TOL = 1e-12


class SymmetryError(ValueError):
    pass


class LinearConnection(Field):
    pass


class SpinConnectionCoeffs(Field):
    pass


def _scale(values) -> float:
    return max(1.0, float(np.max(np.abs(values), initial=0.0)))


class TorsionField(Field):
    """Torsion ``T^lam_{beta mu}``; stored exactly antisymmetric in the lower pair.

    Raw input must already be antisymmetric to ``EXACT_TOL`` (relative) unless
    ``antisymmetrize=True`` asks for the projection.
    """

    def __init__(self, chart, fn=None, values=None, fd_depth=0, antisymmetrize=False):
        raw = Field(chart, fn, values, fd_depth)
        if not antisymmetrize:
            defect = float(np.max(np.abs(raw.values + np.swapaxes(raw.values, -1, -2)), initial=0.0))
            if defect > EXACT_TOL * _scale(raw.values):
                raise SymmetryError(f"torsion is not antisymmetric in its lower indices (defect {defect:.3e})")
        proj = _antisym_last
        super().__init__(chart, None if fn is None else (lambda x: proj(fn(x))), proj(raw.values), fd_depth)

    def lowered(self, g: MetricField) -> Field:
        """``T_{rho beta mu} = g_{rho lam} T^lam_{beta mu}``."""
        return pointwise(lambda gx, t: np.einsum("...rl,...lbm->...rbm", gx, t), g, self)


class ContorsionField(Field):
    """Contorsion ``K_{gamma beta mu}``; stored exactly antisymmetric in (gamma, beta)."""

    def __init__(self, chart, fn=None, values=None, fd_depth=0, antisymmetrize=False):
        raw = Field(chart, fn, values, fd_depth)
        if not antisymmetrize:
            defect = antisymmetry_defect(raw.values)
            if defect > EXACT_TOL * _scale(raw.values):
                raise SymmetryError(f"contorsion is not antisymmetric in its first two indices (defect {defect:.3e})")
        proj = _antisym_first
        super().__init__(chart, None if fn is None else (lambda x: proj(fn(x))), proj(raw.values), fd_depth)

    def raised(self, g: MetricField) -> Field:
        """``g^{alpha gamma} K_{gamma beta mu}``, the connection shift."""
        return pointwise(lambda gi, k: np.einsum("...ag,...gbm->...abm", gi, k), g.inverse, self)


def _coerce(cls, f: Field):
    if isinstance(f, cls):
        return f
    return cls(f.chart, f.fn, None if f.fn is not None else f.values, f.fd_depth)


def _antisym_last(t):
    return 0.5 * (t - np.swapaxes(t, -1, -2))


def _antisym_first(k):
    return 0.5 * (k - np.swapaxes(k, -3, -2))


def antisymmetry_defect(k) -> float:
    """Max-abs of ``K_{(gamma beta) mu}`` (symmetrized with weight 1/2)."""
    k = np.asarray(k)
    return float(np.max(np.abs(0.5 * (k + np.swapaxes(k, -3, -2))), initial=0.0))


def christoffel(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Christoffel symbols ``G^a_{b m}`` from g_{ab} and dg[..., a, b, m] = d_m g_{ab}."""
    ginv = np.linalg.inv(g)
    first = (
        np.einsum("...lmb->...lbm", dg)
        + dg
        - np.einsum("...bml->...lbm", dg)
    )
    gam = 0.5 * np.einsum("...al,...lbm->...abm", ginv, first)
    return 0.5 * (gam + np.swapaxes(gam, -1, -2))


def levi_civita(g: MetricField) -> LinearConnection:
    """Christoffel symbols of the second kind, metric derivatives by finite differences."""
    if g.smooth:
        return LinearConnection(g.chart, lambda x: christoffel(g.at(x), g.jacobian_at(x)), fd_depth=1)
    return LinearConnection(g.chart, values=christoffel(g.values, g.jacobian), fd_depth=g.fd_depth + 1)


def metric_compatibility(w: Field, g: MetricField) -> Field:
    """``nabla_mu g_{ab} = d_mu g_ab - w^l_{a mu} g_lb - w^l_{b mu} g_al``."""
    def resid(x):
        gx = g.at(x)
        wx = w.at(x)
        return g.grad_at(x) - np.einsum("...lam,...lb->...abm", wx, gx) - np.einsum("...lbm,...al->...abm", wx, gx)

    if w.fn is None or not g.smooth:
        return Field(g.chart, values=resid(g.chart.points), fd_depth=1)
    return Field(g.chart, resid, fd_depth=1)


def _spin_coeffs_at(wx, frame, dframe, eta_inv):
    co = np.linalg.inv(frame)
    inner = np.einsum("...abm,...bc->...acm", wx, frame) + dframe
    mixed = np.einsum("...ba,...acm->...bcm", co, inner)
    return np.einsum("...acm,cb->...abm", mixed, eta_inv)


def spin_coeffs(w: LinearConnection, e: FrameField, eta) -> SpinConnectionCoeffs:
    """``w^{ab}_mu = w^a_{c mu} eta^{cb}`` with ``w^b_{c mu} = e^b_a (w^a_{beta mu} e^beta_c + d_mu e^a_c)``."""
    eta_inv = np.linalg.inv(np.asarray(eta, dtype=float))
    depth = max(w.fd_depth, e.fd_depth + 1)
    if w.fn is not None and e.smooth:
        return SpinConnectionCoeffs(
            e.chart, lambda x: _spin_coeffs_at(w.at(x), e.at(x), e.jacobian_at(x), eta_inv), fd_depth=depth
        )
    pts = e.chart.points
    return SpinConnectionCoeffs(
        e.chart, values=_spin_coeffs_at(w.values, e.values, e.grad_at(pts), eta_inv), fd_depth=depth
    )


class Projectability(NamedTuple):
    symmetric_part: Field
    defect: float

    def projectable(self, tol: float) -> bool:
        return self.defect < tol


def projectability_defect(sc: SpinConnectionCoeffs, eta=None) -> Projectability:
    """Symmetric part ``w^{(ab)}_mu`` and its max-abs over the grid.

    ``eta`` is accepted for symmetry with the other operations; the coefficients
    already carry both frame indices up.
    """
    sym = pointwise(lambda s: 0.5 * (s + np.swapaxes(s, -3, -2)), sc)
    return Projectability(sym, sym.max_abs())


def torsion(w: LinearConnection) -> TorsionField:
    """``T^l_{b m} = w^l_{b m} - w^l_{m b}``."""
    def skew(wx):
        return wx - np.swapaxes(wx, -1, -2)

    if w.fn is None:
        return TorsionField(w.chart, values=skew(w.values), fd_depth=w.fd_depth)
    return TorsionField(w.chart, lambda x: skew(w.at(x)), fd_depth=w.fd_depth)


def _contorsion_from_lowered(tl):
    # K_{g b m} = (T_{b m g} + T_{m b g} + T_{g b m}) / 2
    return 0.5 * (
        np.einsum("...bmg->...gbm", tl)
        + np.einsum("...mbg->...gbm", tl)
        + tl
    )


def contorsion_from_torsion(g: MetricField, t: TorsionField) -> ContorsionField:
    """Contorsion of the unique metric connection with torsion ``t``."""
    t = _coerce(TorsionField, t)
    low = t.lowered(g)
    k = pointwise(_contorsion_from_lowered, low)
    defect = antisymmetry_defect(k.values)
    if defect > EXACT_TOL * _scale(k.values):
        raise SymmetryError(f"computed contorsion violates K_(gb)m = 0 by {defect:.3e}")
    return ContorsionField(g.chart, k.fn, None if k.fn is not None else k.values, k.fd_depth, antisymmetrize=True)


def _combine(lc: LinearConnection, shift: Field) -> LinearConnection:
    return pointwise(np.add, lc, shift, cls=LinearConnection)


def connection_from_contorsion(g: MetricField, k: ContorsionField) -> LinearConnection:
    """``w^a_{b m} = {g}^a_{b m} + g^{a c} K_{c b m}``."""
    k = _coerce(ContorsionField, k)
    return _combine(levi_civita(g), k.raised(g))


def connection_from_torsion_tensor(g: MetricField, i: TorsionField) -> LinearConnection:
    """The projectable connection whose torsion is the prescribed antisymmetric ``i``.

    ``w^a_{b m} = {g}^a_{b m} + g^{a c}(I_{b m c} + I_{m b c} + I_{c b m}) / 2``.
    """
    i = _coerce(TorsionField, i)
    shift = pointwise(
        lambda gi, il: np.einsum("...ac,...cbm->...abm", gi, _contorsion_from_lowered(il)),
        g.inverse,
        i.lowered(g),
    )
    return _combine(levi_civita(g), shift)


def contorsion_frame(k: ContorsionField, e: FrameField, eta) -> Field:
    """Frame-index contorsion ``K^{bc}_mu = eta^{bd} eta^{ce} e^g_d e^beta_e K_{g beta mu}``."""
    eta_inv = np.linalg.inv(np.asarray(eta, dtype=float))
    return pointwise(
        lambda frame, kx: np.einsum("bd,ce,...gd,...he,...ghm->...bcm", eta_inv, eta_inv, frame, frame, kx, optimize=True),
        e,
        k,
    )


def require_same_chart(*fields: Field) -> None:
    chart = fields[0].chart
    for f in fields[1:]:
        if f.chart != chart:
            raise ChartError("fields live on different charts")
