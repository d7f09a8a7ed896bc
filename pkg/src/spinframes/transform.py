"""How connections, torsion and contorsion move under a frame transformation phi.

With ``e~ = phi e`` and ``g~ = phibar^T g phibar`` (``phibar = phi^{-1}``):

* ``transport_connection``    w~ = phi (w phibar + d phibar)
* ``h_tensor``                {g~} - {g} written with LC derivatives of phibar
* ``k_tensor``                w~ - w = phi nabla^w phibar
* ``transported_contorsion``  the contorsion making w~ projectable on e~
* ``transported_torsion``     its torsion

Symmetrization carries weight 1/2: ``A_(ab) = (A_ab + A_ba) / 2``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .chart import (
    Field,
    FrameField,
    MetricField,
    TransformField,
    induce_metric,
    transform_frame,
    transform_metric,
)
from .connection import (
    ContorsionField,
    LinearConnection,
    TorsionField,
    antisymmetry_defect,
    connection_from_contorsion,
    levi_civita,
    spin_coeffs,
    torsion,
)


def covariant_derivative(t: np.ndarray, dt: np.ndarray, w: np.ndarray, variance: str) -> np.ndarray:
    """``nabla_mu`` of a tensor under the connection ``w``.

    ``t`` has shape (N, *indices), ``dt`` = (N, *indices, m) its partial
    derivatives, ``w`` = (N, m, m, m).  ``variance`` gives one letter per index,
    ``u`` (upper) or ``l`` (lower).
    """
    out = np.array(dt, dtype=np.result_type(dt, w))
    nidx = len(variance)
    for i, kind in enumerate(variance):
        pos = 1 + i
        moved = np.moveaxis(t, pos, -1)
        if kind == "u":
            term = np.einsum("n...c,nacm->n...am", moved, w)
        elif kind == "l":
            term = -np.einsum("n...c,ncbm->n...bm", moved, w)
        else:
            raise ValueError(f"variance letters must be 'u' or 'l', got {kind!r}")
        out += np.moveaxis(term, -2, pos)
    assert out.ndim == nidx + 2
    return out


def _sym_last(a):
    return 0.5 * (a + np.swapaxes(a, -1, -2))


class _Ingredients:
    """Pointwise values shared by the transport formulas at a batch of points."""

    def __init__(self, x, phi: TransformField, g: MetricField = None, w: Field = None):
        self.phi = phi.at(x)
        self.phibar = phi.inverse.at(x)
        self.dphibar = phi.inverse.jacobian_at(x)
        if g is not None:
            self.g = g.at(x)
            self.ginv = np.linalg.inv(self.g)
            self.lc = levi_civita(g).at(x)
            # D[g, b, m] = nabla^{g}_m phibar^g_b
            self.dlc = covariant_derivative(self.phibar, self.dphibar, self.lc, "ul")
        if w is not None:
            self.w = w.at(x)


def transport_connection(w: LinearConnection, phi: TransformField) -> LinearConnection:
    """``w~^a_{b m} = phi^a_c (w^c_{d m} phibar^d_b + d_m phibar^c_b)``."""
    def fn(x):
        q = _Ingredients(x, phi, w=w)
        inner = np.einsum("ncdm,ndb->ncbm", q.w, q.phibar) + q.dphibar
        return np.einsum("nac,ncbm->nabm", q.phi, inner)

    return LinearConnection(phi.chart, fn, fd_depth=max(1, w.fd_depth))


def h_tensor(g: MetricField, phi: TransformField) -> Field:
    """Closed form of ``{g~} - {g}``, symmetric in its lower pair."""
    def fn(x):
        q = _Ingredients(x, phi, g=g)
        d = q.dlc
        gt_inv = np.einsum("nag,ngd,nld->nal", q.phi, q.ginv, q.phi)
        first = np.einsum("nag,ngbm->nabm", q.phi, _sym_last(d))
        # g_{rs} phibar^r_b D[s, l, m], symmetrized in (b, m)
        second = _sym_last(np.einsum("nrs,nrb,nslm->nlbm", q.g, q.phibar, d))
        # g_{rs} D[r, b, l] phibar^s_m, symmetrized in (b, m)
        third = _sym_last(np.einsum("nrs,nrbl,nsm->nlbm", q.g, d, q.phibar))
        return first + np.einsum("nal,nlbm->nabm", gt_inv, second - third)

    return Field(phi.chart, fn, fd_depth=1)


def k_tensor(w: LinearConnection, phi: TransformField) -> Field:
    """``k^a_{b m} = phi^a_c nabla^w_m phibar^c_b``."""
    def fn(x):
        q = _Ingredients(x, phi, w=w)
        d = covariant_derivative(q.phibar, q.dphibar, q.w, "ul")
        return np.einsum("nac,ncbm->nabm", q.phi, d)

    return Field(phi.chart, fn, fd_depth=max(1, w.fd_depth))


def transported_contorsion(k: ContorsionField, g: MetricField, phi: TransformField, project: bool = True):
    """Contorsion ``K~_{r b m}`` for which the transported connection projects on ``e~``.

    ``K~ = g phibar_r . nabla_[m phibar_b] - g phibar_(b . nabla_m) phibar_r
    + g nabla_r phibar_(b . phibar_m) + phibar^s_r K_{s h m} phibar^h_b``.

    With ``project=False`` the literal formula is returned as a plain Field
    (its antisymmetry in (r, b) is then a numerical check, not a guarantee).
    """
    def fn(x):
        q = _Ingredients(x, phi, g=g)
        d = q.dlc
        kx = k.at(x)
        skew = 0.5 * (d - np.swapaxes(d, -1, -2))  # nabla_[m phibar^g_b]
        t1 = np.einsum("nag,nar,ngbm->nrbm", q.g, q.phibar, skew)
        t2 = _sym_last(np.einsum("nag,nab,ngrm->nrbm", q.g, q.phibar, d))
        t3 = _sym_last(np.einsum("nag,nabr,ngm->nrbm", q.g, d, q.phibar))
        t4 = np.einsum("nsr,nshm,nhb->nrbm", q.phibar, kx, q.phibar)
        return t1 - t2 + t3 + t4

    raw = Field(phi.chart, fn, fd_depth=1)
    if not project:
        return raw
    return ContorsionField(phi.chart, fn, fd_depth=1, antisymmetrize=True)


def transported_torsion(k: ContorsionField, g: MetricField, phi: TransformField) -> TorsionField:
    """``T~^l_{b m} = 2 phi^l_g nabla_[m phibar^g_b] + 2 phi^l_g g^{gs} K_{s h [m} phibar^h_b]``."""
    def fn(x):
        q = _Ingredients(x, phi, g=g)
        d = q.dlc
        kx = k.at(x)
        kphi = np.einsum("nshm,nhb->nsbm", kx, q.phibar)  # K_{s h m} phibar^h_b
        inner = (d - np.swapaxes(d, -1, -2)) + np.einsum("ngs,nsbm->ngbm", q.ginv, kphi - np.swapaxes(kphi, -1, -2))
        return np.einsum("nlg,ngbm->nlbm", q.phi, inner)

    return TorsionField(phi.chart, fn, fd_depth=1)


def torsionless_transported_torsion(g: MetricField, phi: TransformField) -> TorsionField:
    """``phi^l_g (nabla_m phibar^g_b - nabla_b phibar^g_m)``, the K = 0 special case."""
    def fn(x):
        q = _Ingredients(x, phi, g=g)
        return np.einsum("nlg,ngbm->nlbm", q.phi, q.dlc - np.swapaxes(q.dlc, -1, -2))

    return TorsionField(phi.chart, fn, fd_depth=1)


def _max_diff(a: Field, b: Field) -> float:
    return float(np.max(np.abs(a.values - b.values), initial=0.0))


def ktilde_consistency(k: ContorsionField, g: MetricField, phi: TransformField, ktilde: Field) -> float:
    """Max-abs of ``K~_{r b m} - g~_{r a}(g^{a c} K_{c b m} + k^a_{b m} - h^a_{b m})``.

    Compared with the first index lowered so that a perturbation of one stored
    component of ``ktilde`` shows up at its own size.
    """
    w = connection_from_contorsion(g, k)
    gt = transform_metric(g, phi)
    rhs = k.raised(g).values + k_tensor(w, phi).values - h_tensor(g, phi).values
    lowered = np.einsum("nra,nabm->nrbm", gt.values, rhs)
    return float(np.max(np.abs(ktilde.values - lowered), initial=0.0))


@dataclass
class TransportReport:
    h_defect: float
    k_defect: float
    ktilde_antisymmetry: float
    ktilde_consistency: float
    ttilde_consistency: float
    pullback_equality: float
    tolerances: dict = field(default_factory=dict)

    @property
    def passes(self) -> dict:
        return {name: getattr(self, name) < tol for name, tol in self.tolerances.items()}

    @property
    def ok(self) -> bool:
        return all(self.passes.values())

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passes"] = self.passes
        return out


def pullback_equality_check(e: FrameField, k: ContorsionField, phi: TransformField, eta) -> float:
    """Max-abs difference between the spin coefficients pulled back along ``e`` and along ``e~``."""
    g = induce_metric(e, eta)
    sc = spin_coeffs(connection_from_contorsion(g, k), e, eta)
    et = transform_frame(e, phi)
    gt = induce_metric(et, eta)
    kt = transported_contorsion(k, g, phi)
    sct = spin_coeffs(connection_from_contorsion(gt, kt), et, eta)
    return _max_diff(sc, sct)


def transport_report(e: FrameField, k: ContorsionField, phi: TransformField, eta, tolerances=None) -> TransportReport:
    """Every transport identity for one (frame, contorsion, transformation) triple."""
    g = induce_metric(e, eta)
    w = connection_from_contorsion(g, k)
    et = transform_frame(e, phi)
    gt = induce_metric(et, eta)

    h_defect = _max_diff(h_tensor(g, phi), pointwise_sub(levi_civita(gt), levi_civita(g)))
    k_defect = _max_diff(k_tensor(w, phi), pointwise_sub(transport_connection(w, phi), w))
    raw = transported_contorsion(k, g, phi, project=False)
    kt = transported_contorsion(k, g, phi)
    ttilde = transported_torsion(k, g, phi)
    ttilde_ref = torsion(connection_from_contorsion(gt, kt))

    if tolerances is None:
        tolerances = {
            "h_defect": 1e-6,
            "k_defect": 1e-8,
            "ktilde_antisymmetry": 1e-10,
            "ktilde_consistency": 1e-6,
            "ttilde_consistency": 1e-6,
            "pullback_equality": 1e-6,
        }
    return TransportReport(
        h_defect=h_defect,
        k_defect=k_defect,
        ktilde_antisymmetry=antisymmetry_defect(raw.values),
        ktilde_consistency=ktilde_consistency(k, g, phi, raw),
        ttilde_consistency=_max_diff(ttilde, ttilde_ref),
        pullback_equality=pullback_equality_check(e, k, phi, eta),
        tolerances=dict(tolerances),
    )


def pointwise_sub(a: Field, b: Field) -> Field:
    return Field(a.chart, values=a.values - b.values, fd_depth=max(a.fd_depth, b.fd_depth))
