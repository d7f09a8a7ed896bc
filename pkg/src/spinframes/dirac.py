"""Dirac residuals on a frame and the identities they satisfy.

Spinor covariant derivative (declared convention)::

    nabla_mu psi = d_mu psi + 1/4 w^{ab}_mu gamma_a gamma_b psi

Residual ``R = i e^mu_a gamma^a nabla_mu psi + mass psi``.  Arrays carry a leading
grid axis; derivative results put the coordinate index last, ``D[n, i, mu]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import (
    Chart,
    Field,
    FrameField,
    MetricField,
    SpinField,
    change_trivialization,
    induce_metric,
    sample,
    transform_frame,
)
from .clifford import GammaRep
from .connection import (
    ContorsionField,
    SpinConnectionCoeffs,
    connection_from_contorsion,
    contorsion_frame,
    levi_civita,
    spin_coeffs,
)
from .fieldlang import FieldDef
from .transform import transported_contorsion

CONVENTION = "nabla_mu psi = d_mu psi + 1/4 w^{ab}_mu gamma_a gamma_b psi; R = i e^mu_a gamma^a nabla_mu psi + mass psi"


class SpinorField(Field):
    """``k`` complex components per point."""

    @classmethod
    def from_pairs(cls, pairs, chart: Chart) -> SpinorField:
        """Build from ``[[re_1, im_1], ..., [re_k, im_k]]`` expression strings."""
        fdef = FieldDef.from_nested(pairs, chart.coords)
        if len(fdef.shape) != 2 or fdef.shape[1] != 2:
            raise ValueError(f"spinor components must be (re, im) pairs, got shape {fdef.shape}")
        vals = sample(fdef, chart)

        def fn(x):
            v = fdef(x)
            return v[..., 0] + 1j * v[..., 1]

        return cls(chart, fn, values=vals[..., 0] + 1j * vals[..., 1])

    @property
    def k(self) -> int:
        return self.shape[0]


@dataclass(frozen=True)
class DiracParams:
    mass: float
    rep: GammaRep


def _spin_term(rep: GammaRep, sc: np.ndarray) -> np.ndarray:
    """``1/4 w^{ab}_mu gamma_a gamma_b`` as (N, m, k, k) with mu second."""
    gl = rep.gammas_lower
    return 0.25 * np.einsum("nabm,aij,bjk->nmik", sc, gl, gl, optimize=True)


def spinor_cov_deriv(psi: Field, sc: SpinConnectionCoeffs, rep: GammaRep) -> np.ndarray:
    """``nabla_mu psi`` on the grid, shape (N, k, m)."""
    dpsi = psi.grad_at(psi.chart.points)
    return dpsi + np.einsum("nmij,nj->nim", _spin_term(rep, sc.values), psi.values)


def _slash(e: np.ndarray, rep: GammaRep, d: np.ndarray) -> np.ndarray:
    # i e^mu_a gamma^a D_mu
    return 1j * np.einsum("nma,aij,njm->ni", e, rep.gammas, d, optimize=True)


def dirac_residual(e: FrameField, sc: SpinConnectionCoeffs, psi: Field, p: DiracParams) -> np.ndarray:
    """``R = i e^mu_a gamma^a nabla_mu psi + mass psi``, shape (N, k)."""
    d = spinor_cov_deriv(psi, sc, p.rep)
    return _slash(e.values, p.rep, d) + p.mass * psi.values


def _max_abs(a) -> float:
    return float(np.max(np.abs(a), initial=0.0))


def contorsion_split_check(e: FrameField, g: MetricField, k: ContorsionField, psi: Field, p: DiracParams) -> float:
    """Max-abs of ``R_total - R_LC - i e^mu_a gamma^a 1/4 K^{bc}_mu gamma_b gamma_c psi``."""
    eta = p.rep.eta
    r_total = dirac_residual(e, spin_coeffs(connection_from_contorsion(g, k), e, eta), psi, p)
    r_lc = dirac_residual(e, spin_coeffs(levi_civita(g), e, eta), psi, p)
    kf = contorsion_frame(k, e, eta).values
    term = np.einsum("nmij,nj->nim", _spin_term(p.rep, kf), psi.values)
    return _max_abs(r_total - r_lc - _slash(e.values, p.rep, term))


def _mixed(sc: np.ndarray, eta) -> np.ndarray:
    return np.einsum("nabm,bc->nacm", sc, eta)


def gauge_coeffs(sc: SpinConnectionCoeffs, s: SpinField) -> SpinConnectionCoeffs:
    """Coefficients in the trivialization ``e' = e L(S^-1)``.

    In mixed frame indices ``A' = M A M^-1 - (d M) M^-1`` with ``M = L(S)``.
    """
    eta = s.rep.eta
    eta_inv = np.linalg.inv(eta)
    lor = s.lorentz()
    mats = lor.values
    inv = np.linalg.inv(mats)
    dm = lor.grad_at(s.chart.points)
    a = _mixed(sc.values, eta)
    conj = np.einsum("nac,ncdm,ndb->nabm", mats, a, inv)
    deriv = np.einsum("nacm,ncb->nabm", dm, inv)
    out = np.einsum("nacm,cb->nabm", conj - deriv, eta_inv)
    return SpinConnectionCoeffs(s.chart, values=out, fd_depth=max(sc.fd_depth, 1))


def rotate_spinor(psi: Field, s: SpinField) -> Field:
    """``psi' = S psi``; keeps an evaluator when both inputs have one."""
    if psi.fn is not None and s.fn is not None:
        return SpinorField(psi.chart, lambda x: np.einsum("nij,nj->ni", s.at(x), psi.at(x)), fd_depth=max(psi.fd_depth, s.fd_depth))
    return SpinorField(psi.chart, values=np.einsum("nij,nj->ni", s.values, psi.values), fd_depth=max(psi.fd_depth, s.fd_depth))


def covariance_check(e: FrameField, sc: SpinConnectionCoeffs, psi: Field, p: DiracParams, s: SpinField) -> float:
    """Max-abs of ``R'(psi') - S R(psi)`` under the spin transformation ``S(x)``."""
    r = dirac_residual(e, sc, psi, p)
    e2 = change_trivialization(e, s.inverse)
    r2 = dirac_residual(e2, gauge_coeffs(sc, s), rotate_spinor(psi, s), p)
    return _max_abs(r2 - np.einsum("nij,nj->ni", s.values, r))


def frame_transform_dirac_check(e: FrameField, k: ContorsionField, phi, psi: Field, p: DiracParams) -> float:
    """Coefficient and residual agreement between ``(e, {g}+K)`` and ``(phi e, {g~}+K~)``.

    Returns the larger of ``max|sc - sc~|`` and the residual mismatch once the
    frame change ``e -> e~`` in the gamma contraction is accounted for.
    """
    eta = p.rep.eta
    g = induce_metric(e, eta)
    sc = spin_coeffs(connection_from_contorsion(g, k), e, eta)
    et = transform_frame(e, phi)
    gt = induce_metric(et, eta)
    sct = spin_coeffs(connection_from_contorsion(gt, transported_contorsion(k, g, phi)), et, eta)
    coeff = _max_abs(sc.values - sct.values)

    d = spinor_cov_deriv(psi, sc, p.rep)
    expected = dirac_residual(e, sc, psi, p) + _slash(et.values - e.values, p.rep, d)
    resid = _max_abs(dirac_residual(et, sct, psi, p) - expected)
    return max(coeff, resid)


def on_shell_momentum(eta, mass: float, spatial) -> np.ndarray:
    """Momentum ``p_a`` with ``eta^{ab} p_a p_b = mass^2``, solving for the first component."""
    eta_inv = np.linalg.inv(np.asarray(eta, dtype=float))
    rest = np.asarray(spatial, dtype=float)
    tail = float(rest @ eta_inv[1:, 1:] @ rest)
    sq = (mass**2 - tail) / eta_inv[0, 0]
    if sq < 0:
        raise ValueError("no real on-shell momentum for these components")
    return np.concatenate([[np.sqrt(sq)], rest])


def plane_wave_spinor(rep: GammaRep, momentum) -> tuple[np.ndarray, float]:
    """Null vector ``u`` of ``gamma^a p_a - mass`` up to the smallest singular value.

    Returns ``(u, sigma_min)``; the mass is implied by ``eta^{ab} p_a p_b``.
    """
    pslash = np.einsum("a,aij->ij", np.asarray(momentum, dtype=float), rep.gammas)
    # (p.gamma)^2 = p^2 I, so the eigenvalues are +-sqrt(p^2); pick +
    p2 = float(momentum @ np.linalg.inv(rep.eta) @ momentum)
    mass = np.sqrt(p2) if p2 >= 0 else 0.0
    _, sv, vh = np.linalg.svd(pslash - mass * np.eye(rep.k))
    return vh[-1].conj(), float(sv[-1])


def plane_wave(chart: Chart, u: np.ndarray, momentum) -> SpinorField:
    """``psi = u exp(i p_mu x^mu)`` on a Cartesian chart."""
    p = np.asarray(momentum, dtype=float)
    u = np.asarray(u, dtype=complex)
    return SpinorField(chart, lambda x: u[None, :] * np.exp(1j * (x @ p))[:, None])


def identity_frame(chart: Chart) -> FrameField:
    eye = np.eye(chart.m)
    return FrameField(chart, lambda x: np.broadcast_to(eye, (len(x), chart.m, chart.m)).copy())


def zero_coeffs(chart: Chart) -> SpinConnectionCoeffs:
    m = chart.m
    return SpinConnectionCoeffs(chart, lambda x: np.zeros((len(x), m, m, m)))
