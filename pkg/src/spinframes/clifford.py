"""Signature matrices, gamma matrices for Cl(r, s), spin elements and the covering map.

Conventions: the metric ``eta`` is diagonal with the ``plus`` block (+1) first,
then the ``minus`` block (-1).  Gamma matrices carry upper frame indices and
satisfy ``g^a g^b + g^b g^a = 2 eta^{ab} I``.  The covering map ``L(S)`` is
defined by ``S^{-1} g^a S = L^a_c g^c`` so that ``L(S1 S2) = L(S1) L(S2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

MAX_DIM = 12

_I2 = np.eye(2, dtype=complex)
_SX = np.array([[0, 1], [1, 0]], dtype=complex)
_SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SZ = np.array([[1, 0], [0, -1]], dtype=complex)


class CliffordError(ValueError):
    pass


class SpinGroupError(CliffordError):
    """Raised when a matrix does not act on the gammas as a spin-group element."""


@dataclass(frozen=True)
class Signature:
    plus: int
    minus: int

    def __post_init__(self):
        if self.plus < 0 or self.minus < 0:
            raise CliffordError(f"negative signature entry: ({self.plus}, {self.minus})")
        if self.plus + self.minus < 1:
            raise CliffordError("signature must have dimension >= 1")

    @property
    def m(self) -> int:
        return self.plus + self.minus


def build_eta(sig: Signature) -> np.ndarray:
    return np.diag([1.0] * sig.plus + [-1.0] * sig.minus)


def _kron_all(mats):
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


def _euclidean_gammas(m: int) -> list[np.ndarray]:
    # Brauer-Weyl: pairs (sz^j x sx x 1..., sz^j x sy x 1...), plus sz^n for odd m.
    n = m // 2
    gammas = []
    for j in range(n):
        head = [_SZ] * j
        tail = [_I2] * (n - j - 1)
        gammas.append(_kron_all(head + [_SX] + tail))
        gammas.append(_kron_all(head + [_SY] + tail))
    if m % 2:
        gammas.append(_kron_all([_SZ] * n))
    return gammas


@dataclass(frozen=True, eq=False)
class GammaRep:
    signature: Signature
    eta: np.ndarray
    gammas: np.ndarray  # (m, k, k), upper index

    @property
    def m(self) -> int:
        return self.signature.m

    @property
    def k(self) -> int:
        return self.gammas.shape[1]

    @property
    def gammas_lower(self) -> np.ndarray:
        return np.einsum("ab,bij->aij", self.eta, self.gammas)

    def clifford_defect(self) -> float:
        """Max-abs entry of ``{g^a, g^b} - 2 eta^{ab} I`` over all pairs."""
        g = self.gammas
        anti = np.einsum("aij,bjk->abik", g, g) + np.einsum("bij,ajk->abik", g, g)
        target = 2.0 * np.einsum("ab,ik->abik", self.eta, np.eye(self.k))
        return float(np.max(np.abs(anti - target)))

    def sigma(self) -> np.ndarray:
        """Generators ``sigma^{ab} = [g^a, g^b] / 4``, shape (m, m, k, k)."""
        g = self.gammas
        return 0.25 * (np.einsum("aij,bjk->abik", g, g) - np.einsum("bij,ajk->abik", g, g))


def build_gamma(sig: Signature) -> GammaRep:
    m = sig.m
    if m > MAX_DIM:
        raise CliffordError(f"dimension {m} exceeds the supported maximum {MAX_DIM}")
    gammas = np.array(_euclidean_gammas(m))
    gammas[sig.plus:] *= 1j
    gammas.setflags(write=False)
    eta = build_eta(sig)
    eta.setflags(write=False)
    rep = GammaRep(sig, eta, gammas)

    k = rep.k
    traces = np.einsum("aij,bji->ab", gammas, gammas)
    if np.max(np.abs(traces - k * eta)) > 1e-12:
        raise CliffordError("trace orthogonality tr(g^a g^b) = k eta^{ab} violated")
    return rep


def expm(a: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a truncated Taylor series.

    Works on stacks: ``a`` has shape (..., n, n).
    """
    a = np.asarray(a)
    norm = float(np.max(np.sum(np.abs(a), axis=-1))) if a.size else 0.0
    squarings = max(0, int(np.ceil(np.log2(norm))) + 1) if norm > 0.5 else 0
    x = a / 2.0**squarings
    eye = np.broadcast_to(np.eye(a.shape[-1], dtype=np.result_type(a, float)), a.shape)
    result = eye.copy()
    term = eye.copy()
    for j in range(1, 40):
        term = term @ x / j
        result = result + term
        if np.max(np.abs(term)) < tol * 1e-2:
            break
    for _ in range(squarings):
        result = result @ result
    return result


class SpinElement:
    """A representation-level spin group element ``S``; build it with :func:`spin_exp`."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: np.ndarray):
        matrix = np.array(matrix, dtype=complex)
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    def __setattr__(self, name, value):
        raise AttributeError("SpinElement is immutable")

    def __neg__(self) -> SpinElement:
        return SpinElement(-self.matrix)

    def __matmul__(self, other: SpinElement) -> SpinElement:
        return SpinElement(self.matrix @ other.matrix)

    def inverse(self) -> SpinElement:
        return SpinElement(np.linalg.inv(self.matrix))

    def __repr__(self):
        return f"SpinElement(k={self.matrix.shape[-1]})"


def _check_antisymmetric(theta: np.ndarray, m: int) -> None:
    if theta.shape[-2:] != (m, m):
        raise CliffordError(f"theta must have trailing shape ({m}, {m}), got {theta.shape}")
    if np.max(np.abs(theta + np.swapaxes(theta, -1, -2)), initial=0.0) > 1e-12:
        raise CliffordError("theta must be antisymmetric")


def spin_algebra_element(rep: GammaRep, theta: np.ndarray) -> np.ndarray:
    """``theta_{ab} sigma^{ab} / 2`` for a (stack of) antisymmetric lower-index ``theta``."""
    theta = np.asarray(theta, dtype=float)
    _check_antisymmetric(theta, rep.m)
    return 0.5 * np.einsum("...ab,abij->...ij", theta, rep.sigma())


def spin_exp(rep: GammaRep, theta) -> SpinElement:
    """``S = exp(theta_{ab} sigma^{ab} / 2)``.  A stacked ``theta`` gives a stacked ``S``."""
    return SpinElement(expm(spin_algebra_element(rep, theta)))


def covering_map(rep: GammaRep, s, tol: float = 1e-10) -> np.ndarray:
    """Lorentz matrix ``L^a_c`` with ``S^{-1} g^a S = L^a_c g^c``.

    Accepts a SpinElement or a raw (stack of) k x k matrices.  Raises
    SpinGroupError if the conjugation does not land in the span of the gammas
    with real coefficients.
    """
    mat = s.matrix if isinstance(s, SpinElement) else np.asarray(s, dtype=complex)
    inv = np.linalg.inv(mat)
    g = rep.gammas
    conj = np.einsum("...ij,ajk,...kl->...ail", inv, g, mat)
    traces = np.einsum("bij,...aji->...ab", g, conj)
    lor = np.einsum("...ab,bc->...ac", traces, rep.eta) / rep.k
    imag = float(np.max(np.abs(lor.imag), initial=0.0))
    if imag > tol * max(1.0, float(np.max(np.abs(lor.real), initial=0.0))):
        raise SpinGroupError(f"covering map has imaginary part {imag:.3e}")
    lor = lor.real
    recon = np.einsum("...ac,cij->...aij", lor, g)
    resid = float(np.max(np.abs(recon - conj), initial=0.0))
    if resid > tol * max(1.0, float(np.max(np.abs(conj)))):
        raise SpinGroupError(f"conjugated gammas leave the generator span (residual {resid:.3e})")
    return lor
