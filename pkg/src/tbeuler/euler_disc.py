"""Forward Euler map of a unit-delay DDE and its block-companion linearization.

With step ``eps = 1/m`` the scheme ``z_{k+1} = z_k + eps f(z_k, z_{k-m}, alpha)``
acts on windows ``u_k = (z_k, z_{k-1}, ..., z_{k-m})`` stored newest first,
shape ``(m+1, n)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import SizeCapExceeded
from .model import DDEModel, eval_f, extract_linear, jacobians
from .tb_continuous import TBEigendata

log = logging.getLogger(__name__)

DENSE_CAP = 2048
EIG_TOL = 1e-10


class OverflowDiverged(ArithmeticError):
    """Raised when an Euler step produces a non-finite state."""


@dataclass(frozen=True)
class EulerScheme:
    model: DDEModel
    m: int
    alpha: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))

    @property
    def eps(self) -> float:
        return 1.0 / self.m

    @property
    def eps_exact(self) -> Fraction:
        return Fraction(1, self.m)

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def size(self) -> int:
        return (self.m + 1) * self.n

    def with_alpha(self, alpha) -> "EulerScheme":
        return EulerScheme(self.model, self.m, tuple(alpha))


@dataclass(frozen=True)
class CompanionMatrix:
    """``C`` with top blocks ``I + eps*A`` (first) and ``eps*B`` (last) and
    identity blocks on the block subdiagonal."""

    head: np.ndarray  # I + eps*A
    tail: np.ndarray  # eps*B
    m: int

    @property
    def n(self) -> int:
        return self.head.shape[0]

    @property
    def size(self) -> int:
        return (self.m + 1) * self.n

    def dense(self) -> np.ndarray:
        n, N = self.n, self.size
        C = np.zeros((N, N))
        C[:n, :n] = self.head
        C[:n, N - n:] += self.tail
        C[n:, :N - n] += np.eye(N - n)
        return C

    def matvec(self, v: np.ndarray) -> np.ndarray:
        n = self.n
        v = np.asarray(v, dtype=float).reshape(self.m + 1, n)
        out = np.empty_like(v)
        out[0] = self.head @ v[0] + self.tail @ v[-1]
        out[1:] = v[:-1]
        return out.reshape(-1)


def _linearization(scheme: EulerScheme, at_point=None):
    n = scheme.n
    z = np.zeros(n) if at_point is None else np.asarray(at_point, dtype=float).reshape(-1)
    if z.size != n:
        raise ValueError(f"at_point must have length {n}")
    if not z.any() and scheme.alpha == (0.0, 0.0):
        lin = extract_linear(scheme.model)
        return lin.A, lin.B
    return jacobians(scheme.model, z, z, scheme.alpha)


def build_companion(scheme: EulerScheme, at_point=None) -> CompanionMatrix:
    A, B = _linearization(scheme, at_point)
    eps = scheme.eps
    return CompanionMatrix(np.eye(scheme.n) + eps * A, eps * B, scheme.m)


def reduced_char(scheme: EulerScheme, lam: complex, at_point=None) -> complex:
    """``det(lam^m (lam - 1) I - lam^m eps A - eps B)``.

    This is the block-companion determinant identity, so the value coincides
    with ``dense_char``; at ``lam = 0`` the dense determinant is used.
    """
    lam = complex(lam)
    if lam == 0:
        return dense_char(scheme, lam, at_point)
    A, B = _linearization(scheme, at_point)
    eps, m, n = scheme.eps, scheme.m, scheme.n
    lm = lam**m
    M = lm * (lam - 1) * np.eye(n) - lm * eps * A - eps * B
    return complex(np.linalg.det(M.astype(complex)))


def dense_char(scheme: EulerScheme, lam: complex, at_point=None) -> complex:
    C = build_companion(scheme, at_point).dense()
    _check_cap(C.shape[0])
    return complex(np.linalg.det(lam * np.eye(C.shape[0]) - C))


def _check_cap(size: int, cap: int = DENSE_CAP):
    if size > cap:
        raise SizeCapExceeded(f"dense companion of size {size} exceeds cap {cap}")


def spectrum(scheme: EulerScheme, at_point=None, cap: int = DENSE_CAP) -> np.ndarray:
    """All eigenvalues of ``C``, sorted by descending modulus."""
    _check_cap(scheme.size, cap)
    w = np.linalg.eigvals(build_companion(scheme, at_point).dense())
    order = np.lexsort((-w.imag, -w.real, -np.abs(w)))
    return w[order]


def resonance_check(scheme: EulerScheme, unit_tol: float = 1e-6, gap: float = 1e-4) -> dict:
    """Count eigenvalues at 1 and measure the spectral gap to the unit circle."""
    w = spectrum(scheme)
    near_one = np.abs(w - 1.0) < unit_tol
    rest = w[~near_one]
    min_gap = float(np.min(np.abs(np.abs(rest) - 1.0))) if rest.size else np.inf
    return {
        "n_unit": int(near_one.sum()),
        "min_gap": min_gap,
        "passed": bool(near_one.sum() == 2 and min_gap > gap),
        "eigenvalues": w,
    }


# -- discrete eigenvector quadruple ------------------------------------------------

@dataclass(frozen=True)
class DiscreteEigendata:
    phi1: np.ndarray
    phi2: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    path: str = ""

    @property
    def Phi(self) -> np.ndarray:
        return np.column_stack([self.phi1, self.phi2])

    @property
    def Psi(self) -> np.ndarray:
        return np.vstack([self.psi1, self.psi2])


def eigen_residuals(C: CompanionMatrix, d: DiscreteEigendata) -> dict:
    Cd = C.dense()
    I = np.eye(Cd.shape[0])
    K = Cd - I
    return {
        "(C-I)phi1": float(np.linalg.norm(K @ d.phi1)),
        "(C-I)phi2-phi1": float(np.linalg.norm(K @ d.phi2 - d.phi1)),
        "psi2(C-I)": float(np.linalg.norm(d.psi2 @ K)),
        "psi1(C-I)-psi2": float(np.linalg.norm(d.psi1 @ K - d.psi2)),
        "psi1.phi1-1": float(abs(d.psi1 @ d.phi1 - 1.0)),
        "psi2.phi2-1": float(abs(d.psi2 @ d.phi2 - 1.0)),
        "psi2.phi1": float(abs(d.psi2 @ d.phi1)),
        "psi1.phi2": float(abs(d.psi1 @ d.phi2)),
    }


def closed_form_eigendata(scheme: EulerScheme, tb: TBEigendata) -> DiscreteEigendata:
    """Block closed forms built from the continuous quadruple.

    Right vectors: ``phi1`` has every block ``eps*phi1_0``; block ``j`` of
    ``phi2`` is ``eps*(m*phi2_0 - j*phi1_0)``.  Left vectors carry the factor
    ``1/(1 - psi2_0 B phi1_0 / (2m))``; ``psi2 = (psi2_0, eps psi2_0 B, ...)``
    and block ``j >= 1`` of ``psi1`` is ``psi1_0 B - (m - j + 1) eps psi2_0 B``
    after a first block ``m*psi1_0``.
    """
    lin = extract_linear(scheme.model)
    B = lin.B
    m, eps = scheme.m, scheme.eps
    p1, p2, q1, q2 = tb.phi1_0, tb.phi2_0, tb.psi1_0, tb.psi2_0
    j = np.arange(m + 1)[:, None]
    phi1 = np.tile(eps * p1, m + 1)
    phi2 = (eps * (m * p2[None, :] - j * p1[None, :])).reshape(-1)
    scale = 1.0 / (1.0 - (q2 @ B @ p1) / (2.0 * m))
    q2B, q1B = q2 @ B, q1 @ B
    psi2 = np.concatenate([q2, np.tile(eps * q2B, m)]) * scale
    tail = [q1B - (m - jj + 1) * eps * q2B for jj in range(1, m + 1)]
    psi1 = np.concatenate([m * q1, *tail]) * scale
    return DiscreteEigendata(phi1, phi2, psi1, psi2, path="closed-form")


def _direct_eigendata(C: CompanionMatrix) -> DiscreteEigendata:
    """Jordan chains of ``C - I`` solved from scratch."""
    K = C.dense() - np.eye(C.size)
    u, s, vt = np.linalg.svd(K)
    phi1 = vt[-1]
    psi2 = u[:, -1]
    phi2 = np.linalg.lstsq(K, phi1, rcond=None)[0]
    psi1 = np.linalg.lstsq(K.T, psi2, rcond=None)[0]
    if np.linalg.norm(K @ phi2 - phi1) > 1e-8 or np.linalg.norm(psi1 @ K - psi2) > 1e-8:
        raise ValueError("eigenvalue 1 has no Jordan chain of length 2")
    # psi2 phi2 = psi1 phi1 and psi2 phi1 = 0 hold automatically on a chain
    c = psi2 @ phi2
    psi2, psi1 = psi2 / c, psi1 / c
    psi1 = psi1 - (psi1 @ phi2) * psi2
    return DiscreteEigendata(phi1, phi2, psi1, psi2, path="direct")


def build_discrete_eigendata(scheme: EulerScheme, tb: TBEigendata,
                             tol: float = EIG_TOL) -> DiscreteEigendata:
    """Quadruple spanning the resonant eigenspace, with ``(psi_i, phi_j) = delta_ij``.

    Starts from :func:`closed_form_eigendata`.  The closed-form ``psi1`` is a
    valid left Jordan vector but is not orthogonal to ``phi2`` in general, so
    the residual ``psi1 . phi2`` is removed along ``psi2``; that keeps every
    chain relation intact.  If anything still fails, the chains are solved
    directly.
    """
    if scheme.alpha != (0.0, 0.0):
        raise ValueError("discrete eigendata are defined at alpha = 0")
    C = build_companion(scheme)
    d = closed_form_eigendata(scheme, tb)
    res = eigen_residuals(C, d)
    if max(res.values()) <= tol:
        log.info("discrete eigendata: closed form accepted")
        return d
    t = d.psi1 @ d.phi2
    d = DiscreteEigendata(d.phi1, d.phi2, d.psi1 - t * d.psi2, d.psi2, path="closed-form+orthogonalized")
    res = eigen_residuals(C, d)
    if max(res.values()) <= tol:
        log.info("discrete eigendata: closed form with psi1 shifted by %.6g psi2", t)
        return d
    log.warning("discrete eigendata: closed form rejected (max residual %.3e), solving chains", max(res.values()))
    d = _direct_eigendata(C)
    res = eigen_residuals(C, d)
    if max(res.values()) > 1e-8:
        raise ValueError(f"could not build the resonant eigenbasis, residuals {res}")
    return d


# -- time stepping ---------------------------------------------------------------------

def euler_step(scheme: EulerScheme, window) -> np.ndarray:
    """One step on a newest-first window of shape ``(m+1, n)``."""
    w = np.asarray(window, dtype=float).reshape(scheme.m + 1, scheme.n)
    with np.errstate(over="ignore", invalid="ignore"):
        head = w[0] + scheme.eps * eval_f(scheme.model, w[0], w[-1], scheme.alpha)
    if not np.all(np.isfinite(head)):
        raise OverflowDiverged("non-finite state after Euler step")
    out = np.empty_like(w)
    out[0] = head
    out[1:] = w[:-1]
    return out
