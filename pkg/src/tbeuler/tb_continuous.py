"""Takens-Bogdanov data of the continuous DDE at the origin.

Computes the generalized eigenvector quadruple of the linearization, the
quadratic normal-form coefficients ``a`` and ``b``, the parameter transform
``Pi`` and the first-order Hopf and homoclinic lines in the parameter plane.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NotTBCandidate
from .model import LinearData, QuadraticData

RANK_RTOL = 1e-10
HOMOCLINIC_RATIO = 6.0 / 7.0


@dataclass(frozen=True)
class TBEigendata:
    phi1_0: np.ndarray
    phi2_0: np.ndarray
    psi1_0: np.ndarray  # row vectors, stored 1-D
    psi2_0: np.ndarray


@dataclass(frozen=True)
class TBCoefficients:
    a: float
    b: float
    Pi: np.ndarray

    @property
    def det_pi(self) -> float:
        return float(np.linalg.det(self.Pi))

    @property
    def det_pi_nonzero(self) -> bool:
        return abs(self.det_pi) > 1e-12

    @property
    def ab_nonzero(self) -> bool:
        return abs(self.a * self.b) > 1e-14

    def kappa(self, alpha) -> np.ndarray:
        return self.Pi @ np.asarray(alpha, dtype=float)


class BranchKind(str, Enum):
    HOPF = "Hopf"
    HOMOCLINIC = "Homoclinic"
    NEIMARK_SACKER = "NeimarkSacker"
    DISCRETE_HOMOCLINIC = "DiscreteHomoclinic"


@dataclass(frozen=True)
class BranchLine:
    """First-order branch ``c1*alpha1 + c2*alpha2 = 0`` restricted to ``kappa1 > 0``.

    ``domain`` holds the row of ``Pi`` defining ``kappa1``; the branch is the
    half-line on which ``domain @ alpha > 0``.
    """

    kind: BranchKind
    coeffs: np.ndarray
    domain: np.ndarray
    offset: float = 0.0  # constant term; zero for every line built here

    def value(self, alpha) -> float:
        return float(self.coeffs @ np.asarray(alpha, dtype=float) + self.offset)

    def in_domain(self, alpha) -> bool:
        return float(self.domain @ np.asarray(alpha, dtype=float)) > 0.0

    def alpha1_at(self, alpha2: float) -> float:
        """Solve the linear form for alpha1 with alpha2 fixed."""
        c1, c2 = self.coeffs
        if c1 == 0.0:
            raise ZeroDivisionError("branch line is parallel to the alpha1 axis")
        return float(-(c2 * alpha2 + self.offset) / c1)

    def direction(self) -> np.ndarray:
        """Unit tangent of the line pointing into the kappa1 > 0 side."""
        t = np.array([-self.coeffs[1], self.coeffs[0]])
        return t if self.domain @ t >= 0 else -t


def normalize_form(v) -> np.ndarray:
    """Unit-norm linear form whose first non-negligible entry is positive.

    Entries below ``1e-12`` after scaling count as zero so that rounding
    noise cannot flip the sign of a form parallel to an axis.
    """
    v = np.asarray(v, dtype=float)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise ValueError("degenerate linear form")
    v = v / nrm
    lead = v[0] if abs(v[0]) > 1e-12 else v[1]
    return -v if lead < 0 else v


def make_branch(kind: BranchKind, form, domain) -> BranchLine:
    return BranchLine(kind, normalize_form(form), np.asarray(domain, dtype=float))


# -- eigenvector quadruple -----------------------------------------------------

def _null_vector(M: np.ndarray) -> np.ndarray:
    _, s, vt = np.linalg.svd(M)
    scale = max(1.0, s[0]) if s.size else 1.0
    rank = int(np.sum(s > RANK_RTOL * scale))
    if rank != M.shape[0] - 1:
        raise NotTBCandidate(f"A+B must have a one-dimensional kernel (rank {rank}, n={M.shape[0]})")
    v = vt[-1]
    first = np.flatnonzero(np.abs(v) > 1e-12)[0]
    return v if v[first] > 0 else -v


def _solve_consistent(M: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    sol = np.linalg.pinv(M) @ rhs
    resid = np.linalg.norm(M @ sol - rhs)
    if resid > 1e-9 * max(1.0, np.linalg.norm(rhs)):
        raise NotTBCandidate(f"{what} is not solvable (residual {resid:.3e}); Jordan chain is absent")
    return sol


def chain_residuals(lin: LinearData, eig: TBEigendata) -> np.ndarray:
    """The six defining relations of the quadruple, as residual norms."""
    A, B = lin.A, lin.B
    I = np.eye(lin.n)
    S = A + B
    p1, p2, q1, q2 = eig.phi1_0, eig.phi2_0, eig.psi1_0, eig.psi2_0
    r = [
        np.linalg.norm(S @ p1),
        np.linalg.norm(S @ p2 - (B + I) @ p1),
        np.linalg.norm(q2 @ S),
        np.linalg.norm(q1 @ S - q2 @ (B + I)),
        abs(normalization5(lin, q2, p1, p2) - 1.0),
        abs(normalization6(lin, q1, q2, p1, p2)),
    ]
    return np.array(r)


def normalization5(lin, q2, p1, p2) -> float:
    B = lin.B
    return float(q2 @ p2 - 0.5 * q2 @ B @ p1 + q2 @ B @ p2)


def normalization6(lin, q1, q2, p1, p2) -> float:
    B = lin.B
    return float(q1 @ p2 - 0.5 * q1 @ B @ p1 + q1 @ B @ p2
                 + q2 @ B @ p1 / 6.0 - 0.5 * q2 @ B @ p2)


def solve_tb_eigendata(lin: LinearData, phi2_shift: float = 0.0) -> TBEigendata:
    """Deterministic solution of the generalized eigenvector system.

    ``phi1_0`` is the unit kernel vector of ``A+B`` with positive first
    nonzero entry and ``phi2_0`` the minimum-norm Jordan vector, optionally
    shifted by ``phi2_shift * phi1_0``.  ``psi2_0`` spans the left kernel
    and is scaled by the first normalization; ``psi1_0`` is the minimum-norm
    left Jordan vector plus the multiple of ``psi2_0`` that zeroes the
    second normalization (it moves with unit slope).
    """
    A, B = lin.A, lin.B
    n = lin.n
    I = np.eye(n)
    S = A + B
    p1 = _null_vector(S)
    p2 = _solve_consistent(S, (B + I) @ p1, "(A+B) phi2 = (B+I) phi1") + phi2_shift * p1
    q2 = _null_vector(S.T)
    scale = normalization5(lin, q2, p1, p2)
    if abs(scale) < 1e-12:
        raise NotTBCandidate("left eigenvector cannot be normalized (zero eigenvalue is not double)")
    q2 = q2 / scale
    q1 = _solve_consistent(S.T, (B + I).T @ q2, "psi1 (A+B) = psi2 (B+I)")
    q1 = q1 - normalization6(lin, q1, q2, p1, p2) * q2
    return TBEigendata(p1, p2, q1, q2)


# -- coefficients ----------------------------------------------------------------

def _sum_matrix(T: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``sum_i T_i u_i`` for a stack of matrices ``T``."""
    return np.einsum("irj,i->rj", T, u)


def compute_ab(eig: TBEigendata, quad: QuadraticData) -> tuple[float, float]:
    p1, p2, q1, q2 = eig.phi1_0, eig.phi2_0, eig.psi1_0, eig.psi2_0
    S = quad.E + quad.F + quad.G
    EG = quad.E + 2.0 * quad.G
    a = float(q2 @ _sum_matrix(S, p1) @ p1)
    b = float(2.0 * q1 @ _sum_matrix(S, p1) @ p1
              + q2 @ (_sum_matrix(S, p2) @ p1 + _sum_matrix(S, p1) @ p2
                      - _sum_matrix(EG, p1) @ p1))
    return a, b


def compute_pi(eig: TBEigendata, quad: QuadraticData) -> np.ndarray:
    p1, p2, q1, q2 = eig.phi1_0, eig.phi2_0, eig.psi1_0, eig.psi2_0
    Pi = np.zeros((2, 2))
    for k in range(2):
        S = quad.A[k] + quad.B[k]
        Pi[0, k] = q2 @ S @ p1
        Pi[1, k] = q1 @ S @ p1 + q2 @ (S @ p2 - quad.B[k] @ p1)
    return Pi


def tb_coefficients(eig: TBEigendata, quad: QuadraticData) -> TBCoefficients:
    a, b = compute_ab(eig, quad)
    return TBCoefficients(a, b, compute_pi(eig, quad))


def _require_a(coef: TBCoefficients):
    if coef.a == 0.0:
        raise ZeroDivisionError("a = 0: branch lines are undefined")


def branch_lh(coef: TBCoefficients) -> BranchLine:
    """Hopf line ``kappa2 - (b/a) kappa1 = 0`` (higher-order terms dropped)."""
    _require_a(coef)
    form = coef.Pi[1] - (coef.b / coef.a) * coef.Pi[0]
    return make_branch(BranchKind.HOPF, form, coef.Pi[0])


def branch_linf(coef: TBCoefficients) -> BranchLine:
    """Homoclinic line ``kappa2 - (6/7)(b/a) kappa1 = 0`` to first order."""
    _require_a(coef)
    form = coef.Pi[1] - HOMOCLINIC_RATIO * (coef.b / coef.a) * coef.Pi[0]
    return make_branch(BranchKind.HOMOCLINIC, form, coef.Pi[0])


# -- characteristic function -----------------------------------------------------

@dataclass(frozen=True)
class CharFunction:
    lin: LinearData

    def __call__(self, mu: complex) -> complex:
        return char_delta(self.lin, mu)

    def derivative(self, mu: complex, order: int = 1, h: float = 1e-5) -> complex:
        if order == 1:
            return (self(mu + h) - self(mu - h)) / (2 * h)
        if order == 2:
            return (self(mu + h) - 2 * self(mu) + self(mu - h)) / h**2
        raise ValueError("only first and second derivatives are provided")


def char_delta(lin: LinearData, mu: complex) -> complex:
    n = lin.n
    M = mu * np.eye(n) - lin.A - lin.B * np.exp(-mu)
    return complex(np.linalg.det(M.astype(complex)))


def check_assumption_A(lin: LinearData, omega_max: float = 50.0, npoints: int = 10_000,
                       tol: float = 1e-6, h: float = 1e-5) -> dict:
    """Heuristic check that 0 is a double root and no other root is imaginary.

    The imaginary-axis test samples ``|Delta(i w)|`` on a grid, so it can miss
    roots between grid points; treat the verdict as a diagnostic.
    """
    delta = CharFunction(lin)
    d0 = delta(0.0)
    d1 = delta.derivative(0.0, 1, h)
    d2 = delta.derivative(0.0, 2, h)
    omegas = np.linspace(omega_max / npoints, omega_max, npoints)
    n = lin.n
    mats = (1j * omegas)[:, None, None] * np.eye(n) - lin.A - lin.B * np.exp(-1j * omegas)[:, None, None]
    vals = np.abs(np.linalg.det(mats))
    k = int(np.argmin(vals))
    d2_tol = max(tol, 1e-4)  # second difference carries ~1e-6 rounding
    verdict = (abs(d0) < tol and abs(d1) < tol and abs(d2) > d2_tol and vals[k] > tol)
    return {
        "delta0": d0,
        "delta1": d1,
        "delta2": d2,
        "imag_axis_min": float(vals[k]),
        "imag_axis_argmin": float(omegas[k]),
        "omega_max": omega_max,
        "npoints": npoints,
        "passed": bool(verdict),
    }


@dataclass(frozen=True)
class ContinuousAnalysis:
    lin: LinearData
    quad: QuadraticData
    eig: TBEigendata
    coef: TBCoefficients
    lh: BranchLine
    linf: BranchLine
    assumption_A: dict


def analyze_continuous(model) -> ContinuousAnalysis:
    from .model import extract_linear, extract_quadratic

    lin = extract_linear(model)
    quad = extract_quadratic(model)
    eig = solve_tb_eigendata(lin)
    coef = tb_coefficients(eig, quad)
    return ContinuousAnalysis(lin, quad, eig, coef, branch_lh(coef), branch_linf(coef),
                              check_assumption_A(lin))
