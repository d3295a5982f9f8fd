"""1:1 resonance normal form of the forward Euler map.

The planar map is

    x1 -> x1 + x2
    x2 -> x2 + k1 x1 + k2 x2 + a x1^2 + b x1 x2

with ``k1``, ``k2`` linear in ``alpha``.  Coefficients are obtained two ways:
``coefficients_direct`` scales the continuous data (``a``, ``b``, ``Pi``) by
powers of the step size, while ``coefficients_via_engine`` projects the
quadratic part of the Euler map, restricted to the resonant eigenspace, onto
the complement of the homological image.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import StructureViolation
from .euler_disc import DiscreteEigendata, EulerScheme, build_discrete_eigendata
from .model import DDEModel, LinearData
from .nf_engine import PolyVec, build_homological, enumerate_basis, project_resonant, split_image
from .tb_continuous import (
    HOMOCLINIC_RATIO,
    BranchKind,
    BranchLine,
    TBCoefficients,
    TBEigendata,
    make_branch,
)

log = logging.getLogger(__name__)

JORDAN_11 = np.array([[1.0, 1.0], [0.0, 1.0]])
SUPPORT_TOL = 1e-9
HOMOCLINIC_SHIFT = 5.0 / 7.0


@dataclass(frozen=True)
class ReducedMapCoefficients:
    """Coefficients of the planar map; ``k1``/``k2`` are stored as linear forms."""

    kappa1_row: np.ndarray
    kappa2_row: np.ndarray
    a_eps: float
    b_eps: float
    eps: float
    nu: float = 1.0
    alpha: tuple[float, float] = (0.0, 0.0)
    source: str = ""

    def kappa_eps(self, alpha=None) -> tuple[float, float]:
        a = np.asarray(self.alpha if alpha is None else alpha, dtype=float)
        return float(self.kappa1_row @ a), float(self.kappa2_row @ a)

    @property
    def kappa1_eps(self) -> float:
        return self.kappa_eps()[0]

    @property
    def kappa2_eps(self) -> float:
        return self.kappa_eps()[1]

    @property
    def ratio(self) -> float:
        return self.b_eps / self.a_eps

    def at(self, alpha) -> "ReducedMapCoefficients":
        return ReducedMapCoefficients(self.kappa1_row, self.kappa2_row, self.a_eps, self.b_eps,
                                      self.eps, self.nu, tuple(map(float, alpha)), self.source)


def normalization_nu(eig: TBEigendata, lin: LinearData) -> float:
    return float(1.0 - 0.5 * eig.psi2_0 @ lin.B @ eig.phi1_0)


def coefficients_direct(tb: TBCoefficients, eig: TBEigendata, lin: LinearData,
                        eps: float, alpha=(0.0, 0.0)) -> ReducedMapCoefficients:
    """Continuous coefficients scaled by ``eps^2/nu``, ``eps/nu``, ``eps^3/nu``, ``eps^2/nu``."""
    nu = normalization_nu(eig, lin)
    if nu == 0.0:
        raise ZeroDivisionError("degenerate normalization 1 - psi2_0 B phi1_0 / 2 = 0")
    if not tb.ab_nonzero:
        warnings.warn("a*b = 0: the planar map is degenerate", RuntimeWarning, stacklevel=2)
    return ReducedMapCoefficients(
        kappa1_row=eps**2 / nu * tb.Pi[0],
        kappa2_row=eps / nu * tb.Pi[1],
        a_eps=eps**3 / nu * tb.a,
        b_eps=eps**2 / nu * tb.b,
        eps=eps,
        nu=nu,
        alpha=tuple(map(float, alpha)),
        source="direct",
    )


# -- projection route --------------------------------------------------------------

def _linear_poly(nvar: int, row) -> dict:
    out = {}
    for k, v in enumerate(row):
        if v != 0.0:
            e = [0] * nvar
            e[k] = 1
            out[tuple(e)] = float(v)
    return out


def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0.0) + c1 * c2
    return out


def restricted_quadratic(model: DDEModel, Phi_first: np.ndarray, Phi_last: np.ndarray) -> list[dict]:
    """Degree-two terms of ``f`` with ``z(t) = Phi_first x`` and ``z(t-1) = Phi_last x``.

    Works term by term on the model's monomials; returns one polynomial
    (monomial dict over ``(x1, x2, alpha1, alpha2)``) per state component.
    """
    n = model.n
    nvar = 4
    subs = []
    for i in range(n):
        subs.append(_linear_poly(nvar, list(Phi_first[i]) + [0.0, 0.0]))
    for i in range(n):
        subs.append(_linear_poly(nvar, list(Phi_last[i]) + [0.0, 0.0]))
    subs.append({(0, 0, 1, 0): 1.0})
    subs.append({(0, 0, 0, 1): 1.0})
    comps = [dict() for _ in range(n)]
    for t in model.terms_of_degree(2):
        poly = {(0, 0, 0, 0): float(t.coeff)}
        for k, e in enumerate(t.exponents):
            for _ in range(e):
                poly = _poly_mul(poly, subs[k])
        target = comps[t.target - 1]
        for mono, c in poly.items():
            target[mono] = target.get(mono, 0.0) + c
    return comps


def center_quadratic(scheme: EulerScheme, d: DiscreteEigendata) -> PolyVec:
    """``Psi_c H_2(Phi_c x, alpha)`` as an element of ``V_2(R^2)`` with two parameters."""
    n, m = scheme.n, scheme.m
    Phi = d.Phi
    first, last = Phi[:n], Phi[m * n:]
    comps = restricted_quadratic(scheme.model, first, last)
    basis = enumerate_basis(2, 2, 2)
    psi_head = d.Psi[:, :n]  # H is nonzero only in the first block
    terms = {}
    for row in range(2):
        for r in range(n):
            w = scheme.eps * psi_head[row, r]
            if w == 0.0:
                continue
            for mono, c in comps[r].items():
                key = (row, mono)
                terms[key] = terms.get(key, 0.0) + w * c
    return PolyVec.from_terms(basis, terms)


def coefficients_via_engine(model: DDEModel, tb: TBEigendata, eps: float,
                            eigendata: DiscreteEigendata | None = None) -> ReducedMapCoefficients:
    """Read the planar-map coefficients off the resonant projection.

    ``eigendata`` defaults to the biorthogonal quadruple of
    :func:`build_discrete_eigendata`.
    """
    m = int(round(1.0 / eps))
    if abs(m * eps - 1.0) > 1e-12:
        raise ValueError("eps must be 1/m for an integer m")
    scheme = EulerScheme(model, m)
    d = build_discrete_eigendata(scheme, tb) if eigendata is None else eigendata
    f = center_quadratic(scheme, d)
    op = build_homological(JORDAN_11, 2, 2)
    split = split_image(op)
    g = project_resonant(split, f)
    basis = f.basis
    expected = {basis.index(1, e) for e in [(2, 0, 0, 0), (1, 1, 0, 0), (1, 0, 1, 0),
                                            (1, 0, 0, 1), (0, 1, 1, 0), (0, 1, 0, 1)]}
    scale = max(1.0, float(np.abs(f.coeffs).max()))
    stray = [k for k in g.support(SUPPORT_TOL * scale) if k not in expected]
    if stray:
        names = [PolyVec.unit(basis, k).to_str() for k in stray]
        raise StructureViolation(f"resonant part has unexpected terms {names}")
    c = lambda e: g.coefficient(1, e)  # noqa: E731
    return ReducedMapCoefficients(
        kappa1_row=np.array([c((1, 0, 1, 0)), c((1, 0, 0, 1))]),
        kappa2_row=np.array([c((0, 1, 1, 0)), c((0, 1, 0, 1))]),
        a_eps=c((2, 0, 0, 0)),
        b_eps=c((1, 1, 0, 0)),
        eps=eps,
        source=f"engine[{d.path}]",
    )


# -- planar map ------------------------------------------------------------------------

class Variant(str, Enum):
    TRUNCATED = "truncated44"
    TRANSFORMED = "transformed45"


class Diverged(ArithmeticError):
    pass


@dataclass(frozen=True)
class PlanarMapState:
    x1: float
    x2: float
    variant: Variant = Variant.TRUNCATED

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.x2])


def iterate_planar(c: ReducedMapCoefficients, s: PlanarMapState) -> PlanarMapState:
    k1, k2 = c.kappa_eps()
    a, b = c.a_eps, c.b_eps
    x1, x2 = s.x1, s.x2
    if s.variant == Variant.TRUNCATED:
        n1 = x1 + x2
        n2 = x2 + k1 * x1 + k2 * x2 + a * x1 * x1 + b * x1 * x2
    else:
        r = b / a
        n1 = x1 + x2
        n2 = x2 - k1 * k1 / 4.0 + (k2 - r * k1 / 2.0) * x2 + x1 * x1 + r * x1 * x2
    if not (np.isfinite(n1) and np.isfinite(n2)):
        raise Diverged("planar map left the finite range")
    return PlanarMapState(float(n1), float(n2), s.variant)


def to_transformed(c: ReducedMapCoefficients, s: PlanarMapState) -> PlanarMapState:
    k1, _ = c.kappa_eps()
    a = c.a_eps
    return PlanarMapState(a * (s.x1 + k1 / (2.0 * a)), a * s.x2, Variant.TRANSFORMED)


def from_transformed(c: ReducedMapCoefficients, s: PlanarMapState) -> PlanarMapState:
    k1, _ = c.kappa_eps()
    a = c.a_eps
    return PlanarMapState(s.x1 / a - k1 / (2.0 * a), s.x2 / a, Variant.TRUNCATED)


def planar_fixed_points(c: ReducedMapCoefficients) -> tuple[np.ndarray, np.ndarray]:
    k1, _ = c.kappa_eps()
    return np.array([0.0, 0.0]), np.array([-k1 / c.a_eps, 0.0])


def planar_jacobian(c: ReducedMapCoefficients, x) -> np.ndarray:
    k1, k2 = c.kappa_eps()
    x1, x2 = x
    return np.array([[1.0, 1.0],
                     [k1 + 2 * c.a_eps * x1 + c.b_eps * x2, 1.0 + k2 + c.b_eps * x1]])


@dataclass(frozen=True)
class NSModulus:
    modulus: float
    radicand: float
    eigenvalues: np.ndarray
    complex_pair: bool = field(default=False)


def ns_modulus(c: ReducedMapCoefficients) -> NSModulus:
    """Eigenvalue modulus at the nontrivial fixed point ``(-k1/a, 0)``.

    The closed form ``sqrt(1 + k2 - (b/a) k1 + k1)`` is the square root of
    the Jacobian determinant, hence the modulus only while the eigenvalues
    form a complex pair.
    """
    k1, k2 = c.kappa_eps()
    rad = 1.0 + k2 - c.ratio * k1 + k1
    if rad < 0:
        raise ValueError(f"negative radicand {rad:.3e}: no complex eigenvalue pair")
    eigs = np.linalg.eigvals(planar_jacobian(c, planar_fixed_points(c)[1]))
    return NSModulus(float(np.sqrt(rad)), float(rad), eigs, bool(abs(eigs[0].imag) > 0))


# -- discrete branch lines -------------------------------------------------------------

def _check_a(c: ReducedMapCoefficients):
    if c.a_eps == 0.0:
        raise ZeroDivisionError("a = 0: branch lines are undefined")


def branch_lh_eps(c: ReducedMapCoefficients) -> BranchLine:
    """Neimark-Sacker line ``k2 - (b/a) k1 + k1 = 0`` in alpha coordinates."""
    _check_a(c)
    form = c.kappa2_row - c.ratio * c.kappa1_row + c.kappa1_row
    return make_branch(BranchKind.NEIMARK_SACKER, form, c.kappa1_row)


def branch_linf_eps(c: ReducedMapCoefficients) -> BranchLine:
    """Homoclinic line ``k2 - (6/7)(b/a) k1 + (5/7) k1 = 0``, O(k1^{3/2}) dropped."""
    _check_a(c)
    form = c.kappa2_row - HOMOCLINIC_RATIO * c.ratio * c.kappa1_row + HOMOCLINIC_SHIFT * c.kappa1_row
    return make_branch(BranchKind.DISCRETE_HOMOCLINIC, form, c.kappa1_row)


def line_gap(l1: BranchLine, l2: BranchLine) -> float:
    return float(np.linalg.norm(l1.coeffs - l2.coeffs))


@dataclass(frozen=True)
class DiscreteAnalysis:
    m: int
    eps: float
    nu: float
    direct: ReducedMapCoefficients
    engine: ReducedMapCoefficients | None
    lh_eps: BranchLine
    linf_eps: BranchLine
    engine_lh_eps: BranchLine | None
    engine_linf_eps: BranchLine | None
    resonance: dict
    eigendata_path: str

    @property
    def engine_gap(self) -> float:
        if self.engine_lh_eps is None:
            return float("nan")
        return max(line_gap(self.lh_eps, self.engine_lh_eps),
                   line_gap(self.linf_eps, self.engine_linf_eps))


def analyze_discrete(model: DDEModel, m: int) -> DiscreteAnalysis:
    from .euler_disc import resonance_check
    from .tb_continuous import analyze_continuous

    cont = analyze_continuous(model)
    scheme = EulerScheme(model, m)
    eps = scheme.eps
    direct = coefficients_direct(cont.coef, cont.eig, cont.lin, eps)
    d = build_discrete_eigendata(scheme, cont.eig)
    engine = coefficients_via_engine(model, cont.eig, eps, eigendata=d)
    eng_lh = eng_linf = None
    if engine.a_eps != 0.0:
        eng_lh, eng_linf = branch_lh_eps(engine), branch_linf_eps(engine)
    return DiscreteAnalysis(
        m=m, eps=eps, nu=direct.nu, direct=direct, engine=engine,
        lh_eps=branch_lh_eps(direct), linf_eps=branch_linf_eps(direct),
        engine_lh_eps=eng_lh, engine_linf_eps=eng_linf,
        resonance=resonance_check(scheme), eigendata_path=d.path,
    )
