"""Homological operator on homogeneous polynomial vector fields.

Polynomials live in ``V_j(R^c)``: homogeneous degree-``j`` polynomials in
the ``c`` center coordinates ``x`` and ``p`` parameters ``alpha`` with values
in ``R^c``.  Coordinates are indexed component-major, i.e. all monomials of
the first output component come before those of the second, and inside a
component monomials follow graded-lexicographic order over
``(x_1, ..., x_c, alpha_1, ..., alpha_p)``.

The operator is ``p(x, alpha) -> p(Jx, alpha) - J p(x, alpha)``; parameters
are substituted identically.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterable, Mapping

import numpy as np

from .errors import SizeCapExceeded

DEFAULT_CAP = 10**6
PIVOT_RTOL = 1e-9


@dataclass(frozen=True)
class MonomialBasis:
    j: int
    c: int
    p: int
    monomials: tuple[tuple[int, ...], ...]

    @property
    def nmon(self) -> int:
        return len(self.monomials)

    @property
    def dim(self) -> int:
        return self.nmon * self.c

    def index(self, comp: int, exps) -> int:
        return comp * self.nmon + self._lookup[tuple(exps)]

    def element(self, k: int) -> tuple[int, tuple[int, ...]]:
        """(component, exponent vector) of coordinate ``k``."""
        return divmod(k, self.nmon)[0], self.monomials[k % self.nmon]

    @property
    def _lookup(self) -> dict:
        cache = self.__dict__.get("_lookup_cache")
        if cache is None:
            cache = {m: i for i, m in enumerate(self.monomials)}
            object.__setattr__(self, "_lookup_cache", cache)
        return cache

    def variable_names(self) -> list[str]:
        return [f"x{i + 1}" for i in range(self.c)] + [f"a{i + 1}" for i in range(self.p)]

    def monomial_str(self, exps) -> str:
        parts = []
        for name, e in zip(self.variable_names(), exps):
            if e == 1:
                parts.append(name)
            elif e > 1:
                parts.append(f"{name}^{e}")
        return "*".join(parts) if parts else "1"


def enumerate_basis(j: int, c: int, p: int, cap: int = DEFAULT_CAP) -> MonomialBasis:
    if j < 2 or c < 1 or p < 0:
        raise ValueError("need j >= 2, c >= 1, p >= 0")
    nvar = c + p
    count = comb(j + nvar - 1, j)
    if count * c > cap:
        raise SizeCapExceeded(f"{count * c} basis elements exceed the cap {cap}")
    monos = [e for e in _compositions(j, nvar)]
    monos.sort(reverse=True)  # graded lex: x1 > x2 > ... > a_p, degree fixed
    return MonomialBasis(j, c, p, tuple(monos))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class PolyVec:
    basis: MonomialBasis
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=float).reshape(-1)
        if coeffs.size != self.basis.dim:
            raise ValueError(f"expected {self.basis.dim} coefficients, got {coeffs.size}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zero(cls, basis: MonomialBasis) -> "PolyVec":
        return cls(basis, np.zeros(basis.dim))

    @classmethod
    def from_terms(cls, basis: MonomialBasis, terms: Mapping) -> "PolyVec":
        """``terms`` maps ``(component, exponents)`` (0-based component) to a coefficient."""
        v = np.zeros(basis.dim)
        for (comp, exps), val in terms.items():
            v[basis.index(comp, exps)] += val
        return cls(basis, v)

    @classmethod
    def unit(cls, basis: MonomialBasis, k: int) -> "PolyVec":
        v = np.zeros(basis.dim)
        v[k] = 1.0
        return cls(basis, v)

    def component(self, comp: int) -> dict:
        b = self.basis
        block = self.coeffs[comp * b.nmon:(comp + 1) * b.nmon]
        return {m: float(c) for m, c in zip(b.monomials, block) if c != 0.0}

    def coefficient(self, comp: int, exps) -> float:
        return float(self.coeffs[self.basis.index(comp, exps)])

    def support(self, atol: float = 0.0) -> list[int]:
        return [int(k) for k in np.flatnonzero(np.abs(self.coeffs) > atol)]

    def __add__(self, other):
        return PolyVec(self.basis, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return PolyVec(self.basis, self.coeffs - other.coeffs)

    def to_str(self) -> str:
        comps = []
        for comp in range(self.basis.c):
            comps.append(_poly_str(self.basis, self.component(comp)))
        return "(" + ", ".join(comps) + ")"


def _num_str(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def _poly_str(basis: MonomialBasis, comp: dict) -> str:
    if not comp:
        return "0"
    out = ""
    for mono in basis.monomials:
        if mono not in comp:
            continue
        c = comp[mono]
        sign = "-" if c < 0 else "+"
        mag = abs(c)
        body = basis.monomial_str(mono)
        term = body if mag == 1 else f"{_num_str(mag)}*{body}"
        if not out:
            out = f"-{term}" if sign == "-" else term
        else:
            out += f" {sign} {term}"
    return out


# -- polynomial substitution ---------------------------------------------------

def _poly_mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0.0) + c1 * c2
    return out


def _substitute_monomial(exps, J: np.ndarray, c: int, p: int) -> dict:
    """Expand ``(Jx)^q alpha^l`` into a monomial -> coefficient dict."""
    nvar = c + p
    result = {tuple(0 for _ in range(c)) + tuple(exps[c:]): 1.0}
    for i in range(c):
        if exps[i] == 0:
            continue
        lin = {}
        for k in range(c):
            if J[i, k] != 0:
                e = [0] * nvar
                e[k] = 1
                lin[tuple(e)] = float(J[i, k])
        for _ in range(exps[i]):
            result = _poly_mul(result, lin)
    return result


def apply_homological(J, poly: PolyVec) -> PolyVec:
    """Direct evaluation of ``p(Jx, alpha) - J p(x, alpha)``."""
    J = np.asarray(J, dtype=float)
    b = poly.basis
    if J.shape != (b.c, b.c):
        raise ValueError(f"J must be {b.c}x{b.c} for this polynomial space")
    out = np.zeros(b.dim)
    blocks = poly.coeffs.reshape(b.c, b.nmon)
    # p(Jx, alpha)
    for comp in range(b.c):
        for mi, mono in enumerate(b.monomials):
            coef = blocks[comp, mi]
            if coef == 0.0:
                continue
            for e, v in _substitute_monomial(mono, J, b.c, b.p).items():
                if v != 0.0:
                    out[b.index(comp, e)] += coef * v
    # - J p(x, alpha)
    out -= (J @ blocks).reshape(-1)
    return PolyVec(b, out)


@dataclass(frozen=True)
class HomologicalOperator:
    J: np.ndarray
    basis: MonomialBasis
    matrix: np.ndarray

    def apply(self, poly: PolyVec) -> PolyVec:
        if poly.basis != self.basis:
            raise ValueError("polynomial degree/space does not match the operator")
        return PolyVec(self.basis, self.matrix @ poly.coeffs)


def build_homological(J, j: int, p: int, cap: int = DEFAULT_CAP) -> HomologicalOperator:
    J = np.array(J, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError("J must be square")
    basis = enumerate_basis(j, J.shape[0], p, cap=cap)
    cols = [apply_homological(J, PolyVec.unit(basis, k)).coeffs for k in range(basis.dim)]
    M = np.column_stack(cols) if cols else np.zeros((0, 0))
    M.setflags(write=False)
    J.setflags(write=False)
    return HomologicalOperator(J, basis, M)


# -- image / complement --------------------------------------------------------

@dataclass(frozen=True)
class ImageSplit:
    operator: HomologicalOperator
    image_rows: np.ndarray  # (rank, dim) echelon basis of the image
    pivots: tuple[int, ...]  # coordinates owned by the image
    complement: tuple[int, ...]  # canonical directions spanning Im^c

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def image_basis(self) -> list[PolyVec]:
        return [PolyVec(self.operator.basis, row) for row in self.image_rows]

    def complement_basis(self) -> list[PolyVec]:
        b = self.operator.basis
        return [PolyVec.unit(b, k) for k in self.complement]

    def _image_coords(self, f: np.ndarray) -> np.ndarray:
        if self.rank == 0:
            return np.zeros(0)
        R_P = self.image_rows[:, list(self.pivots)]
        return np.linalg.solve(R_P.T, f[list(self.pivots)])


def split_image(op: HomologicalOperator, rtol: float = PIVOT_RTOL) -> ImageSplit:
    """Rank-revealing elimination over coordinates taken in basis order.

    At each coordinate the remaining generator with the largest entry (lowest
    index on ties) becomes the pivot; coordinates left without a pivot span
    the complement.
    """
    M = op.matrix
    dim = M.shape[0]
    rows = M.T.copy()  # generator images as rows
    colnorm = float(np.max(np.linalg.norm(M, axis=0))) if dim else 0.0
    tol = rtol * colnorm
    free = list(range(rows.shape[0]))
    pivots, echelon = [], []
    for k in range(dim):
        if not free or colnorm == 0.0:
            break
        vals = np.abs(rows[free, k])
        best = int(np.argmax(vals))  # argmax returns the first maximum
        if vals[best] <= tol:
            continue
        r = free.pop(best)
        piv = rows[r].copy()
        for other in free:
            if rows[other, k] != 0.0:
                rows[other] -= (rows[other, k] / piv[k]) * piv
        pivots.append(k)
        echelon.append(piv)
    complement = tuple(k for k in range(dim) if k not in set(pivots))
    image_rows = np.array(echelon).reshape(len(echelon), dim)
    image_rows.setflags(write=False)
    return ImageSplit(op, image_rows, tuple(pivots), complement)


def project_resonant(split: ImageSplit, f: PolyVec) -> PolyVec:
    """``(I - P_I) f``: the part of ``f`` along the complement directions."""
    if f.basis != split.operator.basis:
        raise ValueError("polynomial not in the operator's space")
    c = split._image_coords(f.coeffs)
    rest = f.coeffs - (split.image_rows.T @ c if split.rank else 0.0)
    if split.rank:
        assert np.allclose(rest[list(split.pivots)], 0.0, atol=1e-9 * max(1.0, np.abs(f.coeffs).max()))
        rest[list(split.pivots)] = 0.0
    return PolyVec(f.basis, rest)


def image_part(split: ImageSplit, f: PolyVec) -> PolyVec:
    return f - project_resonant(split, f)


def change_of_variables(split: ImageSplit, op: HomologicalOperator, f: PolyVec) -> PolyVec:
    """Minimum-norm ``U`` with ``M U = P_I f`` (range orthogonal to ker M)."""
    target = image_part(split, f).coeffs
    U = np.linalg.pinv(op.matrix) @ target
    return PolyVec(f.basis, U)


# -- reporting -----------------------------------------------------------------

def nf_check_report(J, j: int = 2, p: int = 2) -> str:
    """Stable text listing of basis, images under the operator and complement."""
    op = build_homological(J, j, p)
    split = split_image(op)
    b = op.basis
    lines = [f"# homological operator, degree {j}, c={b.c}, p={p}"]
    rows = ", ".join("[" + ", ".join(_num_str(v) for v in row) + "]" for row in op.J)
    lines.append(f"J = [{rows}]")
    lines.append(f"basis ({b.dim} elements):")
    for k in range(b.dim):
        lines.append(f"  e{k + 1:02d} = {PolyVec.unit(b, k).to_str()}")
    lines.append("images:")
    for k in range(b.dim):
        img = op.apply(PolyVec.unit(b, k))
        lines.append(f"  M e{k + 1:02d} = {img.to_str()}")
    lines.append(f"rank = {split.rank}")
    lines.append(f"complement ({len(split.complement)} elements):")
    for k in split.complement:
        lines.append(f"  e{k + 1:02d} = {PolyVec.unit(b, k).to_str()}")
    return "\n".join(lines) + "\n"


def nonresonance_report(critical: Iterable[complex], others: Iterable[complex],
                        max_order: int = 4) -> dict:
    """Check ``lambda^q != mu`` for critical products up to ``max_order``.

    Only finitely many orders can be checked, so this is a diagnostic.
    """
    crit = list(critical)
    others = np.asarray(list(others), dtype=complex)
    worst = np.inf
    for order in range(2, max_order + 1):
        for combo in itertools.combinations_with_replacement(range(len(crit)), order):
            prod = np.prod([crit[i] for i in combo])
            if others.size:
                worst = min(worst, float(np.min(np.abs(others - prod))))
    return {"max_order": max_order, "min_distance": worst}
