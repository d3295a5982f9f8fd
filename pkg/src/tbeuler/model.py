"""Polynomial delay differential equations with a single unit delay.

A model is ``z'(t) = f(z(t), z(t-1), alpha)`` with ``z`` in R^n and
``alpha`` in R^2, where every component of ``f`` is a finite sum of
monomials in the ``2n + 2`` variables

    (z_1(t), ..., z_n(t), z_1(t-1), ..., z_n(t-1), alpha_1, alpha_2).

Derivative data at the origin are read off the coefficients exactly; no
finite differences are involved anywhere in this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ModelError

N_PARAMS = 2


@dataclass(frozen=True)
class MonomialTerm:
    target: int  # 1-based output component
    coeff: Fraction
    exponents: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exponents)


@dataclass(frozen=True)
class DDEModel:
    n: int
    terms: tuple[MonomialTerm, ...]
    name: str = ""
    _coeffs: np.ndarray = field(init=False, repr=False, compare=False)
    _targets: np.ndarray = field(init=False, repr=False, compare=False)
    _exps: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ModelError(f"state dimension must be a positive integer, got {self.n!r}")
        nvar = 2 * self.n + N_PARAMS
        for t in self.terms:
            _validate_term(t, self.n, nvar)
        object.__setattr__(self, "terms", tuple(self.terms))
        coeffs = np.array([float(t.coeff) for t in self.terms], dtype=float)
        targets = np.array([t.target - 1 for t in self.terms], dtype=int)
        exps = np.array([t.exponents for t in self.terms], dtype=int).reshape(-1, nvar)
        for arr in (coeffs, targets, exps):
            arr.setflags(write=False)
        object.__setattr__(self, "_coeffs", coeffs)
        object.__setattr__(self, "_targets", targets)
        object.__setattr__(self, "_exps", exps)

    @property
    def nvar(self) -> int:
        return 2 * self.n + N_PARAMS

    def terms_of_degree(self, degree: int) -> list[MonomialTerm]:
        return [t for t in self.terms if t.degree == degree]

    def compiled(self):
        """Return a fast scalar evaluator ``f(z, w, a1, a2) -> list``.

        Used by the simulation loops, where numpy's per-call overhead
        dominates for the small state dimensions of interest.
        """
        n = self.n
        plan = []
        for t in self.terms:
            factors = tuple((i, e) for i, e in enumerate(t.exponents) if e)
            plan.append((t.target - 1, float(t.coeff), factors))

        def rhs(z, w, a1, a2):
            v = list(z) + list(w) + [a1, a2]
            out = [0.0] * n
            for r, c, factors in plan:
                for i, e in factors:
                    c *= v[i] if e == 1 else v[i] ** e
                out[r] += c
            return out

        return rhs


def _validate_term(t: MonomialTerm, n: int, nvar: int) -> None:
    if not 1 <= t.target <= n:
        raise ModelError(f"term target {t.target} outside 1..{n}")
    if len(t.exponents) != nvar:
        raise ModelError(f"expected {nvar} exponents, got {len(t.exponents)}")
    if any((not isinstance(e, (int, np.integer))) or e < 0 for e in t.exponents):
        raise ModelError(f"exponents must be nonnegative integers: {t.exponents}")
    state_deg = sum(t.exponents[: 2 * n])
    if state_deg == 0:
        if sum(t.exponents) == 0:
            raise ModelError("constant terms are not allowed")
        # f(0, 0, alpha) must vanish identically
        raise ModelError(f"pure parameter term {t.exponents} would make f(0,0,alpha) nonzero")


def _parse_coeff(text: str, line: int) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ModelError(f"bad coefficient {text!r}", line) from None


def parse_model(text: str, name: str = "") -> DDEModel:
    """Parse the line-oriented model format.

    ``n=<int>`` header followed by ``term <target> <coeff> <e1> ... <e_{2n+2}>``
    lines; ``#`` starts a comment line.
    """
    n = None
    terms = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if n is None:
            key, sep, val = line.partition("=")
            if key.strip() != "n" or not sep:
                raise ModelError("expected header 'n=<int>'", lineno)
            try:
                n = int(val.strip())
            except ValueError:
                raise ModelError(f"bad state dimension {val.strip()!r}", lineno) from None
            if n < 1:
                raise ModelError("state dimension must be positive", lineno)
            continue
        parts = line.split()
        if parts[0] != "term":
            raise ModelError(f"unknown directive {parts[0]!r}", lineno)
        nvar = 2 * n + N_PARAMS
        if len(parts) != 3 + nvar:
            raise ModelError(f"expected {nvar} exponents after target and coefficient", lineno)
        try:
            target = int(parts[1])
            exps = tuple(int(p) for p in parts[3:])
        except ValueError:
            raise ModelError("target and exponents must be integers", lineno) from None
        term = MonomialTerm(target, _parse_coeff(parts[2], lineno), exps)
        try:
            _validate_term(term, n, nvar)
        except ModelError as exc:
            raise ModelError(str(exc), lineno) from None
        terms.append(term)
    if n is None:
        raise ModelError("missing header 'n=<int>'")
    return DDEModel(n, tuple(terms), name=name)


def load_model(path) -> DDEModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelError(f"cannot read model file {path}: {exc.strerror}") from None
    return parse_model(text, name=path.stem)


def example_model_text() -> str:
    return resources.files("tbeuler.data").joinpath("example.model").read_text(encoding="utf-8")


def example_model() -> DDEModel:
    """The scalar test equation z' = (1+a1) z - (1+a2) z(t-1) + z z(t-1) / 2."""
    return parse_model(example_model_text(), name="example")


def format_model(model: DDEModel) -> str:
    lines = [f"n={model.n}"]
    for t in model.terms:
        c = t.coeff
        ctext = str(c.numerator) if c.denominator == 1 else repr(float(c))
        lines.append(" ".join(["term", str(t.target), ctext, *map(str, t.exponents)]))
    return "\n".join(lines) + "\n"


# -- evaluation ---------------------------------------------------------------

def _check_args(model, z_now, z_delay, alpha):
    z = np.asarray(z_now, dtype=float).reshape(-1)
    w = np.asarray(z_delay, dtype=float).reshape(-1)
    a = np.asarray(alpha, dtype=float).reshape(-1)
    if z.size != model.n or w.size != model.n:
        raise ValueError(f"state vectors must have length {model.n}")
    if a.size != N_PARAMS:
        raise ValueError("alpha must be a pair")
    return z, w, a


def eval_f(model: DDEModel, z_now, z_delay, alpha) -> np.ndarray:
    z, w, a = _check_args(model, z_now, z_delay, alpha)
    v = np.concatenate([z, w, a])
    mono = model._coeffs * np.prod(v[None, :] ** model._exps, axis=1)
    out = np.zeros(model.n)
    np.add.at(out, model._targets, mono)
    return out


def jacobians(model: DDEModel, z_now, z_delay, alpha) -> tuple[np.ndarray, np.ndarray]:
    """Exact partial derivatives (df/dz(t), df/dz(t-1)) at an arbitrary point."""
    z, w, a = _check_args(model, z_now, z_delay, alpha)
    v = np.concatenate([z, w, a])
    n = model.n
    jac = np.zeros((n, 2 * n))
    exps = model._exps
    for k in range(2 * n):
        e = exps[:, k]
        active = e > 0
        if not active.any():
            continue
        lowered = exps[active].copy()
        lowered[:, k] -= 1
        vals = model._coeffs[active] * e[active] * np.prod(v[None, :] ** lowered, axis=1)
        np.add.at(jac[:, k], model._targets[active], vals)
    return jac[:, :n], jac[:, n:]


# -- exact derivative data at the origin -------------------------------------

@dataclass(frozen=True)
class LinearData:
    A: np.ndarray
    B: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class QuadraticData:
    """Tensors of the degree-two part of f.

    ``A[k]``/``B[k]`` multiply ``alpha_{k+1} z(t)`` and ``alpha_{k+1} z(t-1)``;
    ``E[i]``, ``F[i]``, ``G[i]`` are the matrices of
    ``z_i(t) z(t-1)``, ``z_i(t) z(t)`` and ``z_i(t-1) z(t-1)``.
    """

    A: np.ndarray  # (2, n, n)
    B: np.ndarray  # (2, n, n)
    E: np.ndarray  # (n, n, n)
    F: np.ndarray
    G: np.ndarray

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @property
    def A1(self):
        return self.A[0]

    @property
    def A2(self):
        return self.A[1]

    @property
    def B1(self):
        return self.B[0]

    @property
    def B2(self):
        return self.B[1]

    def evaluate(self, z_now, z_delay, alpha) -> np.ndarray:
        z = np.asarray(z_now, dtype=float)
        w = np.asarray(z_delay, dtype=float)
        a = np.asarray(alpha, dtype=float)
        out = a[0] * (self.A[0] @ z + self.B[0] @ w) + a[1] * (self.A[1] @ z + self.B[1] @ w)
        out = out + np.einsum("i,irj,j->r", z, self.E, w)
        out = out + np.einsum("i,irj,j->r", z, self.F, z)
        out = out + np.einsum("i,irj,j->r", w, self.G, w)
        return out


def _frac_array(shape):
    arr = np.empty(shape, dtype=object)
    arr.fill(Fraction(0))
    return arr


def _to_float(arr) -> np.ndarray:
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


def extract_linear(model: DDEModel) -> LinearData:
    n = model.n
    A = _frac_array((n, n))
    B = _frac_array((n, n))
    for t in model.terms_of_degree(1):
        k = int(np.flatnonzero(t.exponents)[0])
        r = t.target - 1
        if k < n:
            A[r, k] += t.coeff
        else:
            B[r, k - n] += t.coeff
    return LinearData(_to_float(A), _to_float(B))


def extract_quadratic(model: DDEModel) -> QuadraticData:
    n = model.n
    Ak = _frac_array((2, n, n))
    Bk = _frac_array((2, n, n))
    E = _frac_array((n, n, n))
    F = _frac_array((n, n, n))
    G = _frac_array((n, n, n))
    half = Fraction(1, 2)
    for t in model.terms_of_degree(2):
        r = t.target - 1
        c = t.coeff
        idx = [k for k, e in enumerate(t.exponents) for _ in range(e)]
        i, j = idx
        if j >= 2 * n:
            # exactly one parameter factor; validation excludes alpha*alpha
            p = j - 2 * n
            if i < n:
                Ak[p, r, i] += c
            else:
                Bk[p, r, i - n] += c
        elif i < n <= j:
            E[i, r, j - n] += c
        else:
            T = F if j < n else G
            if j >= n:
                i, j = i - n, j - n
            if i == j:
                T[i, r, i] += c
            else:
                T[i, r, j] += c * half
                T[j, r, i] += c * half
    return QuadraticData(*(_to_float(x) for x in (Ak, Bk, E, F, G)))


def higher_order_part(model: DDEModel, z_now, z_delay, alpha) -> np.ndarray:
    """Sum of the degree >= 3 terms, evaluated term by term."""
    z, w, a = _check_args(model, z_now, z_delay, alpha)
    v = np.concatenate([z, w, a])
    out = np.zeros(model.n)
    for t in model.terms:
        if t.degree >= 3:
            out[t.target - 1] += float(t.coeff) * np.prod(v ** np.array(t.exponents))
    return out


def make_model(n: int, terms: Sequence[tuple], name: str = "") -> DDEModel:
    """Build a model from ``(target, coeff, exponents)`` tuples."""
    built = []
    for target, coeff, exps in terms:
        c = coeff if isinstance(coeff, Fraction) else Fraction(str(coeff))
        built.append(MonomialTerm(int(target), c, tuple(int(e) for e in exps)))
    return DDEModel(n, tuple(built), name=name)
