"""Numerical checks on the Euler scheme: fixed points, simulation, detection.

Both detectors bisect on a sign predicate in ``alpha1`` with ``alpha2``
held fixed.  The Neimark-Sacker detector tracks the modulus of the complex
eigenvalue pair of the linearized map nearest the unit circle; the homoclinic
detector uses the bounded/escaping dichotomy of an orbit started next to the
origin.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import ConvergenceError, NoSignChange
from .euler_disc import EulerScheme, spectrum
from .model import DDEModel, eval_f, jacobians

log = logging.getLogger(__name__)

NEWTON_MAXIT = 100
NEWTON_TOL = 1e-12
ESCAPE_FACTOR = 1e3
SHOOT_DELTA = 1e-3
SHOOT_STEPS_PER_DELAY = 200
CLASSIFY_MIN_DELAYS = 10
REAL_TOL = 1e-12


# -- fixed points ----------------------------------------------------------------------

def fixed_point_guess(model: DDEModel, alpha) -> np.ndarray:
    """Leading-order nontrivial equilibrium ``-(kappa1/a) phi1_0``."""
    from .tb_continuous import analyze_continuous

    cont = analyze_continuous(model)
    k1 = float(cont.coef.Pi[0] @ np.asarray(alpha, dtype=float))
    if cont.coef.a == 0.0:
        return np.zeros(model.n)
    return -(k1 / cont.coef.a) * cont.eig.phi1_0


def _nudge(model: DDEModel, alpha, z: np.ndarray) -> np.ndarray:
    target = fixed_point_guess(model, alpha)
    d = target - z
    if np.linalg.norm(d) < 1e-12:
        d = np.zeros_like(z)
        d[0] = 1.0
    return z + 1e-2 * (1.0 + np.linalg.norm(z)) * d / np.linalg.norm(d)


def find_fixed_point(model: DDEModel, alpha, guess=None, maxit: int = NEWTON_MAXIT,
                     tol: float = NEWTON_TOL) -> np.ndarray:
    """Solve ``f(z, z, alpha) = 0`` by Newton's method with step halving."""
    alpha = tuple(float(a) for a in alpha)
    z = fixed_point_guess(model, alpha) if guess is None else np.array(guess, dtype=float).reshape(model.n)
    F = lambda v: eval_f(model, v, v, alpha)  # noqa: E731
    r = F(z)
    for _ in range(maxit):
        nr = float(np.linalg.norm(r))
        if nr < tol:
            return z
        J1, J2 = jacobians(model, z, z, alpha)
        Jt = J1 + J2
        if np.linalg.cond(Jt) > 1e14:
            # a fold of f(z, z, alpha): nudge toward the leading-order guess
            z = _nudge(model, alpha, z)
            r = F(z)
            continue
        step = np.linalg.solve(Jt, -r)
        t = 1.0
        while t > 1e-6:
            trial = z + t * step
            rt = F(trial)
            if np.linalg.norm(rt) < nr:
                break
            t *= 0.5
        z, r = trial, rt
    if np.linalg.norm(r) < tol:
        return z
    raise ConvergenceError(f"Newton did not converge in {maxit} iterations (|f| = {np.linalg.norm(r):.3e})")


# -- simulation ------------------------------------------------------------------------

class Status(str, Enum):
    COMPLETED = "Completed"
    DIVERGED = "Diverged"


@dataclass(frozen=True)
class Trajectory:
    m: int
    alpha: tuple[float, float]
    z: np.ndarray  # (N+1, n): z_0 .. z_N
    status: Status = Status.COMPLETED
    diverged_at: int | None = None
    model_name: str = ""

    @property
    def eps(self) -> float:
        return 1.0 / self.m

    @property
    def steps(self) -> int:
        return self.z.shape[0] - 1

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.z.shape[0])

    @property
    def t(self) -> np.ndarray:
        return self.k * self.eps

    @property
    def dz(self) -> np.ndarray:
        """Difference quotients ``(z_{k+1} - z_k)/eps`` for ``k = 0..N-1``."""
        return (self.z[1:] - self.z[:-1]) / self.eps

    def to_csv(self) -> str:
        n = self.z.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "t"] + [f"z_{i + 1}" for i in range(n)] + [f"dz_{i + 1}" for i in range(n)])
        dz, t = self.dz, self.t
        for k in range(self.steps):
            w.writerow([k, repr(float(t[k]))] + [repr(float(v)) for v in self.z[k]]
                       + [repr(float(v)) for v in dz[k]])
        return buf.getvalue()


def load_history(path, m: int, n: int) -> np.ndarray:
    """Read ``m+1`` history rows (oldest first, ``n`` columns) from a CSV file."""
    rows = []
    with open(Path(path), newline="") as fh:
        for rec in csv.reader(fh):
            if not rec or rec[0].lstrip().startswith("#"):
                continue
            try:
                rows.append([float(x) for x in rec])
            except ValueError:
                if rows:
                    raise
                continue  # header line
    arr = np.array(rows, dtype=float)
    if arr.shape != (m + 1, n):
        raise ValueError(f"history file must hold {m + 1} rows of {n} values, got {arr.shape}")
    return arr


def _history_array(history, m: int, n: int) -> np.ndarray:
    if isinstance(history, (str, Path)):
        return load_history(history, m, n)
    h = np.asarray(history, dtype=float)
    if h.ndim == 0 or h.shape == (n,):
        return np.broadcast_to(h, (m + 1, n)).astype(float)
    if h.shape != (m + 1, n):
        raise ValueError(f"history must be a scalar, an {n}-vector or an ({m + 1}, {n}) array")
    return h


def escape_radius(z_star) -> float:
    return ESCAPE_FACTOR * max(1.0, float(np.linalg.norm(z_star)))


def simulate(scheme: EulerScheme, history, steps: int, r_escape: float | None = None,
             z_star=None) -> Trajectory:
    """Run ``steps`` Euler steps from a history on ``[-1, 0]``.

    ``history`` is a constant (scalar or n-vector), an ``(m+1, n)`` array
    ordered oldest first, or the path of a CSV file with that layout.  The
    run stops early with status ``Diverged`` once ``|z_k| > r_escape``.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    n, m, eps = scheme.n, scheme.m, scheme.eps
    a1, a2 = scheme.alpha
    hist = _history_array(history, m, n)
    if r_escape is None:
        r_escape = escape_radius(np.zeros(n) if z_star is None else z_star)
    rhs = scheme.model.compiled()
    ring = deque((list(row) for row in hist), maxlen=m + 1)
    zk = list(hist[-1])
    out = np.empty((steps + 1, n))
    out[0] = zk
    r2 = r_escape * r_escape
    for k in range(steps):
        fk = rhs(zk, ring[0], a1, a2)
        zk = [zi + eps * fi for zi, fi in zip(zk, fk)]
        ring.append(zk)
        out[k + 1] = zk
        s = sum(v * v for v in zk)
        if not s <= r2:  # catches nan
            return Trajectory(m, scheme.alpha, out[:k + 2].copy(), Status.DIVERGED, k + 1,
                              scheme.model.name)
    return Trajectory(m, scheme.alpha, out, Status.COMPLETED, None, scheme.model.name)


# -- detection -------------------------------------------------------------------------

@dataclass(frozen=True)
class DetectionResult:
    alpha2: float
    bracket: tuple[float, float]
    alpha1: float
    residual: float  # final bracket width
    iterations: int
    criterion: str
    details: dict = field(default_factory=dict, compare=False)

    def csv_row(self) -> list:
        return [repr(self.alpha2), repr(self.alpha1), repr(self.residual), self.iterations, self.criterion]


DETECTION_HEADER = ["alpha2", "alpha1_detected", "residual", "iterations", "criterion"]


def bisect(pred: Callable[[float], bool], lo: float, hi: float, tol: float,
           what: str = "") -> tuple[float, float, float, int]:
    """Bisect a boolean predicate; returns ``(lo, hi, mid, iterations)``."""
    if not lo < hi:
        raise ValueError(f"bracket must satisfy lo < hi, got ({lo}, {hi})")
    if tol <= 0:
        raise ValueError("tol must be positive")
    plo, phi = pred(lo), pred(hi)
    if plo == phi:
        raise NoSignChange(f"{what}: predicate has the same value ({plo}) at both ends of [{lo}, {hi}]")
    it = 0
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        if pred(mid) == plo:
            lo = mid
        else:
            hi = mid
        it += 1
    return lo, hi, 0.5 * (lo + hi), it


def ns_indicator(model: DDEModel, m: int, alpha) -> float:
    """Modulus minus one of the complex eigenvalue nearest the unit circle at ``z*``."""
    z = find_fixed_point(model, alpha)
    w = spectrum(EulerScheme(model, m, tuple(alpha)), at_point=z)
    cx = w[np.abs(w.imag) > REAL_TOL * np.maximum(1.0, np.abs(w))]
    if cx.size == 0:
        return float("nan")
    mod = np.abs(cx)
    return float(mod[np.argmin(np.abs(mod - 1.0))] - 1.0)


def detect_ns(model: DDEModel, m: int, alpha2: float, bracket, tol: float = 1e-5) -> DetectionResult:
    lo, hi = map(float, bracket)
    g = lambda a1: ns_indicator(model, m, (a1, alpha2))  # noqa: E731
    pred = lambda a1: g(a1) > 0.0  # noqa: E731
    try:
        lo2, hi2, mid, it = bisect(pred, lo, hi, tol, "detect_ns")
    except NoSignChange as exc:
        raise NoSignChange(f"{exc}; choose a bracket around the l_h^eps prediction") from None
    details = {"g_lo": g(lo2), "g_hi": g(hi2), "g_mid": g(mid)}
    return DetectionResult(float(alpha2), (lo, hi), mid, hi2 - lo2, it,
                           "ns:complex-pair-modulus", details)


def shoot_escapes(model: DDEModel, m: int, alpha, delta: float = SHOOT_DELTA,
                  steps_per_delay: int = SHOOT_STEPS_PER_DELAY,
                  escape_factor: float = ESCAPE_FACTOR) -> bool:
    """True when the orbit from a small constant history toward ``z*`` escapes."""
    z_star = find_fixed_point(model, alpha)
    nz = float(np.linalg.norm(z_star))
    if nz == 0.0:
        raise ConvergenceError("interior fixed point coincides with the origin")
    h0 = delta * z_star  # |h0| = delta |z*|, pointing toward z*
    r = escape_factor * max(1.0, nz)
    tr = simulate(EulerScheme(model, m, tuple(alpha)), h0, steps_per_delay * m, r_escape=r)
    return tr.status == Status.DIVERGED


def shoot_homoclinic(model: DDEModel, m: int, alpha2: float, bracket, tol: float = 1e-5,
                     delta: float = SHOOT_DELTA, steps_per_delay: int = SHOOT_STEPS_PER_DELAY,
                     escape_factor: float = ESCAPE_FACTOR) -> DetectionResult:
    lo, hi = map(float, bracket)
    pred = lambda a1: shoot_escapes(model, m, (a1, alpha2), delta, steps_per_delay, escape_factor)  # noqa: E731
    try:
        lo2, hi2, mid, it = bisect(pred, lo, hi, tol, "shoot_homoclinic")
    except NoSignChange as exc:
        raise NoSignChange(f"{exc}; widen the bracket around the l_inf^eps prediction") from None
    label = f"escape:delta={delta:g};N={steps_per_delay * m};R={escape_factor:g}*max(1,|z*|)"
    return DetectionResult(float(alpha2), (lo, hi), mid, hi2 - lo2, it, label)


def max_iterations(bracket, tol: float) -> int:
    width = bracket[1] - bracket[0]
    return max(0, math.ceil(math.log2(width / tol))) + 2


# -- classification --------------------------------------------------------------------

class Behavior(str, Enum):
    FOCUS = "Focus"
    INVARIANT_CURVE = "InvariantCurve"
    ESCAPE = "Escape"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class Classification:
    behavior: Behavior
    ratio: float
    advice: str = ""


def classify(tr: Trajectory, fixed_point) -> Classification:
    """Compare oscillation envelopes around ``fixed_point`` in the last and middle quarters."""
    if tr.status == Status.DIVERGED:
        return Classification(Behavior.ESCAPE, float("inf"))
    if tr.steps < CLASSIFY_MIN_DELAYS * tr.m:
        raise ValueError(f"trajectory too short: need at least {CLASSIFY_MIN_DELAYS} delay intervals")
    d = np.linalg.norm(tr.z - np.asarray(fixed_point, dtype=float), axis=1)
    n = d.size
    mid = d[n // 2: 3 * n // 4].max()
    last = d[3 * n // 4:].max()
    ratio = float(last / mid) if mid > 0 else (0.0 if last == 0 else float("inf"))
    if ratio < 0.5:
        return Classification(Behavior.FOCUS, ratio)
    if 0.8 <= ratio <= 1.25:
        return Classification(Behavior.INVARIANT_CURVE, ratio)
    return Classification(Behavior.UNDETERMINED, ratio, "envelope still changing; rerun with more steps")


CLASSIFY_HISTORY_FRACTION = 0.5
CLASSIFY_STEPS_PER_DELAY = 400


def run_and_classify(model: DDEModel, m: int, alpha, steps: int | None = None,
                     history_fraction: float = CLASSIFY_HISTORY_FRACTION) -> tuple[Classification, Trajectory]:
    """Simulate from the constant history ``history_fraction * z*`` and classify."""
    z_star = find_fixed_point(model, alpha)
    steps = CLASSIFY_STEPS_PER_DELAY * m if steps is None else steps
    tr = simulate(EulerScheme(model, m, tuple(alpha)), history_fraction * z_star, steps, z_star=z_star)
    return classify(tr, z_star), tr
