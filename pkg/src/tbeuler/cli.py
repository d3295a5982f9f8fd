"""Command-line interface: ``tbeuler <command> ...``.

Exit codes: 0 success, 1 input error, 2 mathematical precondition failure,
3 detection failure (no sign change in the bracket).
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from pathlib import Path

import numpy as np

from .detect import (
    DETECTION_HEADER,
    ESCAPE_FACTOR,
    SHOOT_DELTA,
    SHOOT_STEPS_PER_DELAY,
    CLASSIFY_HISTORY_FRACTION,
    classify,
    detect_ns,
    find_fixed_point,
    shoot_homoclinic,
    simulate,
)
from .errors import ConvergenceError, ModelError, NoSignChange, NotTBCandidate, SizeCapExceeded, StructureViolation
from .euler_disc import EulerScheme
from .model import DDEModel, example_model, load_model
from .nf_engine import nf_check_report
from .tb_continuous import BranchLine, analyze_continuous
from .tb_discrete import analyze_discrete, branch_lh_eps, branch_linf_eps, coefficients_direct, line_gap

EXIT_OK, EXIT_INPUT, EXIT_MATH, EXIT_DETECT = 0, 1, 2, 3
DEFAULT_ALPHA2 = (-0.05, -0.15, -0.25)
SAMPLE_LENGTH = 0.3
SAMPLE_POINTS = 31


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# -- argument helpers --------------------------------------------------------------

def _floats(text: str, count: int | None = None, what: str = "value") -> tuple[float, ...]:
    try:
        vals = tuple(float(x) for x in text.split(",") if x.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid {what} {text!r}") from None
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(f"{what} needs {count} comma-separated numbers, got {text!r}")
    return vals


def _pair(what):
    return lambda s: _floats(s, 2, what)


def _float_list(s):
    return _floats(s, None, "list")


def _m_list(s: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(x) for x in s.split(",") if x.strip() != "")
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid m list {s!r}") from None
    return vals


def _fmt(v) -> str:
    return format(float(v), ".15g")


def _vec(v) -> str:
    return "[" + ", ".join(_fmt(x) for x in np.asarray(v).ravel()) + "]"


def _mat(M) -> str:
    return "[" + ", ".join(_vec(r) for r in np.asarray(M)) + "]"


def _model(args) -> DDEModel:
    return example_model() if args.model is None else load_model(args.model)


def _single_m(args) -> int:
    ms = args.m
    if not ms:
        raise UsageError("--m must not be empty")
    if len(ms) != 1:
        raise UsageError("this command takes a single --m value")
    return _check_m(ms[0])


def _check_m(m: int) -> int:
    if m < 2:
        raise UsageError(f"m must be at least 2, got {m}")
    return m


def _emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


class _Report:
    """Ordered key/value report rendered as text or two-column CSV."""

    def __init__(self, title: str):
        self.title = title
        self.rows: list[tuple[str, str]] = []

    def add(self, key: str, value: str):
        self.rows.append((key, value))

    def render(self, fmt: str) -> str:
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["key", "value"])
            w.writerows(self.rows)
            return buf.getvalue()
        width = max(len(k) for k, _ in self.rows)
        return f"# {self.title}\n" + "".join(f"{k.ljust(width)} : {v}\n" for k, v in self.rows)


def _line_rows(rep: _Report, name: str, line: BranchLine):
    rep.add(f"{name}.coeffs", _vec(line.coeffs))
    rep.add(f"{name}.direction", _vec(line.direction()))


# -- commands ----------------------------------------------------------------------

def cmd_analyze(args) -> int:
    model = _model(args)
    cont = analyze_continuous(model)
    if args.kind == "continuous":
        rep = _Report("continuous Takens-Bogdanov analysis")
        rep.add("model", f"{model.name or '-'} (n={model.n})")
        for name in ("phi1_0", "phi2_0", "psi1_0", "psi2_0"):
            rep.add(name, _vec(getattr(cont.eig, name)))
        rep.add("a", _fmt(cont.coef.a))
        rep.add("b", _fmt(cont.coef.b))
        rep.add("Pi", _mat(cont.coef.Pi))
        rep.add("det_Pi", _fmt(cont.coef.det_pi))
        _line_rows(rep, "l_h", cont.lh)
        _line_rows(rep, "l_inf", cont.linf)
    else:
        m = _single_m(args)
        d = analyze_discrete(model, m)
        rep = _Report("forward Euler 1:1 resonance analysis")
        rep.add("model", f"{model.name or '-'} (n={model.n})")
        rep.add("m", str(m))
        rep.add("eps", _fmt(d.eps))
        rep.add("nu", _fmt(d.nu))
        rep.add("resonance.n_unit", str(d.resonance["n_unit"]))
        rep.add("resonance.min_gap", _fmt(d.resonance["min_gap"]))
        rep.add("resonance.passed", str(d.resonance["passed"]).lower())
        rep.add("eigendata.path", d.eigendata_path)
        c = d.direct
        rep.add("a_eps", _fmt(c.a_eps))
        rep.add("b_eps", _fmt(c.b_eps))
        rep.add("kappa1_eps.row", _vec(c.kappa1_row))
        rep.add("kappa2_eps.row", _vec(c.kappa2_row))
        _line_rows(rep, "l_h_eps", d.lh_eps)
        _line_rows(rep, "l_inf_eps", d.linf_eps)
        if d.engine_lh_eps is not None:
            _line_rows(rep, "engine.l_h_eps", d.engine_lh_eps)
            _line_rows(rep, "engine.l_inf_eps", d.engine_linf_eps)
            rep.add("engine.gap", _fmt(d.engine_gap))
    A = cont.assumption_A
    rep.add("assumption_A.passed", str(A["passed"]).lower())
    if not A["passed"]:
        logging.warning("assumption A check failed: %s", A)
    _emit(args, rep.render(args.format))
    return EXIT_OK


def cmd_nf(args) -> int:
    _emit(args, nf_check_report(np.array([[1.0, 1.0], [0.0, 1.0]]), 2, 2))
    return EXIT_OK


def _history(args, model, z_star):
    if args.history is None:
        return CLASSIFY_HISTORY_FRACTION * z_star
    p = Path(args.history)
    if p.exists():
        return p
    vals = _floats(args.history, None, "history")
    if len(vals) not in (1, model.n):
        raise UsageError(f"--history needs 1 or {model.n} values or a file path")
    return np.array(vals)


def _trajectory(args):
    model = _model(args)
    m = _single_m(args)
    if args.steps is None or args.steps < 1:
        raise UsageError("--steps must be a positive integer")
    if args.alpha is None:
        raise UsageError("--alpha is required")
    z_star = find_fixed_point(model, args.alpha)
    tr = simulate(EulerScheme(model, m, args.alpha), _history(args, model, z_star), args.steps, z_star=z_star)
    return model, z_star, tr


def cmd_simulate(args) -> int:
    _, z_star, tr = _trajectory(args)
    if args.format == "csv":
        _emit(args, tr.to_csv())
    else:
        rep = _Report("Euler simulation")
        rep.add("m", str(tr.m))
        rep.add("alpha", _vec(tr.alpha))
        rep.add("fixed_point", _vec(z_star))
        rep.add("steps", str(tr.steps))
        rep.add("status", tr.status.value)
        rep.add("final_state", _vec(tr.z[-1]))
        _emit(args, rep.render("text"))
    if tr.status.value == "Diverged":
        logging.warning("trajectory diverged at step %d", tr.diverged_at)
    return EXIT_OK


def cmd_phase(args) -> int:
    _, z_star, tr = _trajectory(args)
    if args.format == "csv":
        _emit(args, tr.to_csv())
    else:
        rep = _Report("phase portrait run")
        rep.add("m", str(tr.m))
        rep.add("alpha", _vec(tr.alpha))
        rep.add("fixed_point", _vec(z_star))
        rep.add("status", tr.status.value)
        if tr.steps >= 10 * tr.m or tr.status.value == "Diverged":
            c = classify(tr, z_star)
            rep.add("class", c.behavior.value)
            rep.add("envelope_ratio", _fmt(c.ratio))
            if c.advice:
                rep.add("advice", c.advice)
        else:
            rep.add("class", "n/a (fewer than 10 delay intervals)")
        _emit(args, rep.render("text"))
    return EXIT_OK


def _detect_rows(args, kind: str, model, m, alpha2_list, bracket_for) -> list:
    rows = []
    for a2 in alpha2_list:
        br = args.bracket if args.bracket is not None else bracket_for(a2)
        if kind == "hopf":
            res = detect_ns(model, m, a2, br, args.tol)
        else:
            res = shoot_homoclinic(model, m, a2, br, args.tol, delta=args.delta,
                                   steps_per_delay=args.steps_per_delay, escape_factor=args.escape_factor)
        rows.append(res)
    return rows


def _auto_bracket(line: BranchLine, lo: float, hi: float):
    def f(a2):
        x = line.alpha1_at(a2)
        return tuple(sorted((lo * x, hi * x)))
    return f


def cmd_detect(args) -> int:
    model = _model(args)
    m = _single_m(args)
    alpha2 = args.alpha2 if args.alpha2 else DEFAULT_ALPHA2
    d = analyze_discrete(model, m)
    if args.kind == "hopf":
        auto = _auto_bracket(d.lh_eps, 0.5, 1.5)
    else:
        auto = _auto_bracket(d.linf_eps, 0.8, 1.3)
    rows = _detect_rows(args, args.kind, model, m, alpha2, auto)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if args.format == "csv":
        w.writerow(DETECTION_HEADER)
        for r in rows:
            w.writerow(r.csv_row())
    else:
        buf.write(f"# {args.kind} detection, m={m}\n")
        for r in rows:
            buf.write(f"alpha2={_fmt(r.alpha2)} alpha1={_fmt(r.alpha1)} width={_fmt(r.residual)} "
                      f"iterations={r.iterations} criterion={r.criterion}\n")
    _emit(args, buf.getvalue())
    return EXIT_OK


def _sample_line(line: BranchLine, length: float = SAMPLE_LENGTH, npts: int = SAMPLE_POINTS) -> np.ndarray:
    t = np.linspace(0.0, length, npts)
    return t[:, None] * line.direction()[None, :]


def cmd_figure1(args) -> int:
    model = _model(args)
    if not args.m:
        raise UsageError("--m list must not be empty")
    ms = [_check_m(m) for m in args.m]
    cont = analyze_continuous(model)
    alpha2 = args.alpha2 if args.alpha2 else DEFAULT_ALPHA2
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["series", "m", "alpha1", "alpha2"])
    for name, line in (("l_h", cont.lh), ("l_inf", cont.linf)):
        for a in _sample_line(line):
            w.writerow([name, "", _fmt(a[0]), _fmt(a[1])])
    gaps = []
    for m in ms:
        c = coefficients_direct(cont.coef, cont.eig, cont.lin, 1.0 / m)
        lh_e, linf_e = branch_lh_eps(c), branch_linf_eps(c)
        for name, line in (("l_h_eps", lh_e), ("l_inf_eps", linf_e)):
            for a in _sample_line(line):
                w.writerow([name, m, _fmt(a[0]), _fmt(a[1])])
        gaps.append((m, 1.0 / m, line_gap(lh_e, cont.lh), line_gap(linf_e, cont.linf)))
        if args.no_detect:
            continue
        for kind, series, line, lo, hi in (("hopf", "ns_detected", lh_e, 0.5, 1.5),
                                           ("homoclinic", "homoclinic_detected", linf_e, 0.8, 1.3)):
            for r in _detect_rows(args, kind, model, m, alpha2, _auto_bracket(line, lo, hi)):
                w.writerow([series, m, _fmt(r.alpha1), _fmt(r.alpha2)])
    _emit(args, buf.getvalue())
    if args.gap_out:
        g = io.StringIO()
        gw = csv.writer(g, lineterminator="\n")
        gw.writerow(["m", "eps", "gap_l_h", "gap_l_inf"])
        for m, eps, g1, g2 in gaps:
            gw.writerow([m, _fmt(eps), _fmt(g1), _fmt(g2)])
        Path(args.gap_out).write_text(g.getvalue(), encoding="utf-8")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", help="model file (default: bundled example)")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("text", "csv"), default="text")

    p = _Parser(prog="tbeuler", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", parents=[common], help="branch lines of the DDE or its Euler map")
    a.add_argument("kind", choices=("continuous", "discrete"))
    a.add_argument("--m", type=_m_list, default=(100,))
    a.set_defaults(func=cmd_analyze)

    n = sub.add_parser("nf", parents=[common], help="homological operator listing")
    n.add_argument("action", choices=("check",))
    n.set_defaults(func=cmd_nf)

    for name, func, helptext in (("simulate", cmd_simulate, "run the Euler scheme"),
                                 ("phase", cmd_phase, "trajectory data for phase portraits")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--m", type=_m_list, default=(100,))
        s.add_argument("--alpha", type=_pair("alpha"), required=True)
        s.add_argument("--steps", type=int, default=40000)
        s.add_argument("--history", help="constant value(s) or CSV file; default: half the fixed point")
        s.set_defaults(func=func)

    shoot = argparse.ArgumentParser(add_help=False)
    shoot.add_argument("--alpha2", type=_float_list)
    shoot.add_argument("--tol", type=float, default=1e-5)
    shoot.add_argument("--delta", type=float, default=SHOOT_DELTA)
    shoot.add_argument("--steps-per-delay", type=int, default=SHOOT_STEPS_PER_DELAY)
    shoot.add_argument("--escape-factor", type=float, default=ESCAPE_FACTOR)

    d = sub.add_parser("detect", parents=[common, shoot], help="locate branch crossings")
    d.add_argument("kind", choices=("hopf", "homoclinic"))
    d.add_argument("--m", type=_m_list, default=(100,))
    d.add_argument("--bracket", type=_pair("bracket"))
    d.set_defaults(func=cmd_detect)

    f = sub.add_parser("figure1", parents=[common, shoot], help="bifurcation diagram data")
    f.add_argument("--m", type=_m_list, default=(100,))
    f.add_argument("--no-detect", action="store_true", help="skip the detector sweeps")
    f.add_argument("--gap-out", help="write the per-m line gap table here")
    f.set_defaults(func=cmd_figure1, bracket=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ModelError, SizeCapExceeded, OSError, ValueError) as exc:
        if isinstance(exc, NotTBCandidate):
            print(f"error: not a Takens-Bogdanov point: {exc}", file=sys.stderr)
            return EXIT_MATH
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StructureViolation, ConvergenceError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MATH
    except NoSignChange as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DETECT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
