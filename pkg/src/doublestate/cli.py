"""Command line front end.

Exit codes: 0 success, 1 computation error or failed check, 2 input error.
Pass ``--json`` to any subcommand for machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Sequence

import numpy as np

from . import documents
from .decompose import (
    COEFFICIENT_READING,
    decompose_processes,
    mixture_expectation,
    reconstruct,
    spin1_example,
    svd_decompose,
    svd_reconstruct,
)
from .ensemble import sample_ensemble
from .errors import DoubleStateError, InputError
from .linalg import max_abs, projector_from_state
from .measure import (
    REPORT_TOL,
    DoubleState,
    MeasureReport,
    build_double_state,
    complex_measure,
    lambda_expectation,
    verify_consistency,
    weak_value,
)
from .process import ProcessWindow, dual_process, evolve_double_state, verify_dual_equivalence

SIG_DIGITS = 15
CHECK_TOL = 1e-9


class UsageError(InputError):
    pass


# formatting -----------------------------------------------------------------

def _r(x: float) -> float:
    return float(f"{float(x):.{SIG_DIGITS}g}")


def jsonable(x: Any) -> Any:
    """Round numbers to 15 significant digits; complex becomes ``[re, im]``."""
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (complex, np.complexfloating)):
        return [_r(x.real), _r(x.imag)]
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return _r(x)
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, dict):
        return {k: jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _fmt(x: Any) -> str:
    if isinstance(x, (complex, np.complexfloating)):
        return f"[{x.real:.{SIG_DIGITS}g}, {x.imag:.{SIG_DIGITS}g}]"
    if isinstance(x, (float, np.floating)):
        return f"{x:.{SIG_DIGITS}g}"
    if isinstance(x, np.ndarray):
        return "\n".join("  " + "  ".join(_fmt(complex(z)) for z in row) for row in np.atleast_2d(x))
    return str(x)


def _doc(obj) -> dict:
    return documents.to_dict(documents.document_of(obj))


def _emit(args, result: dict, human: list[tuple[str, Any]]) -> None:
    if args.json:
        print(json.dumps(jsonable({"command": args.command, **result}), indent=1))
        return
    for key, value in human:
        if isinstance(value, np.ndarray) and value.ndim == 2:
            print(f"{key}:")
            print(_fmt(value))
        else:
            print(f"{key}: {_fmt(value)}" if key else _fmt(value))


def _report_dict(rep: MeasureReport) -> dict:
    return {
        "passed": rep.passed,
        "tolerance": rep.tolerance,
        "residual": rep.residual,
        "checks": [
            {"name": c.name, "expected": c.expected, "actual": c.actual, "pass": c.passed} for c in rep.checks
        ],
    }


def _report_lines(rep: MeasureReport) -> list[tuple[str, Any]]:
    lines = [
        (f"{'PASS' if c.passed else 'FAIL'} {c.name}", f"expected {_fmt(c.expected)} actual {_fmt(c.actual)}")
        for c in rep.checks
    ]
    lines.append(("tolerance", rep.tolerance))
    lines.append(("residual", rep.residual))
    lines.append(("result", "all checks pass" if rep.passed else f"{len(rep.failures)} check(s) failed"))
    return lines


# argument helpers -----------------------------------------------------------

def parse_complex(text: str) -> complex:
    """``"re,im"``, ``"re"`` or a Python complex literal such as ``"0.3+0.7j"``."""
    s = text.strip()
    try:
        if "," in s:
            re_, im_ = s.split(",")
            z = complex(float(re_), float(im_))
        else:
            z = complex(s.replace("i", "j"))
    except ValueError as exc:
        raise UsageError(f"cannot parse complex number {text!r}; use re,im") from exc
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise UsageError(f"complex number {text!r} is not finite")
    return z


def _state(path):
    return documents.load(path, "state").payload


def _operator(path):
    return documents.load(path, "operator").payload


def _double_state(args) -> DoubleState:
    if getattr(args, "w", None):
        return documents.load(args.w, "double_state").payload
    if args.psi and args.phi:
        return build_double_state(_state(args.psi), _state(args.phi), args.alpha)
    raise UsageError("give either --w or both --psi and --phi")


def _window(args) -> ProcessWindow:
    if args.window:
        return documents.load(args.window, "window").payload
    if args.ti is None or args.tf is None:
        raise UsageError("--ti and --tf are required unless --window is given")
    if args.hamiltonian:
        return ProcessWindow.from_hamiltonian(_operator(args.hamiltonian), args.ti, args.tf)
    if args.unitary:
        return ProcessWindow.from_unitary(_operator(args.unitary), args.ti, args.tf)
    raise UsageError("give --hamiltonian, --unitary or --window")


# subcommands ----------------------------------------------------------------

def cmd_measure(args) -> int:
    W = _double_state(args)
    if args.projector:
        P = _operator(args.projector)
    elif args.onto:
        P = projector_from_state(_state(args.onto))
    else:
        raise UsageError("give --projector or --onto")
    mu = complex_measure(W, P)
    _emit(args, {"value": mu}, [("mu_C(P)", mu)])
    return 0


def cmd_expectation(args) -> int:
    W = _double_state(args)
    A = _operator(args.obs)
    lam = lambda_expectation(W, A)
    residual = abs(lam - complex(np.trace(W.W @ A)))
    _emit(
        args,
        {"value": lam, "residual": residual, "tolerance": CHECK_TOL},
        [("lambda(A)", lam), ("residual vs tr(WA)", residual)],
    )
    return 0


def cmd_weak_value(args) -> int:
    wv = weak_value(_state(args.psi), _state(args.phi), _operator(args.obs))
    _emit(args, {"value": wv}, [("", wv)])
    return 0


def cmd_evolve(args) -> int:
    win = _window(args)
    psi, phi = _state(args.psi), _state(args.phi)
    W = evolve_double_state(psi, phi, args.alpha, win, args.t)
    residual = abs(np.trace(W.W) - 1)
    _emit(
        args,
        {"t": args.t, "double_state": _doc(W), "residual": residual, "tolerance": 1e-10},
        [("t", args.t), ("W_C(t)", W.W), ("trace residual", residual)],
    )
    return 0


def cmd_dual(args) -> int:
    win = _window(args)
    psi, phi = _state(args.psi), _state(args.phi)
    dpsi, dphi = dual_process(psi, phi, win)
    result: dict[str, Any] = {"psi": _doc(dpsi), "phi": _doc(dphi)}
    human: list[tuple[str, Any]] = [
        ("dual initial state", complex_vector_str(dpsi.amplitudes)),
        ("dual final state", complex_vector_str(dphi.amplitudes)),
    ]
    if args.t is not None:
        ok = verify_dual_equivalence(psi, phi, args.alpha, win, args.t, CHECK_TOL)
        result.update({"equivalent": ok, "tolerance": CHECK_TOL})
        human.append(("same W_C(t) with weight 1 - alpha", ok))
        _emit(args, result, human)
        return 0 if ok else 1
    _emit(args, result, human)
    return 0


def complex_vector_str(v) -> str:
    return "[" + ", ".join(_fmt(complex(z)) for z in v) + "]"


def cmd_decompose(args) -> int:
    W = documents.load(args.w, "double_state").payload
    plan = documents.load(args.plan, "plan").payload if args.plan else None
    mix = decompose_processes(W, plan)
    result: dict[str, Any] = {"mixture": _doc(mix), "n_terms": len(mix), "coefficient_reading": COEFFICIENT_READING}
    human: list[tuple[str, Any]] = [("terms", len(mix))]
    for k, t in enumerate(mix.terms):
        human.append((f"  p[{k}]", t.p))
        human.append((f"  psi[{k}]", complex_vector_str(t.psi.amplitudes)))
        human.append((f"  phi[{k}]", complex_vector_str(t.phi.amplitudes)))
    status = 0
    if args.check:
        residual = max_abs(reconstruct(mix).W - W.W)
        ok = residual <= CHECK_TOL
        result.update({"residual": residual, "tolerance": CHECK_TOL, "passed": ok})
        human.append(("reconstruction residual", residual))
        human.append(("check", "PASS" if ok else "FAIL"))
        status = 0 if ok else 1
    _emit(args, result, human)
    return status


def cmd_svd(args) -> int:
    W = documents.load(args.w, "double_state").payload
    terms = svd_decompose(W)
    residual = max_abs(svd_reconstruct(terms) - W.W)
    result = {
        "terms": [
            {"r": t.r, "u": _doc(t.u)["amplitudes"], "v": _doc(t.v)["amplitudes"], "physical": t.physical}
            for t in terms
        ],
        "residual": residual,
        "tolerance": CHECK_TOL,
    }
    human: list[tuple[str, Any]] = []
    for k, t in enumerate(terms):
        tag = "physical" if t.physical else "UNPHYSICAL (<u|v> = 0)"
        human.append((f"r[{k}]", f"{_fmt(t.r)}  {tag}"))
    human.append(("reconstruction residual", residual))
    _emit(args, result, human)
    return 0


def cmd_simulate(args) -> int:
    if args.mixture:
        mix = documents.load(args.mixture, "mixture").payload
    elif args.w:
        mix = decompose_processes(documents.load(args.w, "double_state").payload)
    else:
        raise UsageError("give --mixture or --w")
    A = _operator(args.obs)
    est = sample_ensemble(mix, A, args.samples, args.seed, args.workers)
    exact = mixture_expectation(mix, A)
    residual = abs(est.mean - exact)
    _emit(
        args,
        {
            "mean": est.mean,
            "std_error": est.std_error,
            "n_samples": est.n_samples,
            "seed": est.seed,
            "exact": exact,
            "residual": residual,
            "tolerance": 5 * est.std_error,
        },
        [
            ("mean", est.mean),
            ("std_error", est.std_error),
            ("n_samples", est.n_samples),
            ("seed", est.seed),
            ("exact tr(WA)", exact),
            ("|mean - exact|", residual),
        ],
    )
    return 0


def cmd_spin1(args) -> int:
    W, mix, rep = spin1_example(args.alpha)
    notes = rep.notes
    terms = [
        {"p": t.p, "psi": _doc(t.psi)["amplitudes"], "phi": _doc(t.phi)["amplitudes"]} for t in mix.terms
    ]
    result = {
        "alpha": args.alpha,
        "double_state": _doc(W),
        "terms": terms,
        "residual": notes["reconstruction_residual"],
        "tolerance": rep.tolerance,
        "hermiticity_defect": notes["hermiticity_defect"],
        "coefficient_reading": notes["coefficient_reading"],
        "normalization_caveat": notes["caveat"],
        "report": _report_dict(rep),
    }
    human: list[tuple[str, Any]] = [("alpha", args.alpha), ("W_C", W.W)]
    for k, t in enumerate(mix.terms):
        human.append((f"process {k + 1}", f"p={_fmt(t.p)} psi={complex_vector_str(t.psi.amplitudes)} "
                      f"phi={complex_vector_str(t.phi.amplitudes)}"))
    human += [
        ("reconstruction residual", notes["reconstruction_residual"]),
        ("hermiticity defect", notes["hermiticity_defect"]),
        ("coefficient reading", notes["coefficient_reading"]),
    ]
    if notes["caveat"]:
        human.append(("caveat", "residual exceeds 1e-8: the listed processes hold only up to normalization"))
    _emit(args, result, human)
    return 0 if rep.passed else 1


def cmd_verify(args) -> int:
    psi, phi = _state(args.psi), _state(args.phi)
    W = documents.load(args.w, "double_state").payload if args.w else build_double_state(psi, phi, args.alpha)
    rep = verify_consistency(W, psi, phi, args.tol)
    _emit(args, _report_dict(rep), _report_lines(rep))
    return 0 if rep.passed else 1


# parser ---------------------------------------------------------------------

def _add_pair(p, required=False):
    p.add_argument("--psi", required=required, help="pre-selected state (JSON state document)")
    p.add_argument("--phi", required=required, help="post-selected state (JSON state document)")


def _add_alpha(p):
    p.add_argument("--alpha", type=parse_complex, default=complex(1), help="weight as re,im (default 1)")


def _add_window(p):
    p.add_argument("--ti", type=float, help="initial time")
    p.add_argument("--tf", type=float, help="final time")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--hamiltonian", help="Hermitian generator, U(t) = exp(-iHt)")
    g.add_argument("--unitary", help="evolution over one time unit")
    g.add_argument("--window", help="JSON window document (replaces --ti/--tf)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="doublestate",
        description="Complex measures and weak values for pre- and post-selected states.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("measure", parents=[common], help="mu_C(P) = tr(W P)")
    p.add_argument("--w", help="double state document")
    _add_pair(p)
    _add_alpha(p)
    p.add_argument("--projector", help="projector (operator document)")
    p.add_argument("--onto", help="state whose rank-one projector is used")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("expectation", parents=[common], help="lambda(A) for a Hermitian observable")
    p.add_argument("--w", help="double state document")
    _add_pair(p)
    _add_alpha(p)
    p.add_argument("--obs", required=True, help="observable (operator document)")
    p.set_defaults(func=cmd_expectation)

    p = sub.add_parser("weak-value", parents=[common], help="<phi|A|psi> / <phi|psi>")
    _add_pair(p, required=True)
    p.add_argument("--obs", required=True, help="observable (operator document)")
    p.set_defaults(func=cmd_weak_value)

    p = sub.add_parser("evolve", parents=[common], help="W_C(t) inside a process window")
    _add_pair(p, required=True)
    _add_alpha(p)
    _add_window(p)
    p.add_argument("--t", type=float, required=True, help="observation time")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("dual", parents=[common], help="states of the dual process")
    _add_pair(p, required=True)
    _add_alpha(p)
    _add_window(p)
    p.add_argument("--t", type=float, help="also check that both processes give the same W_C(t)")
    p.set_defaults(func=cmd_dual)

    p = sub.add_parser("decompose", parents=[common], help="mixture of at most d+1 processes")
    p.add_argument("--w", required=True, help="double state document")
    p.add_argument("--plan", help="plan document (basis and probabilities)")
    p.add_argument("--check", action="store_true", help="verify the reconstruction")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("svd", parents=[common], help="singular value expansion with physicality flags")
    p.add_argument("--w", required=True, help="double state document")
    p.set_defaults(func=cmd_svd)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo average of weak values")
    p.add_argument("--mixture", help="mixture document")
    p.add_argument("--w", help="double state document (decomposed with the default plan)")
    p.add_argument("--obs", required=True, help="observable (operator document)")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spin1-example", parents=[common], help="spin-1 double state and four-process mixture")
    _add_alpha(p)
    p.set_defaults(func=cmd_spin1)

    p = sub.add_parser("verify", parents=[common], help="consistency report for a double state")
    _add_pair(p, required=True)
    _add_alpha(p)
    p.add_argument("--w", help="double state to check instead of the one built from psi, phi, alpha")
    p.add_argument("--tol", type=float, default=REPORT_TOL)
    p.set_defaults(func=cmd_verify)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DoubleStateError as exc:
        code = 2 if isinstance(exc, InputError) else 1
        diag = {"error": exc.name, "message": str(exc)}
        if getattr(exc, "where", None):
            diag["where"] = exc.where
        if args.json:
            print(json.dumps({"command": args.command, **diag}, indent=1))
        else:
            print(f"error: {exc.name}: {exc}", file=sys.stderr)
        return code
    except ArithmeticError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())

