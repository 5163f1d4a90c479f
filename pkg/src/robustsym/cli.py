"""Command-line front end: ``robustsym <command> ...``.

Exit codes: 0 robust / success, 3 fragile, 4 inconclusive,
1 usage or input error, 2 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import warnings
from typing import Sequence

import numpy as np

from . import __version__
from .algebra import bicommutant, commutant, is_subalgebra
from .dynamics import (
    TimeSamplingPlan,
    eternal_gap,
    exponent_fit,
    finite_dim_bound,
    wandering_range,
)
from .errors import NonCommutingError, NotHermitianError, NotRobustError, RobustSymError
from .io import MatrixFileError, dump_report, file_digest, matrix_to_json, read_matrix, read_vector, to_jsonable
from .kato import adiabatic_invariant, eps_safe, kato_unitary, subprojections
from .numkernel import commutator
from .robustness import (
    FRAGILE,
    INCONCLUSIVE,
    ROBUST,
    classify,
    completely_robust_test,
    is_symmetry,
    robust_algebra,
    robust_algebra_restricted,
)
from .scenarios import (
    SCENARIOS,
    degenerate_diag,
    oscillator_alpha_exponent,
    oscillator_alpha_integral,
    oscillator_norm_ratio,
    oscillator_shift_check,
    parity_check,
    truncated_oscillator,
)
from .spectral import decompose

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_FRAGILE, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
STATUS_EXIT = {ROBUST: EXIT_OK, FRAGILE: EXIT_FRAGILE, INCONCLUSIVE: EXIT_INCONCLUSIVE}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


class _LogCollector(logging.Handler):
    def __init__(self, sink: list[str]):
        super().__init__(logging.WARNING)
        self.sink = sink

    def emit(self, record):
        self.sink.append(record.getMessage())


def _random_unit(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def _family_table(family) -> dict:
    return {
        "ranks": family.ranks,
        "parent": family.parent,
        "slopes": family.slopes,
        "second_order": family.second_order,
        "splitting_order": family.splitting_order,
        "residual_flags": family.residual_flags,
    }


def _witness_table(w) -> dict | None:
    if w is None:
        return None
    return {"n": w.n, "m": w.m, "lower_bound": w.lower_bound, "psi_n": w.psi_n, "psi_m": w.psi_m}


def _plan(args) -> TimeSamplingPlan:
    return TimeSamplingPlan(grid_count=args.grid_count, random_count=args.random_count, seed=args.seed)


def _load(args, names: Sequence[str], hermitian: Sequence[str] = ("H", "V", "J")):
    mats, digests = {}, {}
    for name in names:
        path = getattr(args, name)
        mats[name] = read_matrix(path, hermitian=name in hermitian)
        digests[name] = file_digest(path)
    dims = {m.shape[0] for m in mats.values()}
    if len(dims) > 1:
        raise UsageError(f"matrix dimensions differ: {sorted(dims)}")
    return mats, digests


def _load_list(paths, hermitian: bool):
    mats = [read_matrix(p, hermitian=hermitian) for p in paths]
    if len({m.shape[0] for m in mats}) > 1:
        raise UsageError("matrix dimensions differ")
    return mats, [file_digest(p) for p in paths]


# -- commands ------------------------------------------------------------------

def cmd_classify(args, report, warn):
    mats, report["inputs"] = _load(args, ["H", "V", "S"])
    H, V, S = mats["H"], mats["V"], mats["S"]
    verdict = classify(S, H, V, tol=args.tol)
    family = verdict.family
    safe = eps_safe(V, family)
    report["tolerances"] = {"tol": verdict.tol, "hysteresis_upper": 10 * verdict.tol, "symmetry_tol": 1e-8}
    report["verdict"] = {
        "status": verdict.status,
        "robust": verdict.robust,
        "max_commutator": verdict.max_commutator,
        "commutator_norms": verdict.commutator_norms,
        "witness": _witness_table(verdict.witness),
        "notes": verdict.notes,
    }
    report["family"] = _family_table(family)
    report["eps_safe"] = safe
    if args.eps_sweep:
        psi = verdict.witness.psi_n if verdict.witness is not None else _random_unit(H.shape[0], args.seed)
        dec = decompose(H)
        rows = []
        for eps in args.eps_sweep:
            est = wandering_range(S, H, V, eps, psi, _plan(args))
            row = {"eps": eps, "lower": est.lower, "upper": est.upper, "t_argmax": est.t_argmax,
                   "within_eps_safe": eps <= safe}
            if verdict.robust and np.isfinite(dec.gap):
                row["finite_dim_bound"] = finite_dim_bound(S, H, V, eps, dec)
            if eps > safe:
                warn.append(f"eps={eps:g} exceeds eps_safe={safe:.6g}")
            rows.append(row)
        report["sweep"] = {"psi": "witness psi_n" if verdict.witness is not None else "seeded random",
                           "rows": rows}
        if len(rows) >= 3 and all(r["lower"] > 1e-12 for r in rows):
            gamma, r2 = exponent_fit([r["eps"] for r in rows], [r["lower"] for r in rows])
            report["sweep"]["exponent"] = {"gamma": gamma, "r_squared": r2}
    return STATUS_EXIT[verdict.status]


def _algebra_report(report, alg, include_basis: bool):
    report["algebra"] = {"dimension": alg.dimension, "adjoint_defect": alg.adjoint_defect()}
    if include_basis:
        report["algebra"]["basis"] = [matrix_to_json(B) for B in alg.basis]


def cmd_commutant(args, report, warn):
    mats, digests = _load_list(args.matrices, hermitian=False)
    report["inputs"] = dict(zip(args.matrices, digests))
    tol = args.tol if args.tol is not None else 1e-9
    report["tolerances"] = {"rank_tol": tol}
    _algebra_report(report, commutant(mats, tol=tol), args.basis)
    return EXIT_OK


def cmd_bicommutant(args, report, warn):
    mats, digests = _load_list(args.matrices, hermitian=False)
    report["inputs"] = dict(zip(args.matrices, digests))
    tol = args.tol if args.tol is not None else 1e-9
    report["tolerances"] = {"rank_tol": tol}
    _algebra_report(report, bicommutant(mats, tol=tol), args.basis)
    return EXIT_OK


def cmd_kato(args, report, warn):
    mats, report["inputs"] = _load(args, ["H", "V"])
    H, V = mats["H"], mats["V"]
    family = subprojections(H, V)
    safe = eps_safe(V, family)
    report["family"] = _family_table(family)
    report["eps_safe"] = safe
    report["robust_algebra_dimension"] = robust_algebra(H, V, family).dimension
    rows = []
    for eps in args.eps or []:
        if eps > safe:
            warn.append(f"eps={eps:g} exceeds eps_safe={safe:.6g}")
        k = kato_unitary(H, V, eps, family)
        rows.append({"eps": eps, "max_Rn_norm": k.max_Rn_norm, "min_overlap": k.min_overlap,
                     "unitarity_residual": k.unitarity_residual,
                     "intertwining_residual": k.intertwining_residual,
                     "branch_values": k.branch_values})
    report["unitary"] = rows
    return EXIT_OK


def cmd_wander(args, report, warn):
    mats, report["inputs"] = _load(args, ["H", "V", "S"])
    H, V, S = mats["H"], mats["V"], mats["S"]
    if args.psi:
        psi = read_vector(args.psi)
        if psi.shape[0] != H.shape[0]:
            raise UsageError("psi dimension does not match the matrices")
        psi = psi / np.linalg.norm(psi)
        report["inputs"]["psi"] = file_digest(args.psi)
    else:
        psi = _random_unit(H.shape[0], args.seed)
    ok, res = is_symmetry(S, H)
    if not ok:
        warn.append(f"S is not a symmetry of H (residual {res:.3e})")
    plan = _plan(args)
    report["plan"] = {"grid_count": plan.grid_count, "random_count": plan.random_count, "seed": plan.seed}
    dec = decompose(H)
    rows = []
    for eps in args.eps:
        est = wandering_range(S, H, V, eps, psi, plan)
        row = {"eps": eps, "lower": est.lower, "upper": est.upper, "t_argmax": est.t_argmax,
               "samples_used": est.samples_used}
        if np.isfinite(dec.gap):
            row["finite_dim_bound"] = finite_dim_bound(S, H, V, eps, dec)
        rows.append(row)
    report["estimates"] = rows
    if len(rows) >= 3 and all(r["lower"] > 1e-12 for r in rows):
        gamma, r2 = exponent_fit(args.eps, [r["lower"] for r in rows])
        report["exponent"] = {"gamma": gamma, "r_squared": r2}
    return EXIT_OK


def cmd_adiabatic(args, report, warn):
    mats, report["inputs"] = _load(args, ["H", "V", "S"])
    H, V, S = mats["H"], mats["V"], mats["S"]
    family = subprojections(H, V)
    safe = eps_safe(V, family)
    report["eps_safe"] = safe
    rows = []
    try:
        for eps in args.eps_sweep:
            if eps > safe:
                warn.append(f"eps={eps:g} exceeds eps_safe={safe:.6g}")
            k = kato_unitary(H, V, eps, family)
            Se = adiabatic_invariant(S, k, args.tol)
            rows.append({"eps": eps,
                         "commutator_residual": float(np.linalg.norm(commutator(Se, H + eps * V))),
                         "distance_to_S": float(np.linalg.norm(Se - S))})
    except NotRobustError as exc:
        report["verdict"] = {"status": FRAGILE, "detail": str(exc)}
        return EXIT_FRAGILE
    report["verdict"] = {"status": ROBUST}
    report["invariants"] = rows
    return EXIT_OK


def cmd_restricted(args, report, warn):
    H = read_matrix(args.H, hermitian=True)
    Js, digests = _load_list(args.J, hermitian=True)
    if any(J.shape != H.shape for J in Js):
        raise UsageError("matrix dimensions differ")
    report["inputs"] = {"H": file_digest(args.H), "J": digests}
    res = robust_algebra_restricted(H, Js, num_samples=args.samples, seed=args.seed)
    report["result"] = {"dimension": res.algebra.dimension,
                        "predicted_dimension": res.predicted.dimension,
                        "matches": res.matches, "sample_seeds": res.seeds}
    return EXIT_OK if res.matches else EXIT_INCONCLUSIVE


# -- scenarios -------------------------------------------------------------------

SCENARIO_PARAMS = {
    "degenerate-diag": {"multiplicities": "2,1", "values": "0,1", "eps": "1e-1,1e-2,1e-3"},
    "oscillator": {"N": "60", "eps": "0.2"},
    "oscillator-alpha": {"alpha": "2", "eps": "0.1", "abs_tol": "1e-9", "sweep": "1e-5,1e-6,1e-7",
                         "ratio_cutoff": ""},
}


def _scenario_params(name: str, pairs: Sequence[str]) -> dict[str, str]:
    params = dict(SCENARIO_PARAMS[name])
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep or key not in params:
            raise UsageError(f"unknown parameter {item!r} for {name}; accepted: {', '.join(sorted(params))}")
        params[key] = value
    return params


def _scenario_degenerate(p, args, report, warn):
    model = degenerate_diag(tuple(int(x) for x in _floats(p["multiplicities"])), tuple(_floats(p["values"])))
    H, V = model.H, model.V
    family = subprojections(H, V)
    safe = eps_safe(V, family)
    dec = decompose(H)
    R = robust_algebra(H, V, family)
    low, _ = is_subalgebra(bicommutant([H]), R)
    high, _ = is_subalgebra(R, commutant([H]))
    checks = {"sandwich": bool(low and high)}
    table = {}
    for name, S in model.symmetries.items():
        ok, res = is_symmetry(S, H)
        checks[f"{name}.is_symmetry"] = ok
        v = classify(S, H, V, family=family)
        psi = v.witness.psi_n if v.witness is not None else _random_unit(H.shape[0], args.seed)
        rows = []
        for eps in _floats(p["eps"]):
            est = wandering_range(S, H, V, eps, psi, _plan(args))
            rows.append({"eps": eps, "lower": est.lower, "upper": est.upper,
                         "within_eps_safe": eps <= safe})
        entry = {"status": v.status, "max_commutator": v.max_commutator,
                 "completely_robust": completely_robust_test(S, H), "sweep": rows,
                 "witness_lower_bound": v.witness.lower_bound if v.witness else None}
        if v.witness is not None:
            checks[f"{name}.witness_confirmed"] = bool(rows[-1]["lower"] >= 0.95 * v.witness.lower_bound)
        elif v.robust and np.isfinite(dec.gap):
            bounds = [finite_dim_bound(S, H, V, r["eps"], dec) for r in rows]
            entry["finite_dim_bounds"] = bounds
            checks[f"{name}.below_finite_dim_bound"] = all(
                r["lower"] <= b + 1e-12 for r, b in zip(rows, bounds) if r["within_eps_safe"])
        table[name] = entry
    report["model"] = {"multiplicities": model.metadata["multiplicities"], "values": model.metadata["values"],
                       "V": matrix_to_json(V)}
    report["family"] = _family_table(family)
    report["eps_safe"] = safe
    report["robust_algebra_dimension"] = R.dimension
    report["symmetries"] = table
    return checks


def _scenario_oscillator(p, args, report, warn):
    N = int(p["N"])
    eps = float(p["eps"])
    model = truncated_oscillator(N)
    shift = oscillator_shift_check(N, eps)
    parity = model.symmetries["parity"]
    defect = commutator(model.metadata["x"], model.metadata["p"]) - 1j * np.eye(N)
    defect[N - 1, N - 1] = 0.0
    report["model"] = {"N": N, "eps": eps}
    report["shift"] = {"max_deviation": shift["max_deviation"], "modes": shift["modes"]}
    report["parity"] = {"identity_residual": parity_check(N),
                        "completely_robust": completely_robust_test(parity, model.H)}
    report["ccr_defect_off_corner"] = float(np.linalg.norm(defect))
    checks = {"parity_identity": report["parity"]["identity_residual"] <= 1e-12,
              "parity_completely_robust": report["parity"]["completely_robust"],
              "symmetries_commute": all(is_symmetry(S, model.H)[0] for S in model.symmetries.values())}
    if N == 60 and math.isclose(eps, 0.2):
        checks["shift_within_1e-6"] = shift["max_deviation"] <= 1e-6
    # eternal gap on a Gaussian-weighted low-Fock vector
    psi = np.exp(-0.5 * np.arange(N) ** 2 / 4.0).astype(np.complex128)
    psi /= np.linalg.norm(psi)
    family = subprojections(model.H, model.V)
    rows = []
    for e in (eps, eps / 2, eps / 4):
        try:
            rows.append({"eps": e, "eternal_gap": eternal_gap(model.H, model.V, e, psi, family,
                                                              TimeSamplingPlan(seed=args.seed))})
        except RobustSymError as exc:
            warn.append(f"eternal gap at eps={e:g}: {exc}")
    report["eternal_gap"] = rows
    return checks


def _scenario_alpha(p, args, report, warn):
    alpha, eps, tol = float(p["alpha"]), float(p["eps"]), float(p["abs_tol"])
    res = oscillator_alpha_integral(alpha, eps, abs_tol=tol)
    report["integral"] = {"alpha": alpha, "eps": eps, "g": res.g, "c_alpha": res.c_alpha,
                          "error": res.error, "cutoff": res.cutoff, "lower_bound": res.lower_bound}
    checks = {"g_above_lower_bound": res.g >= res.lower_bound * (1 - 1e-6)}
    if alpha == 2:
        exact = 0.5 * math.pi * (1 - math.exp(-4.0))
        report["integral"]["c_2_closed_form"] = math.sqrt(exact)
        checks["c_2_matches_closed_form"] = abs(res.c_alpha**2 - exact) <= 1e-8
    sweep = _floats(p["sweep"]) if p["sweep"] else []
    if len(sweep) >= 3:
        gs, gamma, r2 = oscillator_alpha_exponent(alpha, sweep)
        report["exponent"] = {"eps": sweep, "g": gs, "gamma": gamma, "r_squared": r2,
                              "expected": 0.5 * (alpha - 1)}
        checks["exponent_within_0.05"] = abs(gamma - 0.5 * (alpha - 1)) <= 0.05
    if p["ratio_cutoff"]:
        c, nrm, ratio = oscillator_norm_ratio(alpha, float(p["ratio_cutoff"]))
        report["ratio"] = {"c": c, "norm": nrm, "ratio": ratio}
    return checks


SCENARIO_RUNNERS = {
    "degenerate-diag": _scenario_degenerate,
    "oscillator": _scenario_oscillator,
    "oscillator-alpha": _scenario_alpha,
}


def cmd_scenario(args, report, warn):
    if args.name not in SCENARIOS:
        raise UsageError(f"unknown scenario {args.name!r}; available: {', '.join(SCENARIOS)}")
    params = _scenario_params(args.name, args.param)
    report["scenario"] = args.name
    report["params"] = params
    try:
        checks = SCENARIO_RUNNERS[args.name](params, args, report, warn)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        if isinstance(exc, RobustSymError):
            raise
        raise UsageError(str(exc)) from exc
    report["checks"] = checks
    return EXIT_OK if all(checks.values()) else EXIT_NUMERIC


# -- plumbing ----------------------------------------------------------------------

def _globals(parser: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--tol", type=float, default=d(None), help="classification / rank tolerance")
    parser.add_argument("--seed", type=int, default=d(42), help="seed for every random choice")
    parser.add_argument("--json", action="store_true", default=d(False), help="emit the JSON report")
    parser.add_argument("--quiet", action="store_true", default=d(False), help="print nothing")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="robustsym", description="Robust and fragile symmetries of H + eps V.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _globals(common, suppress=True)
    sampling = argparse.ArgumentParser(add_help=False)
    sampling.add_argument("--grid-count", type=int, default=4096)
    sampling.add_argument("--random-count", type=int, default=512)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classify", parents=[common, sampling], help="robust / fragile verdict for S")
    p.add_argument("H"), p.add_argument("V"), p.add_argument("S")
    p.add_argument("--eps-sweep", type=_floats, default=None, help="comma-separated eps values")
    p.set_defaults(func=cmd_classify)

    for name, func in (("commutant", cmd_commutant), ("bicommutant", cmd_bicommutant)):
        p = sub.add_parser(name, parents=[common], help=f"{name} of a set of matrices")
        p.add_argument("matrices", nargs="+")
        p.add_argument("--basis", action="store_true", help="include the orthonormal basis")
        p.set_defaults(func=func)

    p = sub.add_parser("kato", parents=[common], help="Kato subprojections and intertwining unitary")
    p.add_argument("H"), p.add_argument("V")
    p.add_argument("--eps", type=_floats, default=None, help="eps values for U(eps)")
    p.set_defaults(func=cmd_kato)

    p = sub.add_parser("wander", parents=[common, sampling], help="wandering range estimates")
    p.add_argument("H"), p.add_argument("V"), p.add_argument("S")
    p.add_argument("--eps", type=_floats, required=True)
    p.add_argument("--psi", default=None, help="vector file; default a seeded random unit vector")
    p.set_defaults(func=cmd_wander)

    p = sub.add_parser("adiabatic", parents=[common], help="adiabatic invariants along an eps sweep")
    p.add_argument("H"), p.add_argument("V"), p.add_argument("S")
    p.add_argument("--eps-sweep", type=_floats, default=[1e-1, 1e-2, 1e-3])
    p.set_defaults(func=cmd_adiabatic)

    p = sub.add_parser("restricted", parents=[common], help="robust algebra under protected symmetries")
    p.add_argument("H"), p.add_argument("J", nargs="+")
    p.add_argument("--samples", type=int, default=25)
    p.set_defaults(func=cmd_restricted)

    p = sub.add_parser("scenario", parents=[common, sampling], help="run a built-in model")
    p.add_argument("name", help=f"one of: {', '.join(SCENARIOS)}")
    p.add_argument("--param", action="append", metavar="K=V", default=[])
    p.set_defaults(func=cmd_scenario)
    return parser


def _text(report, prefix="") -> list[str]:
    lines = []
    for key in sorted(report):
        value = report[key]
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            if "entries" in value and "dim" in value:
                continue
            lines += _text(value, path + ".")
        elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            for i, v in enumerate(value):
                lines += _text(v, f"{path}[{i}].")
        elif isinstance(value, list) and len(value) > 8:
            continue
        else:
            lines.append(f"{path}: {value}")
    return lines


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    warn: list[str] = []
    report: dict = {"command": args.command, "seed": args.seed}
    handler = _LogCollector(warn)
    pkg_log = logging.getLogger("robustsym")
    pkg_log.addHandler(handler)
    pkg_log.propagate = False
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            code = args.func(args, report, warn)
        warn.extend(str(w.message) for w in caught)
    except (MatrixFileError, UsageError, NotHermitianError, NonCommutingError) as exc:
        print(f"robustsym: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RobustSymError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"robustsym: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    finally:
        pkg_log.removeHandler(handler)
        pkg_log.propagate = True
    report["warnings"] = warn
    report["exit_code"] = code
    if not args.quiet:
        if args.json:
            print(dump_report(report))
        else:
            print("\n".join(_text(to_jsonable(report))))
    return code


if __name__ == "__main__":
    sys.exit(main())
