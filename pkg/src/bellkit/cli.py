"""``bellkit`` command-line front end.

Exit codes: 0 success or check passed, 1 check failed, 2 input error.
Reports go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .algebra import ReducibleError
from .classify import classify_blocks, classify_strategy, report_to_dict
from .dilation import (
    DilationError,
    NotSupportPreserving,
    check_complex_local_dilation,
    check_local_dilation,
    naimark_dilate,
    real_simulation_dilation_witness,
    restrict_to_support,
)
from .linalg import TOL
from .projgen import MAX_N, negative_check_three_projections_n2, projections_quaternion, verify_generation
from .selftest import (
    BUILTINS,
    PAIRS,
    BellFunctional,
    Scenario,
    anticommutation_residual,
    bell_operator_eigencheck,
    bell_value,
    block_chsh_functional,
    bob_quaternion_observables,
    build_quaternion_strategy,
    chsh_functional,
    chsh_scenario,
    correlator_functional,
    quaternion_scenario,
    seesaw_optimize,
    six_chsh_functional,
)
from .strategy import (
    NumericalError,
    StrategyError,
    correlation,
    moment,
    observable_moment,
    real_simulation,
    validate,
)

QUATERNION_VALUE = 12 * np.sqrt(2)
CHSH_VALUE = 2 * np.sqrt(2)


class InputError(Exception):
    """Bad user input; reported with exit code 2."""


def _emit(args, payload: dict, lines: list[str]) -> None:
    if args.json:
        sys.stdout.write(io.dumps(payload))
    else:
        for line in lines:
            print(line)


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot write ({exc.strerror})") from None


def _parse_word(text: str):
    try:
        word = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"word {text!r} is not JSON ({exc})") from None
    if not isinstance(word, list):
        raise InputError("a word is a JSON list")
    return [tuple(letter) if isinstance(letter, list) else letter for letter in word]


# ------------------------------------------------------------------ commands


def cmd_validate(args) -> int:
    s = io.load_strategy(args.strategy)
    rep = validate(s, args.tol)
    flags = rep.flags()
    lines = [f"{k}: {v}" for k, v in flags.items()] + [f"error: {e}" for e in rep.errors]
    lines += [f"warning: {w}" for w in rep.warnings]
    _emit(args, {"flags": flags, "residuals": rep.residuals, "errors": rep.errors, "warnings": rep.warnings}, lines)
    return 0 if rep.valid else 1


def cmd_correlate(args) -> int:
    s = io.load_strategy(args.strategy)
    corr = correlation(s, args.tol)
    rows = [{"x": x, "y": y, "a": a, "b": b, "p": p} for (x, y, a, b), p in corr.items()]
    _emit(args, {"correlation": rows}, [f"p({a},{b}|{x},{y}) = {p:.12g}" for (x, y, a, b), p in corr.items()])
    return 0


def cmd_moments(args) -> int:
    s = io.load_strategy(args.strategy)
    wa, wb = _parse_word(args.word_a), _parse_word(args.word_b)
    try:
        value = observable_moment(s, wa, wb) if args.observable else moment(s, wa, wb)
    except (KeyError, ValueError) as exc:
        raise InputError(f"bad word: {exc}") from None
    _emit(args, {"value": io.complex_to_json(value)}, [f"moment = {value.real:.12g} + {value.imag:.12g}i"])
    return 0


def cmd_classify(args) -> int:
    s = io.load_strategy(args.strategy)
    try:
        rep = classify_strategy(s, args.tol)
    except ReducibleError:
        blocks = classify_blocks(s, args.tol)
        payload = {
            "verdict": "Reducible",
            "blocks": [
                {
                    "alice_block": b.block_a,
                    "bob_block": b.block_b,
                    "weight": b.weight,
                    "report": None if b.report is None else report_to_dict(b.report),
                }
                for b in blocks
            ],
        }
        lines = ["verdict: Reducible"] + [
            f"block ({b.block_a},{b.block_b}) weight {b.weight:.6g}: "
            + ("empty" if b.report is None else b.report.verdict)
            for b in blocks
        ]
        _emit(args, payload, lines)
        return 0
    lines = [
        f"verdict: {rep.verdict}",
        f"alice_type: {rep.alice_type.tag.value} (indicator {rep.indicator_a})",
        f"bob_type: {rep.bob_type.tag.value} (indicator {rep.indicator_b})",
        f"self_conjugate: {rep.self_conjugate}",
        f"moment_real: {rep.moment_real_direct}",
    ]
    for c in (rep.counterexample, rep.observable_counterexample):
        if c is not None:
            lines.append(f"{c.kind} counterexample: {list(c.word_a)} | {list(c.word_b)} -> {c.value:.12g}")
    _emit(args, report_to_dict(rep), lines)
    return 0


def cmd_dilate_check(args) -> int:
    s = io.load_strategy(args.strategy)
    t = io.load_strategy(args.canonical)
    w = io.witness_from_json(io.load_json(args.witness))
    check = check_complex_local_dilation if args.complex else check_local_dilation
    try:
        rep = check(s, t, w, args.tol)
    except DilationError as exc:
        raise InputError(str(exc)) from None
    payload = {
        "max_residual": rep.max_residual,
        "state_residual": rep.state_residual,
        "isometry_residual": rep.isometry_residual,
        "passed": rep.passed,
    }
    _emit(args, payload, [f"max_residual: {rep.max_residual:.3e}", "PASS" if rep.passed else "FAIL"])
    return 0 if rep.passed else 1


def cmd_naimark(args) -> int:
    s = io.load_strategy(args.strategy)
    n = naimark_dilate(s, args.tol)
    _write(args.out, io.dumps(io.strategy_to_json(n)))
    diff = correlation(n).max_difference(correlation(s))
    ok = validate(n, args.tol).projective
    _emit(args, {"dims": list(n.dims), "projective": ok, "correlation_difference": diff},
          [f"dims: {n.dims}", f"projective: {ok}", f"correlation difference: {diff:.3e}"])
    return 0 if ok else 1


def cmd_restrict(args) -> int:
    s = io.load_strategy(args.strategy)
    try:
        r = restrict_to_support(s, args.tol)
    except NotSupportPreserving as exc:
        print(f"bellkit: {exc}", file=sys.stderr)
        return 1
    _write(args.out, io.dumps(io.strategy_to_json(r)))
    full = validate(r, args.tol).full_rank
    _emit(args, {"dims": list(r.dims), "full_rank": full}, [f"dims: {r.dims}", f"full_rank: {full}"])
    return 0 if full else 1


def cmd_realsim(args) -> int:
    s = io.load_strategy(args.strategy)
    sr = real_simulation(s)
    w = real_simulation_dilation_witness(s)
    rep = check_complex_local_dilation(sr, s, w, args.tol)
    _write(args.out, io.dumps(io.strategy_to_json(sr)))
    if args.witness:
        _write(args.witness, io.dumps(io.witness_to_json(w)))
    diff = correlation(sr).max_difference(correlation(s))
    payload = {"dims": list(sr.dims), "correlation_difference": diff, "witness_residual": rep.max_residual,
               "passed": rep.passed}
    _emit(args, payload, [f"dims: {sr.dims}", f"correlation difference: {diff:.3e}",
                          f"witness residual: {rep.max_residual:.3e}", "PASS" if rep.passed else "FAIL"])
    return 0 if rep.passed else 1


def quaternion_golden_table(tol: float) -> list[tuple[str, float, float, bool]]:
    """Rows ``(name, value, expected, passed)`` for the quaternion self-test instance."""
    s = build_quaternion_strategy()
    rows = [("six-CHSH value", bell_value(s, six_chsh_functional()), QUATERNION_VALUE)]
    for l, m in PAIRS:
        rows.append((f"CHSH block ({l},{m})", bell_value(s, block_chsh_functional(l, m)), CHSH_VALUE))
    eig = bell_operator_eigencheck()
    rows.append(("top eigenvalue", eig.max_eigenvalue, 4.0))
    rows.append(("eigenvector fidelity", eig.fidelity_with_phi4, 1.0))
    obs = bob_quaternion_observables()
    anti = max(anticommutation_residual([obs[f"y{l}{m}+"], obs[f"y{l}{m}-"]]) for l, m in PAIRS)
    rows.append(("Bob anticommutator", anti, 0.0))
    return [(name, v, e, abs(v - e) <= tol) for name, v, e in rows]


def cmd_selftest(args) -> int:
    start = time.perf_counter()
    rows = quaternion_golden_table(args.tolerance)
    elapsed = time.perf_counter() - start
    ok = all(r[3] for r in rows)
    payload = {
        "instance": "quaternion",
        "rows": [{"name": n, "value": v, "expected": e, "passed": p} for n, v, e, p in rows],
        "bell_value": rows[0][1],
        "seconds": elapsed,
        "passed": ok,
    }
    lines = [f"{n:24s} {v:.15f}  expected {e:.15f}  {'ok' if p else 'MISMATCH'}" for n, v, e, p in rows]
    lines.append("PASS" if ok else "FAIL")
    _emit(args, payload, lines)
    return 0 if ok else 1


def _functional_from_json(obj) -> BellFunctional:
    if obj == "six_chsh":
        return six_chsh_functional()
    if obj == "chsh":
        return chsh_functional()
    if isinstance(obj, dict) and "correlators" in obj:
        try:
            return correlator_functional({(str(x), str(y)): float(w) for x, y, w in obj["correlators"]})
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad correlator list: {exc}") from None
    if isinstance(obj, dict) and "terms" in obj:
        try:
            coeffs = {(str(x), str(y), int(a), int(b)): float(w) for x, y, a, b, w in obj["terms"]}
            return BellFunctional(coeffs, float(obj.get("offset", 0.0)))
        except (TypeError, ValueError) as exc:
            raise InputError(f"bad term list: {exc}") from None
    raise InputError("functional must be 'six_chsh', 'chsh', {'correlators': ...} or {'terms': ...}")


def load_scenario(source: str) -> tuple[tuple[int, int], Scenario, BellFunctional]:
    """A builtin name (``quaternion``, ``chsh``) or a scenario JSON file."""
    if source == "quaternion":
        return (4, 4), quaternion_scenario(), six_chsh_functional()
    if source == "chsh":
        return (2, 2), chsh_scenario(), chsh_functional()
    obj = io.load_json(source)
    if not isinstance(obj, dict) or not {"dims", "alice", "bob", "functional"} <= set(obj):
        raise InputError("scenario file needs dims, alice, bob and functional")
    dims = obj["dims"]
    if not (isinstance(dims, list) and len(dims) == 2 and all(isinstance(d, int) and d > 0 for d in dims)):
        raise InputError("dims must be two positive integers")
    try:
        scen = Scenario({str(k): int(v) for k, v in obj["alice"].items()},
                        {str(k): int(v) for k, v in obj["bob"].items()})
    except (AttributeError, TypeError, ValueError) as exc:
        raise InputError(f"bad input/output counts: {exc}") from None
    return (dims[0], dims[1]), scen, _functional_from_json(obj["functional"])


def cmd_seesaw(args) -> int:
    dims, scen, f = load_scenario(args.scenario)
    xs, ys = f.inputs()
    unknown = [x for x in xs if x not in scen.alice] + [y for y in ys if y not in scen.bob]
    if unknown:
        raise InputError(f"functional uses inputs outside the scenario: {unknown}")
    try:
        res = seesaw_optimize(dims, scen, f, seed=args.seed, restarts=args.restarts, max_iter=args.max_iter)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    payload = {
        "best_value": res.best_value,
        "seed": res.seed,
        "restarts": res.restarts,
        "best_restart": res.best_restart,
        "values": res.values,
        "iterations": res.iterations,
        "best_strategy": io.strategy_to_json(res.best_strategy),
    }
    if args.out:
        _write(args.out, io.dumps(payload))
    summary = {k: v for k, v in payload.items() if k != "best_strategy"}
    _emit(args, summary, [f"best_value: {res.best_value:.15f}", f"seed: {res.seed}", f"restarts: {res.restarts}",
                          f"best_restart: {res.best_restart}"])
    return 0


def cmd_projgen(args) -> int:
    if not 2 <= args.n <= MAX_N:
        raise InputError(f"--n must lie in [2, {MAX_N}]")
    fam = projections_quaternion(args.n)
    if args.emit:
        _write(args.emit, io.dumps(io.family_to_json(fam)))
    payload = {"n": fam.n, "count": len(fam.projections), "expected_real_dim": fam.expected_real_dim,
               "projection_residual": fam.projection_residual(), "embedding_residual": fam.embedding_residual()}
    lines = [f"n: {fam.n}", f"projections: {len(fam.projections)}"]
    code = 0
    if args.check:
        rep = verify_generation(fam)
        payload.update(real_dim=rep.real_dim, type=rep.structure.tag.value, irreducible=rep.irreducible,
                       generations=rep.generations, passed=rep.passed)
        lines += [f"real_dim: {rep.real_dim} (expected {rep.expected_real_dim})",
                  f"type: {rep.structure.tag.value}", f"generations: {rep.generations}"]
        if args.n == 2:
            neg = negative_check_three_projections_n2()
            payload["negative"] = {"first_three": neg.first_three_real_dim, "passed": neg.passed}
            lines.append(f"first three projections: real_dim {neg.first_three_real_dim}")
            rep_ok = rep.passed and neg.passed
        else:
            rep_ok = rep.passed
        lines.append("PASS" if rep_ok else "FAIL")
        code = 0 if rep_ok else 1
    _emit(args, payload, lines)
    return code


def cmd_emit(args) -> int:
    s = BUILTINS[args.name]()
    text = io.dumps(io.strategy_to_json(s))
    if args.path in (None, "-"):
        sys.stdout.write(text)
    else:
        _write(args.path, text)
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--tol", type=float, default=TOL, help="numerical tolerance")

    p = argparse.ArgumentParser(prog="bellkit", description="Bell-scenario strategy toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(func=fn)
        return sp

    add("validate", cmd_validate, "check a strategy file and print its predicate flags").add_argument("strategy")
    add("correlate", cmd_correlate, "print p(a,b|x,y)").add_argument("strategy")
    sp = add("moments", cmd_moments, "evaluate one higher moment")
    sp.add_argument("strategy")
    sp.add_argument("--word-a", required=True, help='JSON word, e.g. [["x0","a1"]]')
    sp.add_argument("--word-b", required=True)
    sp.add_argument("--observable", action="store_true", help="words list observable labels")
    add("classify", cmd_classify, "realness classification").add_argument("strategy")
    sp = add("dilate-check", cmd_dilate_check, "check a (complex) local dilation witness")
    sp.add_argument("strategy")
    sp.add_argument("canonical")
    sp.add_argument("witness")
    sp.add_argument("--complex", action="store_true", help="witness carries the flag register")
    for name, fn, text in (("naimark", cmd_naimark, "projective dilation"),
                           ("restrict", cmd_restrict, "restrict to the state's support")):
        sp = add(name, fn, text)
        sp.add_argument("strategy")
        sp.add_argument("--out", required=True)
    sp = add("realsim", cmd_realsim, "real simulation and its witness")
    sp.add_argument("strategy")
    sp.add_argument("--out", required=True)
    sp.add_argument("--witness")
    sp = add("selftest", cmd_selftest, "golden values of a shipped self-test instance")
    sp.add_argument("instance", choices=["quaternion"])
    sp.add_argument("--tolerance", type=float, default=1e-9)
    sp = add("seesaw", cmd_seesaw, "see-saw lower bounds")
    sp.add_argument("--scenario", required=True, help="scenario JSON file, or 'quaternion' / 'chsh'")
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-iter", type=int, default=10_000)
    sp.add_argument("--out")
    sp = add("projgen", cmd_projgen, "quaternion-generating projection families")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--check", action="store_true")
    sp.add_argument("--emit")
    sp = add("emit", cmd_emit, "write a shipped strategy as JSON")
    sp.add_argument("name", choices=sorted(BUILTINS))
    sp.add_argument("path", nargs="?")
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (io.SchemaError, InputError, StrategyError) as exc:
        print(f"bellkit: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"bellkit: numerical failure: {exc}", file=sys.stderr)
        return 1


run = main

if __name__ == "__main__":
    sys.exit(main())
