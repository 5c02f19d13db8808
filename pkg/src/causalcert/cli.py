"""Command-line interface: validate | certify | scan | reproduce | witness-verify.

Exit codes: 0 ok, 1 validation failed, 2 parse failure, 3 solver failure,
4 bad scan bracket.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .certify import certify, verify_witness
from .cones import uniform_noise
from .dpovm import dpovm_report, induce_dpovm
from .errors import (
    CausalCertError,
    InvalidBracketError,
    InvalidParamError,
    SolverError,
)
from .processes import ScenarioParams, process_report
from .scenarios import SCENARIOS, get_scenario, run_reproduce, scenario_reports
from .witnesses import quantum_switch_witness

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_BRACKET = 4


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalcert",
        description="Certification of causal nonseparability for process matrices and D-POVMs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scan_flags=False):
        p.add_argument("--scenario", choices=sorted(SCENARIOS), help="named built-in scenario")
        p.add_argument("--process", metavar="FILE", help="process matrix JSON")
        p.add_argument("--instruments", metavar="FILE", help="instruments JSON")
        p.add_argument("--cone", help="cone variant override for custom objects")
        p.add_argument("--r", type=float, default=0.0, help="depolarization parameter")
        p.add_argument("--q", type=float, default=None)
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--xi", type=float, default=None)
        p.add_argument("--tol", type=float, default=None, help="solver feasibility tolerance")
        p.add_argument("--solver", default=None, help="conic backend (default CLARABEL)")
        p.add_argument("--json", action="store_true", help="emit JSON instead of text")
        p.add_argument("--out", metavar="DIR", default=None, help="directory for report files")
        if scan_flags:
            p.add_argument("--r-lo", type=float, default=None)
            p.add_argument("--r-hi", type=float, default=None)

    common(sub.add_parser("validate", help="validate a scenario or files"))
    common(sub.add_parser("certify", help="robustness certification at fixed r"))
    common(sub.add_parser("scan", help="bisect the causal/noncausal threshold"), scan_flags=True)
    rep = sub.add_parser("reproduce", help="recompute the full threshold table")
    common(rep)
    rep.add_argument("--jobs", type=int, default=1, help="parallel scan workers")
    wv = sub.add_parser("witness-verify", help="check dual-cone membership of a witness")
    common(wv)
    wv.add_argument("--witness", metavar="FILE", help="witness JSON (default: built-in switch witness)")
    return parser


def _params(args) -> ScenarioParams:
    defaults = ScenarioParams()
    return ScenarioParams(
        q=defaults.q if args.q is None else args.q,
        epsilon=defaults.epsilon if args.epsilon is None else args.epsilon,
        r=max(args.r, 0.0),
        xi=defaults.xi if args.xi is None else args.xi,
    )


def _apply_tol(args):
    if args.tol is not None:
        os.environ["CAUSALCERT_SOLVER_TOL"] = str(args.tol)


def _emit(args, payload: dict, text_lines: list[str]):
    if args.json:
        print(json.dumps(payload, indent=2, default=float))
    else:
        for line in text_lines:
            print(line)


def _derive_spec(obj):
    from .certify import _extract

    return _extract(obj, None)


def _load_object(args, params):
    """Custom object from files, or the scenario's object at r."""
    from . import serialize

    if args.process:
        process = serialize.process_from_dict(serialize.load(args.process), validate=False)
        if not args.instruments:
            return process, None
        data = serialize.load(args.instruments)
        alice = serialize.instrument_from_dict(data["alice"])
        bob = serialize.instrument_from_dict(data["bob"])
        fiona = serialize.povm_from_dict(data["fiona"]) if "fiona" in data else None
        return induce_dpovm(process, alice, bob, fiona), (process, alice, bob, fiona)
    scenario = get_scenario(args.scenario)
    return scenario.object_at(args.r, params), None


def cmd_validate(args) -> int:
    params = _params(args)
    reports = []
    if args.process:
        from . import serialize

        data = serialize.load(args.process)
        process = serialize.process_from_dict(data, validate=False)
        reports.append(process_report(process.W, process.kind))
        if args.instruments:
            obj, _ = _load_object(args, params)
            reports.append(dpovm_report(obj))
    elif args.scenario:
        reports = scenario_reports(args.scenario, params)
    else:
        raise InvalidParamError("validate needs --scenario or --process")
    ok = all(rep.ok for rep in reports)
    payload = {
        "ok": ok,
        "reports": [
            {"subject": rep.subject,
             "checks": [{"name": c.name, "residual": c.residual, "tol": c.tol, "ok": c.ok}
                        for c in rep.checks]}
            for rep in reports
        ],
    }
    _emit(args, payload, [str(rep) for rep in reports])
    return EXIT_OK if ok else EXIT_INVALID


def cmd_certify(args) -> int:
    from . import serialize

    params = _params(args)
    obj, _ = _load_object(args, params)
    if args.scenario and not args.process:
        scenario = get_scenario(args.scenario)
        result = scenario.certify_at(args.r, params, solver=args.solver, feas_tol=args.tol)
    else:
        cone = None
        if args.cone == "mdci-element":
            # certify the (0,..,0) element of the induced D-POVM in the
            # single-element MDCI cone (teleport-style instruments)
            first = min(obj.elements)
            obj = obj.elements[first]
        elif args.cone is not None:
            derived, _, _ = _derive_spec(obj)
            if args.cone != derived.variant:
                raise InvalidParamError(
                    f"--cone {args.cone!r} does not apply to this object (derived {derived.variant!r})")
        result = certify(obj, cone, solver=args.solver, feas_tol=args.tol)
    witness_path = None
    if args.out and result.witness is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        witness_path = out_dir / "witness.json"
        serialize.dump(serialize.witness_to_dict(result.witness), witness_path)
        serialize.dump(serialize.result_to_dict(result), out_dir / "certification.json")
    payload = serialize.result_to_dict(result)
    payload["witness_file"] = None if witness_path is None else str(witness_path)
    lines = [
        f"robustness: {result.robustness:.6f} (signed {result.signed_robustness:+.6f})",
        f"verdict: {result.verdict}",
        f"status: {result.status}" + (
            f", duality gap {result.duality_gap:.2e}" if result.duality_gap is not None else ""),
        f"witness: {witness_path if witness_path else '(pass --out to save)'}",
    ]
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_scan(args) -> int:
    from . import report as report_mod

    params = _params(args)
    if not args.scenario:
        raise InvalidParamError("scan needs --scenario")
    scenario = get_scenario(args.scenario)
    result = scenario.scan(params, r_lo=args.r_lo, r_hi=args.r_hi,
                           solver=args.solver, feas_tol=args.tol)
    files = []
    if args.out:
        files = [str(p) for p in report_mod.write_scan_report(args.out, scenario.name, result)]
    payload = {
        "scenario": scenario.name,
        "threshold": result.threshold,
        "bracket": [result.lo, result.hi],
        "reference": scenario.reference_threshold,
        "probes": [{"r": p.r, "signed_robustness": p.signed_robustness, "status": p.status}
                   for p in result.probes],
        "files": files,
    }
    lines = [f"threshold: {result.threshold:.3f} (reference {scenario.reference_threshold:.3f})",
             f"final bracket: [{result.lo:.4f}, {result.hi:.4f}] after {len(result.probes)} probes"]
    lines += [f"wrote {f}" for f in files]
    _emit(args, payload, lines)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    from . import report as report_mod

    rows = run_reproduce(jobs=args.jobs, solver=args.solver)
    ok = all(row.passed for row in rows)
    files = []
    if args.out:
        files = [str(p) for p in report_mod.write_reproduce_report(args.out, rows)]
    payload = {
        "ok": ok,
        "rows": [{"name": r.name, "computed": r.computed, "expected": r.expected,
                  "tolerance": r.tolerance, "passed": r.passed, "seconds": r.seconds}
                 for r in rows],
        "files": files,
    }
    lines = [f"{'row':<16} {'computed':>12} {'expected':>12} {'tol':>8}  verdict"]
    for r in rows:
        lines.append(f"{r.name:<16} {r.computed:>12.5f} {r.expected:>12.5f} "
                     f"{r.tolerance:>8g}  {'pass' if r.passed else 'FAIL'} ({r.seconds:.0f}s)")
    lines.append(f"{sum(r.passed for r in rows)}/{len(rows)} rows within tolerance")
    lines += [f"wrote {f}" for f in files]
    _emit(args, payload, lines)
    return EXIT_OK if ok else EXIT_INVALID


def cmd_witness_verify(args) -> int:
    from . import serialize

    if args.witness:
        witness = serialize.witness_from_dict(serialize.load(args.witness))
    else:
        witness = quantum_switch_witness()
    noise = uniform_noise(witness.cone)
    report = verify_witness(witness, noise=noise)
    payload = {
        "ok": report.ok,
        "sides": report.sides,
        "normalization": report.normalization,
    }
    _emit(args, payload, [str(report)])
    return EXIT_OK if report.ok else EXIT_INVALID


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    _apply_tol(args)
    handlers = {
        "validate": cmd_validate,
        "certify": cmd_certify,
        "scan": cmd_scan,
        "reproduce": cmd_reproduce,
        "witness-verify": cmd_witness_verify,
    }
    try:
        return handlers[args.command](args)
    except (json.JSONDecodeError, FileNotFoundError, KeyError) as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except InvalidBracketError as exc:
        print(f"bad bracket: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except InvalidParamError as exc:
        print(f"invalid parameter: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CausalCertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
