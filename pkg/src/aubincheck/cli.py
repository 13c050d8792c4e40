"""Command-line interface.

Subcommands: analyze (three-valued Lipschitz-like verdict), membership
(coderivative membership query), probe (numerical Aubin probe), and
derivatives (derivative bundle dump with optional finite-difference audit).

Exit codes: 0 analysis completed (including an Unknown verdict or an
Inconclusive probe); 2 input or parse error; 3 precondition failure at the
reference point (infeasible, not stationary, MFCQ violated, out of domain);
4 dimensions exceed the probe capability.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .calculus import derivative_bundle
from .conditions import MODE_EXTENDED, MODE_STRICT, coderivative_membership, verdict
from .errors import DomainError, InputError, PreconditionError
from .fixtures import match_fixture
from .oracle import aubin_probe, write_samples_csv
from .problemfile import ProblemFile, load_problem
from .report import (
    analysis_document,
    derivatives_document,
    dumps_canonical,
    render_derivatives_text,
    render_text,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PRECONDITION = 3
EXIT_CAPABILITY = 4


def _parse_overrides(pairs) -> dict:
    overrides = {}
    for item in pairs or ():
        if "=" not in item:
            raise InputError(f"tolerance override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        try:
            overrides[key.strip()] = float(value)
        except ValueError:
            raise InputError(f"tolerance override {item!r} has a non-numeric value") from None
    return overrides


def _parse_vector(text: str, name: str) -> list:
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError:
        raise InputError(f"--{name} must be a comma-separated list of reals") from None


def _load(args) -> ProblemFile:
    return load_problem(args.file, _parse_overrides(getattr(args, "tol_overrides", None)))


def _emit(args, doc, text_renderer=render_text) -> None:
    if args.json:
        sys.stdout.write(dumps_canonical(doc))
    else:
        sys.stdout.write(text_renderer(doc))


def _fixture_warnings(pf: ProblemFile) -> list:
    fixture = match_fixture(pf.spec, pf.point)
    return list(fixture.notes) if fixture is not None else []


def cmd_analyze(args) -> int:
    pf = _load(args)
    bundle = derivative_bundle(pf.spec, pf.point)
    v = verdict(pf.spec, pf.point, pf.tolerances, args.mode)
    doc = analysis_document(
        "analyze", pf, pf.tolerances, bundle, v, extra_warnings=_fixture_warnings(pf)
    )
    _emit(args, doc)
    return EXIT_OK


def cmd_membership(args) -> int:
    pf = _load(args)
    xprime = _parse_vector(args.xprime, "xprime")
    wprime = _parse_vector(args.wprime, "wprime")
    if len(xprime) != pf.spec.n or len(wprime) != pf.spec.d:
        raise InputError(
            f"query dimensions ({len(xprime)}, {len(wprime)}) do not match the "
            f"problem ({pf.spec.n}, {pf.spec.d})"
        )
    bundle = derivative_bundle(pf.spec, pf.point)
    v = verdict(pf.spec, pf.point, pf.tolerances, args.mode)
    lam = v.multiplier.lam if v.multiplier is not None else 0.0
    result = coderivative_membership(bundle, v.case, lam, xprime, wprime, pf.tolerances)
    entry = {
        "x_prime": xprime,
        "w_prime": wprime,
        "answer": result.answer,
        "witness_v": list(result.witness_v) if result.witness_v is not None else None,
        "witness_gamma": result.witness_gamma,
        "branch": result.branch,
        "notes": list(result.notes),
    }
    doc = analysis_document(
        "membership",
        pf,
        pf.tolerances,
        bundle,
        v,
        extra_warnings=_fixture_warnings(pf),
        membership=[entry],
    )
    _emit(args, doc)
    return EXIT_OK


def cmd_probe(args) -> int:
    pf = _load(args)
    if pf.spec.n > 2 or pf.spec.d > 2:
        print(
            f"error: probe supports n <= 2 and d <= 2, problem has "
            f"n={pf.spec.n}, d={pf.spec.d}",
            file=sys.stderr,
        )
        return EXIT_CAPABILITY
    grid, probe_cfg = pf.grid, pf.probe
    if args.box_radius is not None:
        grid = dataclasses.replace(grid, r_x=args.box_radius)
    if args.grid_points is not None:
        grid = dataclasses.replace(grid, points_per_axis=args.grid_points)
    for field_name, value in (
        ("delta0", args.delta0),
        ("samples", args.samples),
        ("seed", args.seed),
        ("levels", args.levels),
    ):
        if value is not None:
            probe_cfg = dataclasses.replace(probe_cfg, **{field_name: value})

    bundle = derivative_bundle(pf.spec, pf.point)
    v = verdict(pf.spec, pf.point, pf.tolerances, MODE_EXTENDED)
    report = aubin_probe(
        pf.spec, pf.point, probe_cfg, grid, pf.tolerances, keep_samples=args.csv is not None
    )
    if args.csv is not None:
        write_samples_csv(report.samples, args.csv, pf.spec.n, pf.spec.d)
    doc = analysis_document(
        "probe",
        pf,
        pf.tolerances,
        bundle,
        v,
        extra_warnings=_fixture_warnings(pf),
        probe=report,
    )
    _emit(args, doc)
    return EXIT_OK


def cmd_derivatives(args) -> int:
    pf = _load(args)
    bundle = derivative_bundle(pf.spec, pf.point)
    audit = None
    if args.fd_audit is not None:
        from .calculus import finite_difference_audit

        audit = finite_difference_audit(pf.spec, pf.point, args.fd_audit)
    doc = derivatives_document(pf, pf.tolerances, bundle, audit)
    _emit(args, doc, render_derivatives_text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aubincheck",
        description=(
            "Decide, certify, or refute the local Lipschitz-like (Aubin) property "
            "of the stationary point set map of a parametric program at a "
            "reference point."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mode=True):
        p.add_argument("file", help="problem file (sectioned key-value text)")
        p.add_argument("--json", action="store_true", help="emit the JSON report")
        p.add_argument(
            "--tol-overrides",
            nargs="*",
            metavar="KEY=VALUE",
            help="tolerance overrides, e.g. tau_rank=1e-8",
        )
        if mode:
            p.add_argument(
                "--mode",
                choices=[MODE_STRICT, MODE_EXTENDED],
                default=MODE_EXTENDED,
                help="strict confines No verdicts to the literal theorem statements",
            )

    p = sub.add_parser("analyze", help="three-valued Lipschitz-like verdict")
    common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("membership", help="coderivative membership query")
    common(p)
    p.add_argument("--xprime", required=True, help="comma-separated x' query vector")
    p.add_argument("--wprime", required=True, help="comma-separated w' query vector")
    p.set_defaults(func=cmd_membership)

    p = sub.add_parser("probe", help="numerical Aubin probe (evidence, not judgment)")
    common(p, mode=False)
    p.add_argument("--csv", help="dump sampled stationary sets to this CSV file")
    p.add_argument("--delta0", type=float, help="coarsest parameter radius")
    p.add_argument("--samples", type=int, help="parameter draws per radius level")
    p.add_argument("--seed", type=int, help="deterministic sampling seed")
    p.add_argument("--levels", type=int, help="number of radius levels")
    p.add_argument("--box-radius", type=float, help="stationary-set box radius around x")
    p.add_argument("--grid-points", type=int, help="grid points per axis (odd)")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("derivatives", help="derivative bundle dump")
    common(p, mode=False)
    p.add_argument(
        "--fd-audit",
        type=float,
        metavar="H",
        help="audit the bundle against central differences with step H",
    )
    p.set_defaults(func=cmd_derivatives)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (PreconditionError, DomainError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
