"""Command-line entry point: ``threatchain <subcommand> ...``.

Exit codes: 0 success, 1 model errors, 2 usage errors, 3 external-service
errors. Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import catalog, markov, montecarlo, nvd, report

EXIT_OK, EXIT_MODEL, EXIT_USAGE, EXIT_SERVICE = 0, 1, 2, 3

log = logging.getLogger("threatchain")


class UsageError(Exception):
    pass


def _load(args) -> catalog.ThreatModel:
    if args.builtin_iomt and args.model:
        raise UsageError("--model and --builtin-iomt are mutually exclusive")
    if args.builtin_iomt:
        model = catalog.builtin_iomt_model()
    elif args.model:
        try:
            data = Path(args.model).read_bytes()
        except OSError as exc:
            raise UsageError(f"cannot read model: {exc}") from None
        model, diag = catalog.load_model(data)
        _print_diagnostics(diag, quiet_warnings=True)
        diag.raise_for_errors()
        model = catalog.resolve_scores(model)
    else:
        raise UsageError("one of --model PATH or --builtin-iomt is required")
    if getattr(args, "no_override", False):
        model = model.without_override()
    return model


def _print_diagnostics(diag: catalog.ModelDiagnostics, quiet_warnings: bool = False) -> None:
    for d in diag.errors:
        print(f"error: {d.code} at {d.location}: {d.message}", file=sys.stderr)
    if not quiet_warnings:
        for d in diag.warnings:
            print(f"warning: {d.code} at {d.location}: {d.message}", file=sys.stderr)


def _emit(text: str) -> None:
    sys.stdout.write(text)


def cmd_validate(args) -> int:
    if args.builtin_iomt:
        model = catalog.builtin_iomt_model()
        diag = catalog.validate(model)
    elif args.model:
        try:
            model, diag = catalog.load_model(Path(args.model).read_bytes())
        except OSError as exc:
            raise UsageError(f"cannot read model: {exc}") from None
    else:
        raise UsageError("one of --model PATH or --builtin-iomt is required")
    _print_diagnostics(diag)
    if diag.ok:
        # scoring failures are model errors too
        model = catalog.resolve_scores(model)
        markov.build_transition_matrix(model)
    summary = {"errors": len(diag.errors), "warnings": len(diag.warnings),
               "vulnerabilities": len(model.vulnerabilities), "threats": len(model.threats)}
    if args.format == "json":
        _emit(json.dumps({"schema_version": report.SCHEMA_VERSION, **summary,
                          "diagnostics": [{"severity": s, "code": d.code, "message": d.message,
                                           "location": d.location}
                                          for s, ds in (("error", diag.errors), ("warning", diag.warnings))
                                          for d in ds]}, indent=2) + "\n")
    else:
        _emit(" ".join(f"{k}={v}" for k, v in summary.items()) + "\n")
    return EXIT_OK if diag.ok else EXIT_MODEL


def cmd_distribution(args) -> int:
    model = _load(args)
    dist = markov.attack_distribution(model)
    rows = report.report_rows(model, dist)
    meta = {"denominator": dist.denominator, "alpha": dist.alpha,
            "total_alpha": dist.total_alpha, "alpha_gap": dist.alpha_gap,
            "total_p_attack": dist.total_p_attack}
    if abs(dist.alpha_gap) > 1e-12:
        print(f"note: denominator {dist.denominator:g} leaves {dist.alpha_gap:.6e} of alpha "
              "on the S self-loop", file=sys.stderr)
    _emit(report.render(rows, args.format, row_type=report.ReportRow,
                        meta=None if args.format == "csv" else meta))
    return EXIT_OK


def cmd_matrix(args) -> int:
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    model = _load(args)
    p = markov.build_transition_matrix(model)
    if args.steps > 1:
        p = markov.n_step_matrix(p, args.steps)
    _emit(report.render_matrix(p.states, p.p, args.format))
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _load(args)
    try:
        cfg = montecarlo.SimulationConfig(trajectories=args.trajectories,
                                          max_steps=args.max_steps, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    p = markov.build_transition_matrix(model)
    emp = montecarlo.simulate(p, cfg)
    cmp = montecarlo.compare_distributions(emp, markov.attack_distribution(model))
    meta = {"trajectories": emp.trajectories, "absorbed": cmp.absorbed,
            "unabsorbed": cmp.unabsorbed, "chi_square": cmp.chi_square, "dof": cmp.dof,
            "max_abs_z": cmp.max_abs_z, "seed": cfg.seed, "max_steps": cfg.max_steps}
    if cmp.unabsorbed:
        print(f"note: {cmp.unabsorbed} trajectories hit max-steps without absorption",
              file=sys.stderr)
    _emit(report.render(list(cmp.rows), args.format, row_type=montecarlo.ThreatComparison,
                        meta=None if args.format == "csv" else meta))
    return EXIT_OK


def cmd_prioritize(args) -> int:
    model = _load(args)
    ranked = report.prioritize(model, markov.attack_distribution(model))
    _emit(report.render(ranked, args.format, row_type=report.VulnerabilityPriority))
    return EXIT_OK


def cmd_fetch_cvss(args) -> int:
    if not args.map:
        raise UsageError("fetch-cvss needs --map PATH")
    try:
        mapping = json.loads(Path(args.map).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read mapping: {exc}") from None
    if not isinstance(mapping, dict) or not all(isinstance(v, str) for v in mapping.values()):
        raise UsageError("mapping must be a JSON object of vulnerability id -> CVE id")
    model = _load(args)
    transport = nvd.FixtureTransport(args.fixtures) if args.fixtures else nvd.HttpTransport()
    hydrated = nvd.hydrate_model(model, mapping, transport)
    text = catalog.dump_model(hydrated)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        _emit(text)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "distribution": cmd_distribution,
    "matrix": cmd_matrix,
    "simulate": cmd_simulate,
    "prioritize": cmd_prioritize,
    "fetch-cvss": cmd_fetch_cvss,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", metavar="PATH", help="threat model JSON file")
    common.add_argument("--builtin-iomt", action="store_true", help="use the bundled IoMT model")
    common.add_argument("--no-override", action="store_true",
                        help="ignore denominator_override and use the model's own total weight")
    common.add_argument("--format", choices=("table", "csv", "json"), default="table")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="threatchain",
                                     description="Markov-chain attack probabilities from CVSS-weighted threat models.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a model and print diagnostics")
    sub.add_parser("distribution", parents=[common], help="per-threat attack probabilities")
    m = sub.add_parser("matrix", parents=[common], help="transition matrix P or P^n")
    m.add_argument("--steps", type=int, default=1)
    s = sub.add_parser("simulate", parents=[common], help="Monte Carlo check against the analytic result")
    s.add_argument("--trajectories", type=int, default=100_000)
    s.add_argument("--max-steps", type=int, default=10_000)
    s.add_argument("--seed", type=int, default=0)
    sub.add_parser("prioritize", parents=[common], help="rank vulnerabilities for mitigation")
    f = sub.add_parser("fetch-cvss", parents=[common], help="hydrate scores from NVD")
    f.add_argument("--map", metavar="PATH", help="JSON object: vulnerability id -> CVE id")
    f.add_argument("--fixtures", metavar="DIR", help="serve NVD responses from DIR instead of the network")
    f.add_argument("--output", "-o", metavar="PATH", help="write the updated model here (default stdout)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except catalog.InvalidModelError as exc:
        _print_diagnostics(exc.diagnostics)
        return EXIT_MODEL
    except nvd.HydrationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.cause, nvd.InvalidCveId):
            return EXIT_USAGE
        return EXIT_SERVICE
    except (catalog.ModelError, markov.ChainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except nvd.NvdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SERVICE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SERVICE


if __name__ == "__main__":
    sys.exit(main())
