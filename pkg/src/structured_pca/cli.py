"""
Command-line interface.

Subcommands generate data, identify models, evaluate estimates, run
Monte-Carlo sweeps, known-row sweeps and fault experiments, and list the
built-in cases.

Exit codes: 0 success, 1 runtime or numerical failure, 2 usage or
configuration error.
"""

import argparse
import json
import math
import sys
from pathlib import Path

from pydantic import ValidationError

from structured_pca import __version__
from structured_pca.config.settings import load_settings
from structured_pca.core.artifacts import (
    load_json,
    read_data,
    read_mask,
    read_matrix,
    save_json,
    write_data,
    write_flags,
    write_matrix,
)
from structured_pca.core.datagen import generate_dataset
from structured_pca.core.identify import IdentifyOptions, identify
from structured_pca.core.metrics import subspace_dependence
from structured_pca.core.models import Method
from structured_pca.core.structure import StructureMask
from structured_pca.experiments.harness import (
    ExperimentConfig,
    FaultExperimentConfig,
    KnownRowSweepConfig,
    load_config,
    run_fault_experiment,
    run_known_row_sweep,
    run_mc,
)
from structured_pca.experiments.registry import list_cases, load_model_files, registry_lookup
from structured_pca.utils.checksum import calculate_sha256, verify_checksum
from structured_pca.utils.exceptions import ConfigurationError
from structured_pca.utils.logging import get_logger, setup_logging

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _snr(value: str) -> float:
    """argparse type accepting positive reals and ``inf``."""
    try:
        snr = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from None
    if math.isnan(snr) or snr <= 0:
        raise argparse.ArgumentTypeError(f"SNR must be positive, got {value!r}")
    return snr


def _positive_int(value: str) -> int:
    """argparse type for counts that must be at least 1."""
    try:
        n = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value!r}")
    return n


def _seed(value: str) -> int:
    """argparse type for seeds: integers in [0, 2**64)."""
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2**64), got {value!r}")
    return seed


def _stem(path: str) -> Path:
    """Output path without a .csv/.json suffix."""
    p = Path(path)
    return p.with_suffix("") if p.suffix in (".csv", ".json") else p


def _fail(e: Exception, command: str) -> int:
    print(f"Error: {type(e).__name__}: {e}", file=sys.stderr)
    logger.debug(f"{command} failed", exc_info=True)
    if isinstance(e, ConfigurationError | ValidationError):
        return EXIT_USAGE
    return EXIT_FAILURE


def cmd_generate(args: argparse.Namespace) -> int:
    """Generate a noisy data set from a case or model file."""
    try:
        settings = load_settings()
        setup_logging(settings)

        if args.case:
            model, _ = registry_lookup(args.case)
            source = {"case": args.case}
        else:
            model, _ = load_model_files(Path(args.model), Path(args.mask) if args.mask else None)
            source = {"model_path": args.model}

        dataset = generate_dataset(
            model,
            args.n,
            args.snr,
            args.seed,
            coeff_law=args.coeff_law,
            per_channel=args.per_channel,
        )

        stem = _stem(args.out)
        data_path = stem.with_suffix(".csv")
        write_data(data_path, dataset.y)
        provenance = {
            **source,
            **dataset.to_dict(),
            "data_file": data_path.name,
            "checksum_sha256": calculate_sha256(data_path),
            "structured_pca_version": __version__,
        }
        save_json(stem.with_suffix(".json"), provenance)

        print(f"Data: {data_path} ({dataset.n_samples} samples x {dataset.n} variables)")
        print(f"Sigma: {dataset.sigma:.6g}")
        return EXIT_OK

    except Exception as e:
        return _fail(e, "generate")


def cmd_identify(args: argparse.Namespace) -> int:
    """Estimate a constraint matrix from a data file."""
    try:
        settings = load_settings()
        setup_logging(settings)

        method = Method(args.method)
        mask: StructureMask | None = read_mask(Path(args.mask)) if args.mask else None
        known = read_matrix(Path(args.known)) if args.known else None
        if method in (Method.SPCA, Method.CSPCA) and mask is None:
            raise ConfigurationError(f"--mask is required for {method}")
        if method is Method.PCA and args.m is None and mask is None:
            raise ConfigurationError("-m is required for pca")
        if method is Method.CPCA and (known is None or args.m is None):
            raise ConfigurationError("--known and -m are required for cpca")

        data_path = Path(args.data)
        provenance = load_json(data_path.with_suffix(".json"))
        if provenance and "checksum_sha256" in provenance:
            if not verify_checksum(data_path, provenance["checksum_sha256"]):
                print(f"Warning: {data_path} does not match its provenance checksum", file=sys.stderr)

        opts = IdentifyOptions.from_settings(
            settings,
            rank_tol_rel=args.rank_tol,
            center_data=True if args.center else None,
        )
        y = read_data(data_path)
        result = identify(method, y, m=args.m, mask=mask, a_kn=known, opts=opts)

        stem = _stem(args.out)
        write_matrix(stem.with_suffix(".csv"), result.a_hat)
        save_json(
            stem.with_suffix(".json"),
            {**result.to_dict(), "options": opts.model_dump(), "data_file": str(data_path)},
        )

        print(f"Estimate: {stem.with_suffix('.csv')} ({result.model.m}x{result.model.n})")
        if result.labels is not None:
            print("Labels: " + ",".join(lab.label for lab in result.labels))
        return EXIT_OK

    except Exception as e:
        return _fail(e, "identify")


def cmd_evaluate(args: argparse.Namespace) -> int:
    """Print the subspace dependence between a true and an estimated model."""
    try:
        settings = load_settings()
        setup_logging(settings)

        if args.case:
            true, _ = registry_lookup(args.case)
            a0 = true.a
        else:
            a0 = read_matrix(Path(args.true))
        report = subspace_dependence(a0, read_matrix(Path(args.est)), normalize_rows=args.normalize)
        print(json.dumps(report.to_dict(), indent=2))
        return EXIT_OK

    except Exception as e:
        return _fail(e, "evaluate")


def cmd_mc_sweep(args: argparse.Namespace) -> int:
    """Run a Monte-Carlo SNR sweep from a JSON config."""
    try:
        settings = load_settings()
        setup_logging(settings)

        config = load_config(Path(args.config), ExperimentConfig)
        workers = args.workers or settings.harness.workers
        out_dir = Path(args.out) if args.out else settings.harness.results_dir / Path(args.config).stem

        table = run_mc(config, workers=workers)
        paths = table.write(out_dir)

        print(f"{'method':<8} {'snr':>8} {'mean_theta':>12} {'std_theta':>12} {'best':>6} {'failed':>6}")
        for row in table.summary_rows():
            print(
                f"{row['method']:<8} {row['snr']:>8g} {row['mean_theta']:>12.6f} "
                f"{row['std_theta']:>12.6f} {row['best_count']:>6} {row['failed_runs']:>6}"
            )
        print(f"Results: {paths['summary'].parent} (theta mode: {table.theta_mode})")
        return EXIT_OK

    except Exception as e:
        return _fail(e, "mc-sweep")


def cmd_fault_detect(args: argparse.Namespace) -> int:
    """Run a fault-detection experiment from a JSON config."""
    try:
        settings = load_settings()
        setup_logging(settings)

        config = load_config(Path(args.config), FaultExperimentConfig)
        out_path = (
            Path(args.out)
            if args.out
            else settings.harness.results_dir / f"{Path(args.config).stem}_faults.json"
        )

        result = run_fault_experiment(config)
        save_json(out_path, {"config": config.echo(), **result.to_dict()})
        if args.flags:
            write_flags(Path(args.flags), result.reports)

        print(f"Injected faults: {result.n_faulty}, detected by true model: {result.oracle_count}")
        for name, count in result.detected().items():
            print(f"  {name:<12} detected {count:>4}  flagged {result.reports[name].n_flagged:>4}")
        print(f"Results: {out_path}")
        return EXIT_OK

    except Exception as e:
        return _fail(e, "fault-detect")


def cmd_known_sweep(args: argparse.Namespace) -> int:
    """Compare PCA and cPCA over a growing number of known rows."""
    try:
        settings = load_settings()
        setup_logging(settings)

        config = load_config(Path(args.config), KnownRowSweepConfig)
        workers = args.workers or settings.harness.workers
        out_dir = Path(args.out) if args.out else settings.harness.results_dir / Path(args.config).stem

        table = run_known_row_sweep(config, workers=workers)
        paths = table.write(out_dir)

        print(f"{'known':>5} {'method':<8} {'mean_theta':>12} {'error_meas':>12} {'error_true':>12}")
        for row in table.summary_rows():
            print(
                f"{row['known']:>5} {row['method']:<8} {row['mean_theta']:>12.6f} "
                f"{row['mean_error_meas']:>12.6f} {row['mean_error_true']:>12.6f}"
            )
        print(f"Results: {paths['summary']}")
        return EXIT_OK

    except Exception as e:
        return _fail(e, "known-sweep")


def cmd_list_cases(args: argparse.Namespace) -> int:
    """List built-in case studies."""
    try:
        cases = list_cases()
        if args.json:
            data = [
                {
                    "name": c.name,
                    "m": len(c.matrix),
                    "n": len(c.matrix[0]),
                    "default_runs": c.default_runs,
                    "n_samples": c.n_samples,
                    "known_rows": list(c.known_rows),
                    "description": c.description,
                }
                for c in cases
            ]
            print(json.dumps(data, indent=2))
        else:
            for c in cases:
                print(f"{c.name:<16} {len(c.matrix)}x{len(c.matrix[0])}  runs={c.default_runs:<5} {c.description}")
        return EXIT_OK

    except Exception as e:
        return _fail(e, "list-cases")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structured-pca",
        description="Constraint-matrix identification with PCA, sPCA, cPCA and CSPCA",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", help="Command to execute")

    # Generate command
    gen = subparsers.add_parser("generate", help="Generate noisy data from a true model")
    source = gen.add_mutually_exclusive_group(required=True)
    source.add_argument("--case", help="Built-in case name (see list-cases)")
    source.add_argument("--model", help="Constraint matrix CSV")
    gen.add_argument("--mask", help="Structure mask file for --model")
    gen.add_argument("--n", type=_positive_int, required=True, help="Number of samples")
    gen.add_argument("--snr", type=_snr, required=True, help="Signal-to-noise ratio, or 'inf'")
    gen.add_argument("--seed", type=_seed, default=0, help="Random seed")
    gen.add_argument(
        "--coeff-law",
        choices=["standard-normal", "uniform"],
        default="standard-normal",
        help="Distribution of the null-space coefficients",
    )
    gen.add_argument("--per-channel", action="store_true", help="Calibrate noise per channel")
    gen.add_argument("--out", required=True, help="Output path; writes <out>.csv and <out>.json")
    gen.set_defaults(func=cmd_generate)

    # Identify command
    ident = subparsers.add_parser("identify", help="Estimate a constraint matrix")
    ident.add_argument("--method", choices=[m.value for m in Method], required=True)
    ident.add_argument("--data", required=True, help="Data CSV (header v1..vn)")
    ident.add_argument("--mask", help="Structure mask file (spca, cspca)")
    ident.add_argument("--known", help="Known constraint rows CSV (cpca)")
    ident.add_argument("-m", type=_positive_int, help="Total number of constraints")
    ident.add_argument("--rank-tol", type=float, help="Override RANK_TOL_REL")
    ident.add_argument("--center", action="store_true", help="Mean-center the data")
    ident.add_argument("--out", required=True, help="Output path; writes <out>.csv and <out>.json")
    ident.set_defaults(func=cmd_identify)

    # Evaluate command
    ev = subparsers.add_parser("evaluate", help="Subspace dependence of an estimate")
    truth = ev.add_mutually_exclusive_group(required=True)
    truth.add_argument("--true", help="True constraint matrix CSV")
    truth.add_argument("--case", help="Built-in case name")
    ev.add_argument("--est", required=True, help="Estimated constraint matrix CSV")
    ev.add_argument("--normalize", action="store_true", help="Unit-normalize true rows first")
    ev.set_defaults(func=cmd_evaluate)

    # Monte-Carlo sweep command
    mc = subparsers.add_parser("mc-sweep", help="Run a Monte-Carlo SNR sweep")
    mc.add_argument("--config", required=True, help="Experiment JSON")
    mc.add_argument("--workers", type=_positive_int, help="Worker processes (default MC_WORKERS)")
    mc.add_argument("--out", help="Output directory (default RESULTS_DIR/<config name>)")
    mc.set_defaults(func=cmd_mc_sweep)

    # Fault detection command
    fd = subparsers.add_parser("fault-detect", help="Run a fault-detection experiment")
    fd.add_argument("--config", required=True, help="Fault experiment JSON")
    fd.add_argument("--out", help="Result JSON (default RESULTS_DIR/<config name>_faults.json)")
    fd.add_argument("--flags", help="Also write per-sample flags CSV")
    fd.set_defaults(func=cmd_fault_detect)

    # Known-row sweep command
    ks = subparsers.add_parser("known-sweep", help="PCA against cPCA as more rows become known")
    ks.add_argument("--config", required=True, help="Known-row sweep JSON")
    ks.add_argument("--workers", type=_positive_int, help="Worker processes (default MC_WORKERS)")
    ks.add_argument("--out", help="Output directory (default RESULTS_DIR/<config name>)")
    ks.set_defaults(func=cmd_known_sweep)

    # List cases command
    lc = subparsers.add_parser("list-cases", help="List built-in case studies")
    lc.add_argument("--json", action="store_true", help="JSON output")
    lc.set_defaults(func=cmd_list_cases)

    return parser


def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_USAGE

    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
