"""Command-line front end for the campaign harness.

Subcommands mirror the experiment kinds; every campaign writes CSV, JSON,
and PNG figures into the output directory. A key=value config file can seed
any flag's default; explicit flags win. Exit code 0 means the campaign
completed (and, for `check`, that every property passed).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checks import run_property_checks
from .errors import SaddlekitError
from .harness import ExperimentConfig, run_campaign

_TUPLE_KEYS = {"beta", "reference", "eta_grid", "fcidump"}


def _fixture_dir() -> Path:
    return Path(__file__).resolve().parent / "fixtures"


def _default_fixtures() -> tuple[str, ...]:
    return tuple(str(p) for p in sorted(_fixture_dir().glob("h2_*.fcidump")))


def _add_common(sp, *, eta_x, seeds, tol=1e-8, maxit=10_000, eta_plane=None):
    sp.add_argument("--eta-x", type=float, default=eta_x, help="position step size")
    sp.add_argument("--eta-plane", type=float, default=eta_plane,
                    help="plane step size (default: same as --eta-x)")
    sp.add_argument("--k", type=int, default=None,
                    help="plane dimension (default: per-experiment rule)")
    sp.add_argument("--maxit", type=int, default=maxit, help="iteration cap per run")
    sp.add_argument("--tol", type=float, default=tol, help="relative residual tolerance")
    sp.add_argument("--retraction", choices=("simple", "bundle"), default="simple")
    sp.add_argument("--variant", choices=("projector", "representative"),
                    default="projector")
    sp.add_argument("--seeds", type=int, default=seeds, help="number of seeds")
    sp.add_argument("--seed-start", type=int, default=0)
    sp.add_argument("--out", default="saddlekit-out", help="output directory")
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--config", default=None, metavar="FILE",
                    help="key=value file providing flag defaults")


def _add_lep(sp, *, n, p):
    sp.add_argument("--n", type=int, default=n, help="ambient dimension")
    sp.add_argument("--p", type=int, default=p, help="subspace dimension")
    sp.add_argument("--xi", type=float, default=1.01, help="spectral ratio")
    sp.add_argument("--instance-seed", type=int, default=0,
                    help="seed of the random instance matrix")


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="saddlekit",
        description="Multi-start saddle-point campaigns on matrix manifolds.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    by_name = {}

    sp = subs.add_parser("lep-perturb", help="perturbation study around reference points")
    _add_lep(sp, n=64, p=8)
    _add_common(sp, eta_x=4.0, seeds=100)
    sp.add_argument("--manifold", choices=("grassmann", "stiefel", "both"), default="both")
    sp.add_argument("--beta", type=float, nargs="+", default=[1e-3],
                    help="perturbation levels")
    sp.add_argument("--reference", nargs="+", default=["sp-index-1", "gm"],
                    help="gm or sp-index-m")
    by_name["lep-perturb"] = sp

    sp = subs.add_parser("lep-all-index", help="undifferentiated all-index pool")
    _add_lep(sp, n=10, p=2)
    _add_common(sp, eta_x=25.0, seeds=3200)
    by_name["lep-all-index"] = sp

    sp = subs.add_parser("lep-sweep", help="step-size grid sweep")
    _add_lep(sp, n=10, p=2)
    _add_common(sp, eta_x=25.0, seeds=20, maxit=2000)
    sp.add_argument("--beta", type=float, nargs="+", default=[1e-3])
    sp.add_argument("--reference", nargs="+", default=["sp-index-1"])
    sp.add_argument("--eta-grid", type=float, nargs="+",
                    default=[float(v) for v in range(10, 31, 2)])
    by_name["lep-sweep"] = sp

    sp = subs.add_parser("rhf-scan", help="Hartree-Fock stationary-point scan")
    _add_common(sp, eta_x=0.1, seeds=200, tol=1e-10, maxit=20_000)
    sp.add_argument("--fcidump", nargs="+", default=None,
                    help="FCIDUMP paths (default: shipped H2 fixtures)")
    by_name["rhf-scan"] = sp

    sp = subs.add_parser("oracle-dump", help="write the analytic stationary-point catalog")
    _add_lep(sp, n=10, p=2)
    sp.add_argument("--out", default="saddlekit-out")
    sp.add_argument("--config", default=None, metavar="FILE")
    by_name["oracle-dump"] = sp

    sp = subs.add_parser("check", help="run the geometry property suites")
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--check-seed", type=int, default=0)
    sp.add_argument("--config", default=None, metavar="FILE")
    by_name["check"] = sp

    return parser, by_name


def read_config_file(path) -> dict:
    """Parse `key = value` lines; JSON values where possible, else strings."""
    mapping = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise SaddlekitError(f"cannot read config file {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SaddlekitError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            try:
                parsed = json.loads(value)
            except json.JSONDecodeError:
                parsed = [v.strip() for v in value.split(",")] if "," in value else value
            if key in _TUPLE_KEYS and not isinstance(parsed, list):
                parsed = [parsed]
            mapping[key] = parsed
    return mapping


def _apply_config_file(argv, by_name):
    """Peek at the subcommand and --config flag, set file values as defaults."""
    command = next((a for a in argv if not a.startswith("-")), None)
    if command not in by_name:
        return
    path = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif a.startswith("--config="):
            path = a.split("=", 1)[1]
    if path is None:
        return
    sub = by_name[command]
    known = {a.dest for a in sub._actions}
    mapping = read_config_file(path)
    unknown = sorted(set(mapping) - known)
    if unknown:
        raise SaddlekitError(
            f"unknown config keys for {command}: {', '.join(unknown)}"
        )
    sub.set_defaults(**mapping)


def _config_from_args(args) -> ExperimentConfig:
    common = dict(
        k=args.k,
        eta_x=args.eta_x,
        eta_plane=args.eta_plane,
        maxit=args.maxit,
        tol=args.tol,
        retraction=args.retraction,
        variant=args.variant,
        seed_start=args.seed_start,
        seed_count=args.seeds,
        output=args.out,
        threads=args.threads,
    )
    if args.command == "lep-perturb":
        return ExperimentConfig(
            experiment="lep-perturb",
            n=args.n, p=args.p, xi=args.xi, instance_seed=args.instance_seed,
            manifold=args.manifold,
            betas=tuple(float(b) for b in args.beta),
            references=tuple(args.reference),
            **common,
        )
    if args.command == "lep-all-index":
        return ExperimentConfig(
            experiment="lep-all-index",
            n=args.n, p=args.p, xi=args.xi, instance_seed=args.instance_seed,
            **common,
        )
    if args.command == "lep-sweep":
        return ExperimentConfig(
            experiment="lep-sweep",
            n=args.n, p=args.p, xi=args.xi, instance_seed=args.instance_seed,
            betas=tuple(float(b) for b in args.beta),
            references=tuple(args.reference),
            eta_grid=tuple(float(v) for v in args.eta_grid),
            **common,
        )
    if args.command == "rhf-scan":
        paths = args.fcidump if args.fcidump else _default_fixtures()
        return ExperimentConfig(
            experiment="rhf-scan",
            fcidump=tuple(str(p) for p in paths),
            **common,
        )
    raise SaddlekitError(f"unhandled command {args.command}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, by_name = build_parser()
    try:
        _apply_config_file(argv, by_name)
        args = parser.parse_args(argv)

        if args.command == "check":
            outcomes = run_property_checks(trials=args.trials, seed=args.check_seed)
            for oc in outcomes:
                print(oc.describe())
            failed = [oc for oc in outcomes if not oc.passed]
            print(f"{len(outcomes) - len(failed)}/{len(outcomes)} checks passed")
            return 1 if failed else 0

        if args.command == "oracle-dump":
            config = ExperimentConfig(
                experiment="oracle-dump",
                n=args.n, p=args.p, xi=args.xi, instance_seed=args.instance_seed,
                output=args.out,
            )
        else:
            config = _config_from_args(args)
        result = run_campaign(config)
        for cell, agg in result.aggregates.items():
            mean_it = agg["mean_iterations"]
            it_txt = f"{mean_it:.1f}" if mean_it is not None else "-"
            print(
                f"{cell}: {agg['successes']}/{agg['runs']} succeeded "
                f"(rate {agg['success_rate']:.3f}, mean iterations {it_txt})"
            )
        out = Path(config.output)
        print(f"wrote {out / (config.experiment + '.csv')} (+ json, figures) "
              f"in {result.elapsed_seconds:.1f}s")
        return 0
    except SaddlekitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
