"""Command line entry point.

    fracmean run CONFIG [--suite GLOB]... [--seed N] [--out DIR] [--emit-plot-data] [--jobs N]
    fracmean --list-claims

Exit status: 0 when every asserted claim passes, 1 on an assertion
failure, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .amalgam import default_r_grid, fractional_mean_norm, norm_profile
from .config import RunConfig, default_config_path
from .corpus import build_corpus
from .errors import ConfigError, FracmeanError
from .exponents import INF
from . import io
from .rearrange import lebesgue_norm, lorentz_quasinorm
from .verify import list_claims, run_suite, select_claims

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser():
    ap = argparse.ArgumentParser(prog="fracmean", description=__doc__.split("\n\n")[0])
    ap.add_argument("--list-claims", action="store_true", help="print the claim registry and exit")
    sub = ap.add_subparsers(dest="command")
    run = sub.add_parser("run", help="run a verification suite")
    run.add_argument("config", nargs="?", default=None,
                     help="JSON run configuration (default: the shipped one)")
    run.add_argument("--suite", action="append", default=None, metavar="GLOB",
                     help="claim id glob; repeatable (overrides the config)")
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--out", default=None, help="output directory")
    run.add_argument("--emit-plot-data", action="store_true",
                     help="also write r-profiles of every function")
    run.add_argument("--jobs", type=int, default=1, help="worker processes for the suite")
    run.add_argument("--quiet", action="store_true")
    return ap


def _norm_tables(config, plot):
    """Norm table rows and, when ``plot``, profile rows for every space and function."""
    table, profile = [], []
    plot_params = config.plot_params or config.params
    for spec in config.spaces:
        space = spec.build()
        grid = default_r_grid(space, config.per_decade)
        for f in build_corpus(config.corpus, space, config.seed):
            fid = f"{space.name}:{f.name}"
            for params in config.params:
                v = fractional_mean_norm(f, params, grid)
                table.append(("fractional-mean", fid, params.label, f"grid-max@{io.num(v.scale)}",
                              v.value, v.boundary_flag, f"per_decade={config.per_decade}"))
                table.append(("lorentz-weak", fid, params.label, f"alpha={io.num(params.alpha)}",
                              lorentz_quasinorm(f, params.alpha, INF), False, ""))
                table.append(("lebesgue", fid, params.label, f"alpha={io.num(params.alpha)}",
                              lebesgue_norm(f, params.alpha), False, ""))
            if plot:
                for params in plot_params:
                    for r, value in norm_profile(f, params, grid):
                        profile.append((fid, params.label, r, value))
    return table, profile


def run(config, out=None, emit_plot_data=False, jobs=1, echo=print):
    """Run a suite and write its artifacts; returns the exit status."""
    config = RunConfig.of(config)
    if not select_claims(config.suite):
        raise ConfigError(f"suite {config.suite} matches no claim")
    outdir = Path(out or config.out)
    ledger = run_suite(config, jobs=jobs)
    table, profile = _norm_tables(config, emit_plot_data)
    # writes happen here, after all workers finish
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "ledger.csv").write_text(io.ledger_csv(ledger))
    (outdir / "ledger.txt").write_text(io.ledger_text(ledger))
    (outdir / "norms.csv").write_text(io.norm_table_csv(table))
    if emit_plot_data:
        (outdir / "plot_data.csv").write_text(io.plot_data_csv(profile))
    for rep in ledger.reports:
        echo(f"{rep.verdict:10s} {rep.claim:32s} {rep.kind:9s} {len(rep.records)} cases")
    status = EXIT_PASS if ledger.passed else EXIT_FAIL
    echo(f"{'PASS' if status == EXIT_PASS else 'FAIL'}: artifacts in {outdir}")
    return status


def main(argv=None):
    args = _parser().parse_args(argv)
    if args.list_claims:
        for cid, kind, formula in list_claims():
            print(f"{cid}\t{kind}\t{formula}")
        return EXIT_PASS
    if args.command != "run":
        _parser().print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        config = RunConfig.load(args.config or default_config_path())
        changes = {}
        if args.suite:
            changes["suite"] = args.suite
        if args.seed is not None:
            changes["seed"] = args.seed
        if changes:
            config = config.replace(**changes)
        echo = (lambda *_: None) if args.quiet else print
        return run(config, args.out, args.emit_plot_data, max(1, args.jobs), echo)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FracmeanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
