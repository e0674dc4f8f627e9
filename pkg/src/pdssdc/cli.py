"""Command-line entry point: ``pdssdc <subcommand> ...``.

Exit status is 0 on success, 1 when a required verification check fails
and 2 for usage or input errors.  Output files land in ``--out`` /
``--out-dir`` when given, otherwise in ``$PDSSDC_OUT_DIR`` or the current
directory, and are always written to a temporary name first.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import construction, fixtures, report, simulator
from .design import CodeSpec
from .errors import NotSingleSymbolDecodableError, SpecFormatError, UnsupportedParametersError
from .verification import SignalSet, rate_upper_bound, verify_all

OUT_DIR_ENV = "PDSSDC_OUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

REQUIREMENTS = {
    "ssd": lambda r: r["is_ssd"],
    "pdssdc": lambda r: r["is_pdssdc"],
    "unitary": lambda r: r["is_unitary"],
    "s_pdssdc": lambda r: r["is_pdssdc"] and r["is_semi_orthogonal"],
    "row_monomial": lambda r: r["row_monomial"],
    "lemma3": lambda r: r["lemma3"],
    "rank_bound": lambda r: r["rank_bound"],
}


class UsageError(Exception):
    pass


def out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV) or ".")


def _resolve(path: str | None, default_name: str) -> Path:
    return Path(path) if path else out_dir() / default_name


def write_atomic(path: Path, text: str | bytes) -> None:
    """Write through a temporary sibling and rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = text.encode() if isinstance(text, str) else text
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return value


def _int_range(text: str) -> list[int]:
    """``"4"``, ``"4:12"`` (inclusive) or ``"4,6,8"``."""
    try:
        if ":" in text:
            lo, hi = (int(p) for p in text.split(":"))
            values = list(range(lo, hi + 1))
        else:
            values = [int(p) for p in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"range {text!r} must be nonempty and positive")
    return values


def _snr_grid(text: str) -> tuple[float, ...]:
    """``"start:stop:step"`` (stop inclusive) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(p) for p in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(round((stop - start) / step)) + 1
            grid = tuple(start + i * step for i in range(n))
        else:
            grid = tuple(float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR grid {text!r}") from None
    if not grid:
        raise argparse.ArgumentTypeError("empty SNR grid")
    return grid


# -- subcommands ----------------------------------------------------------------

def build_spec(N: int, K: int, family: str) -> CodeSpec:
    if family == "rs_pdssdc":
        if N < 4:
            raise UsageError("use dostbc for N < 4 (the precoded construction needs N >= 4)")
        return construction.construct_rspdssdc(N, K)[1]
    return construction.construct_dostbc(N, K)[1]


def cmd_construct(args) -> int:
    spec = build_spec(args.n, args.k, args.family)
    path = _resolve(args.out, f"{args.family}_N{args.n}_K{args.k}.json")
    write_atomic(path, spec.to_json())
    bound = rate_upper_bound(spec.N, spec.K) if spec.K >= 2 else None
    print(spec.design())
    print(f"N={spec.N} K={spec.K} T={spec.T} rate={spec.rate}"
          + (f" bound={bound} achieved={'yes' if spec.rate == bound else 'no'}" if bound is not None else ""))
    print(f"wrote {path}")
    return EXIT_OK


def load_spec(path: str) -> CodeSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return CodeSpec.from_json(text)


def cmd_verify(args) -> int:
    spec = load_spec(args.spec)
    result = verify_all(spec, samples=args.samples, seed=args.seed)
    failed = [name for name in args.require if not REQUIREMENTS[name](result)]
    result["required"] = list(args.require)
    result["required_failed"] = failed
    sys.stdout.write(report.format_verify_report(result))
    if args.json:
        write_atomic(Path(args.json), json.dumps(result, indent=2, default=float) + "\n")
    if failed:
        print(f"required checks failed: {', '.join(failed)}")
        return EXIT_FAIL
    return EXIT_OK


def cmd_rate_bound(args) -> int:
    if args.k < 2:
        raise UsageError("the rate bound needs at least two relays")
    print(rate_upper_bound(args.n, args.k))
    return EXIT_OK


RATE_COLUMNS = ("N", "K", "T_rspdssdc", "T_dostbc", "rate_rspdssdc", "rate_dostbc", "bound", "achieved")


def rate_table_csv(n_values, k_values) -> str:
    lines = [",".join(RATE_COLUMNS)]
    for N in n_values:
        for K in k_values:
            row = construction.rate_table_row(N, K)
            row["achieved"] = "yes" if row["achieved"] else "no"
            lines.append(",".join(str(row[c]) for c in RATE_COLUMNS))
    return "\n".join(lines) + "\n"


def cmd_rate_table(args) -> int:
    if min(args.k) < 2:
        raise UsageError("the rate table needs K >= 2")
    text = rate_table_csv(args.n, args.k)
    if args.out:
        write_atomic(Path(args.out), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _sim_settings(args) -> dict:
    settings = {
        "spec": args.spec, "family": args.family, "N": args.n, "K": args.k,
        "constellation": args.constellation, "rotation_deg": args.rotation,
        "snr_grid_db": args.snr, "trials": args.trials, "seed": args.seed,
        "decoder": args.decoder, "relay_factor": args.relay_factor, "label": args.label,
        "target_errors": args.target_errors, "min_trials": args.min_trials,
    }
    if args.config:
        try:
            overrides = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot load config {args.config}: {exc}") from None
        unknown = set(overrides) - set(settings)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        settings.update(overrides)
    if settings["trials"] is None or int(settings["trials"]) < 1:
        raise UsageError("trials must be at least 1")
    return settings


def sim_config(settings: dict) -> simulator.SimConfig:
    if settings["spec"]:
        spec = load_spec(settings["spec"])
    else:
        spec = build_spec(int(settings["N"]), int(settings["K"]), settings["family"])
    const = SignalSet.by_name(settings["constellation"], settings["rotation_deg"])
    return simulator.SimConfig(
        spec, const, tuple(settings["snr_grid_db"]), int(settings["trials"]), int(settings["seed"]),
        settings["decoder"].replace("-", "_"), float(settings["relay_factor"]),
        label=settings["label"] or f"{spec.family}_{const.label.replace(' ', '_')}",
        target_errors=int(settings["target_errors"]), min_trials=int(settings["min_trials"]),
    )


def _rates_line(spec: CodeSpec, const: SignalSet) -> str:
    r = simulator.bit_rates(spec, const)
    return (f"bit rate: {r['both_phases']:.4g} b/cu over both phases, "
            f"{r['second_phase']:.4g} b/cu over the relay phase")


def _write_extras(args, curves) -> None:
    if args.plot:
        tmp = Path(args.plot)
        fd, name = tempfile.mkstemp(dir=tmp.parent if str(tmp.parent) else ".", suffix=".png")
        os.close(fd)
        try:
            report.plot_curves(curves, name)
            os.replace(name, tmp)
        finally:
            if os.path.exists(name):
                os.unlink(name)
    if args.plot_data:
        write_atomic(Path(args.plot_data), simulator.plot_data(curves))


def _slope(value: float) -> str:
    return "n/a" if value != value else f"{value:.3f}"


def cmd_simulate(args) -> int:
    workers = args.workers or 1
    if args.fig3:
        kwargs = {"snr_grid_db": args.snr} if args.snr else {}
        result = simulator.run_fig3(args.trials or simulator.FIG3_TRIALS, args.seed or 0, workers, **kwargs)
        configs = simulator.fig3_configs()
        base = Path(args.out) if args.out else out_dir() / "fig3.csv"
        for curve in result.curves:
            write_atomic(base.with_name(f"{base.stem}_{curve.label}{base.suffix}"), simulator.curve_csv(curve))
        write_atomic(base, simulator.curves_csv(result.curves))
        for cfg, curve in zip(configs, result.curves):
            print(f"{curve.label}: fitted slope {_slope(curve.fitted_slope)}; {_rates_line(cfg.spec, cfg.constellation)}")
        print(f"matched-rate slopes {result.parallel_slopes[0]:.3f} vs {result.parallel_slopes[1]:.3f} "
              f"(relative gap {result.slope_gap:.3f})")
        print(f"rotated vs unrotated slopes {result.rotation_slopes[0]:.3f} vs {result.rotation_slopes[1]:.3f} "
              f"(gain {result.rotation_gain:.3f})")
        print(f"wrote {base}")
        _write_extras(args, result.curves)
        return EXIT_OK
    settings = _sim_settings(args)
    cfg = sim_config(settings)
    curve = simulator.run_ser(cfg, workers)
    path = _resolve(args.out, "ser.csv")
    write_atomic(path, simulator.curve_csv(curve))
    print(f"{curve.label}: fitted slope {_slope(curve.fitted_slope)}; {_rates_line(cfg.spec, cfg.constellation)}")
    print(f"wrote {path}")
    _write_extras(args, [curve])
    return EXIT_OK


def cmd_fixtures(args) -> int:
    target = Path(args.out_dir) if args.out_dir else out_dir()
    for name, spec in fixtures.golden_specs().items():
        path = target / f"{name}.json"
        write_atomic(path, spec.to_json())
        print(f"wrote {path}")
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdssdc", description="Precoded distributed single-symbol decodable codes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build a code and write it as JSON")
    p.add_argument("--n", type=_positive_int, required=True, help="number of symbols")
    p.add_argument("--k", type=_positive_int, required=True, help="number of relays")
    p.add_argument("--family", choices=("rs_pdssdc", "dostbc"), default="rs_pdssdc")
    p.add_argument("--out", help="output path (default: <out dir>/<family>_N<n>_K<k>.json)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", help="run every structural check on a JSON code")
    p.add_argument("spec", help="code JSON file")
    p.add_argument("--samples", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", help="also write the report as JSON")
    p.add_argument("--require", action="append", default=[], choices=sorted(REQUIREMENTS),
                   help="exit 1 unless this class holds (repeatable)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("rate-bound", help="print the symbol-rate upper bound")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--k", type=_positive_int, required=True)
    p.set_defaults(func=cmd_rate_bound)

    p = sub.add_parser("rate-table", help="CSV of achieved and minimum T over ranges")
    p.add_argument("--n", type=_int_range, default=_int_range("4:12"), help="e.g. 4:12 or 4,5,8")
    p.add_argument("--k", type=_int_range, default=_int_range("4:12"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_rate_table)

    p = sub.add_parser("simulate", help="Monte Carlo symbol error rate")
    p.add_argument("--fig3", action="store_true", help="run the matched-rate four-relay comparison")
    p.add_argument("--spec", help="code JSON file (otherwise built from --n/--k/--family)")
    p.add_argument("--n", type=_positive_int, default=4)
    p.add_argument("--k", type=_positive_int, default=4)
    p.add_argument("--family", choices=("rs_pdssdc", "dostbc"), default="rs_pdssdc")
    p.add_argument("--constellation", default="rqpsk", help="qpsk, rqpsk or 16qam")
    p.add_argument("--rotation", type=float, default=None, help="QPSK rotation in degrees")
    p.add_argument("--snr", type=_snr_grid, default=None, help="start:stop:step in dB, or a comma list")
    p.add_argument("--trials", type=_positive_int, default=None, help="trials per SNR point")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--decoder", choices=("per-symbol", "joint"), default="per-symbol")
    p.add_argument("--relay-factor", type=float, default=1.0, help="P2 / P1")
    p.add_argument("--target-errors", type=int, default=0,
                   help="stop a point early once this many symbol errors are seen (0: run all trials)")
    p.add_argument("--min-trials", type=int, default=0, help="never stop a point before this many trials")
    p.add_argument("--workers", type=_positive_int, default=1)
    p.add_argument("--label", default="")
    p.add_argument("--config", help="JSON file overriding the settings above")
    p.add_argument("--out", help="CSV path")
    p.add_argument("--plot", help="PNG path")
    p.add_argument("--plot-data", help="gnuplot data path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fixtures", help="write the reference codes as JSON")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_fixtures)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and not args.fig3:
        args.snr = args.snr or (0.0, 5.0, 10.0, 15.0, 20.0)
        args.trials = args.trials or 10_000
        args.seed = args.seed or 0
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (SpecFormatError, UnsupportedParametersError, NotSingleSymbolDecodableError, ValueError) as exc:
        print(f"pdssdc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
