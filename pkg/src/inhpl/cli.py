"""``inhpl`` command line: eval, synth, fit, validate, plot-data.

Exit codes: 0 success, 1 domain or validation error, 2 usage error.

Every run prints its fully resolved command line to stderr as
``# effective-config: inhpl ...``. Running that line again reproduces the
output byte for byte. ``INHPL_SEED`` overrides the default seed; the
effective line always spells the seed out.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import shlex
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

from inhpl.errors import ConfigError, PathLossError, RankDeficiencyError
from inhpl.estimators import fit_abg, fit_ci, fit_fi
from inhpl.measurements import (
    BandSet,
    dump_csv,
    group_label,
    load_column_map,
    load_csv,
    partition,
)
from inhpl.models import (
    ABGParams,
    CIParams,
    Condition,
    FIParams,
    NlosOption,
    ThreeGppInhSpec,
    eval_abg,
    eval_ci,
    eval_fi,
)
from inhpl.report import (
    SynthPolicy,
    ThreeGppSource,
    abg_validation,
    emit_plot_data,
    fi_validation,
    parse_measured_params,
    render_report,
)
from inhpl.synthgen import DistanceGrid, SynthConfig, generate_samples, metadata_header

log = logging.getLogger("inhpl")

SEED_ENV = "INHPL_SEED"


class UsageError(Exception):
    """Bad flag combination detected after argparse; maps to exit code 2."""


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _parse_sf(text: str) -> float | None:
    if text == "off":
        return None
    kind, _, value = text.partition(":")
    if kind != "gaussian" or not value:
        raise argparse.ArgumentTypeError(f"shadow fading must be 'off' or 'gaussian:SIGMA', got {text!r}")
    try:
        sigma = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sigma in {text!r}") from None
    if not sigma >= 0:
        raise argparse.ArgumentTypeError("shadow fading sigma must be >= 0")
    return sigma


def _grid_arg(text: str) -> DistanceGrid:
    try:
        return DistanceGrid.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _write_atomic(path: str | None, text: str) -> None:
    """Write the whole output at once, so a failure leaves no partial file."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def _load_samples(args):
    column_map = load_column_map(args.column_map) if getattr(args, "column_map", None) else None
    with open(args.input, encoding="utf-8") as fh:
        return load_csv(fh, provenance=args.input, column_map=column_map)


# --- model flags shared by eval and synth --------------------------------------

MODEL_CHOICES = ("fi", "abg", "ci", "3gpp-inh-los", "3gpp-inh-nlos")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", required=True, choices=MODEL_CHOICES)
    p.add_argument("--intercept", type=float, help="FI intercept in dB")
    p.add_argument("--exponent", type=float, help="FI/ABG distance exponent, or CI path loss exponent")
    p.add_argument("--offset", type=float, help="ABG offset in dB")
    p.add_argument("--freq-exponent", type=float, help="ABG frequency exponent")
    p.add_argument("--option", choices=("1", "2"), default="1", help="3GPP NLOS option")
    p.add_argument("--no-floor", action="store_true", help="skip the LOS floor of the 3GPP NLOS model")
    p.add_argument("--permissive", action="store_true", help="evaluate 3GPP outside its validity range with a warning")


def _need(args, *names: str):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise UsageError(f"--model {args.model} needs " + ", ".join(f"--{n}" for n in missing))
    return [getattr(args, n.replace("-", "_")) for n in names]


def _build_model(args):
    if args.model == "fi":
        intercept, exponent = _need(args, "intercept", "exponent")
        return FIParams(intercept, exponent)
    if args.model == "abg":
        exponent, offset, gamma = _need(args, "exponent", "offset", "freq-exponent")
        return ABGParams(exponent, offset, gamma)
    if args.model == "ci":
        (exponent,) = _need(args, "exponent")
        return CIParams(exponent)
    if args.model == "3gpp-inh-los":
        return ThreeGppInhSpec(Condition.LOS)
    return ThreeGppInhSpec(Condition.NLOS, NlosOption.parse(args.option), not args.no_floor)


# --- subcommands ---------------------------------------------------------------


def cmd_eval(args) -> int:
    model = _build_model(args)
    if args.frequency is None and not isinstance(model, FIParams):
        raise UsageError(f"--model {args.model} needs -f/--frequency")
    if isinstance(model, ThreeGppInhSpec):
        value = model.evaluate(args.distance, args.frequency, strict=not args.permissive)
    elif isinstance(model, FIParams):
        value = eval_fi(model, args.distance)
    elif isinstance(model, ABGParams):
        value = eval_abg(model, args.distance, args.frequency)
    else:
        value = eval_ci(model, args.distance, args.frequency)
    print(format(value, ".10g"))
    return 0


def cmd_synth(args) -> int:
    model = _build_model(args)
    grid = args.grid
    if args.count is not None:
        grid = DistanceGrid(grid.d_min_m, grid.d_max_m, args.count, grid.spacing)
    freqs = tuple(args.frequency or ())
    if not freqs and not isinstance(model, FIParams):
        raise UsageError(f"--model {args.model} needs -f/--frequency")
    config = SynthConfig(
        model=model,
        frequencies_ghz=freqs or None,
        grid=grid,
        shadow_fading_db=args.sf,
        seed=args.seed,
        replicates_per_distance=args.replicates,
        condition=Condition.parse(args.condition) if args.condition else None,
        strict=not args.permissive,
    )
    samples = generate_samples(config)
    buf = io.StringIO()
    dump_csv(samples, buf, header_comments=[metadata_header(config)])
    _write_atomic(args.out, buf.getvalue())
    return 0


FITTERS = {"fi": fit_fi, "abg": fit_abg, "ci": fit_ci}
DEFAULT_GROUPING = {"fi": "condition,frequency", "abg": "condition", "ci": "condition,frequency"}


def _grouping(text: str) -> tuple[bool, bool]:
    parts = {p.strip() for p in text.split(",") if p.strip() and p.strip() != "none"}
    unknown = parts - {"condition", "frequency"}
    if unknown:
        raise UsageError(f"--group-by accepts condition, frequency or none, got {sorted(unknown)}")
    return "condition" in parts, "frequency" in parts


def cmd_fit(args) -> int:
    sample_set = _load_samples(args)
    by_condition, by_frequency = _grouping(args.group_by)
    band = BandSet.parse(args.band) if args.band else None
    groups = partition(sample_set, by_condition, by_frequency, band)
    if not groups:
        raise PathLossError(f"{args.input}: no samples to fit")
    fitter = FITTERS[args.model]
    results = []
    for key, samples in groups.items():
        params, diag = fitter(samples)
        entry = {"group": group_label(key), "model": args.model}
        for part in key:
            if isinstance(part, Condition):
                entry["condition"] = part.value
            else:
                entry["frequency_ghz"] = part
        entry["params"] = asdict(params)
        entry["diagnostics"] = asdict(diag)
        results.append(entry)
    _write_atomic(args.out, json.dumps(results, indent=2, sort_keys=True) + "\n")
    return 0


def cmd_validate(args) -> int:
    if (args.input is None) == (args.measured_params is None):
        raise UsageError("give exactly one of --in or --measured-params")
    source = args.threegpp_source or ("fit" if args.mode == "fi" else "direct")
    policy = SynthPolicy(
        source=ThreeGppSource.parse(source),
        los_grid=args.grid,
        nlos_grid=args.nlos_grid,
        shadow_fading_db=args.sf,
        seed=args.seed,
        apply_los_floor=not args.no_floor,
        sigma_mode=args.threegpp_sigma,
    )
    if args.measured_params is not None:
        with open(args.measured_params, encoding="utf-8") as fh:
            model, measured = parse_measured_params(json.load(fh))
        if model != args.mode:
            raise UsageError(f"--measured-params holds {model} parameters but --mode is {args.mode}")
    else:
        measured = _load_samples(args)
    if args.mode == "fi":
        rows = fi_validation(measured, policy)
    else:
        if not args.band:
            raise UsageError("--mode abg needs --band")
        rows = abg_validation(measured, BandSet.parse(args.band), policy.source, policy)
    text = render_report(rows, args.format, rounding=args.rounding.replace("-", "_"), model=args.mode)
    _write_atomic(args.out, text)
    return 0


PLOT_MODELS = ("3gpp-los", "3gpp-nlos-opt1", "3gpp-nlos-opt2", "fi-fit", "abg-fit", "ci-fit")


def _fit_or_skip(fitter, group, label):
    """Fit one plot group; an unfittable group is logged and left out of the export."""
    try:
        return fitter(group)[0]
    except PathLossError as exc:
        log.warning("skipping %s curve: %s", label, exc)
        return None


def cmd_plot_data(args) -> int:
    sample_set = _load_samples(args)
    freqs = list(args.frequency)
    band = BandSet("plot", tuple(freqs))
    selected = [s for s in sample_set if band.contains(s.frequency_ghz)]
    names = [m.strip() for m in args.models.split(",") if m.strip()]
    unknown = sorted(set(names) - set(PLOT_MODELS))
    if unknown:
        raise UsageError(f"--models accepts {', '.join(PLOT_MODELS)}; unknown {unknown}")

    strict = not args.permissive
    curves = []
    for name in names:
        if name.startswith("3gpp"):
            spec = {
                "3gpp-los": ThreeGppInhSpec(Condition.LOS),
                "3gpp-nlos-opt1": ThreeGppInhSpec(Condition.NLOS, NlosOption.OPTION1, not args.no_floor),
                "3gpp-nlos-opt2": ThreeGppInhSpec(Condition.NLOS, NlosOption.OPTION2, not args.no_floor),
            }[name]
            for f in freqs:
                curves.append((f"{name}@{f:g}GHz", lambda d, spec=spec, f=f: spec.evaluate(d, f, strict)))
        elif name == "abg-fit":
            for (cond,), group in partition(selected, by_condition=True).items():
                params = _fit_or_skip(fit_abg, group, f"abg-fit {cond.value}")
                if params is None:
                    continue
                for f in freqs:
                    curves.append((f"abg-fit-{cond.value}@{f:g}GHz", lambda d, p=params, f=f: eval_abg(p, d, f)))
        else:
            fitter = fit_fi if name == "fi-fit" else fit_ci
            for (f, cond), group in partition(selected, by_condition=True, by_frequency=True).items():
                params = _fit_or_skip(fitter, group, f"{name} {group_label((f, cond))}")
                if params is None:
                    continue
                if isinstance(params, FIParams):
                    curve = lambda d, p=params: eval_fi(p, d)  # noqa: E731
                else:
                    curve = lambda d, p=params, f=f: eval_ci(p, d, f)  # noqa: E731
                curves.append((f"{name}-{cond.value}@{f:g}GHz", curve))

    bundle = emit_plot_data(selected, curves, args.grid)
    files = bundle.csv_files()
    out = Path(args.out)
    for name, text in files.items():
        _write_atomic(str(out / name), text)
    return 0


# --- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="inhpl", description="Indoor-hotspot path loss modeling and 3GPP InH validation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a path loss model at one point")
    _add_model_flags(p)
    p.add_argument("-d", "--distance", type=float, required=True, help="3D distance in m")
    p.add_argument("-f", "--frequency", type=float, help="frequency in GHz")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate synthetic samples as CSV")
    _add_model_flags(p)
    p.add_argument("-f", "--frequency", type=float, action="append", help="frequency in GHz; repeat for a pooled batch")
    p.add_argument("--grid", type=_grid_arg, default=DistanceGrid(1.0, 100.0, 100, "log"), help="spacing:dmin:dmax:count")
    p.add_argument("-n", "--count", type=int, help="override the grid point count")
    p.add_argument("--replicates", type=int, default=1)
    p.add_argument("--sf", type=_parse_sf, default=None, help="off or gaussian:SIGMA_DB")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--condition", choices=("LOS", "NLOS"), help="label for FI/ABG/CI sources")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit FI, ABG or CI parameters to a CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--model", choices=tuple(FITTERS), required=True)
    p.add_argument("--group-by", default=None, help="comma list of condition,frequency (or none)")
    p.add_argument("--band", help="7-24, 0.5-100 or a comma-separated frequency list")
    p.add_argument("--column-map", help="JSON object renaming source CSV columns")
    p.add_argument("--out", help="output JSON (default stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("validate", help="compare measured fits with the 3GPP InH model")
    p.add_argument("--in", dest="input")
    p.add_argument("--measured-params", help="JSON of published measured parameter sets")
    p.add_argument("--mode", choices=("fi", "abg"), required=True)
    p.add_argument("--band", help="7-24, 0.5-100 or a comma-separated frequency list (abg mode)")
    p.add_argument("--threegpp-source", choices=("fit", "direct"))
    p.add_argument("--grid", type=_grid_arg, default=DistanceGrid(1.0, 100.0, 100, "log"), help="LOS synthesis grid")
    p.add_argument("--nlos-grid", type=_grid_arg, default=DistanceGrid(4.0, 100.0, 100, "log"), help="NLOS synthesis grid")
    p.add_argument("--sf", type=_parse_sf, default=None, help="shadow fading on the synthesized 3GPP side")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-floor", action="store_true")
    p.add_argument("--threegpp-sigma", choices=("nominal", "fitted"), default="nominal")
    p.add_argument("--format", choices=("json", "csv", "markdown"), default="json")
    p.add_argument("--rounding", choices=("half-away", "truncate"), default="half-away")
    p.add_argument("--column-map")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot-data", help="export scatter and model-curve series")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--models", default="fi-fit,3gpp-los,3gpp-nlos-opt1")
    p.add_argument("-f", "--frequency", type=float, action="append", required=True)
    p.add_argument("--grid", type=_grid_arg, default=DistanceGrid(1.0, 100.0, 100, "log"))
    p.add_argument("--no-floor", action="store_true")
    p.add_argument("--permissive", action="store_true")
    p.add_argument("--column-map")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_plot_data)
    return parser


def _resolve(args) -> None:
    if hasattr(args, "seed") and args.seed is None:
        args.seed = _default_seed()
    if getattr(args, "group_by", "unset") is None:
        args.group_by = DEFAULT_GROUPING[args.model]


def effective_config(parser: argparse.ArgumentParser, args) -> str:
    """Canonical command line equivalent to the resolved ``args``."""
    subparser = next(
        a for a in parser._subparsers._group_actions if isinstance(a, argparse._SubParsersAction)
    ).choices[args.command]
    words = ["inhpl", args.command]
    for action in subparser._actions:
        if isinstance(action, argparse._HelpAction) or not action.option_strings:
            continue
        flag = max(action.option_strings, key=len)
        value = getattr(args, action.dest, None)
        if isinstance(action, argparse._StoreTrueAction):
            if value:
                words.append(flag)
        elif value is None:
            if action.type is _parse_sf:
                words += [flag, "off"]
        elif isinstance(action, argparse._AppendAction):
            for item in value:
                words += [flag, repr(item) if isinstance(item, float) else str(item)]
        elif action.type is _parse_sf:
            words += [flag, f"gaussian:{value!r}"]
        elif isinstance(value, float):
            words += [flag, repr(value)]
        else:
            words += [flag, str(value)]
    return shlex.join(words)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _resolve(args)
        print("# effective-config: " + effective_config(parser, args), file=sys.stderr)
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"inhpl: error: {exc}", file=sys.stderr)
        return 2
    except RankDeficiencyError as exc:
        print(f"inhpl: error: {exc} [collapsed regressor: {exc.regressor}]", file=sys.stderr)
        return 1
    except (PathLossError, ValueError, OSError) as exc:
        print(f"inhpl: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
