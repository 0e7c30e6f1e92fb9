"""Model-vs-model comparison of measured fits against the 3GPP InH model.

Two comparisons are offered:

* :func:`fi_validation` fits the FI model per (frequency, condition) group and
  compares it with an FI fit of the 3GPP model at that frequency.
* :func:`abg_validation` pools a band of frequencies per condition, fits the
  ABG model and compares it with the 3GPP coefficients.

NLOS rows always carry both 3GPP NLOS options. LOS rows keep their single
3GPP parameter set in the ``option1`` slot.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import re
from dataclasses import asdict, dataclass, field
from decimal import ROUND_DOWN, ROUND_HALF_UP, Decimal
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Sequence

from inhpl.errors import FormatError, PathLossError
from inhpl.estimators import PathLossSample, fit_abg, fit_fi
from inhpl.measurements import BandSet, SampleSet, partition
from inhpl.models import ABGParams, Condition, FIParams, NlosOption, ThreeGppInhSpec
from inhpl.synthgen import DistanceGrid, SynthConfig, generate_samples, make_grid

FI_DELTA_FIELDS = ("distance_exponent", "sigma_sf_db")
ABG_DELTA_FIELDS = ("distance_exponent", "frequency_exponent", "sigma_sf_db")


class ThreeGppSource(str, Enum):
    FIT_OF_SYNTHETIC = "fit_of_synthetic"
    DIRECT_COEFFICIENT_READ = "direct_coefficient_read"

    @classmethod
    def parse(cls, value: str | ThreeGppSource) -> ThreeGppSource:
        if isinstance(value, ThreeGppSource):
            return value
        aliases = {
            "fit": cls.FIT_OF_SYNTHETIC,
            "direct": cls.DIRECT_COEFFICIENT_READ,
            "direct_read": cls.DIRECT_COEFFICIENT_READ,
        }
        return aliases.get(value) or cls(value)


@dataclass(frozen=True)
class SynthPolicy:
    """How the 3GPP side of a comparison is produced.

    The NLOS grid starts at 4 m by default. That keeps the LOS floor of the
    NLOS model from binding (the crossover is about 3.35 m at 6.75 GHz,
    Option1), so noiseless fits return the raw NLOS branch coefficients.

    ``sigma_mode`` controls the 3GPP-side shadow fading of a noiseless fit.
    ``"nominal"`` reports the model's 3 / 8.03 / 8.29 dB. ``"fitted"`` keeps
    the RMS residual, which is 0 for noiseless synthesis and suits
    self-consistency checks.
    """

    source: ThreeGppSource = ThreeGppSource.FIT_OF_SYNTHETIC
    los_grid: DistanceGrid = field(default_factory=lambda: DistanceGrid(1.0, 100.0, 100, "log"))
    nlos_grid: DistanceGrid = field(default_factory=lambda: DistanceGrid(4.0, 100.0, 100, "log"))
    shadow_fading_db: float | None = None
    seed: int = 0
    replicates_per_distance: int = 1
    apply_los_floor: bool = True
    sigma_mode: str = "nominal"

    def __post_init__(self):
        if self.sigma_mode not in ("nominal", "fitted"):
            raise ValueError(f"sigma_mode must be 'nominal' or 'fitted', got {self.sigma_mode!r}")

    def describe(self) -> dict:
        return {
            "source": ThreeGppSource.parse(self.source).value,
            "los_grid": str(self.los_grid),
            "nlos_grid": str(self.nlos_grid),
            "shadow_fading": "off" if self.shadow_fading_db is None else f"gaussian:{self.shadow_fading_db!r}",
            "seed": int(self.seed),
            "replicates_per_distance": int(self.replicates_per_distance),
            "apply_los_floor": self.apply_los_floor,
            "sigma_mode": self.sigma_mode,
        }


@dataclass(frozen=True)
class ComparisonRow:
    model: str  # "fi" or "abg"
    group: str
    condition: Condition
    measured: FIParams | ABGParams | None
    threegpp: tuple[FIParams | ABGParams, ...]
    deltas: tuple[dict[str, float], ...]
    threegpp_source: ThreeGppSource
    sigma_provenance: str  # "nominal", "fitted" or "coefficient"
    measured_source: str = "fit"  # "fit" of samples or published "params"
    n_measured: int | None = None
    unfittable: str | None = None
    frequency_ghz: float | None = None
    provenance: Mapping[str, object] = field(default_factory=dict)


def _delta_fields(model: str) -> tuple[str, ...]:
    return FI_DELTA_FIELDS if model == "fi" else ABG_DELTA_FIELDS


def _deltas(model: str, measured, threegpp: Sequence) -> tuple[dict[str, float], ...]:
    if measured is None:
        return ()
    return tuple(
        {name: abs(getattr(measured, name) - getattr(ref, name)) for name in _delta_fields(model)}
        for ref in threegpp
    )


def threegpp_specs(condition: Condition, apply_los_floor: bool = True) -> list[ThreeGppInhSpec]:
    if condition is Condition.LOS:
        return [ThreeGppInhSpec(Condition.LOS)]
    return [
        ThreeGppInhSpec(Condition.NLOS, option, apply_los_floor)
        for option in (NlosOption.OPTION1, NlosOption.OPTION2)
    ]


def _synth_config(spec: ThreeGppInhSpec, frequencies: Sequence[float], policy: SynthPolicy) -> SynthConfig:
    grid = policy.los_grid if spec.condition is Condition.LOS else policy.nlos_grid
    return SynthConfig(
        model=spec,
        frequencies_ghz=tuple(frequencies),
        grid=grid,
        shadow_fading_db=policy.shadow_fading_db,
        seed=policy.seed,
        replicates_per_distance=policy.replicates_per_distance,
    )


def _with_sigma(params, sigma: float):
    values = asdict(params)
    values["sigma_sf_db"] = sigma
    return type(params)(**values)


def threegpp_fi_params(
    spec: ThreeGppInhSpec, frequency_ghz: float, policy: SynthPolicy
) -> tuple[FIParams, str]:
    """3GPP-side FI parameters at one frequency and the provenance of their sigma."""
    source = ThreeGppSource.parse(policy.source)
    if source is ThreeGppSource.DIRECT_COEFFICIENT_READ:
        return spec.fi_at(frequency_ghz), "coefficient"
    params, _ = fit_fi(generate_samples(_synth_config(spec, [frequency_ghz], policy)))
    if policy.shadow_fading_db is None and policy.sigma_mode == "nominal":
        # a noiseless fit has zero residual; report the model's nominal sigma
        return _with_sigma(params, spec.nominal_sigma_sf_db), "nominal"
    return params, "fitted"


def threegpp_abg_params(
    spec: ThreeGppInhSpec, frequencies_ghz: Sequence[float], policy: SynthPolicy
) -> tuple[ABGParams, str]:
    source = ThreeGppSource.parse(policy.source)
    if source is ThreeGppSource.DIRECT_COEFFICIENT_READ:
        return spec.coefficients, "coefficient"
    params, _ = fit_abg(generate_samples(_synth_config(spec, frequencies_ghz, policy)))
    if policy.shadow_fading_db is None and policy.sigma_mode == "nominal":
        return _with_sigma(params, spec.nominal_sigma_sf_db), "nominal"
    return params, "fitted"


def _is_sample_input(measured) -> bool:
    return not isinstance(measured, Mapping)


def fi_validation(
    measured: SampleSet | Sequence[PathLossSample] | Mapping[tuple[float, Condition | str], FIParams],
    synth_policy: SynthPolicy | None = None,
) -> list[ComparisonRow]:
    """Per-(frequency, condition) FI comparison of measured data with the 3GPP InH model.

    ``measured`` is either samples to fit, or already-fitted parameters keyed by
    ``(frequency_ghz, condition)``. A group that cannot be fitted produces a row
    with ``unfittable`` set; the other rows are unaffected.
    """
    policy = synth_policy or SynthPolicy()
    source = ThreeGppSource.parse(policy.source)
    entries: list[tuple[float, Condition, FIParams | None, int | None, str | None, str]] = []
    if _is_sample_input(measured):
        for (freq, cond), group in partition(measured, by_condition=True, by_frequency=True).items():
            try:
                params, diag = fit_fi(group)
                entries.append((freq, cond, params, diag.n_samples, None, "fit"))
            except PathLossError as exc:
                entries.append((freq, cond, None, len(group), str(exc), "fit"))
    else:
        for (freq, cond), params in measured.items():
            entries.append((float(freq), Condition.parse(cond), params, None, None, "params"))
        entries.sort(key=lambda e: (e[0], e[1].value))

    rows = []
    for freq, cond, params, n, reason, measured_source in entries:
        refs, provenances = [], []
        try:
            for spec in threegpp_specs(cond, policy.apply_los_floor):
                ref, prov = threegpp_fi_params(spec, freq, policy)
                refs.append(ref)
                provenances.append(prov)
        except PathLossError as exc:
            reason = f"3GPP side: {exc}" if reason is None else reason
            refs, provenances = [], []
        rows.append(
            ComparisonRow(
                model="fi",
                group=f"{freq:g}",
                condition=cond,
                measured=params,
                threegpp=tuple(refs),
                deltas=_deltas("fi", params, refs) if reason is None else (),
                threegpp_source=source,
                sigma_provenance=provenances[0] if provenances else "n/a",
                measured_source=measured_source,
                n_measured=n,
                unfittable=reason,
                frequency_ghz=freq,
                provenance={"synth_policy": policy.describe()},
            )
        )
    return rows


def abg_validation(
    measured: SampleSet | Sequence[PathLossSample] | Mapping[Condition | str, ABGParams],
    band: BandSet,
    threegpp_mode: ThreeGppSource | str = ThreeGppSource.DIRECT_COEFFICIENT_READ,
    synth_policy: SynthPolicy | None = None,
) -> list[ComparisonRow]:
    """Per-condition ABG comparison over the pooled frequencies of ``band``.

    Raises :class:`~inhpl.errors.RankDeficiencyError` when fewer than two
    band frequencies remain for a condition after filtering.
    """
    mode = ThreeGppSource.parse(threegpp_mode)
    base = synth_policy or SynthPolicy()
    policy = dataclasses.replace(base, source=mode)
    entries: list[tuple[Condition, ABGParams, int | None, str]] = []
    if _is_sample_input(measured):
        for (cond,), group in partition(measured, by_condition=True, band=band).items():
            params, diag = fit_abg(group)
            entries.append((cond, params, diag.n_samples, "fit"))
    else:
        for cond, params in measured.items():
            entries.append((Condition.parse(cond), params, None, "params"))
        entries.sort(key=lambda e: e[0].value)

    rows = []
    for cond, params, n, measured_source in entries:
        refs, provenances = [], []
        for spec in threegpp_specs(cond, policy.apply_los_floor):
            ref, prov = threegpp_abg_params(spec, band.member_frequencies_ghz, policy)
            refs.append(ref)
            provenances.append(prov)
        rows.append(
            ComparisonRow(
                model="abg",
                group=band.name,
                condition=cond,
                measured=params,
                threegpp=tuple(refs),
                deltas=_deltas("abg", params, refs),
                threegpp_source=mode,
                sigma_provenance=provenances[0],
                measured_source=measured_source,
                n_measured=n,
                provenance={
                    "band": list(band.member_frequencies_ghz),
                    "synth_policy": policy.describe(),
                },
            )
        )
    return rows


# --- rendering ---------------------------------------------------------------


def format_number(value: float | None, rounding: str = "half_away") -> str:
    """Two-decimal cell text. ``half_away`` rounds half away from zero; ``truncate`` chops."""
    if value is None:
        return "n/a"
    if rounding == "half_away":
        quantized = Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    elif rounding == "truncate":
        # round off float noise first so 0.9699999999999998 truncates to 0.97
        quantized = Decimal(repr(round(float(value), 9))).quantize(Decimal("0.01"), rounding=ROUND_DOWN)
    else:
        raise ValueError(f"rounding must be 'half_away' or 'truncate', got {rounding!r}")
    if quantized == 0:
        quantized = abs(quantized)
    return f"{quantized:.2f}"


def _params_json(params) -> dict | None:
    return None if params is None else asdict(params)


def row_to_json(row: ComparisonRow) -> dict:
    fields = _delta_fields(row.model)
    deltas = {
        "option1": row.deltas[0] if len(row.deltas) > 0 else None,
        "option2": row.deltas[1] if len(row.deltas) > 1 else None,
    }
    return {
        "model": row.model,
        "group": row.group,
        "condition": row.condition.value,
        "frequency_ghz": row.frequency_ghz,
        "measured": _params_json(row.measured),
        "threegpp_option1": _params_json(row.threegpp[0]) if len(row.threegpp) > 0 else None,
        "threegpp_option2": _params_json(row.threegpp[1]) if len(row.threegpp) > 1 else None,
        "deltas": deltas,
        "delta_fields": list(fields),
        "provenance": {
            "threegpp_source": row.threegpp_source.value,
            "threegpp_sigma": row.sigma_provenance,
            "measured_source": row.measured_source,
            "n_measured": row.n_measured,
            **row.provenance,
        },
        "unfittable": row.unfittable,
    }


def _table_columns(model: str) -> tuple[list[str], list[str]]:
    """(csv header, markdown header) mirroring the published table layouts."""
    if model == "fi":
        csv_cols = [
            "frequency_ghz", "condition",
            "measured_intercept_db", "measured_distance_exponent", "measured_sigma_sf_db",
            "threegpp_intercept_db", "threegpp_distance_exponent", "threegpp_sigma_sf_db",
            "abs_delta_distance_exponent", "abs_delta_sigma_sf_db", "note",
        ]
        md_cols = [
            "Frequency (GHz)", "Env.",
            "Meas. intercept (dB)", "Meas. dist. exponent", "Meas. σ_SF (dB)",
            "3GPP intercept (dB)", "3GPP dist. exponent", "3GPP σ_SF (dB)",
            "\\|Δ dist. exponent\\|", "\\|Δσ_SF\\|", "Note",
        ]
    else:
        csv_cols = [
            "band", "condition",
            "measured_distance_exponent", "measured_offset_db", "measured_frequency_exponent", "measured_sigma_sf_db",
            "threegpp_distance_exponent", "threegpp_offset_db", "threegpp_frequency_exponent", "threegpp_sigma_sf_db",
            "abs_delta_distance_exponent", "abs_delta_frequency_exponent", "abs_delta_sigma_sf_db", "note",
        ]
        md_cols = [
            "Freq. (GHz)", "Env.",
            "Meas. dist. exponent", "Meas. offset (dB)", "Meas. freq. exponent", "Meas. σ_SF (dB)",
            "3GPP dist. exponent", "3GPP offset (dB)", "3GPP freq. exponent", "3GPP σ_SF (dB)",
            "\\|Δ dist. exponent\\|", "\\|Δ freq. exponent\\|", "\\|Δσ_SF\\|", "Note",
        ]
    return csv_cols, md_cols


def _param_fields(model: str) -> tuple[str, ...]:
    if model == "fi":
        return ("intercept_db", "distance_exponent", "sigma_sf_db")
    return ("distance_exponent", "offset_db", "frequency_exponent", "sigma_sf_db")


def _row_cells(row: ComparisonRow, rounding: str) -> list[str]:
    def fmt(value):
        return format_number(value, rounding)

    def joined(values):
        return "/".join(fmt(v) for v in values) if values else "n/a"

    fields = _param_fields(row.model)
    cells = [row.group, row.condition.value]
    cells += [fmt(getattr(row.measured, f)) if row.measured else "n/a" for f in fields]
    cells += [joined([getattr(p, f) for p in row.threegpp]) for f in fields]
    cells += [joined([d[f] for d in row.deltas]) for f in _delta_fields(row.model)]
    cells.append(row.unfittable or "")
    return cells


def render_report(
    rows: Sequence[ComparisonRow],
    format: str = "json",
    rounding: str = "half_away",
    model: str | None = None,
) -> str:
    """Render comparison rows as ``json``, ``csv`` or ``markdown``.

    JSON keeps raw floats. The tabular formats round to two decimals at this
    point only, and join the two NLOS options as ``x/y`` cells.
    """
    model = model or (rows[0].model if rows else "fi")
    if format == "json":
        doc = {"model": model, "rows": [row_to_json(r) for r in rows]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    csv_cols, md_cols = _table_columns(model)
    body = [_row_cells(r, rounding) for r in rows]
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(csv_cols)
        writer.writerows(body)
        return buf.getvalue()
    if format == "markdown":
        lines = ["| " + " | ".join(md_cols) + " |", "|" + "---|" * len(md_cols)]
        lines += ["| " + " | ".join(c.replace("|", "\\|") for c in cells) + " |" for cells in body]
        return "\n".join(lines) + "\n"
    raise ValueError(f"format must be json, csv or markdown, got {format!r}")


def parse_measured_params(doc: Mapping) -> tuple[str, dict]:
    """Read published parameter sets for use as the measured side.

    Returns ``(model, mapping)`` ready for :func:`fi_validation` or
    :func:`abg_validation`.
    """
    try:
        model = str(doc["model"]).lower()
        groups = doc["groups"]
        if model == "fi":
            return model, {
                (float(g["frequency_ghz"]), Condition.parse(g["condition"])): FIParams(
                    float(g["intercept_db"]), float(g["distance_exponent"]), float(g["sigma_sf_db"])
                )
                for g in groups
            }
        if model == "abg":
            return model, {
                Condition.parse(g["condition"]): ABGParams(
                    float(g["distance_exponent"]),
                    float(g["offset_db"]),
                    float(g["frequency_exponent"]),
                    float(g["sigma_sf_db"]),
                )
                for g in groups
            }
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad measured-params document: {exc}") from None
    raise FormatError(f"measured-params model must be fi or abg, got {doc.get('model')!r}")


# --- plot series ---------------------------------------------------------------


@dataclass(frozen=True)
class Series:
    name: str
    kind: str  # "scatter" or "line"
    points: tuple[tuple[float, float], ...]
    condition: str | None = None


@dataclass(frozen=True)
class PlotBundle:
    series: tuple[Series, ...]

    def to_json(self) -> str:
        doc = {
            "series": [
                {
                    "name": s.name,
                    "kind": s.kind,
                    "condition": s.condition,
                    "distance_m": [p[0] for p in s.points],
                    "path_loss_db": [p[1] for p in s.points],
                }
                for s in self.series
            ]
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def csv_files(self) -> dict[str, str]:
        """File name -> CSV text, one file per series plus ``series.json``."""
        files = {}
        for s in self.series:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["distance_m", "path_loss_db"])
            writer.writerows([repr(d), repr(pl)] for d, pl in s.points)
            files[f"{s.kind}_{_slug(s.name)}.csv"] = buf.getvalue()
        files["series.json"] = self.to_json()
        return files

    def write(self, directory: str | Path) -> list[Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in self.csv_files().items():
            path = directory / name
            path.write_text(text, encoding="utf-8")
            written.append(path)
        return written


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", name).strip("_")


def emit_plot_data(
    measured: SampleSet | Sequence[PathLossSample],
    models: Sequence[tuple[str, Callable[[float], float]]],
    grid: DistanceGrid,
) -> PlotBundle:
    """Scatter series of measured points per condition plus one line per named model.

    Distances are raw meters; a log axis is up to the plotting tool.
    """
    series = []
    for (cond,), group in partition(measured, by_condition=True).items():
        points = tuple((s.distance_m, s.path_loss_db) for s in group)
        series.append(Series(f"measured-{cond.value}", "scatter", points, cond.value))
    distances = make_grid(grid)
    for name, curve in models:
        series.append(Series(name, "line", tuple((d, curve(d)) for d in distances)))
    return PlotBundle(tuple(series))


__all__ = [
    "ComparisonRow",
    "PlotBundle",
    "Series",
    "SynthPolicy",
    "ThreeGppSource",
    "abg_validation",
    "emit_plot_data",
    "fi_validation",
    "format_number",
    "parse_measured_params",
    "render_report",
    "row_to_json",
    "threegpp_abg_params",
    "threegpp_fi_params",
    "threegpp_specs",
]
