"""CSV ingest and grouping of measured path loss points.

File layout (header required, ``#`` comment lines ignored)::

    frequency_ghz,distance_m,path_loss_db,condition[,tag columns...]

``condition`` is LOS or NLOS in any case. Extra columns become string tags on
each sample, so environment or polarization columns survive a round trip.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass
from typing import IO, Iterable, Mapping, Sequence

from inhpl.errors import EmptyInputError, FormatError
from inhpl.estimators import PathLossSample
from inhpl.models import Condition

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("frequency_ghz", "distance_m", "path_loss_db", "condition")
# 1e-9 GHz: measured center frequencies are treated as discrete labels.
FREQUENCY_MATCH_TOL_GHZ = 1e-9


@dataclass(frozen=True)
class RowDiagnostic:
    row: int  # 1-based line number in the file
    reason: str

    def __str__(self) -> str:
        return f"row {self.row}: {self.reason}"


@dataclass(frozen=True)
class SampleSet:
    samples: tuple[PathLossSample, ...]
    provenance: str = ""
    diagnostics: tuple[RowDiagnostic, ...] = ()

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


@dataclass(frozen=True)
class BandSet:
    name: str
    member_frequencies_ghz: tuple[float, ...]

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.member_frequencies_ghz)
        if not freqs:
            raise ValueError("a band set needs at least one frequency")
        if any(not f > 0 for f in freqs):
            raise ValueError("band frequencies must be > 0")
        for i, a in enumerate(freqs):
            if any(abs(a - b) <= FREQUENCY_MATCH_TOL_GHZ for b in freqs[i + 1 :]):
                raise ValueError(f"duplicate frequency {a} in band {self.name!r}")
        object.__setattr__(self, "member_frequencies_ghz", freqs)

    def contains(self, frequency_ghz: float) -> bool:
        return any(abs(frequency_ghz - f) <= FREQUENCY_MATCH_TOL_GHZ for f in self.member_frequencies_ghz)

    @classmethod
    def parse(cls, text: str) -> BandSet:
        """A preset name (``7-24``, ``0.5-100``) or a comma-separated frequency list."""
        if text in BAND_PRESETS:
            return BAND_PRESETS[text]
        try:
            freqs = tuple(float(part) for part in text.split(",") if part.strip())
        except ValueError:
            raise ValueError(
                f"band must be one of {sorted(BAND_PRESETS)} or a comma-separated list, got {text!r}"
            ) from None
        return cls(text, freqs)


BAND_PRESETS = {
    "7-24": BandSet("7-24", (6.75, 16.95)),
    "0.5-100": BandSet("0.5-100", (6.75, 16.95, 28.0, 73.0)),
}


def _parse_float(text: str, name: str) -> float:
    text = text.strip()
    # float() would accept "1_000" and "inf"; the file format allows neither
    if not text or "_" in text:
        raise ValueError(f"{name} is not a number: {text!r}")
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite")
    return value


def _data_lines(stream: IO[str]) -> Iterable[tuple[int, str]]:
    for lineno, line in enumerate(stream, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, line


def load_csv(
    stream: IO[str] | str,
    provenance: str | None = None,
    column_map: Mapping[str, str] | None = None,
) -> SampleSet:
    """Parse a path loss CSV into a :class:`SampleSet`.

    Rows that fail validation are skipped and reported in ``diagnostics``
    with their line number. ``column_map`` renames source headers to the
    canonical names before validation, which adapts third-party exports.
    """
    if isinstance(stream, str):
        provenance = provenance or "<string>"
        stream = io.StringIO(stream)
    provenance = provenance or getattr(stream, "name", "<stream>")

    lines = list(_data_lines(stream))
    if not lines:
        raise EmptyInputError(f"{provenance}: no header or data rows")
    header_lineno, header_line = lines[0]
    header = [h.strip() for h in next(csv.reader([header_line]))]
    if column_map:
        header = [column_map.get(h, h) for h in header]
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise FormatError(
            f"{provenance}: header is missing {', '.join(missing)} "
            f"(expected {','.join(REQUIRED_COLUMNS)}[,tags...])"
        )
    if len(set(header)) != len(header):
        raise FormatError(f"{provenance}: duplicate header columns")
    index = {name: header.index(name) for name in REQUIRED_COLUMNS}
    tag_columns = [(i, name) for i, name in enumerate(header) if name not in REQUIRED_COLUMNS]

    samples, diagnostics = [], []
    for lineno, line in lines[1:]:
        cells = next(csv.reader([line]))
        if len(cells) != len(header):
            diagnostics.append(RowDiagnostic(lineno, f"expected {len(header)} fields, got {len(cells)}"))
            continue
        try:
            frequency = _parse_float(cells[index["frequency_ghz"]], "frequency_ghz")
            distance = _parse_float(cells[index["distance_m"]], "distance_m")
            path_loss = _parse_float(cells[index["path_loss_db"]], "path_loss_db")
            condition = Condition.parse(cells[index["condition"]])
            if not frequency > 0:
                raise ValueError("frequency_ghz must be > 0")
            if not distance > 0:
                raise ValueError("distance_m must be > 0")
        except ValueError as exc:
            diagnostics.append(RowDiagnostic(lineno, str(exc)))
            continue
        tags = {name: cells[i].strip() for i, name in tag_columns if cells[i].strip()}
        samples.append(PathLossSample(frequency, distance, path_loss, condition, tags))

    for diag in diagnostics:
        log.warning("%s: rejected %s", provenance, diag)
    return SampleSet(tuple(samples), provenance, tuple(diagnostics))


def load_column_map(path: str) -> dict[str, str]:
    """Read a JSON object mapping source column names to canonical ones."""
    with open(path, encoding="utf-8") as fh:
        mapping = json.load(fh)
    if not isinstance(mapping, dict) or not all(isinstance(v, str) for v in mapping.values()):
        raise FormatError(f"{path}: column map must be a JSON object of strings")
    unknown = set(mapping.values()) - set(REQUIRED_COLUMNS)
    if unknown:
        log.info("column map targets non-canonical names %s; they will load as tags", sorted(unknown))
    return mapping


def dump_csv(
    samples: Iterable[PathLossSample],
    stream: IO[str],
    header_comments: Sequence[str] = (),
) -> None:
    """Write samples using the canonical schema; floats use ``repr`` so reloads are exact."""
    samples = list(samples)
    tag_names = sorted({k for s in samples for k in s.tags})
    for comment in header_comments:
        stream.write(comment if comment.startswith("#") else f"# {comment}")
        stream.write("\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow([*REQUIRED_COLUMNS, *tag_names])
    for s in samples:
        writer.writerow(
            [
                repr(float(s.frequency_ghz)),
                repr(float(s.distance_m)),
                repr(float(s.path_loss_db)),
                s.condition.value,
                *(s.tags.get(t, "") for t in tag_names),
            ]
        )


def partition(
    sample_set: SampleSet | Sequence[PathLossSample],
    by_condition: bool = True,
    by_frequency: bool = False,
    band: BandSet | None = None,
) -> dict[tuple, list[PathLossSample]]:
    """Split samples into disjoint groups.

    Keys are tuples over the requested dimensions, ``(frequency, condition)``
    order, e.g. ``(6.75, Condition.NLOS)``. With neither dimension requested
    the single key is ``()``. Groups come out sorted by key; samples keep
    their input order. A band that matches nothing gives an empty dict and
    a logged warning.
    """
    samples = list(sample_set)
    if band is not None:
        samples = [s for s in samples if band.contains(s.frequency_ghz)]
        if not samples:
            log.warning("band %r matched no samples", band.name)

    labels: list[float] = []

    def freq_label(f: float) -> float:
        for known in labels:
            if abs(known - f) <= FREQUENCY_MATCH_TOL_GHZ:
                return known
        labels.append(f)
        return f

    groups: dict[tuple, list[PathLossSample]] = {}
    for s in samples:
        key: tuple = ()
        if by_frequency:
            key += (freq_label(s.frequency_ghz),)
        if by_condition:
            key += (s.condition,)
        groups.setdefault(key, []).append(s)

    def order(key: tuple):
        return tuple(k.value if isinstance(k, Condition) else k for k in key)

    return {k: groups[k] for k in sorted(groups, key=order)}


def group_label(key: tuple) -> str:
    parts = [k.value if isinstance(k, Condition) else f"{k:g}" for k in key]
    return "/".join(parts) if parts else "all"


__all__ = [
    "BAND_PRESETS",
    "BandSet",
    "RowDiagnostic",
    "SampleSet",
    "dump_csv",
    "group_label",
    "load_column_map",
    "load_csv",
    "partition",
]
