"""Closed-form least-squares fitters for the FI, ABG and CI path loss models.

Shadow fading is reported as the RMS residual, ``sqrt(SSE / N)``.

Every sum goes through :func:`math.fsum`, which is correctly rounded, so a
fit is bitwise independent of the order of its samples.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from inhpl.errors import BoundaryWarning, EmptyInputError, RankDeficiencyError
from inhpl.models import (
    ABGParams,
    CIParams,
    Condition,
    FIParams,
    eval_abg,
    eval_ci,
    eval_fi,
    eval_fspl_1m,
)

# Singular value ratio of the centered regressor matrix below which a fit is rank deficient.
RANK_TOLERANCE = 1e-10
# Above RANK_TOLERANCE but below this, the fit succeeds with a conditioning warning.
CONDITION_WARNING_RATIO = 1e-6
BRUTE_FORCE_MAX_POINTS = 10_000_000


@dataclass(frozen=True)
class PathLossSample:
    """One omnidirectional path loss observation."""

    frequency_ghz: float
    distance_m: float
    path_loss_db: float
    condition: Condition = Condition.LOS
    tags: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "condition", Condition.parse(self.condition))
        if not (math.isfinite(self.frequency_ghz) and self.frequency_ghz > 0):
            raise ValueError("frequency_ghz must be > 0")
        if not (math.isfinite(self.distance_m) and self.distance_m > 0):
            raise ValueError("distance_m must be > 0")
        if not math.isfinite(self.path_loss_db):
            raise ValueError("path_loss_db must be finite")


@dataclass(frozen=True)
class FitDiagnostics:
    n_samples: int
    sse_db2: float
    rank_ok: bool = True
    condition_warning: str | None = None


def _db(value: float) -> float:
    return 10.0 * math.log10(value)


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _require_samples(samples: Sequence[PathLossSample], minimum: int, model: str) -> None:
    if not samples:
        raise EmptyInputError(f"{model} fit needs samples, got none")
    if len(samples) < minimum:
        raise RankDeficiencyError(
            f"{model} fit needs at least {minimum} samples, got {len(samples)}", "distance"
        )


def _rms(residuals: Sequence[float]) -> tuple[float, float]:
    sse = math.fsum(r * r for r in residuals)
    return sse, math.sqrt(sse / len(residuals))


def fit_fi(samples: Sequence[PathLossSample]) -> tuple[FIParams, FitDiagnostics]:
    """Fit ``PL = intercept + 10*exponent*log10(d)`` by ordinary least squares.

    Sample frequencies are ignored; group by frequency before calling.
    """
    samples = list(samples)
    _require_samples(samples, 2, "FI")
    x = [_db(s.distance_m) for s in samples]
    y = [s.path_loss_db for s in samples]
    if len({s.distance_m for s in samples}) < 2:
        raise RankDeficiencyError(
            "FI fit is rank deficient: all samples share one distance, "
            "so the distance exponent is undetermined",
            "distance",
        )
    mx, my = _mean(x), _mean(y)
    dx = [xi - mx for xi in x]
    sxx = math.fsum(d * d for d in dx)
    sxy = math.fsum(d * (yi - my) for d, yi in zip(dx, y))
    scale = math.sqrt(math.fsum(xi * xi for xi in x))
    ratio = math.sqrt(sxx) / scale if scale > 0 else 0.0
    if ratio < RANK_TOLERANCE:
        raise RankDeficiencyError(
            "FI fit is rank deficient: distance regressor has no spread", "distance"
        )
    exponent = sxy / sxx
    intercept = my - exponent * mx
    residuals = [yi - intercept - exponent * xi for xi, yi in zip(x, y)]
    sse, sigma = _rms(residuals)
    warning = None
    if ratio < CONDITION_WARNING_RATIO:
        warning = f"distance regressor nearly constant (spread ratio {ratio:.2e})"
    return (
        FIParams(intercept, exponent, sigma),
        FitDiagnostics(len(samples), sse, True, warning),
    )


def _solve_2x2(a11: float, a12: float, a22: float, b1: float, b2: float) -> tuple[float, float]:
    det = a11 * a22 - a12 * a12
    return (a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det


def fit_abg(samples: Sequence[PathLossSample]) -> tuple[ABGParams, FitDiagnostics]:
    """Fit the ABG model over pooled multi-frequency samples.

    Solves the centered 2x2 normal equations for the distance and frequency
    exponents, then recovers the offset from the means.
    """
    samples = list(samples)
    _require_samples(samples, 3, "ABG")
    if len({s.frequency_ghz for s in samples}) < 2:
        raise RankDeficiencyError(
            "ABG fit is rank deficient: all samples share one frequency, so the frequency "
            "exponent is undetermined (use an FI fit for single-frequency data)",
            "frequency",
        )
    if len({s.distance_m for s in samples}) < 2:
        raise RankDeficiencyError(
            "ABG fit is rank deficient: all samples share one distance, so the distance "
            "exponent is undetermined",
            "distance",
        )
    x1 = [_db(s.distance_m) for s in samples]
    x2 = [_db(s.frequency_ghz) for s in samples]
    y = [s.path_loss_db for s in samples]
    m1, m2, my = _mean(x1), _mean(x2), _mean(y)
    d1 = [v - m1 for v in x1]
    d2 = [v - m2 for v in x2]
    dy = [v - my for v in y]
    s11 = math.fsum(a * a for a in d1)
    s22 = math.fsum(b * b for b in d2)
    s12 = math.fsum(a * b for a, b in zip(d1, d2))
    s1y = math.fsum(a * c for a, c in zip(d1, dy))
    s2y = math.fsum(b * c for b, c in zip(d2, dy))

    # SVD of the centered regressors themselves; going through the Gram matrix
    # would square the condition number and hide exact collinearity.
    singular = np.linalg.svd(np.column_stack([d1, d2]), compute_uv=False)
    ratio = float(singular[-1] / singular[0]) if singular[0] > 0 else 0.0
    if ratio < RANK_TOLERANCE or s11 * s22 - s12 * s12 <= 0:
        raise RankDeficiencyError(
            "ABG fit is rank deficient: log-distance and log-frequency regressors are collinear",
            "distance+frequency",
        )
    distance_exponent, frequency_exponent = _solve_2x2(s11, s12, s22, s1y, s2y)
    offset = my - distance_exponent * m1 - frequency_exponent * m2
    residuals = [
        yi - offset - distance_exponent * a - frequency_exponent * b
        for a, b, yi in zip(x1, x2, y)
    ]
    sse, sigma = _rms(residuals)
    warning = None
    if ratio < CONDITION_WARNING_RATIO:
        warning = f"regressors nearly collinear (singular value ratio {ratio:.2e})"
    return (
        ABGParams(distance_exponent, offset, frequency_exponent, sigma),
        FitDiagnostics(len(samples), sse, True, warning),
    )


def fit_ci(samples: Sequence[PathLossSample]) -> tuple[CIParams, FitDiagnostics]:
    """Fit the path loss exponent of the 1 m close-in model.

    Samples at exactly 1 m carry no slope information. They still count
    toward the SSE and are flagged in the diagnostics.
    """
    samples = list(samples)
    if not samples:
        raise EmptyInputError("CI fit needs samples, got none")
    x = [_db(s.distance_m) for s in samples]
    excess = [s.path_loss_db - eval_fspl_1m(s.frequency_ghz) for s in samples]
    sxx = math.fsum(v * v for v in x)
    if sxx == 0.0:
        raise RankDeficiencyError(
            "CI fit is rank deficient: every sample sits at the 1 m reference distance",
            "distance",
        )
    exponent = math.fsum(a * b for a, b in zip(excess, x)) / sxx
    residuals = [a - exponent * b for a, b in zip(excess, x)]
    sse, sigma = _rms(residuals)
    at_reference = sum(1 for s in samples if s.distance_m == 1.0)
    warning = None
    if at_reference:
        warning = f"{at_reference} sample(s) at the 1 m reference distance do not constrain the exponent"
    return CIParams(exponent, sigma), FitDiagnostics(len(samples), sse, True, warning)


def _axis(lo: float, hi: float, step: float) -> np.ndarray:
    if not hi > lo or not step > 0:
        raise ValueError(f"bad search axis ({lo}, {hi}) step {step}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def brute_force_fit(
    samples: Sequence[PathLossSample],
    model_family: str,
    search_box: Sequence[tuple[float, float]],
    grid_resolution: float | Sequence[float],
) -> FIParams | ABGParams:
    """Exhaustive SSE minimization over a rectangular parameter grid.

    Verification oracle for the closed-form fitters; slow by design.

    ``search_box`` holds one ``(lo, hi)`` pair per parameter, ordered
    ``(intercept_db, distance_exponent)`` for FI and
    ``(distance_exponent, offset_db, frequency_exponent)`` for ABG.
    A :class:`BoundaryWarning` is issued when the minimum lies on the box edge.
    """
    family = model_family.upper()
    n_params = {"FI": 2, "ABG": 3}.get(family)
    if n_params is None:
        raise ValueError(f"model_family must be FI or ABG, got {model_family!r}")
    if len(search_box) != n_params:
        raise ValueError(f"{family} search box needs {n_params} ranges")
    steps = (
        [float(grid_resolution)] * n_params
        if np.isscalar(grid_resolution)
        else [float(s) for s in grid_resolution]
    )
    axes = [_axis(lo, hi, step) for (lo, hi), step in zip(search_box, steps)]
    total = math.prod(len(a) for a in axes)
    if total > BRUTE_FORCE_MAX_POINTS:
        raise ValueError(f"search grid has {total} points, limit is {BRUTE_FORCE_MAX_POINTS}")
    if not samples:
        raise EmptyInputError("brute-force fit needs samples")

    logd = np.log10([s.distance_m for s in samples])
    logf = np.log10([s.frequency_ghz for s in samples])
    pl = np.array([s.path_loss_db for s in samples])

    if family == "FI":
        intercepts, exponents = axes
        best_sse, best_idx = math.inf, (0, 0)
        for i, a in enumerate(intercepts):
            model = a + 10.0 * exponents[:, None] * logd[None, :]
            sse = np.sum((pl[None, :] - model) ** 2, axis=1)
            j = int(np.argmin(sse))
            if sse[j] < best_sse:
                best_sse, best_idx = float(sse[j]), (i, j)
    else:
        alphas, offsets, gammas = axes
        slope = 10.0 * alphas[:, None, None] * logd + 10.0 * gammas[None, :, None] * logf
        best_sse, best_idx = math.inf, (0, 0, 0)
        for j, b in enumerate(offsets):
            sse = np.sum((pl - b - slope) ** 2, axis=2)
            i, k = np.unravel_index(int(np.argmin(sse)), sse.shape)
            if sse[i, k] < best_sse:
                best_sse, best_idx = float(sse[i, k]), (int(i), j, int(k))

    if any(idx in (0, len(axis) - 1) for idx, axis in zip(best_idx, axes)):
        warnings.warn(
            f"brute-force {family} optimum lies on the search box boundary", BoundaryWarning, stacklevel=2
        )
    values = [float(axis[idx]) for idx, axis in zip(best_idx, axes)]
    sigma = math.sqrt(best_sse / len(samples))
    if family == "FI":
        return FIParams(values[0], values[1], sigma)
    return ABGParams(values[0], values[1], values[2], sigma)


def sse(samples: Sequence[PathLossSample], params: FIParams | ABGParams | CIParams) -> float:
    """Direct sum of squared residuals of ``params`` on ``samples``."""

    def predict(s: PathLossSample) -> float:
        if isinstance(params, FIParams):
            return eval_fi(params, s.distance_m)
        if isinstance(params, ABGParams):
            return eval_abg(params, s.distance_m, s.frequency_ghz)
        return eval_ci(params, s.distance_m, s.frequency_ghz)

    return math.fsum((s.path_loss_db - predict(s)) ** 2 for s in samples)


__all__ = [
    "PathLossSample",
    "FitDiagnostics",
    "fit_fi",
    "fit_abg",
    "fit_ci",
    "brute_force_fit",
    "sse",
]
