"""Seeded synthetic path loss samples drawn from any of the evaluators.

Random draws
------------
Gaussian deviates come from numpy's counter-based Philox generator. Frequency
slot ``k`` owns its own stream, keyed by ``SeedSequence(seed, spawn_key=(k,))``.
Within a stream, ``standard_normal`` fills a ``(count, replicates)`` array in
row-major order, so draw ``(distance i, replicate r)`` is element
``i * replicates + r``. Appending frequencies leaves existing draws untouched.
The identity string :data:`RNG_ALGORITHM` is written into every output
header.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from inhpl.errors import ConfigError
from inhpl.estimators import PathLossSample
from inhpl.models import (
    ABGParams,
    CIParams,
    Condition,
    FIParams,
    ThreeGppInhSpec,
    eval_abg,
    eval_ci,
    eval_fi,
)

RNG_ALGORITHM = "numpy.Philox(SeedSequence(seed, spawn_key=(freq_index,))).standard_normal[ziggurat]"

Model = FIParams | ABGParams | CIParams | ThreeGppInhSpec


@dataclass(frozen=True)
class DistanceGrid:
    d_min_m: float = 1.0
    d_max_m: float = 100.0
    count: int = 100
    spacing: str = "log"

    def __post_init__(self):
        if self.spacing not in ("log", "linear"):
            raise ConfigError(f"grid spacing must be 'log' or 'linear', got {self.spacing!r}")
        if int(self.count) != self.count or self.count < 2:
            raise ConfigError(f"grid count must be an integer >= 2, got {self.count!r}")
        if not (0 < self.d_min_m < self.d_max_m) or not math.isfinite(self.d_max_m):
            raise ConfigError(
                f"grid needs 0 < d_min < d_max, got ({self.d_min_m!r}, {self.d_max_m!r})"
            )

    @classmethod
    def parse(cls, text: str) -> DistanceGrid:
        """Parse ``spacing:dmin:dmax:count``, e.g. ``log:1:100:100``."""
        parts = text.split(":")
        if len(parts) != 4:
            raise ConfigError(f"grid must look like spacing:dmin:dmax:count, got {text!r}")
        spacing, dmin, dmax, count = parts
        try:
            return cls(float(dmin), float(dmax), int(count), spacing.strip().lower())
        except ValueError as exc:
            raise ConfigError(f"bad grid {text!r}: {exc}") from None

    def __str__(self) -> str:
        return f"{self.spacing}:{self.d_min_m!r}:{self.d_max_m!r}:{self.count}"


def make_grid(grid: DistanceGrid) -> list[float]:
    """Distances from ``d_min_m`` to ``d_max_m`` inclusive, strictly increasing."""
    n = grid.count
    if grid.spacing == "log":
        lo, hi = math.log10(grid.d_min_m), math.log10(grid.d_max_m)
        points = [10.0 ** (lo + (hi - lo) * i / (n - 1)) for i in range(n)]
    else:
        points = [grid.d_min_m + (grid.d_max_m - grid.d_min_m) * i / (n - 1) for i in range(n)]
    # pin endpoints exactly; 10**log10(x) can be off by an ulp
    points[0], points[-1] = grid.d_min_m, grid.d_max_m
    return points


@dataclass(frozen=True)
class SynthConfig:
    """Recipe for :func:`generate_samples`.

    ``frequencies_ghz`` generates a pooled multi-frequency batch and takes
    precedence over ``frequency_ghz``. ``shadow_fading_db`` of ``None`` means
    shadow fading is off; ``0.0`` draws deviates but scales them to zero.
    """

    model: Model
    frequency_ghz: float | None = None
    grid: DistanceGrid = field(default_factory=DistanceGrid)
    shadow_fading_db: float | None = None
    seed: int = 0
    replicates_per_distance: int = 1
    frequencies_ghz: tuple[float, ...] | None = None
    condition: Condition | None = None
    strict: bool = True

    def __post_init__(self):
        if self.shadow_fading_db is not None and not self.shadow_fading_db >= 0:
            raise ConfigError(f"shadow fading sigma must be >= 0, got {self.shadow_fading_db!r}")
        if int(self.replicates_per_distance) != self.replicates_per_distance or self.replicates_per_distance < 1:
            raise ConfigError("replicates_per_distance must be an integer >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if not self.frequency_list():
            raise ConfigError("a frequency (or frequency list) is required")
        if any(not f > 0 for f in self.frequency_list()):
            raise ConfigError("frequencies must be > 0")

    def frequency_list(self) -> tuple[float, ...]:
        if self.frequencies_ghz:
            return tuple(float(f) for f in self.frequencies_ghz)
        if self.frequency_ghz is None:
            if isinstance(self.model, FIParams):
                return (1.0,)  # FI ignores frequency; the label still needs a value
            return ()
        return (float(self.frequency_ghz),)

    def sample_condition(self) -> Condition:
        if isinstance(self.model, ThreeGppInhSpec):
            return self.model.condition
        return Condition.parse(self.condition) if self.condition is not None else Condition.LOS

    def describe(self) -> dict:
        """JSON-friendly snapshot used for output metadata."""
        if isinstance(self.model, ThreeGppInhSpec):
            model = {
                "type": "3gpp-inh",
                "condition": self.model.condition.value,
                "nlos_option": self.model.nlos_option.value,
                "apply_los_floor": self.model.apply_los_floor,
            }
        else:
            model = {"type": type(self.model).__name__, **asdict(self.model)}
        return {
            "model": model,
            "frequencies_ghz": list(self.frequency_list()),
            "grid": str(self.grid),
            "shadow_fading": "off" if self.shadow_fading_db is None else f"gaussian:{self.shadow_fading_db!r}",
            "seed": int(self.seed),
            "replicates_per_distance": int(self.replicates_per_distance),
            "condition": self.sample_condition().value,
            "strict": self.strict,
            "rng": RNG_ALGORITHM,
        }


def mean_path_loss(model: Model, distance_m: float, frequency_ghz: float, strict: bool = True) -> float:
    if isinstance(model, ThreeGppInhSpec):
        return model.evaluate(distance_m, frequency_ghz, strict)
    if isinstance(model, FIParams):
        return eval_fi(model, distance_m)
    if isinstance(model, ABGParams):
        return eval_abg(model, distance_m, frequency_ghz)
    if isinstance(model, CIParams):
        return eval_ci(model, distance_m, frequency_ghz)
    raise TypeError(f"unsupported model {model!r}")


def shadow_fading_draws(seed: int, freq_index: int, count: int, replicates: int) -> np.ndarray:
    """Standard normal draws for one frequency slot, shape ``(count, replicates)``."""
    seq = np.random.SeedSequence(int(seed), spawn_key=(int(freq_index),))
    return np.random.Generator(np.random.Philox(seq)).standard_normal((count, replicates))


def generate_samples(config: SynthConfig) -> list[PathLossSample]:
    """Samples ordered by frequency, then distance, then replicate."""
    distances = make_grid(config.grid)
    reps = int(config.replicates_per_distance)
    condition = config.sample_condition()
    sigma = config.shadow_fading_db
    out: list[PathLossSample] = []
    for k, f in enumerate(config.frequency_list()):
        means = [mean_path_loss(config.model, d, f, config.strict) for d in distances]
        draws = shadow_fading_draws(config.seed, k, len(distances), reps) if sigma is not None else None
        for i, (d, mean) in enumerate(zip(distances, means)):
            for r in range(reps):
                pl = mean if draws is None else mean + sigma * float(draws[i, r])
                out.append(PathLossSample(f, d, pl, condition))
    return out


def exact_fit_samples(
    model: FIParams | ABGParams,
    distances_m: Sequence[float],
    frequencies_ghz: Sequence[float] = (1.0,),
    condition: Condition | str = Condition.LOS,
) -> list[PathLossSample]:
    """Sample pairs whose least-squares fit reproduces ``model`` exactly.

    Each grid point gets two samples at ``mean +/- sigma_sf_db``. The residuals
    cancel pairwise, so they are orthogonal to every regressor. The fitted
    parameters equal the model's, and the RMS residual equals
    ``model.sigma_sf_db``. This turns a published parameter set into a
    measured-data stand-in.
    """
    sigma = model.sigma_sf_db
    out = []
    for f in frequencies_ghz:
        for d in distances_m:
            mean = mean_path_loss(model, d, f)
            out.append(PathLossSample(f, d, mean + sigma, condition))
            out.append(PathLossSample(f, d, mean - sigma, condition))
    return out


def metadata_header(config: SynthConfig) -> str:
    return "# synth-config: " + json.dumps(config.describe(), sort_keys=True)
