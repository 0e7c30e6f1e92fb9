"""Mean path loss evaluators: FSPL anchor, FI, ABG, CI and 3GPP TR 38.901 InH.

All evaluators return the deterministic mean in dB. Shadow fading is added
only by :mod:`inhpl.synthgen`.

Parameter names spell out their role. The FI intercept/slope and the ABG
slope/offset are written with the same Greek letters in the literature but
with swapped meanings, so bare symbols are avoided here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

from inhpl.errors import DomainError, DomainWarning

SPEED_OF_LIGHT = 299_792_458.0  # m/s

# 20*log10(4*pi*1e9/c): free-space loss at 1 m and 1 GHz. 3GPP rounds it to 32.4.
FSPL_1M_1GHZ_DB = 20.0 * math.log10(4.0 * math.pi * 1e9 / SPEED_OF_LIGHT)


class Condition(str, Enum):
    LOS = "LOS"
    NLOS = "NLOS"

    @classmethod
    def parse(cls, value: str | Condition) -> Condition:
        if isinstance(value, Condition):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ValueError(f"condition must be LOS or NLOS, got {value!r}") from None


class NlosOption(str, Enum):
    OPTION1 = "Option1"
    OPTION2 = "Option2"

    @classmethod
    def parse(cls, value: str | int | NlosOption) -> NlosOption:
        if isinstance(value, NlosOption):
            return value
        text = str(value).strip().lower().replace("option", "")
        if text == "1":
            return cls.OPTION1
        if text == "2":
            return cls.OPTION2
        raise ValueError(f"NLOS option must be 1 or 2, got {value!r}")


def _check_finite(**fields: float) -> None:
    for name, value in fields.items():
        if not math.isfinite(value):
            raise ValueError(f"{name} must be finite, got {value!r}")


def _check_sigma(sigma_sf_db: float) -> None:
    if sigma_sf_db < 0:
        raise ValueError(f"sigma_sf_db must be >= 0, got {sigma_sf_db!r}")


@dataclass(frozen=True)
class FIParams:
    """Floating-intercept model: ``intercept_db + 10*distance_exponent*log10(d)``."""

    intercept_db: float
    distance_exponent: float
    sigma_sf_db: float = 0.0

    def __post_init__(self):
        _check_finite(
            intercept_db=self.intercept_db,
            distance_exponent=self.distance_exponent,
            sigma_sf_db=self.sigma_sf_db,
        )
        _check_sigma(self.sigma_sf_db)


@dataclass(frozen=True)
class ABGParams:
    """Alpha-beta-gamma model.

    ``offset_db + 10*distance_exponent*log10(d) + 10*frequency_exponent*log10(f_GHz)``
    """

    distance_exponent: float
    offset_db: float
    frequency_exponent: float
    sigma_sf_db: float = 0.0

    def __post_init__(self):
        _check_finite(
            distance_exponent=self.distance_exponent,
            offset_db=self.offset_db,
            frequency_exponent=self.frequency_exponent,
            sigma_sf_db=self.sigma_sf_db,
        )
        _check_sigma(self.sigma_sf_db)


@dataclass(frozen=True)
class CIParams:
    """Close-in model anchored to free-space loss at a 1 m reference distance."""

    path_loss_exponent: float
    sigma_sf_db: float = 0.0
    reference_distance_m: float = 1.0

    def __post_init__(self):
        _check_finite(path_loss_exponent=self.path_loss_exponent, sigma_sf_db=self.sigma_sf_db)
        _check_sigma(self.sigma_sf_db)
        if self.reference_distance_m != 1.0:
            raise ValueError("reference_distance_m is fixed at 1.0 m")


def _require_positive(name: str, value: float) -> None:
    if not value > 0 or not math.isfinite(value):
        raise DomainError(f"{name} must be > 0, got {value!r}")


def eval_fspl_1m(frequency_ghz: float) -> float:
    """Free-space path loss at 1 m in dB, ``32.4478 + 20*log10(f_GHz)``."""
    _require_positive("frequency_ghz", frequency_ghz)
    return FSPL_1M_1GHZ_DB + 20.0 * math.log10(frequency_ghz)


def eval_fi(params: FIParams, distance_m: float) -> float:
    _require_positive("distance_m", distance_m)
    return params.intercept_db + 10.0 * params.distance_exponent * math.log10(distance_m)


def eval_abg(params: ABGParams, distance_m: float, frequency_ghz: float) -> float:
    _require_positive("distance_m", distance_m)
    _require_positive("frequency_ghz", frequency_ghz)
    return (
        params.offset_db
        + 10.0 * params.distance_exponent * math.log10(distance_m)
        + 10.0 * params.frequency_exponent * math.log10(frequency_ghz)
    )


def eval_ci(params: CIParams, distance_m: float, frequency_ghz: float) -> float:
    _require_positive("distance_m", distance_m)
    return eval_fspl_1m(frequency_ghz) + 10.0 * params.path_loss_exponent * math.log10(distance_m)


# Coefficients as (offset_db, distance coefficient, frequency coefficient) in
# "offset + a*log10(d) + b*log10(f)" form, plus the nominal shadow fading.
_INH_COEFFICIENTS = {
    Condition.LOS: ABGParams(1.73, 32.4, 2.0, 3.0),
    NlosOption.OPTION1: ABGParams(3.83, 17.3, 2.49, 8.03),
    NlosOption.OPTION2: ABGParams(3.19, 32.4, 2.0, 8.29),
}


@dataclass(frozen=True)
class ThreeGppInhSpec:
    """3GPP TR 38.901 indoor-hotspot path loss for one channel condition.

    For NLOS the result is ``max(PL_LOS, PL'_NLOS)`` when ``apply_los_floor``
    is set, otherwise the bare ``PL'_NLOS`` branch of the selected option.
    """

    condition: Condition = Condition.LOS
    nlos_option: NlosOption = NlosOption.OPTION1
    apply_los_floor: bool = True

    D3D_MIN_M = 1.0
    D3D_MAX_M = 150.0
    FC_MIN_GHZ = 0.5
    FC_MAX_GHZ = 100.0

    def __post_init__(self):
        object.__setattr__(self, "condition", Condition.parse(self.condition))
        object.__setattr__(self, "nlos_option", NlosOption.parse(self.nlos_option))

    @property
    def coefficients(self) -> ABGParams:
        """The raw coefficient set of the selected branch, as an ABG parameter set."""
        if self.condition is Condition.LOS:
            return _INH_COEFFICIENTS[Condition.LOS]
        return _INH_COEFFICIENTS[self.nlos_option]

    @property
    def nominal_sigma_sf_db(self) -> float:
        return self.coefficients.sigma_sf_db

    @property
    def label(self) -> str:
        if self.condition is Condition.LOS:
            return "3gpp-inh-los"
        suffix = "opt1" if self.nlos_option is NlosOption.OPTION1 else "opt2"
        return f"3gpp-inh-nlos-{suffix}" + ("" if self.apply_los_floor else "-nofloor")

    def fi_at(self, frequency_ghz: float) -> FIParams:
        """Single-frequency FI view of the branch coefficients (the floor is ignored)."""
        c = self.coefficients
        return FIParams(
            intercept_db=c.offset_db + 10.0 * c.frequency_exponent * math.log10(frequency_ghz),
            distance_exponent=c.distance_exponent,
            sigma_sf_db=c.sigma_sf_db,
        )

    def check_domain(self, distance_m: float, frequency_ghz: float, strict: bool = True) -> None:
        problems = []
        if not self.D3D_MIN_M <= distance_m <= self.D3D_MAX_M:
            problems.append(f"d_3D={distance_m!r} m outside [{self.D3D_MIN_M}, {self.D3D_MAX_M}] m")
        if not self.FC_MIN_GHZ <= frequency_ghz <= self.FC_MAX_GHZ:
            problems.append(f"f_c={frequency_ghz!r} GHz outside [{self.FC_MIN_GHZ}, {self.FC_MAX_GHZ}] GHz")
        if not problems:
            return
        message = "3GPP InH model: " + "; ".join(problems)
        if strict:
            raise DomainError(message)
        warnings.warn(message, DomainWarning, stacklevel=3)

    def evaluate(self, distance_m: float, frequency_ghz: float, strict: bool = True) -> float:
        _require_positive("distance_m", distance_m)
        _require_positive("frequency_ghz", frequency_ghz)
        self.check_domain(distance_m, frequency_ghz, strict)
        pl = eval_abg(self.coefficients, distance_m, frequency_ghz)
        if self.condition is Condition.NLOS and self.apply_los_floor:
            pl = max(eval_abg(_INH_COEFFICIENTS[Condition.LOS], distance_m, frequency_ghz), pl)
        return pl


def eval_3gpp_inh_los(distance_m: float, frequency_ghz: float, strict: bool = True) -> float:
    return ThreeGppInhSpec(Condition.LOS).evaluate(distance_m, frequency_ghz, strict)


def eval_3gpp_inh_nlos(
    distance_m: float,
    frequency_ghz: float,
    option: NlosOption | str | int = NlosOption.OPTION1,
    apply_los_floor: bool = True,
    strict: bool = True,
) -> float:
    spec = ThreeGppInhSpec(Condition.NLOS, NlosOption.parse(option), apply_los_floor)
    return spec.evaluate(distance_m, frequency_ghz, strict)


def los_floor_crossover_m(frequency_ghz: float, option: NlosOption | str | int = NlosOption.OPTION1) -> float:
    """Distance where the NLOS branch meets the LOS floor; the floor binds below it.

    Returns ``inf`` when the branch never rises above LOS, and ``0.0`` when it is
    always above.
    """
    los = _INH_COEFFICIENTS[Condition.LOS]
    nlos = _INH_COEFFICIENTS[NlosOption.parse(option)]
    slope_gap = 10.0 * (nlos.distance_exponent - los.distance_exponent)
    offset_gap = eval_abg(los, 1.0, frequency_ghz) - eval_abg(nlos, 1.0, frequency_ghz)
    if slope_gap <= 0:
        return math.inf if offset_gap > 0 else 0.0
    return 10.0 ** (offset_gap / slope_gap)
