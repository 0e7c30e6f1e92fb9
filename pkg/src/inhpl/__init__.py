"""Indoor-hotspot path loss models, closed-form fitters and 3GPP InH validation."""

from inhpl.errors import (
    ConfigError,
    DomainError,
    DomainWarning,
    EmptyInputError,
    FormatError,
    PathLossError,
    RankDeficiencyError,
)
from inhpl.estimators import FitDiagnostics, PathLossSample, brute_force_fit, fit_abg, fit_ci, fit_fi
from inhpl.measurements import BAND_PRESETS, BandSet, SampleSet, dump_csv, load_csv, partition
from inhpl.models import (
    ABGParams,
    CIParams,
    Condition,
    FIParams,
    NlosOption,
    ThreeGppInhSpec,
    eval_3gpp_inh_los,
    eval_3gpp_inh_nlos,
    eval_abg,
    eval_ci,
    eval_fi,
    eval_fspl_1m,
)
from inhpl.report import (
    ComparisonRow,
    SynthPolicy,
    ThreeGppSource,
    abg_validation,
    emit_plot_data,
    fi_validation,
    render_report,
)
from inhpl.synthgen import DistanceGrid, SynthConfig, exact_fit_samples, generate_samples, make_grid

__version__ = "0.1.0"

__all__ = [
    "ABGParams",
    "BAND_PRESETS",
    "BandSet",
    "CIParams",
    "ComparisonRow",
    "Condition",
    "ConfigError",
    "DistanceGrid",
    "DomainError",
    "DomainWarning",
    "EmptyInputError",
    "FIParams",
    "FitDiagnostics",
    "FormatError",
    "NlosOption",
    "PathLossError",
    "PathLossSample",
    "RankDeficiencyError",
    "SampleSet",
    "SynthConfig",
    "SynthPolicy",
    "ThreeGppInhSpec",
    "ThreeGppSource",
    "abg_validation",
    "brute_force_fit",
    "dump_csv",
    "emit_plot_data",
    "eval_3gpp_inh_los",
    "eval_3gpp_inh_nlos",
    "eval_abg",
    "eval_ci",
    "eval_fi",
    "eval_fspl_1m",
    "exact_fit_samples",
    "fi_validation",
    "fit_abg",
    "fit_ci",
    "fit_fi",
    "generate_samples",
    "load_csv",
    "make_grid",
    "partition",
    "render_report",
]
