import io
import math

import numpy as np
import pytest

from inhpl.errors import ConfigError, DomainError
from inhpl.estimators import fit_abg, fit_fi
from inhpl.measurements import dump_csv, load_csv
from inhpl.models import ABGParams, Condition, FIParams, NlosOption, ThreeGppInhSpec, eval_3gpp_inh_los
from inhpl.synthgen import (
    RNG_ALGORITHM,
    DistanceGrid,
    SynthConfig,
    exact_fit_samples,
    generate_samples,
    make_grid,
    metadata_header,
)


class TestGrid:
    def test_log_midpoint(self):
        assert make_grid(DistanceGrid(1, 100, 3, "log")) == pytest.approx([1, 10, 100], rel=1e-12)

    def test_linear_midpoint(self):
        assert make_grid(DistanceGrid(1, 100, 3, "linear")) == [1, 50.5, 100]

    def test_endpoints_only(self):
        assert make_grid(DistanceGrid(13, 97, 2, "log")) == [13, 97]

    @pytest.mark.parametrize("spacing", ["log", "linear"])
    def test_strictly_increasing_with_exact_endpoints(self, spacing):
        grid = make_grid(DistanceGrid(1.3, 97.1, 257, spacing))
        assert len(grid) == 257
        assert all(b > a for a, b in zip(grid, grid[1:]))
        assert grid[0] == 1.3 and grid[-1] == 97.1

    def test_log_spacing_is_geometric(self):
        grid = make_grid(DistanceGrid(1, 100, 11, "log"))
        ratios = [b / a for a, b in zip(grid, grid[1:])]
        assert ratios == pytest.approx([10 ** 0.2] * 10, rel=1e-12)

    @pytest.mark.parametrize(
        "args", [(1, 100, 1, "log"), (10, 1, 5, "log"), (0, 10, 5, "log"), (1, 10, 5, "cubic")]
    )
    def test_invalid(self, args):
        with pytest.raises(ConfigError):
            DistanceGrid(*args)

    def test_parse_round_trip(self):
        grid = DistanceGrid.parse("log:1:100:100")
        assert grid == DistanceGrid(1.0, 100.0, 100, "log")
        assert DistanceGrid.parse(str(grid)) == grid


class TestGenerate:
    def test_noiseless_lies_on_model(self):
        samples = generate_samples(SynthConfig(ThreeGppInhSpec(), 6.75))
        assert len(samples) == 100
        assert all(s.path_loss_db == eval_3gpp_inh_los(s.distance_m, 6.75) for s in samples)
        assert all(s.condition is Condition.LOS for s in samples)
        params, _ = fit_fi(samples)
        assert round(params.intercept_db, 2) == pytest.approx(48.99)  # 48.986
        assert params.intercept_db == pytest.approx(48.98, abs=0.01)
        assert round(params.distance_exponent, 2) == 1.73

    def test_nlos_option1_16_95(self):
        spec = ThreeGppInhSpec(Condition.NLOS, NlosOption.OPTION1, apply_los_floor=False)
        params, _ = fit_fi(generate_samples(SynthConfig(spec, 16.95, DistanceGrid(1, 100, 37, "log"))))
        assert params.intercept_db == pytest.approx(47.90, abs=0.01)
        assert params.distance_exponent == pytest.approx(3.83, abs=1e-9)

    def test_floor_on_from_one_meter_changes_the_slope(self):
        spec = ThreeGppInhSpec(Condition.NLOS, NlosOption.OPTION1, apply_los_floor=True)
        params, _ = fit_fi(generate_samples(SynthConfig(spec, 6.75, DistanceGrid(1, 100, 100, "log"))))
        assert params.distance_exponent < 3.83 - 0.05
        assert params.sigma_sf_db > 0

    def test_labels_for_parametric_sources(self):
        samples = generate_samples(SynthConfig(FIParams(40, 3), condition="NLOS"))
        assert {s.condition for s in samples} == {Condition.NLOS}

    def test_replicates_and_frequencies(self):
        config = SynthConfig(
            ABGParams(2, 30, 2), grid=DistanceGrid(1, 10, 4), replicates_per_distance=3,
            frequencies_ghz=(6.75, 16.95), shadow_fading_db=1.0, seed=1,
        )
        samples = generate_samples(config)
        assert len(samples) == 2 * 4 * 3
        assert [s.frequency_ghz for s in samples[:12]] == [6.75] * 12

    def test_deterministic(self):
        config = SynthConfig(ThreeGppInhSpec(), 6.75, shadow_fading_db=3.0, seed=99)
        assert generate_samples(config) == generate_samples(config)

    def test_seed_changes_draws(self):
        a = generate_samples(SynthConfig(ThreeGppInhSpec(), 6.75, shadow_fading_db=3.0, seed=1))
        b = generate_samples(SynthConfig(ThreeGppInhSpec(), 6.75, shadow_fading_db=3.0, seed=2))
        assert a != b

    def test_adding_frequency_keeps_existing_draws(self):
        base = dict(model=ABGParams(2, 30, 2), grid=DistanceGrid(1, 10, 5), shadow_fading_db=2.0, seed=5)
        one = generate_samples(SynthConfig(frequencies_ghz=(6.75,), **base))
        two = generate_samples(SynthConfig(frequencies_ghz=(6.75, 16.95), **base))
        assert two[: len(one)] == one

    def test_noise_statistics(self):
        config = SynthConfig(ThreeGppInhSpec(), 6.75, DistanceGrid(1, 100, 1000), shadow_fading_db=3.0,
                             seed=7, replicates_per_distance=100)
        samples = generate_samples(config)
        dev = np.array([s.path_loss_db - eval_3gpp_inh_los(s.distance_m, 6.75) for s in samples])
        assert dev.size == 100_000
        assert abs(dev.mean()) <= 0.03
        assert abs(dev.std() - 3.0) <= 0.02 * 3.0

    def test_strict_domain_violation_propagates(self):
        with pytest.raises(DomainError):
            generate_samples(SynthConfig(ThreeGppInhSpec(), 6.75, DistanceGrid(0.5, 100, 10)))

    def test_permissive_allows_extrapolation(self):
        with pytest.warns(UserWarning):
            samples = generate_samples(SynthConfig(ThreeGppInhSpec(), 6.75, DistanceGrid(0.5, 100, 10), strict=False))
        assert len(samples) == 10

    def test_config_validation(self):
        with pytest.raises(ConfigError):
            SynthConfig(ThreeGppInhSpec(), 6.75, shadow_fading_db=-1)
        with pytest.raises(ConfigError):
            SynthConfig(ThreeGppInhSpec())  # no frequency
        with pytest.raises(ConfigError):
            SynthConfig(ThreeGppInhSpec(), 6.75, replicates_per_distance=0)


class TestExactFitSamples:
    def test_fi_fit_reproduces_parameters_and_sigma(self):
        target = FIParams(35.2, 3.6, 9.0)
        params, _ = fit_fi(exact_fit_samples(target, make_grid(DistanceGrid(13, 97, 10, "linear"))))
        assert params.intercept_db == pytest.approx(35.2, abs=1e-9)
        assert params.distance_exponent == pytest.approx(3.6, abs=1e-9)
        assert params.sigma_sf_db == pytest.approx(9.0, abs=1e-9)

    def test_abg_fit_reproduces_parameters_and_sigma(self):
        target = ABGParams(1.7, 28.2, 1.9, 2.9)
        samples = exact_fit_samples(target, make_grid(DistanceGrid(13, 97, 10)), (6.75, 16.95))
        params, _ = fit_abg(samples)
        assert (params.distance_exponent, params.offset_db, params.frequency_exponent, params.sigma_sf_db) == (
            pytest.approx((1.7, 28.2, 1.9, 2.9), abs=1e-9)
        )


def test_csv_metadata_records_config_and_rng():
    config = SynthConfig(ThreeGppInhSpec(), 6.75, shadow_fading_db=3.0, seed=42)
    buf = io.StringIO()
    dump_csv(generate_samples(config), buf, header_comments=[metadata_header(config)])
    text = buf.getvalue()
    first = text.splitlines()[0]
    assert first.startswith("# synth-config: ")
    assert '"seed": 42' in first and RNG_ALGORITHM in first
    reloaded = load_csv(text)
    assert list(reloaded.samples) == generate_samples(config)
    assert math.isfinite(reloaded.samples[0].path_loss_db)
