"""Harness tests: pairing, determinism, aggregation, persistence."""

import json

import numpy as np
import pytest

import mabeam.experiments as experiments
from mabeam import ConfigurationError, ExperimentConfig, ExperimentFailure, run_experiment
from mabeam.channel import sample_scenario
from mabeam.experiments import (
    draws_hash,
    emit_results,
    fpa_frame_wavelengths,
    rows_to_csv,
    rows_to_json,
    scenario_hash,
)
from mabeam.seeding import derive_seed


def small_config(**overrides):
    base = dict(
        users=2,
        paths=2,
        gain_convention="linear",
        trials=2,
        schemes=("fpa-sub",),
        master_seed=7,
        max_iterations=30,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig(trials=0)
        with pytest.raises(ConfigurationError):
            ExperimentConfig(schemes=())
        with pytest.raises(ConfigurationError):
            ExperimentConfig(schemes=("nonsense",))
        with pytest.raises(ConfigurationError):
            ExperimentConfig(sweep_axis="power_dbm", sweep_values=())
        with pytest.raises(ConfigurationError):
            ExperimentConfig(sweep_axis="bandwidth", sweep_values=(1,))

    def test_from_dict_rejects_unknown_keys(self):
        with pytest.raises(ConfigurationError):
            ExperimentConfig.from_dict({"n_antennas": 3})

    def test_file_round_trip_with_overrides(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"trials": 5, "schemes": ["fpa-sub"]}))
        config = ExperimentConfig.from_file(path)
        assert config.trials == 5
        overridden = config.with_overrides(trials=2, master_seed=9)
        assert overridden.trials == 2
        assert overridden.master_seed == 9
        assert overridden.schemes == ("fpa-sub",)

    def test_fpa_frame_default_is_compact_grid(self):
        config = small_config()
        assert fpa_frame_wavelengths(config) == 1.0
        custom = small_config(fpa_frame_size_wavelengths=2.5)
        assert fpa_frame_wavelengths(custom) == 2.5


class TestSeeding:
    def test_derive_seed_is_stable(self):
        assert derive_seed(1, "scenario", 0) == derive_seed(1, "scenario", 0)
        assert derive_seed(1, "scenario", 0) != derive_seed(1, "scenario", 1)
        assert derive_seed(1, "scenario", 0) != derive_seed(2, "scenario", 0)

    def test_adding_schemes_never_perturbs_scenarios(self):
        just_fpa = small_config(schemes=("fpa-sub",), trials=3)
        both = small_config(schemes=("fpa-sub", "ma-sub"), trials=3)
        _, rec_a = run_experiment(just_fpa)
        _, rec_b = run_experiment(both)
        seeds_a = {(r.trial): r.scenario_seed for r in rec_a}
        seeds_b = {(r.trial): r.scenario_seed for r in rec_b if r.scheme == "fpa-sub"}
        assert seeds_a == seeds_b
        fpa_a = {r.trial: r.sum_rate for r in rec_a}
        fpa_b = {r.trial: r.sum_rate for r in rec_b if r.scheme == "fpa-sub"}
        assert fpa_a == fpa_b

    def test_schemes_share_channel_draws_within_trial(self):
        config = small_config(
            schemes=("ma-sub", "fpa-sub"),
            sweep_axis="region_size",
            sweep_values=(3.0,),
            trials=1,
        )
        seed = derive_seed(config.master_seed, "scenario", 0)
        params = config.scenario_params()
        ma_scenario = sample_scenario(params, seed, frame_size_wavelengths=3.0)
        fpa_scenario = sample_scenario(
            params, seed, frame_size_wavelengths=fpa_frame_wavelengths(config)
        )
        assert draws_hash(ma_scenario) == draws_hash(fpa_scenario)
        assert scenario_hash(ma_scenario) != scenario_hash(fpa_scenario)

    def test_identical_scenario_across_schemes_without_region_sweep(self):
        config = small_config(schemes=("ma-sub", "upper-bound"))
        seed = derive_seed(config.master_seed, "scenario", 0)
        params = config.scenario_params()
        a = sample_scenario(params, seed, frame_size_wavelengths=2.0)
        b = sample_scenario(params, seed, frame_size_wavelengths=2.0)
        assert scenario_hash(a) == scenario_hash(b)


class TestRunExperiment:
    def test_single_trial_single_row(self):
        rows, records = run_experiment(small_config(trials=1))
        assert len(rows) == 1
        row = rows[0]
        assert row.scheme == "fpa-sub"
        assert row.trials == 1
        assert row.stderr == 0.0
        assert len(records) == 1 and records[0].ok

    def test_power_sweep_rates_increase(self):
        config = small_config(
            trials=3,
            schemes=("fpa-sub",),
            sweep_axis="power_dbm",
            sweep_values=(0.0, 15.0),
        )
        rows, _ = run_experiment(config)
        by_value = {row.sweep_value: row.mean_rate_bps_hz for row in rows}
        assert by_value[15.0] > by_value[0.0]

    def test_fpa_rows_identical_across_region_values(self):
        config = small_config(
            trials=2,
            schemes=("fpa-sub", "fpa-full"),
            sweep_axis="region_size",
            sweep_values=(1.0, 2.0, 3.0),
        )
        rows, _ = run_experiment(config)
        for scheme in ("fpa-sub", "fpa-full"):
            rates = [r.mean_rate_bps_hz for r in rows if r.scheme == scheme]
            assert len(set(rates)) == 1

    def test_worker_count_does_not_change_output(self):
        serial = small_config(trials=3, workers=1)
        parallel = small_config(trials=3, workers=2)
        rows_a, _ = run_experiment(serial)
        rows_b, _ = run_experiment(parallel)
        assert rows_to_csv(rows_a) == rows_to_csv(rows_b)

    def test_rerun_is_byte_identical(self):
        config = small_config(trials=2, schemes=("fpa-sub", "ma-sub"))
        rows_a, _ = run_experiment(config)
        rows_b, _ = run_experiment(config)
        assert rows_to_csv(rows_a) == rows_to_csv(rows_b)

    def test_failure_threshold(self, monkeypatch):
        config = small_config(trials=2, schemes=("ma-sub",))

        def boom(*args, **kwargs):
            raise RuntimeError("synthetic failure")

        monkeypatch.setattr(experiments, "run_with_restarts", boom)
        with pytest.raises(ExperimentFailure) as info:
            run_experiment(config)
        records = info.value.records
        assert all(not r.ok for r in records)
        assert all("synthetic failure" in r.error for r in records)

    def test_isolated_failure_recorded_and_excluded(self, monkeypatch):
        config = small_config(trials=12, schemes=("fpa-sub",), failure_tolerance=0.2)
        real = experiments.run_with_restarts
        calls = {"n": 0}

        def flaky(tag, scenario, cfg, restarts=1):
            calls["n"] += 1
            if calls["n"] == 1:
                raise RuntimeError("one bad trial")
            return real(tag, scenario, cfg, restarts)

        monkeypatch.setattr(experiments, "run_with_restarts", flaky)
        rows, records = run_experiment(config)
        assert sum(1 for r in records if not r.ok) == 1
        assert rows[0].trials == 11


class TestAggregation:
    def test_matches_recomputation_from_raw(self):
        config = small_config(trials=4, schemes=("fpa-sub", "ma-sub"))
        rows, records = run_experiment(config)
        for row in rows:
            rates = np.array([
                r.sum_rate for r in records
                if r.ok and r.scheme == row.scheme
                and r.sweep_value == row.sweep_value
            ])
            assert row.mean_rate_bps_hz == pytest.approx(rates.mean(), abs=1e-12)
            expect_se = rates.std(ddof=1) / np.sqrt(len(rates))
            assert row.stderr == pytest.approx(expect_se, abs=1e-12)

    def test_rows_sorted_by_scheme_then_value(self):
        config = small_config(
            trials=1,
            schemes=("ma-sub", "fpa-sub"),
            sweep_axis="power_dbm",
            sweep_values=(10.0, 0.0),
        )
        rows, _ = run_experiment(config)
        keys = [(r.scheme, r.sweep_value) for r in rows]
        assert keys == sorted(keys)


class TestEmit:
    def test_empty_rows_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            emit_results([], "csv", tmp_path / "out.csv")

    def test_unknown_format_rejected(self, tmp_path):
        rows, _ = run_experiment(small_config(trials=1))
        with pytest.raises(ConfigurationError):
            emit_results(rows, "parquet", tmp_path / "out")

    def test_csv_header_and_round_trip(self, tmp_path):
        rows, _ = run_experiment(small_config(trials=2))
        csv_text = rows_to_csv(rows)
        header = csv_text.splitlines()[0]
        assert header == (
            "scheme,sweep_value,mean_rate_bps_hz,stderr,trials,"
            "mean_iters,mean_seconds"
        )
        doc = json.loads(rows_to_json(rows))
        for row, rec in zip(rows, doc["rows"]):
            for field in ("mean_rate_bps_hz", "stderr", "mean_seconds"):
                got = float(f"{rec[field]:.15g}")
                want = float(f"{getattr(row, field):.15g}")
                assert got == want
        # CSV carries repr precision, so parsing it back is lossless.
        line = csv_text.splitlines()[1].split(",")
        assert float(line[2]) == rows[0].mean_rate_bps_hz

    def test_write_and_unwritable_path(self, tmp_path):
        rows, _ = run_experiment(small_config(trials=1))
        out = tmp_path / "rows.csv"
        emit_results(rows, "csv", out)
        assert out.read_text().startswith("scheme,")
        with pytest.raises(OSError):
            emit_results(rows, "csv", tmp_path / "missing" / "rows.csv")
