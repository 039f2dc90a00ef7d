import csv
import io
import math

import numpy as np
import pytest

from rdsa.exceptions import DomainError, UnsupportedDiagnosticError
from rdsa.harness import (
    COLUMNS,
    ExperimentConfig,
    RunResult,
    emit_results,
    format_results,
    parameter_error,
    parse_results,
    rate_diagnostics,
    run_experiment,
    run_single,
    summarize,
)


class TestParameterError:
    def test_examples(self):
        assert parameter_error([0.0, 0.0], [1.0, 1.0], [0.0, 0.0]) == 0.0
        assert parameter_error([1.0, 1.0], [1.0, 1.0], [0.0, 0.0]) == 1.0
        assert parameter_error([0.1, 0.1], [1.0, 1.0], [0.0, 0.0]) == pytest.approx(0.01)

    def test_degenerate_start(self):
        with pytest.raises(ZeroDivisionError):
            parameter_error([1.0], [2.0], [2.0])


def small_config(**kw):
    base = dict(objective="quadratic", dim=3, sigma=0.01, budget=1200,
                algorithms=("1SPSA", "2RDSA-Perm-DP"), replications=3, base_seed=5)
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_seeds_xor(self):
        assert small_config(base_seed=6, replications=4).seeds() == [6, 7, 4, 5]

    def test_algos_from_string(self):
        assert small_config(algorithms="1SPSA, 2SPSA").algorithms == ("1SPSA", "2SPSA")

    @pytest.mark.parametrize(
        "kw",
        [dict(replications=0), dict(budget=-1), dict(algorithms=("foo",)), dict(objective="ackley"),
         dict(sigma=-1.0), dict(dim=0), dict(schedules={"gamma": 1}), dict(format="xml")],
    )
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            small_config(**kw)


class TestRunExperiment:
    def test_rows_sorted_and_within_budget(self):
        results, summaries = run_experiment(small_config())
        assert [(r.algorithm, r.seed) for r in results] == sorted((r.algorithm, r.seed) for r in results)
        assert len(results) == 6 and len(summaries) == 2
        assert all(r.measurements <= r.budget for r in results)
        assert all(r.param_error >= 0 for r in results)

    def test_tau_matches_accounting(self):
        results, _ = run_experiment(small_config())
        taus = {r.algorithm: r.tau for r in results}
        assert taus == {"1SPSA": 600, "2RDSA-Perm-DP": (1200 - 240) // 9}

    def test_zero_budget(self):
        results, summaries = run_experiment(small_config(sigma=0.0, budget=0, algorithms=("1SPSA",)))
        assert all(r.tau == 0 and r.param_error == 1.0 and r.flagged for r in results)

    def test_lex_no_update_is_flagged_not_dropped(self):
        results, _ = run_experiment(small_config(dim=6, algorithms=("1RDSA-Lex-DP",)))
        assert len(results) == 3 and all(r.flagged and r.param_error == 1.0 for r in results)

    def test_schedule_override(self):
        cfg = small_config(algorithms=("1SPSA",), schedules={"a_offset": 0.0}, replications=1)
        base = small_config(algorithms=("1SPSA",), replications=1)
        assert run_single(cfg, "1SPSA", 5).param_error != run_single(base, "1SPSA", 5).param_error

    def test_failure_is_recorded(self, monkeypatch):
        import rdsa.harness as h

        def boom(*a, **k):
            raise FloatingPointError("nan step")

        monkeypatch.setattr(h, "run_algorithm", boom)
        results, summaries = run_experiment(small_config(algorithms=("1SPSA",)))
        assert all(math.isnan(r.param_error) and r.error for r in results)
        assert summaries[0].n == 0

    def test_parallel_matches_serial(self):
        serial = format_results(run_experiment(small_config())[0])
        parallel = format_results(run_experiment(small_config(n_jobs=2))[0])
        assert serial == parallel

    def test_trajectory(self):
        r = run_single(small_config(), "1SPSA", 0, keep_trajectory=True)
        assert len(r.trajectory) == r.tau
        assert r.trajectory[-1][1] == pytest.approx(r.param_error)


@pytest.fixture(scope="module")
def results():
    return run_experiment(small_config())[0]


class TestEmit:
    def test_header_and_row_count(self, results):
        rows = list(csv.reader(io.StringIO(format_results(results))))
        assert rows[0] == ["algorithm", "seed", "dim", "sigma", "budget", "tau", "measurements", "param_error"]
        assert tuple(rows[0]) == COLUMNS
        assert len(rows) == 1 + 6 + 2

    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_round_trip(self, results, fmt):
        runs, summaries = parse_results(format_results(results, fmt), fmt)
        assert runs == results
        for s, t in zip(summaries, summarize(results)):
            assert (s.algorithm, s.mean, s.stderr) == (t.algorithm, t.mean, t.stderr)

    def test_summary_recomputable(self, results):
        runs, summaries = parse_results(format_results(results))
        for s in summaries:
            errs = np.array([r.param_error for r in runs if r.algorithm == s.algorithm])
            assert abs(errs.mean() - s.mean) <= 1e-12
            assert abs(errs.std(ddof=1) / np.sqrt(errs.size) - s.stderr) <= 1e-12

    def test_bit_identical(self, results, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_results(results, "csv", a)
        emit_results(list(reversed(results)), "csv", b)
        assert a.read_bytes() == b.read_bytes()

    def test_nan_round_trip(self):
        r = [RunResult("1SPSA", 0, 2, 0.1, 10, 0, 0, math.nan, True, "boom")]
        for fmt in ("csv", "json"):
            runs, _ = parse_results(format_results(r, fmt), fmt)
            assert math.isnan(runs[0].param_error)

    def test_empty(self):
        with pytest.raises(DomainError):
            format_results([])

    def test_unwritable(self, results, tmp_path):
        with pytest.raises(OSError):
            emit_results(results, "csv", tmp_path / "missing" / "out.csv")

    def test_bad_header(self):
        with pytest.raises(DomainError):
            parse_results("a,b\n1,2\n")


class TestRates:
    def test_thm5_first_step(self):
        d = rate_diagnostics("thm5", n_min=1, n_max=5, points=5)
        # b_1 = 1: the first average replaces H_bar_0 = I entirely
        assert d.series[0] == pytest.approx(0.0, abs=1e-25)
        assert d.max_reference_gap <= 1e-10

    def test_thm5_slope_with_partial_first_step(self):
        d = rate_diagnostics("thm5", b0=0.1)
        assert d.slope == pytest.approx(-2 * 0.1 / 0.4, rel=0.1)
        assert d.max_reference_gap <= 1e-10
        assert np.all(np.diff(d.gamma) > 0)

    def test_thm5_requires_noise_free(self):
        with pytest.raises(UnsupportedDiagnosticError):
            rate_diagnostics("thm5", sigma=0.1)

    @pytest.mark.parametrize("kind", ["thm3", "thm5"])
    def test_non_quadratic_unsupported(self, kind):
        with pytest.raises(UnsupportedDiagnosticError):
            rate_diagnostics(kind, objective="rastrigin")

    def test_unknown_kind(self):
        with pytest.raises(DomainError):
            rate_diagnostics("thm9")

    def test_thm3_small(self):
        d = rate_diagnostics("thm3", reps=8, n_max=2000, n_min=50, points=8)
        assert d.mu == pytest.approx(0.2)
        assert d.mu * d.c > 0.5
        assert -0.8 < d.slope < -0.2
        assert np.all(np.diff(d.gamma) > 0)
        assert set(d.to_dict()) >= {"mu", "c", "delta0", "gamma", "series", "slope"}
