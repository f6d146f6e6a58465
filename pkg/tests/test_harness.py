import numpy as np
import pytest
from scipy.special import ndtr

from riskbands import (
    GeneratorSpec,
    LossMatrix,
    MethodSpec,
    ParameterGrid,
    SeedRecord,
    conservatism,
    empirical_risk,
    gen_equicorrelated,
    miscoverage_anywhere,
    miscoverage_selected,
    oracle_sup_quantile,
    split_surrogate,
    surrogate_generator,
    wsr_band,
)
from riskbands.harness import CONSTANT, EQUICORRELATED

GRID = ParameterGrid.linspace(-3.0, 3.0, 41)


def spec_for(rho, grid=GRID):
    return GeneratorSpec(EQUICORRELATED, grid, rho=rho)


class TestGenerator:
    def test_truth_at_zero_is_half_for_all_rhos(self):
        g = ParameterGrid(np.array([0.0]))
        for rho in (-0.2, 0.2, 0.6):
            assert spec_for(rho, g).truth_values()[0] == 0.5

    def test_rho_range_validated(self):
        spec_for(-0.25)
        spec_for(1.0)
        with pytest.raises(ValueError):
            spec_for(-0.3)
        with pytest.raises(ValueError):
            spec_for(1.1)

    def test_losses_live_on_fifths(self):
        matrix = gen_equicorrelated(50, 0.2, GRID, SeedRecord(0))
        assert matrix.orientation == "nondecreasing"
        assert set(np.unique(matrix.values * 5)).issubset({0, 1, 2, 3, 4, 5})

    def test_marginal_risk_matches_normal_cdf(self):
        # 1e5 samples: empirical risk within 4 MC standard errors everywhere,
        # and within 0.005 of Phi(1) at t=1
        grid = ParameterGrid.linspace(-3.0, 3.0, 41)
        for rho in (-0.2, 0.6):
            matrix, truth = spec_for(rho, grid).realize(100_000, SeedRecord(11))
            curve = empirical_risk(matrix)
            se = np.sqrt(matrix.values.var(axis=0, ddof=1) / matrix.n)
            err = np.abs(curve.values - truth)
            assert np.all(err <= 4.0 * np.maximum(se, 1e-6))
        g1 = ParameterGrid(np.array([1.0]))
        matrix, _ = spec_for(0.2, g1).realize(100_000, SeedRecord(12))
        assert abs(empirical_risk(matrix).values[0] - ndtr(1.0)) < 0.005

    def test_batch_covariance_structure(self):
        # empirical covariance of the latent batches matches rho off-diagonal
        spec = spec_for(0.6)
        z = spec._draw_batches(200_000, SeedRecord(5).generator())
        cov = np.cov(z.T)
        assert np.allclose(np.diag(cov), 1.0, atol=0.02)
        off = cov[~np.eye(5, dtype=bool)]
        assert np.allclose(off, 0.6, atol=0.02)

    def test_negative_rho_sampling(self):
        spec = spec_for(-0.25)
        z = spec._draw_batches(100_000, SeedRecord(6).generator())
        off = np.cov(z.T)[~np.eye(5, dtype=bool)]
        assert np.allclose(off, -0.25, atol=0.02)

    def test_realize_deterministic(self):
        a, _ = spec_for(0.2).realize(20, SeedRecord(3))
        b, _ = spec_for(0.2).realize(20, SeedRecord(3))
        assert np.array_equal(a.values, b.values)

    def test_constant_family(self):
        spec = GeneratorSpec(CONSTANT, GRID, value=0.3)
        matrix, truth = spec.realize(10, SeedRecord(0))
        assert np.all(matrix.values == 0.3)
        assert np.all(truth == 0.3)

    def test_pair_has_interior_tradeoff(self):
        # the companion's population risk is 1 - Phi(t + shift), so the sum
        # of the two true risks dips strictly inside the grid
        spec = spec_for(0.2)
        primary, companion, _ = spec.realize_pair(5000, SeedRecord(9))
        assert companion.orientation == "nonincreasing"
        total = empirical_risk(primary).values + empirical_risk(companion).values
        interior = np.argmin(total)
        assert 0 < interior < len(GRID) - 1


class TestOracleSupQuantile:
    def test_constant_generator_is_exactly_zero(self):
        spec = GeneratorSpec(CONSTANT, GRID, value=0.25)
        assert oracle_sup_quantile(spec, 50, 0.1, runs=30, seed=SeedRecord(1)) == 0.0

    def test_decreases_with_n(self):
        spec = spec_for(0.2)
        q_small = oracle_sup_quantile(spec, 100, 0.1, runs=300, seed=SeedRecord(2))
        q_large = oracle_sup_quantile(spec, 400, 0.1, runs=300, seed=SeedRecord(2))
        assert q_large < q_small

    def test_reproducible(self):
        spec = spec_for(0.2)
        a = oracle_sup_quantile(spec, 100, 0.1, runs=50, seed=SeedRecord(3))
        b = oracle_sup_quantile(spec, 100, 0.1, runs=50, seed=SeedRecord(3))
        assert a == b


class TestMiscoverage:
    def test_vacuous_band_never_miscovers(self):
        # tiny n clamps the width so the band is 1 everywhere
        spec = GeneratorSpec(CONSTANT, GRID, value=0.9)
        rep = miscoverage_anywhere(MethodSpec("nasm", delta=0.1), spec, 2, 30, SeedRecord(4))
        assert rep.estimate == 0.0

    def test_zero_width_band_miscovers_nondegenerate_generator(self):
        # the empirical curve alone fails to dominate the truth somewhere in
        # essentially every run
        spec = spec_for(0.2)
        misses = 0
        for run in range(20):
            matrix, truth = spec.realize(200, SeedRecord(5).child(run))
            curve = empirical_risk(matrix)
            misses += bool((truth > curve.values).any())
        assert misses >= 19

    def test_selected_never_exceeds_anywhere_per_run(self):
        spec = spec_for(0.2)
        method = MethodSpec("rr", delta=0.1, B=100)
        seed = SeedRecord(6)
        any_tr, sel_tr = [], []
        miscoverage_anywhere(method, spec, 150, 40, seed, trace=any_tr)
        miscoverage_selected(method, spec, 150, 40, seed, r=0.1, trace=sel_tr)
        for a, s in zip(any_tr, sel_tr):
            assert a["run"] == s["run"]
            assert (not s["event"]) or a["event"]

    def test_selected_empty_counts_as_covered(self):
        # constant losses above r leave the selected set empty in every run
        spec = GeneratorSpec(CONSTANT, GRID, value=0.8)
        rep = miscoverage_selected(MethodSpec("pointwise", delta=0.1), spec, 20, 10,
                                   SeedRecord(7), r=0.1)
        assert rep.estimate == 0.0

    def test_reports_echo_configuration(self):
        spec = spec_for(0.2)
        rep = miscoverage_anywhere(MethodSpec("rr", delta=0.2, B=64), spec, 50, 5, 123)
        assert rep.config["method"] == "rr"
        assert rep.config["B"] == 64
        assert rep.config["rho"] == 0.2
        assert rep.config["seed"]["seed"] == 123
        assert rep.std_error == pytest.approx(
            np.sqrt(rep.estimate * (1 - rep.estimate) / rep.runs)
        )

    def test_pointwise_fast_path_matches_band_comparison(self):
        spec = spec_for(0.6)
        method = MethodSpec("pointwise", delta=0.1)
        seed = SeedRecord(8)
        for run in range(10):
            matrix, truth = spec.realize(60, seed.child(run, 0))
            fast = method.miscovers(matrix, truth, seed.child(run, 1))
            band = wsr_band(matrix, 0.1)
            slow = bool((truth > band.upper).any())
            assert fast == slow

    def test_bit_reproducible(self):
        spec = spec_for(0.2)
        method = MethodSpec("rr", delta=0.1, B=64)
        a = miscoverage_anywhere(method, spec, 80, 20, 99)
        b = miscoverage_anywhere(method, spec, 80, 20, 99)
        assert a.estimate == b.estimate

    def test_parallel_runs_match_serial(self):
        spec = spec_for(0.2)
        method = MethodSpec("rr", delta=0.1, B=64)
        a = miscoverage_anywhere(method, spec, 80, 20, 99, workers=1)
        b = miscoverage_anywhere(method, spec, 80, 20, 99, workers=4)
        assert a.estimate == b.estimate


class TestConservatism:
    def test_zero_width_band_at_truth_gives_zero(self):
        spec = GeneratorSpec(CONSTANT, GRID, value=0.0625)
        rep = conservatism(MethodSpec("rr", delta=0.1, B=32), spec, 30, 10,
                           SeedRecord(9), scheme="even-tradeoff")
        assert rep.estimate == 0.0
        assert rep.extra["excluded_runs"] == 0

    def test_nasm_dominates_rr_on_average(self):
        spec = spec_for(0.2)
        seed = SeedRecord(10)
        nasm = conservatism(MethodSpec("nasm", delta=0.1), spec, 1000, 20, seed)
        rr = conservatism(MethodSpec("rr", delta=0.1, B=200), spec, 1000, 20, seed)
        assert nasm.estimate >= rr.estimate

    def test_rrr_exclusions_counted(self):
        # RRR validity is the sublevel set; thresholds selected outside it
        # are excluded and reported
        spec = spec_for(0.2)
        rep = conservatism(MethodSpec("rrr", B=64), spec, 100, 15, SeedRecord(11),
                           scheme="elbow")
        assert rep.extra["excluded_runs"] >= 0
        assert rep.runs == 15


class TestSurrogate:
    def test_minimal_split(self):
        m = LossMatrix(GRID, np.random.default_rng(0).random((2, 41)))
        hold, samp = split_surrogate(m, SeedRecord(12))
        assert hold.n == 1 and samp.n == 1

    def test_split_deterministic_and_partitioning(self):
        m = LossMatrix(GRID, np.random.default_rng(1).random((9, 41)))
        h1, s1 = split_surrogate(m, SeedRecord(13))
        h2, s2 = split_surrogate(m, SeedRecord(13))
        assert np.array_equal(h1.values, h2.values)
        assert h1.n == 4 and s1.n == 5
        merged = np.vstack([h1.values, s1.values])
        assert np.array_equal(np.sort(merged, axis=0), np.sort(m.values, axis=0))

    def test_split_requires_two_rows(self):
        m = LossMatrix(GRID, np.random.default_rng(2).random((1, 41)))
        with pytest.raises(ValueError):
            split_surrogate(m, SeedRecord(14))

    def test_generator_resamples_sampling_half(self):
        base = LossMatrix(GRID, np.random.default_rng(3).random((40, 41)))
        gen = surrogate_generator(base)
        matrix, truth = gen.realize(25, SeedRecord(15))
        assert matrix.n == 25
        hold, samp = split_surrogate(base, SeedRecord(15).child(0))
        assert np.array_equal(truth, empirical_risk(hold).values)
        # every drawn row comes from the sampling half
        samp_rows = {tuple(r) for r in samp.values}
        assert all(tuple(r) in samp_rows for r in matrix.values)

    def test_metrics_run_on_surrogate(self):
        base = gen_equicorrelated(300, 0.2, GRID, SeedRecord(16))
        gen = surrogate_generator(base)
        rep = miscoverage_anywhere(MethodSpec("nasm", delta=0.1), gen, 50, 20, SeedRecord(17))
        assert 0.0 <= rep.estimate <= 1.0

    def test_paired_surrogate_supports_conservatism(self):
        rng = np.random.default_rng(20)
        base = LossMatrix(GRID, np.minimum.accumulate(rng.random((60, 41)), axis=1),
                          "nonincreasing")
        companion = LossMatrix(GRID, np.maximum.accumulate(rng.random((60, 41)), axis=1),
                               "nondecreasing")
        gen = surrogate_generator(base, companion=companion)
        rep = conservatism(MethodSpec("nasm", delta=0.1), gen, 30, 10, SeedRecord(21),
                           scheme="even-tradeoff", r=1.0)
        assert np.isfinite(rep.estimate)
        # the same resampled rows feed both matrices
        primary, paired, _ = gen.realize_pair(15, SeedRecord(22))
        again, paired2, _ = gen.realize_pair(15, SeedRecord(22))
        assert np.array_equal(primary.values, again.values)
        assert np.array_equal(paired.values, paired2.values)

    def test_surrogate_without_companion_rejects_pairs(self):
        base = gen_equicorrelated(40, 0.2, GRID, SeedRecord(23))
        gen = surrogate_generator(base)
        with pytest.raises(ValueError, match="companion"):
            gen.realize_pair(10, SeedRecord(24))


class TestMethodSpec:
    def test_upper_band_dispatch(self):
        matrix = gen_equicorrelated(60, 0.2, GRID, SeedRecord(18))
        seed = SeedRecord(19)
        for name in ("nasm", "rr", "rrr", "pointwise"):
            band = MethodSpec(name, B=64).upper_band(matrix, seed)
            assert band.upper is not None
            expected_tag = {"nasm": "nasm", "rr": "rr", "rrr": "rrr",
                            "pointwise": "pointwise"}[name]
            assert band.method == expected_tag

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            MethodSpec("bootstrap")
