import math

import numpy as np
import pytest
from scipy import stats

from oracles import exact_depth1_expectation
from rrdoe.poll import ScenarioParams, build_spine_poll
from rrdoe.simulator import (DegeneratePopulationError, InsufficientDataError,
                             NonInvertibleError, ResponseTally, assign_truth, collect_responses,
                             estimate_target, mape, randomize_one, response_probabilities,
                             run_setting, simulate_poll)

BASELINE = dict(pr_truth=0.5, depth=3, n_alts=6, target_weight=0.5, population=50500,
                answers_fraction=0.5)


def baseline(**changes):
    return ScenarioParams(**{**BASELINE, **changes})


class TestAssignTruth:
    def test_depth_one_split(self):
        poll = build_spine_poll(1, 2, 0.9)
        pop = assign_truth(poll, 1000, 0.5)
        assert pop.groups == (((("q1", "q1a1"),), 500), ((("q1", "q1a2"),), 500))

    def test_remainder_goes_to_earlier_siblings(self):
        poll = build_spine_poll(2, 4, 0.5)
        pop = assign_truth(poll, 10, 0.3)
        counts = [c for _, c in pop.groups]
        assert counts == [3, 3, 2, 2]
        assert pop.true_fraction == 0.3
        for path, _ in pop.groups:
            assert path[0] == ("q1", "q1a1")

    def test_rounding(self):
        poll = build_spine_poll(1, 2, 0.5)
        assert assign_truth(poll, 7, 0.5).true_target_count == 4  # 3.5 rounds up

    @pytest.mark.parametrize("pop,frac", [(3, 0.1), (3, 0.9), (1, 0.5)])
    def test_degenerate(self, pop, frac):
        with pytest.raises(DegeneratePopulationError):
            assign_truth(build_spine_poll(1, 2, 0.5), pop, frac)


class TestRandomizeOne:
    def test_report_probability(self):
        q = build_spine_poll(1, 2, 0.5).root
        assert response_probabilities(q, "q1a1", 0.5)[0] == pytest.approx(0.75)

    def test_empirical_rate(self):
        q = build_spine_poll(1, 2, 0.5).root
        rng = np.random.default_rng(123)
        n = 40000
        hits = sum(randomize_one(q, "q1a1", rng, 0.5) == "q1a1" for _ in range(n))
        assert abs(hits / n - 0.75) < 4 * math.sqrt(0.75 * 0.25 / n)

    def test_truthful(self):
        q = build_spine_poll(1, 5, 0.3).root
        rng = np.random.default_rng(0)
        assert all(randomize_one(q, "q1a4", rng, 1.0) == "q1a4" for _ in range(100))


class TestEstimator:
    def test_examples(self):
        poll = build_spine_poll(1, 2, 0.5)
        tally = ResponseTally({"q1": (100, {"q1a1": 75, "q1a2": 25})})
        assert estimate_target(poll, tally, 0.5) == pytest.approx(1.0)
        skewed = build_spine_poll(1, 2, 0.9)
        low = ResponseTally({"q1": (100, {"q1a1": 80, "q1a2": 20})})
        assert estimate_target(skewed, low, 0.1) == pytest.approx(-0.1)

    def test_truthful_returns_reported_fraction(self):
        poll = build_spine_poll(2, 3, 0.2)
        tally = ResponseTally({"q1": (50, {"q1a1": 20, "q1a2": 20, "q1a3": 10}),
                               "q2": (20, {"q2a1": 5, "q2a2": 10, "q2a3": 5})})
        assert estimate_target(poll, tally, 1.0) == pytest.approx(0.4 * 0.25)

    def test_errors(self):
        poll = build_spine_poll(2, 2, 0.5)
        with pytest.raises(NonInvertibleError):
            estimate_target(poll, ResponseTally({}), 0.0)
        tally = ResponseTally({"q1": (10, {"q1a1": 0, "q1a2": 10})})
        with pytest.raises(InsufficientDataError):
            estimate_target(poll, tally, 0.5)

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("w", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("alts", [2, 3])
    def test_unbiased_by_enumeration(self, p, w, alts):
        for pop in range(2, 6 if alts == 3 else 7):
            for t in range(1, pop):
                expected, mass = exact_depth1_expectation(pop, t, alts, w, p)
                assert mass == pytest.approx(1.0, abs=1e-12)
                assert abs(expected - t / pop) <= 1e-12


class TestCollect:
    def test_expected_target_reports_by_enumeration(self):
        import itertools
        poll = build_spine_poll(1, 2, 0.5)
        pop = assign_truth(poll, 4, 0.5)
        truths = [0 if path[-1][1] == "q1a1" else 1 for path in pop.assignments()]
        expect = 0.0
        for reports in itertools.product((0, 1), repeat=4):
            prob = math.prod(0.5 * (r == t) + 0.25 for t, r in zip(truths, reports))
            expect += prob * reports.count(0)
        assert expect == pytest.approx(2.0, abs=1e-12)
        probs = [response_probabilities(poll.root, "q1a1" if t == 0 else "q1a2", 0.5)[0]
                 for t in truths]
        assert sum(probs) == pytest.approx(2.0, abs=1e-12)

    def test_truthful_tallies_equal_truth(self):
        poll = build_spine_poll(2, 3, 0.5)
        pop = assign_truth(poll, 90, 0.2)
        tally = collect_responses(poll, pop, 1.0, np.random.default_rng(0))
        assert tally.reported("q1", "q1a1") == 90
        assert tally.reported("q2", "q2a1") == 18
        assert tally.reported("q2", "q2a2") == 36

    def test_grouped_matches_per_respondent_in_distribution(self):
        poll = build_spine_poll(2, 3, 0.4)
        pop = assign_truth(poll, 60, 0.25)
        p = 0.6
        reps = 300
        grouped = np.array([
            collect_responses(poll, pop, p, np.random.default_rng(s)).reported("q2", "q2a1")
            for s in range(reps)])
        literal = np.array([
            collect_responses(poll, pop, p, np.random.default_rng(10_000 + s),
                              per_respondent=True).reported("q2", "q2a1")
            for s in range(reps)])
        # exact expectation: reach q2 by reporting q1a1, then report q2a1
        q1 = {"t": p + (1 - p) * 0.4, "o": p + (1 - p) * 0.4}
        q2 = {"t": p + (1 - p) * 0.4, "o": (1 - p) * 0.4}
        expect = 15 * q1["t"] * q2["t"] + 45 * q1["o"] * q2["o"]
        for sample in (grouped, literal):
            se = sample.std(ddof=1) / math.sqrt(reps)
            assert abs(sample.mean() - expect) < 4.5 * se

    def test_answered_counts_conserve_population(self):
        poll = build_spine_poll(3, 4, 0.5)
        pop = assign_truth(poll, 500, 0.4)
        tally = collect_responses(poll, pop, 0.3, np.random.default_rng(1))
        assert tally.answered("q1") == 500
        assert tally.answered("q2") == tally.reported("q1", "q1a1")
        assert tally.answered("q3") == tally.reported("q2", "q2a1")


class TestSimulate:
    def test_mape_example(self):
        assert mape(0.5, [0.25, 0.75]) == pytest.approx(50.0)

    def test_mape_formula(self):
        assert mape(0.5, [0.4, 0.6, 0.5]) == pytest.approx(100 * (0.1 + 0.1) / 3 / 0.5)

    def test_truthful_is_exact(self):
        r = run_setting(baseline(pr_truth=1.0), n_reps=5, seed=3)
        assert r.mape == 0.0
        assert all(e == r.true_fraction for e in r.estimates)

    def test_deterministic(self):
        a = run_setting(baseline(), 10, 7)
        b = run_setting(baseline(), 10, 7)
        assert a == b
        assert run_setting(baseline(), 10, 8).estimates != a.estimates

    def test_baseline_finite(self):
        r = run_setting(baseline(), 30, 0)
        assert math.isfinite(r.mape) and r.mape >= 0
        assert r.true_fraction == pytest.approx(25250 / 50500)

    def test_starved_chain_scores_zero(self):
        # with p tiny and w tiny almost no one reaches the last question
        poll = build_spine_poll(5, 2, 0.1)
        pop = assign_truth(poll, 1000, 0.1)
        r = simulate_poll(poll, pop, 0.1, 5, 0)
        assert math.isfinite(r.mape)

    def test_non_invertible(self):
        with pytest.raises(NonInvertibleError):
            run_setting(baseline(pr_truth=0.0), 1, 0)

    def test_noise_decay_depth_one(self):
        def cell(pop, s):
            return run_setting(ScenarioParams(0.5, 1, 2, 0.5, pop, 0.5), 30, s).mape
        big = [cell(100000, s) for s in range(30)]
        small = [cell(1000, s) for s in range(30)]
        assert stats.ttest_ind(big, small, equal_var=False, alternative="less").pvalue < 0.01

    @pytest.mark.parametrize("change,better,worse", [
        ("pr_truth", 0.9, 0.1),
        ("population", 100000, 1000),
    ])
    def test_trend(self, change, better, worse):
        good = [run_setting(baseline(**{change: better}), 30, s).mape for s in range(30)]
        bad = [run_setting(baseline(**{change: worse}), 30, s).mape for s in range(30)]
        assert stats.ttest_ind(good, bad, equal_var=False, alternative="less").pvalue < 0.01
