"""Tests for permutation distances, the Borda family, influence, Kemeny and Mallows."""

import itertools

import numpy as np
import pytest
from scipy import stats

from ranksel.rankagg import (
    MallowsParams,
    RankingSet,
    borda,
    borda_theory_check,
    empirical_influence,
    kemeny_exact,
    kendall_tau,
    mallows_sample,
    mean_kendall_distance,
    minimum_influence_metric,
    partial_borda,
    robust_borda,
    simulate_outlier_impact,
    trim_by_influence,
)


def kendall_oracle(a, b):
    """Literal pairwise-disagreement count."""
    n = len(a)
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            if (a[i] - a[j]) * (b[i] - b[j]) < 0:
                count += 1
    return count


def random_ranking_set(rng, n_items, n_rankings):
    rankings = np.vstack(
        [rng.permutation(n_items) + 1 for _ in range(n_rankings)]
    )
    return RankingSet.from_rankings(rankings)


class TestKendallTau:
    def test_identity(self):
        assert kendall_tau([1, 2, 3], [1, 2, 3]) == 0

    def test_maximal_on_reverse(self):
        assert kendall_tau([1, 2, 3], [3, 2, 1]) == 3

    def test_hand_example(self):
        assert kendall_tau([1, 3, 2, 4], [2, 1, 3, 4]) == 2
        assert kendall_oracle([1, 3, 2, 4], [2, 1, 3, 4]) == 2

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 9))
            a = rng.permutation(n) + 1
            b = rng.permutation(n) + 1
            assert kendall_tau(a, b) == kendall_oracle(a, b)

    def test_long_inputs_use_merge_path(self):
        rng = np.random.default_rng(1)
        for _ in range(5):
            n = int(rng.integers(200, 400))
            a = rng.permutation(n) + 1
            b = rng.permutation(n) + 1
            assert kendall_tau(a, b) == kendall_oracle(a, b)

    def test_metric_properties(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(2, 8))
            a, b, c = (rng.permutation(n) + 1 for _ in range(3))
            dab, dba = kendall_tau(a, b), kendall_tau(b, a)
            assert dab == dba
            assert (dab == 0) == np.array_equal(a, b)
            assert dab <= kendall_tau(a, c) + kendall_tau(c, b)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            kendall_tau([1, 2, 3], [1, 2])


class TestBorda:
    def test_single_voter_returns_input(self):
        rset = RankingSet.from_rankings([[2, 3, 1, 4]])
        np.testing.assert_array_equal(borda(rset), [2, 3, 1, 4])

    def test_hand_point_count(self):
        # two voters [1,2,3], one voter [2,1,3]: points (2+2+1, 1+1+2, 0) = (5, 4, 0)
        rset = RankingSet.from_rankings([[1, 2, 3], [1, 2, 3], [2, 1, 3]])
        np.testing.assert_array_equal(borda(rset), [1, 2, 3])

    def test_unanimity(self):
        rset = RankingSet.from_rankings([[3, 1, 2]] * 5)
        np.testing.assert_array_equal(borda(rset), [3, 1, 2])

    def test_invariant_to_ranking_order(self):
        rng = np.random.default_rng(3)
        for seed in range(20):
            rset = random_ranking_set(rng, 5, 4)
            shuffled = RankingSet.from_rankings(
                rset.rankings[rng.permutation(4)]
            )
            np.testing.assert_array_equal(
                borda(rset, seed=seed), borda(shuffled, seed=seed)
            )


class TestPartialBorda:
    def test_k_equal_n_reduces_to_borda(self):
        rng = np.random.default_rng(4)
        for seed in range(100):
            rset = random_ranking_set(rng, int(rng.integers(2, 7)), int(rng.integers(1, 6)))
            np.testing.assert_array_equal(
                partial_borda(rset, k=rset.n_items, seed=seed),
                borda(rset, seed=seed),
            )

    def test_k_one_is_plurality(self):
        # item 2 ranked first most often wins under k=1
        rset = RankingSet.from_rankings(
            [[2, 1, 3], [2, 1, 3], [3, 1, 2], [1, 2, 3]]
        )
        agg = partial_borda(rset, k=1, seed=0)
        assert agg[1] == 1

    def test_item_below_k_gets_zero_points(self):
        # item 0 at rank k+1=3 everywhere earns nothing; others earn points
        rset = RankingSet.from_rankings([[3, 1, 2], [3, 2, 1]])
        agg = partial_borda(rset, k=2, seed=0)
        assert agg[0] == 3

    def test_k_out_of_range(self):
        rset = RankingSet.from_rankings([[1, 2, 3]])
        with pytest.raises(ValueError):
            partial_borda(rset, k=0)
        with pytest.raises(ValueError):
            partial_borda(rset, k=4)


def influence_oracle(rset, seed):
    """Literal recomputation of the influence definition via public ops."""

    def f(subset):
        agg = borda(subset, seed=seed)
        return np.mean([kendall_oracle(agg, row) for row in subset.rankings])

    return np.array(
        [f(rset) - f(rset.without(i)) for i in range(rset.n_rankings)]
    )


class TestEmpiricalInfluence:
    def test_all_identical_gives_zero(self):
        rset = RankingSet.from_rankings([[1, 3, 2]] * 4)
        np.testing.assert_array_equal(empirical_influence(rset), np.zeros(4))

    def test_outlier_has_maximal_influence(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            n = int(rng.integers(2, 6))
            m = int(rng.integers(2, 7))
            good = rng.permutation(n) + 1
            while True:
                bad = rng.permutation(n) + 1
                if not np.array_equal(bad, good):
                    break
            rankings = [good] * (m - 1) + [bad]
            rset = RankingSet.from_rankings(rankings)
            ei = empirical_influence(rset, seed=int(rng.integers(1000)))
            assert ei[-1] >= ei[:-1].max()

    def test_matches_literal_oracle(self):
        rng = np.random.default_rng(6)
        for seed in range(20):
            rset = random_ranking_set(rng, 4, 3)
            np.testing.assert_allclose(
                empirical_influence(rset, seed=seed),
                influence_oracle(rset, seed=seed),
            )

    def test_needs_two_rankings(self):
        with pytest.raises(ValueError):
            empirical_influence(RankingSet.from_rankings([[1, 2]]))


class TestTrimByInfluence:
    def test_discards_largest_gap_outlier(self):
        # three near-identical rankings and one reversal: the reversal goes
        rankings = [[1, 2, 3, 4], [1, 2, 4, 3], [2, 1, 3, 4], [4, 3, 2, 1]]
        rset = RankingSet.from_rankings(rankings, ["a", "b", "c", "d"])
        kept, discarded = trim_by_influence(rset, seed=0)
        assert discarded == ["d"]
        assert kept.metric_ids == ("a", "b", "c")

    def test_all_equal_discards_nothing(self):
        rset = RankingSet.from_rankings([[1, 2, 3]] * 4)
        kept, discarded = trim_by_influence(rset, seed=0)
        assert discarded == []
        assert kept.n_rankings == 4

    def test_two_rankings_never_trimmed(self):
        # with M=2 both removals leave a singleton, so EI is symmetric
        rng = np.random.default_rng(7)
        for _ in range(20):
            rset = random_ranking_set(rng, 5, 2)
            kept, discarded = trim_by_influence(rset, seed=0)
            assert discarded == []


class TestMinimumInfluenceMetric:
    def test_identical_majority_wins(self):
        rankings = [[1, 2, 3], [1, 2, 3], [3, 2, 1]]
        rset = RankingSet.from_rankings(rankings, ["a", "b", "c"])
        metric_id, ranking = minimum_influence_metric(rset, seed=0)
        assert metric_id in ("a", "b")
        np.testing.assert_array_equal(ranking, [1, 2, 3])

    def test_argmin_of_oracle(self):
        rng = np.random.default_rng(8)
        for seed in range(20):
            rset = random_ranking_set(rng, 4, 3)
            metric_id, _ = minimum_influence_metric(rset, seed=seed)
            ei = influence_oracle(rset, seed=seed)
            assert metric_id == rset.metric_ids[int(np.argmin(ei))]

    def test_tie_takes_first(self):
        rset = RankingSet.from_rankings([[1, 2], [2, 1]], ["x", "y"])
        metric_id, _ = minimum_influence_metric(rset, seed=0)
        assert metric_id == "x"


class TestRobustBorda:
    def test_no_trim_full_k_equals_borda(self):
        rng = np.random.default_rng(9)
        for seed in range(100):
            rset = random_ranking_set(rng, int(rng.integers(2, 7)), 2)
            np.testing.assert_array_equal(
                robust_borda(rset, k=rset.n_items, seed=seed),
                borda(rset, seed=seed),
            )

    def test_outlier_removed_before_aggregation(self):
        rng = np.random.default_rng(10)
        good = rng.permutation(6) + 1
        near = good.copy()
        near[[0, 1]] = near[[1, 0]]
        outlier = good[::-1].copy()
        rset = RankingSet.from_rankings(
            [good, good, near, outlier], ["a", "b", "c", "bad"]
        )
        kept, discarded = trim_by_influence(rset, seed=0)
        assert discarded == ["bad"]
        np.testing.assert_array_equal(
            robust_borda(rset, k=6, seed=0), borda(kept, seed=0)
        )

    def test_k_n_with_trim_equals_trimmed_borda(self):
        rng = np.random.default_rng(11)
        for seed in range(20):
            rset = random_ranking_set(rng, 5, 6)
            kept, _ = trim_by_influence(rset, seed=seed)
            np.testing.assert_array_equal(
                robust_borda(rset, k=5, seed=seed), borda(kept, seed=seed)
            )


def kemeny_exhaustive(rset):
    """Minimize the objective by brute force over all N! permutations."""
    n = rset.n_items
    best_cost, best_perm = None, None
    for ordering in itertools.permutations(range(n)):
        ranks = np.empty(n, dtype=int)
        ranks[list(ordering)] = np.arange(1, n + 1)
        cost = sum(kendall_oracle(ranks, row) for row in rset.rankings)
        if best_cost is None or cost < best_cost:
            best_cost, best_perm = cost, ranks
    return best_perm, best_cost / rset.n_rankings


class TestKemenyExact:
    def test_unanimity(self):
        rset = RankingSet.from_rankings([[2, 1, 3]] * 4)
        np.testing.assert_array_equal(kemeny_exact(rset), [2, 1, 3])
        assert mean_kendall_distance([2, 1, 3], rset) == 0.0

    def test_matches_exhaustive_search(self):
        rng = np.random.default_rng(12)
        for _ in range(40):
            rset = random_ranking_set(
                rng, int(rng.integers(2, 6)), int(rng.integers(1, 6))
            )
            dp = kemeny_exact(rset)
            _, oracle_obj = kemeny_exhaustive(rset)
            assert mean_kendall_distance(dp, rset) == pytest.approx(oracle_obj)

    def test_condorcet_winner_ranked_first(self):
        # item 1 beats every other item pairwise in a majority of rankings
        rankings = [
            [1, 2, 3, 4],
            [1, 3, 2, 4],
            [1, 4, 3, 2],
            [2, 1, 4, 3],
            [1, 2, 4, 3],
        ]
        rset = RankingSet.from_rankings(rankings)
        assert kemeny_exact(rset)[0] == 1

    def test_borda_objective_never_beats_kemeny(self):
        rng = np.random.default_rng(13)
        for seed in range(30):
            rset = random_ranking_set(rng, 5, 4)
            kem = mean_kendall_distance(kemeny_exact(rset), rset)
            bor = mean_kendall_distance(borda(rset, seed=seed), rset)
            assert bor >= kem

    def test_size_guard(self):
        rng = np.random.default_rng(14)
        rset = random_ranking_set(rng, 13, 2)
        with pytest.raises(ValueError, match="borda"):
            kemeny_exact(rset)


def exact_mallows_pmf(center, theta):
    """Normalize exp(-theta * d) over all permutations by enumeration."""
    n = len(center)
    perms, weights = [], []
    for ordering in itertools.permutations(range(n)):
        ranks = np.empty(n, dtype=int)
        ranks[list(ordering)] = np.arange(1, n + 1)
        perms.append(tuple(ranks))
        weights.append(np.exp(-theta * kendall_oracle(ranks, center)))
    weights = np.array(weights)
    return perms, weights / weights.sum()


class TestMallowsSample:
    def test_uniform_at_theta_zero(self):
        params = MallowsParams(center=np.array([1, 2, 3]), theta=0.0)
        rset = mallows_sample(params, count=100_000, seed=0)
        counts = {}
        for row in rset.rankings:
            counts[tuple(row)] = counts.get(tuple(row), 0) + 1
        assert len(counts) == 6
        for c in counts.values():
            assert abs(c / 100_000 - 1 / 6) < 0.02

    def test_high_theta_concentrates(self):
        center = np.array([3, 1, 4, 2, 5])
        params = MallowsParams(center=center, theta=5.0)
        rset = mallows_sample(params, count=5000, seed=1)
        close = sum(
            kendall_tau(row, center) <= 1 for row in rset.rankings
        )
        assert close / 5000 >= 0.99

    def test_chi_square_fit_against_exact_pmf(self):
        center = np.array([2, 4, 1, 3])
        for theta, seed in [(0.5, 2), (1.0, 3)]:
            params = MallowsParams(center=center, theta=theta)
            rset = mallows_sample(params, count=100_000, seed=seed)
            perms, pmf = exact_mallows_pmf(center, theta)
            index = {p: i for i, p in enumerate(perms)}
            observed = np.zeros(len(perms))
            for row in rset.rankings:
                observed[index[tuple(row)]] += 1
            _, p_value = stats.chisquare(observed, pmf * 100_000)
            assert p_value > 0.01

    def test_negative_theta_rejected(self):
        with pytest.raises(ValueError):
            MallowsParams(center=np.array([1, 2]), theta=-0.1)


class TestBordaTheoryCheck:
    def test_error_below_bound_and_monotone(self):
        rows = borda_theory_check([1, 5, 10, 20], epsilon=0.4, trials=5000, seed=0)
        errors = [r.empirical_error for r in rows]
        for r in rows:
            noise = 3 * np.sqrt(r.empirical_error * (1 - r.empirical_error) / 5000)
            assert r.empirical_error <= r.bound + noise
        assert all(errors[i] >= errors[i + 1] for i in range(len(errors) - 1))

    def test_single_voter_error_matches_accuracy(self):
        (row,) = borda_theory_check([1], epsilon=0.4, trials=20_000, seed=1)
        # single voter errs with probability 1 - q = 0.3
        std = np.sqrt(0.3 * 0.7 / 20_000)
        assert abs(row.empirical_error - 0.3) <= 3 * std


class TestSimulateOutlierImpact:
    def test_records_cover_grid_and_noise_hurts(self):
        records = simulate_outlier_impact(
            n_items=20, n_rankings=20, theta=0.2, trials=5, seed=0
        )
        fractions = sorted({r.fraction for r in records})
        assert fractions == [0.0, 0.1, 0.2, 0.3, 0.4]
        means = [
            np.mean([r.median_distance for r in records if r.fraction == f])
            for f in fractions
        ]
        assert means[-1] > means[0]

    def test_influence_tracks_distance_to_center(self):
        records = simulate_outlier_impact(
            n_items=20, n_rankings=20, theta=0.2, trials=5, seed=1
        )
        ei = np.concatenate([r.influence for r in records])
        dist = np.concatenate([r.distance_to_center for r in records])
        rho, p = stats.spearmanr(ei, dist)
        assert rho > 0 and p < 0.01
