"""Permutation distances, the Borda family, empirical influence, exact Kemeny,
and Mallows-model sampling.

A ranking is a 1-based rank array: ``ranks[i]`` is the rank of item i and
rank 1 is the best. All aggregation operations break point ties uniformly
at random as a function of an explicit seed.
"""

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .data import derive_seed, rank_from_values
from .validation import check_permutation

KEMENY_MAX_ITEMS = 12


@dataclass(frozen=True)
class RankingSet:
    """A collection of M rankings over the same N items, one per metric."""

    rankings: np.ndarray
    metric_ids: tuple

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.rankings))
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError("rankings must be a non-empty (M, N) array")
        arr = np.vstack([check_permutation(row, n=arr.shape[1]) for row in arr])
        arr.setflags(write=False)
        object.__setattr__(self, "rankings", arr)
        ids = tuple(str(i) for i in self.metric_ids)
        if len(ids) != arr.shape[0]:
            raise ValueError(
                f"{len(ids)} metric ids for {arr.shape[0]} rankings"
            )
        if len(set(ids)) != len(ids):
            raise ValueError("metric ids must be unique")
        object.__setattr__(self, "metric_ids", ids)

    @classmethod
    def from_rankings(cls, rankings, metric_ids=None):
        rankings = list(rankings)
        if metric_ids is None:
            metric_ids = [f"r{i}" for i in range(len(rankings))]
        return cls(rankings=np.asarray(rankings), metric_ids=tuple(metric_ids))

    @property
    def n_rankings(self):
        return self.rankings.shape[0]

    @property
    def n_items(self):
        return self.rankings.shape[1]

    def without(self, index):
        """Copy of the set with one ranking removed."""
        keep = [i for i in range(self.n_rankings) if i != index]
        return RankingSet(
            rankings=self.rankings[keep],
            metric_ids=tuple(self.metric_ids[i] for i in keep),
        )


# ---------------------------------------------------------------------------
# Kendall's tau distance
# ---------------------------------------------------------------------------

_BRUTE_FORCE_LIMIT = 128


def _count_inversions(seq):
    """Number of pairs i < j with seq[i] > seq[j]; merge-count for long inputs."""
    n = seq.size
    if n < 2:
        return 0
    if n <= _BRUTE_FORCE_LIMIT:
        return int(np.triu(seq[:, None] > seq[None, :], k=1).sum())
    sorted_seq, count = _merge_count(seq)
    return count


def _merge_count(seq):
    n = seq.size
    if n <= _BRUTE_FORCE_LIMIT:
        return np.sort(seq), int(np.triu(seq[:, None] > seq[None, :], k=1).sum())
    mid = n // 2
    left, a = _merge_count(seq[:mid])
    right, b = _merge_count(seq[mid:])
    # cross pairs: for every right element, the left elements exceeding it
    pos = np.searchsorted(left, right, side="right")
    cross = int((left.size - pos).sum())
    return np.sort(np.concatenate((left, right))), a + b + cross


def kendall_tau(a, b):
    """Exact count of pairwise disagreements between two rankings.

    Ranges over [0, N(N-1)/2]; 0 iff the rankings are identical.
    """
    a = check_permutation(a, name="a")
    b = check_permutation(b, n=a.shape[0], name="b")
    order = np.argsort(a)
    return _count_inversions(b[order])


def _distances_to_set(ranks, rankings):
    """Kendall distances from one ranking to each row of a (M, N) matrix."""
    m, n = rankings.shape
    if n <= _BRUTE_FORCE_LIMIT:
        sign_a = np.sign(ranks[:, None] - ranks[None, :])
        sign_b = np.sign(rankings[:, :, None] - rankings[:, None, :])
        disc = (sign_a[None, :, :] * sign_b) < 0
        return disc.sum(axis=(1, 2)) // 2
    return np.array([kendall_tau(ranks, row) for row in rankings])


def mean_kendall_distance(ranks, ranking_set):
    """Kemeny objective: mean Kendall distance from ``ranks`` to the set."""
    ranks = check_permutation(ranks, n=ranking_set.n_items)
    return float(_distances_to_set(ranks, ranking_set.rankings).mean())


# ---------------------------------------------------------------------------
# Borda family
# ---------------------------------------------------------------------------


def _borda_points(rankings, top_k=None):
    m, n = rankings.shape
    points = n - rankings
    if top_k is not None:
        points = np.where(rankings <= top_k, points, 0)
    return points.sum(axis=0)


def _borda_matrix(rankings, seed, top_k=None):
    points = _borda_points(rankings, top_k=top_k).astype(float)
    return rank_from_values(points, "higher_is_better", seed=seed)


def borda(ranking_set, seed=0):
    """Borda aggregation: item i earns (N - rank) points from every ranking.

    Items are ranked by descending total points; ties break uniformly at
    random as a function of ``seed``.
    """
    return _borda_matrix(ranking_set.rankings, seed)


def partial_borda(ranking_set, k, seed=0):
    """Top-k Borda: points only flow from rankings placing the item in their top k.

    ``k = N`` reduces exactly to :func:`borda`.
    """
    n = ranking_set.n_items
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    return _borda_matrix(ranking_set.rankings, seed, top_k=k)


# ---------------------------------------------------------------------------
# Empirical influence and robust variants
# ---------------------------------------------------------------------------


def _mean_distance_to_borda(rankings, seed):
    agg = _borda_matrix(rankings, seed)
    return _distances_to_set(agg, rankings).mean()


def empirical_influence(ranking_set, seed=0):
    """Impact of each ranking on the Borda solution.

    EI(sigma_i) = f(S) - f(S without sigma_i), where f(A) is the mean
    Kendall distance from Borda(A) to the members of A. The same seed
    resolves Borda ties in all M + 1 evaluations, so differences reflect
    the removal of a ranking rather than tie-break noise. High positive
    EI flags outlier rankings.
    """
    rankings = ranking_set.rankings
    m = rankings.shape[0]
    if m < 2:
        raise ValueError(f"need at least 2 rankings, got {m}")
    f_full = _mean_distance_to_borda(rankings, seed)
    out = np.empty(m)
    for i in range(m):
        rest = np.delete(rankings, i, axis=0)
        out[i] = f_full - _mean_distance_to_borda(rest, seed)
    return out


def trim_by_influence(ranking_set, seed=0):
    """Drop the high-influence cluster of rankings.

    Splits the M scalar EI values into two clusters by single linkage;
    in one dimension this cuts the sorted values at their largest gap.
    The cluster with the higher mean EI (the upper side of the cut) is
    discarded. If all EI values are equal nothing is discarded.

    Returns
    -------
    (RankingSet, list of str)
        The kept rankings (original order) and the discarded metric ids.
    """
    ei = empirical_influence(ranking_set, seed=seed)
    order = np.argsort(ei, kind="stable")
    gaps = np.diff(ei[order])
    if gaps.size == 0 or gaps.max() <= 0:
        return ranking_set, []
    cut = int(np.argmax(gaps))
    bad = set(order[cut + 1 :].tolist())
    keep = [i for i in range(ranking_set.n_rankings) if i not in bad]
    kept = RankingSet(
        rankings=ranking_set.rankings[keep],
        metric_ids=tuple(ranking_set.metric_ids[i] for i in keep),
    )
    discarded = [ranking_set.metric_ids[i] for i in sorted(bad)]
    return kept, discarded


def minimum_influence_metric(ranking_set, seed=0):
    """The single ranking with minimal empirical influence.

    Ties resolve to the earliest metric in the ranking set, which the
    metric pipeline orders by catalog position.

    Returns
    -------
    (str, ndarray)
        The winning metric id and its ranking.
    """
    ei = empirical_influence(ranking_set, seed=seed)
    best = int(np.argmin(ei))
    return ranking_set.metric_ids[best], ranking_set.rankings[best].copy()


def robust_borda(ranking_set, k, seed=0):
    """Top-k Borda over the rankings surviving the influence trim."""
    kept, _ = trim_by_influence(ranking_set, seed=seed)
    return partial_borda(kept, k, seed=seed)


# ---------------------------------------------------------------------------
# Exact Kemeny aggregation
# ---------------------------------------------------------------------------


def _preference_counts(rankings):
    """prefer[i, j] = number of rankings placing item i above item j."""
    less = rankings[:, :, None] < rankings[:, None, :]
    return less.sum(axis=0).astype(np.int64)


def _check_linear_order(ranks, prefer, expected_cost):
    """Validate the solution against the binary-program formulation.

    The order indicators x_ij = [rank_i < rank_j] must satisfy
    anti-symmetry/totality (x_ij + x_ji = 1), transitivity
    (x_ij + x_jk + x_ki >= 1 over distinct triples), and the objective
    sum of prefer[j, i] * x_ij must equal the DP's cost.
    """
    n = ranks.shape[0]
    x = (ranks[:, None] < ranks[None, :]).astype(int)
    off = ~np.eye(n, dtype=bool)
    if not np.array_equal((x + x.T)[off], np.ones(n * n - n, dtype=int)):
        raise RuntimeError("kemeny solution violates totality")
    for i in range(n):
        for j in range(n):
            for k in range(n):
                if i != j != k and i != k:
                    if x[i, j] + x[j, k] + x[k, i] < 1:
                        raise RuntimeError("kemeny solution violates transitivity")
    cost = int((prefer.T * x).sum())
    if cost != expected_cost:
        raise RuntimeError(
            f"kemeny objective mismatch: {cost} != {expected_cost}"
        )


def kemeny_exact(ranking_set):
    """Exact Kemeny ranking: minimizes mean Kendall distance to the set.

    Solved by dynamic programming over item subsets in O(2^N * N^2);
    guarded at N <= 12. Among optimal solutions, the one whose
    best-to-worst item sequence is lexicographically smallest is
    returned. The result is validated against the binary-linear-program
    constraints (totality, transitivity, objective value).
    """
    n = ranking_set.n_items
    if n > KEMENY_MAX_ITEMS:
        raise ValueError(
            f"exact Kemeny is limited to N <= {KEMENY_MAX_ITEMS} items "
            f"(got {n}); use borda() for larger sets"
        )
    rankings = ranking_set.rankings
    prefer = _preference_counts(rankings)
    col_sums = prefer.sum(axis=0)
    full = (1 << n) - 1
    items = range(n)

    def append_costs(mask):
        # cost of placing item u directly below the items in mask: one unit
        # per ranking that prefers a still-unplaced item over u
        placed = [v for v in items if mask >> v & 1]
        return col_sums - prefer[placed].sum(axis=0) if placed else col_sums.copy()

    # best[mask] = min cost of ordering the complement of mask below it
    best = np.zeros(full + 1, dtype=np.int64)
    for mask in range(full - 1, -1, -1):
        costs = append_costs(mask)
        best[mask] = min(
            costs[u] + best[mask | (1 << u)] for u in items if not mask >> u & 1
        )

    # forward reconstruction, smallest item index first among optima
    ordering = []
    mask = 0
    while mask != full:
        costs = append_costs(mask)
        for u in items:
            if mask >> u & 1:
                continue
            if costs[u] + best[mask | (1 << u)] == best[mask]:
                ordering.append(u)
                mask |= 1 << u
                break

    ranks = np.empty(n, dtype=np.int64)
    ranks[ordering] = np.arange(1, n + 1)
    _check_linear_order(ranks, prefer, int(best[0]))
    return ranks


# ---------------------------------------------------------------------------
# Mallows model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MallowsParams:
    """Center and dispersion of a Mallows distribution over rankings.

    ``theta = 0`` gives the uniform distribution; larger theta
    concentrates mass near the center.
    """

    center: np.ndarray
    theta: float

    def __post_init__(self):
        center = check_permutation(self.center, name="center")
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")


def mallows_sample(params, count, seed=0):
    """Draw i.i.d. rankings from a Mallows model under Kendall distance.

    Uses the repeated-insertion decomposition: inversion-table entries
    v_j are independent with P(v_j = r) proportional to exp(-theta * r),
    which makes the sampler exact, i.e. P(sigma) is proportional to
    exp(-theta * d_tau(sigma, center)).
    """
    n = params.center.shape[0]
    theta = float(params.theta)
    rng = np.random.default_rng(seed)

    # column j of the inversion table takes values 0..n-1-j
    v = np.zeros((count, n), dtype=np.int64)
    for j in range(n - 1):
        support = n - j
        weights = np.exp(-theta * np.arange(support))
        cdf = np.cumsum(weights / weights.sum())
        v[:, j] = np.searchsorted(cdf, rng.random(count), side="right")

    center_idx = params.center - 1
    samples = np.empty((count, n), dtype=np.int64)
    for s in range(count):
        remaining = list(range(n))
        rel_ranks = np.empty(n, dtype=np.int64)
        for pos in range(n):
            item = remaining.pop(v[s, pos])
            rel_ranks[item] = pos + 1
        samples[s] = rel_ranks[center_idx]
    return RankingSet(
        rankings=samples,
        metric_ids=tuple(f"mallows-{i}" for i in range(count)),
    )


# ---------------------------------------------------------------------------
# Theory validation
# ---------------------------------------------------------------------------

TheoryCheckRow = namedtuple("TheoryCheckRow", ["m", "empirical_error", "bound"])


def borda_theory_check(m_values, epsilon, trials=5000, seed=0, accuracy=None):
    """Measure Borda's pairwise mistake rate against its theoretical bound.

    Simulates M independent voters that each order a fixed item pair
    correctly with probability ``accuracy`` (default 1/2 + epsilon/2).
    Borda misorders the pair when the majority of voters err; exact
    point ties are broken by a fair coin. The bound is
    2 * exp(-M * epsilon^2 / 2).

    Returns
    -------
    list of TheoryCheckRow
        One (M, empirical error, bound) row per entry of ``m_values``.
    """
    if accuracy is None:
        accuracy = 0.5 + epsilon / 2.0
    if not 0.0 < accuracy <= 1.0:
        raise ValueError(f"accuracy must be in (0, 1], got {accuracy}")
    rows = []
    for m in m_values:
        rng = np.random.default_rng(derive_seed(seed, "theory", int(m)))
        correct = rng.random((trials, int(m))) < accuracy
        margin = 2 * correct.sum(axis=1) - int(m)
        coin = rng.random(trials) < 0.5
        mistakes = (margin < 0) | ((margin == 0) & coin)
        bound = 2.0 * np.exp(-int(m) * epsilon**2 / 2.0)
        rows.append(TheoryCheckRow(int(m), float(mistakes.mean()), float(bound)))
    return rows


SimulationRecord = namedtuple(
    "SimulationRecord",
    ["trial", "fraction", "median_distance", "influence", "distance_to_center"],
)


def simulate_outlier_impact(
    n_items=50,
    n_rankings=50,
    theta=0.1,
    fractions=(0.0, 0.1, 0.2, 0.3, 0.4),
    trials=20,
    seed=0,
):
    """Measure how uniform-random outlier rankings degrade Borda aggregation.

    Per trial, draws ``n_rankings`` Mallows samples around the identity
    center and replaces a rising fraction of them with uniform-random
    rankings (the same draws across fractions, so the effect of noise is
    measured on common random numbers). For every (trial, fraction) the
    Kendall distance of the Borda median from the center is recorded,
    together with each ranking's empirical influence and its distance to
    the center.

    Returns
    -------
    list of SimulationRecord
    """
    center = np.arange(1, n_items + 1)
    params = MallowsParams(center=center, theta=theta)
    max_outliers = int(round(max(fractions) * n_rankings))
    records = []
    for trial in range(trials):
        trial_seed = derive_seed(seed, "simulate", trial)
        base = mallows_sample(params, n_rankings, seed=trial_seed)
        out_rng = np.random.default_rng(derive_seed(trial_seed, "outliers"))
        outliers = np.vstack(
            [out_rng.permutation(n_items) + 1 for _ in range(max(max_outliers, 1))]
        )
        for fraction in fractions:
            k = int(round(fraction * n_rankings))
            mixed = base.rankings.copy()
            mixed[:k] = outliers[:k]
            rset = RankingSet(
                rankings=mixed,
                metric_ids=tuple(f"r{i}" for i in range(n_rankings)),
            )
            median = borda(rset, seed=trial_seed)
            records.append(
                SimulationRecord(
                    trial=trial,
                    fraction=float(fraction),
                    median_distance=int(kendall_tau(median, center)),
                    influence=empirical_influence(rset, seed=trial_seed),
                    distance_to_center=_distances_to_set(center, mixed),
                )
            )
    return records
