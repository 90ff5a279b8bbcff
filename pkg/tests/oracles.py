"""Independent brute-force oracles used to freeze expected values.

These deliberately take different computational paths than the library:
state-set enumeration instead of transition matrices, subset search instead
of greedy prefixes, permutation enumeration instead of count recursions.
"""

from collections import defaultdict
from itertools import combinations
from math import comb


def two_pick_outcome_dist(c, n, alpha):
    """Net-change distribution of one non-coordinating user.

    Enumerates actual part indices for both picks (uniform over all n parts,
    with replacement; the second pick sees the state left by the first) and
    clash outcomes on finished parts.
    """

    def apply_pick(state, part):
        if part not in state:
            yield frozenset(state | {part}), 1.0
        else:
            if alpha < 1.0:
                yield state, 1.0 - alpha
            if alpha > 0.0:
                yield frozenset(state - {part}), alpha

    out = defaultdict(float)
    init = frozenset(range(c))
    for i in range(n):
        for s1, p1 in apply_pick(init, i):
            for j in range(n):
                for s2, p2 in apply_pick(s1, j):
                    out[len(s2) - c] += p1 * p2 / n**2
    return dict(out)


def brute_force_x_core(work_counts, x):
    """Minimal covering set; among equal cardinality, the first subset in the
    deterministic order (count descending, id ascending)."""
    actors = sorted(work_counts, key=lambda a: (-work_counts[a], a))
    target = x * sum(work_counts.values())
    for size in range(1, len(actors) + 1):
        for combo in combinations(range(len(actors)), size):
            if sum(work_counts[actors[i]] for i in combo) >= target:
                return {actors[i] for i in combo}
    return set(actors)


def _u_min(sample_a, sample_b):
    u1 = sum(1 for x in sample_a for y in sample_b if x > y)
    return min(u1, len(sample_a) * len(sample_b) - u1)


def enumerate_mwu_p(sample_a, sample_b):
    """Exact two-sided p by enumerating all label assignments (tie-free)."""
    n1, n2 = len(sample_a), len(sample_b)
    pooled = sorted(sample_a + sample_b)
    assert len(set(pooled)) == len(pooled), "oracle requires tie-free samples"
    observed = _u_min(sample_a, sample_b)
    hits = 0
    for combo in combinations(range(n1 + n2), n1):
        chosen = set(combo)
        xa = [pooled[i] for i in combo]
        xb = [pooled[i] for i in range(n1 + n2) if i not in chosen]
        u1 = sum(1 for x in xa for y in xb if x > y)
        if u1 <= observed:
            hits += 1
    return min(1.0, 2.0 * hits / comb(n1 + n2, n1))
