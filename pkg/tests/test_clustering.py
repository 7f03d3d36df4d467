import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import assignment_from_labels
from shapeclust.clustering import (
    dbi_exact,
    kmeans,
    kmeans_best_of,
    nmi,
    rand_index,
)

rng = np.random.default_rng(41)


def exhaustive_two_partition_inertia(points: np.ndarray) -> float:
    """Minimum inertia over all 2-partitions with nonempty parts."""
    n = len(points)
    best = math.inf
    for mask_bits in range(1, 2 ** (n - 1)):
        mask = np.array([(mask_bits >> i) & 1 for i in range(n)], dtype=bool)
        a, b = points[mask], points[~mask]
        inertia = (
            np.square(a - a.mean(axis=0)).sum() + np.square(b - b.mean(axis=0)).sum()
        )
        best = min(best, inertia)
    return best


def rand_index_pair_oracle(pred, truth) -> float:
    n = len(pred)
    agree = 0
    for i, j in itertools.combinations(range(n), 2):
        together_pred = pred[i] == pred[j]
        together_truth = truth[i] == truth[j]
        agree += together_pred == together_truth
    return agree / (n * (n - 1) / 2)


def nmi_contingency_oracle(pred, truth) -> float:
    pred = list(pred)
    truth = list(truth)
    n = len(pred)
    pc = {c: pred.count(c) / n for c in set(pred)}
    tc = {c: truth.count(c) / n for c in set(truth)}
    h_p = -sum(p * math.log(p) for p in pc.values())
    h_t = -sum(p * math.log(p) for p in tc.values())
    mutual = 0.0
    for cp in pc:
        for ct in tc:
            joint = sum(1 for a, b in zip(pred, truth) if a == cp and b == ct) / n
            if joint > 0:
                mutual += joint * math.log(joint / (pc[cp] * tc[ct]))
    if h_p <= 0 or h_t <= 0:
        return 1.0 if len(pc) == len(tc) == 1 else 0.0
    return mutual / math.sqrt(h_p * h_t)


def all_set_partitions(n: int):
    """Every partition of range(n) as a label list (restricted growth)."""
    def rec(i, labels, maxlab):
        if i == n:
            yield list(labels)
            return
        for lab in range(maxlab + 2):
            labels.append(lab)
            yield from rec(i + 1, labels, max(maxlab, lab))
            labels.pop()

    yield from rec(0, [], -1)


class TestKmeans:
    def test_well_separated_pairs(self):
        pts = np.array([[0.0, 0.0], [0.1, 0.0], [9.0, 9.0], [9.1, 9.0]])
        asn = kmeans(pts, 2, seed=0)
        assert asn.labels[0] == asn.labels[1]
        assert asn.labels[2] == asn.labels[3]
        assert asn.labels[0] != asn.labels[2]

    def test_identical_points_repair_path(self):
        pts = np.ones((6, 2))
        asn = kmeans(pts, 2, seed=3)
        assert asn.inertia == 0.0
        assert sorted(asn.sizes) == [1, 5]

    def test_six_points_reach_exhaustive_optimum(self):
        pts = np.random.default_rng(5).normal(size=(6, 2))
        want = exhaustive_two_partition_inertia(pts)
        asn = kmeans_best_of(pts, 2, seed=0, restarts=10)
        assert asn.inertia == pytest.approx(want, rel=1e-9)

    def test_small_instance_optimality_rate(self):
        hits = 0
        for i in range(10):
            r = np.random.default_rng(100 + i)
            pts = r.normal(size=(int(r.integers(4, 9)), 2))
            want = exhaustive_two_partition_inertia(pts)
            asn = kmeans_best_of(pts, 2, seed=7, restarts=10)
            hits += asn.inertia <= want * (1 + 1e-9) + 1e-12
        assert hits >= 9

    def test_inertia_nonincreasing_over_iterations(self):
        pts = np.random.default_rng(6).normal(size=(40, 3))
        inertias = [
            kmeans(pts, 3, seed=2, max_iters=t).inertia for t in range(1, 8)
        ]
        assert all(b <= a + 1e-9 for a, b in zip(inertias, inertias[1:]))

    def test_centroids_are_member_means(self):
        pts = np.random.default_rng(7).normal(size=(30, 2))
        asn = kmeans(pts, 3, seed=1)
        for c in range(3):
            np.testing.assert_allclose(
                asn.centroids[c], pts[asn.labels == c].mean(axis=0), atol=1e-12
            )
        assert asn.sizes.sum() == 30
        assert (asn.sizes > 0).all()

    def test_deterministic_given_seed(self):
        pts = np.random.default_rng(8).normal(size=(25, 4))
        a = kmeans(pts, 4, seed=11)
        b = kmeans(pts, 4, seed=11)
        np.testing.assert_array_equal(a.labels, b.labels)
        assert a.inertia == b.inertia

    def test_contract_violations(self):
        pts = np.zeros((3, 2))
        with pytest.raises(ValueError, match="c_num"):
            kmeans(pts, 1)
        with pytest.raises(ValueError, match="cannot split"):
            kmeans(pts, 4)


class TestDbiExact:
    def test_zero_diameter_separated(self):
        pts = np.array([[0.0, 0.0], [0.0, 0.0], [10.0, 0.0], [10.0, 0.0]])
        asn = assignment_from_labels(pts, [0, 0, 1, 1])
        assert dbi_exact(pts, asn) == pytest.approx(0.0, abs=1e-9)

    def test_hand_case(self):
        pts = np.array([[-1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
        asn = assignment_from_labels(pts, [0, 0, 1, 1])
        # the epsilon in the centroid-distance denominator shifts by ~5e-9
        assert dbi_exact(pts, asn) == pytest.approx(1.0, abs=1e-8)

    def test_translation_and_scale_invariance(self):
        pts = np.random.default_rng(9).normal(size=(20, 3))
        labels = np.random.default_rng(10).integers(0, 3, size=20)
        asn = assignment_from_labels(pts, labels)
        base = dbi_exact(pts, asn)
        shifted = assignment_from_labels(pts + 100.0, labels)
        assert dbi_exact(pts + 100.0, shifted) == pytest.approx(base, rel=1e-9)
        scaled = assignment_from_labels(pts * 7.0, labels)
        assert dbi_exact(pts * 7.0, scaled) == pytest.approx(base, rel=1e-6)


class TestNmi:
    def test_identical_partitions(self):
        assert nmi([0, 1, 2, 0], [5, 7, 9, 5]) == 1.0

    def test_constant_vs_balanced(self):
        assert nmi([1, 1, 1, 1], [0, 0, 1, 1]) == 0.0

    def test_both_constant(self):
        assert nmi([3, 3, 3], [8, 8, 8]) == 1.0

    def test_hand_computed_case(self):
        pred = [0, 0, 1, 1, 2, 2]
        truth = [0, 0, 0, 1, 1, 1]
        want = nmi_contingency_oracle(pred, truth)
        got = nmi(pred, truth)
        assert got == pytest.approx(want, abs=1e-12)
        # I = (2/3)ln2, H = ln3, ln2; geometric-mean normalization
        closed = (2 / 3) * math.log(2) / math.sqrt(math.log(3) * math.log(2))
        assert got == pytest.approx(closed, abs=1e-12)

    @given(
        st.lists(st.integers(0, 3), min_size=2, max_size=12),
        st.integers(0, 10**6),
    )
    @settings(max_examples=80, deadline=None)
    def test_symmetric_and_permutation_invariant(self, pred, seed):
        r = np.random.default_rng(seed)
        truth = r.integers(0, 3, size=len(pred)).tolist()
        assert nmi(pred, truth) == pytest.approx(nmi(truth, pred), abs=1e-12)
        relabel = {c: 10 - c for c in set(pred)}
        assert nmi([relabel[c] for c in pred], truth) == pytest.approx(
            nmi(pred, truth), abs=1e-12
        )

    def test_matches_oracle_randomized(self):
        for seed in range(40):
            r = np.random.default_rng(seed)
            n = int(r.integers(3, 15))
            pred = r.integers(0, 4, size=n).tolist()
            truth = r.integers(0, 3, size=n).tolist()
            assert nmi(pred, truth) == pytest.approx(
                nmi_contingency_oracle(pred, truth), abs=1e-12
            )

    def test_bounds(self):
        for seed in range(30):
            r = np.random.default_rng(seed + 500)
            pred = r.integers(0, 5, size=20)
            truth = r.integers(0, 4, size=20)
            assert -1e-12 <= nmi(pred, truth) <= 1 + 1e-12


class TestRandIndex:
    def test_identical(self):
        assert rand_index([0, 1, 0, 2], [4, 5, 4, 6]) == 1.0

    def test_four_point_hand_case(self):
        assert rand_index([0, 1, 0, 1], [0, 0, 1, 1]) == pytest.approx(2 / 6)

    def test_single_cluster_both(self):
        assert rand_index([0, 0, 0], [1, 1, 1]) == 1.0

    def test_matches_pair_oracle_on_all_small_partitions(self):
        for n in (3, 4, 5):
            partitions = list(all_set_partitions(n))
            truth = partitions[len(partitions) // 2]
            for pred in partitions:
                assert rand_index(pred, truth) == pytest.approx(
                    rand_index_pair_oracle(pred, truth), abs=1e-12
                )

    @given(st.lists(st.integers(0, 3), min_size=2, max_size=10), st.integers(0, 10**6))
    @settings(max_examples=60, deadline=None)
    def test_symmetry(self, pred, seed):
        truth = np.random.default_rng(seed).integers(0, 3, size=len(pred)).tolist()
        assert rand_index(pred, truth) == pytest.approx(rand_index(truth, pred))
