import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from histlab.errors import PreconditionError, SizeError, StructuralError
from histlab.eventalgebra import (
    CONTRADICTORY,
    CONTRARY,
    FIG3_P,
    FIG3_Q,
    NEITHER,
    EventSpace,
    fig3_space,
    random_rank_one,
    sum_rule_residual,
)

S = fig3_space()
OMEGA = S.omega
P_BAR = OMEGA - FIG3_P
Q_BAR = OMEGA - FIG3_Q


def disjoint_triples(elements):
    # assign each element to A, B, C or none
    for labels in itertools.product(range(4), repeat=len(elements)):
        parts = [frozenset(e for e, l in zip(elements, labels) if l == i) for i in range(3)]
        yield parts


class TestFig3:
    def test_exact_measures(self):
        assert S.exact
        assert S.quantum_measure(FIG3_P) == 0
        assert S.quantum_measure(FIG3_Q) == 0
        assert S.quantum_measure(P_BAR) == 1
        assert S.quantum_measure(Q_BAR) == 1
        assert isinstance(S.quantum_measure(P_BAR), Fraction)

    def test_cross_term(self):
        assert S.deco_value(FIG3_P, P_BAR) == 0

    def test_two_consistent_sets(self):
        assert S.is_consistent_partition([FIG3_P, P_BAR])
        assert S.is_consistent_partition([FIG3_Q, Q_BAR])
        assert S.probabilities([FIG3_P, P_BAR]) == [0, 1]
        assert S.probabilities([FIG3_Q, Q_BAR]) == [0, 1]

    def test_finest_partition_inconsistent(self):
        singles = [{e} for e in "abcde"]
        assert not S.is_consistent_partition(singles)
        assert S.deco_value({"a"}, {"b"}) == -1
        with pytest.raises(PreconditionError):
            S.probabilities(singles)

    def test_zero_cover(self):
        covers = S.find_zero_covers()
        assert (FIG3_P, FIG3_Q) in covers
        for h1, h2 in covers:
            assert h1 | h2 == OMEGA
            assert S.quantum_measure(h1) == 0 and S.quantum_measure(h2) == 0

    def test_complements_contrary(self):
        assert S.classify_pair(P_BAR, Q_BAR) == CONTRARY

    def test_sum_rule_exhaustive(self):
        elements = sorted(OMEGA)
        for a, b, c in disjoint_triples(elements):
            assert S.sum_rule_residual(a, b, c) == 0


class TestDecoValue:
    def test_normalised(self):
        assert S.deco_value(OMEGA, OMEGA) == 1

    def test_empty(self):
        assert S.deco_value(set(), {"a", "b"}) == 0
        assert S.quantum_measure(set()) == 0

    def test_unknown_label(self):
        with pytest.raises(StructuralError):
            S.deco_value({"z"}, {"a"})

    def test_raw_mode(self):
        raw = EventSpace.from_amplitudes({"a": 1, "b": -1, "c": 1, "d": -1, "e": -1}, normalize=False)
        assert raw.quantum_measure(raw.omega) == 1
        raw2 = EventSpace("xy", amplitudes=[2, 1], normalize=False)
        assert raw2.quantum_measure({"x", "y"}) == 9

    def test_bad_construction(self):
        with pytest.raises(StructuralError):
            EventSpace("ab")
        with pytest.raises(StructuralError):
            EventSpace("ab", amplitudes=[1, -1])
        with pytest.raises(StructuralError):
            EventSpace("aa", amplitudes=[1, 2])
        with pytest.raises(StructuralError):
            EventSpace("ab", matrix=np.eye(3))


class TestClassify:
    def test_contradictory(self):
        assert S.classify_pair(FIG3_P, P_BAR) == CONTRADICTORY

    def test_overlap(self):
        assert S.classify_pair(FIG3_P, FIG3_Q) == NEITHER

    @given(st.sets(st.sampled_from("abcde")), st.sets(st.sampled_from("abcde")))
    def test_symmetric(self, p, q):
        assert S.classify_pair(p, q) == S.classify_pair(q, p)


class TestPartitions:
    def test_overlapping_cells(self):
        with pytest.raises(PreconditionError, match="not disjoint"):
            S.is_consistent_partition([{"a", "b"}, {"b", "c", "d", "e"}])

    def test_missing_cells(self):
        with pytest.raises(PreconditionError, match="not exhaustive"):
            S.is_consistent_partition([{"a"}, {"b"}])

    def test_sum_rule_needs_disjoint(self):
        with pytest.raises(PreconditionError):
            S.sum_rule_residual({"a"}, {"a", "b"}, {"c"})


class TestZeroCovers:
    def test_classical_measure_has_none(self):
        space = EventSpace("abcd", matrix=np.diag([0.1, 0.2, 0.3, 0.4]))
        assert space.find_zero_covers() == []

    def test_single_element(self):
        assert EventSpace("a", amplitudes=[1]).find_zero_covers() == []

    def test_size_bound(self):
        big = EventSpace(range(21), amplitudes=[1] * 21)
        with pytest.raises(SizeError):
            big.find_zero_covers()

    def test_canonical_order(self):
        covers = S.find_zero_covers()
        assert covers == S.find_zero_covers()
        sizes = [(len(a), len(b)) for a, b in covers]
        assert all(x <= y for x, y in sizes)


class TestRankOneProperties:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2 ** 31), st.integers(2, 8))
    def test_functional_axioms(self, seed, n):
        rng = np.random.default_rng(seed)
        space = random_rank_one(n, rng)
        m = space.matrix()
        assert space.hermiticity_error() < 1e-12
        assert np.all(np.diag(m).real >= -1e-12)
        assert abs(space.deco_value(space.omega, space.omega) - 1) < 1e-12
        for _ in range(5):
            a = {e for e in space.elements if rng.random() < 0.5}
            b = {e for e in space.elements if rng.random() < 0.5}
            direct = sum(m[i, j] for i in a for j in b)
            assert abs(space.deco_value(a, b) - direct) < 1e-12

    def test_sum_rule_exhaustive_small(self):
        space = random_rank_one(6, np.random.default_rng(3))
        for a, b, c in disjoint_triples(list(space.elements)):
            assert abs(space.sum_rule_residual(a, b, c)) <= 1e-12

    def test_sum_rule_random_triples(self):
        rng = np.random.default_rng(11)
        space = random_rank_one(10, rng)
        for _ in range(1000):
            labels = rng.integers(0, 4, size=10)
            a, b, c = (set(np.flatnonzero(labels == i)) for i in range(3))
            assert abs(space.sum_rule_residual(a, b, c)) <= 1e-12

    def test_consistent_partitions_sum_to_one(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            space = random_rank_one(5, rng)
            cells = [{0, 1}, {2}, {3, 4}]
            thr = 0.05
            if space.is_consistent_partition(cells, thr):
                total = sum(space.quantum_measure(c) for c in cells)
                assert abs(total - 1) <= len(cells) * thr + 1e-10

    def test_general_hermitian_matrix(self):
        rng = np.random.default_rng(2)
        vecs = rng.normal(size=(3, 4)) + 1j * rng.normal(size=(3, 4))
        m = sum(np.outer(v.conj(), v) for v in vecs)
        space = EventSpace(range(4), matrix=m)
        assert space.hermiticity_error() < 1e-12
        assert abs(space.deco_value(space.omega, space.omega) - 1) < 1e-12
        for a, b, c in disjoint_triples(list(range(4))):
            assert abs(space.sum_rule_residual(a, b, c)) <= 1e-12


class TestNegativeControl:
    def test_corrupted_matrix_is_detected(self):
        m = fig3_space().matrix()
        m[0, 1] += 0.3
        bad = EventSpace("abcde", matrix=m, normalize=False)
        assert bad.hermiticity_error() > 0.1

    def test_three_way_interference_breaks_sum_rule(self):
        # a set function with a genuinely cubic term is not any D(h, h)
        alpha = {"a": 1.0, "b": -0.5, "c": 0.7}

        def cubic(h):
            s = sum(alpha[e] for e in h)
            return s * s + 0.2 * s ** 3

        assert abs(sum_rule_residual(cubic, {"a"}, {"b"}, {"c"})) > 1e-3
