"""Quantum measures on finite history spaces.

A space is a finite ordered set of fine-grained histories together with a
decoherence matrix. The usual source is an amplitude per history, giving
the rank-one functional D(A, B) = conj(S(A)) S(B) with S(A) the summed
amplitude of A. Integer and ``Fraction`` amplitudes are handled in exact
rational arithmetic.
"""

import itertools
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import PreconditionError, SizeError, StructuralError

MAX_EXHAUSTIVE = 20

CONTRARY = "contrary"
CONTRADICTORY = "contradictory"
NEITHER = "neither"


def _is_rational(v):
    return isinstance(v, Rational)


def sum_rule_residual(measure, A, B, C):
    """mu(ABC) - mu(AB) - mu(AC) - mu(BC) + mu(A) + mu(B) + mu(C).

    ``measure`` is any set function on frozensets. The residual vanishes
    for every measure of the form D(h, h) with D bilinear, so it detects
    set functions that carry genuine three-way interference.
    """
    A, B, C = frozenset(A), frozenset(B), frozenset(C)
    if A & B or A & C or B & C:
        raise PreconditionError("sum rule needs pairwise disjoint events")
    mu = measure
    return (mu(A | B | C) - mu(A | B) - mu(A | C) - mu(B | C)
            + mu(A) + mu(B) + mu(C))


class EventSpace:
    """Finite history space with a decoherence functional.

    Parameters
    ----------
    elements : sequence of hashable
        Fine-grained history labels, in a fixed order.
    amplitudes : mapping or sequence, optional
        One amplitude per element (rank-one functional).
    matrix : array_like, optional
        A general decoherence matrix over the elements; used when no
        amplitudes are given.
    normalize : bool
        Rescale so that D(Omega, Omega) = 1. Turn off for raw matrices in
        negative controls.
    """

    def __init__(self, elements, amplitudes=None, matrix=None, normalize=True):
        self.elements = tuple(elements)
        if len(set(self.elements)) != len(self.elements):
            raise StructuralError("duplicate history labels")
        self._index = {e: i for i, e in enumerate(self.elements)}
        if (amplitudes is None) == (matrix is None):
            raise StructuralError("give exactly one of amplitudes or matrix")
        self._alpha = None
        self._matrix = None
        if amplitudes is not None:
            if hasattr(amplitudes, "keys"):
                alpha = [amplitudes[e] for e in self.elements]
            else:
                alpha = list(amplitudes)
            if len(alpha) != len(self.elements):
                raise StructuralError("one amplitude per element is required")
            self.exact = all(_is_rational(v) for v in alpha)
            self._alpha = [Fraction(v) for v in alpha] if self.exact else np.asarray(alpha, complex)
            total = sum(self._alpha)
            self._scale = abs(total) ** 2 if normalize else 1
            if self._scale == 0:
                raise StructuralError("amplitudes sum to zero; cannot normalise")
        else:
            m = np.asarray(matrix, dtype=complex)
            if m.shape != (len(self.elements),) * 2:
                raise StructuralError(f"matrix shape {m.shape} does not match {len(self.elements)} elements")
            self.exact = False
            self._scale = m.sum().real if normalize else 1.0
            if normalize and self._scale == 0:
                raise StructuralError("matrix sums to zero; cannot normalise")
            self._matrix = m / self._scale

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize=True):
        """Build from a ``{label: amplitude}`` mapping, keeping its order."""
        return cls(list(amplitudes), amplitudes=amplitudes, normalize=normalize)

    @property
    def omega(self):
        return frozenset(self.elements)

    def event(self, members):
        """Validate ``members`` and return them as a frozenset."""
        ev = frozenset(members)
        unknown = ev - set(self.elements)
        if unknown:
            raise StructuralError(f"unknown histories: {sorted(map(str, unknown))}")
        return ev

    def complement(self, members):
        return self.omega - self.event(members)

    def matrix(self):
        """Full decoherence matrix over the elements (normalised)."""
        if self._matrix is not None:
            return self._matrix.copy()
        alpha = np.array([complex(v) for v in self._alpha])
        return np.outer(alpha.conj(), alpha) / float(self._scale)

    def _amp(self, ev):
        return sum((self._alpha[self._index[e]] for e in ev), Fraction(0) if self.exact else 0j)

    def deco_value(self, A, B):
        """D(A, B) by the superposition rule: the sum of D_ij over i in A, j in B."""
        A, B = self.event(A), self.event(B)
        if self._alpha is not None:
            sa, sb = self._amp(A), self._amp(B)
            if self.exact:
                return sa * sb / self._scale
            return complex(np.conj(sa) * sb / self._scale)
        ia = [self._index[e] for e in A]
        ib = [self._index[e] for e in B]
        if not ia or not ib:
            return 0j
        return complex(self._matrix[np.ix_(ia, ib)].sum())

    def quantum_measure(self, h):
        """mu(h) = D(h, h)."""
        v = self.deco_value(h, h)
        return v if self.exact else float(np.real(v))

    def sum_rule_residual(self, A, B, C):
        """mu(ABC) - mu(AB) - mu(AC) - mu(BC) + mu(A) + mu(B) + mu(C) for disjoint A, B, C."""
        return sum_rule_residual(self.quantum_measure, self.event(A), self.event(B), self.event(C))

    def hermiticity_error(self):
        """Largest |D_ij - conj(D_ji)|; zero for amplitude-built spaces."""
        m = self.matrix()
        return float(np.abs(m - m.conj().T).max())

    def check_partition(self, cells):
        cells = [self.event(c) for c in cells]
        for i, j in itertools.combinations(range(len(cells)), 2):
            if cells[i] & cells[j]:
                raise PreconditionError(f"cells {i} and {j} are not disjoint")
        union = frozenset().union(*cells) if cells else frozenset()
        if union != self.omega:
            raise PreconditionError("cells are not exhaustive")
        return cells

    def is_consistent_partition(self, cells, threshold=0.0):
        """All off-diagonal |D(h_i, h_j)| <= threshold for a partition of Omega."""
        cells = self.check_partition(cells)
        return all(
            abs(self.deco_value(a, b)) <= threshold
            for a, b in itertools.permutations(cells, 2)
        )

    def probabilities(self, cells, threshold=0.0):
        """Diagonal values of a consistent partition, in the order of ``cells``."""
        if not self.is_consistent_partition(cells, threshold):
            raise PreconditionError("partition is not consistent; no probabilities")
        return [self.quantum_measure(c) for c in cells]

    def classify_pair(self, P, Q):
        """'contradictory' if P, Q split Omega, 'contrary' if disjoint but not covering."""
        P, Q = self.event(P), self.event(Q)
        if P & Q:
            return NEITHER
        return CONTRADICTORY if P | Q == self.omega else CONTRARY

    def subsets(self):
        n = len(self.elements)
        for r in range(n + 1):
            for combo in itertools.combinations(self.elements, r):
                yield frozenset(combo)

    def find_zero_covers(self, threshold=0.0):
        """All unordered pairs (h1, h2) with mu(h1), mu(h2) <= threshold and h1 | h2 = Omega."""
        if len(self.elements) > MAX_EXHAUSTIVE:
            raise SizeError(
                f"{len(self.elements)} histories exceed the exhaustive bound {MAX_EXHAUSTIVE}"
            )
        null = [s for s in self.subsets() if abs(self.quantum_measure(s)) <= threshold]
        order = {e: i for i, e in enumerate(self.elements)}
        key = lambda s: (len(s), sorted(order[e] for e in s))  # noqa: E731
        null.sort(key=key)
        covers = []
        for i, h1 in enumerate(null):
            for h2 in null[i + 1:]:
                if h1 | h2 == self.omega:
                    covers.append((h1, h2))
        return covers


def fig3_space():
    """Five histories a..e with amplitudes 1, -1, 1, -1, -1.

    P = {a, e} and Q = {a, b, c, d} both have measure zero and cover Omega;
    their complements {b, c, d} and {e} are contrary with measure one.
    """
    return EventSpace.from_amplitudes({"a": 1, "b": -1, "c": 1, "d": -1, "e": -1})


FIG3_P = frozenset({"a", "e"})
FIG3_Q = frozenset({"a", "b", "c", "d"})


def random_rank_one(n, rng):
    """A normalised rank-one space with ``n`` random complex amplitudes."""
    alpha = rng.normal(size=n) + 1j * rng.normal(size=n)
    return EventSpace(range(n), amplitudes=alpha)
