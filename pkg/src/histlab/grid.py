"""Uniform spatial grid on the well [-1, 1] and quadrature over it.

Lengths are in units of the well half-width L, so the well is [-1, 1].
Every state lives on the full grid; restricted states are stored
zero-extended and remember their support in ``domain``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import StructuralError


def make_grid(n_grid):
    """Return ``n_grid`` equally spaced nodes on [-1, 1] (both walls included).

    An odd ``n_grid`` puts a node exactly at x = 0 and lets composite Simpson
    run on either half of the well.
    """
    n_grid = int(n_grid)
    if n_grid < 3:
        raise StructuralError(f"n_grid must be at least 3, got {n_grid}")
    return np.linspace(-1.0, 1.0, n_grid)


def quadrature_weights(n, dx):
    """Composite Simpson weights for ``n`` equally spaced nodes.

    Falls back to the trapezoid rule when ``n`` is even, where Simpson's
    pairing of panels does not close.
    """
    if n < 2:
        return np.zeros(n)
    if n % 2 == 1 and n >= 3:
        w = np.full(n, 2.0)
        w[1::2] = 4.0
        w[0] = w[-1] = 1.0
        return w * (dx / 3.0)
    w = np.full(n, dx)
    w[0] = w[-1] = dx / 2.0
    return w


def node_index(x, value):
    """Index of the grid node closest to ``value``."""
    dx = x[1] - x[0]
    i = int(round((value - x[0]) / dx))
    return min(max(i, 0), len(x) - 1)


@dataclass(frozen=True)
class GridState:
    """Complex wave function sampled on the full-well grid.

    Parameters
    ----------
    amplitudes : ndarray of complex
        Samples at every node of ``x``; zero outside ``domain``.
    x : ndarray
        The grid nodes, spanning [-1, 1].
    domain : tuple of float
        Interval (in units of L) on which the state is defined.
    """

    amplitudes: np.ndarray
    x: np.ndarray
    domain: tuple = (-1.0, 1.0)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != self.x.shape:
            raise StructuralError(
                f"amplitudes shape {amps.shape} does not match grid {self.x.shape}"
            )
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "domain", (float(self.domain[0]), float(self.domain[1])))

    @property
    def dx(self):
        return float(self.x[1] - self.x[0])

    @property
    def n_grid(self):
        return len(self.x)

    def norm_sq(self):
        return float(np.real(inner_product(self, self)))

    def with_amplitudes(self, amplitudes, domain=None):
        return GridState(amplitudes, self.x, self.domain if domain is None else domain)


def integrate(values, x, lo=-1.0, hi=1.0):
    """Quadrature of sampled ``values`` over the nodes of ``x`` within [lo, hi]."""
    i0 = node_index(x, lo)
    i1 = node_index(x, hi)
    seg = values[i0:i1 + 1]
    return np.dot(quadrature_weights(len(seg), x[1] - x[0]), seg)


def inner_product(s1, s2):
    """Quadrature of conj(s1) * s2.

    States on differing domains are compared through their zero extension,
    so the integral runs over the intersection of the two domains.
    """
    if s1.x.shape != s2.x.shape or not np.array_equal(s1.x, s2.x):
        raise StructuralError("inner product of states sampled on different grids")
    lo = max(s1.domain[0], s2.domain[0])
    hi = min(s1.domain[1], s2.domain[1])
    if hi <= lo:
        return 0j
    return complex(integrate(np.conj(s1.amplitudes) * s2.amplitudes, s1.x, lo, hi))


def l2_distance(s1, s2):
    """L2 norm of the difference of two states on a common grid."""
    if not np.array_equal(s1.x, s2.x):
        raise StructuralError("distance between states sampled on different grids")
    diff = s1.amplitudes - s2.amplitudes
    return float(np.sqrt(max(np.real(integrate(np.abs(diff) ** 2, s1.x)), 0.0)))
