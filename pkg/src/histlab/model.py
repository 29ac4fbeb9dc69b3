"""Problem definition: parameters, the initial packet, the classical path and regions.

Internal units are hbar = M = L = 1. The well is [-1, 1], a packet of
momentum q moves with speed q, and the classical period is T_cl = 4 / q.
Public times are fractions of T_cl (``tau``) unless a function says
otherwise.
"""

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import erf

from .errors import DomainError, PreconditionError
from .grid import GridState, make_grid, node_index

SEMICLASSICAL_A_MAX = 0.2
BOX_PACKET_RATIO = 4.0


class SemiclassicalWarning(UserWarning):
    """Parameters are outside the regime where the packet is well localised."""


@dataclass(frozen=True)
class SimParams:
    """Dimensionless problem parameters.

    Parameters
    ----------
    a : float
        Packet width over well half-width, sigma / L.
    q : float
        Dimensionless momentum p0 L / hbar.
    x0_frac : float
        Initial packet centre in units of L, inside (-1, 1).
    lambda_frac : float
        Half-width of the moving box in units of L.
    n_grid : int
        Number of spatial nodes on [-1, 1]. Odd values keep x = 0 on the grid.
    dt_frac : float
        Time step as a fraction of T_cl.
    tau_frac : float
        Horizon as a fraction of T_cl.
    n_modes : int
        Full-well eigenseries truncation; the half well uses ``n_modes // 2``.
    """

    a: float = 0.05
    q: float = 40.0 * math.pi
    x0_frac: float = -0.5
    lambda_frac: float = 0.125
    n_grid: int = 16385
    dt_frac: float = 1.0 / 20000.0
    tau_frac: float = 0.75
    n_modes: int = 320

    def __post_init__(self):
        for name in ("a", "q", "x0_frac", "lambda_frac", "dt_frac", "tau_frac"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value}")
        if self.a <= 0:
            raise DomainError(f"a must be positive, got {self.a}")
        if self.q <= 0:
            raise DomainError(f"q must be positive, got {self.q}")
        if not -1.0 < self.x0_frac < 1.0:
            raise DomainError(f"x0_frac must lie in (-1, 1), got {self.x0_frac}")
        if not 0.0 < self.lambda_frac < 1.0:
            raise DomainError(f"lambda_frac must lie in (0, 1), got {self.lambda_frac}")
        if int(self.n_grid) != self.n_grid or self.n_grid < 3:
            raise DomainError(f"n_grid must be an integer >= 3, got {self.n_grid}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise DomainError(f"n_modes must be a positive integer, got {self.n_modes}")
        if self.dt_frac <= 0:
            raise DomainError(f"dt_frac must be positive, got {self.dt_frac}")
        if self.tau_frac <= 0:
            raise DomainError(f"tau_frac must be positive, got {self.tau_frac}")
        if self.a > SEMICLASSICAL_A_MAX:
            warnings.warn(
                f"a = {self.a} > {SEMICLASSICAL_A_MAX}: packet is comparable to the well",
                SemiclassicalWarning,
                stacklevel=3,
            )

    @property
    def t_cl(self):
        """Classical period in internal time units."""
        return classical_period(self)

    @property
    def dt(self):
        """Time step in internal units."""
        return self.dt_frac * self.t_cl

    def grid(self):
        return make_grid(self.n_grid)

    def check_moving_box(self):
        """Check that the moving box is much wider than the packet.

        Raises
        ------
        PreconditionError
            When ``lambda_frac <= 4 a``.
        """
        if self.lambda_frac <= BOX_PACKET_RATIO * self.a:
            raise PreconditionError(
                f"moving box half-width {self.lambda_frac} is not wider than "
                f"{BOX_PACKET_RATIO:g} a = {BOX_PACKET_RATIO * self.a:g}"
            )


# --- packet -----------------------------------------------------------------

def _gauss_mass(a, x0, lo, hi):
    # integral of exp(-(x - x0)^2 / (2 a^2)) over [lo, hi]
    s = math.sqrt(2.0) * a
    return a * math.sqrt(math.pi / 2.0) * (erf((hi - x0) / s) - erf((lo - x0) / s))


def normalization_constant(a, x0_frac=-0.5, interval=(-1.0, 1.0)):
    """Amplitude A of the Gaussian packet normalised on ``interval``.

    With the default arguments this is
    ``(a sqrt(pi/2) (erf(1/(2 sqrt2 a)) + erf(3/(2 sqrt2 a))))**-1/2``,
    i.e. A * sqrt(L) for the packet centred at -L/2 and normalised on the
    whole well.
    """
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    mass = _gauss_mass(a, x0_frac, interval[0], interval[1])
    if not mass > 0:
        raise DomainError(f"packet has no weight on {interval}")
    return mass ** -0.5


def packet_values(x, params, interval=(-1.0, 1.0)):
    """Unclamped packet samples, normalised on ``interval`` and zero outside it."""
    a, q, x0 = params.a, params.q, params.x0_frac
    amp = normalization_constant(a, x0, interval)
    s = np.asarray(x, dtype=float) - x0
    psi = amp * np.exp(-s * s / (4.0 * a * a)) * np.exp(1j * q * s)
    inside = (x >= interval[0] - 1e-12) & (x <= interval[1] + 1e-12)
    return np.where(inside, psi, 0.0)


def initial_packet_sample(params, grid=None, interval=(-1.0, 1.0), clamp=True):
    """Sample the initial Gaussian packet on the grid.

    Parameters
    ----------
    params : SimParams
    grid : ndarray, optional
        Nodes on [-1, 1]; defaults to ``params.grid()``.
    interval : tuple of float
        Support of the packet. The default is the whole well; passing
        ``(-1, 0)`` gives the packet renormalised on the left half.
    clamp : bool
        Zero the samples at the interval end points (Dirichlet walls).
    """
    x = params.grid() if grid is None else np.asarray(grid, dtype=float)
    psi = packet_values(x, params, interval)
    if clamp:
        psi[node_index(x, interval[0])] = 0.0
        psi[node_index(x, interval[1])] = 0.0
    return GridState(psi, x, interval)


# --- classical motion ---------------------------------------------------------

def classical_period(params):
    """T_cl = 4 M L / p0, which is 4 / q in internal units."""
    q = params.q if isinstance(params, SimParams) else float(params)
    if not q > 0:
        raise DomainError(f"q must be positive, got {q}")
    return 4.0 / q


def _unfolded(tau, x0):
    # distance travelled from the left wall on the unfolded (period-4) line
    return np.mod(x0 + 1.0 + 4.0 * np.asarray(tau, dtype=float), 4.0)


def classical_position(tau, params):
    """Position x_cl / L of the bouncing particle at time ``tau`` (units of T_cl).

    The particle moves at speed 4 L per T_cl and reflects at both walls.
    Accepts scalars or arrays.
    """
    if np.any(np.asarray(tau) < 0):
        raise DomainError("tau must be non-negative")
    s = _unfolded(tau, params.x0_frac)
    x = np.where(s <= 2.0, s - 1.0, 3.0 - s)
    return float(x) if np.ndim(x) == 0 else x


def classical_direction(tau, params):
    """+1 while the particle moves right, -1 while it moves left."""
    s = _unfolded(tau, params.x0_frac)
    d = np.where(s < 2.0, 1, -1)
    return int(d) if np.ndim(d) == 0 else d


# --- regions ------------------------------------------------------------------

class ClipMode(Enum):
    """How a moving box behaves when it reaches a wall."""

    CLIP_AT_WALLS = "clip"
    FREEZE_AT_WALLS = "freeze"


@dataclass(frozen=True)
class StaticInterval:
    """Fixed interval [lo, hi] in units of L."""

    lo: float
    hi: float

    def __post_init__(self):
        if not -1.0 <= self.lo < self.hi <= 1.0:
            raise DomainError(f"invalid static interval [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class MovingBox:
    """Box [x_cl(t) - halfwidth, x_cl(t) + halfwidth] following the classical path.

    ``CLIP_AT_WALLS`` intersects the box with the well, so it shrinks to a
    single half-width at a bounce. ``FREEZE_AT_WALLS`` holds the box against
    the wall until the path comes back.
    """

    halfwidth: float
    clip_mode: ClipMode = ClipMode.CLIP_AT_WALLS

    def __post_init__(self):
        if not 0.0 < self.halfwidth <= 1.0:
            raise DomainError(f"halfwidth must lie in (0, 1], got {self.halfwidth}")
        object.__setattr__(self, "clip_mode", ClipMode(self.clip_mode))


FULL_WELL = StaticInterval(-1.0, 1.0)
LEFT_HALF = StaticInterval(-1.0, 0.0)


def region_interval(region, tau, params):
    """Interval (lo, hi) of ``region`` at time ``tau``, always inside [-1, 1]."""
    if isinstance(region, StaticInterval):
        return (region.lo, region.hi)
    centre = classical_position(tau, params)
    lam = region.halfwidth
    if region.clip_mode is ClipMode.FREEZE_AT_WALLS:
        if lam >= 1.0:
            return (-1.0, 1.0)
        centre = min(max(centre, -1.0 + lam), 1.0 - lam)
        return (centre - lam, centre + lam)
    return (max(-1.0, centre - lam), min(1.0, centre + lam))


def boundary_check(state, region, tau=0.0, params=None):
    """Largest |psi| on the region boundary relative to max |psi|.

    Boundary points are snapped to the nearest grid node. A zero state
    gives 0.
    """
    if isinstance(region, MovingBox):
        if params is None:
            raise PreconditionError("a moving region needs params to locate its boundary")
        lo, hi = region_interval(region, tau, params)
    else:
        lo, hi = region.lo, region.hi
    mod = np.abs(state.amplitudes)
    peak = mod.max()
    if peak == 0:
        return 0.0
    x = state.x
    return float(max(mod[node_index(x, lo)], mod[node_index(x, hi)]) / peak)
