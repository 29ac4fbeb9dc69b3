"""Crank-Nicolson evolution on the grid with Dirichlet walls.

Four evolutions are supported: the free well, a statically restricted
well, a box that follows the classical path, and free evolution
interrupted by N position projections. Restricted evolutions start from
the projected (not renormalised) initial state, so the norm they lose is
the amplitude of leaving the region.
"""

import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import lapack

from .errors import NumericError, PreconditionError, StructuralError
from .grid import GridState, inner_product, l2_distance, node_index
from .model import FULL_WELL, MovingBox, StaticInterval, boundary_check, region_interval

__all__ = [
    "EvolutionPlan",
    "Trajectory",
    "cn_step",
    "evolve",
    "inner_product",
    "l2_distance",
]

SUPPORT_TOL = 1e-6


class ZenoProjectionWarning(UserWarning):
    """A step cut off amplitude that was not already zero at the barrier."""


class _Stepper:
    """Cayley-form step (1 + i dt H / 2) psi' = (1 - i dt H / 2) psi for H = -d^2/dx^2 / 2.

    The tridiagonal factorisation depends only on the number of interior
    nodes, so it is cached per size.
    """

    def __init__(self, dx, dt):
        self.r = 1j * dt / (4.0 * dx * dx)
        self._factors = {}

    def _factor(self, m):
        f = self._factors.get(m)
        if f is None:
            r = self.r
            off = np.full(m - 1, -r, dtype=complex)
            diag = np.full(m, 1.0 + 2.0 * r, dtype=complex)
            dl, d, du, du2, ipiv, info = lapack.zgttrf(off, diag, off.copy())
            if info != 0:
                raise NumericError(f"singular Crank-Nicolson matrix (info={info})")
            f = (dl, d, du, du2, ipiv)
            self._factors[m] = f
        return f

    def step(self, psi, i_lo, i_hi):
        """Advance ``psi`` with walls at nodes i_lo and i_hi; zero elsewhere."""
        out = np.zeros_like(psi)
        m = i_hi - i_lo - 1
        if m < 1:
            return out
        seg = psi[i_lo:i_hi + 1]
        inner = seg[1:-1]
        rhs = (1.0 - 2.0 * self.r) * inner
        # wall nodes are held at zero
        if m > 1:
            rhs[1:] += self.r * inner[:-1]
            rhs[:-1] += self.r * inner[1:]
        if m == 1:
            out[i_lo + 1] = rhs[0] / (1.0 + 2.0 * self.r)
            return out
        sol, info = lapack.zgttrs(*self._factor(m), rhs)
        if info != 0:
            raise NumericError(f"tridiagonal solve failed (info={info})")
        out[i_lo + 1:i_hi] = sol
        return out


@lru_cache(maxsize=16)
def _stepper(dx, dt):
    return _Stepper(dx, dt)


def _nodes(x, interval):
    return node_index(x, interval[0]), node_index(x, interval[1])


def cn_step(state, dt, active_interval=(-1.0, 1.0)):
    """One Crank-Nicolson step of the free Hamiltonian with walls at ``active_interval``.

    ``dt`` is in internal time units (negative values step backwards).
    Amplitudes outside the interval are set to zero. If the state does not
    already vanish at the interval ends this amounts to a Zeno projection,
    which is allowed and reported with a ``ZenoProjectionWarning``.
    """
    x = state.x
    i_lo, i_hi = _nodes(x, active_interval)
    amps = state.amplitudes
    peak = np.abs(amps).max()
    if peak > 0:
        edge = max(abs(amps[i_lo]), abs(amps[i_hi]))
        outside = np.abs(np.r_[amps[:i_lo], amps[i_hi + 1:]]).max(initial=0.0)
        if max(edge, outside) > SUPPORT_TOL * peak:
            warnings.warn(
                "state does not vanish at the active interval; step acts as a projection",
                ZenoProjectionWarning,
                stacklevel=2,
            )
    new = _stepper(state.dx, float(dt)).step(np.asarray(amps), i_lo, i_hi)
    if not np.all(np.isfinite(new)):
        raise NumericError("non-finite amplitudes after Crank-Nicolson step")
    return GridState(new, x, (x[i_lo], x[i_hi]))


@dataclass(frozen=True)
class EvolutionPlan:
    """What to evolve and for how long.

    Parameters
    ----------
    mode : {"full", "restricted", "moving", "zeno"}
    tau_end : float
        Final time in units of T_cl.
    region : StaticInterval or MovingBox, optional
        Required for every mode but "full".
    n_projections : int, optional
        Number of equally spaced projections for "zeno" (the last one at
        ``tau_end``); an extra projection at t = 0 is always applied.
    dt_frac : float, optional
        Time step in units of T_cl; defaults to ``params.dt_frac``.
    """

    mode: str
    tau_end: float
    region: object = None
    n_projections: int = None
    dt_frac: float = None

    def __post_init__(self):
        if self.mode not in ("full", "restricted", "moving", "zeno"):
            raise StructuralError(f"unknown evolution mode {self.mode!r}")
        if not self.tau_end > 0:
            raise PreconditionError("tau_end must be positive")
        if self.dt_frac is not None and self.dt_frac == 0:
            raise PreconditionError("dt_frac must be non-zero")
        if self.mode == "restricted" and not isinstance(self.region, StaticInterval):
            raise StructuralError("restricted evolution needs a StaticInterval")
        if self.mode == "moving" and not isinstance(self.region, MovingBox):
            raise StructuralError("moving evolution needs a MovingBox")
        if self.mode == "zeno":
            if not isinstance(self.region, StaticInterval):
                raise StructuralError("zeno evolution needs a StaticInterval")
            if self.n_projections is None or self.n_projections < 1:
                raise PreconditionError("zeno evolution needs n_projections >= 1")

    @classmethod
    def full(cls, tau_end, dt_frac=None):
        return cls("full", tau_end, FULL_WELL, dt_frac=dt_frac)

    @classmethod
    def restricted(cls, region, tau_end, dt_frac=None):
        return cls("restricted", tau_end, region, dt_frac=dt_frac)

    @classmethod
    def moving(cls, box, tau_end, dt_frac=None):
        return cls("moving", tau_end, box, dt_frac=dt_frac)

    @classmethod
    def zeno(cls, region, n_projections, tau_end, dt_frac=None):
        return cls("zeno", tau_end, region, n_projections, dt_frac)


@dataclass
class Trajectory:
    """States sampled during an evolution.

    ``leaked[i]`` is 1 - ||psi(times[i])||^2, the weight removed by the
    walls (including the projection of the initial state).
    """

    times: np.ndarray
    states: list
    leaked: np.ndarray
    plan: EvolutionPlan = field(repr=False, default=None)

    def at(self, tau):
        i = int(np.argmin(np.abs(self.times - tau)))
        return self.states[i]

    @property
    def final(self):
        return self.states[-1]


def _check_support(initial, region, params, tol):
    if isinstance(region, MovingBox):
        lo, hi = region_interval(region, 0.0, params)
    else:
        lo, hi = region.lo, region.hi
    x = initial.x
    amps = np.abs(initial.amplitudes)
    peak = amps.max()
    if peak == 0:
        return
    for name, pos in (("lower", lo), ("upper", hi)):
        ratio = amps[node_index(x, pos)] / peak
        if ratio > tol:
            raise PreconditionError(
                f"initial state is {ratio:.3g} of its peak at the {name} boundary "
                f"x = {pos:.6g} of the {region!r}"
            )


def evolve(initial, plan, params, sample_times=None, support_tol=SUPPORT_TOL, strict=True):
    """Evolve ``initial`` according to ``plan``.

    Parameters
    ----------
    initial : GridState
    plan : EvolutionPlan
    params : SimParams
    sample_times : sequence of float, optional
        Sorted times in [0, plan.tau_end] (units of T_cl); each is taken at
        the nearest step. Defaults to the end point only.
    support_tol : float
        Largest allowed |psi| / max |psi| at the initial region boundary.
    strict : bool
        When False the support check and the moving-box width check are
        skipped and the initial projection simply cuts off what is outside.

    Returns
    -------
    Trajectory
    """
    if sample_times is None:
        sample_times = [plan.tau_end]
    times = np.asarray(sample_times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise PreconditionError("sample_times must be sorted")
    if times.size and (times[0] < 0 or times[-1] > plan.tau_end * (1 + 1e-12)):
        raise PreconditionError("sample_times must lie within [0, tau_end]")

    region = plan.region if plan.region is not None else FULL_WELL
    if strict:
        if plan.mode == "moving":
            params.check_moving_box()
        _check_support(initial, region, params, support_tol)

    dt_frac = params.dt_frac if plan.dt_frac is None else plan.dt_frac
    direction = 1.0 if dt_frac > 0 else -1.0
    n_steps = max(int(round(plan.tau_end / abs(dt_frac))), 1)
    dtau = plan.tau_end / n_steps
    dt = direction * dtau * params.t_cl
    x = initial.x
    stepper = _stepper(initial.dx, dt)

    sample_steps = np.rint(times / dtau).astype(int)
    if plan.mode == "zeno":
        if plan.n_projections > n_steps:
            raise PreconditionError(
                f"{plan.n_projections} projections need at least as many steps (have {n_steps})"
            )
        marks = {int(round(j * n_steps / plan.n_projections)) for j in range(1, plan.n_projections + 1)}
    else:
        marks = set()

    def interval_at(step):
        if plan.mode == "full":
            return 0, len(x) - 1
        if plan.mode == "moving":
            return _nodes(x, region_interval(region, step * dtau, params))
        return _nodes(x, (region.lo, region.hi))

    psi = np.array(initial.amplitudes)
    if plan.mode != "full":
        i_lo, i_hi = interval_at(0)
        psi[:i_lo + 1] = 0.0
        psi[i_hi:] = 0.0

    states, leaked = [], []
    domain_of = lambda s: (  # noqa: E731
        (x[interval_at(s)[0]], x[interval_at(s)[1]]) if plan.mode in ("restricted", "moving")
        else (-1.0, 1.0)
    )

    def record(step):
        state = GridState(psi, x, domain_of(step))
        states.append(state)
        # same quadrature as the decoherence entries, so D(h, h) = 1 - leaked
        leaked.append(1.0 - inner_product(state, state).real)

    si = 0
    while si < len(sample_steps) and sample_steps[si] == 0:
        record(0)
        si += 1
    for s in range(1, n_steps + 1):
        if plan.mode == "zeno":
            psi = stepper.step(psi, 0, len(x) - 1)
            if s in marks:
                i_lo, i_hi = interval_at(s)
                psi[:i_lo + 1] = 0.0
                psi[i_hi:] = 0.0
        else:
            i_lo, i_hi = interval_at(s - 1)
            psi = stepper.step(psi, i_lo, i_hi)
            if plan.mode == "moving":
                j_lo, j_hi = interval_at(s)
                psi[:j_lo + 1] = 0.0
                psi[j_hi:] = 0.0
        while si < len(sample_steps) and sample_steps[si] == s:
            if not np.all(np.isfinite(psi)):
                raise NumericError(f"non-finite amplitudes at step {s}")
            record(s)
            si += 1
        if si == len(sample_steps):
            break
    return Trajectory(times, states, np.array(leaked), plan)
