"""Two-history partitions, their decoherence functional and the contrary inference.

A partition is h = {paths that stay in a region during [0, tau]} and its
complement h-bar. With g the free propagator and g_r the restricted one,

    D(h, h)       = <g_r psi0 | g_r psi0>
    D(h, h-bar)   = <g_r psi0 | (g - g_r) psi0>
    D(h-bar, h-bar) = <(g - g_r) psi0 | (g - g_r) psi0>

all evaluated at tau from one free and one restricted grid evolution.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import NotConsistentError, PreconditionError
from .grid import inner_product
from .model import (
    ClipMode,
    MovingBox,
    StaticInterval,
    boundary_check,
    classical_position,
    region_interval,
)
from .propagator import EvolutionPlan, Trajectory, evolve

DEFAULT_THRESHOLD = 0.01


@dataclass(frozen=True)
class PartitionSpec:
    """The partition {h, h-bar} defined by staying inside ``region`` up to ``tau``."""

    region: object
    tau: float
    label: str = "h"

    def __post_init__(self):
        if not self.tau > 0:
            raise PreconditionError(f"{self.label}: tau must be positive")
        if not isinstance(self.region, (StaticInterval, MovingBox)):
            raise PreconditionError(f"{self.label}: unsupported region {self.region!r}")

    @property
    def plan(self):
        if isinstance(self.region, MovingBox):
            return EvolutionPlan.moving(self.region, self.tau)
        return EvolutionPlan.restricted(self.region, self.tau)


@dataclass(frozen=True)
class DecoMatrix2:
    """Decoherence functional on {h, h-bar}; rows and columns ordered (h, h-bar)."""

    entries: np.ndarray
    cross: complex = 0j  # <g_r psi0 | g psi0>
    full_norm: float = 1.0  # <g psi0 | g psi0>

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex).reshape(2, 2)
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)

    @property
    def d_hh(self):
        return float(self.entries[0, 0].real)

    @property
    def d_hbar(self):
        return float(self.entries[1, 1].real)

    @property
    def off_diagonal(self):
        return complex(self.entries[0, 1])

    def hermiticity_error(self):
        return float(np.abs(self.entries - self.entries.conj().T).max())

    def total(self):
        return complex(self.entries.sum())


@dataclass(frozen=True)
class ConsistencyReport:
    """Verdict on one partition.

    Candidate values are always available; ``p_h`` and ``p_hbar`` refuse to
    return them unless the set is consistent.
    """

    matrix: DecoMatrix2
    epsilon: float
    threshold: float
    consistent: bool
    candidate_h: float
    candidate_hbar: float
    boundary_residual: float = None
    label: str = "h"

    @property
    def p_h(self):
        self._require_consistent()
        return self.candidate_h

    @property
    def p_hbar(self):
        self._require_consistent()
        return self.candidate_hbar

    def _require_consistent(self):
        if not self.consistent:
            raise NotConsistentError(
                f"{self.label}: |D(h, h-bar)| = {self.epsilon:.3g} exceeds {self.threshold:g}; "
                "diagonal entries are not probabilities"
            )

    def summary(self):
        kind = "probabilities" if self.consistent else "candidate values (NOT probabilities)"
        lines = [
            f"[{self.label}] |D(h,hbar)| = {self.epsilon:.6g} "
            f"({'consistent' if self.consistent else 'NOT consistent'} at {self.threshold:g})",
            f"  {kind}: D(h,h) = {self.candidate_h:.6g}, D(hbar,hbar) = {self.candidate_hbar:.6g}",
        ]
        if self.boundary_residual is not None:
            lines.append(f"  initial boundary residual = {self.boundary_residual:.3g}")
        return "\n".join(lines)


def matrix_from_states(restricted, full):
    """Assemble the 2x2 decoherence matrix from g_r psi0 and g psi0 at one time."""
    d_hh = inner_product(restricted, restricted).real
    cross = inner_product(restricted, full)
    full_norm = inner_product(full, full).real
    other = full.with_amplitudes(full.amplitudes - restricted.amplitudes, (-1.0, 1.0))
    d_bb = inner_product(other, other).real
    d_hb = cross - d_hh
    entries = np.array([[d_hh, d_hb], [np.conj(d_hb), d_bb]], dtype=complex)
    return DecoMatrix2(entries, cross, full_norm)


def decoherence_pair(initial, spec, params, full=None, strict=True):
    """Decoherence matrix of ``spec`` at its horizon.

    Parameters
    ----------
    initial : GridState
        Initial state normalised on the whole well.
    spec : PartitionSpec
    params : SimParams
    full : GridState or Trajectory, optional
        Free evolution to reuse; computed when omitted.
    strict : bool
        Passed to ``evolve`` for the restricted run.
    """
    try:
        restricted = evolve(initial, spec.plan, params, [spec.tau], strict=strict).final
    except PreconditionError as exc:
        raise PreconditionError(f"{spec.label}: {exc}") from exc
    if full is None:
        full = evolve(initial, EvolutionPlan.full(spec.tau), params, [spec.tau]).final
    elif isinstance(full, Trajectory):
        full = full.at(spec.tau)
    return matrix_from_states(restricted, full)


def consistency_check(matrix, threshold=DEFAULT_THRESHOLD, boundary_residual=None, label="h"):
    """Consistent iff |D(h, h-bar)| <= threshold; probabilities are the diagonal."""
    eps = abs(matrix.off_diagonal)
    return ConsistencyReport(
        matrix=matrix,
        epsilon=float(eps),
        threshold=float(threshold),
        consistent=bool(eps <= threshold),
        candidate_h=matrix.d_hh,
        candidate_hbar=matrix.d_hbar,
        boundary_residual=boundary_residual,
        label=label,
    )


def evaluate_partition(initial, spec, params, threshold=DEFAULT_THRESHOLD, full=None, strict=True):
    """``decoherence_pair`` followed by ``consistency_check`` with the boundary residual."""
    matrix = decoherence_pair(initial, spec, params, full=full, strict=strict)
    residual = boundary_check(initial, spec.region, 0.0, params)
    return consistency_check(matrix, threshold, residual, spec.label)


@dataclass(frozen=True)
class ConsistencySweep:
    """|D(h, h-bar)| and the diagonal traced over many horizons."""

    taus: np.ndarray
    epsilon: np.ndarray
    d_hh: np.ndarray
    d_hbar: np.ndarray

    def windows(self, threshold=DEFAULT_THRESHOLD):
        """Maximal runs of sampled horizons where the set is consistent."""
        ok = self.epsilon <= threshold
        out, start = [], None
        for i, flag in enumerate(ok):
            if flag and start is None:
                start = i
            if not flag and start is not None:
                out.append((float(self.taus[start]), float(self.taus[i - 1])))
                start = None
        if start is not None:
            out.append((float(self.taus[start]), float(self.taus[-1])))
        return out


def consistency_sweep(initial, region, params, taus, strict=True):
    """Decoherence matrices of the partition defined by ``region`` for every horizon in ``taus``.

    Restricted evolution up to tau' is a prefix of evolution up to tau, so
    one free and one restricted run cover all horizons.
    """
    taus = np.asarray(taus, dtype=float)
    spec = PartitionSpec(region, float(taus[-1]), "sweep")
    full = evolve(initial, EvolutionPlan.full(spec.tau), params, taus)
    restricted = evolve(initial, spec.plan, params, taus, strict=strict)
    mats = [matrix_from_states(r, f) for r, f in zip(restricted.states, full.states)]
    return ConsistencySweep(
        taus,
        np.array([abs(m.off_diagonal) for m in mats]),
        np.array([m.d_hh for m in mats]),
        np.array([m.d_hbar for m in mats]),
    )


# --- crossing -------------------------------------------------------------------

@dataclass(frozen=True)
class Crossing:
    """Whether every path kept in the moving box must visit x > 0 before ``tau``."""

    implied: bool
    window: tuple = None  # first interval of times with the box inside (0, L]
    witness: float = None


def _first_window(region, params, tau):
    # box inside (0, L]  <=>  x_cl(t) > halfwidth, provided the box can fit there at all
    lam = region.halfwidth
    if lam >= 1.0 or (region.clip_mode is ClipMode.FREEZE_AT_WALLS and lam >= 0.5):
        return None
    # unfolded coordinate s = x0 + 1 + 4 tau; x_cl > lam  <=>  s mod 4 in (1 + lam, 3 - lam)
    s0 = params.x0_frac + 1.0
    k = int(np.floor((s0 - (3.0 - lam)) / 4.0)) + 1
    enter = (1.0 + lam + 4 * k - s0) / 4.0
    leave = (3.0 - lam + 4 * k - s0) / 4.0
    if max(enter, 0.0) >= tau:
        return None
    return max(enter, 0.0), min(leave, tau), k


def crossing_implication(region, params, tau=None):
    """Does staying in the moving box force the path through x = 0 before ``tau``?

    True when some box interval within [0, tau] lies entirely in (0, L],
    which makes the stay-in-box history a subset of the crossing history.
    The witness is the moment the full-width box is deepest inside (0, L]
    (centre at L/2); a box of half-width >= L/2 only fits there while
    clipped, and its witness is the wall contact instead.
    """
    if not isinstance(region, MovingBox):
        raise PreconditionError("crossing_implication needs a MovingBox")
    tau = params.tau_frac if tau is None else tau
    found = _first_window(region, params, tau)
    if found is None:
        return Crossing(False)
    enter, leave, k = found
    s0 = params.x0_frac + 1.0
    target = 1.5 if region.halfwidth < 0.5 else 2.0
    witness = min(max((target + 4 * k - s0) / 4.0, enter), leave)
    if not region_interval(region, witness, params)[0] > 0:
        witness = 0.5 * (enter + leave)
    return Crossing(True, (enter, leave), witness)


# --- contrary inference -----------------------------------------------------------

@dataclass(frozen=True)
class ContraryReport:
    """Both partitions' verdicts and the contrary-inference decision."""

    report1: ConsistencyReport
    report2: ConsistencyReport
    crossing: Crossing
    delta: float
    contrary: bool
    failed_gates: tuple = field(default_factory=tuple)
    regime_warnings: tuple = field(default_factory=tuple)
    leaked2: float = None

    @property
    def crossing_implied(self):
        return self.crossing.implied

    @property
    def zero_cover(self):
        """Candidate values of (h1-bar, h2-bar), the would-be zero cover."""
        return (self.report1.candidate_hbar, self.report2.candidate_hbar)

    def summary(self):
        lines = [self.report1.summary(), self.report2.summary()]
        c = self.crossing
        if c.implied:
            lines.append(
                f"crossing implied: box inside (0, L] for tau in [{c.window[0]:.6g}, {c.window[1]:.6g}], "
                f"witness tau = {c.witness:.6g}"
            )
        else:
            lines.append("crossing implied: no")
        lines.append(f"delta = {self.delta:g}")
        for w in self.regime_warnings:
            lines.append(f"warning: {w}")
        if self.contrary:
            lines.append("verdict: CONTRARY")
        else:
            lines.append("verdict: NOT CONTRARY (failed: " + ", ".join(self.failed_gates) + ")")
        return "\n".join(lines)


def contrary_inference_report(set1, set2, params, delta=None, threshold=DEFAULT_THRESHOLD,
                              initial=None):
    """Evaluate both partitions and decide whether they give a contrary inference.

    ``set1`` must restrict to a static interval and ``set2`` to a moving box,
    with a common horizon. The verdict requires both sets consistent, both
    stay-histories at probability >= 1 - delta and the crossing implication.
    Parameters outside the intended regime (a box not much wider than the
    packet, an initial state that does not vanish on a barrier) do not
    raise; they are listed in ``regime_warnings``.
    """
    if not isinstance(set1.region, StaticInterval) or not isinstance(set2.region, MovingBox):
        raise PreconditionError("set1 must be static and set2 a moving box")
    if abs(set1.tau - set2.tau) > 1e-12:
        raise PreconditionError("both sets need the same horizon")
    delta = threshold if delta is None else delta
    if initial is None:
        from .model import initial_packet_sample

        initial = initial_packet_sample(params)
    tau = set1.tau
    full = evolve(initial, EvolutionPlan.full(tau), params, [tau]).final
    regime = []
    for spec in (set1, set2):
        res = boundary_check(initial, spec.region, 0.0, params)
        if res > 1e-6:
            regime.append(f"{spec.label}: initial state is {res:.3g} of its peak on the barrier")
    if set2.region.halfwidth <= 4.0 * params.a:
        regime.append(f"{set2.label}: box half-width {set2.region.halfwidth:g} is not above 4a")
    gates = []

    r1 = evaluate_partition(initial, set1, params, threshold, full=full, strict=False)
    traj2 = evolve(initial, set2.plan, params, [tau], strict=False)
    m2 = matrix_from_states(traj2.final, full)
    r2 = consistency_check(m2, threshold, boundary_check(initial, set2.region, 0.0, params), set2.label)
    crossing = crossing_implication(set2.region, params, tau)

    for r in (r1, r2):
        if not r.consistent:
            gates.append(f"{r.label} consistency (|D| = {r.epsilon:.3g})")
        if r.candidate_h < 1.0 - delta:
            gates.append(f"p({r.label}) >= 1 - delta (got {r.candidate_h:.4g})")
    if not crossing.implied:
        gates.append("crossing implication")
    return ContraryReport(r1, r2, crossing, float(delta), not gates, tuple(gates),
                          tuple(regime), float(traj2.leaked[-1]))


def default_sets(params, tau=None, clip_mode=ClipMode.CLIP_AT_WALLS):
    """Set 1 stays in [-L, 0]; set 2 stays in a box of half-width lambda around x_cl."""
    tau = params.tau_frac if tau is None else tau
    set1 = PartitionSpec(StaticInterval(-1.0, 0.0), tau, "h1")
    set2 = PartitionSpec(MovingBox(params.lambda_frac, clip_mode), tau, "h2")
    return set1, set2


def classical_centre_track(params, taus):
    """Classical positions at ``taus``; handy for comparing packet centres."""
    return classical_position(np.asarray(taus), params)
