"""Command-line scenario runner.

Usage::

    histlab <scenario> --config <path> [--out <path>] [--set key=value ...]

The configuration file holds ``key = value`` lines; ``#`` starts a comment.
Exit codes: 0 success, 1 check failure, 2 configuration error, 3 numeric
failure.
"""

import argparse
import dataclasses
import hashlib
import io
import math
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import ConfigError, HistlabError, NumericError, PreconditionError, TruncationError
from .eventalgebra import FIG3_P, FIG3_Q, fig3_space
from .grid import GridState, inner_product, l2_distance, quadrature_weights
from .histories import (
    DEFAULT_THRESHOLD,
    PartitionSpec,
    consistency_sweep,
    contrary_inference_report,
)
from .model import LEFT_HALF, ClipMode, MovingBox, SimParams, initial_packet_sample
from .propagator import EvolutionPlan, evolve
from .spectral import (
    FULL,
    HALF,
    EigenBasis,
    coeff_full_closed,
    coeff_numeric,
    coeff_restricted_closed,
    coefficient_set,
    overlap_integral_Ink,
    overlap_series_spectral,
    overlap_t0_closed,
)

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

SCENARIOS = ("overlap-curve", "consistency", "contrary", "eigencheck", "zeno-convergence", "fig3")

EIGEN_TOL = 1e-6


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated run configuration: the simulation parameters plus run options."""

    scenario: str
    params: SimParams
    output_path: str = None
    threshold: float = DEFAULT_THRESHOLD
    delta: float = None
    clip_mode: str = "clip"
    n_samples: int = 201
    zeno_ladder: tuple = (8, 32, 128, 512)
    source: str = field(default="", repr=False)

    def digest(self):
        """Hex digest of the canonical resolved configuration."""
        items = dataclasses.asdict(self.params)
        items.update(scenario=self.scenario, threshold=self.threshold, delta=self.delta,
                     clip_mode=self.clip_mode, n_samples=self.n_samples,
                     zeno_ladder=self.zeno_ladder)
        text = "\n".join(f"{k}={items[k]!r}" for k in sorted(items))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _ladder(text):
    vals = tuple(_positive_int(t) for t in text.replace(",", " ").split())
    if not vals:
        raise ValueError("needs at least one value")
    return vals


def _fraction_float(text):
    # accept "1/20000" alongside plain floats
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


_SIM_KEYS = {
    "a": _fraction_float,
    "q": _fraction_float,
    "x0_frac": _fraction_float,
    "lambda_frac": _fraction_float,
    "n_grid": _positive_int,
    "dt_frac": _fraction_float,
    "tau_frac": _fraction_float,
    "n_modes": _positive_int,
}
_RUN_KEYS = {
    "scenario": str,
    "output_path": str,
    "threshold": _fraction_float,
    "delta": _fraction_float,
    "clip_mode": str,
    "n_samples": _positive_int,
    "zeno_ladder": _ladder,
}
KNOWN_KEYS = {**_SIM_KEYS, **_RUN_KEYS}

DEFAULTS_HELP = """\
keys and defaults:
  scenario      one of {scenarios} (required)
  a             0.05       packet width sigma / L
  q             40 pi      momentum p0 L / hbar
  x0_frac       -0.5       initial centre / L
  lambda_frac   0.125      moving-box half-width / L
  n_grid        16385      grid points on [-L, L] (odd keeps x = 0 on a node)
  dt_frac       1/20000    time step / T_cl
  tau_frac      0.75       horizon / T_cl
  n_modes       320        full-well modes (half well uses n_modes / 2)
  threshold     0.01       consistency threshold on |D(h, hbar)|
  delta         threshold  slack for "probability one"
  clip_mode     clip       moving box at walls: clip or freeze
  n_samples     201        time samples on [0, 2 T_cl] for overlap-curve
  zeno_ladder   8 32 128 512   projection counts for zeno-convergence
  output_path   (stdout)   where to write; --out overrides
""".format(scenarios=", ".join(SCENARIOS))


def _parse_lines(text, values, lines, origin):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        where = lineno if origin is None else None
        prefix = "" if origin is None else f"{origin}: "
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{prefix}expected 'key = value', got {raw.strip()!r}", where)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{prefix}unknown key {key!r}", where)
        values[key] = value
        lines[key] = lineno if origin is None else origin


def parse_config(text, overrides=(), scenario=None):
    """Parse and validate configuration text.

    Parameters
    ----------
    text : str
        ``key = value`` lines.
    overrides : sequence of str
        Extra ``key=value`` assignments applied after the file.
    scenario : str, optional
        Scenario given on the command line; must agree with the file if both
        are present.

    Returns
    -------
    ScenarioConfig

    Raises
    ------
    ConfigError
        Unknown, missing or out-of-range keys; the message carries the line.
    """
    values, lines = {}, {}
    _parse_lines(text, values, lines, None)
    for item in overrides:
        _parse_lines(item, values, lines, "--set")
    if scenario is not None:
        if "scenario" in values and values["scenario"] and values["scenario"] != scenario:
            raise ConfigError(
                f"scenario {values['scenario']!r} in the file disagrees with {scenario!r}",
                lines["scenario"],
            )
        values["scenario"] = scenario
        lines.setdefault("scenario", None)

    def line_of(key):
        ln = lines.get(key)
        return ln if isinstance(ln, int) else None

    if not values.get("scenario"):
        raise ConfigError("missing or empty key 'scenario'", line_of("scenario"))
    if values["scenario"] not in SCENARIOS:
        raise ConfigError(
            f"scenario must be one of {', '.join(SCENARIOS)}; got {values['scenario']!r}",
            line_of("scenario"),
        )

    parsed = {}
    for key, raw in values.items():
        if raw == "":
            raise ConfigError(f"empty value for {key!r}", line_of(key))
        try:
            parsed[key] = KNOWN_KEYS[key](raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})", line_of(key)) from None
        if isinstance(parsed[key], float) and not math.isfinite(parsed[key]):
            raise ConfigError(f"{key!r} must be finite", line_of(key))

    sim = {k: parsed[k] for k in _SIM_KEYS if k in parsed}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            params = SimParams(**sim)
    except HistlabError as exc:
        key = next((k for k in sim if k in str(exc)), None)
        raise ConfigError(f"out of range: {exc}", line_of(key)) from None

    for key in ("threshold", "delta"):
        if key in parsed and not parsed[key] > 0:
            raise ConfigError(f"{key!r} must be positive", line_of(key))
    clip = parsed.get("clip_mode", "clip")
    if clip not in ("clip", "freeze"):
        raise ConfigError("clip_mode must be 'clip' or 'freeze'", line_of("clip_mode"))

    return ScenarioConfig(
        scenario=parsed["scenario"],
        params=params,
        output_path=parsed.get("output_path"),
        threshold=parsed.get("threshold", DEFAULT_THRESHOLD),
        delta=parsed.get("delta"),
        clip_mode=clip,
        n_samples=parsed.get("n_samples", 201),
        zeno_ladder=parsed.get("zeno_ladder", (8, 32, 128, 512)),
        source=text,
    )


# --- output -------------------------------------------------------------------

def _fmt(v):
    return "%.17g" % v


def write_atomic(path, text):
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".histlab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _provenance(config):
    return f"# histlab {__version__} config-hash={config.digest()}\n"


def _csv(config, header, rows):
    buf = io.StringIO()
    buf.write(_provenance(config))
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(c if isinstance(c, str) else _fmt(c) for c in row) + "\n")
    return buf.getvalue()


@dataclass
class RunResult:
    text: str
    exit_code: int = EXIT_OK


# --- scenarios ----------------------------------------------------------------

def _sample_times(config):
    return np.linspace(0.0, 2.0, config.n_samples)


def overlap_curve_rows(config):
    """Spectral and grid rows of A(tau) on [0, 2] T_cl."""
    p = config.params
    times = _sample_times(config)
    spectral = overlap_series_spectral(p, times).values
    initial = initial_packet_sample(p)
    left = initial_packet_sample(p, interval=(LEFT_HALF.lo, LEFT_HALF.hi))
    full = evolve(initial, EvolutionPlan.full(2.0), p, times)
    restricted = evolve(left, EvolutionPlan.restricted(LEFT_HALF, 2.0), p, times)
    grid_vals = np.array([inner_product(r, f) for r, f in zip(restricted.states, full.states)])
    rows = []
    for method, vals in (("spectral", spectral), ("grid", grid_vals)):
        for t, A in zip(times, vals):
            if not np.isfinite(A):
                raise NumericError(f"non-finite overlap at tau = {t}")
            rows.append((float(t), abs(A), abs(A) ** 2, A.real, A.imag, method))
    return rows


def run_overlap_curve(config):
    rows = overlap_curve_rows(config)
    header = ["t_over_Tcl", "abs_A", "abs_A_sq", "re_A", "im_A", "method"]
    return RunResult(_csv(config, header, rows))


def _clip(config):
    return ClipMode(config.clip_mode)


def _sets(config):
    p = config.params
    tau = p.tau_frac
    set1 = PartitionSpec(LEFT_HALF, tau, "h1")
    set2 = PartitionSpec(MovingBox(p.lambda_frac, _clip(config)), tau, "h2")
    return set1, set2


def run_consistency(config):
    """Sweep |D(h1, h1bar)| over [0, 2] T_cl for the static partition."""
    p = config.params
    times = _sample_times(config)
    sweep = consistency_sweep(initial_packet_sample(p), LEFT_HALF, p, times)
    rows = zip(sweep.taus, sweep.epsilon, sweep.d_hh, sweep.d_hbar)
    text = _csv(config, ["t_over_Tcl", "epsilon", "d_hh", "d_hbar_hbar"], rows)
    return RunResult(text)


def _matrix_lines(report):
    m = report.matrix.entries
    out = []
    for i, name in enumerate(("h", "hbar")):
        cells = "  ".join(f"{m[i, j].real:+.10f}{m[i, j].imag:+.10f}i" for j in range(2))
        out.append(f"  D[{name}, .] = {cells}")
    return out


def run_contrary(config):
    p = config.params
    set1, set2 = _sets(config)
    rep = contrary_inference_report(set1, set2, p, delta=config.delta, threshold=config.threshold)
    lines = [
        f"# histlab {__version__} config-hash={config.digest()}",
        f"contrary inference at tau = {p.tau_frac:g} T_cl (threshold {config.threshold:g}, "
        f"delta {rep.delta:g})",
    ]
    for r in (rep.report1, rep.report2):
        lines.append(f"set {r.label}:")
        lines.extend(_matrix_lines(r))
        lines.append(f"  epsilon = {r.epsilon:.6g}  consistent = {r.consistent}")
    r1, r2 = rep.report1, rep.report2
    lines.append(
        f"p(h1) = {r1.candidate_h:.6g}  p(h1bar) = {r1.candidate_hbar:.6g}  "
        f"p(h2) = {r2.candidate_h:.6g}  p(h2bar) = {r2.candidate_hbar:.6g}"
    )
    if not (r1.consistent and r2.consistent):
        lines.append("  (values of an inconsistent set are candidate values, not probabilities)")
    c = rep.crossing
    lines.append(f"crossing witness tau = {c.witness:.6g}" if c.implied else "crossing witness: none")
    lines.append(f"leaked norm of h2 box = {rep.leaked2:.6g}")
    for w in rep.regime_warnings:
        lines.append(f"warning: {w}")
    if rep.contrary:
        lines.append("verdict: CONTRARY")
    else:
        lines.append("verdict: NOT CONTRARY")
        for g in rep.failed_gates:
            lines.append(f"  failed gate: {g}")
    return RunResult("\n".join(lines) + "\n")


def eigencheck_rows(params):
    """(name, max relative error, passed) for each closed form against quadrature.

    Relative errors are normalised by the largest quadrature value in each
    family so that coefficients far in the tails do not dominate.
    """
    a, q, x0 = params.a, params.q, params.x0_frac
    packet = initial_packet_sample(params, clamp=False)
    left = initial_packet_sample(params, interval=(-1.0, 0.0), clamp=False)
    n_full = params.n_modes
    n_half = max(params.n_modes // 2, 1)
    peak_n = max(int(round(2 * q / math.pi)), 1)
    peak_k = max(int(round(q / math.pi)), 1)
    # the closed forms do not depend on the truncation, so the oracle range
    # is fixed by the peak index alone
    ns = np.arange(1, 2 * peak_n + 1)
    ks = np.arange(1, 2 * peak_k + 1)
    fb = EigenBasis(FULL, max(ns[-1], 40))
    hb = EigenBasis(HALF, max(ks[-1], 40))

    def rel(closed, quad):
        closed, quad = np.asarray(closed), np.asarray(quad)
        scale = np.max(np.abs(quad))
        return float(np.max(np.abs(closed - quad)) / scale) if scale > 0 else float(np.max(np.abs(closed)))

    c_closed = np.array([coeff_full_closed(n, a, q, x0) for n in ns])
    c_quad = np.array([coeff_numeric(fb, n, packet) for n in ns])
    b_closed = np.array([coeff_restricted_closed(k, a, q, x0) for k in ks])
    b_quad = np.array([coeff_numeric(hb, k, left) for k in ks])

    x = packet.x
    n_mesh, k_mesh = np.meshgrid(np.arange(1, 41), np.arange(1, 41), indexing="ij")
    i_closed = overlap_integral_Ink(n_mesh, k_mesh)
    mask = x <= 0
    xs = x[mask]
    sub = GridState(np.zeros(xs.size, complex), xs, (-1.0, 0.0))
    u = fb.functions(xs, np.arange(1, 41))
    v = hb.functions(xs, np.arange(1, 41))
    w = quadrature_weights(xs.size, sub.dx)
    i_quad = (u * w) @ v.T

    a0_closed = overlap_t0_closed(a, x0)
    a0_quad = abs(inner_product(left, packet))

    full_set = coefficient_set(EigenBasis(FULL, n_full), params)
    half_set = coefficient_set(EigenBasis(HALF, n_half), params)
    parseval = max(full_set.parseval_deficit(), half_set.parseval_deficit())

    rows = [
        ("c_n closed vs quadrature", rel(c_closed, c_quad)),
        ("b_k closed vs quadrature", rel(b_closed, b_quad)),
        ("I_nk closed vs quadrature", rel(i_closed, i_quad)),
        ("A(0) closed vs quadrature", abs(a0_closed - a0_quad) / a0_quad),
        ("Parseval deficit", parseval),
    ]
    return [(name, err, bool(err <= EIGEN_TOL)) for name, err in rows]


def run_eigencheck(config):
    rows = eigencheck_rows(config.params)
    lines = [f"# histlab {__version__} config-hash={config.digest()}",
             f"{'check':<28}{'max rel. error':>16}  result (tol {EIGEN_TOL:g})"]
    for name, err, ok in rows:
        lines.append(f"{name:<28}{err:>16.3e}  {'pass' if ok else 'FAIL'}")
    ok = all(r[2] for r in rows)
    return RunResult("\n".join(lines) + "\n", EXIT_OK if ok else EXIT_CHECK)


def zeno_distances(params, ladder, tau=None):
    """L2 distance between N-projection evolution and the restricted evolution."""
    tau = params.tau_frac if tau is None else tau
    initial = initial_packet_sample(params)
    target = evolve(initial, EvolutionPlan.restricted(LEFT_HALF, tau), params).final
    out = []
    for n in ladder:
        st = evolve(initial, EvolutionPlan.zeno(LEFT_HALF, n, tau), params).final
        out.append((n, l2_distance(st, target)))
    return out


def run_zeno_convergence(config):
    rows = zeno_distances(config.params, config.zeno_ladder)
    return RunResult(_csv(config, ["N", "l2_distance_to_restricted"], rows))


def fig3_lines():
    space = fig3_space()
    P, Q = FIG3_P, FIG3_Q
    Pb, Qb = space.complement(P), space.complement(Q)

    def name(ev):
        return "{" + ",".join(sorted(ev)) + "}"

    lines = ["Fig. 3 history space, amplitudes a=1 b=-1 c=1 d=-1 e=-1 (exact arithmetic)"]
    for label, ev in (("P", P), ("Q", Q), ("P-bar", Pb), ("Q-bar", Qb)):
        lines.append(f"mu({label} = {name(ev)}) = {space.quantum_measure(ev)}")
    for label, cells in (("{P, P-bar}", (P, Pb)), ("{Q, Q-bar}", (Q, Qb))):
        ok = space.is_consistent_partition(cells)
        lines.append(f"partition {label}: {'consistent' if ok else 'not consistent'}, "
                     f"D off-diagonal = {space.deco_value(*cells)}")
    covers = space.find_zero_covers()
    found = (P, Q) in covers or (Q, P) in covers
    lines.append(f"zero cover (P, Q) = ({name(P)}, {name(Q)}): {'found' if found else 'missing'} "
                 f"among {len(covers)} zero covers")
    lines.append(f"classify(P-bar, Q-bar) = {space.classify_pair(Pb, Qb)}")
    return lines


def run_fig3(config):
    lines = [f"# histlab {__version__} config-hash={config.digest()}"] + fig3_lines()
    return RunResult("\n".join(lines) + "\n")


RUNNERS = {
    "overlap-curve": run_overlap_curve,
    "consistency": run_consistency,
    "contrary": run_contrary,
    "eigencheck": run_eigencheck,
    "zeno-convergence": run_zeno_convergence,
    "fig3": run_fig3,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="histlab",
        description="Consistent-histories experiments for a wave packet in a square well.",
        epilog=DEFAULTS_HELP + "\nexit codes: 0 ok, 1 check failure, 2 config error, 3 numeric failure",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("scenario", choices=SCENARIOS)
    parser.add_argument("--config", help="configuration file (key = value lines)")
    parser.add_argument("--out", help="output path (default: output_path key or stdout)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key; may be repeated")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = ""
        if args.config is not None:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        config = parse_config(text, args.set, scenario=args.scenario)
    except ConfigError as exc:
        print(f"histlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"histlab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        result = RUNNERS[config.scenario](config)
    except (NumericError, TruncationError, FloatingPointError) as exc:
        print(f"histlab: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except PreconditionError as exc:
        print(f"histlab: numeric failure (precondition): {exc}", file=sys.stderr)
        return EXIT_NUMERIC

    out = args.out or config.output_path
    if out:
        write_atomic(out, result.text)
    else:
        sys.stdout.write(result.text)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
