"""Eigenexpansions in the full well [-1, 1] and the left half well [-1, 0].

Full-well modes are u_n(x) = sin(n pi (x + 1) / 2) with energy n^2 pi^2 / 8;
half-well modes are v_k(x) = sqrt(2) sin(k pi x) with energy k^2 pi^2 / 2
(hbar = M = L = 1). The packet coefficients have closed forms in terms of
the complex error function; they are evaluated through the Faddeeva
function so the huge Gaussian prefactors cancel analytically instead of
overflowing.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, wofz

from .errors import DomainError, StructuralError, TruncationError
from .grid import GridState, integrate
from .model import normalization_constant

FULL = "full"
HALF = "half"
BASE_ENERGY = math.pi ** 2 / 2.0  # E = pi^2 hbar^2 / (2 M L^2)
PARSEVAL_LIMIT = 1e-4


@dataclass(frozen=True)
class EigenBasis:
    """Dirichlet eigenbasis of one of the two wells."""

    well: str = FULL
    n_modes: int = 320

    def __post_init__(self):
        if self.well not in (FULL, HALF):
            raise StructuralError(f"unknown well {self.well!r}")
        if self.n_modes < 1:
            raise DomainError("n_modes must be positive")

    @property
    def interval(self):
        return (-1.0, 1.0) if self.well == FULL else (-1.0, 0.0)

    @property
    def indices(self):
        return np.arange(1, self.n_modes + 1)

    def energies(self):
        return eigen_energy(self.well, self.indices)

    def functions(self, x, n=None):
        """Mode values, shape (len(n), len(x)), zero outside the well."""
        n = self.indices if n is None else np.atleast_1d(n)
        return eigenfunction(self.well, n, x)


@dataclass(frozen=True)
class CoefficientSet:
    """Expansion coefficients, ``values[i]`` belonging to mode ``i + 1``."""

    basis: EigenBasis
    values: np.ndarray

    def parseval_deficit(self):
        return float(1.0 - np.sum(np.abs(self.values) ** 2))


@dataclass(frozen=True)
class OverlapSeries:
    """A(tau) = <restricted(tau)|full(tau)> at times given in units of T_cl."""

    times: np.ndarray
    values: np.ndarray


def _well_name(basis):
    return basis.well if isinstance(basis, EigenBasis) else basis


def eigen_energy(basis, n):
    """Energy of mode ``n``: (n^2 / 4) E in the full well, n^2 E in the half well."""
    n = np.asarray(n)
    if np.any(n < 1):
        raise DomainError("mode numbers start at 1")
    well = _well_name(basis)
    factor = 0.25 if well == FULL else 1.0
    e = factor * BASE_ENERGY * n.astype(float) ** 2
    return float(e) if e.ndim == 0 else e


def eigenfunction(basis, n, x):
    """Normalised mode(s) ``n`` at ``x``; shape (len(n), len(x)), or (len(x),) for scalar ``n``.

    The half-well modes vanish for x > 0.
    """
    well = _well_name(basis)
    scalar = np.ndim(n) == 0
    n = np.atleast_1d(np.asarray(n, dtype=float))[:, None]
    x = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
    if well == FULL:
        out = np.sin(n * np.pi * (x + 1.0) / 2.0)
    else:
        out = np.where(x <= 1e-12, math.sqrt(2.0) * np.sin(n * np.pi * x), 0.0)
    return out[0] if scalar else out


# --- closed forms ---------------------------------------------------------------

def _gauss_erf(x, y):
    """exp(-y^2) * erf(x + i y), without forming either factor separately.

    Uses erf(z) = 1 - exp(-z^2) w(i z) with the Faddeeva function w, which is
    bounded in the upper half plane; negative x is reflected through
    erf(-z) = -erf(z).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sign = np.where(x >= 0, 1.0, -1.0)
    xs = np.abs(x)
    ys = sign * y
    val = np.exp(-ys ** 2) - np.exp(-xs ** 2 - 2j * xs * ys) * wofz(-ys + 1j * xs)
    return sign * val


def _chirped_gaussian_integral(k, a, lo, hi):
    """Integral of exp(-s^2 / (4 a^2) + i k s) for s in [lo, hi]."""
    y = -a * np.asarray(k, dtype=float)
    return a * math.sqrt(math.pi) * (_gauss_erf(hi / (2 * a), y) - _gauss_erf(lo / (2 * a), y))


def coeff_full_closed(n, a, q, x0_frac=-0.5):
    """Closed-form full-well coefficients c_n of the initial packet.

    Writing s = x - x0, c_n is a difference of two chirped Gaussian integrals
    over s in [-1 - x0, 1 - x0] at wave numbers q +/- n pi / 2.
    """
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    n = np.asarray(n)
    if np.any(n < 1):
        raise DomainError("mode numbers start at 1")
    amp = normalization_constant(a, x0_frac)
    half = n * np.pi / 2.0
    shift = half * (x0_frac + 1.0)
    lo, hi = -1.0 - x0_frac, 1.0 - x0_frac
    plus = np.exp(1j * shift) * _chirped_gaussian_integral(q + half, a, lo, hi)
    minus = np.exp(-1j * shift) * _chirped_gaussian_integral(q - half, a, lo, hi)
    return amp * (plus - minus) / 2j


def coeff_restricted_closed(k, a, q, x0_frac=-0.5):
    """Closed-form half-well coefficients b_k of the packet renormalised on [-1, 0]."""
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    k = np.asarray(k)
    if np.any(k < 1):
        raise DomainError("mode numbers start at 1")
    amp = normalization_constant(a, x0_frac, (-1.0, 0.0))
    w = k * np.pi
    shift = w * x0_frac
    lo, hi = -1.0 - x0_frac, -x0_frac
    plus = np.exp(1j * shift) * _chirped_gaussian_integral(q + w, a, lo, hi)
    minus = np.exp(-1j * shift) * _chirped_gaussian_integral(q - w, a, lo, hi)
    return math.sqrt(2.0) * amp * (plus - minus) / 2j


def coeff_numeric(basis, n, packet):
    """Projection integral of ``packet`` onto mode(s) ``n`` by grid quadrature."""
    well = _well_name(basis)
    lo, hi = (-1.0, 1.0) if well == FULL else (-1.0, 0.0)
    modes = np.atleast_2d(eigenfunction(well, n, packet.x))
    vals = np.array([integrate(m * packet.amplitudes, packet.x, lo, hi) for m in modes])
    return vals[0] if np.ndim(n) == 0 else vals


def coefficient_set(basis, params):
    """Closed-form coefficients of the packet in ``basis``."""
    if basis.well == FULL:
        vals = coeff_full_closed(basis.indices, params.a, params.q, params.x0_frac)
    else:
        vals = coeff_restricted_closed(basis.indices, params.a, params.q, params.x0_frac)
    return CoefficientSet(basis, vals)


def overlap_integral_Ink(n, k):
    """Integral of u_n(x) v_k(x) over [-1, 0].

    Even n = 2l gives (sqrt(2)/2) cos(l pi) delta_{kl}; odd n = 2l + 1 gives
    -4 sqrt(2) k cos(l pi) / (pi (2(k - l) - 1) (2(k + l) + 1)).
    Broadcasts over ``n`` and ``k``.
    """
    n = np.asarray(n)
    k = np.asarray(k)
    if np.any(n < 1) or np.any(k < 1):
        raise DomainError("mode numbers start at 1")
    n, k = np.broadcast_arrays(n, k)
    l_even = n // 2
    even = np.where(k == l_even, (math.sqrt(2.0) / 2.0) * np.cos(l_even * np.pi), 0.0)
    l_odd = (n - 1) // 2
    denom = np.pi * (2 * (k - l_odd) - 1) * (2 * (k + l_odd) + 1)
    odd = -4.0 * math.sqrt(2.0) * k * np.cos(l_odd * np.pi) / denom
    out = np.where(n % 2 == 0, even, odd)
    return float(out) if out.ndim == 0 else out


def overlap_t0_closed(a, x0_frac=-0.5):
    """A(0) = <restricted packet|full packet> in closed form.

    For x0 = -L/2 this is sqrt(2) sqrt(erf(u)) / sqrt(erf(u) + erf(3u)) with
    u = 1 / (2 sqrt(2) a).
    """
    if not a > 0:
        raise DomainError(f"a must be positive, got {a}")
    s = math.sqrt(2.0) * a
    left = erf((0.0 - x0_frac) / s) - erf((-1.0 - x0_frac) / s)
    whole = erf((1.0 - x0_frac) / s) - erf((-1.0 - x0_frac) / s)
    return math.sqrt(left / whole)


def _truncated_sets(params):
    full = coefficient_set(EigenBasis(FULL, params.n_modes), params)
    half = coefficient_set(EigenBasis(HALF, max(params.n_modes // 2, 1)), params)
    for cs in (full, half):
        deficit = cs.parseval_deficit()
        if deficit > PARSEVAL_LIMIT:
            raise TruncationError(
                f"{cs.basis.well}-well series with {cs.basis.n_modes} modes misses "
                f"{deficit:.3g} of the norm; increase n_modes"
            )
    return full, half


def overlap_series_spectral(params, times):
    """A(tau) from the odd-mode series anchored at the closed-form A(0).

    A(tau) = A(0) + sum_{l,k} conj(b_k) c_{2l+1} (exp(i phi) - 1) I_{2l+1,k}
    with phi = pi^2 (4 k^2 - (2l + 1)^2) tau / (2 q). Only odd full-well
    modes enter because even ones are degenerate with half-well modes.

    Raises
    ------
    TruncationError
        When either coefficient set misses more than 1e-4 of the norm.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    full, half = _truncated_sets(params)
    c = full.values
    b = half.values
    n_odd = np.arange(1, full.basis.n_modes + 1, 2)
    k = half.basis.indices
    coupling = overlap_integral_Ink(n_odd[:, None], k[None, :])
    c_odd = c[n_odd - 1]
    bc = np.conj(b)
    # (E_k - E_n) t = pi^2 (4k^2 - n^2) tau / (2q)
    w_n = np.pi ** 2 * n_odd.astype(float) ** 2 / (2.0 * params.q)
    w_k = np.pi ** 2 * 4.0 * k.astype(float) ** 2 / (2.0 * params.q)
    base = c_odd @ coupling @ bc
    a0 = overlap_t0_closed(params.a, params.x0_frac)
    vals = np.empty(len(times), dtype=complex)
    for i, tau in enumerate(times):
        vals[i] = (c_odd * np.exp(-1j * w_n * tau)) @ coupling @ (bc * np.exp(1j * w_k * tau))
    return OverlapSeries(times, a0 + vals - base)


def overlap_series_direct(params, times, odd_only=False):
    """Plain double sum of conj(b_k) c_n exp(i (E_k - E_n) t) I_nk over all modes.

    ``odd_only=True`` keeps every odd-n term but only the diagonal even
    terms n = 2k, which is all the even part contributes anyway.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    full, half = _truncated_sets(params)
    n = full.basis.indices
    k = half.basis.indices
    coupling = overlap_integral_Ink(n[:, None], k[None, :])
    if odd_only:
        keep = (n[:, None] % 2 == 1) | (n[:, None] == 2 * k[None, :])
        coupling = np.where(keep, coupling, 0.0)
    t_cl = 4.0 / params.q
    e_n = eigen_energy(FULL, n)
    e_k = eigen_energy(HALF, k)
    vals = np.empty(len(times), dtype=complex)
    for i, tau in enumerate(times):
        t = tau * t_cl
        vals[i] = (full.values * np.exp(-1j * e_n * t)) @ coupling @ (
            np.conj(half.values) * np.exp(1j * e_k * t)
        )
    return OverlapSeries(times, vals)


def reconstruct_wavefunction(coeffs, t, grid):
    """Sum of c_n basis_n(x) exp(-i E_n t) on the grid (``t`` in internal units)."""
    basis = coeffs.basis
    x = np.asarray(grid, dtype=float)
    phases = coeffs.values * np.exp(-1j * basis.energies() * t)
    psi = phases @ basis.functions(x)
    return GridState(psi, x, basis.interval)
