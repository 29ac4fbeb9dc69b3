import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.special import erf

from histlab.errors import DomainError, PreconditionError
from histlab.grid import integrate, make_grid
from histlab.model import (
    FULL_WELL,
    LEFT_HALF,
    ClipMode,
    MovingBox,
    SemiclassicalWarning,
    SimParams,
    StaticInterval,
    boundary_check,
    classical_direction,
    classical_period,
    classical_position,
    initial_packet_sample,
    normalization_constant,
    region_interval,
)

P = SimParams()


class TestSimParams:
    def test_defaults_describe_fig5(self):
        assert P.a == 0.05
        assert P.q == pytest.approx(40 * math.pi)
        assert P.x0_frac == -0.5
        assert P.n_grid % 2 == 1

    @pytest.mark.parametrize(
        "kwargs",
        [dict(a=-1.0), dict(a=0.0), dict(q=0.0), dict(x0_frac=1.0), dict(lambda_frac=0.0),
         dict(lambda_frac=1.0), dict(n_grid=2), dict(n_modes=0), dict(dt_frac=0.0),
         dict(tau_frac=-0.1), dict(a=float("nan")), dict(q=float("inf"))],
    )
    def test_rejects_out_of_range(self, kwargs):
        with pytest.raises(DomainError):
            SimParams(**kwargs)

    def test_wide_packet_warns(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            with pytest.raises(SemiclassicalWarning):
                SimParams(a=0.3)
            SimParams(a=0.2)

    def test_moving_box_width_check(self):
        SimParams(a=0.02, lambda_frac=0.125).check_moving_box()
        with pytest.raises(PreconditionError, match="4 a"):
            SimParams(a=0.05, lambda_frac=0.2).check_moving_box()


class TestNormalization:
    def test_unit_norm_on_simpson_grid(self):
        state = initial_packet_sample(P, make_grid(4001))
        assert state.norm_sq() == pytest.approx(1.0, abs=1e-12)

    def test_erf_terms_nearly_one(self):
        u = 1.0 / (2.0 * math.sqrt(2.0) * 0.05)
        assert erf(u) > 1 - 1e-6 and erf(3 * u) > 1 - 1e-6

    def test_narrow_limit_is_free_gaussian(self):
        for a in (0.01, 0.02):
            assert normalization_constant(a) == pytest.approx((2 * math.pi * a * a) ** -0.25, rel=1e-12)

    def test_matches_written_formula(self):
        a = 0.05
        s = 2 * math.sqrt(2) * a
        expected = (a * math.sqrt(math.pi / 2) * (erf(1 / s) + erf(3 / s))) ** -0.5
        assert normalization_constant(a) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("a", [0.0, -0.1])
    def test_bad_width(self, a):
        with pytest.raises(DomainError):
            normalization_constant(a)


class TestInitialPacket:
    def test_endpoints_clamped(self):
        state = initial_packet_sample(P, make_grid(401))
        assert state.amplitudes[0] == 0 and state.amplitudes[-1] == 0

    def test_negligible_at_origin(self):
        x = make_grid(4001)
        state = initial_packet_sample(P, x)
        mod = np.abs(state.amplitudes)
        assert mod[2000] <= 1e-10 * mod.max()

    def test_modulus_symmetric_about_centre(self):
        x = make_grid(4001)
        mod = np.abs(initial_packet_sample(P, x).amplitudes)
        c = 1000  # x = -0.5
        np.testing.assert_allclose(mod[c - 900:c], mod[c + 900:c:-1], rtol=1e-12)

    def test_left_half_normalisation(self):
        state = initial_packet_sample(P, make_grid(4001), interval=(-1.0, 0.0))
        assert integrate(np.abs(state.amplitudes) ** 2, state.x, -1.0, 0.0) == pytest.approx(1.0, abs=1e-12)
        assert np.all(state.amplitudes[2001:] == 0)


class TestClassicalPath:
    def test_start(self):
        assert classical_position(0.0, P) == -0.5

    def test_quarter_period_reaches_box_centre(self):
        assert classical_position(0.25, P) == pytest.approx(0.5)

    def test_full_period_restores_position_and_direction(self):
        assert classical_position(1.0, P) == pytest.approx(-0.5)
        assert classical_direction(1.0, P) == classical_direction(0.0, P) == 1

    def test_half_period_mirror(self):
        assert classical_position(0.5, P) == pytest.approx(0.5)
        assert classical_direction(0.5, P) == -1

    def test_period(self):
        assert classical_period(P) == pytest.approx(0.031831, abs=1e-6)
        assert classical_period(2 * P.q) == pytest.approx(classical_period(P) / 2)
        with pytest.raises(DomainError):
            classical_period(0.0)

    def test_negative_time_rejected(self):
        with pytest.raises(DomainError):
            classical_position(-0.1, P)

    @given(st.floats(0, 50), st.floats(-0.99, 0.99))
    def test_periodic(self, tau, x0):
        p = SimParams(x0_frac=x0)
        assert classical_position(tau + 1.0, p) == pytest.approx(classical_position(tau, p), abs=1e-12)

    @given(st.floats(0, 10), st.floats(1e-9, 0.5))
    def test_lipschitz_and_confined(self, tau, eps):
        # speed is 4 L per T_cl
        x1, x2 = classical_position(tau, P), classical_position(tau + eps, P)
        assert abs(x2 - x1) <= 4 * eps + 1e-12
        assert -1.0 <= x1 <= 1.0


class TestRegions:
    def test_box_at_start(self):
        lo, hi = region_interval(MovingBox(0.125), 0.0, P)
        assert (lo, hi) == pytest.approx((-0.625, -0.375))

    def test_box_at_quarter_period(self):
        assert region_interval(MovingBox(0.125), 0.25, P) == pytest.approx((0.375, 0.625))

    def test_box_clipped_at_wall(self):
        tau = 0.375  # x_cl = 1
        lo, hi = region_interval(MovingBox(0.125), tau, P)
        assert (lo, hi) == pytest.approx((0.875, 1.0))
        assert hi - lo == pytest.approx(0.125)

    def test_box_frozen_at_wall(self):
        lo, hi = region_interval(MovingBox(0.125, ClipMode.FREEZE_AT_WALLS), 0.375, P)
        assert (lo, hi) == pytest.approx((0.75, 1.0))

    def test_static(self):
        assert region_interval(LEFT_HALF, 0.3, P) == (-1.0, 0.0)

    def test_invalid_regions(self):
        with pytest.raises(DomainError):
            StaticInterval(0.5, 0.5)
        with pytest.raises(DomainError):
            StaticInterval(-1.5, 0.0)
        with pytest.raises(DomainError):
            MovingBox(0.0)

    @given(st.floats(0, 20), st.floats(0.01, 1.0), st.sampled_from(list(ClipMode)))
    def test_interval_inside_well(self, tau, lam, mode):
        lo, hi = region_interval(MovingBox(lam, mode), tau, P)
        assert -1.0 <= lo < hi <= 1.0


class TestBoundaryCheck:
    def test_packet_vanishes_on_left_half_barrier(self):
        state = initial_packet_sample(P, make_grid(4001))
        assert boundary_check(state, LEFT_HALF) <= 1e-10

    def test_hard_walls(self):
        state = initial_packet_sample(P, make_grid(401))
        assert boundary_check(state, FULL_WELL) == 0.0

    def test_packet_centred_on_boundary(self):
        state = initial_packet_sample(P, make_grid(4001))
        assert boundary_check(state, StaticInterval(-0.5, 1.0)) == pytest.approx(1.0, abs=1e-6)

    def test_moving_region_needs_params(self):
        state = initial_packet_sample(P, make_grid(401))
        with pytest.raises(PreconditionError):
            boundary_check(state, MovingBox(0.125))
        assert boundary_check(state, MovingBox(0.125), 0.0, P) == pytest.approx(math.exp(-1.5625), rel=1e-9)
