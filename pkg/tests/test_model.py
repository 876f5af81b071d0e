import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetdiff.errors import InvalidPointError
from hetdiff.model import (Diffusivity, Dirac, ModelParams, Quantity, Sampled, Space, Step,
                           Variable, initial_pressure, p_to_u, sigma_of, u_to_p, x_to_y, y_to_x)

eps_st = st.floats(1e-8, 5.0)
q_st = st.floats(-0.5, 1.5)
x_st = st.floats(-1e3, 1e3, allow_nan=False).filter(lambda v: v != 0)


def ulps(a, b):
    return abs(a - b) / math.ulp(max(abs(a), abs(b)))


class TestSigma:
    @pytest.mark.parametrize("eps,q,expected", [
        (0.01, 0.5, 1.0), (0.01, 0.0, 0.01), (0.01, 1.0, 100.0), (0.25, 0.75, 2.0),
    ])
    def test_values(self, eps, q, expected):
        assert sigma_of(eps, q) == pytest.approx(expected, rel=1e-15)

    def test_overflow(self):
        with pytest.raises(OverflowError):
            sigma_of(1e-300, 2.0)

    def test_nonpositive_eps(self):
        with pytest.raises(ValueError):
            sigma_of(0.0, 0.5)

    @given(eps_st, q_st)
    def test_sigma_matches_power(self, eps, q):
        assert sigma_of(eps, q) == pytest.approx(eps ** (1 - 2 * q), rel=1e-13)


class TestParams:
    def test_range(self):
        with pytest.raises(ValueError):
            ModelParams(0.0, 0.5)
        with pytest.raises(ValueError):
            ModelParams(20.0, 0.5)
        with pytest.raises(ValueError):
            ModelParams(0.1, float("nan"))

    def test_frozen(self):
        p = ModelParams(0.1, 0.3)
        with pytest.raises(Exception):
            p.eps = 0.2

    def test_derived(self):
        p = ModelParams(0.0625, 0.5)
        assert p.sigma == 1.0
        assert p.eps_q == pytest.approx(0.25)
        assert p.stretch == pytest.approx(4.0)
        assert p.with_eps(0.25).eps_q == pytest.approx(0.5)


class TestDiffusivity:
    def test_values(self):
        d = Diffusivity(ModelParams(0.1, 0.2))
        assert np.array_equal(d(np.array([-1.0, 2.0])), [0.1, 1.0])

    def test_undefined_at_origin(self):
        d = Diffusivity(ModelParams(0.1, 0.2))
        with pytest.raises(InvalidPointError):
            d(0.0)


class TestTransforms:
    @settings(max_examples=300)
    @given(x_st, eps_st, q_st)
    def test_coordinate_round_trip(self, x, eps, q):
        p = ModelParams(eps, q)
        back = float(y_to_x(x_to_y(x, p), p))
        assert ulps(back, x) <= 2

    @settings(max_examples=300)
    @given(x_st, st.floats(0.0, 1e6), eps_st, q_st)
    def test_density_round_trip(self, x, u, eps, q):
        p = ModelParams(eps, q)
        back = float(p_to_u(u_to_p(u, x, p), x, p))
        assert back == u or ulps(back, u) <= 2

    @given(x_st, eps_st, q_st)
    def test_sign_preserved(self, x, eps, q):
        p = ModelParams(eps, q)
        assert np.sign(x_to_y(x, p)) == np.sign(x)

    def test_right_half_line_is_identity(self):
        p = ModelParams(0.01, 0.9)
        x = np.linspace(0.001, 5, 17)
        assert np.array_equal(x_to_y(x, p), x)
        assert np.array_equal(u_to_p(x, x, p), x)

    def test_pressure_reject_origin(self):
        p = ModelParams(0.01, 0.9)
        with pytest.raises(InvalidPointError):
            u_to_p(1.0, 0.0, p)
        with pytest.raises(InvalidPointError):
            p_to_u(1.0, 0.0, p)

    def test_left_pressure_scaling(self):
        p = ModelParams(0.01, 0.5)
        assert u_to_p(2.0, -1.0, p) == pytest.approx(0.2)


class TestInitialData:
    def test_dirac_positive(self):
        with pytest.raises(ValueError):
            Dirac(0.0)
        with pytest.raises(ValueError):
            Dirac(-1.0)

    def test_step_nonnegative(self):
        with pytest.raises(ValueError):
            Step(-1.0, 1.0)

    def test_step_pressure(self):
        p = ModelParams(0.0625, 0.5)
        s = initial_pressure(Step(1.0, 2.0), p)
        assert (s.a, s.b) == (1.0, pytest.approx(0.5))

    def test_sampled_pressure(self):
        p = ModelParams(0.01, 0.5)
        f = Sampled(lambda x: 1 + 0 * x, lambda x: 3 + 0 * x, 3.0)
        g = initial_pressure(f, p)
        y = np.array([-5.0, 5.0])
        assert np.allclose(g(y), [0.1, 3.0])

    def test_sampled_reject_origin(self):
        f = Sampled(np.cos, np.cos, 1.0)
        with pytest.raises(InvalidPointError):
            f(np.array([0.0]))

    def test_variable_label(self):
        assert Variable(Space.Y, Quantity.PRESSURE_P).label == "p(y)"
