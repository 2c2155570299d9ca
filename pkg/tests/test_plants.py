"""Plant dynamics, sensing noise, and the discounted LQ oracle."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wncs.plants import LinearPlant, PendulumPlant, lq_oracle, wrap_angle

# frozen from scripts/lq_value_iteration_oracle.py (grid value iteration,
# independent of the Riccati recursion): a=0.9 b=0.5 q=r=1 gamma=0.99
VI_GAIN = 0.618000
VI_P = 2.112352


class TestLinearPlant:
    def test_identity_dynamics(self):
        plant = LinearPlant(a=1.0, b=0.0)
        s = plant.step(np.array([3.0]), np.array([7.0]))
        assert s[0] == 3.0

    def test_step_and_reward_hand_values(self):
        plant = LinearPlant(a=0.9, b=0.5)
        s = np.array([2.0])
        u = np.array([1.0])
        assert plant.step(s, u)[0] == pytest.approx(2.3, abs=1e-12)
        assert plant.reward(s, u) == pytest.approx(-5.0, abs=1e-12)

    def test_step_deterministic(self):
        plant = LinearPlant()
        s, u = np.array([1.3]), np.array([-0.4])
        assert plant.step(s, u)[0] == plant.step(s, u)[0]

    def test_nonfinite_rejected(self):
        plant = LinearPlant()
        with pytest.raises(ValueError, match="non-finite"):
            plant.step(np.array([np.nan]), np.array([0.0]))
        with pytest.raises(ValueError, match="non-finite"):
            plant.step(np.array([0.0]), np.array([np.inf]))

    def test_measure_noise_free(self):
        plant = LinearPlant(noise_std=0.0)
        rng = np.random.default_rng(0)
        s = np.array([1.5])
        assert np.array_equal(plant.measure(s, rng), s)

    @pytest.mark.parametrize("sigma,tol", [(0.01, 0.0005), (0.05, 0.002)])
    def test_measure_noise_std(self, sigma, tol):
        plant = LinearPlant(noise_std=sigma)
        rng = np.random.default_rng(1)
        s = np.zeros(1)
        draws = np.array([plant.measure(s, rng)[0] for _ in range(100_000)])
        assert abs(draws.std() - sigma) < tol
        assert abs(draws.mean()) < tol

    def test_reset_seeded(self):
        plant = LinearPlant()
        s1 = plant.reset(np.random.default_rng(42))
        s2 = plant.reset(np.random.default_rng(42))
        s3 = plant.reset(np.random.default_rng(43))
        assert np.array_equal(s1, s2)
        assert s1[0] != s3[0]


class TestPendulum:
    def test_upright_equilibrium(self):
        plant = PendulumPlant()
        s = plant.step(np.array([0.0, 0.0]), np.array([0.0]))
        assert abs(s[0]) < 1e-12 and abs(s[1]) < 1e-12

    def test_hanging_equilibrium(self):
        plant = PendulumPlant()
        s = plant.step(np.array([math.pi, 0.0]), np.array([0.0]))
        assert abs(wrap_angle(s[0] - math.pi)) < 1e-12
        assert abs(s[1]) < 1e-12

    def test_reset_jitter_band(self):
        plant = PendulumPlant()
        rng = np.random.default_rng(3)
        for _ in range(200):
            s = plant.reset(rng)
            assert abs(wrap_angle(s[0] - math.pi)) <= 0.1 + 1e-12
            assert s[1] == 0.0

    def test_reward_components(self):
        plant = PendulumPlant()
        s = np.array([0.5, -1.0])
        u = np.array([2.0])
        expected = -(0.25 + 0.1 * 1.0 + 0.001 * 4.0)
        assert plant.reward(s, u) == pytest.approx(expected, abs=1e-12)

    def test_reward_wraps_angle(self):
        plant = PendulumPlant()
        r_wrapped = plant.reward(np.array([math.pi + 0.1, 0.0]),
                                 np.array([0.0]))
        r_direct = plant.reward(np.array([-math.pi + 0.1, 0.0]),
                                np.array([0.0]))
        assert r_wrapped == pytest.approx(r_direct, abs=1e-9)

    def test_energy_bounded_oscillation(self):
        # symplectic integration: energy error oscillates without drift
        plant = PendulumPlant()
        s = np.array([math.pi - 0.3, 0.0])
        e0 = plant.energy(s)
        errs = []
        for _ in range(2000):
            s = plant.step(s, np.array([0.0]))
            errs.append(plant.energy(s) - e0)
        errs = np.array(errs)
        assert np.abs(errs).max() < 0.15
        assert abs(errs[-500:].mean()) < 0.05

    def test_torque_accelerates(self):
        plant = PendulumPlant()
        s = plant.step(np.array([math.pi, 0.0]), np.array([1.0]))
        assert s[1] > 0.0


class TestWrapAngle:
    @given(st.floats(min_value=-50.0, max_value=50.0))
    @settings(max_examples=200, deadline=None)
    def test_range_and_equivalence(self, theta):
        w = wrap_angle(theta)
        assert -math.pi < w <= math.pi
        assert abs(math.sin(w) - math.sin(theta)) < 1e-9
        assert abs(math.cos(w) - math.cos(theta)) < 1e-9

    def test_boundary(self):
        assert wrap_angle(math.pi) == math.pi
        assert wrap_angle(-math.pi) == math.pi


class TestLqOracle:
    def test_zero_a_gives_zero_gain(self):
        gain, p = lq_oracle(0.0, 1.0, 1.0, 1.0, 0.99)
        assert gain == pytest.approx(0.0, abs=1e-12)
        assert p == pytest.approx(1.0, abs=1e-10)

    def test_matches_value_iteration(self):
        gain, p = lq_oracle(0.9, 0.5, 1.0, 1.0, 0.99)
        assert gain == pytest.approx(VI_GAIN, abs=1e-3)
        assert p == pytest.approx(VI_P, abs=1e-3)

    def test_myopic_limit(self):
        # as gamma -> 0 the gain collapses to the immediate-cost minimizer
        gain, p = lq_oracle(0.9, 0.5, 1.0, 1.0, 1e-9)
        assert abs(gain) < 1e-6
        assert p == pytest.approx(1.0, abs=1e-6)

    def test_rollout_matches_value_prediction(self):
        a, b, q, r, gamma = 0.9, 0.5, 1.0, 1.0, 0.99
        gain, p = lq_oracle(a, b, q, r, gamma)
        plant = LinearPlant(a=a, b=b, q=q, r=r)
        for s0 in (-2.0, 0.3, 1.7):
            s = np.array([s0])
            ret = 0.0
            disc = 1.0
            for _ in range(6000):
                u = np.array([-gain * s[0]])
                ret += disc * plant.reward(s, u)
                s = plant.step(s, u)
                disc *= gamma
            assert ret == pytest.approx(-p * s0 * s0, abs=1e-6)

    def test_invalid_args(self):
        with pytest.raises(ValueError, match="gamma"):
            lq_oracle(0.9, 0.5, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            lq_oracle(0.9, 0.5, 1.0, 0.0, 0.99)
