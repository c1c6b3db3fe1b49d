import numpy as np
import pytest
from hypothesis import given, strategies as st

from energy_ergodic import ControlOutOfBounds, ControlSequence, DynamicsModel, control_effort, rollout, step

MODEL = DynamicsModel()


class TestStep:
    def test_rest(self):
        assert step(MODEL, (0, 0), (0, 0), 1.0).tolist() == [0.0, 0.0]

    def test_direct(self):
        assert np.allclose(step(MODEL, (0.3, 0.9), (1, -0.5), 0.1), (0.4, 0.85), rtol=0, atol=1e-15)

    def test_cumulative_sum(self, rng):
        u = rng.uniform(-1, 1, (100, 2))
        q = np.array([1.0, 1.0])
        for uj in u:
            q = step(MODEL, q, uj, 0.2)
        assert np.allclose(q, [1.0, 1.0] + 0.2 * u.sum(axis=0), rtol=0, atol=1e-12)

    def test_out_of_bounds(self):
        with pytest.raises(ControlOutOfBounds):
            step(MODEL, (0, 0), (1.5, 0), 0.1)

    def test_invalid_bounds(self):
        with pytest.raises(ValueError):
            DynamicsModel(control_bounds=((1.0, -1.0), (-1.0, 1.0)))


class TestRollout:
    def test_empty(self):
        traj = rollout(MODEL, (0.5, 0.5), ControlSequence(np.zeros((0, 2)), 0.1))
        assert traj.states.tolist() == [[0.5, 0.5]]

    def test_straight_line(self):
        traj = rollout(MODEL, (0, 0), ControlSequence(np.tile([0.5, 0.25], (8, 1)), 2.0))
        assert len(traj.states) == 9
        assert np.allclose(np.diff(traj.states, axis=0), [1.0, 0.5], rtol=0, atol=1e-15)

    def test_matches_fold_of_step(self, rng):
        u = rng.uniform(-1, 1, (30, 2))
        traj = rollout(MODEL, (1.2, 0.4), ControlSequence(u, 0.3))
        q = np.array([1.2, 0.4])
        for j, uj in enumerate(u):
            q = step(MODEL, q, uj, 0.3)
            assert np.array_equal(traj.states[j + 1], q)

    def test_zero_effort_is_stationary(self):
        traj = rollout(MODEL, (2, 1), ControlSequence(np.zeros((5, 2)), 1.0))
        assert np.all(traj.states == [2.0, 1.0])


class TestEffort:
    def test_zero(self):
        assert control_effort(ControlSequence(np.zeros((4, 2)), 0.1), (1, 1))[0] == 0.0

    def test_direct_sum(self):
        assert control_effort(ControlSequence(np.ones((10, 2)), 0.1), np.eye(2))[0] == pytest.approx(2.0)

    def test_gradient_finite_differences(self, rng):
        u = rng.uniform(-1, 1, (6, 2))
        R = (0.7, 1.9)
        _, g = control_effort(ControlSequence(u, 0.25), R)
        h = 1e-6
        for j in range(6):
            for d in range(2):
                up, dn = u.copy(), u.copy()
                up[j, d] += h
                dn[j, d] -= h
                fd = (control_effort(ControlSequence(up, 0.25), R)[0]
                      - control_effort(ControlSequence(dn, 0.25), R)[0]) / (2 * h)
                assert abs(fd - g[j, d]) <= 1e-8

    @pytest.mark.parametrize("R", [(0.0, 1.0), (-1.0, 1.0), [[1.0, 0.1], [0.1, 1.0]]])
    def test_rejects_bad_penalty(self, R):
        with pytest.raises(ValueError):
            control_effort(ControlSequence(np.ones((2, 2)), 0.1), R)

    @given(st.floats(0.0, 10.0))
    def test_homogeneous(self, s):
        u = np.array([[0.3, -0.2], [0.1, 0.4]])
        base = control_effort(ControlSequence(u, 0.5), (1.0, 2.0))[0]
        scaled = control_effort(ControlSequence(s * u, 0.5), (1.0, 2.0))[0]
        assert scaled == pytest.approx(s * s * base, rel=1e-12, abs=1e-15)
