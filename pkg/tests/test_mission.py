import numpy as np
import pytest

from energy_ergodic import (BatteryParams, ContinuityBroken, MissionConfig, SwapPolicy, Trajectory, evaluate,
                            instantaneous_ergodicity, run_mission)
from energy_ergodic.battery import propagate

from conftest import STATIONS, one_gaussian, small_problem

# drains 0.6 per 150 s horizon; a grounded horizon adds 0.65 (capped at 1)
HEAVY = BatteryParams(flight_current_I=3.6, recharge_eta=0.95, recharge_theta=0.65)


def _mission(socs, horizons, policy=SwapPolicy.STAY_SAME):
    starts = STATIONS[:len(socs)]
    problem = small_problem(one_gaussian(), starts, socs=socs, params=HEAVY, N=15, T=150.0, K=5)
    return MissionConfig(problem, starts, horizons, policy)


class TestSmallMissions:
    def test_single_agent_breaks_at_second_horizon(self):
        with pytest.raises(ContinuityBroken) as info:
            run_mission(_mission([1.0], 3))
        assert info.value.horizon == 1

    def test_two_agents_alternate_within_band(self):
        log = run_mission(_mission([1.0, 0.5], 6))
        assert log.active_sets == [(0,), (1,), (0,), (1,), (0,), (1,)]
        # the band from iterating the fly/ground maps by hand
        drain, soc, lows, highs = 0.6, [1.0, 0.5], [], []
        for h in range(6):
            flyer = h % 2
            soc[flyer] -= drain
            soc[1 - flyer] = min(0.95 * soc[1 - flyer] + 0.65, 1.0)
            lows.append(min(soc))
            highs.append(max(soc))
        socs = [r.soc for r in log.records]
        assert min(socs) >= min(lows) - 1e-9
        assert max(socs) <= max(highs) + 1e-12

    def test_record_layout(self):
        config = _mission([1.0, 0.5], 2)
        log = run_mission(config)
        N, dt = config.problem_template.steps_N, config.problem_template.dt
        assert len(log.records) == log.expected_records() == 2 * N * 2
        for agent in (0, 1):
            times = [r.time_s for r in log.records if r.agent == agent]
            assert np.all(np.diff(times) > 0)
            assert times[0] == pytest.approx(dt)

    def test_too_few_stations(self):
        problem = small_problem(one_gaussian(), STATIONS[:3], N=5)
        with pytest.raises(ValueError, match="stations"):
            MissionConfig(problem, STATIONS[:1], 2)

    def test_station_outside_workspace(self):
        problem = small_problem(one_gaussian(), STATIONS[:1], N=5)
        with pytest.raises(ValueError, match="outside"):
            MissionConfig(problem, ((3.5, 1.0),), 2)


class TestInstantaneousErgodicity:
    def test_start_equals_stationary_metric(self):
        config = _mission([1.0], 1)
        basis = config.problem_template.basis
        q0 = np.array(STATIONS[0])
        parked = Trajectory(np.vstack([q0, q0]), 1.0)
        assert instantaneous_ergodicity([q0[None]], basis) == pytest.approx(
            evaluate([parked], basis).metric_value, rel=1e-13)

    def test_full_prefix_equals_plan_metric(self):
        config = _mission([1.0], 1)
        log = run_mission(config)
        plan = log.plans[0]
        full = instantaneous_ergodicity([t.samples for t in plan.trajectories], config.problem_template.basis)
        assert full == pytest.approx(plan.achieved_metric, rel=1e-12)
        assert log.ergodicity(0)[-1] == pytest.approx(plan.achieved_metric, rel=1e-12)


class TestCooperativeMission:
    def test_alternating_pairs(self, cooperative_run):
        _, log, _ = cooperative_run
        expect = [(0, 1) if h % 2 == 0 else (2, 3) for h in range(14)]
        assert log.active_sets == expect

    def test_every_horizon_has_an_explorer(self, cooperative_run):
        _, log, _ = cooperative_run
        for h in range(14):
            assert any(r.active for r in log.horizon_records(h))

    def test_record_count(self, cooperative_run):
        config, log, _ = cooperative_run
        assert len(log.records) == 14 * config.problem_template.steps_N * 4

    def test_conservation_of_agents(self, cooperative_run):
        _, log, _ = cooperative_run
        for h in range(14):
            active = {r.agent for r in log.horizon_records(h) if r.active}
            grounded = {r.agent for r in log.horizon_records(h) if not r.active}
            assert active.isdisjoint(grounded) and active | grounded == {0, 1, 2, 3}

    def test_landings_within_epsilon(self, cooperative_run):
        config, log, _ = cooperative_run
        eps = config.problem_template.epsilon
        for plan in log.plans:
            for traj, station in zip(plan.trajectories, plan.stations):
                assert np.linalg.norm(traj.states[-1] - station) <= eps

    def test_soc_positive(self, cooperative_run):
        _, log, _ = cooperative_run
        assert min(r.soc for r in log.records) > 0.0

    def test_position_continuity(self, cooperative_run):
        _, log, _ = cooperative_run
        last = {}
        for h, plan in enumerate(log.plans):
            recs = log.horizon_records(h)
            if h > 0:
                for row, i in enumerate(plan.active_set):
                    assert np.array_equal(plan.trajectories[row].states[0], last[i])
                for r in recs:
                    if not r.active:
                        assert np.array_equal(r.position, last[r.agent])
            for r in recs:
                last[r.agent] = np.array(r.position)

    def test_battery_bookkeeping(self, cooperative_run):
        config, log, _ = cooperative_run
        tmpl = config.problem_template
        params = tmpl.agents[0].params
        drain = params.drain(params.flight_current_I, tmpl.dt)
        prev = {i: a.battery.soc for i, a in enumerate(tmpl.agents)}
        for h in range(14):
            for r in log.horizon_records(h):
                if r.active:
                    assert r.soc == pytest.approx(prev[r.agent] - drain, abs=1e-12)
                elif r.time_s < tmpl.t0 + (h + 1) * tmpl.horizon_T - 1e-9:
                    assert r.soc == prev[r.agent]
                else:
                    assert r.soc == pytest.approx(min(0.95 * prev[r.agent] + 0.65, 1.0), abs=1e-12)
                prev[r.agent] = r.soc

    def test_flight_voltage_uses_flight_current(self, cooperative_run):
        config, log, _ = cooperative_run
        params = config.problem_template.agents[0].params
        state = config.problem_template.agents[0].battery
        dt = config.problem_template.dt
        first = [r for r in log.horizon_records(0) if r.agent == 0][0]
        state = propagate(state, params, params.flight_current_I, dt, dt)
        expect = float(params.ocv(state.soc)) - state.v1 - state.v2 - params.flight_current_I * params.R
        assert first.terminal_volts == pytest.approx(expect, abs=1e-12)

    def test_exploration_lowers_metric_before_return(self, cooperative_run):
        _, log, _ = cooperative_run
        ok = 0
        for h in range(14):
            e = log.ergodicity(h)
            q = len(e) // 4
            ok += np.mean(e[-q:]) <= np.mean(e[:q])
        assert ok >= 13
