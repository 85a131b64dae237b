import numpy as np
import pytest

from sfaforce.control import (
    LOG_COLUMNS,
    ControllerConfig,
    LoopSegment,
    LoopState,
    PidGains,
    ema_alpha,
    ema_step,
    read_time_series,
    run_closed_loop,
    see_pid_step,
    sfa_pid_step,
)
from sfaforce.kinematics import build_wrench_transform, default_see_geometry
from sfaforce.plant import (
    ContactModel,
    NoiseTable,
    Plant,
    PlantConfig,
    RelaxationConfig,
)
from sfaforce.sensing import SensingModel


def pd_config(**overrides):
    kwargs = dict(gains=PidGains(g_p=1.97, g_d=0.2))
    kwargs.update(overrides)
    return ControllerConfig(**kwargs)


def pi_config(**overrides):
    kwargs = dict(gains=PidGains(g_p=1.97, g_i=0.02))
    kwargs.update(overrides)
    return ControllerConfig(**kwargs)


class TestEma:
    def test_passthrough_alpha_one(self):
        assert ema_step(5.0, 100.0, 1.0) == 100.0

    def test_documented_alpha(self):
        # alpha for a 100 Hz cutoff at 250 Hz
        assert ema_step(0.0, 100.0, 0.919) == pytest.approx(91.90)

    def test_alpha_from_cutoff(self):
        assert ema_alpha(100.0, 250.0) == pytest.approx(0.919, abs=5e-4)

    def test_converges_within_three_steps(self):
        # residual factor (1-alpha)^3 = 5.3e-4 < 1% of the initial offset
        alpha = 0.919
        value = 0.0
        for _ in range(3):
            value = ema_step(value, 50.0, alpha)
        assert abs(value - 50.0) <= 0.01 * 50.0

    def test_invalid_alpha(self):
        with pytest.raises(ValueError):
            ema_step(0.0, 1.0, 0.0)


class TestSfaPidStep:
    def test_pure_proportional(self):
        cfg = ControllerConfig(gains=PidGains(g_p=1.97))
        flow, _ = sfa_pid_step(1.0, 0.0, LoopState.zero(1), cfg)
        assert flow == pytest.approx(1.97)

    def test_zero_error_zero_flow(self):
        cfg = pd_config()
        flow, _ = sfa_pid_step(3.0, 3.0, LoopState.zero(1), cfg)
        assert flow == 0.0

    def test_saturation_and_frozen_integral(self):
        cfg = ControllerConfig(gains=PidGains(g_p=1.97, g_i=0.5))
        flow, state = sfa_pid_step(10.0, 0.0, LoopState.zero(1), cfg)
        assert flow == 5.0
        assert state.integral[0] == 0.0  # conditional integration froze it

    def test_integral_accumulates_when_unsaturated(self):
        cfg = ControllerConfig(gains=PidGains(g_p=0.1, g_i=0.5))
        _, state = sfa_pid_step(1.0, 0.0, LoopState.zero(1), cfg)
        assert state.integral[0] == pytest.approx(1.0 * cfg.dt)

    def test_integral_unwinds_out_of_saturation(self):
        # while the output saturates positive, a negative error drives out of
        # saturation and must keep integrating (downward)
        cfg = ControllerConfig(gains=PidGains(g_p=0.0, g_i=1.0))
        state = LoopState(integral=np.array([20.0]), prev_error=np.zeros(1),
                          filtered_pressure=np.zeros(1), filtered_derivative=np.zeros(1))
        flow, state2 = sfa_pid_step(0.0, 1.0, state, cfg)  # error -1, output still +5
        assert flow == 5.0
        assert state2.integral[0] < state.integral[0]

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            sfa_pid_step(float("nan"), 0.0, LoopState.zero(1), pd_config())

    def test_p_term_linearity(self):
        cfg = ControllerConfig(gains=PidGains(g_p=0.4))
        f1, _ = sfa_pid_step(1.0, 0.0, LoopState.zero(1), cfg)
        f2, _ = sfa_pid_step(2.0, 0.0, LoopState.zero(1), cfg)
        assert f2 == 2.0 * f1


class TestSeePidStep:
    def setup_method(self):
        self.h = build_wrench_transform(default_see_geometry())
        self.model = SensingModel.matched(PlantConfig.coupled_default())

    def test_zero_demand_zero_flow(self):
        flows, _ = see_pid_step(np.zeros(3), np.zeros(3), self.h, self.model,
                                LoopState.zero(3), pi_config())
        np.testing.assert_allclose(flows, np.zeros(3))

    def test_reduces_to_sfa_for_single_actuator(self):
        h1 = np.array([[0.0], [0.0], [1.0]])
        model = SensingModel.matched(PlantConfig.single_default())
        cfg = pd_config()
        flows, _ = see_pid_step([0.0, 0.0, 2.0], [0.0], h1, model, LoopState.zero(1), cfg)
        flow_sfa, _ = sfa_pid_step(2.0, 0.0, LoopState.zero(1), cfg)
        assert flows[0] == pytest.approx(flow_sfa, rel=1e-12)

    def test_axial_demand_symmetric_first_step(self):
        flows, _ = see_pid_step([0.0, 0.0, 15.0], np.zeros(3), self.h, self.model,
                                LoopState.zero(3), pi_config())
        assert flows[0] == pytest.approx(flows[1], rel=1e-9)
        assert flows[1] == pytest.approx(flows[2], rel=1e-9)

    def test_singular_transform_rejected(self):
        from sfaforce.core import SingularTransformError

        with pytest.raises(SingularTransformError):
            see_pid_step([1.0, 0.0, 0.0], np.zeros(3), np.ones((3, 3)), self.model,
                         LoopState.zero(3), pi_config())


class TestControllerConfig:
    def test_cutoff_bounds(self):
        with pytest.raises(ValueError):
            ControllerConfig(gains=PidGains(), filter_cutoff=200.0)

    def test_negative_gain_rejected(self):
        with pytest.raises(ValueError):
            PidGains(g_p=-1.0)


class TestClosedLoop:
    def run_clamped(self, demand, inflation=0.6, duration=8.0, noise=False,
                    relaxation=False, seed=7):
        config = PlantConfig.single_default(
            noise=NoiseTable.bench_default() if noise else None,
            relaxation=RelaxationConfig(enabled=relaxation),
            rng_seed=seed,
        )
        v0 = inflation * config.v_max
        plant = Plant(config, initial_volume=[v0])
        clamp = ContactModel.clamped([config.extension_gain * v0])
        model = SensingModel.matched(config)
        segment = LoopSegment(duration=duration, contact=clamp, demand_act=demand)
        return run_closed_loop(plant, model, pd_config(), segment)

    def test_zero_demand_stays_at_rest(self):
        log = self.run_clamped(0.0, duration=2.0)
        assert np.max(np.abs(log.flow_cmd)) < 1e-9
        assert np.max(np.abs(log.f_true_act)) < 1e-9

    def test_step_demand_reaches_setpoint(self):
        log = self.run_clamped(4.0)
        window = int(0.8 * len(log))
        ss_err = np.abs(log.f_true_act[window:, 0] - 4.0)
        assert ss_err.mean() < 0.05
        outside = np.abs(log.f_true_act[:, 0] - 4.0) > 0.1
        settle_tick = int(np.max(np.nonzero(outside))) + 1
        assert log.t[settle_tick] - log.t[0] < 5.0

    def test_relaxation_drift_direction(self):
        # with material relaxation the true force creeps up while the
        # estimate pinned by the controller stays at the demand
        log = self.run_clamped(4.0, duration=30.0, relaxation=True)
        t = log.t[: len(log)]
        true = log.f_true_act[: len(log), 0]
        est = log.f_est_act[: len(log), 0]
        settled = t - t[0] > 5.0
        bins = np.array_split(true[settled], 10)
        means = np.array([b.mean() for b in bins])
        assert np.all(np.diff(means) > 0.0)
        assert np.max(np.abs(est[settled] - 4.0)) < 0.05
        assert means[-1] > 4.0 + 0.02

    def test_loop_determinism(self):
        a = self.run_clamped(4.0, duration=1.0, noise=True, seed=3)
        b = self.run_clamped(4.0, duration=1.0, noise=True, seed=3)
        assert np.array_equal(a.f_true_act, b.f_true_act)
        assert np.array_equal(a.p_raw, b.p_raw)
        assert np.array_equal(a.flow_cmd, b.flow_cmd)

    def test_flow_always_saturated_bound(self):
        log = self.run_clamped(6.0, duration=1.0)
        assert np.max(np.abs(log.flow_cmd)) <= 5.0 + 1e-12

    def test_dimension_mismatch_rejected(self):
        config = PlantConfig.single_default()
        plant = Plant(config, initial_volume=[1.0])
        model = SensingModel.matched(PlantConfig.coupled_default())
        segment = LoopSegment(duration=1.0, contact=ContactModel.free(), demand_act=0.0)
        with pytest.raises(ValueError):
            run_closed_loop(plant, model, pd_config(), segment)


class TestLogFormat:
    def test_csv_schema_and_precision(self, tmp_path):
        config = PlantConfig.single_default()
        plant = Plant(config, initial_volume=[1.0])
        model = SensingModel.matched(config)
        segment = LoopSegment(duration=0.1, contact=ContactModel.free(), demand_act=0.0)
        log = run_closed_loop(plant, model, pd_config(), segment)
        path = tmp_path / "log.csv"
        log.write_csv(path)
        raw = path.read_bytes()
        assert b"\r" not in raw  # LF endings only
        lines = raw.decode().splitlines()
        assert lines[0] == ",".join(LOG_COLUMNS)
        assert len(lines) == 1 + len(log) * plant.count
        # 9 significant digits
        value = format(np.pi * 100, ".9g")
        assert len(value.replace(".", "").lstrip("0")) <= 10

    def test_round_trip_read(self, tmp_path):
        config = PlantConfig.coupled_default()
        plant = Plant(config, initial_volume=[1.0, 1.0, 1.0])
        model = SensingModel.matched(config)
        h = build_wrench_transform(default_see_geometry())
        segment = LoopSegment(duration=0.1, contact=ContactModel.free(),
                              demand_cart=[0.0, 0.0, 0.0], wrench=h)
        log = run_closed_loop(plant, model, pi_config(), segment)
        path = tmp_path / "log.csv"
        log.write_csv(path)
        data = read_time_series(path)
        assert set(data) == set(LOG_COLUMNS)
        assert data["t"].size == len(log) * 3
        mask = data["act_index"] == 1.0
        np.testing.assert_allclose(data["V"][mask], log.volume[: len(log), 1], rtol=1e-8)

    def test_segment_validation(self):
        with pytest.raises(ValueError):
            LoopSegment(duration=1.0, contact=ContactModel.free())
        with pytest.raises(ValueError):
            LoopSegment(duration=1.0, contact=ContactModel.free(), demand_act=1.0,
                        demand_cart=[0.0, 0.0, 1.0])
        with pytest.raises(ValueError):
            LoopSegment(duration=1.0, contact=ContactModel.free(), demand_cart=[0.0, 0.0, 1.0])
