"""Environment orchestration tests: views, step order, drivers, checkpointing.

The zero-noise comparison re-implements the full transition as straight-line
arithmetic inside the test, sharing no code with the package, and checks the
environment against it step by step.
"""

import math

import pytest

from industrialbench.dynamics import Action, DynamicsFault
from industrialbench.environment import (
    DataVector,
    EnvironmentConfig,
    EXTENDED_DIMS,
    IndustrialBenchmark,
    MARKOV_DIMS,
    OBSERVATION_DIMS,
    ResetRequired,
    SetPointDriver,
)
from industrialbench.rng import RandomStream, ZeroNoiseStream


def zero_noise_env(**overrides):
    overrides.setdefault("stream_factory", lambda seed: ZeroNoiseStream())
    return IndustrialBenchmark(EnvironmentConfig(**overrides))


# -- wire contract -----------------------------------------------------------


def test_observation_dimension_names():
    assert OBSERVATION_DIMS == (
        "SetPoint", "Velocity", "Gain", "Shift", "Consumption", "Fatigue",
    )


def test_markov_dimension_names():
    assert MARKOV_DIMS == (
        "SetPoint", "Velocity", "Gain", "Shift", "Consumption", "Fatigue",
        "OperationalCost_1", "OperationalCost_2", "OperationalCost_3",
        "OperationalCost_4", "OperationalCost_5", "OperationalCost_6",
        "OperationalCost_7", "OperationalCost_8", "OperationalCost_9",
        "MisCalibrationDomain", "MisCalibrationSystemResponse",
        "MisCalibrationPhiIdx", "FatigueLatentV", "FatigueLatentG",
    )


def test_extended_dimension_names():
    assert EXTENDED_DIMS == (
        "SetPoint", "Velocity", "EffectiveVelocity", "Gain", "EffectiveGain",
        "Shift", "EffectiveShift", "MisCalibrationDomain",
        "MisCalibrationSystemResponse", "MisCalibrationPhiIdx",
        "MisCalibration", "NoiseFreeConsumption", "Consumption", "Fatigue",
        "OperationalCost_0", "OperationalCost_1", "OperationalCost_2",
        "OperationalCost_3", "OperationalCost_4", "OperationalCost_5",
        "OperationalCost_6", "OperationalCost_7", "OperationalCost_8",
        "OperationalCost_9", "OperationalCostConv", "ModifiedOperationalCost",
        "FatigueLatentV", "FatigueLatentG",
    )
    assert set(MARKOV_DIMS) <= set(EXTENDED_DIMS)


# -- DataVector ---------------------------------------------------------------


def test_datavector_basics():
    v = DataVector(("a", "b", "c"), (1.0, 2.0, 3.0))
    assert v.get_keys() == ["a", "b", "c"]
    assert v.get_value("b") == 2.0
    assert v["c"] == 3.0
    assert v.get_values_array() == [1.0, 2.0, 3.0]
    assert list(v) == ["a", "b", "c"]
    assert len(v) == 3
    assert "a" in v and "z" not in v


def test_datavector_missing_key_is_an_error():
    v = DataVector(("a",), (1.0,))
    with pytest.raises(KeyError):
        v.get_value("missing")
    with pytest.raises(KeyError):
        v.set_value("missing", 0.0)


def test_datavector_rejects_duplicate_names():
    with pytest.raises(ValueError):
        DataVector(("a", "a"), (1.0, 2.0))


def test_datavector_rejects_length_mismatch():
    with pytest.raises(ValueError):
        DataVector(("a", "b"), (1.0,))


def test_datavector_clone_is_independent():
    v = DataVector(("a",), (1.0,))
    w = v.clone()
    w.set_value("a", 9.0)
    assert v.get_value("a") == 1.0
    assert w.get_value("a") == 9.0


def test_datavector_equality_and_mapping_roundtrip():
    v = DataVector(("a", "b"), (1.5, 2.5))
    assert DataVector.from_mapping(v.as_dict()) == v
    assert v != DataVector(("b", "a"), (2.5, 1.5))  # order is significant


# -- configuration and lifecycle ----------------------------------------------


def test_config_defaults_follow_data_setting():
    cfg = EnvironmentConfig()
    assert (cfg.set_point, cfg.velocity, cfg.gain, cfg.shift) == (50.0, 50.0, 50.0, 50.0)
    assert cfg.miscalibration == "disabled"


def test_config_rejects_out_of_range():
    with pytest.raises(ValueError):
        EnvironmentConfig(set_point=110.0)
    with pytest.raises(ValueError):
        EnvironmentConfig(velocity=-1.0)
    with pytest.raises(ValueError):
        EnvironmentConfig(miscalibration="sometimes")


def test_env_rejects_config_plus_overrides():
    with pytest.raises(ValueError):
        IndustrialBenchmark(EnvironmentConfig(), seed=3)


def test_reset_is_deterministic():
    a = IndustrialBenchmark(set_point=50.0, seed=1).reset()
    b = IndustrialBenchmark(set_point=50.0, seed=1).reset()
    assert a == b


def test_reset_places_steerings_at_defaults():
    obs = IndustrialBenchmark(seed=0).reset()
    assert obs["Velocity"] == 50.0
    assert obs["Gain"] == 50.0
    assert obs["Shift"] == 50.0


def test_step_before_reset_fails():
    env = IndustrialBenchmark(seed=0)
    with pytest.raises(ResetRequired):
        env.step(Action(0.0, 0.0, 0.0))
    with pytest.raises(ResetRequired):
        env.get_state()


def test_get_reward_before_first_step_fails():
    env = IndustrialBenchmark(seed=0)
    env.reset()
    with pytest.raises(ResetRequired):
        env.get_reward()


def test_same_seed_same_rewards():
    actions = [Action(0.3, -0.2, 0.5), Action(-1.0, 1.0, 0.0), Action(0.0, 0.0, 0.0)]
    runs = []
    for _ in range(2):
        env = IndustrialBenchmark(seed=77)
        env.reset()
        runs.append([env.step(a) for a in actions])
    assert runs[0] == runs[1]


def test_step_accepts_plain_sequences():
    env = IndustrialBenchmark(seed=1)
    env.reset()
    r1 = env.step([0.1, 0.2, -0.3])
    assert isinstance(r1, float)
    with pytest.raises(ValueError):
        env.step([2.0, 0.0, 0.0])


# -- draw accounting -----------------------------------------------------------


def test_reset_consumes_exactly_seven_draws():
    env = IndustrialBenchmark(seed=9)
    env.reset()
    assert env.stream.draw_count == 7


def test_step_consumes_seven_or_eight_draws():
    env = IndustrialBenchmark(seed=10)
    env.reset()
    stream = RandomStream(999)  # action source, independent of the audit
    for _ in range(300):
        before = env.stream.draw_count
        env.step(Action(stream.uniform(-1, 1), stream.uniform(-1, 1), stream.uniform(-1, 1)))
        spent = env.stream.draw_count - before
        state = env.get_internal_markov_state()
        escalated = max(state["FatigueLatentV"], state["FatigueLatentG"]) >= 1.2
        assert spent == (8 if escalated else 7)


# -- views ----------------------------------------------------------------------


def test_get_state_is_pure():
    env = IndustrialBenchmark(seed=2)
    env.reset()
    env.step(Action(0.1, 0.1, 0.1))
    assert env.get_state() == env.get_state()


def test_observation_projects_extended_state():
    env = IndustrialBenchmark(seed=3)
    env.reset()
    stream = RandomStream(4)
    for _ in range(50):
        env.step(Action(stream.uniform(-1, 1), stream.uniform(-1, 1), stream.uniform(-1, 1)))
        obs = env.get_state()
        ext = env.get_internal_markov_state()
        for name in OBSERVATION_DIMS:
            assert obs[name] == ext[name]


def test_extended_state_internal_consistency():
    env = IndustrialBenchmark(seed=5)
    env.reset()
    env.step(Action(0.4, -0.4, 0.2))
    ext = env.get_internal_markov_state()
    history = [ext[f"OperationalCost_{i}"] for i in range(10)]
    conv = (history[5] + 2.0 * history[6] + 3.0 * history[7]
            + 2.0 * history[8] + history[9]) / 9.0
    assert ext["OperationalCostConv"] == pytest.approx(conv, rel=1e-14)
    # drift disabled: all calibration dimensions are zero
    for name in ("MisCalibrationDomain", "MisCalibrationSystemResponse",
                 "MisCalibrationPhiIdx", "MisCalibration"):
        assert ext[name] == 0.0
    # the two modified-cost rows carry the same value
    assert ext["NoiseFreeConsumption"] == ext["ModifiedOperationalCost"]


def test_markov_state_is_a_projection_of_extended():
    env = IndustrialBenchmark(seed=6)
    env.reset()
    env.step(Action(0.0, 0.5, -0.5))
    markov = env.get_markov_state()
    ext = env.get_internal_markov_state()
    assert markov.get_keys() == list(MARKOV_DIMS)
    for name in MARKOV_DIMS:
        assert markov[name] == ext[name]


def test_reward_identity_and_purity():
    env = IndustrialBenchmark(seed=7)
    env.reset()
    stream = RandomStream(8)
    for _ in range(30):
        r = env.step(Action(stream.uniform(-1, 1), stream.uniform(-1, 1), stream.uniform(-1, 1)))
        obs = env.get_state()
        assert r == -(obs["Consumption"] + obs["Fatigue"])
        assert env.get_reward() == r
        assert env.get_reward() == r


# -- external drivers -----------------------------------------------------------


class WriteDriver:
    """Test driver writing a fixed value into one dimension each step."""

    def __init__(self, dim, value):
        self.dim = dim
        self.value = value
        self.seeds = []

    def filter(self, state):
        state.set_value(self.dim, self.value)

    def get_state(self):
        return DataVector((self.dim,), (self.value,))

    def set_configuration(self, config):
        self.value = config.get_value(self.dim)

    def set_seed(self, seed):
        self.seeds.append(seed)


def test_constant_set_point_driver_keeps_p():
    env = IndustrialBenchmark(set_point=30.0, seed=11)
    env.add_external_driver(SetPointDriver(30.0))
    env.reset()
    for _ in range(5):
        env.step(Action(0.1, 0.1, 0.1))
        assert env.get_state()["SetPoint"] == 30.0


def test_driver_rewrites_set_point_before_the_action():
    env = zero_noise_env(set_point=50.0, seed=0)
    env.add_external_driver(WriteDriver("SetPoint", 70.0))
    env.reset()
    env.step(Action(0.0, 0.0, 0.0))
    ext = env.get_internal_markov_state()
    assert ext["SetPoint"] == 70.0
    # the step's instantaneous cost already uses p = 70
    assert ext["OperationalCost_0"] == math.exp((2.0 * 70.0 + 4.0 * 50.0 + 2.5 * 50.0) / 100.0)


def test_drivers_apply_in_registration_order():
    env = IndustrialBenchmark(seed=12)
    env.add_external_driver(WriteDriver("SetPoint", 20.0))
    env.add_external_driver(WriteDriver("SetPoint", 80.0))
    env.reset()
    env.step(Action(0.0, 0.0, 0.0))
    assert env.get_state()["SetPoint"] == 80.0  # last registration wins


def test_driver_writing_non_exogenous_dimension_is_a_fault():
    env = IndustrialBenchmark(seed=13)
    env.add_external_driver(WriteDriver("Velocity", 99.0))
    env.reset()
    with pytest.raises(DynamicsFault):
        env.step(Action(0.0, 0.0, 0.0))


def test_driver_writing_out_of_range_set_point_is_a_fault():
    env = IndustrialBenchmark(seed=14)
    env.add_external_driver(WriteDriver("SetPoint", 150.0))
    env.reset()
    with pytest.raises(DynamicsFault):
        env.step(Action(0.0, 0.0, 0.0))


def test_driver_is_seeded_from_master_seed_at_reset():
    driver = WriteDriver("SetPoint", 50.0)
    env = IndustrialBenchmark(seed=15)
    env.add_external_driver(driver)
    env.reset()
    env.reset()
    assert len(driver.seeds) == 2
    assert driver.seeds[0] == driver.seeds[1]  # reseeded deterministically


# -- zero-noise straight-line comparison ----------------------------------------


def straight_line_trajectory(p, steps, action_seed):
    """Independent re-implementation of the deterministic transition.

    Plain local-variable arithmetic, written directly from the update
    equations with the noise terms set to zero and drift off.
    """
    alpha_s = 20.0 * math.sin(math.pi / 12.0) / 0.9
    v = g = s = 50.0
    o0 = math.exp((2.0 * p + 4.0 * v + 2.5 * g) / 100.0)
    hist = [o0] * 10
    h_v = h_g = 0.0
    stream = RandomStream(action_seed)

    results = []
    for _ in range(steps):
        dv = stream.uniform(-1.0, 1.0)
        dg = stream.uniform(-1.0, 1.0)
        ds = stream.uniform(-1.0, 1.0)
        v = min(100.0, max(0.0, v + dv))
        g = min(100.0, max(0.0, g + 10.0 * dg))
        s = min(100.0, max(0.0, s + alpha_s * ds))

        hist = [math.exp((2.0 * p + 4.0 * v + 2.5 * g) / 100.0)] + hist[:9]
        o_c = (hist[5] + 2.0 * hist[6] + 3.0 * hist[7] + 2.0 * hist[8] + hist[9]) / 9.0
        c = o_c  # zero observation noise, zero drift

        # effective values
        t_lo = (100.0 + p + 2.0) / (0.0 - p + 101.0)
        t_hi = (0.0 + p + 2.0) / (100.0 - p + 101.0)
        v_e = ((g + p + 2.0) / (v - p + 101.0) - t_lo) / (t_hi - t_lo)
        v_e = min(1.0, max(0.0, v_e))
        u_lo = 1.0 / (100.0 + p + 1.0)
        u_hi = 1.0 / (0.0 + p + 1.0)
        g_e = (1.0 / (g + p + 1.0) - u_lo) / (u_hi - u_lo)
        g_e = min(1.0, max(0.0, g_e))

        # zero noise: both combined components are 0
        h_v = v_e if v_e <= 0.05 else (min(5.0, 1.1 * h_v) if h_v >= 1.2 else 0.9 * h_v)
        h_g = g_e if g_e <= 0.05 else (min(5.0, 1.1 * h_g) if h_g >= 1.2 else 0.9 * h_g)
        if max(h_v, h_g) >= 1.2:
            alpha = 1.0 / (1.0 + math.exp(-2.4))  # gaussian collapses to its mean
        else:
            alpha = 0.0
        f_b = max(0.0, 30000.0 / (5.0 * v + 100.0) - 0.01 * g * g)
        f = f_b * (1.0 + 2.0 * alpha)
        results.append((v, g, s, c, f, -(c + f)))
    return results


def test_zero_noise_matches_straight_line_reimplementation():
    p, steps, action_seed = 50.0, 100, 424242
    env = zero_noise_env(set_point=p, seed=0)
    env.reset()
    stream = RandomStream(action_seed)
    expected = straight_line_trajectory(p, steps, action_seed)
    for step_index in range(steps):
        a = Action(stream.uniform(-1, 1), stream.uniform(-1, 1), stream.uniform(-1, 1))
        r = env.step(a)
        obs = env.get_state()
        v, g, s, c, f, r_exp = expected[step_index]
        assert obs["Velocity"] == pytest.approx(v, abs=1e-9)
        assert obs["Gain"] == pytest.approx(g, abs=1e-9)
        assert obs["Shift"] == pytest.approx(s, abs=1e-9)
        assert obs["Consumption"] == pytest.approx(c, abs=1e-9)
        assert obs["Fatigue"] == pytest.approx(f, abs=1e-9)
        assert r == pytest.approx(r_exp, abs=1e-9)


def test_zero_noise_first_step_reward_value():
    # hold at 50/50/50: c = exp(4.25), f_b = 30000/350 - 25, alpha = 0
    env = zero_noise_env(set_point=50.0, seed=0)
    env.reset()
    r = env.step(Action(0.0, 0.0, 0.0))
    assert r == pytest.approx(-(math.exp(4.25) + (30000.0 / 350.0 - 25.0)), rel=1e-12)


# -- checkpoint / restore ---------------------------------------------------------


def test_markov_restore_reproduces_future_exactly():
    env_a = IndustrialBenchmark(set_point=40.0, seed=21)
    env_a.reset()
    warmup = RandomStream(22)
    for _ in range(37):
        env_a.step(Action(warmup.uniform(-1, 1), warmup.uniform(-1, 1), warmup.uniform(-1, 1)))

    snapshot = env_a.get_markov_state().as_dict()
    stream_state = env_a.stream.state

    env_b = IndustrialBenchmark(set_point=40.0, seed=0)  # different seed on purpose
    env_b.inject_markov_state(snapshot, stream_state=stream_state)

    future = RandomStream(23)
    actions = [Action(future.uniform(-1, 1), future.uniform(-1, 1), future.uniform(-1, 1))
               for _ in range(100)]
    for a in actions:
        r_a = env_a.step(a)
        r_b = env_b.step(a)
        assert r_a == r_b
        assert env_a.get_state() == env_b.get_state()
    assert env_a.stream.state == env_b.stream.state


def test_inject_requires_all_markov_dimensions():
    env = IndustrialBenchmark(seed=0)
    with pytest.raises(ValueError, match="FatigueLatentG"):
        env.inject_markov_state({name: 0.0 for name in MARKOV_DIMS[:-1]})


def test_inject_restores_reward_identity():
    env_a = IndustrialBenchmark(seed=31)
    env_a.reset()
    env_a.step(Action(0.2, 0.2, 0.2))
    env_b = IndustrialBenchmark(seed=0)
    env_b.inject_markov_state(env_a.get_markov_state().as_dict())
    obs = env_b.get_state()
    assert env_b.get_reward() == -(obs["Consumption"] + obs["Fatigue"])
