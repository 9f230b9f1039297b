"""Stateful benchmark environment: step orchestration and state views.

One :class:`IndustrialBenchmark` instance owns one random stream and is
strictly single-threaded; run several instances with independent seeds for
parallelism.

Dimension names are a stable wire contract (``OBSERVATION_DIMS``,
``MARKOV_DIMS``, ``EXTENDED_DIMS``); dataset files, the stdio serve
protocol, and foreign-language bindings all key on them byte-for-byte.

Randomness contract (fixed draw order, one raw generator step per draw):

* ``reset`` consumes 7 draws: the consumption observation gaussian, then the
  six wear noise draws used to complete the initial observation.
* ``step`` consumes 7 draws in the same order, plus 1 extra gaussian if and
  only if the wear amplification is in its escalated regime (either latent
  at or above 1.2) after the latent update.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Mapping, Protocol, runtime_checkable

from . import dynamics as dyn
from .dynamics import Action, DynamicsFault, MisCalibrationState, Steerings
from .rng import RandomStream, derive_seed

OBSERVATION_DIMS = ("SetPoint", "Velocity", "Gain", "Shift", "Consumption", "Fatigue")

_COST_LAG_DIMS = tuple(f"OperationalCost_{i}" for i in range(1, 10))

MISCALIBRATION_DIMS = (
    "MisCalibrationDomain",
    "MisCalibrationSystemResponse",
    "MisCalibrationPhiIdx",
)

# The minimal state satisfying the Markov property: 20 dimensions.
MARKOV_DIMS = (
    OBSERVATION_DIMS
    + _COST_LAG_DIMS
    + MISCALIBRATION_DIMS
    + ("FatigueLatentV", "FatigueLatentG")
)

# Full internal state, including analysis-only quantities: 28 dimensions.
EXTENDED_DIMS = (
    "SetPoint",
    "Velocity",
    "EffectiveVelocity",
    "Gain",
    "EffectiveGain",
    "Shift",
    "EffectiveShift",
    "MisCalibrationDomain",
    "MisCalibrationSystemResponse",
    "MisCalibrationPhiIdx",
    "MisCalibration",
    "NoiseFreeConsumption",
    "Consumption",
    "Fatigue",
    "OperationalCost_0",
) + _COST_LAG_DIMS + (
    "OperationalCostConv",
    "ModifiedOperationalCost",
    "FatigueLatentV",
    "FatigueLatentG",
)

# Dimensions an external driver is allowed to rewrite during its filter pass.
DRIVER_WRITABLE_DIMS = frozenset({"SetPoint"})

_DRIVER_SEED_TAG = 0x64726976  # distinguishes driver sub-seeds from stream roles


class ResetRequired(RuntimeError):
    """An operation needing a live episode was called before reset/step."""


class DataVector:
    """Ordered name -> value record, the universal exchange format.

    Names are unique and their order is stable.  Reading a missing dimension
    raises ``KeyError`` -- there are no silent defaults.
    """

    __slots__ = ("_names", "_values")

    def __init__(self, names: Iterable[str], values: Iterable[float] | None = None):
        self._names = tuple(names)
        if len(set(self._names)) != len(self._names):
            raise ValueError("duplicate dimension names")
        if values is None:
            self._values = dict.fromkeys(self._names, 0.0)
        else:
            vals = [float(v) for v in values]
            if len(vals) != len(self._names):
                raise ValueError(f"{len(self._names)} names but {len(vals)} values")
            self._values = dict(zip(self._names, vals))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "DataVector":
        return cls(mapping.keys(), mapping.values())

    def get_keys(self) -> list[str]:
        return list(self._names)

    def get_value(self, key: str) -> float:
        return self._values[key]

    def set_value(self, key: str, value: float) -> None:
        if key not in self._values:
            raise KeyError(key)
        self._values[key] = float(value)

    def get_values_array(self) -> list[float]:
        return [self._values[k] for k in self._names]

    def clone(self) -> "DataVector":
        return DataVector(self._names, self.get_values_array())

    def as_dict(self) -> dict[str, float]:
        return {k: self._values[k] for k in self._names}

    # mapping conveniences
    def __getitem__(self, key: str) -> float:
        return self._values[key]

    def __setitem__(self, key: str, value: float) -> None:
        self.set_value(key, value)

    def __contains__(self, key: str) -> bool:
        return key in self._values

    def __iter__(self) -> Iterator[str]:
        return iter(self._names)

    def __len__(self) -> int:
        return len(self._names)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DataVector):
            return NotImplemented
        return self._names == other._names and self.get_values_array() == other.get_values_array()

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={self._values[k]!r}" for k in self._names)
        return f"DataVector({inner})"


@runtime_checkable
class ExternalDriver(Protocol):
    """Component rewriting exogenous state dimensions at the start of a step."""

    def filter(self, state: DataVector) -> None: ...

    def get_state(self) -> DataVector: ...

    def set_configuration(self, config: DataVector) -> None: ...

    def set_seed(self, seed: int) -> None: ...


class SetPointDriver:
    """Driver holding the set point at a configured constant value."""

    def __init__(self, set_point: float):
        self._value = float(set_point)

    def filter(self, state: DataVector) -> None:
        state.set_value("SetPoint", self._value)

    def get_state(self) -> DataVector:
        return DataVector(("SetPoint",), (self._value,))

    def set_configuration(self, config: DataVector) -> None:
        self._value = config.get_value("SetPoint")

    def set_seed(self, seed: int) -> None:
        pass  # deterministic driver, no randomness to seed


@dataclass(frozen=True)
class EnvironmentConfig:
    """Episode configuration; defaults follow the benchmark data setting."""

    set_point: float = 50.0
    seed: int = 0
    velocity: float = 50.0
    gain: float = 50.0
    shift: float = 50.0
    miscalibration: str | dyn.MisCalibrationFn = "disabled"
    # Substituted in tests to stub out noise; must build a stream from a seed.
    stream_factory: Callable[[int], object] = field(default=RandomStream)

    def __post_init__(self):
        for name in ("set_point", "velocity", "gain", "shift"):
            value = getattr(self, name)
            if not 0.0 <= float(value) <= 100.0:
                raise ValueError(f"{name}={value!r} outside [0, 100]")
        if isinstance(self.miscalibration, str) and self.miscalibration != "disabled":
            raise ValueError(
                f"miscalibration must be 'disabled' or a callable, got {self.miscalibration!r}"
            )

    @property
    def miscalibration_mode(self) -> str:
        return "disabled" if self.miscalibration == "disabled" else "custom"


class IndustrialBenchmark:
    """One benchmark instance: reset, step, and the three state views."""

    def __init__(self, config: EnvironmentConfig | None = None, **overrides):
        if config is None:
            config = EnvironmentConfig(**overrides)
        elif overrides:
            raise ValueError("pass either a config object or keyword overrides, not both")
        self.config = config
        self._drivers: list[ExternalDriver] = []
        self._live = False
        self._has_reward = False
        self.stream = None

    # -- lifecycle -----------------------------------------------------------

    def reset(self) -> DataVector:
        """Start a fresh episode and return the completed initial observation.

        Steerings go to their configured values, latents to zero, and the
        cost history is filled with the steady-state instantaneous cost so
        the convolved cost starts transient-free.  Consumption and fatigue
        are evaluated once (with noise, 7 draws) so tuples recorded from the
        very first step are well-formed.
        """
        cfg = self.config
        self.stream = cfg.stream_factory(cfg.seed)
        for index, driver in enumerate(self._drivers):
            driver.set_seed(derive_seed(cfg.seed, _DRIVER_SEED_TAG, index))

        self._p = float(cfg.set_point)
        self._steerings = Steerings(float(cfg.velocity), float(cfg.gain), float(cfg.shift))
        o0 = dyn.operational_cost(self._p, self._steerings.velocity, self._steerings.gain)
        self._history = [o0] * dyn.COST_HISTORY_LEN
        self._miscal = MisCalibrationState(mode=cfg.miscalibration_mode)
        self._h_v = 0.0
        self._h_g = 0.0

        self._observe(update_latents=False)
        self._last_reward = 0.0
        self._has_reward = False
        self._live = True
        return self.get_state()

    def step(self, action) -> float:
        """Advance one step under ``action`` and return the reward.

        Fixed stage order: driver filters, steering update, cost push and
        convolution, calibration drift, consumption observation, wear noise
        and latent update, amplification, fatigue, reward.
        """
        if not self._live:
            raise ResetRequired("step() called before reset()")
        if not isinstance(action, Action):
            action = Action(*action)

        if self._drivers:
            self._apply_drivers()
        self._steerings = dyn.apply_action(self._steerings, action)

        o_new = dyn.operational_cost(self._p, self._steerings.velocity, self._steerings.gain)
        self._history = [o_new] + self._history[:-1]

        self._observe(update_latents=True)
        self._last_reward = dyn.reward(self._consumption, self._fatigue)
        self._has_reward = True
        return self._last_reward

    def _observe(self, update_latents: bool) -> None:
        """Stages shared by reset and step: drift, consumption, wear.

        ``update_latents`` is False at reset, where the wear latents stay at
        their defaults while noise still completes the observation.
        """
        s = self._steerings
        self._o_c = dyn.convolve_costs(self._history)
        self._s_e = dyn.effective_shift(s.shift, self._p)
        if update_latents:
            custom = None if self.config.miscalibration == "disabled" else self.config.miscalibration
            self._miscal, m = dyn.miscalibration_step(self._miscal, self._s_e, custom)
        else:
            m = self._miscal.m
        self._c_hat = dyn.modified_cost(self._o_c, m)
        self._consumption = dyn.observe_consumption(self._c_hat, self.stream)

        self._eff_v = dyn.effective_velocity(s.velocity, s.gain, self._p)
        self._eff_g = dyn.effective_gain(s.gain, self._p)
        draws = dyn.draw_fatigue_noise(self._eff_v, self._eff_g, self.stream)
        eta_v, eta_g = dyn.combine_noise(draws, self._eff_v, self._eff_g)
        if update_latents:
            self._h_v = dyn.update_hidden(self._h_v, self._eff_v, eta_v)
            self._h_g = dyn.update_hidden(self._h_g, self._eff_g, eta_g)
        alpha = dyn.amplification(self._h_v, self._h_g, eta_v, eta_g, self.stream)
        self._f_b = dyn.basic_fatigue(s.velocity, s.gain)
        self._fatigue = dyn.fatigue(self._f_b, alpha)

    def _apply_drivers(self) -> None:
        state = self.get_internal_markov_state()
        before = state.as_dict()
        for driver in self._drivers:
            driver.filter(state)
        for key, old in before.items():
            new = state.get_value(key)
            if new != old and key not in DRIVER_WRITABLE_DIMS:
                raise DynamicsFault(f"external driver wrote non-exogenous dimension {key!r}")
        p = state.get_value("SetPoint")
        if not 0.0 <= p <= 100.0:
            raise DynamicsFault(f"external driver set SetPoint={p!r} outside [0, 100]")
        self._p = p

    # -- views ----------------------------------------------------------------

    def get_state(self) -> DataVector:
        """Current observation (the six observable dimensions)."""
        self._require_live()
        s = self._steerings
        return DataVector(
            OBSERVATION_DIMS,
            (self._p, s.velocity, s.gain, s.shift, self._consumption, self._fatigue),
        )

    def get_internal_markov_state(self) -> DataVector:
        """Full extended state (28 dimensions, analysis quantities included)."""
        return DataVector(EXTENDED_DIMS, self._extended_values())

    def _extended_values(self) -> list[float]:
        self._require_live()
        s = self._steerings
        return [
            self._p,
            s.velocity,
            self._eff_v,
            s.gain,
            self._eff_g,
            s.shift,
            self._s_e,
            self._miscal.m1,
            self._miscal.m2,
            self._miscal.m3,
            self._miscal.m,
            self._c_hat,
            self._consumption,
            self._fatigue,
            *self._history,
            self._o_c,
            self._c_hat,
            self._h_v,
            self._h_g,
        ]

    def get_markov_state(self) -> DataVector:
        """Minimal Markov state (20 dimensions), projected by name."""
        extended = self.get_internal_markov_state()
        return DataVector(MARKOV_DIMS, [extended.get_value(k) for k in MARKOV_DIMS])

    def get_reward(self) -> float:
        if not self._has_reward:
            raise ResetRequired("get_reward() called before the first step")
        return self._last_reward

    def add_external_driver(self, driver: ExternalDriver) -> None:
        """Register a driver; filters run in registration order each step."""
        self._drivers.append(driver)

    # -- checkpointing ---------------------------------------------------------

    def inject_markov_state(self, values: Mapping[str, float], stream_state=None) -> None:
        """Restore the environment from a minimal Markov state.

        ``values`` must contain every ``MARKOV_DIMS`` name.  The current
        instantaneous cost is recomputed from set point and steerings (it is
        redundant in the minimal state).  Pass the owning stream's ``state``
        tuple to also restore the random stream; with both restored, futures
        are bit-identical to the captured environment's.
        """
        missing = [k for k in MARKOV_DIMS if k not in values]
        if missing:
            raise ValueError(f"markov state missing dimensions: {missing}")
        if self.stream is None:
            self.stream = self.config.stream_factory(self.config.seed)
        if stream_state is not None:
            self.stream.state = stream_state

        self._p = float(values["SetPoint"])
        self._steerings = Steerings(
            float(values["Velocity"]), float(values["Gain"]), float(values["Shift"])
        )
        o0 = dyn.operational_cost(self._p, self._steerings.velocity, self._steerings.gain)
        self._history = [o0] + [float(values[k]) for k in _COST_LAG_DIMS]
        self._miscal = MisCalibrationState(
            m1=float(values["MisCalibrationDomain"]),
            m2=float(values["MisCalibrationSystemResponse"]),
            m3=float(values["MisCalibrationPhiIdx"]),
            m=0.0,
            mode=self.config.miscalibration_mode,
        )
        self._h_v = float(values["FatigueLatentV"])
        self._h_g = float(values["FatigueLatentG"])
        self._consumption = float(values["Consumption"])
        self._fatigue = float(values["Fatigue"])

        # Derived analysis values, recomputed without consuming draws.
        self._o_c = dyn.convolve_costs(self._history)
        self._s_e = dyn.effective_shift(self._steerings.shift, self._p)
        self._c_hat = dyn.modified_cost(self._o_c, self._miscal.m)
        self._eff_v = dyn.effective_velocity(self._steerings.velocity, self._steerings.gain, self._p)
        self._eff_g = dyn.effective_gain(self._steerings.gain, self._p)
        self._f_b = dyn.basic_fatigue(self._steerings.velocity, self._steerings.gain)

        self._last_reward = dyn.reward(self._consumption, self._fatigue)
        self._has_reward = True
        self._live = True

    def _require_live(self) -> None:
        if not self._live:
            raise ResetRequired("environment has not been reset")
