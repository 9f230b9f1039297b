"""Transition mathematics for the three coupled sub-dynamics.

Everything here is a pure function of its inputs; the only side effects are
draws taken from an explicitly passed random stream.  The environment module
owns state and step ordering, this module owns the arithmetic.

The three sub-dynamics:

* operational cost -- exponential in set point / velocity / gain, observed
  only through a delayed 10-tap convolution;
* calibration drift -- driven by the effective shift through three latent
  variables (pluggable; the shipped default keeps it switched off, see
  :func:`miscalibration_step`);
* wear ("fatigue") -- velocity/gain penalty escalated by two latent
  variables, opposing the cost term so the reward is multi-criterial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

# Step size applied to the shift component of an action, at full float
# precision (20*sin(15 degrees)/0.9, about 5.7528).
SHIFT_STEP = 20.0 * math.sin(math.pi / 12.0) / 0.9

# Weight applied to the calibration drift when it enters the cost channel.
MISCALIBRATION_GAIN = 25.0

# Convolution kernel over cost history, newest entry first: the five most
# recent costs are invisible, then a triangular smear.  Weights sum to 1.
COST_KERNEL = (0.0, 0.0, 0.0, 0.0, 0.0,
               1.0 / 9.0, 2.0 / 9.0, 3.0 / 9.0, 2.0 / 9.0, 1.0 / 9.0)

COST_HISTORY_LEN = 10


class DynamicsFault(RuntimeError):
    """A sub-dynamics produced an unusable value (e.g. non-finite output)."""


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def _check_range(name: str, x: float, lo: float, hi: float) -> float:
    if not lo <= x <= hi:
        raise ValueError(f"{name}={x!r} outside [{lo}, {hi}]")
    return x


@dataclass(frozen=True)
class Steerings:
    """The three controllable variables, each confined to [0, 100]."""

    velocity: float
    gain: float
    shift: float

    def __post_init__(self):
        _check_range("velocity", self.velocity, 0.0, 100.0)
        _check_range("gain", self.gain, 0.0, 100.0)
        _check_range("shift", self.shift, 0.0, 100.0)


@dataclass(frozen=True)
class Action:
    """Proposed steering deltas, each component in [-1, 1]."""

    delta_v: float
    delta_g: float
    delta_s: float

    def __post_init__(self):
        _check_range("delta_v", self.delta_v, -1.0, 1.0)
        _check_range("delta_g", self.delta_g, -1.0, 1.0)
        _check_range("delta_s", self.delta_s, -1.0, 1.0)


# A custom calibration sub-dynamics maps (state, effective shift) to
# (successor state, drift output m).
MisCalibrationFn = Callable[["MisCalibrationState", float], tuple["MisCalibrationState", float]]


@dataclass(frozen=True)
class MisCalibrationState:
    """Latent state of the calibration-drift sub-dynamics.

    ``mode`` is ``"disabled"`` (latents pinned to zero, m == 0, the default)
    or ``"custom"`` (a caller-supplied function advances the latents).
    """

    m1: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m: float = 0.0
    mode: str = "disabled"


@dataclass(frozen=True)
class FatigueState:
    """Wear sub-dynamics values for one step."""

    h_v: float = 0.0
    h_g: float = 0.0
    basic: float = 0.0
    fatigue: float = 0.0
    eff_v: float = 0.0
    eff_g: float = 0.0


@dataclass(frozen=True)
class NoiseDraws:
    """The six per-step wear noise draws, in draw order.

    ``alpha_gauss`` is reserved for callers that capture the extra gaussian
    consumed when the amplification escalation branch fires; it is not
    populated by :func:`draw_fatigue_noise` itself.
    """

    eta_ve: float
    eta_ge: float
    eta_vu: float
    eta_gu: float
    eta_vb: int
    eta_gb: int
    alpha_gauss: float | None = None


# ---------------------------------------------------------------------------
# Steering and cost channel
# ---------------------------------------------------------------------------


def apply_action(steerings: Steerings, action: Action) -> Steerings:
    """Apply deltas with per-steering step sizes (1, 10, SHIFT_STEP), clamped."""
    return Steerings(
        velocity=_clamp(steerings.velocity + action.delta_v, 0.0, 100.0),
        gain=_clamp(steerings.gain + 10.0 * action.delta_g, 0.0, 100.0),
        shift=_clamp(steerings.shift + SHIFT_STEP * action.delta_s, 0.0, 100.0),
    )


def operational_cost(p: float, v: float, g: float) -> float:
    """Instantaneous cost exp((2p + 4v + 2.5g)/100); always positive."""
    return math.exp((2.0 * p + 4.0 * v + 2.5 * g) / 100.0)


def convolve_costs(history) -> float:
    """Delayed, smeared cost the plant actually exposes.

    ``history`` holds the last 10 instantaneous costs, newest first; only
    lags 5..9 carry weight.
    """
    if len(history) != COST_HISTORY_LEN:
        raise ValueError(f"cost history must have {COST_HISTORY_LEN} entries, got {len(history)}")
    return (history[5] * (1.0 / 9.0) + history[6] * (2.0 / 9.0)
            + history[7] * (3.0 / 9.0) + history[8] * (2.0 / 9.0)
            + history[9] * (1.0 / 9.0))


# ---------------------------------------------------------------------------
# Calibration-drift channel
# ---------------------------------------------------------------------------


def effective_shift(s: float, p: float) -> float:
    """Combine shift and set point into the drift driver, clamped to ±1.5."""
    return _clamp(s / 20.0 - p / 50.0 - 1.5, -1.5, 1.5)


def miscalibration_step(
    state: MisCalibrationState,
    s_e: float,
    custom: MisCalibrationFn | None = None,
) -> tuple[MisCalibrationState, float]:
    """Advance the calibration-drift latents one step.

    In disabled mode the latents stay pinned at zero and the drift output is
    exactly 0, so baseline statistics are not contaminated by dynamics this
    package would otherwise have to invent.  In custom mode the supplied
    function produces the successor state and output; a non-finite output is
    rejected as a :class:`DynamicsFault`.
    """
    if state.mode == "disabled":
        return state, 0.0
    if state.mode != "custom":
        raise ValueError(f"unknown mis-calibration mode: {state.mode!r}")
    if custom is None:
        raise DynamicsFault("mis-calibration mode is 'custom' but no sub-dynamics was supplied")
    new_state, m = custom(state, s_e)
    if not math.isfinite(m):
        raise DynamicsFault(f"custom mis-calibration returned non-finite output: {m!r}")
    return replace(new_state, m=m, mode="custom"), m


def modified_cost(o_c: float, m: float) -> float:
    """Convoluted cost plus the weighted calibration drift."""
    return o_c + MISCALIBRATION_GAIN * m


def observe_consumption(c_hat: float, stream) -> float:
    """Noisy consumption reading: sd grows linearly with the clean value."""
    return c_hat + stream.gauss(0.0, 1.0 + 0.02 * c_hat)


# ---------------------------------------------------------------------------
# Wear channel
# ---------------------------------------------------------------------------


def transform_v(v: float, g: float, p: float) -> float:
    return (g + p + 2.0) / (v - p + 101.0)


def transform_g(g: float, p: float) -> float:
    return 1.0 / (g + p + 1.0)


def effective_velocity(v: float, g: float, p: float) -> float:
    """Velocity normalized against its set-point-dependent extremes, in [0, 1].

    0 at (v=0, g=100), 1 at (v=100, g=0); clamped afterwards to keep
    floating-point dust out of the binomial probabilities downstream.
    """
    lo = transform_v(0.0, 100.0, p)
    hi = transform_v(100.0, 0.0, p)
    return _clamp((transform_v(v, g, p) - lo) / (hi - lo), 0.0, 1.0)


def effective_gain(g: float, p: float) -> float:
    """Gain analogue of :func:`effective_velocity`: 1 at g=0, 0 at g=100."""
    lo = transform_g(100.0, p)
    hi = transform_g(0.0, p)
    return _clamp((transform_g(g, p) - lo) / (hi - lo), 0.0, 1.0)


def draw_fatigue_noise(v_e: float, g_e: float, stream) -> NoiseDraws:
    """Take the six wear noise draws in their fixed order.

    Order is part of the reproducibility contract: two exponentials
    (mean 0.05), two uniforms on [0, 1], then the two binomial gates with
    success probabilities v_e and g_e.
    """
    return NoiseDraws(
        eta_ve=stream.exponential(0.05),
        eta_ge=stream.exponential(0.05),
        eta_vu=stream.uniform(0.0, 1.0),
        eta_gu=stream.uniform(0.0, 1.0),
        eta_vb=stream.bernoulli(v_e),
        eta_gb=stream.bernoulli(g_e),
    )


def combine_noise(draws: NoiseDraws, v_e: float, g_e: float) -> tuple[float, float]:
    """Merge the six draws into the two wear noise components.

    The raw combination can exceed 1 only through the unbounded exponential
    tail (probability ~2e-9 per draw); the result is capped at 1 so the
    downstream contracts (amplification <= 1, latents <= 5, fatigue <= 3x
    basic) hold unconditionally.
    """
    eta_v = draws.eta_ve + (1.0 - draws.eta_ve) * draws.eta_vu * draws.eta_vb * v_e
    eta_g = draws.eta_ge + (1.0 - draws.eta_ge) * draws.eta_gu * draws.eta_gb * g_e
    return min(1.0, eta_v), min(1.0, eta_g)


def update_hidden(h_prev: float, e: float, eta: float) -> float:
    """Advance one wear latent.

    Resets to the (tiny) effective value when it is at most 0.05, escalates
    by 10% per step once the latent has reached 1.2 (capped at 5), and
    otherwise decays with a noise kick.
    """
    if e <= 0.05:
        return e
    if h_prev >= 1.2:
        return min(5.0, 1.1 * h_prev)
    return 0.9 * h_prev + eta / 3.0


def amplification(h_v: float, h_g: float, eta_v: float, eta_g: float, stream) -> float:
    """Wear amplification in [0, 1].

    Escalated regime (either latent at or above 1.2): a logistic-squashed
    gaussian with mean 2.4, sd 0.4 -- one extra stream draw.  Normal regime:
    the larger of the two noise components, no draw.
    """
    if max(h_v, h_g) >= 1.2:
        return 1.0 / (1.0 + math.exp(-stream.gauss(2.4, 0.4)))
    return max(eta_v, eta_g)


def basic_fatigue(v: float, g: float) -> float:
    """Noise-free wear level; high at low velocity, reduced by gain squared."""
    return max(0.0, 30000.0 / (5.0 * v + 100.0) - 0.01 * g * g)


def fatigue(f_b: float, alpha: float) -> float:
    """Amplified wear, between f_b and 3*f_b."""
    return f_b * (1.0 + 2.0 * alpha)


def reward(c: float, f: float) -> float:
    """Deterministic reward of the successor state: -(consumption + fatigue)."""
    return -(c + f)
