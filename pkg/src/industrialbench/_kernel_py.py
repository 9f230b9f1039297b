"""Pure-Python rollout kernel.

Fallback used when the compiled extension is unavailable (see
``industrialbench.backend``).  Rollouts run through the canonical
:class:`~industrialbench.environment.IndustrialBenchmark` step path, so this
module is also the reference the compiled kernel is parity-tested against.
"""

from __future__ import annotations

from .dynamics import Action
from .environment import IndustrialBenchmark, OBSERVATION_DIMS
from .rng import RandomStream

BACKEND_NAME = "python"


def rollout(
    set_point: float,
    velocity: float,
    gain: float,
    shift: float,
    steps: int,
    env_seed: int,
    policy_seed: int,
    policy_mode: str,
    policy_params=None,
    actions=None,
):
    """Reset one environment and run ``steps`` actions from a built-in policy.

    ``policy_mode`` is ``"max-entropy"`` (three uniform draws on [-1, 1) per
    step from a dedicated policy stream, in delta-velocity, delta-gain,
    delta-shift order), ``"constant"`` (``policy_params`` is the fixed
    triple) or ``"replay"`` (``actions`` is the action log to apply).

    Returns a dict with the initial observation, per-step actions, per-step
    extended-state rows, per-step rewards, and the final stream states.
    """
    env = IndustrialBenchmark(
        set_point=set_point, seed=env_seed, velocity=velocity, gain=gain, shift=shift
    )
    obs0 = env.reset().get_values_array()

    policy_stream = None
    if policy_mode == "max-entropy":
        policy_stream = RandomStream(policy_seed)
    elif policy_mode == "constant":
        constant = Action(*(float(x) for x in policy_params))
    elif policy_mode == "replay":
        if actions is None or len(actions) < steps:
            raise ValueError("replay mode needs an action log with at least `steps` entries")
    else:
        raise ValueError(f"unknown policy mode: {policy_mode!r}")

    out_actions = []
    extended = []
    rewards = []
    for i in range(steps):
        if policy_mode == "max-entropy":
            action = Action(
                policy_stream.uniform(-1.0, 1.0),
                policy_stream.uniform(-1.0, 1.0),
                policy_stream.uniform(-1.0, 1.0),
            )
        elif policy_mode == "constant":
            action = constant
        else:
            action = Action(*(float(x) for x in actions[i]))
        rewards.append(env.step(action))
        out_actions.append([action.delta_v, action.delta_g, action.delta_s])
        extended.append(env._extended_values())

    return {
        "obs0": obs0,
        "actions": out_actions,
        "extended": extended,
        "rewards": rewards,
        "env_stream_state": env.stream.state,
        "policy_stream_state": None if policy_stream is None else policy_stream.state,
        "observation_dims": list(OBSERVATION_DIMS),
    }
