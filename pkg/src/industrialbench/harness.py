"""Dataset generation, policy evaluation, and the prediction-error metric.

The canonical data setting: ten set points 10, 20, ..., 100, steerings
starting at 50/50/50, a fresh environment per set point, and 1000 steps of
uniform random actions each -- 10,000 transition tuples total.

Every (set point, episode, role) combination gets its own random stream,
derived from the master seed with :func:`industrialbench.rng.derive_seed`,
so trajectories are independent and adding a set point or episode never
perturbs the others.  Policy actions draw from a separate stream than the
environment (role tags ``ROLE_ENV`` / ``ROLE_POLICY``), keeping the
environment's per-step draw accounting intact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

from . import backend as _backend
from .dynamics import Action
from .environment import DataVector, EXTENDED_DIMS, IndustrialBenchmark, OBSERVATION_DIMS
from .rng import GENERATOR_NAME, RandomStream, derive_seed, float_bits

DEFAULT_SET_POINTS = tuple(float(p) for p in range(10, 101, 10))
DEFAULT_STEPS = 1000

ROLE_ENV = 1
ROLE_POLICY = 2

ACTION_COLUMNS = ("DeltaVelocity", "DeltaGain", "DeltaShift")
TUPLE_COLUMNS = (
    OBSERVATION_DIMS
    + ACTION_COLUMNS
    + tuple(f"{name}_next" for name in OBSERVATION_DIMS)
    + ("RewardTotal",)
)

SCHEMA_VERSION = 1

# Observation dims as indices into an extended-state row.
_OBS_IN_EXTENDED = (0, 1, 3, 5, 12, 13)


def sub_seed(master: int, set_point: float, episode: int, role: int) -> int:
    """Derived stream seed for one (set point, episode, role) combination."""
    return derive_seed(master, float_bits(set_point), episode, role)


# ---------------------------------------------------------------------------
# Policies
# ---------------------------------------------------------------------------


def max_entropy_policy(stream) -> Action:
    """Uniform random action on [-1, 1)^3; the data generation policy."""
    return Action(
        stream.uniform(-1.0, 1.0),
        stream.uniform(-1.0, 1.0),
        stream.uniform(-1.0, 1.0),
    )


def constant_policy(delta_v: float, delta_g: float, delta_s: float) -> Callable[[DataVector], Action]:
    action = Action(delta_v, delta_g, delta_s)
    return lambda observation: action


def parse_policy_spec(spec: str) -> tuple[str, tuple[float, float, float] | None]:
    """Parse a ``name`` or ``name:params`` policy spec.

    Built-ins: ``max-entropy``, ``hold`` (do nothing), and
    ``constant:dv,dg,ds``.
    """
    name, _, params = spec.partition(":")
    if name == "max-entropy":
        return "max-entropy", None
    if name == "hold":
        return "constant", (0.0, 0.0, 0.0)
    if name == "constant":
        parts = params.split(",") if params else []
        if len(parts) != 3:
            raise ValueError(f"constant policy needs three comma-separated deltas, got {spec!r}")
        return "constant", tuple(float(x) for x in parts)
    raise ValueError(f"unknown policy {name!r} (choose max-entropy, constant:dv,dg,ds, or hold)")


# ---------------------------------------------------------------------------
# Trajectories and tuples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TransitionTuple:
    """One logged transition (O, a, O', r)."""

    observation: tuple[float, ...]
    action: tuple[float, float, float]
    next_observation: tuple[float, ...]
    reward: float

    def record(self) -> dict[str, float]:
        values = self.observation + self.action + self.next_observation + (self.reward,)
        return dict(zip(TUPLE_COLUMNS, values))


@dataclass
class Trajectory:
    """One environment run plus the configuration that produced it."""

    set_point: float
    steps: int
    master_seed: int
    env_seed: int
    policy_seed: int
    tuples: list[TransitionTuple]
    extended: list[dict[str, float]] | None = None


def generate_dataset(
    set_points: Sequence[float] = DEFAULT_SET_POINTS,
    steps: int = DEFAULT_STEPS,
    seed: int = 0,
    extended: bool = False,
    backend: str = "auto",
) -> list[Trajectory]:
    """Run the max-entropy policy for ``steps`` on a fresh environment per set point."""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    trajectories = []
    for sp in set_points:
        env_seed = sub_seed(seed, sp, 0, ROLE_ENV)
        policy_seed = sub_seed(seed, sp, 0, ROLE_POLICY)
        out = _backend.rollout(
            sp, 50.0, 50.0, 50.0, steps, env_seed, policy_seed, "max-entropy",
            backend=backend,
        )
        tuples = []
        prev = tuple(out["obs0"])
        for action, row, reward in zip(out["actions"], out["extended"], out["rewards"]):
            nxt = tuple(row[i] for i in _OBS_IN_EXTENDED)
            tuples.append(TransitionTuple(prev, tuple(action), nxt, reward))
            prev = nxt
        trajectories.append(
            Trajectory(
                set_point=float(sp),
                steps=steps,
                master_seed=seed,
                env_seed=env_seed,
                policy_seed=policy_seed,
                tuples=tuples,
                extended=(
                    [dict(zip(EXTENDED_DIMS, row)) for row in out["extended"]]
                    if extended else None
                ),
            )
        )
    return trajectories


def run_trace(
    set_point: float,
    steps: int,
    seed: int,
    actions: Sequence[Sequence[float]] | None = None,
    backend: str = "auto",
) -> list[dict[str, float]]:
    """Step one environment and return per-step extended-state records.

    Actions come from the max-entropy policy unless an explicit action log
    is supplied.  Each record carries the full extended state plus the
    applied action and the reward.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    env_seed = sub_seed(seed, set_point, 0, ROLE_ENV)
    policy_seed = sub_seed(seed, set_point, 0, ROLE_POLICY)
    mode = "max-entropy" if actions is None else "replay"
    out = _backend.rollout(
        set_point, 50.0, 50.0, 50.0, steps, env_seed, policy_seed, mode,
        actions=actions, backend=backend,
    )
    records = []
    for action, row, reward in zip(out["actions"], out["extended"], out["rewards"]):
        record = dict(zip(EXTENDED_DIMS, row))
        record.update(zip(ACTION_COLUMNS, action))
        record["RewardTotal"] = reward
        records.append(record)
    return records


# ---------------------------------------------------------------------------
# Policy evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalStats:
    """Aggregate reward statistics of an evaluation run.

    The headline numbers are episode-granular: ``sd`` is the sample standard
    deviation of per-episode mean rewards and ``stderr = sd / sqrt(episodes)``.
    Step and set-point granularities are reported alongside since an
    "average reward +/- x" claim is ambiguous about its unit of replication.
    """

    mean_reward: float
    sd: float
    stderr: float
    episode_count: int
    step_count: int
    step_sd: float
    step_stderr: float
    setpoint_sd: float
    setpoint_stderr: float
    setpoint_means: dict[float, float]
    clamped_actions: int = 0


def _sample_sd(values: Sequence[float], mean: float) -> float:
    n = len(values)
    if n <= 1:
        return 0.0
    return math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1))


def _stats_from_rewards(
    episode_rewards: list[tuple[float, list[float]]], clamped: int
) -> EvalStats:
    all_rewards = [r for _, rewards in episode_rewards for r in rewards]
    episode_means = [sum(rewards) / len(rewards) for _, rewards in episode_rewards]
    mean = sum(all_rewards) / len(all_rewards)

    sd = _sample_sd(episode_means, sum(episode_means) / len(episode_means))
    step_sd = _sample_sd(all_rewards, mean)

    by_sp: dict[float, list[float]] = {}
    for sp, rewards in episode_rewards:
        by_sp.setdefault(sp, []).extend(rewards)
    sp_means = {sp: sum(r) / len(r) for sp, r in by_sp.items()}
    sp_sd = _sample_sd(list(sp_means.values()), sum(sp_means.values()) / len(sp_means))

    n_ep = len(episode_means)
    n_steps = len(all_rewards)
    n_sp = len(sp_means)
    return EvalStats(
        mean_reward=mean,
        sd=sd,
        stderr=sd / math.sqrt(n_ep),
        episode_count=n_ep,
        step_count=n_steps,
        step_sd=step_sd,
        step_stderr=step_sd / math.sqrt(n_steps),
        setpoint_sd=sp_sd,
        setpoint_stderr=sp_sd / math.sqrt(n_sp),
        setpoint_means=sp_means,
        clamped_actions=clamped,
    )


def evaluate_policy(
    policy: str | Callable[[DataVector], object],
    set_points: Sequence[float] = DEFAULT_SET_POINTS,
    steps: int = DEFAULT_STEPS,
    episodes: int = 1,
    seed: int = 0,
    backend: str = "auto",
) -> EvalStats:
    """Run ``episodes`` episodes per set point and aggregate reward statistics.

    ``policy`` is a built-in spec string (``max-entropy``, ``constant:...``,
    ``hold``) or a callable mapping an observation to an action.  Built-in
    policies run on the fast rollout backend.  Callable policies emitting
    components outside [-1, 1] have them clamped, with the affected action
    count reported in ``clamped_actions``.
    """
    if steps < 1 or episodes < 1:
        raise ValueError(f"steps and episodes must be >= 1, got steps={steps} episodes={episodes}")

    episode_rewards: list[tuple[float, list[float]]] = []
    clamped = 0
    for sp in set_points:
        for ep in range(episodes):
            env_seed = sub_seed(seed, sp, ep, ROLE_ENV)
            policy_seed = sub_seed(seed, sp, ep, ROLE_POLICY)
            if isinstance(policy, str):
                mode, params = parse_policy_spec(policy)
                out = _backend.rollout(
                    sp, 50.0, 50.0, 50.0, steps, env_seed, policy_seed, mode,
                    policy_params=params, backend=backend,
                )
                episode_rewards.append((float(sp), out["rewards"]))
            else:
                env = IndustrialBenchmark(set_point=sp, seed=env_seed)
                obs = env.reset()
                rewards = []
                for _ in range(steps):
                    raw = policy(obs)
                    if isinstance(raw, Action):
                        triple = (raw.delta_v, raw.delta_g, raw.delta_s)
                    else:
                        triple = tuple(float(x) for x in raw)
                        if len(triple) != 3:
                            raise ValueError(f"policy returned {len(triple)} components, need 3")
                    bounded = tuple(min(1.0, max(-1.0, x)) for x in triple)
                    if bounded != triple:
                        clamped += 1
                    rewards.append(env.step(Action(*bounded)))
                    obs = env.get_state()
                episode_rewards.append((float(sp), rewards))
    return _stats_from_rewards(episode_rewards, clamped)


# ---------------------------------------------------------------------------
# Prediction-error metric
# ---------------------------------------------------------------------------


def mrabd(
    predicted: Sequence[float],
    actual: Sequence[float],
    min_actual: float | None = None,
) -> float:
    """Mean relative absolute deviation over pairs with usable denominators.

    Pairs whose |actual| falls below the threshold are excluded; the default
    threshold 1e-9 only guards against division by ~zero, while an explicit
    ``min_actual`` expresses cuts like "fatigue above 1 only".
    """
    if len(predicted) != len(actual):
        raise ValueError(f"length mismatch: {len(predicted)} predictions, {len(actual)} actuals")
    threshold = 1e-9 if min_actual is None else float(min_actual)
    deviations = [
        abs(p - a) / abs(a) for p, a in zip(predicted, actual) if abs(a) >= threshold
    ]
    if not deviations:
        raise ValueError("no pairs left after the |actual| threshold; metric undefined")
    return sum(deviations) / len(deviations)


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------


def write_dataset(
    trajectories: Sequence[Trajectory],
    path: str | Path,
    format: str = "csv",
) -> Path:
    """Write transition tuples to ``path`` plus a ``.meta`` sidecar.

    CSV: header row then one row per tuple, '.' decimal separator, floats in
    shortest round-trip form.  JSONL: one record object per line.  The
    sidecar holds everything needed to regenerate the file byte-for-byte.
    """
    if format not in ("csv", "jsonl"):
        raise ValueError(f"format must be 'csv' or 'jsonl', got {format!r}")
    path = Path(path)
    rows = [t.record() for traj in trajectories for t in traj.tuples]
    try:
        with open(path, "w", newline="") as fh:
            if format == "csv":
                fh.write(",".join(TUPLE_COLUMNS) + "\n")
                for row in rows:
                    fh.write(",".join(repr(v) for v in row.values()) + "\n")
            else:
                for row in rows:
                    fh.write(json.dumps(row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write dataset to {path}: {exc}") from exc

    meta = _sidecar_fields(trajectories, format, len(rows))
    meta_path = path.with_name(path.name + ".meta")
    try:
        with open(meta_path, "w") as fh:
            for key, value in meta.items():
                fh.write(f"{key}={value}\n")
    except OSError as exc:
        raise OSError(f"cannot write metadata sidecar to {meta_path}: {exc}") from exc
    return path


def _sidecar_fields(trajectories, format: str, n_rows: int) -> dict[str, str]:
    from . import __version__

    seeds = {t.master_seed for t in trajectories}
    steps = {t.steps for t in trajectories}
    return {
        "schema_version": str(SCHEMA_VERSION),
        "package_version": __version__,
        "generator": GENERATOR_NAME,
        "miscalibration": "disabled",
        "seed": ",".join(str(s) for s in sorted(seeds)),
        "set_points": ",".join(repr(t.set_point) for t in trajectories),
        "steps": ",".join(str(s) for s in sorted(steps)),
        "tuples": str(n_rows),
        "format": format,
    }


def read_dataset(path: str | Path, format: str | None = None) -> list[dict[str, float]]:
    """Read a dataset file back into per-tuple records (round-trip exact)."""
    path = Path(path)
    if format is None:
        format = "jsonl" if path.suffix == ".jsonl" else "csv"
    records = []
    with open(path) as fh:
        if format == "csv":
            header = fh.readline().rstrip("\n").split(",")
            for line in fh:
                values = [float(x) for x in line.rstrip("\n").split(",")]
                records.append(dict(zip(header, values)))
        else:
            for line in fh:
                records.append({k: float(v) for k, v in json.loads(line).items()})
    return records


def read_sidecar(path: str | Path) -> dict[str, str]:
    fields = {}
    with open(path) as fh:
        for line in fh:
            key, _, value = line.rstrip("\n").partition("=")
            fields[key] = value
    return fields
