"""Command line interface.

Subcommands: ``generate`` (write the canonical transition dataset),
``baseline`` (evaluate the max-entropy policy and print its reward
statistics next to the published reference numbers), ``evaluate`` (same
machinery for any built-in policy), ``trace`` (step one environment and
emit extended-state records), and ``serve`` (drive one environment over a
stdin/stdout JSON-line protocol, the surface consumed by foreign-language
bindings).

Exit codes: 0 success, 2 usage error, 1 runtime fault.  All randomness
derives from ``--seed``; rerunning any command with equal flags reproduces
its output byte for byte.

Environment variables: ``INDUSTRIALBENCH_OUTDIR`` supplies the default
output directory, ``INDUSTRIALBENCH_BACKEND`` the default compute backend.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .dynamics import DynamicsFault
from .environment import EXTENDED_DIMS, IndustrialBenchmark
from .harness import (
    ACTION_COLUMNS,
    DEFAULT_SET_POINTS,
    DEFAULT_STEPS,
    ROLE_ENV,
    SCHEMA_VERSION,
    evaluate_policy,
    generate_dataset,
    parse_policy_spec,
    run_trace,
    sub_seed,
    write_dataset,
)
from .rng import GENERATOR_NAME

# Published reference statistics for the max-entropy policy on this
# benchmark, shown next to our own numbers by the baseline command.
REFERENCE_MEAN_REWARD = -290.8
REFERENCE_STDERR = 0.6
REFERENCE_SD = 20.0

_OUTDIR_VAR = "INDUSTRIALBENCH_OUTDIR"


def _version_string() -> str:
    return f"industrialbench {__version__} (schema {SCHEMA_VERSION}, rng {GENERATOR_NAME})"


def _parse_set_points(text: str) -> list[float]:
    try:
        points = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")
    if not points:
        raise argparse.ArgumentTypeError("empty set-point list")
    for p in points:
        if not 0.0 <= p <= 100.0:
            raise argparse.ArgumentTypeError(f"set point {p} outside [0, 100]")
    return points


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="industrialbench",
        description="Industrial plant simulation benchmark: dataset generation and policy evaluation.",
    )
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, steps_default=DEFAULT_STEPS):
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--steps", type=int, default=steps_default,
                       help=f"steps per episode (default {steps_default})")
        p.add_argument("--miscal", choices=["disabled"], default="disabled",
                       help="mis-calibration mode (only 'disabled' is defined)")
        p.add_argument("--backend", choices=("auto", "compiled", "python"),
                       default="auto", help="compute backend (default auto)")

    gen = sub.add_parser("generate", help="write the benchmark transition dataset")
    common(gen)
    gen.add_argument("--set-points", type=_parse_set_points, default=list(DEFAULT_SET_POINTS),
                     metavar="P1,P2,...", help="comma-separated set points (default 10,20,...,100)")
    gen.add_argument("--out", type=Path, default=None,
                     help=f"output file (default dataset.<format> under ${_OUTDIR_VAR} or the cwd)")
    gen.add_argument("--format", choices=["csv", "jsonl"], default="csv")

    base = sub.add_parser("baseline", help="evaluate the max-entropy policy against the reference numbers")
    common(base)
    base.add_argument("--set-points", type=_parse_set_points, default=list(DEFAULT_SET_POINTS),
                      metavar="P1,P2,...", help="comma-separated set points (default 10,20,...,100)")
    base.add_argument("--episodes", type=int, default=1, help="episodes per set point (default 1)")

    ev = sub.add_parser("evaluate", help="evaluate a built-in policy")
    common(ev)
    ev.add_argument("--set-points", type=_parse_set_points, default=list(DEFAULT_SET_POINTS),
                    metavar="P1,P2,...", help="comma-separated set points (default 10,20,...,100)")
    ev.add_argument("--episodes", type=int, default=1, help="episodes per set point (default 1)")
    ev.add_argument("--policy", default="max-entropy",
                    help="max-entropy | constant:dv,dg,ds | hold (default max-entropy)")

    tr = sub.add_parser("trace", help="emit per-step extended-state records")
    common(tr)
    tr.add_argument("--set-point", type=float, default=50.0, help="set point (default 50)")
    tr.add_argument("--actions", type=Path, default=None,
                    help="JSON file with a list of [dv,dg,ds] triples to replay "
                         "(default: max-entropy actions)")
    tr.add_argument("--out", type=Path, default=None, help="output file (default stdout)")
    tr.add_argument("--format", choices=["jsonl", "csv"], default="jsonl")

    srv = sub.add_parser("serve", help="drive one environment over stdin/stdout JSON lines")
    srv.add_argument("--backend", choices=("auto", "compiled", "python"), default="auto",
                     help=argparse.SUPPRESS)  # accepted for symmetry; serve steps directly

    return parser


def _check_positive(parser, args, names=("steps",)) -> None:
    for name in names:
        value = getattr(args, name, None)
        if value is not None and value < 1:
            parser.error(f"--{name} must be >= 1, got {value}")


def _default_out(filename: str) -> Path:
    return Path(os.environ.get(_OUTDIR_VAR, ".")) / filename


def _format_stats(stats, label: str) -> str:
    lines = [
        f"{label}: {stats.episode_count} episodes x {stats.step_count // stats.episode_count} steps",
        f"  mean reward        {stats.mean_reward:10.3f}",
        f"  sd over episodes   {stats.sd:10.3f}   stderr {stats.stderr:8.3f}   (n={stats.episode_count})",
        f"  sd over steps      {stats.step_sd:10.3f}   stderr {stats.step_stderr:8.3f}   (n={stats.step_count})",
        f"  sd over set points {stats.setpoint_sd:10.3f}   stderr {stats.setpoint_stderr:8.3f}   (n={len(stats.setpoint_means)})",
    ]
    if stats.clamped_actions:
        lines.append(f"  clamped actions    {stats.clamped_actions}")
    return "\n".join(lines)


def cmd_generate(args) -> int:
    out = args.out if args.out is not None else _default_out(f"dataset.{args.format}")
    trajectories = generate_dataset(
        set_points=args.set_points, steps=args.steps, seed=args.seed, backend=args.backend,
    )
    write_dataset(trajectories, out, format=args.format)
    n = sum(len(t.tuples) for t in trajectories)
    print(f"wrote {n} tuples to {out}")
    return 0


def cmd_baseline(args) -> int:
    stats = evaluate_policy(
        "max-entropy", set_points=args.set_points, steps=args.steps,
        episodes=args.episodes, seed=args.seed, backend=args.backend,
    )
    print(_format_stats(stats, f"max-entropy policy, seed {args.seed}"))
    print(
        f"reference: mean reward {REFERENCE_MEAN_REWARD} +/- {REFERENCE_STDERR}, "
        f"sd {REFERENCE_SD} (mis-calibration active there; disabled here)"
    )
    return 0


def cmd_evaluate(args) -> int:
    stats = evaluate_policy(
        args.policy, set_points=args.set_points, steps=args.steps,
        episodes=args.episodes, seed=args.seed, backend=args.backend,
    )
    print(_format_stats(stats, f"{args.policy} policy, seed {args.seed}"))
    return 0


def cmd_trace(args) -> int:
    actions = None
    if args.actions is not None:
        with open(args.actions) as fh:
            actions = json.load(fh)
        if not isinstance(actions, list):
            raise ValueError(f"{args.actions}: expected a JSON list of [dv,dg,ds] triples")
        if len(actions) != args.steps:
            raise ValueError(f"{args.actions}: {len(actions)} actions but --steps {args.steps}")

    records = run_trace(args.set_point, args.steps, args.seed, actions=actions,
                        backend=args.backend)
    columns = EXTENDED_DIMS + ACTION_COLUMNS + ("RewardTotal",)

    def emit(fh):
        if args.format == "csv":
            fh.write(",".join(columns) + "\n")
            for record in records:
                fh.write(",".join(repr(record[c]) for c in columns) + "\n")
        else:
            for record in records:
                fh.write(json.dumps(record) + "\n")

    if args.out is None:
        emit(sys.stdout)
    else:
        with open(args.out, "w", newline="") as fh:
            emit(fh)
        print(f"wrote {len(records)} records to {args.out}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# serve: one JSON request per stdin line, one JSON response per stdout line
# ---------------------------------------------------------------------------
#
# Requests:
#   {"op": "reset", "set_point": 50, "seed": 1}      -> {"ok": true, "observation": {...}}
#       optional: velocity, gain, shift (initial steerings, default 50),
#       raw_seed (true to use the seed as the stream seed directly; by
#       default the stream seed is derived from (seed, set_point) exactly
#       as the trace command derives it, so traces match).
#   {"op": "step", "action": [dv, dg, ds]}           -> {"ok": true, "observation": {...},
#                                                        "reward": r, "extended": {...}}
#   {"op": "state"}                                   -> {"ok": true, "observation": {...}}
#   {"op": "extended"}                                -> {"ok": true, "extended": {...}}
#   {"op": "version"}                                 -> {"ok": true, "version": ...}
#   {"op": "close"}                                   -> {"ok": true} and the process exits
#
# Errors: {"ok": false, "kind": "range"|"state"|"protocol", "error": "..."}.
# The session survives range/state errors; protocol errors on unparseable
# lines are also answered rather than fatal.


class _ServeSession:
    def __init__(self):
        self.env = None

    def handle(self, request: dict) -> tuple[dict, bool]:
        op = request.get("op")
        if op == "reset":
            return self._reset(request), False
        if op == "step":
            return self._step(request), False
        if op == "state":
            return {"ok": True, "observation": self._observation()}, False
        if op == "extended":
            return {"ok": True, "extended": self._extended()}, False
        if op == "version":
            return {"ok": True, "version": __version__, "schema": SCHEMA_VERSION,
                    "generator": GENERATOR_NAME}, False
        if op == "close":
            return {"ok": True}, True
        raise _ServeError("protocol", f"unknown op {op!r}")

    def _reset(self, request: dict) -> dict:
        set_point = float(request.get("set_point", 50.0))
        seed = int(request.get("seed", 0))
        if not 0.0 <= set_point <= 100.0:
            raise _ServeError("range", f"set_point {set_point} outside [0, 100]")
        stream_seed = seed if request.get("raw_seed") else sub_seed(seed, set_point, 0, ROLE_ENV)
        try:
            self.env = IndustrialBenchmark(
                set_point=set_point,
                seed=stream_seed,
                velocity=float(request.get("velocity", 50.0)),
                gain=float(request.get("gain", 50.0)),
                shift=float(request.get("shift", 50.0)),
            )
            observation = self.env.reset()
        except ValueError as exc:
            self.env = None
            raise _ServeError("range", str(exc))
        return {"ok": True, "observation": observation.as_dict()}

    def _step(self, request: dict) -> dict:
        if self.env is None:
            raise _ServeError("state", "step before reset")
        action = request.get("action")
        if not isinstance(action, list) or len(action) != 3:
            raise _ServeError("range", f"action must be a [dv,dg,ds] triple, got {action!r}")
        try:
            triple = [float(x) for x in action]
        except (TypeError, ValueError):
            raise _ServeError("range", f"non-numeric action component in {action!r}")
        try:
            reward = self.env.step(triple)
        except ValueError as exc:
            raise _ServeError("range", str(exc))
        return {
            "ok": True,
            "observation": self.env.get_state().as_dict(),
            "reward": reward,
            "extended": self._extended(),
        }

    def _observation(self) -> dict:
        if self.env is None:
            raise _ServeError("state", "no live episode; reset first")
        return self.env.get_state().as_dict()

    def _extended(self) -> dict:
        if self.env is None:
            raise _ServeError("state", "no live episode; reset first")
        return self.env.get_internal_markov_state().as_dict()


class _ServeError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def cmd_serve(args) -> int:
    session = _ServeSession()
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        closing = False
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise _ServeError("protocol", "request must be a JSON object")
            response, closing = session.handle(request)
        except _ServeError as exc:
            response = {"ok": False, "kind": exc.kind, "error": str(exc)}
        except json.JSONDecodeError as exc:
            response = {"ok": False, "kind": "protocol", "error": f"bad JSON: {exc}"}
        except RuntimeError as exc:  # DynamicsFault, ResetRequired
            response = {"ok": False, "kind": "state", "error": str(exc)}
        sys.stdout.write(json.dumps(response) + "\n")
        sys.stdout.flush()
        if closing:
            break
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "baseline": cmd_baseline,
    "evaluate": cmd_evaluate,
    "trace": cmd_trace,
    "serve": cmd_serve,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _check_positive(parser, args, names=("steps", "episodes"))
    if getattr(args, "policy", None) is not None:
        try:
            parse_policy_spec(args.policy)
        except ValueError as exc:
            parser.error(str(exc))
    try:
        return _COMMANDS[args.command](args)
    except (OSError, ValueError, DynamicsFault) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
