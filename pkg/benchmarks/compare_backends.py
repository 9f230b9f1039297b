"""Time the compiled and pure-Python rollout kernels on identical work.

The two kernels promise bit-identical trajectories, so this script doubles
as a parity check: it refuses to print a speedup for outputs that differ.

    python3 benchmarks/compare_backends.py [--steps N] [--repeats K]
"""

import argparse
import time

from industrialbench import backend


def run_once(name: str, steps: int, seed: int) -> tuple[float, dict]:
    t0 = time.perf_counter()
    out = backend.rollout(50.0, 50.0, 50.0, 50.0, steps, seed, seed + 1,
                          "max-entropy", backend=name)
    return time.perf_counter() - t0, out


def assert_identical(a: dict, b: dict) -> None:
    for key in ("obs0", "actions", "rewards", "extended",
                "env_stream_state", "policy_stream_state"):
        if a[key] != b[key]:
            raise SystemExit(f"backend outputs differ in {key!r}; parity broken")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=20_000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    names = backend.available_backends()
    print(f"backends: {', '.join(names)}   ({args.steps} steps, "
          f"best of {args.repeats})")

    best: dict[str, float] = {}
    outputs: dict[str, dict] = {}
    for name in names:
        for _ in range(args.repeats):
            elapsed, out = run_once(name, args.steps, args.seed)
            best[name] = min(best.get(name, elapsed), elapsed)
            outputs[name] = out
        rate = args.steps / best[name]
        print(f"  {name:>8}: {best[name] * 1e3:8.1f} ms   {rate:12,.0f} steps/s")

    if len(names) == 2:
        assert_identical(outputs["compiled"], outputs["python"])
        print(f"  outputs bit-identical; speedup x{best['python'] / best['compiled']:.1f}")
    else:
        print("  compiled kernel not built; nothing to compare against")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
