"""Timing comparison of the compiled and pure-Python search kernels.

Run as ``python -m causalcf.bench_backends``.  Builds a seeded synthetic
world, tiles its state space into a large candidate batch, evaluates the
batch with every available backend, verifies the outputs are identical,
and prints throughput per backend.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from causalcf._plan import build_plan, encode_state, encode_states
from causalcf.backend import available_backends, get_backend
from causalcf.synth import random_world


def build_workload(seed: int, n_candidates: int):
    world = random_world(seed, max_states=4000, induced_bias=True)
    states = list(world.dataset.rows)
    plan = build_plan(world.schema, world.decisions, world.causal, world.weights)
    base = encode_states(world.schema, states)
    reps = max(1, -(-n_candidates // len(base)))
    X = np.tile(base, (reps, 1))[:n_candidates]
    s0 = encode_state(world.adverse[0])
    return plan, X, s0


def run(seed: int, n_candidates: int, repeat: int, p: int) -> list[dict]:
    plan, X, s0 = build_workload(seed, n_candidates)
    rows = []
    reference = None
    for name in available_backends():
        kernel = get_backend(name)
        kernel.evaluate_batch(plan, X[:100], s0, p, True)  # warm-up
        best = float("inf")
        out = None
        for _ in range(repeat):
            t0 = time.perf_counter()
            out = kernel.evaluate_batch(plan, X, s0, p, True)
            best = min(best, time.perf_counter() - t0)
        if reference is None:
            reference = out
        else:
            assert all(np.array_equal(a, b) for a, b in zip(reference, out)), (
                "backends disagree"
            )
        rows.append(
            {
                "backend": name,
                "seconds": best,
                "candidates_per_s": len(X) / best,
            }
        )
    return rows


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--candidates", type=int, default=200_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--norm", type=int, default=1, choices=(0, 1, 2))
    args = parser.parse_args(argv)

    rows = run(args.seed, args.candidates, args.repeat, args.norm)
    print(f"{'backend':<10} {'seconds':>10} {'candidates/s':>16}")
    for row in rows:
        print(f"{row['backend']:<10} {row['seconds']:>10.4f} {row['candidates_per_s']:>16,.0f}")
    if len(rows) == 2:
        speedup = rows[1]["seconds"] / rows[0]["seconds"]
        print(f"compiled speedup over python: {speedup:.1f}x")
    else:
        print("compiled kernel unavailable; only the python backend was timed")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
