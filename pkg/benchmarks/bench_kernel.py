"""Benchmark the compiled constraint kernel against the pure-numpy fallback.

Times the three hot paths on real fixtures: residual evaluation, Jacobian
assembly, and a full 360-step simulated cycle (Newton solve per step).

Run from the repository root::

    python3 benchmarks/bench_kernel.py [--repeats 7] [--evals 2000]
"""

from __future__ import annotations

import argparse
import math
import pathlib
import statistics
import time

from mechsketch.kinematics import (assemble, compiled_available, initial_state,
                                   kernel, run)
from mechsketch.mechanism import SceneModel
from mechsketch.sketch import SketchDocument

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def load_mechanism(name: str):
    doc = SketchDocument.load_file(FIXTURES / f"{name}.mech.json")
    scene = SceneModel.from_payload(doc.mechanism)
    return next(m for m in scene.instances() if m.driver_joints())


def best_of(repeats: int, fn) -> float:
    return min(timed(fn) for _ in range(repeats))


def timed(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def bench_kernel(mech, kernel_name: str, repeats: int, evals: int) -> dict:
    system = assemble(mech, kernel=kernel(kernel_name))
    state = initial_state(system)
    q = state.q.copy()
    targets = state.targets.copy()

    def eval_residuals():
        for _ in range(evals):
            system.residual(q, targets=targets)

    def eval_jacobians():
        for _ in range(evals):
            system.jacobian(q)

    def full_cycle():
        result = run(system, initial_state(system), 2.0 * math.pi)
        assert result.status.value == "ok"

    full_cycle()  # warm up caches and any lazy setup
    return {
        "residual_us": best_of(repeats, eval_residuals) / evals * 1e6,
        "jacobian_us": best_of(repeats, eval_jacobians) / evals * 1e6,
        "cycle_ms": best_of(repeats, full_cycle) * 1e3,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7,
                        help="timing repeats; the best run is reported")
    parser.add_argument("--evals", type=int, default=2000,
                        help="residual/Jacobian evaluations per timing run")
    parser.add_argument("--fixtures", nargs="*", default=["fb1", "drumpedal"],
                        help="fixture mechanisms to benchmark")
    args = parser.parse_args()

    kernels = ["pure"] + (["compiled"] if compiled_available() else [])
    if len(kernels) == 1:
        print("note: compiled kernel unavailable, timing the fallback only")

    header = f"{'fixture':<10} {'kernel':<9} {'residual':>12} {'jacobian':>12} {'360-step cycle':>16}"
    print(header)
    print("-" * len(header))
    for name in args.fixtures:
        mech = load_mechanism(name)
        rows = {}
        for kname in kernels:
            rows[kname] = bench_kernel(mech, kname, args.repeats, args.evals)
            r = rows[kname]
            print(f"{name:<10} {kname:<9} {r['residual_us']:>9.2f} us "
                  f"{r['jacobian_us']:>9.2f} us {r['cycle_ms']:>13.2f} ms")
        if len(rows) == 2:
            speedup = {k: rows["pure"][k] / rows["compiled"][k]
                       for k in rows["pure"]}
            print(f"{'':<10} {'speedup':<9} {speedup['residual_us']:>9.2f} x  "
                  f"{speedup['jacobian_us']:>9.2f} x  {speedup['cycle_ms']:>13.2f} x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
