"""
Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5] [--skip-run]

Times one covariance congruence over all 34 source parts, one ensemble
transition of 35 x 1000 Monte-Carlo states, and a full 3600-step budget of
the bundled static scenario, for every available backend.
"""

from __future__ import annotations

import argparse
import statistics
import time

import numpy as np

from sinsbudget import kernels
from sinsbudget.pipeline import Setup, run_budget
from sinsbudget.scenario import bundled_scenario_path, load_scenario


def best_of(fn, repeat: int, number: int) -> tuple[float, float]:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        times.append((time.perf_counter() - t0) / number)
    return min(times), statistics.median(times)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-run", action="store_true", help="skip the full budget run")
    args = ap.parse_args()

    setup = Setup.from_scenario(load_scenario(bundled_scenario_path("static_navgrade")))
    step = next(setup.steps())
    phi = step.phi
    rng = np.random.default_rng(0)
    a = rng.standard_normal((34, 30, 30))
    parts = a + a.transpose(0, 2, 1)
    states = rng.standard_normal((35 * 1000, 30))

    backends = kernels.available_backends()
    results: dict[str, dict[str, float]] = {}
    reference = None
    for name in backends:
        kernels.use_backend(name)
        out = kernels.congruence_batch(phi, parts)
        if reference is None:
            reference = out
        else:
            assert np.allclose(out, reference, rtol=1e-12, atol=1e-12), "backends disagree"
        r = {}
        r["congruence (34 x 30x30)"] = best_of(lambda: kernels.congruence_batch(phi, parts), args.repeat, 200)
        work = states.copy()
        r["transition (35000 x 30)"] = best_of(lambda: kernels.transition_batch(phi, work, inplace=True), args.repeat, 20)
        if not args.skip_run:
            r["budget run (3600 steps)"] = best_of(lambda: run_budget(setup, [3600.0]), max(1, args.repeat // 2), 1)
        results[name] = r

    print(f"{'kernel':<26}" + "".join(f"{b + ' best':>16}{b + ' median':>18}" for b in backends))
    for key in results[backends[0]]:
        row = f"{key:<26}"
        for b in backends:
            best, med = results[b][key]
            row += f"{best * 1e3:>13.3f} ms{med * 1e3:>15.3f} ms"
        print(row)
    if len(backends) == 2:
        for key in results[backends[0]]:
            ratio = results["python"][key][0] / results["compiled"][key][0]
            print(f"speed-up {key:<26} {ratio:5.2f}x")
    else:
        print("compiled extension not built; only the numpy backend was timed")


if __name__ == "__main__":
    main()
