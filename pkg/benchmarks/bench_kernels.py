"""Compare the compiled and pure-Python kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 200] [--no-sim]

Times every kernel on unicycle-sized stacks for a few network sizes, then a
full 30 s reference-scenario simulation per backend.
"""
from __future__ import annotations

import argparse
import time
import timeit

import numpy as np

from etlpv import _kernels as kernels
from etlpv.graph import CommGraph
from etlpv.lpv import build_unicycle_lpv
from etlpv.sim import Disturbance, NetworkScenario, run
from etlpv.synthesis import Mode, SynthesisProblem, synthesize


def kernel_cases(N: int, rng):
    model = build_unicycle_lpv()
    st = model.stacks
    Fx = rng.normal(size=(2, 2, 4))
    Fz = rng.normal(size=(2, 2, 2))
    alphas = rng.dirichlet(np.ones(2), size=N)
    X = rng.normal(size=(N, 4))
    Z = rng.normal(size=(N, 2))
    W = rng.normal(size=(N, 2))
    L = CommGraph.complete(N).laplacian_matrix() if N > 1 else np.zeros((1, 1))
    R = rng.normal(size=(N, 2))
    return {
        "blend_rows": lambda: kernels.blend_rows(alphas, st["A"]),
        "network_output": lambda: kernels.network_output(st["Cy"], alphas, X),
        "open_loop_step": lambda: kernels.open_loop_step(st["A"], alphas, X),
        "network_step": lambda: kernels.network_step(st["A"], st["Bw"], st["Bu"], Fx, Fz, alphas, X, Z, W),
        "formation_error": lambda: kernels.formation_error(L[0], R, X[:, :2].copy()),
    }


def bench_kernels(repeat: int):
    rng = np.random.default_rng(0)
    rows = []
    for N in (3, 10, 50):
        for backend in kernels.available_backends():
            kernels.use_backend(backend)
            for name, fn in kernel_cases(N, rng).items():
                t = min(timeit.repeat(fn, number=repeat, repeat=3)) / repeat
                rows.append((N, name, backend, t))
    return rows


def bench_simulation():
    model = build_unicycle_lpv()
    graph = CommGraph.complete(3)
    problem = SynthesisProblem(model, (3.0, 3.0), None, 1e-3, -0.5, 0.1, Mode.MINIMIZE_GAMMA_SQUARED)
    cert, _ = synthesize(problem)
    _, ctrl = synthesize(SynthesisProblem(model, (3.0, 3.0), 1.1 * cert.gamma, 1e-3, -0.5, 0.1))
    R = np.array([[1.0, 0.0], [0.0, 0.5], [0.5, -0.5]])
    out = []
    for backend in kernels.available_backends():
        kernels.use_backend(backend)
        for est in ("zoh", "ole", "cle"):
            sc = NetworkScenario(model, graph, ctrl, est, 1e-3, 0.01, 3000, R, [Disturbance(0, 0, 4.0, 4.5, 1.0)])
            t0 = time.perf_counter()
            _, m = run(sc)
            out.append((backend, est, time.perf_counter() - t0, m.trigger_events))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--no-sim", action="store_true")
    args = ap.parse_args(argv)
    initial = kernels.BACKEND
    try:
        rows = bench_kernels(args.repeat)
        print(f"{'N':>3}  {'kernel':<16} {'backend':<7} {'time/call':>11}")
        for N, name, backend, t in rows:
            print(f"{N:>3}  {name:<16} {backend:<7} {t * 1e6:>9.2f}us")
        by = {(N, name): {} for N, name, _, _ in rows}
        for N, name, backend, t in rows:
            by[(N, name)][backend] = t
        if "cython" in kernels.available_backends():
            print("\nspeed-up (python / cython)")
            for (N, name), d in by.items():
                print(f"{N:>3}  {name:<16} {d['python'] / d['cython']:6.1f}x")
        if not args.no_sim:
            print("\n30 s reference scenario (3000 steps)")
            for backend, est, t, events in bench_simulation():
                print(f"  {backend:<7} {est}: {t:6.2f} s  ({events} events)")
    finally:
        kernels.use_backend(initial)


if __name__ == "__main__":
    main()
