"""Update-latency benchmark: compiled kernel vs pure-Python fallback.

Times the full per-measurement step (experiment selection, outcome
sampling, mean/sigma update) by running batches of basic-walk trials
through each available backend, and the bare closed-form update for
reference.  Reports nanoseconds per update, median over repeats.
"""

from __future__ import annotations

import time

from . import _backend
from .gaussian import GaussianState, update_optimal
from .oracles import make_stream

__all__ = ["bench_updates", "format_report"]


def _time_backend(kernel, n_trials: int, n_exp: int, repeats: int) -> float:
    best = []
    for rep in range(repeats):
        rng = make_stream(12345, rep)
        t0 = time.perf_counter()
        for _ in range(n_trials):
            kernel.run_trial(0.0, 1.0, n_exp, 1.0, 0, False, n_exp, 0.0, rng)
        elapsed = time.perf_counter() - t0
        best.append(elapsed / (n_trials * n_exp) * 1e9)
    best.sort()
    return best[len(best) // 2]


def _time_update_only(repeats: int, n_calls: int = 200_000) -> float:
    results = []
    for _ in range(repeats):
        state = GaussianState(0.0, 1.0)
        t0 = time.perf_counter()
        for i in range(n_calls):
            state = update_optimal(state, i & 1)
            if state.sigma < 1e-200:
                state = GaussianState(0.0, 1.0)
        results.append((time.perf_counter() - t0) / n_calls * 1e9)
    results.sort()
    return results[len(results) // 2]


def bench_updates(n_trials: int = 2000, n_exp: int = 1000, repeats: int = 5) -> dict:
    """Median ns per measurement step for every available backend."""
    out = {
        "n_steps_per_repeat": n_trials * n_exp,
        "repeats": repeats,
        "default_backend": _backend.BACKEND,
        "backends": {},
        "update_optimal_only_ns": _time_update_only(repeats),
    }
    for name, kernel in sorted(_backend.available_backends().items()):
        out["backends"][name] = _time_backend(kernel, n_trials, n_exp, repeats)
    return out


def format_report(result: dict) -> str:
    lines = [
        f"steps per repeat: {result['n_steps_per_repeat']}, "
        f"repeats: {result['repeats']} (median reported)",
        f"default backend: {result['default_backend']}",
    ]
    for name, ns in result["backends"].items():
        lines.append(f"  {name:>8s}: {ns:8.1f} ns/step")
    if "compiled" in result["backends"] and "python" in result["backends"]:
        ratio = result["backends"]["python"] / result["backends"]["compiled"]
        lines.append(f"  speedup : {ratio:8.1f}x (compiled over python)")
    lines.append(
        f"  update_optimal alone (python objects): "
        f"{result['update_optimal_only_ns']:.1f} ns/call"
    )
    return "\n".join(lines)
