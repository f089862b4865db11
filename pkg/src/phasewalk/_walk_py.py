"""Pure-Python walker kernel: fallback for the compiled extension.

``run_trial`` here and in ``_walk_fast.pyx`` are written expression-for-
expression alike and draw one uniform per measurement from the same
Generator stream, so the two backends produce bit-identical trials.
Any change to one must be mirrored in the other (tests/test_backends.py
enforces this).
"""

from __future__ import annotations

import math

import numpy as np

from .gaussian import SIGMA_CONTRACT, SIGMA_GROW, STEP_SCALE

ROLE_ACCEPTED = 0
ROLE_CHECK = 1
ROLE_UNWOUND = 2

_HALF_PI = 0.5 * math.pi


def run_trial(
    mu0: float,
    sigma0: float,
    n_exp: int,
    tau_check: float,
    n_unwind: int,
    constrained: bool,
    max_total: int,
    true_omega: float,
    rng: np.random.Generator,
):
    """Run one full estimation trial against a simulated measurement source.

    Returns (mu, sigma, accepted, total, checks, unwound, budget_exhausted,
    t_log, omega_inv_log, d_log, role_log) where the log arrays hold every
    measurement in order.  Entries start as accepted/check; an accepted
    entry's role is rewritten to unwound if it is later popped.
    """
    mu = mu0
    sigma = sigma0
    t_log: list[float] = []
    w_log: list[float] = []
    d_log: list[int] = []
    role_log: list[int] = []
    stack: list[int] = []  # indices into the logs, LIFO
    accepted = 0
    total = 0
    checks = 0
    unwound = 0
    budget_exhausted = False
    rand = rng.random

    while accepted < n_exp:
        if total >= max_total:
            budget_exhausted = True
            break
        # measure at the variance-minimizing experiment and accept the datum
        t = 1.0 / sigma
        winv = mu - _HALF_PI * sigma
        c = math.cos(0.5 * t * (true_omega - winv))
        d = 0 if rand() < c * c else 1
        stack.append(len(d_log))
        t_log.append(t)
        w_log.append(winv)
        d_log.append(d)
        role_log.append(ROLE_ACCEPTED)
        total += 1
        shift = sigma * STEP_SCALE
        mu = mu - shift if d == 0 else mu + shift
        sigma = sigma * SIGMA_CONTRACT
        accepted += 1

        if n_unwind > 0:
            if total >= max_total:
                budget_exhausted = True
                break
            t = tau_check / sigma
            winv = mu
            c = math.cos(0.5 * t * (true_omega - winv))
            dprime = 0 if rand() < c * c else 1
            t_log.append(t)
            w_log.append(winv)
            d_log.append(dprime)
            role_log.append(ROLE_CHECK)
            checks += 1
            total += 1
            while dprime == 1:
                aborted = False
                for _ in range(n_unwind):
                    if constrained and not stack:
                        # never grow sigma past the prior: abort the step
                        aborted = True
                        break
                    sigma = sigma * SIGMA_GROW
                    if stack:
                        idx = stack.pop()
                        dpop = d_log[idx]
                        role_log[idx] = ROLE_UNWOUND
                        # inverse of the accepted-step shift, at the regrown sigma
                        shift = sigma * STEP_SCALE
                        mu = mu + shift if dpop == 0 else mu - shift
                        accepted -= 1
                    unwound += 1
                if aborted:
                    break
                if total >= max_total:
                    budget_exhausted = True
                    break
                t = tau_check / sigma
                winv = mu
                c = math.cos(0.5 * t * (true_omega - winv))
                dprime = 0 if rand() < c * c else 1
                t_log.append(t)
                w_log.append(winv)
                d_log.append(dprime)
                role_log.append(ROLE_CHECK)
                checks += 1
                total += 1
            if budget_exhausted:
                break

    return (
        mu,
        sigma,
        accepted,
        total,
        checks,
        unwound,
        budget_exhausted,
        np.array(t_log, dtype=np.float64),
        np.array(w_log, dtype=np.float64),
        np.array(d_log, dtype=np.int8),
        np.array(role_log, dtype=np.int8),
    )
