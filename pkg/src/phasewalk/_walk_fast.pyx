# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled walker kernel.

Mirror of ``_walk_py.run_trial``: identical expression order, identical RNG
consumption (one uniform per measurement via the Generator's BitGenerator
capsule), so compiled and pure-Python backends emit bit-identical trials.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport cos

import numpy as np

cimport numpy as cnp
from numpy.random cimport bitgen_t

from .gaussian import SIGMA_CONTRACT as _CONTRACT
from .gaussian import SIGMA_GROW as _GROW
from .gaussian import STEP_SCALE as _STEP

cnp.import_array()

ROLE_ACCEPTED = 0
ROLE_CHECK = 1
ROLE_UNWOUND = 2

cdef double STEP_SCALE = _STEP
cdef double SIGMA_CONTRACT = _CONTRACT
cdef double SIGMA_GROW = _GROW
cdef double HALF_PI = 0.5 * np.pi


def run_trial(
    double mu0,
    double sigma0,
    long n_exp,
    double tau_check,
    long n_unwind,
    bint constrained,
    long max_total,
    double true_omega,
    rng,
):
    """Compiled twin of ``_walk_py.run_trial`` (same signature and result)."""
    cdef bitgen_t *bitgen
    capsule = rng.bit_generator.capsule
    bitgen = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    t_log_arr = np.empty(max_total, dtype=np.float64)
    w_log_arr = np.empty(max_total, dtype=np.float64)
    d_log_arr = np.empty(max_total, dtype=np.int8)
    role_log_arr = np.empty(max_total, dtype=np.int8)
    stack_arr = np.empty(n_exp if n_exp > 0 else 1, dtype=np.int64)
    cdef double[::1] t_log = t_log_arr
    cdef double[::1] w_log = w_log_arr
    cdef signed char[::1] d_log = d_log_arr
    cdef signed char[::1] role_log = role_log_arr
    cdef long[::1] stack = stack_arr

    cdef double mu = mu0
    cdef double sigma = sigma0
    cdef long accepted = 0, total = 0, checks = 0, unwound = 0
    cdef long n_log = 0, stack_top = 0
    cdef bint budget_exhausted = False, aborted = False
    cdef long i, idx
    cdef int d, dprime, dpop
    cdef double t, winv, c, shift

    while accepted < n_exp:
        if total >= max_total:
            budget_exhausted = True
            break
        t = 1.0 / sigma
        winv = mu - HALF_PI * sigma
        c = cos(0.5 * t * (true_omega - winv))
        d = 0 if bitgen.next_double(bitgen.state) < c * c else 1
        stack[stack_top] = n_log
        stack_top += 1
        t_log[n_log] = t
        w_log[n_log] = winv
        d_log[n_log] = d
        role_log[n_log] = ROLE_ACCEPTED
        n_log += 1
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
            c = cos(0.5 * t * (true_omega - winv))
            dprime = 0 if bitgen.next_double(bitgen.state) < c * c else 1
            t_log[n_log] = t
            w_log[n_log] = winv
            d_log[n_log] = dprime
            role_log[n_log] = ROLE_CHECK
            n_log += 1
            checks += 1
            total += 1
            while dprime == 1:
                aborted = False
                for i in range(n_unwind):
                    if constrained and stack_top == 0:
                        aborted = True
                        break
                    sigma = sigma * SIGMA_GROW
                    if stack_top > 0:
                        stack_top -= 1
                        idx = stack[stack_top]
                        dpop = d_log[idx]
                        role_log[idx] = ROLE_UNWOUND
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
                c = cos(0.5 * t * (true_omega - winv))
                dprime = 0 if bitgen.next_double(bitgen.state) < c * c else 1
                t_log[n_log] = t
                w_log[n_log] = winv
                d_log[n_log] = dprime
                role_log[n_log] = ROLE_CHECK
                n_log += 1
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
        t_log_arr[:n_log].copy(),
        w_log_arr[:n_log].copy(),
        d_log_arr[:n_log].copy(),
        role_log_arr[:n_log].copy(),
    )
