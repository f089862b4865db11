"""The random-walk estimator state machine.

The estimator keeps a normal posterior (mu, sigma) and a stack of accepted
outcome bits.  Each accepted measurement shifts mu by sigma/sqrt(e) and
contracts sigma deterministically; when consistency checks are enabled,
a failed check unwinds steps by popping the stack and inverting them, which
lets the walker escape a broken normal approximation (and, in unconstrained
mode, grow sigma past the initial prior to reach remote eigenphases).

``step``/``consistency_check_and_unwind`` operate on a ``WalkerState`` and
any measurement oracle.  ``run`` drives a whole trial; for simulated
oracles it dispatches to the selected kernel backend (compiled or pure
Python -- both produce identical results, see tests/test_backends.py).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .gaussian import (
    SIGMA_CONTRACT,
    SIGMA_GROW,
    STEP_SCALE,
    GaussianState,
    check_experiment,
    optimal_experiment,
)
from .oracles import SimulatedOracle
from .records import TrialRecord, quadratic_and_log10_loss
from ._walk_py import ROLE_ACCEPTED, ROLE_CHECK, ROLE_UNWOUND

__all__ = [
    "UNWIND_MODES",
    "WalkerConfig",
    "WalkerState",
    "UnwindOutcome",
    "BudgetExhausted",
    "new_state",
    "step",
    "consistency_check_and_unwind",
    "run",
]

UNWIND_MODES = ("unconstrained", "constrained")


class BudgetExhausted(RuntimeError):
    """The cap on total measurements (checks included) has been reached."""


@dataclass(frozen=True)
class WalkerConfig:
    """Trial configuration.

    n_unwind = 0 disables consistency checks entirely (the basic walk).
    max_total_experiments caps *all* measurements: accepted, checks, and
    the re-measurements that follow unwinding.
    """

    mu0: float = 0.0
    sigma0: float = 1.0
    n_exp: int = 100
    tau_check: float = 0.01
    n_unwind: int = 2
    unwind_mode: str = "unconstrained"
    max_total_experiments: int = 100_000

    def __post_init__(self):
        if not math.isfinite(self.mu0):
            raise ValueError(f"mu0 must be finite, got {self.mu0}")
        if not (math.isfinite(self.sigma0) and self.sigma0 > 0):
            raise ValueError(f"sigma0 must be finite and > 0, got {self.sigma0}")
        if self.n_exp < 0:
            raise ValueError(f"n_exp must be >= 0, got {self.n_exp}")
        if not (math.isfinite(self.tau_check) and self.tau_check > 0):
            raise ValueError(f"tau_check must be finite and > 0, got {self.tau_check}")
        if self.n_unwind < 0:
            raise ValueError(f"n_unwind must be >= 0, got {self.n_unwind}")
        if self.unwind_mode not in UNWIND_MODES:
            raise ValueError(
                f"unwind_mode must be one of {UNWIND_MODES}, got {self.unwind_mode!r}"
            )
        if self.max_total_experiments < self.n_exp:
            raise ValueError(
                "max_total_experiments must be >= n_exp, got "
                f"{self.max_total_experiments} < {self.n_exp}"
            )

    @property
    def constrained(self) -> bool:
        return self.unwind_mode == "constrained"


@dataclass
class WalkerState:
    """Mutable single-owner walker state plus the full measurement log."""

    config: WalkerConfig
    gaussian: GaussianState
    datum_stack: list = field(default_factory=list)
    accepted_count: int = 0
    total_count: int = 0
    checks_performed: int = 0
    steps_unwound: int = 0
    budget_exhausted: bool = False
    # measurement log, one entry per measurement in order
    log_t: list = field(default_factory=list)
    log_omega_inv: list = field(default_factory=list)
    log_d: list = field(default_factory=list)
    log_role: list = field(default_factory=list)
    # log index of each stacked datum, kept in lockstep with datum_stack
    _stack_log_idx: list = field(default_factory=list)


@dataclass(frozen=True)
class UnwindOutcome:
    """Telemetry from one consistency-check pass."""

    checks_performed: int
    steps_unwound: int
    aborted_on_empty_stack: bool


def new_state(config: WalkerConfig) -> WalkerState:
    return WalkerState(
        config=config,
        gaussian=GaussianState(mu=config.mu0, sigma=config.sigma0),
    )


def _measure(state: WalkerState, oracle, params, role: int) -> int:
    if state.total_count >= state.config.max_total_experiments:
        raise BudgetExhausted(
            f"total experiment cap {state.config.max_total_experiments} reached"
        )
    d = oracle.measure(params)
    state.log_t.append(params.t)
    state.log_omega_inv.append(params.omega_inv)
    state.log_d.append(d)
    state.log_role.append(role)
    state.total_count += 1
    return d


def step(state: WalkerState, oracle) -> None:
    """Measure at the optimal experiment, accept the datum, update (mu, sigma).

    Raises BudgetExhausted if the measurement would exceed the total cap.
    """
    g = state.gaussian
    params = optimal_experiment(g)
    state._stack_log_idx.append(len(state.log_d))
    try:
        d = _measure(state, oracle, params, ROLE_ACCEPTED)
    except BudgetExhausted:
        state._stack_log_idx.pop()
        raise
    state.datum_stack.append(d)
    shift = g.sigma * STEP_SCALE
    mu = g.mu - shift if d == 0 else g.mu + shift
    state.gaussian = GaussianState(mu=mu, sigma=g.sigma * SIGMA_CONTRACT)
    state.accepted_count += 1


def consistency_check_and_unwind(state: WalkerState, oracle) -> UnwindOutcome:
    """Check the posterior against a fresh measurement; unwind until it passes.

    A check measures at t = tau_check/sigma, omega_inv = mu, where outcome 0
    is near-certain while the normal approximation holds.  While the check
    fails, n_unwind steps are reverted (sigma regrown first, then the popped
    datum's mean shift inverted at the regrown sigma) and the check repeats.
    In constrained mode an unwind iteration that finds the stack empty is
    aborted and the pass ends; in unconstrained mode sigma keeps growing and
    only the mean shift is skipped.
    """
    config = state.config
    if config.n_unwind <= 0:
        raise ValueError("consistency checks require n_unwind > 0")
    checks = 0
    unwound = 0
    aborted = False
    dprime = _measure(
        state, oracle, check_experiment(state.gaussian, config.tau_check), ROLE_CHECK
    )
    checks += 1
    state.checks_performed += 1
    while dprime == 1:
        mu = state.gaussian.mu
        sigma = state.gaussian.sigma
        for _ in range(config.n_unwind):
            if config.constrained and not state.datum_stack:
                aborted = True
                break
            sigma = sigma * SIGMA_GROW
            if state.datum_stack:
                dpop = state.datum_stack.pop()
                idx = state._stack_log_idx.pop()
                state.log_role[idx] = ROLE_UNWOUND
                shift = sigma * STEP_SCALE
                mu = mu + shift if dpop == 0 else mu - shift
                state.accepted_count -= 1
            unwound += 1
            state.steps_unwound += 1
        state.gaussian = GaussianState(mu=mu, sigma=sigma)
        if aborted:
            break
        dprime = _measure(
            state, oracle, check_experiment(state.gaussian, config.tau_check), ROLE_CHECK
        )
        checks += 1
        state.checks_performed += 1
    return UnwindOutcome(
        checks_performed=checks,
        steps_unwound=unwound,
        aborted_on_empty_stack=aborted,
    )


def _run_object_path(config: WalkerConfig, oracle) -> WalkerState:
    """Drive a trial through the step/check operations (any oracle)."""
    state = new_state(config)
    try:
        while state.accepted_count < config.n_exp:
            step(state, oracle)
            if config.n_unwind > 0:
                consistency_check_and_unwind(state, oracle)
    except BudgetExhausted:
        state.budget_exhausted = True
        return state
    state.budget_exhausted = False
    return state


def run(config: WalkerConfig, oracle, seed: int = -1, backend=None):
    """Run one full trial; returns (estimate, TrialRecord).

    Simulated oracles are dispatched to the selected kernel backend; other
    oracles (e.g. replays) go through the step/check operations.  Both paths
    implement the identical algorithm and consume the oracle identically.
    On budget exhaustion the record is flagged rather than raising, with the
    current mean as the estimate.  ``seed`` is recorded verbatim (use -1 for
    "not applicable").
    """
    if backend is None:
        backend = _backend._DEFAULT
    if isinstance(oracle, SimulatedOracle):
        (
            mu,
            _sigma,
            accepted,
            total,
            checks,
            unwound,
            budget_exhausted,
            t_log,
            w_log,
            d_log,
            role_log,
        ) = backend.run_trial(
            config.mu0,
            config.sigma0,
            config.n_exp,
            config.tau_check,
            config.n_unwind,
            config.constrained,
            config.max_total_experiments,
            oracle.true_omega,
            oracle.rng,
        )
        oracle.draw_count += total
        true_omega = oracle.true_omega
    else:
        state = _run_object_path(config, oracle)
        mu = state.gaussian.mu
        accepted = state.accepted_count
        total = state.total_count
        checks = state.checks_performed
        unwound = state.steps_unwound
        budget_exhausted = state.budget_exhausted
        t_log = np.array(state.log_t, dtype=np.float64)
        w_log = np.array(state.log_omega_inv, dtype=np.float64)
        d_log = np.array(state.log_d, dtype=np.int8)
        role_log = np.array(state.log_role, dtype=np.int8)
        true_omega = getattr(oracle, "true_omega", math.nan)

    loss, log_loss = quadratic_and_log10_loss(mu, true_omega)
    record = TrialRecord(
        true_omega=true_omega,
        estimate=mu,
        quadratic_loss=loss,
        log10_loss=log_loss,
        accepted_count=accepted,
        total_count=total,
        checks_performed=checks,
        steps_unwound=unwound,
        budget_exhausted=budget_exhausted,
        seed=seed,
        data_t=t_log,
        data_omega_inv=w_log,
        data_d=d_log,
        data_role=role_log,
    )
    return mu, record
