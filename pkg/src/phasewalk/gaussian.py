"""Gaussian-approximate Bayesian updates for iterative phase estimation.

A single measurement with evolution time ``t`` and inversion phase
``omega_inv`` yields a bit ``d`` with likelihood

    Pr(d | omega; t, omega_inv) = cos^2(t (omega - omega_inv) / 2 + d pi / 2).

Starting from a normal prior N(mu, sigma^2) the exact posterior is not
normal, but matching its first two moments gives closed-form update rules.
This module provides those rules, the experiment choices that make them
optimal, and a brute-force quadrature oracle used to verify everything.

Sign convention
---------------
With the likelihood above and the variance-minimizing experiment
``t = 1/sigma``, ``omega_inv = mu - pi sigma / 2``, the exact posterior mean
moves *down* by ``sigma/sqrt(e)`` on outcome 0 and *up* on outcome 1.  (At
that inversion phase ``Pr(d=1 | omega) = (1 + sin((omega - mu)/sigma)) / 2``,
so a 1 is evidence that omega lies above the current mean.)  All update
rules here follow that convention; ``bayes_oracle`` is the ground truth the
tests hold it to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "STEP_SCALE",
    "SIGMA_CONTRACT",
    "SIGMA_GROW",
    "WALK_RANGE",
    "GaussianState",
    "ExperimentParams",
    "DegenerateUpdate",
    "QuadratureFailure",
    "likelihood",
    "update_general",
    "update_optimal",
    "optimal_experiment",
    "check_experiment",
    "check_pass_probability",
    "bayes_oracle",
]

# Magnitude of the mean shift per optimal update: 1/sqrt(e).
STEP_SCALE = math.exp(-0.5)
# Deterministic per-update contraction of sigma: sqrt((e-1)/e).
SIGMA_CONTRACT = math.sqrt((math.e - 1.0) / math.e)
# Inverse factor applied when a step is unwound: sqrt(e/(e-1)).
SIGMA_GROW = math.sqrt(math.e / (math.e - 1.0))
# Total reach of the walk in units of the initial sigma: the geometric sum
# (1/sqrt(e)) * sum_k ((e-1)/e)^(k/2) = 1/(sqrt(e) - sqrt(e-1)) ~= 2.9596.
WALK_RANGE = 1.0 / (math.sqrt(math.e) - math.sqrt(math.e - 1.0))


class DegenerateUpdate(ValueError):
    """The moment-matched update is invalid for these parameters."""


class QuadratureFailure(ValueError):
    """Numerical posterior carries essentially no mass (inconsistent data)."""


@dataclass(frozen=True)
class GaussianState:
    """Normal approximation of the eigenphase posterior.

    mu is the phase estimate in radians; sigma its standard deviation
    (strictly positive, finite).
    """

    mu: float
    sigma: float

    def __post_init__(self):
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu}")
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError(f"sigma must be finite and > 0, got {self.sigma}")


@dataclass(frozen=True)
class ExperimentParams:
    """One measurement setting: evolution time t and inversion phase."""

    t: float
    omega_inv: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t > 0.0):
            raise ValueError(f"t must be finite and > 0, got {self.t}")
        if not math.isfinite(self.omega_inv):
            raise ValueError(f"omega_inv must be finite, got {self.omega_inv}")


def _check_datum(d) -> int:
    if d not in (0, 1):
        raise ValueError(f"datum must be 0 or 1, got {d!r}")
    return int(d)


def likelihood(d, omega, params: ExperimentParams):
    """Pr(d | omega) = cos^2(t (omega - omega_inv)/2 + d pi/2).

    ``omega`` may be a scalar or an ndarray; the result has the same shape.
    The two outcomes sum to one for every omega.
    """
    d = _check_datum(d)
    arg = 0.5 * params.t * (omega - params.omega_inv) + 0.5 * math.pi * d
    return np.cos(arg) ** 2


def update_general(prior: GaussianState, d, params: ExperimentParams) -> GaussianState:
    """Moment-matched posterior for one datum at arbitrary (t, omega_inv).

    Reduces to the standardized prior (mu=0, sigma=1) with rescaled time
    ``ts = t * sigma`` and inversion offset ``ws = (omega_inv - mu)/sigma``,
    evaluates the closed-form posterior moments there, and transforms back.
    With s = (-1)^d and E = exp(-ts^2/2):

        mean'  = s ts E sin(ts ws) / Z,          Z = 1 + s E cos(ts ws)
        var'   = 1 - ts^2 E (s cos(ts ws) + E) / Z^2

    Z is twice the marginal probability of the observed datum.  Raises
    DegenerateUpdate when Z underflows to zero (an essentially impossible
    outcome) or the variance expression is no longer positive, meaning the
    normal approximation has broken down for these parameters.
    """
    d = _check_datum(d)
    s = 1.0 if d == 0 else -1.0
    ts = params.t * prior.sigma
    ws = (params.omega_inv - prior.mu) / prior.sigma
    E = math.exp(-0.5 * ts * ts)
    c = math.cos(ts * ws)
    Z = 1.0 + s * E * c
    if Z <= 0.0:
        raise DegenerateUpdate(
            f"observed datum has vanishing probability (Z={Z}) at ts={ts}, ws={ws}"
        )
    mean_std = s * ts * E * math.sin(ts * ws) / Z
    var_std = 1.0 - ts * ts * E * (s * c + E) / (Z * Z)
    if not (math.isfinite(var_std) and var_std > 0.0):
        raise DegenerateUpdate(
            f"posterior variance {var_std} is not positive at ts={ts}, ws={ws}"
        )
    return GaussianState(
        mu=prior.mu + prior.sigma * mean_std,
        sigma=prior.sigma * math.sqrt(var_std),
    )


def update_optimal(prior: GaussianState, d) -> GaussianState:
    """Posterior after measuring at the variance-minimizing experiment.

    Equals ``update_general(prior, d, optimal_experiment(prior))``: the mean
    shifts by sigma/sqrt(e) (down for d=0, up for d=1 -- see the module
    docstring) and sigma contracts by sqrt((e-1)/e) regardless of d.
    """
    d = _check_datum(d)
    shift = prior.sigma * STEP_SCALE
    mu = prior.mu - shift if d == 0 else prior.mu + shift
    return GaussianState(mu=mu, sigma=prior.sigma * SIGMA_CONTRACT)


def optimal_experiment(prior: GaussianState) -> ExperimentParams:
    """Experiment minimizing the expected posterior variance.

    t = 1/sigma and omega_inv = mu - pi sigma / 2, which centres the
    likelihood's steepest slope on the prior mean.
    """
    return ExperimentParams(
        t=1.0 / prior.sigma,
        omega_inv=prior.mu - 0.5 * math.pi * prior.sigma,
    )


def check_experiment(prior: GaussianState, tau_check: float) -> ExperimentParams:
    """Consistency-check experiment: t = tau_check/sigma, omega_inv = mu.

    If the normal approximation holds, outcome 0 is observed with
    probability ``check_pass_probability(tau_check)``.
    """
    if not (math.isfinite(tau_check) and tau_check > 0.0):
        raise ValueError(f"tau_check must be finite and > 0, got {tau_check}")
    return ExperimentParams(t=tau_check / prior.sigma, omega_inv=prior.mu)


def check_pass_probability(tau_check: float) -> float:
    """Marginal probability of a 0 outcome for a consistency check.

    Averaging the likelihood over the assumed normal posterior gives
    (1 + exp(-tau^2/2))/2.  The complement is the false-negative rate of
    the check: ~19.67% at tau=1, ~0.0025% at tau=0.01.
    """
    if not (math.isfinite(tau_check) and tau_check > 0.0):
        raise ValueError(f"tau_check must be finite and > 0, got {tau_check}")
    return 0.5 * (1.0 + math.exp(-0.5 * tau_check * tau_check))


def bayes_oracle(
    prior: GaussianState,
    d,
    params: ExperimentParams,
    n_nodes: int = 200_000,
    half_width: float = 10.0,
) -> GaussianState:
    """Exact posterior moments by brute-force quadrature.

    Trapezoidal rule on a uniform grid of ``n_nodes`` points spanning
    mu +/- half_width*sigma.  Intended for tests and calibration only; the
    closed forms above must agree with this to ~1e-6 wherever they are used.

    Raises QuadratureFailure when the normalizer falls below the floor of
    1e-30: the observed datum then has essentially zero marginal probability
    under the prior, i.e. the data are inconsistent with it.
    """
    d = _check_datum(d)
    lo = prior.mu - half_width * prior.sigma
    hi = prior.mu + half_width * prior.sigma
    omega = np.linspace(lo, hi, n_nodes)
    z = (omega - prior.mu) / prior.sigma
    integrand = likelihood(d, omega, params) * np.exp(-0.5 * z * z)
    h = (hi - lo) / (n_nodes - 1)
    weights = np.full(n_nodes, h)
    weights[0] = weights[-1] = 0.5 * h
    norm = float(weights @ integrand)
    if not (math.isfinite(norm) and norm > 1e-30):
        raise QuadratureFailure(
            f"posterior normalizer {norm} below floor; datum inconsistent with prior"
        )
    mean = float(weights @ (omega * integrand)) / norm
    second = float(weights @ (omega * omega * integrand)) / norm
    var = second - mean * mean
    if var <= 0.0:
        raise QuadratureFailure(f"quadrature produced non-positive variance {var}")
    return GaussianState(mu=mean, sigma=math.sqrt(var))
