"""Measurement outcome sources.

``SimulatedOracle`` samples bits from the exact likelihood at a hidden true
eigenphase; ``ReplayOracle`` feeds back a recorded data stream.  Anything
with a ``measure(params) -> int`` method can drive the walker, so hardware
backends can slot in behind the same interface.

Reproducibility: all randomness comes from numpy's Philox counter-based
generator (Philox 4x64 with 10 rounds).  A stream is keyed by the pair
(master_seed, stream_index), so per-trial streams are independent and
identical runs are bit-for-bit reproducible across platforms.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

from .gaussian import ExperimentParams, GaussianState

__all__ = [
    "RNG_ALGORITHM",
    "PF_STREAM_DOMAIN",
    "make_stream",
    "SimulatedOracle",
    "ReplayOracle",
    "ReplayMismatch",
    "ReplayExhausted",
    "sample_true_omega",
]

RNG_ALGORITHM = "numpy.random.Philox (Philox 4x64-10), key = (master_seed, stream_index)"

_MASK64 = (1 << 64) - 1

# Stream-index offset reserved for particle-filter replays so they never
# collide with walker trial streams.
PF_STREAM_DOMAIN = 1 << 48

# Relative tolerance when matching replayed experiment parameters.
REPLAY_RTOL = 1e-9


def make_stream(master_seed: int, stream_index: int = 0) -> np.random.Generator:
    """Independent Generator for (master_seed, stream_index)."""
    key = np.array([master_seed & _MASK64, stream_index & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


class ReplayMismatch(ValueError):
    """A replayed query's parameters differ from the recorded ones."""


class ReplayExhausted(ValueError):
    """The recorded data stream has been fully consumed."""


class SimulatedOracle:
    """Samples measurement outcomes at a hidden true eigenphase.

    Each ``measure`` call consumes exactly one uniform variate from the
    oracle's stream, so the outcome sequence is a pure function of
    (true_omega, seed) and the query sequence.
    """

    def __init__(self, true_omega: float, seed: int | None = None,
                 stream_index: int = 0, rng: np.random.Generator | None = None):
        if rng is None:
            rng = make_stream(0 if seed is None else seed, stream_index)
        self.true_omega = float(true_omega)
        self.rng = rng
        self.draw_count = 0

    def measure(self, params: ExperimentParams) -> int:
        p0 = math.cos(0.5 * params.t * (self.true_omega - params.omega_inv)) ** 2
        u = self.rng.random()
        self.draw_count += 1
        return 0 if u < p0 else 1


class ReplayOracle:
    """Feeds back a recorded (t, omega_inv, d) stream, verifying queries.

    Rows are consumed strictly in order.  A query whose parameters deviate
    from the recorded ones by more than REPLAY_RTOL (relative) raises
    ReplayMismatch; querying past the end raises ReplayExhausted.
    """

    def __init__(self, rows: Iterable[Sequence]):
        self._rows = [(float(t), float(w), int(d)) for t, w, d, *_ in rows]
        self._pos = 0

    def __len__(self) -> int:
        return len(self._rows)

    @property
    def remaining(self) -> int:
        return len(self._rows) - self._pos

    def measure(self, params: ExperimentParams) -> int:
        if self._pos >= len(self._rows):
            raise ReplayExhausted(f"record of {len(self._rows)} data consumed")
        t, omega_inv, d = self._rows[self._pos]
        if not _close(params.t, t) or not _close(params.omega_inv, omega_inv):
            raise ReplayMismatch(
                f"query ({params.t}, {params.omega_inv}) != recorded "
                f"({t}, {omega_inv}) at position {self._pos}"
            )
        self._pos += 1
        return d


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= REPLAY_RTOL * max(abs(a), abs(b))


def sample_true_omega(prior: GaussianState, rng: np.random.Generator, size=None):
    """Draw true eigenphase(s) from the prior, Normal(mu0, sigma0^2).

    The linear (non-circular) distribution is intentional; wrap-around bias
    is accepted and negligible for the priors used here.
    """
    return rng.normal(prior.mu, prior.sigma, size=size)
