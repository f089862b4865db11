"""Per-trial records and their newline-delimited JSON wire format.

One trial per line; every line carries a ``schema`` field.  Floats are
serialized with Python's shortest round-trip representation, so re-reading
a file reproduces the in-memory values exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

TRIAL_SCHEMA = "phasewalk.trial.v1"

ROLE_NAMES = ("accepted", "check", "unwound")
_ROLE_CODE = {name: code for code, name in enumerate(ROLE_NAMES)}


@dataclass
class TrialRecord:
    """Everything observed in one estimation trial.

    ``data_*`` arrays hold every measurement in order: evolution time,
    inversion phase, outcome bit, and role code (0 accepted, 1 check,
    2 unwound).  ``quadratic_loss`` is (estimate - true_omega)^2 exactly;
    both losses are NaN when the true eigenphase is unknown (replay runs).
    """

    true_omega: float
    estimate: float
    quadratic_loss: float
    log10_loss: float
    accepted_count: int
    total_count: int
    checks_performed: int
    steps_unwound: int
    budget_exhausted: bool
    seed: int
    data_t: np.ndarray = field(repr=False)
    data_omega_inv: np.ndarray = field(repr=False)
    data_d: np.ndarray = field(repr=False)
    data_role: np.ndarray = field(repr=False)

    def data_rows(self):
        """Iterate (t, omega_inv, d, role_name) over all measurements."""
        for t, w, d, r in zip(
            self.data_t, self.data_omega_inv, self.data_d, self.data_role
        ):
            yield float(t), float(w), int(d), ROLE_NAMES[r]

    def to_json_line(self) -> str:
        obj = {
            "schema": TRIAL_SCHEMA,
            "true_omega": _jsonable(self.true_omega),
            "estimate": _jsonable(self.estimate),
            "quadratic_loss": _jsonable(self.quadratic_loss),
            "log10_loss": _jsonable(self.log10_loss),
            "accepted_count": self.accepted_count,
            "total_count": self.total_count,
            "checks_performed": self.checks_performed,
            "steps_unwound": self.steps_unwound,
            "budget_exhausted": self.budget_exhausted,
            "seed": self.seed,
            "data": [list(row) for row in self.data_rows()],
        }
        return json.dumps(obj, allow_nan=False, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str) -> "TrialRecord":
        obj = json.loads(line)
        if obj.get("schema") != TRIAL_SCHEMA:
            raise ValueError(f"unexpected record schema {obj.get('schema')!r}")
        data = obj["data"]
        return cls(
            true_omega=_unjsonable(obj["true_omega"]),
            estimate=_unjsonable(obj["estimate"]),
            quadratic_loss=_unjsonable(obj["quadratic_loss"]),
            log10_loss=_unjsonable(obj["log10_loss"]),
            accepted_count=obj["accepted_count"],
            total_count=obj["total_count"],
            checks_performed=obj["checks_performed"],
            steps_unwound=obj["steps_unwound"],
            budget_exhausted=obj["budget_exhausted"],
            seed=obj["seed"],
            data_t=np.array([row[0] for row in data], dtype=np.float64),
            data_omega_inv=np.array([row[1] for row in data], dtype=np.float64),
            data_d=np.array([row[2] for row in data], dtype=np.int8),
            data_role=np.array(
                [_ROLE_CODE[row[3]] for row in data], dtype=np.int8
            ),
        )


def quadratic_and_log10_loss(estimate: float, true_omega: float):
    """Loss pair for one trial; (NaN, NaN) when true_omega is unknown."""
    if math.isnan(true_omega):
        return math.nan, math.nan
    loss = (estimate - true_omega) ** 2
    return loss, math.log10(loss) if loss > 0.0 else -math.inf


def _jsonable(x: float):
    if isinstance(x, float) and not math.isfinite(x):
        # JSON has no NaN/inf; sign distinguishes -inf (exact-zero loss)
        if math.isnan(x):
            return None
        return {"inf": 1 if x > 0 else -1}
    return x


def _unjsonable(x):
    if x is None:
        return math.nan
    if isinstance(x, dict):
        return math.inf * x["inf"]
    return float(x)


def write_records(path, records) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json_line())
            fh.write("\n")


def read_records(path) -> list:
    with open(path) as fh:
        return [TrialRecord.from_json_line(line) for line in fh if line.strip()]
