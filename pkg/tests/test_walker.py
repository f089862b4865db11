"""Walker state-machine tests: stepping, unwinding, budgets, determinism."""

import math

import numpy as np
import pytest

from phasewalk import (
    BudgetExhausted,
    SIGMA_CONTRACT,
    STEP_SCALE,
    SimulatedOracle,
    ReplayOracle,
    WalkerConfig,
    WALK_RANGE,
    consistency_check_and_unwind,
    make_stream,
    new_state,
    run,
    step,
)


class ScriptedOracle:
    """Returns a fixed outcome sequence regardless of the experiment."""

    def __init__(self, bits):
        self.bits = list(bits)
        self.pos = 0

    def measure(self, params):
        d = self.bits[self.pos]
        self.pos += 1
        return d


def _fresh(n_exp=100, tau_check=1.0, n_unwind=1, mode="unconstrained",
           max_total=100_000):
    config = WalkerConfig(
        n_exp=n_exp, tau_check=tau_check, n_unwind=n_unwind,
        unwind_mode=mode, max_total_experiments=max_total,
    )
    return new_state(config)


class TestStep:
    def test_single_step_outcome_zero(self):
        state = _fresh()
        step(state, ScriptedOracle([0]))
        # convention: outcome 0 moves the mean down (see gaussian module)
        assert state.gaussian.mu == pytest.approx(-STEP_SCALE, abs=1e-15)
        assert state.gaussian.sigma == pytest.approx(SIGMA_CONTRACT, abs=1e-15)
        assert state.datum_stack == [0]
        assert (state.accepted_count, state.total_count) == (1, 1)

    def test_single_step_outcome_one(self):
        state = _fresh()
        step(state, ScriptedOracle([1]))
        assert state.gaussian.mu == pytest.approx(+STEP_SCALE, abs=1e-15)
        assert state.datum_stack == [1]

    def test_two_steps_compose(self):
        state = _fresh()
        oracle = ScriptedOracle([0, 0])
        step(state, oracle)
        step(state, oracle)
        expected_mu = -STEP_SCALE * (1.0 + SIGMA_CONTRACT)
        assert state.gaussian.mu == pytest.approx(expected_mu, rel=1e-14)
        assert abs(state.gaussian.mu) == pytest.approx(1.088758985233677, rel=1e-12)
        assert state.gaussian.sigma == pytest.approx(
            (math.e - 1.0) / math.e, rel=1e-13
        )
        assert state.datum_stack == [0, 0]

    def test_budget_exhausted_raises(self):
        state = _fresh(n_exp=5, max_total=5)
        oracle = ScriptedOracle([0, 1, 0, 1, 0, 0])
        for _ in range(5):
            step(state, oracle)
        with pytest.raises(BudgetExhausted):
            step(state, oracle)
        # the refused measurement was not logged or stacked
        assert state.total_count == 5
        assert len(state.datum_stack) == 5

    def test_experiments_follow_posterior(self):
        state = _fresh()
        step(state, ScriptedOracle([1]))
        assert state.log_t[0] == 1.0
        assert state.log_omega_inv[0] == -math.pi / 2


class TestUnwinding:
    def test_unwind_inverts_step(self):
        """One failed check with n_unwind=1 must exactly revert one step."""
        for d in (0, 1):
            state = _fresh(n_unwind=1)
            step(state, ScriptedOracle([d]))
            outcome = consistency_check_and_unwind(state, ScriptedOracle([1, 0]))
            assert state.gaussian.mu == pytest.approx(0.0, abs=1e-12)
            assert state.gaussian.sigma == pytest.approx(1.0, rel=1e-12)
            assert state.datum_stack == []
            assert state.accepted_count == 0
            assert outcome.checks_performed == 2
            assert outcome.steps_unwound == 1
            assert not outcome.aborted_on_empty_stack

    def test_deep_unwind_restores_exactly(self):
        state = _fresh(n_unwind=3)
        oracle = ScriptedOracle([0, 1, 1])
        for _ in range(3):
            step(state, oracle)
        consistency_check_and_unwind(state, ScriptedOracle([1, 0]))
        assert state.gaussian.mu == pytest.approx(0.0, abs=1e-12)
        assert state.gaussian.sigma == pytest.approx(1.0, rel=1e-12)

    def test_passing_check_changes_nothing(self):
        state = _fresh(n_unwind=2)
        step(state, ScriptedOracle([1]))
        mu, sigma = state.gaussian.mu, state.gaussian.sigma
        outcome = consistency_check_and_unwind(state, ScriptedOracle([0]))
        assert (state.gaussian.mu, state.gaussian.sigma) == (mu, sigma)
        assert outcome == type(outcome)(1, 0, False)
        assert state.datum_stack == [1]

    def test_unconstrained_empty_stack_grows_sigma(self):
        state = _fresh(n_unwind=1)
        outcome = consistency_check_and_unwind(state, ScriptedOracle([1, 0]))
        assert state.gaussian.sigma > 1.0
        assert state.gaussian.sigma == pytest.approx(
            math.sqrt(math.e / (math.e - 1.0)), rel=1e-14
        )
        assert state.gaussian.mu == 0.0
        assert outcome.steps_unwound == 1
        assert not outcome.aborted_on_empty_stack

    def test_constrained_empty_stack_aborts(self):
        state = _fresh(n_unwind=1, mode="constrained")
        outcome = consistency_check_and_unwind(state, ScriptedOracle([1]))
        assert state.gaussian.sigma == 1.0  # never grows past the prior
        assert state.gaussian.mu == 0.0
        assert outcome.aborted_on_empty_stack
        assert outcome.steps_unwound == 0
        assert outcome.checks_performed == 1

    def test_constrained_partial_unwind_aborts_midway(self):
        state = _fresh(n_unwind=3, mode="constrained")
        step(state, ScriptedOracle([0]))
        outcome = consistency_check_and_unwind(state, ScriptedOracle([1]))
        # one real step undone, then the empty stack ends the pass
        assert outcome.steps_unwound == 1
        assert outcome.aborted_on_empty_stack
        assert state.gaussian.sigma == pytest.approx(1.0, rel=1e-12)
        assert state.accepted_count == 0

    def test_roles_track_unwinding(self):
        state = _fresh(n_unwind=1)
        step(state, ScriptedOracle([0]))
        consistency_check_and_unwind(state, ScriptedOracle([1, 0]))
        assert state.log_role == [2, 1, 1]  # unwound, check, check
        assert state.steps_unwound == 1
        assert state.checks_performed == 2


class TestRun:
    def test_zero_experiments(self):
        config = WalkerConfig(n_exp=0, mu0=0.25)
        est, record = run(config, SimulatedOracle(1.0, seed=0))
        assert est == 0.25
        assert record.total_count == 0
        assert len(record.data_t) == 0
        assert record.quadratic_loss == (0.25 - 1.0) ** 2

    def test_sigma_ladder_without_unwinding(self):
        config = WalkerConfig(n_exp=100, n_unwind=0)
        rng = make_stream(21, 0)
        oracle = SimulatedOracle(float(rng.normal()), rng=rng)
        est, record = run(config, oracle)
        assert record.total_count == 100
        assert record.accepted_count == 100
        assert record.checks_performed == 0
        # sigma contracts by exactly ((e-1)/e)^(1/2) per accepted step
        expected = ((math.e - 1.0) / math.e) ** 50
        sigma_final = 1.0
        for _ in range(100):
            sigma_final *= SIGMA_CONTRACT
        assert sigma_final == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(1.0964675130618926e-10, rel=1e-12)

    def test_walk_range_bound(self):
        """Basic walk can never travel further than the geometric sum."""
        config = WalkerConfig(n_exp=100, n_unwind=0, mu0=0.5, sigma0=2.0)
        for i in range(200):
            rng = make_stream(22, i)
            oracle = SimulatedOracle(float(rng.normal(0.5, 2.0)), rng=rng)
            est, _ = run(config, oracle)
            assert abs(est - 0.5) <= WALK_RANGE * 2.0 + 1e-12

    def test_budget_exhaustion_flagged_not_raised(self):
        config = WalkerConfig(n_exp=100, n_unwind=0, max_total_experiments=100)
        # an eigenphase far outside the range keeps the walk from settling,
        # but with n_unwind=0 exactly n_exp measurements happen anyway
        est, record = run(config, SimulatedOracle(50.0, seed=1))
        assert not record.budget_exhausted
        config = WalkerConfig(
            n_exp=100, n_unwind=2, tau_check=1.0, max_total_experiments=150
        )
        est, record = run(config, SimulatedOracle(50.0, seed=1))
        assert record.budget_exhausted
        assert record.total_count <= 150
        assert math.isfinite(est)

    def test_unconstrained_unwound_steps_multiple_of_n_unwind(self):
        config = WalkerConfig(n_exp=50, n_unwind=3, tau_check=1.0)
        rng = make_stream(23, 4)
        oracle = SimulatedOracle(float(rng.normal()), rng=rng)
        _, record = run(config, oracle)
        assert record.steps_unwound % 3 == 0
        assert record.steps_unwound > 0  # tau=1 fails ~20% of checks

    def test_replay_reproduces_run_bit_for_bit(self):
        config = WalkerConfig(n_exp=80, n_unwind=2, tau_check=1.0)
        rng = make_stream(24, 9)
        oracle = SimulatedOracle(float(rng.normal()), rng=rng)
        est, record = run(config, oracle)
        replay = ReplayOracle(zip(record.data_t, record.data_omega_inv, record.data_d))
        est2, record2 = run(config, replay)
        assert est2 == est
        assert record2.total_count == record.total_count
        assert record2.steps_unwound == record.steps_unwound
        np.testing.assert_array_equal(record2.data_t, record.data_t)
        np.testing.assert_array_equal(record2.data_role, record.data_role)

    def test_same_seed_identical_records(self):
        config = WalkerConfig(n_exp=60, n_unwind=1, tau_check=1.0)
        lines = []
        for _ in range(2):
            rng = make_stream(25, 0)
            oracle = SimulatedOracle(float(rng.normal()), rng=rng)
            _, record = run(config, oracle, seed=0)
            lines.append(record.to_json_line())
        assert lines[0] == lines[1]

    def test_stack_matches_accepted_count(self):
        config = WalkerConfig(n_exp=30, n_unwind=2, tau_check=1.0)
        rng = make_stream(26, 1)
        omega = float(rng.normal())
        est, record = run(config, SimulatedOracle(omega, rng=rng))
        roles = record.data_role
        assert (roles == 0).sum() == record.accepted_count == 30
        assert (roles == 1).sum() == record.checks_performed
        # popped data (role unwound) never exceed unwind iterations, which
        # also count empty-stack sigma growth
        assert (roles == 2).sum() <= record.steps_unwound
        assert len(roles) == record.total_count


class TestConfigValidation:
    def test_rejects_negative_unwind(self):
        with pytest.raises(ValueError, match="n_unwind"):
            WalkerConfig(n_unwind=-1)

    def test_rejects_small_budget(self):
        with pytest.raises(ValueError, match="max_total"):
            WalkerConfig(n_exp=100, max_total_experiments=50)

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError, match="unwind_mode"):
            WalkerConfig(unwind_mode="sideways")

    def test_rejects_bad_sigma0(self):
        with pytest.raises(ValueError, match="sigma0"):
            WalkerConfig(sigma0=0.0)
