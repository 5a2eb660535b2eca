import numpy as np
import pytest

from helpers import (SELECTION_1D_OPTIMUM, abs_oracle, counting,
                     grid_min_selection_composite, zero_oracle)

from fedbilevel.data import make_location_instance
from fedbilevel.federation import CONTIGUOUS, partition_data
from fedbilevel.instances import location_problem, selection_1d_problem
from fedbilevel.oracles import quad_anchor_oracle
from fedbilevel.problem import BoxConstraint, ProblemSpec, StepSchedule, make_schedule
from fedbilevel.solvers import (RoundState, client_local_pass, fism_round, irig_round,
                                reference_solve, run_solver, stopping_criterion,
                                weighted_average)


def _schedule_1d():
    return make_schedule(1, 0.55, 1, 0.4, mu_H=1, m=1)


class TestClientLocalPass:
    def test_single_step_hand_computed(self):
        # P[1 - 0.5*1 - (0.5*1/1)*1] = P[0] = 0 on the box [-1, 1]
        box = BoxConstraint.symmetric(1, 1.0)
        res = client_local_pass(np.array([1.0]), np.array([1.0]), gamma=0.5, lam=1.0,
                                m_total=1, local_fns=[abs_oracle()], box=box)
        assert np.array_equal(res.x_out, [0.0])
        assert res.local_cost_units == 1.0

    def test_zero_stepsize_is_identity(self):
        box = BoxConstraint.symmetric(1, 1.0)
        res = client_local_pass(np.array([1.0]), np.array([1.0]), gamma=0.0, lam=1.0,
                                m_total=1, local_fns=[abs_oracle()], box=box)
        assert np.array_equal(res.x_out, [1.0])

    def test_only_frozen_term_acts(self):
        # two zero inner functions: 1 - 2 * (0.25 * 1 / 2) * 1 = 0.75
        box = BoxConstraint.symmetric(1, 1.0)
        res = client_local_pass(np.array([1.0]), np.array([1.0]), gamma=0.25, lam=1.0,
                                m_total=2, local_fns=[zero_oracle(), zero_oracle()], box=box)
        assert res.x_out == pytest.approx([0.75], abs=1e-15)

    def test_rejects_empty_client(self):
        box = BoxConstraint.symmetric(1, 1.0)
        with pytest.raises(ValueError):
            client_local_pass(np.array([1.0]), np.array([1.0]), gamma=0.1, lam=1.0,
                              m_total=1, local_fns=[], box=box)

    def test_rejects_dimension_mismatch(self):
        box = BoxConstraint.symmetric(1, 1.0)
        with pytest.raises(ValueError):
            client_local_pass(np.array([1.0]), np.array([1.0, 2.0]), gamma=0.1, lam=1.0,
                              m_total=1, local_fns=[abs_oracle()], box=box)

    def test_eval_counts(self):
        box = BoxConstraint.symmetric(1, 1.0)
        fn, calls = counting(abs_oracle())
        client_local_pass(np.array([0.5]), np.array([1.0]), gamma=0.1, lam=1.0,
                          m_total=3, local_fns=[fn, fn, fn], box=box)
        assert calls["n"] == 3

    def test_recorded_path(self):
        box = BoxConstraint.symmetric(1, 1.0)
        res = client_local_pass(np.array([1.0]), np.array([1.0]), gamma=0.25, lam=1.0,
                                m_total=2, local_fns=[zero_oracle(), zero_oracle()],
                                box=box, record_path=True)
        assert len(res.path) == 3
        assert np.array_equal(res.path[0], [1.0])
        assert np.array_equal(res.path[-1], res.x_out)

    def test_custom_costs(self):
        box = BoxConstraint.symmetric(1, 1.0)
        res = client_local_pass(np.array([0.0]), np.array([0.0]), gamma=0.1, lam=1.0,
                                m_total=2, local_fns=[zero_oracle(), zero_oracle()],
                                box=box, costs=[2.0, 3.5])
        assert res.local_cost_units == 5.5


class TestFismRound:
    def test_single_client_matches_local_pass(self):
        prob = selection_1d_problem()
        sched = _schedule_1d()
        x0 = np.array([4.0])
        state = fism_round(RoundState.initial(x0), sched, prob)
        gamma, lam = sched.at(1)
        direct = client_local_pass(x0, prob.outer(x0).subgrad, gamma, lam, 1,
                                   prob.clients[0], prob.constraint)
        assert np.array_equal(state.x, direct.x_out)
        assert state.k == 2
        assert (state.inner_evals, state.outer_evals) == (1, 1)

    def test_identical_clients_average_to_member(self):
        prob = selection_1d_problem(n_clients=2, balls_per_client=1)
        sched = make_schedule(1, 0.55, 1, 0.4, mu_H=1, m=2)
        x0 = np.array([4.0])
        state = fism_round(RoundState.initial(x0), sched, prob)
        gamma, lam = sched.at(1)
        direct = client_local_pass(x0, prob.outer(x0).subgrad, gamma, lam, 2,
                                   prob.clients[0], prob.constraint)
        assert state.x == pytest.approx(direct.x_out, abs=1e-15)

    def test_frozen_outer_subgradient_once_per_round(self):
        base = selection_1d_problem(n_clients=2, balls_per_client=2)
        outer, outer_calls = counting(base.outer)
        wrapped_clients = []
        inner_counters = []
        for group in base.clients:
            wrapped_group = []
            for fn in group:
                wrapped, calls = counting(fn)
                wrapped_group.append(wrapped)
                inner_counters.append(calls)
            wrapped_clients.append(tuple(wrapped_group))
        prob = ProblemSpec(dimension=1, clients=tuple(wrapped_clients), outer=outer,
                           constraint=base.constraint, mu_H=1.0)
        sched = make_schedule(1, 0.55, 1, 0.4, mu_H=1, m=4)
        state = RoundState.initial(np.array([3.0]))
        for _ in range(5):
            state = fism_round(state, sched, prob)
        assert outer_calls["n"] == 5  # exactly one outer evaluation per round
        assert sum(c["n"] for c in inner_counters) == 5 * 4

    def test_interleaving_independence(self):
        from concurrent.futures import ThreadPoolExecutor
        inst = make_location_instance(4, 20, seed=2)
        prob = location_problem(inst, partition_data(20, 5, CONTIGUOUS))
        sched = make_schedule(1, 0.8, 1, 0.1, mu_H=1, m=20)
        x0 = np.array([5.0, -5.0, 2.0, 0.0])
        seq = fism_round(RoundState.initial(x0), sched, prob)
        with ThreadPoolExecutor(max_workers=4) as pool:
            par = fism_round(RoundState.initial(x0), sched, prob, executor=pool)
        assert seq.x.tobytes() == par.x.tobytes()


class TestIrigRound:
    def test_matches_fism_for_single_function(self):
        prob = selection_1d_problem()
        sched = _schedule_1d()
        x0 = np.array([4.0])
        a = fism_round(RoundState.initial(x0), sched, prob)
        b = irig_round(RoundState.initial(x0), sched, prob)
        assert a.x.tobytes() == b.x.tobytes()
        assert (b.inner_evals, b.outer_evals) == (1, 1)

    def test_zero_stepsize_is_identity(self):
        prob = selection_1d_problem(balls_per_client=3)
        sched = StepSchedule(gamma1=0.0, a=0.0, lambda1=1.0, b=0.0)  # degenerate, test-only
        x0 = np.array([4.0])
        state = irig_round(RoundState.initial(x0), sched, prob)
        assert np.array_equal(state.x, x0)

    def test_global_order_and_counts(self):
        prob = selection_1d_problem(n_clients=2, balls_per_client=2)
        sched = make_schedule(1, 0.55, 1, 0.4, mu_H=1, m=4)
        state = irig_round(RoundState.initial(np.array([3.0])), sched, prob)
        assert (state.inner_evals, state.outer_evals) == (4, 4)


class TestWeightedAverage:
    def test_plain_mean_under_constant_weights(self):
        state = RoundState(x=np.array([3.0]), k=3, avg_num=np.array([4.0]),
                           avg_den=2.0, inner_evals=0, outer_evals=0)
        assert np.array_equal(weighted_average(state), [2.0])

    def test_single_round_returns_first_iterate(self):
        prob = selection_1d_problem()
        state = fism_round(RoundState.initial(np.array([4.0])), _schedule_1d(), prob)
        assert np.array_equal(weighted_average(state), [4.0])

    def test_weighted_mean(self):
        # weights (2, 1) on iterates (0, 3): (2*0 + 1*3) / 3 = 1
        state = RoundState(x=np.array([9.0]), k=3, avg_num=np.array([3.0]),
                           avg_den=3.0, inner_evals=0, outer_evals=0)
        assert np.array_equal(weighted_average(state), [1.0])

    def test_undefined_before_first_round(self):
        with pytest.raises(ValueError):
            weighted_average(RoundState.initial(np.array([1.0])))


class TestStoppingCriterion:
    def test_no_change_fires(self):
        x = np.array([1.0, 2.0])
        assert stopping_criterion(x, x, 1.0, 1.0, 2.0, 2.0, tol=1e-5)

    def test_step_ratio_exceeds(self):
        x = np.zeros(1)
        y = np.array([2e-5])  # ||dx|| / (||x|| + 1) = 2e-5 > 1e-5
        assert not stopping_criterion(x, y, 0.0, 0.0, 0.0, 0.0, tol=1e-5)

    def test_all_ratios_small(self):
        x = np.array([1.0])
        y = np.array([1.0 + 2e-6 * 1e-0])
        # crafted so each ratio is ~1e-6
        assert stopping_criterion(x, y, 1.0, 1.0 + 2e-6, 1.0, 1.0 + 2e-6, tol=1e-5)


class TestRunSolver:
    def test_single_round_logged(self):
        prob = selection_1d_problem()
        rec = run_solver(prob, _schedule_1d(), "fism", np.array([4.0]), max_rounds=1)
        assert rec.rounds == 1
        assert rec.rows[0].k == 1
        assert rec.stop_reason == "max_rounds"

    def test_converges_to_selection_optimum(self):
        prob = selection_1d_problem()
        for method in ("fism", "irig"):
            rec = run_solver(prob, _schedule_1d(), method, np.array([-8.0]), 5000)
            assert abs(rec.final_x[0] - SELECTION_1D_OPTIMUM) <= 1e-2

    def test_bit_identical_repeats(self):
        inst = make_location_instance(3, 12, seed=4)
        prob = location_problem(inst, partition_data(12, 3, CONTIGUOUS, seed=4))
        sched = make_schedule(1, 0.8, 1, 0.1, mu_H=1, m=12)
        x0 = np.array([1.0, -2.0, 3.0])
        a = run_solver(prob, sched, "fism", x0, 50, seed=1, keep_iterates=True)
        b = run_solver(prob, sched, "fism", x0, 50, seed=1, keep_iterates=True)
        assert a.final_x.tobytes() == b.final_x.tobytes()
        assert all(x.tobytes() == y.tobytes() for x, y in zip(a.iterates, b.iterates))
        assert [r.inner_value for r in a.rows] == [r.inner_value for r in b.rows]

    def test_iterates_feasible_from_round_two(self):
        inst = make_location_instance(3, 9, seed=6)
        prob = location_problem(inst, partition_data(9, 3, CONTIGUOUS))
        sched = make_schedule(5, 0.6, 1, 0.2, mu_H=1, m=9)
        rec = run_solver(prob, sched, "fism", np.array([40.0, -40.0, 0.0]), 30,
                         keep_iterates=True)
        for x in rec.iterates:  # includes the projected initial point
            assert prob.constraint.contains(x)

    def test_average_recurrence(self):
        prob = selection_1d_problem()
        sched = _schedule_1d()
        rec = run_solver(prob, sched, "fism", np.array([4.0]), 200, keep_iterates=True)
        gammas = np.array([sched.at(k)[0] for k in range(1, rec.rounds + 1)])
        xs = np.array([x[0] for x in rec.iterates[:-1]])  # starting iterates x_1..x_K
        direct = float(np.sum(gammas * xs) / np.sum(gammas))
        assert rec.final_avg_x[0] == pytest.approx(direct, rel=1e-12)

    def test_tolerance_stop_records_reason(self):
        prob = selection_1d_problem()
        sched = make_schedule(1, 0.8, 1, 0.1, mu_H=1, m=1)
        rec = run_solver(prob, sched, "fism", np.array([0.9]), 100_000, tol=1e-3)
        assert rec.stop_reason == "tolerance"
        assert rec.rounds < 100_000

    def test_counter_accounting(self):
        prob = selection_1d_problem(n_clients=2, balls_per_client=3)  # m = 6
        sched = make_schedule(1, 0.55, 1, 0.4, mu_H=1, m=6)
        fism = run_solver(prob, sched, "fism", np.array([2.0]), 40)
        irig = run_solver(prob, sched, "irig", np.array([2.0]), 40)
        assert fism.rows[-1].inner_subgrad_evals == 40 * 6
        assert fism.rows[-1].outer_subgrad_evals == 40
        assert irig.rows[-1].inner_subgrad_evals == 40 * 6
        assert irig.rows[-1].outer_subgrad_evals == 40 * 6

    def test_rejects_bad_arguments(self):
        prob = selection_1d_problem()
        with pytest.raises(ValueError):
            run_solver(prob, _schedule_1d(), "fism", np.array([0.0]), 0)
        with pytest.raises(ValueError):
            run_solver(prob, _schedule_1d(), "sgd", np.array([0.0]), 1)


class TestReferenceSolve:
    def test_zero_inner_returns_anchor(self):
        anchor = np.array([1.5, -2.5])
        prob = ProblemSpec(dimension=2, clients=((zero_oracle(),),),
                           outer=quad_anchor_oracle(anchor),
                           constraint=BoxConstraint.symmetric(2, 10.0), mu_H=1.0)
        out = reference_solve(prob, lam=0.3, iters=2000, seed=0)
        assert out == pytest.approx(anchor, abs=1e-4)

    def test_matches_1d_grid_oracle(self):
        prob = selection_1d_problem()
        grid = grid_min_selection_composite(0.01)
        out = reference_solve(prob, lam=0.01, iters=50_000, seed=7)
        assert abs(out[0] - grid) <= 5e-2
        assert 0.9 <= out[0] <= 1.0 + 1e-9

    def test_regularization_path_approaches_optimum(self):
        prob = selection_1d_problem()
        errs = []
        for lam, iters in [(0.1, 500), (0.01, 10_000), (0.001, 300_000)]:
            out = reference_solve(prob, lam, iters, seed=7)
            grid = grid_min_selection_composite(lam)
            assert abs(out[0] - grid) <= 5e-2
            errs.append(abs(out[0] - SELECTION_1D_OPTIMUM))
        assert errs[0] > errs[1] > errs[2]

    def test_rejects_bad_arguments(self):
        prob = selection_1d_problem()
        with pytest.raises(ValueError):
            reference_solve(prob, lam=0.0, iters=10)
        with pytest.raises(ValueError):
            reference_solve(prob, lam=0.1, iters=0)
