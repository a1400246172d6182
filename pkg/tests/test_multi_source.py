import math

import numpy as np
import pytest

from timely_persuasion.errors import InfeasibleResidual, NonPositiveTheta, TooLarge
from timely_persuasion.model import (
    BestResponse,
    ProblemInstance,
    SourceParams,
    c_min,
    sender_utility_partials,
)
from timely_persuasion.multi_source import (
    WaterFillConstants,
    bisect_theta,
    enumerate_candidates,
    select_best,
    solve_active_set,
    solve_multi,
    water_fill_s,
)
from timely_persuasion.single_source import solve_single

from .conftest import five_source_instance, random_instance

K = WaterFillConstants(4.0, 6.0, 1.0)


def bits(*one_based):
    return sum(1 << (i - 1) for i in one_based)


class TestConstants:
    def test_for_source(self, src12):
        k = WaterFillConstants.for_source(src12, 0.5)
        assert (k.A, k.B, k.C) == pytest.approx((4.0, 6.0, 1.0), abs=1e-15)
        assert k.threshold == pytest.approx(2 / 3)


class TestWaterFill:
    def test_examples(self):
        assert water_fill_s([K], 2 / 27) == pytest.approx([2.0], abs=1e-12)
        assert water_fill_s([K], 2 / 3) == [0.0]
        assert water_fill_s([K], 1 / 6) == pytest.approx([1.0], abs=1e-12)

    def test_rejects_nonpositive_theta(self):
        with pytest.raises(NonPositiveTheta):
            water_fill_s([K], 0.0)
        with pytest.raises(NonPositiveTheta):
            water_fill_s([K], -1.0)

    def test_stationarity_at_positive_rates(self, rng):
        # marginal utility of s_i at the water-filled point equals theta
        inst = five_source_instance(30.0)
        consts = [WaterFillConstants.for_source(src, 0.5) for src in inst.sources]
        cms = inst.c_mins()
        for theta in rng.uniform(1e-3, 0.1, size=20):
            for src, cm, si in zip(inst.sources, cms, water_fill_s(consts, theta)):
                if si > 0:
                    d_ds, _ = sender_utility_partials(src, si, cm)
                    assert d_ds == pytest.approx(theta, rel=1e-10)

    def test_total_monotone_in_theta(self):
        inst = five_source_instance(30.0)
        consts = [WaterFillConstants.for_source(src, 0.5) for src in inst.sources]
        thetas = np.geomspace(1e-4, max(k.threshold for k in consts) * 1.5, 500)
        totals = np.array([sum(water_fill_s(consts, t)) for t in thetas])
        assert np.all(np.diff(totals) <= 0)
        positive = totals[:-1] > 0
        assert np.all(np.diff(totals)[positive] < 0)


class TestBisect:
    def test_single(self):
        assert bisect_theta([K], 2.0) == pytest.approx(2 / 27, rel=1e-9)

    def test_pair(self):
        theta = bisect_theta([K, K], 4.0)
        assert theta == pytest.approx(2 / 27, rel=1e-9)
        assert water_fill_s([K, K], theta) == pytest.approx([2.0, 2.0], abs=1e-9)

    def test_infeasible(self):
        with pytest.raises(InfeasibleResidual):
            bisect_theta([K], 0.0)
        with pytest.raises(InfeasibleResidual):
            bisect_theta([K], -1.0)

    def test_residual_met(self, rng):
        for _ in range(100):
            inst = random_instance(rng, int(rng.integers(1, 6)))
            consts = [WaterFillConstants.for_source(s, inst.q) for s in inst.sources]
            residual = float(rng.uniform(1e-3, 1e3))
            theta = bisect_theta(consts, residual)
            assert 0 < theta <= max(k.threshold for k in consts)
            assert abs(math.fsum(water_fill_s(consts, theta)) - residual) <= 1e-9


class TestActiveSet:
    def test_best_set_at_budget_10(self):
        inst = five_source_instance(10.0)
        cand = solve_active_set(inst, bits(1, 2, 5))
        assert cand.feasible and not cand.pruned
        assert [cand.c[i] for i in (0, 1, 4)] == pytest.approx([1.0, 2.0, 0.5], abs=1e-12)
        assert all(cand.s[i] > 0 for i in (0, 1, 4))
        assert math.fsum(cand.s) + math.fsum(cand.c) == pytest.approx(10.0, abs=1e-7)
        assert cand.c[2] == cand.c[3] == cand.s[2] == cand.s[3] == 0.0

    def test_full_set_worse_at_budget_10(self):
        inst = five_source_instance(10.0)
        full = solve_active_set(inst, bits(1, 2, 3, 4, 5))
        best = solve_active_set(inst, bits(1, 2, 5))
        assert full.feasible
        assert sum(inst.c_mins()) == pytest.approx(9.0)
        assert full.utility < best.utility

    def test_budget_exhausted(self):
        inst = five_source_instance(3.0)
        cand = solve_active_set(inst, bits(3, 4))  # c_min sum = 5.5
        assert not cand.feasible
        assert solve_active_set(five_source_instance(5.5), bits(3, 4)).feasible is False

    def test_pruned_flag(self):
        # source 2's water level (A/B = 1/199.5) sits far below the dual
        # level source 1 needs for a residual of 0.5, so s_2 = 0
        inst = ProblemInstance.from_rates([1.0, 1.0], [2.0, 20.0], 0.5, 20.5)
        cand = solve_active_set(inst, 0b11)
        assert cand.feasible
        assert cand.pruned


class TestSolveMulti:
    def test_five_source_active_sets(self):
        assert solve_multi(five_source_instance(10.0)).active_set == (0, 1, 4)
        assert solve_multi(five_source_instance(20.0)).active_set == (0, 1, 3, 4)

    def test_below_min_cmin(self):
        inst = five_source_instance(0.4)
        out = solve_multi(inst)
        assert out.sender_utility == 0.0
        assert out.policy.budget_usage == 0.0
        assert all(r is BestResponse.DEFAULT for r in out.responses)
        assert out.receiver_utility == pytest.approx(inst.default_receiver_utility(), abs=1e-15)

    def test_equal_to_min_cmin(self):
        assert solve_multi(five_source_instance(0.5)).sender_utility == 0.0

    def test_tie_break_prefers_fewer_then_smaller_mask(self):
        # identical sources: every pair ties, so the lowest-mask pair wins
        inst = ProblemInstance.from_rates([1.0] * 5, [4.0] * 5, 0.5, 15.0)
        out = solve_multi(inst)
        assert out.active_set == (0, 1)
        cands = list(enumerate_candidates(inst))
        assert select_best(reversed(cands)).active_set == select_best(cands).active_set

    def test_cap(self):
        inst = ProblemInstance.from_rates([1.0] * 3, [4.0] * 3, 0.5, 15.0)
        with pytest.raises(TooLarge):
            solve_multi(inst, max_sources=2)

    def test_structure_budget_receiver(self, rng):
        for _ in range(40):
            inst = random_instance(rng, int(rng.integers(1, 7)))
            out = solve_multi(inst)
            cms = inst.c_mins()
            for (s, c), cm in zip(out.policy.rates, cms):
                assert (s > 0) == (c == cm)
                assert (s == 0) == (c == 0)
            if out.sender_utility > 0:
                assert out.policy.budget_usage == pytest.approx(inst.budget, abs=1e-7)
            assert abs(out.receiver_utility - inst.default_receiver_utility()) <= 1e-12

    def test_single_source_consistency(self, rng):
        for _ in range(100):
            inst = random_instance(rng, 1)
            src = inst.sources[0]
            multi = solve_multi(inst)
            single = solve_single(src, inst.q, inst.budget)
            assert multi.sender_utility == pytest.approx(single.sender_utility, abs=1e-9)
            if inst.budget > c_min(src, inst.q):
                assert multi.policy.rates[0] == pytest.approx(single.policy.rates[0], abs=1e-9)
                assert multi.responses == single.responses

    def test_monotone_value(self):
        values = [solve_multi(five_source_instance(R)).sender_utility for R in np.linspace(0, 30, 121)]
        assert np.all(np.diff(values) >= -1e-12)
