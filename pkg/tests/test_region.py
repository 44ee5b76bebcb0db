import json
import math

import numpy as np
import pytest

from gwrdp.prob import JointPmf, Kernel, Pmf, mutual_information
from gwrdp.region import (
    AuxChannel,
    Budgets,
    RegionProblem,
    compute_frontier,
    pareto_filter,
    rate_triple_for_aux,
    scalarized_search,
)
from gwrdp.solver import (
    DistortionMatrix,
    PerceptionMeasure,
    RdpQuery,
    brute_force_rdp,
    hamming,
    rdp_point_to_point,
)

from oracles import conditional_rd_function, h2


def dsbs(a):
    return JointPmf([[0.5 * (1 - a), 0.5 * a], [0.5 * a, 0.5 * (1 - a)]], ("X", "Y"))


PROBLEM = RegionProblem.with_hamming_tv(dsbs(0.1))
BUDGETS = Budgets(d1=0.1, d2=0.1, p1=0.6, p2=0.6)


def recompute_triple(problem, point):
    """Re-derive (r0, r1, r2) from the stored auxiliary witness."""
    fresh = rate_triple_for_aux(problem, point.witness, point.budgets)
    return fresh.triple


class TestRateTriple:
    def test_independent_w_corner(self):
        pt = rate_triple_for_aux(PROBLEM, AuxChannel.independent(2, 2), BUDGETS)
        assert pt.r0 == pytest.approx(0.0, abs=1e-12)
        ref = rdp_point_to_point(Pmf([0.5, 0.5]), PROBLEM.delta_x,
                                 PROBLEM.perception_x, 0.1, 0.6)
        assert pt.r1 == pytest.approx(ref.rate, abs=1e-6)
        assert pt.r2 == pytest.approx(ref.rate, abs=1e-6)

    def test_copy_channel_corner(self):
        budgets = Budgets(d1=0.0, d2=0.0, p1=0.0, p2=0.0)
        pt = rate_triple_for_aux(PROBLEM, AuxChannel.copy_pair(2, 2), budgets)
        h_xy = -(np.asarray(PROBLEM.p_xy.probs).reshape(-1)
                 * np.log2(np.asarray(PROBLEM.p_xy.probs).reshape(-1))).sum()
        assert pt.r0 == pytest.approx(h_xy, abs=1e-9)
        assert pt.r1 == pytest.approx(0.0, abs=1e-9)
        assert pt.r2 == pytest.approx(0.0, abs=1e-9)

    def test_symmetric_aux_matches_independent_recomputation(self):
        aux = AuxChannel(Kernel(np.array([
            [[0.9, 0.1], [0.5, 0.5]],
            [[0.5, 0.5], [0.1, 0.9]],
        ])))
        budgets = Budgets(d1=0.05, d2=0.05, p1=math.inf, p2=math.inf)
        pt = rate_triple_for_aux(PROBLEM, aux, budgets)
        q_xyw = PROBLEM.p_xy.extend(aux.kernel, "W")
        pair_w = JointPmf(q_xyw.probs.reshape(4, 2), ("XY", "W"))
        assert pt.r0 == pytest.approx(mutual_information(pair_w), abs=1e-12)
        for branch, got in (("X", pt.r1), ("Y", pt.r2)):
            q_sw = q_xyw.marginal(branch, "W")
            want = conditional_rd_function(np.asarray(q_sw.probs),
                                           PROBLEM.delta_x.values, 0.05)
            assert got == pytest.approx(want, abs=1e-3)
            # the exhaustive search can only sit above, within its own slack
            query = RdpQuery(q_sw, PROBLEM.delta_x, PROBLEM.perception_x, 0.05, math.inf)
            grid = brute_force_rdp(query, 41)
            assert got <= grid.rate + 5e-3


class TestFrontier:
    def test_witness_recomputation(self):
        fr = compute_frontier(PROBLEM, BUDGETS, samples=6, seed=3)
        assert len(fr.points) >= 1
        for pt in fr.points:
            again = recompute_triple(PROBLEM, pt)
            for a, b in zip(pt.triple, again):
                assert a == pytest.approx(b, abs=1e-6)

    def test_cut_set_dominance(self):
        fr = compute_frontier(PROBLEM, BUDGETS, samples=6, seed=3)
        rdp_x = rdp_point_to_point(Pmf([0.5, 0.5]), PROBLEM.delta_x,
                                   PROBLEM.perception_x, BUDGETS.d1, BUDGETS.p1).rate
        rdp_y = rdp_point_to_point(Pmf([0.5, 0.5]), PROBLEM.delta_y,
                                   PROBLEM.perception_y, BUDGETS.d2, BUDGETS.p2).rate
        for pt in fr.points:
            assert pt.r0 + pt.r1 >= rdp_x - 1e-3
            assert pt.r0 + pt.r2 >= rdp_y - 1e-3

    def test_perception_relaxed_matches_rd_only_solver(self):
        budgets = Budgets(d1=0.1, d2=0.1, p1=math.inf, p2=math.inf)
        fr = compute_frontier(PROBLEM, budgets, samples=4, seed=5)
        for pt in fr.points:
            q_xyw = PROBLEM.p_xy.extend(pt.witness.kernel, "W")
            for branch, got in (("X", pt.r1), ("Y", pt.r2)):
                q_sw = np.asarray(q_xyw.marginal(branch, "W").probs)
                want = conditional_rd_function(q_sw, PROBLEM.delta_x.values, 0.1)
                assert got == pytest.approx(want, abs=1e-3)

    def test_deterministic_for_fixed_seed(self):
        a = compute_frontier(PROBLEM, BUDGETS, samples=5, seed=11)
        b = compute_frontier(PROBLEM, BUDGETS, samples=5, seed=11)
        assert a.to_csv() == b.to_csv()
        assert a.to_json() == b.to_json()

    def test_parallel_matches_serial(self):
        a = compute_frontier(PROBLEM, BUDGETS, samples=5, seed=11)
        c = compute_frontier(PROBLEM, BUDGETS, samples=5, seed=11, parallel=2)
        assert a.to_csv() == c.to_csv()

    def test_larger_budget_dominates(self):
        small = compute_frontier(PROBLEM, BUDGETS, samples=3, seed=7)
        large = compute_frontier(PROBLEM, BUDGETS, samples=9, seed=7)
        # same seed: the first 3 samples coincide, so every small-run point
        # is dominated by (or equal to) some large-run point
        for pt in small.points:
            assert any(all(lv <= pv + 1e-9 for lv, pv in zip(lp.triple, pt.triple))
                       for lp in large.points)

    def test_w_size_cap(self):
        with pytest.raises(ValueError):
            compute_frontier(PROBLEM, BUDGETS, w_size=7, samples=1, seed=0)

    def test_exports(self):
        fr = compute_frontier(PROBLEM, BUDGETS, samples=3, seed=2)
        csv_text = fr.to_csv()
        header = csv_text.splitlines()[0].split(",")
        assert header == ["R0", "R1", "R2", "D1", "D2", "P1", "P2", "seed"]
        payload = json.loads(fr.to_json())
        assert payload["seed"] == 2
        assert len(payload["points"]) == len(fr.points)
        for entry in payload["points"]:
            assert "aux_channel" in entry and "test_channel_x" in entry


class TestParetoFilter:
    def test_dominated_point_removed(self):
        fr = compute_frontier(PROBLEM, BUDGETS, samples=8, seed=1)
        triples = [p.triple for p in fr.points]
        for i, a in enumerate(triples):
            for j, b in enumerate(triples):
                if i == j:
                    continue
                dominates = (all(bv <= av + 1e-9 for bv, av in zip(b, a))
                             and any(bv < av - 1e-9 for bv, av in zip(b, a)))
                assert not dominates


class TestScalarizedSearch:
    def test_common_rate_weight_drives_to_zero(self):
        pt = scalarized_search(PROBLEM, BUDGETS, (1.0, 0.0, 0.0), restarts=2, seed=0)
        assert pt.r0 == pytest.approx(0.0, abs=1e-9)

    def test_private_weights_no_worse_than_independent(self):
        budgets = Budgets(d1=0.05, d2=0.05, p1=math.inf, p2=math.inf)
        pt = scalarized_search(PROBLEM, budgets, (0.0, 1.0, 1.0), restarts=2, seed=0)
        indep = rate_triple_for_aux(PROBLEM, AuxChannel.independent(2, 2), budgets)
        assert pt.r1 + pt.r2 <= indep.r1 + indep.r2 + 1e-9

    def test_deterministic(self):
        a = scalarized_search(PROBLEM, BUDGETS, (1.0, 1.0, 1.0), restarts=2, seed=9)
        b = scalarized_search(PROBLEM, BUDGETS, (1.0, 1.0, 1.0), restarts=2, seed=9)
        assert a.triple == b.triple
        assert np.array_equal(a.witness.kernel.probs, b.witness.kernel.probs)

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            scalarized_search(PROBLEM, BUDGETS, (0.0, 0.0, 0.0), seed=0)
