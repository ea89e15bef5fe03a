"""Frozen-field scalar solves: continuation ladder, monotone sweeps,
comparison checks.

Oracle problem for the magnetic equation: freezing the potential at a large
constant C makes a'' = j a/sqrt(|C(2+C) + ...|) essentially linear, so the
solution is a_L sinh(sqrt(kappa) x)/sinh(sqrt(kappa)) with
kappa = j/sqrt(C(2+C)) up to a perturbation of relative size a^2/(C(2+C)).
At C = 200 that perturbation sits near 4e-6 of kappa, far below the solver
tolerance, and the measured gap to the closed form is about 1e-10.
"""

import math

import numpy as np
import pytest

from magdiode import DiodeParams, FieldProfile, make_mesh
from magdiode.barriers import Affine, BarrierBox, Const, build_box, make_lower_a, make_lower_phi, make_upper_a, make_upper_phi
from magdiode.errors import InvalidParameter, MonotonicityViolation, NoSolution
from magdiode.scalar_solver import (
    ScalarProblem,
    comparison_check,
    evaluation_noise_floor,
    monotone_iterate,
    residual_norm,
    solve_scalar_fd,
)


def params(j_x=0.2, phi_L=1.0, a_L=0.0, **kw):
    return DiodeParams(j_x=j_x, phi_L=phi_L, a_L=a_L, **kw)


def sinh_profile(mesh, a_L, j_x, C):
    kappa = j_x / math.sqrt(C * (2.0 + C))
    rk = math.sqrt(kappa)
    return a_L * np.sinh(rk * mesh.nodes) / math.sinh(rk)


class TestProblemSetup:
    def test_unknown_case_rejected(self):
        with pytest.raises(InvalidParameter):
            ScalarProblem(case="A9", params=params())

    def test_frozen_field_required_off_a1(self):
        with pytest.raises(InvalidParameter):
            ScalarProblem(case="A4", params=params())

    def test_field_and_target(self):
        p = params(phi_L=1.3, a_L=0.2)
        assert ScalarProblem(case="A1", params=p).target == 1.3
        prob = ScalarProblem(case="A4", params=p, frozen=Const(2.0))
        assert prob.field_name == "a"
        assert prob.target == 0.2

    def test_small_mesh_rejected(self):
        with pytest.raises(InvalidParameter):
            solve_scalar_fd(ScalarProblem(case="A1", params=params()),
                            make_mesh(33, "uniform"))


class TestExactCases:
    def test_zero_current_is_exactly_linear(self):
        # the seed target*x has zero residual; nothing moves
        mesh = make_mesh(65, "uniform")
        prob = ScalarProblem(case="A1", params=params(j_x=0.0))
        prof = solve_scalar_fd(prob, mesh)
        assert np.array_equal(prof.values, 1.0 * mesh.nodes)
        assert prof.residual == 0.0

    def test_zero_anode_field_is_exactly_zero(self):
        mesh = make_mesh(129, "graded")
        prob = ScalarProblem(case="A4", params=params(a_L=0.0), frozen=Const(1.0))
        prof = solve_scalar_fd(prob, mesh)
        assert np.all(prof.values == 0.0)


class TestSinhOracle:
    C = 200.0

    def test_matches_closed_form(self):
        mesh = make_mesh(257, "uniform")
        p = params(j_x=1.0, a_L=0.4)
        prob = ScalarProblem(case="A4", params=p, frozen=Const(self.C))
        prof = solve_scalar_fd(prob, mesh)
        exact = sinh_profile(mesh, 0.4, 1.0, self.C)
        assert np.max(np.abs(prof.values - exact)) < 1e-8

    def test_residual_below_tolerance_and_stored(self):
        mesh = make_mesh(257, "uniform")
        p = params(j_x=1.0, a_L=0.4)
        prob = ScalarProblem(case="A4", params=p, frozen=Const(self.C))
        prof = solve_scalar_fd(prob, mesh)
        assert prof.residual == residual_norm(prob, prof)
        assert prof.residual < 1e-9


class TestContinuationLadder:
    def setup_method(self):
        self.prob = ScalarProblem(case="A1", params=params(j_x=0.2, j_x_max=0.3))
        self.prof = solve_scalar_fd(self.prob, make_mesh(257, "graded"))

    def test_every_level_converged(self):
        # level_change is only recorded when the level met its tolerance
        ladder = self.prof.info["ladder"]
        assert len(ladder) >= 10
        assert all("level_change" in s for s in ladder)

    def test_level_changes_shrink_like_sqrt_eps(self):
        for s in self.prof.info["ladder"]:
            if s["eps"] > 0.0:
                assert s["level_change"] <= math.sqrt(s["eps"])

    def test_final_levels_agree(self):
        # the eps=0 polish moves the iterate by far less than 10x tolerance
        last = self.prof.info["ladder"][-1]
        assert last["eps"] == 0.0
        assert last["level_change"] < 10.0 * self.prob.params.tol_residual

    def test_small_current_stays_near_the_chord(self):
        mesh = make_mesh(257, "graded")
        prob = ScalarProblem(case="A1", params=params(j_x=1e-6))
        prof = solve_scalar_fd(prob, mesh)
        # curvature scales with j; measured deviation is 0.18 j
        assert np.max(np.abs(prof.values - mesh.nodes)) < 1e-6

    def test_warm_start_skips_nothing_it_needs(self):
        mesh = make_mesh(257, "graded")
        warm = solve_scalar_fd(self.prob, mesh, start=self.prof)
        cold = solve_scalar_fd(self.prob, mesh)
        assert warm.sup_diff(cold) < 10.0 * self.prob.params.tol_iter


class TestNoiseFloor:
    def test_floor_is_positive_and_scales(self):
        sub = np.array([1e6, 1e6])
        diag = np.array([-2e6, -2e6])
        sup = np.array([1e6, 1e6])
        full = np.array([0.5, 1.0, 1.5, 2.0])
        rhs = np.array([3.0, 3.0])
        floor = evaluation_noise_floor(sub, diag, sup, full, rhs)
        assert floor.shape == (2,)
        assert np.all(floor > 0.0)
        # quadrupling the data quadruples the bound
        assert np.allclose(evaluation_noise_floor(sub, diag, sup, 4 * full, 4 * rhs),
                           4.0 * floor, rtol=1e-12)


class TestBoxedSolves:
    def test_infeasible_box_fails_honestly(self):
        # upper barrier tops out at 0.1 while the anode value is 1
        up = make_upper_phi(0.05, 0.05)
        box = BarrierBox(phi_lower=make_lower_phi(0.0), phi_upper=up,
                         a_lower=make_lower_a(), a_upper=make_upper_a(up))
        prob = ScalarProblem(case="A1", params=params(j_x=0.2), box=box)
        with pytest.raises(NoSolution):
            solve_scalar_fd(prob, make_mesh(129, "graded"))

    def test_solution_lands_inside_a_proper_box(self):
        p = params(j_x=0.2, phi_L=1.2, j_x_max=0.3)
        box = build_box(p)
        prob = ScalarProblem(case="A1", params=p, box=box)
        mesh = make_mesh(129, "graded")
        prof = solve_scalar_fd(prob, mesh)
        x = mesh.nodes[1:-1]
        assert np.all(prof.values[1:-1] >= box.phi_lower.value(x) - 1e-9)
        assert np.all(prof.values[1:-1] <= box.phi_upper.value(x) + 1e-9)


class TestMonotoneIteration:
    def setup_method(self):
        self.p = params(j_x=0.2, phi_L=1.2, a_L=0.1, j_x_max=0.3)
        self.box = build_box(self.p)
        self.mesh = make_mesh(129, "graded")

    def test_decreasing_rhs_sweeps_down_to_the_solution(self):
        prob = ScalarProblem(case="A1", params=self.p.with_(a_L=0.0), box=self.box)
        result = monotone_iterate(prob, self.box.phi_lower, self.box.phi_upper, self.mesh)
        assert result.direction == "decreasing"
        # successive iterates never increase
        for a, b in zip(result.iterates, result.iterates[1:]):
            assert np.all(b.values[1:-1] <= a.values[1:-1] + 1e-10)
        fd = solve_scalar_fd(prob, self.mesh)
        assert result.profile.sup_diff(fd) < 1e-9

    def test_increasing_rhs_handled_with_shift(self):
        prob = ScalarProblem(case="A4", params=self.p, frozen=self.box.phi_upper,
                             box=self.box)
        result = monotone_iterate(prob, self.box.a_lower, self.box.a_upper, self.mesh)
        assert result.direction == "increasing"
        fd = solve_scalar_fd(prob, self.mesh)
        assert result.profile.sup_diff(fd) < 1e-9

    def test_mixed_sign_rhs_is_refused(self):
        # freezing a at the affine upper barrier drives the radicand negative
        # near the cathode, where dF/dphi flips sign
        prob = ScalarProblem(case="A2", params=self.p, frozen=self.box.a_upper,
                             box=self.box)
        with pytest.raises(MonotonicityViolation):
            monotone_iterate(prob, self.box.phi_lower, self.box.phi_upper, self.mesh)


class TestComparison:
    def setup_method(self):
        self.p = params(j_x=0.2, phi_L=1.2, a_L=0.1, j_x_max=0.3)
        self.box = build_box(self.p)
        self.mesh = make_mesh(129, "graded")
        self.prob = ScalarProblem(case="A4", params=self.p,
                                  frozen=self.box.phi_upper, box=self.box)
        self.sol = solve_scalar_fd(self.prob, self.mesh)
        x = self.mesh.nodes
        self.low = FieldProfile.from_values(self.mesh, self.box.a_lower.value(x))
        self.up = FieldProfile.from_values(self.mesh, self.box.a_upper.value(x))

    def test_lower_barrier_below_solution(self):
        verdict = comparison_check(self.prob, self.low, self.sol)
        assert verdict.status == "confirmed"
        assert verdict.ordered

    def test_equal_profiles_trivially_confirmed(self):
        verdict = comparison_check(self.prob, self.sol, self.sol)
        assert verdict.status == "confirmed"

    def test_inverted_premise_reported_not_raised(self):
        verdict = comparison_check(self.prob, self.up, self.low)
        assert verdict.status == "premise_failure"
        assert verdict.ordered is None


class TestUniformRefinement:
    def test_regular_problem_converges_at_second_order(self):
        # the magnetic equation with an affine frozen potential has a smooth
        # solution; quartering the error under node doubling is the
        # textbook second-difference rate. The electrostatic equation is
        # excluded here on purpose: its cathode RHS ~ x^(-1/2) drags the
        # uniform-mesh order down, which is what the graded family is for.
        p = params(j_x=0.3, a_L=0.4)
        frozen = Affine(0.5, 0.5)
        sols = {}
        for n in (65, 129, 257, 1025):
            mesh = make_mesh(n, "uniform")
            sols[n] = solve_scalar_fd(
                ScalarProblem(case="A4", params=p, frozen=frozen), mesh)
        fine = sols[1025]

        def gap(n):
            stride = (fine.mesh.n_nodes - 1) // (sols[n].mesh.n_nodes - 1)
            keep = sols[n].mesh.nodes >= 0.25
            return float(np.max(np.abs(sols[n].values[keep]
                                       - fine.values[::stride][keep])))

        d65, d129, d257 = gap(65), gap(129), gap(257)
        assert 3.2 < d65 / d129 < 5.2
        assert 3.2 < d129 / d257 < 5.2


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
