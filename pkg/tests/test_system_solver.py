"""Coupled solves by alternating frozen-field sweeps.

Decoupling checks: j = 0 makes both equations trivially linear (and the
linear seed exact); a_L = 0 makes the magnetic field vanish identically, so
the potential must agree with the scalar solve bit for bit. The a -> -a
symmetry must also hold bitwise because the mirrored problem runs the same
float arithmetic on the same magnitudes.
"""

import numpy as np
import pytest

from magdiode import DiodeParams, make_mesh
from magdiode.barriers import build_box
from magdiode.errors import MeshMismatch
from magdiode.scalar_solver import ScalarProblem, solve_scalar_fd
from magdiode.system_solver import coupled_residual, solve_system


def params(j_x=0.2, phi_L=1.0, a_L=0.3, **kw):
    kw.setdefault("j_x_max", max(j_x, 0.3))
    return DiodeParams(j_x=j_x, phi_L=phi_L, a_L=a_L, **kw)


MESH = make_mesh(257, "graded")


class TestDegenerateCases:
    def test_zero_current_is_exactly_linear(self):
        p = params(j_x=0.0, a_L=0.2, j_x_max=0.0)
        pair = solve_system(p, build_box(p), make_mesh(65, "uniform"))
        assert np.array_equal(pair.phi.values, p.phi_L * pair.phi.mesh.nodes)
        assert np.array_equal(pair.a.values, p.a_L * pair.a.mesh.nodes)
        # phi_L = 1 makes phi bitwise equal to the nodes, so its residual
        # vanishes exactly; 0.2 x rounds per node and leaves stencil noise
        assert pair.residual_phi == 0.0
        assert pair.residual_a < 1e-12

    def test_zero_anode_field_decouples_bitwise(self):
        p = params(a_L=0.0)
        box = build_box(p)
        pair = solve_system(p, box, MESH)
        assert np.all(pair.a.values == 0.0)
        scalar = solve_scalar_fd(ScalarProblem(case="A1", params=p, box=box), MESH)
        assert np.array_equal(pair.phi.values, scalar.values)


class TestRegularSolves:
    def setup_method(self):
        self.p = params()
        self.box = build_box(self.p)
        self.pair = solve_system(self.p, self.box, MESH)

    def test_converges_within_tolerance(self):
        res = coupled_residual(self.pair.phi, self.pair.a, self.p)
        assert max(res.excess_phi, res.excess_a) < self.p.tol_residual
        assert res.n_singular == 0
        assert self.pair.iterations >= 1

    def test_excess_never_exceeds_raw_norm(self):
        res = coupled_residual(self.pair.phi, self.pair.a, self.p)
        assert res.excess_phi <= res.residual_phi
        assert res.excess_a <= res.residual_a

    def test_profiles_contained_in_the_box(self):
        assert self.pair.phi_contained
        assert self.pair.a_contained

    def test_boundary_values_exact(self):
        assert self.pair.phi.values[0] == 0.0
        assert self.pair.a.values[0] == 0.0
        assert self.pair.phi.values[-1] == self.p.phi_L
        assert self.pair.a.values[-1] == self.p.a_L

    def test_mirror_symmetry_bitwise(self):
        flipped = self.p.with_(a_L=-self.p.a_L)
        mirrored = solve_system(flipped, self.box, MESH)
        assert np.array_equal(mirrored.phi.values, self.pair.phi.values)
        assert np.array_equal(mirrored.a.values, -self.pair.a.values)

    def test_warm_start_lands_on_the_same_fixed_point(self):
        coarse = solve_system(self.p, self.box, make_mesh(129, "graded"))
        warm = solve_system(self.p, self.box, MESH, start=coarse)
        assert warm.phi.sup_diff(self.pair.phi) < 10.0 * self.p.tol_iter
        assert warm.a.sup_diff(self.pair.a) < 10.0 * self.p.tol_iter

    def test_residual_demands_shared_mesh(self):
        other = solve_system(self.p, self.box, make_mesh(129, "graded"))
        with pytest.raises(MeshMismatch):
            coupled_residual(self.pair.phi, other.a, self.p)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
