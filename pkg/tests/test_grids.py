"""Meshes, the three-point second-difference stencil, and field profiles.

The divided-difference form D2 u_i = 2 (s_i - s_{i-1})/(h_{i-1}+h_i) with
slopes s_i = (u_{i+1}-u_i)/h_i annihilates linear data algebraically; in
floating point that is bitwise only for u = x (slopes exactly 1.0), while a
general affine u leaves rounding noise of stencil scale, about eps/h^2. The
graded family x = t^1.5 nests under node doubling.
"""

import numpy as np
import pytest

from magdiode import FieldProfile, Mesh, make_mesh
from magdiode.errors import InvalidParameter, MeshMismatch
from magdiode.grids import d2_stencil, second_difference


class TestMesh:
    def test_uniform_endpoints_and_count(self):
        mesh = make_mesh(65, "uniform")
        assert mesh.nodes[0] == 0.0
        assert mesh.nodes[-1] == 1.0
        assert mesh.n_nodes == 65
        assert mesh.n_interior == 63

    def test_graded_concentrates_near_cathode(self):
        mesh = make_mesh(129, "graded")
        h = mesh.spacings
        assert h[0] < h[-1]
        assert np.all(h > 0.0)

    def test_graded_nodes_nest_under_doubling(self):
        coarse = make_mesh(129, "graded")
        fine = make_mesh(257, "graded")
        assert np.array_equal(fine.nodes[::2], coarse.nodes)

    def test_uniform_nodes_nest_under_doubling(self):
        coarse = make_mesh(129, "uniform")
        fine = make_mesh(257, "uniform")
        assert np.array_equal(fine.nodes[::2], coarse.nodes)

    def test_rejects_tiny_and_unsorted(self):
        with pytest.raises(InvalidParameter):
            Mesh(nodes=np.array([0.0, 1.0]))
        with pytest.raises(InvalidParameter):
            Mesh(nodes=np.array([0.0, 0.7, 0.3, 1.0]))
        with pytest.raises(InvalidParameter):
            Mesh(nodes=np.array([0.1, 0.5, 1.0]))

    def test_unknown_grading_rejected(self):
        with pytest.raises(InvalidParameter):
            make_mesh(65, "chebyshev")


class TestSecondDifference:
    @pytest.mark.parametrize("grading", ["uniform", "graded"])
    def test_annihilates_the_identity_bitwise(self, grading):
        # u = x makes both divided slopes exactly 1.0 (the same node
        # differences appear in numerator and denominator), so the result
        # is exact zero, not just small
        mesh = make_mesh(97, grading)
        d2 = second_difference(mesh, mesh.nodes)
        assert np.all(d2 == 0.0)

    @pytest.mark.parametrize("grading", ["uniform", "graded"])
    def test_affine_data_stays_under_the_stencil_noise_floor(self, grading):
        # 0.3 + 1.7x rounds per node, so exact cancellation is lost; what
        # remains must be bounded by rounding amplified through the stencil
        mesh = make_mesh(97, grading)
        vals = 0.3 + 1.7 * mesh.nodes
        d2 = second_difference(mesh, vals)
        sub, diag, sup = d2_stencil(mesh)
        floor = 4.0 * np.finfo(float).eps * (
            np.abs(sub * vals[:-2]) + np.abs(diag * vals[1:-1])
            + np.abs(sup * vals[2:]))
        assert np.all(np.abs(d2) <= floor)

    @pytest.mark.parametrize("grading", ["uniform", "graded"])
    def test_exact_on_quadratics_up_to_roundoff(self, grading):
        # three-point formula is algebraically exact for u = x^2; only
        # rounding remains, amplified by the 1/h^2 stencil scale
        mesh = make_mesh(257, grading)
        d2 = second_difference(mesh, mesh.nodes**2)
        hmin = mesh.spacings.min()
        assert np.max(np.abs(d2 - 2.0)) < 16.0 * np.finfo(float).eps / hmin**2

    def test_stencil_assembles_the_same_operator(self):
        mesh = make_mesh(81, "graded")
        vals = np.sin(2.0 * mesh.nodes)
        sub, diag, sup = d2_stencil(mesh)
        assembled = sub * vals[:-2] + diag * vals[1:-1] + sup * vals[2:]
        direct = second_difference(mesh, vals)
        assert np.max(np.abs(assembled - direct)) < 1e-8

    def test_second_order_error_on_smooth_data(self):
        # truncation error h^2 u''''/12; for sin(3x) on uniform h=1/64
        # that's about 1.7e-3 at the crests
        mesh = make_mesh(65, "uniform")
        d2 = second_difference(mesh, np.sin(3.0 * mesh.nodes))
        exact = -9.0 * np.sin(3.0 * mesh.nodes[1:-1])
        assert np.max(np.abs(d2 - exact)) < 3e-3


class TestFieldProfile:
    def test_from_values_records_endpoints(self):
        mesh = make_mesh(33, "uniform")
        prof = FieldProfile.from_values(mesh, mesh.nodes * 2.0)
        assert prof.left == 0.0
        assert prof.right == 2.0

    def test_rejects_wrong_shape(self):
        mesh = make_mesh(33, "uniform")
        with pytest.raises(MeshMismatch):
            FieldProfile.from_values(mesh, np.zeros(32))

    def test_rejects_inconsistent_endpoints(self):
        mesh = make_mesh(33, "uniform")
        with pytest.raises(InvalidParameter):
            FieldProfile(mesh=mesh, values=mesh.nodes, left=0.5, right=1.0)

    def test_sup_diff_requires_shared_mesh(self):
        a = FieldProfile.from_values(make_mesh(33, "uniform"), np.zeros(33))
        b = FieldProfile.from_values(make_mesh(33, "graded"), np.zeros(33))
        with pytest.raises(MeshMismatch):
            a.sup_diff(b)

    def test_sup_diff_and_interp(self):
        mesh = make_mesh(33, "uniform")
        a = FieldProfile.from_values(mesh, mesh.nodes)
        b = FieldProfile.from_values(mesh, mesh.nodes * 1.5)
        assert abs(a.sup_diff(b) - 0.5) < 1e-15
        assert abs(b.interp(0.5) - 0.75) < 1e-15
        assert b.interp(1.0) == 1.5


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
