"""Pointwise right-hand sides and the radicand classification.

The physical branch has radicand r = (1+phi)^2 - 1 - a^2 > 0, where the
curvatures are F = j (1+phi)/sqrt(r) and G = j a/sqrt(r). Reference values
below were computed with 30-digit mpmath arithmetic and frozen as decimal
literals; float64 evaluations must land within a few ulp of them.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magdiode import DiodeParams, FieldProfile, discriminant, make_mesh
from magdiode.errors import InvalidParameter, SingularPoint
from magdiode.model import (
    ZERO_THRESHOLD_SCALE,
    eval_F,
    eval_F_eps,
    eval_G,
    eval_G_eps,
    radicand_arrays,
    rhs_a_arrays,
    rhs_phi_arrays,
    to_transformed,
    zero_threshold,
)


def params(j_x=1.0, phi_L=1.0, a_L=0.0, **kw):
    return DiodeParams(j_x=j_x, phi_L=phi_L, a_L=a_L, **kw)


# mpmath, 30 digits: F(0.5, 0.3; j=1), r = 0.5*2.5 - 0.09 = 1.16
F_REF = 1.39271503632788897359932167885
# G = F * a/(1+phi) = F * 0.2
G_REF = 0.278543007265577794719864335769
# negative branch: r(0.1, 1.0) = -0.79, F = 0.7*1.1/sqrt(0.79)
F_NEG_REF = 0.866317683713038406907646846844
# regularized: F_eps(0.2, 0.1; eps=1e-3, j=1)
F_EPS_REF = 1.82641582972862326400180888845


class TestParams:
    def test_defaults(self):
        p = params(j_x=0.3)
        assert p.j_x_max == 0.3
        assert p.epsilon == 0.0
        assert p.tol_residual == 1e-10

    def test_with_replaces_fields(self):
        p = params(j_x=0.3).with_(j_x=0.1, a_L=-0.2)
        assert p.j_x == 0.1
        assert p.a_L == -0.2
        assert p.phi_L == 1.0

    @pytest.mark.parametrize("kw", [
        dict(j_x=-0.1),
        dict(j_x=math.nan),
        dict(phi_L=-1.0),
        dict(a_L=math.inf),
        dict(epsilon=-1e-3),
        dict(tol_residual=0.0),
        dict(tol_iter=-1e-10),
    ])
    def test_rejects_bad_values(self, kw):
        base = dict(j_x=0.2, phi_L=1.0, a_L=0.0)
        base.update(kw)
        with pytest.raises(InvalidParameter):
            DiodeParams(**base)

    def test_rejects_ceiling_below_current(self):
        with pytest.raises(InvalidParameter):
            DiodeParams(j_x=0.3, phi_L=1.0, a_L=0.0, j_x_max=0.2)


class TestDiscriminant:
    def test_positive_branch(self):
        d = discriminant(0.5, 0.3)
        assert d.sign == 1
        assert abs(d.value - 1.16) < 1e-15

    def test_negative_branch(self):
        d = discriminant(0.1, 1.0)
        assert d.sign == -1
        assert abs(d.value + 0.79) < 1e-15

    def test_origin_is_thresholded_zero(self):
        d = discriminant(0.0, 0.0)
        assert d.sign == 0
        assert d.value == 0.0

    def test_tiny_phi_stays_below_threshold(self):
        # phi(2+phi) ~ 2e-16 < 1e-14
        assert discriminant(1e-16, 0.0).sign == 0

    def test_no_cancellation_at_small_phi(self):
        # the expanded form phi(2+phi) is exact to an ulp here; the naive
        # (1+phi)^2 - 1 would lose about five digits
        phi = 1e-6
        d = discriminant(phi, 0.0)
        exact = phi * (2.0 + phi)
        assert abs(d.value - exact) <= 2.0 * np.finfo(float).eps * exact

    def test_threshold_scales_with_potential(self):
        assert zero_threshold(0.0) == ZERO_THRESHOLD_SCALE
        assert zero_threshold(9.0) == ZERO_THRESHOLD_SCALE * 100.0


class TestPointwiseRhs:
    def test_F_against_frozen_reference(self):
        assert abs(eval_F(0.5, 0.3, params()) - F_REF) < 1e-15

    def test_G_against_frozen_reference(self):
        assert abs(eval_G(0.5, 0.3, params()) - G_REF) < 1e-15

    def test_F_on_negative_branch_uses_magnitude(self):
        p = params(j_x=0.7)
        assert abs(eval_F(0.1, 1.0, p) - F_NEG_REF) < 1e-15

    def test_F_scales_linearly_in_current(self):
        p1, p2 = params(j_x=0.25), params(j_x=0.5)
        assert eval_F(0.4, 0.1, p2) == 2.0 * eval_F(0.4, 0.1, p1)

    def test_singular_point_raises(self):
        with pytest.raises(SingularPoint):
            eval_F(0.0, 0.0, params())
        err = None
        try:
            eval_G(0.3, math.sqrt(0.3 * 2.3), params())
        except SingularPoint as e:
            err = e
        assert err is not None
        assert abs(err.radicand) < zero_threshold(0.3)

    def test_eps_zero_reduces_exactly(self):
        p = params()
        assert eval_F_eps(0.5, 0.3, p) == eval_F(0.5, 0.3, p)
        assert eval_G_eps(0.5, 0.3, p) == eval_G(0.5, 0.3, p)

    def test_F_eps_against_frozen_reference(self):
        p = params(epsilon=1e-3)
        assert abs(eval_F_eps(0.2, 0.1, p) - F_EPS_REF) < 1e-15

    def test_eps_lifts_the_cathode_singularity(self):
        p = params(epsilon=1e-3)
        val = eval_F_eps(0.0, 0.0, p)
        assert math.isfinite(val)
        assert val > 0.0


class TestVectorizedRhs:
    def test_matches_scalar_evaluation(self):
        p = params(j_x=0.6)
        phi = np.array([0.2, 0.5, 1.3])
        a = np.array([0.1, 0.3, 0.4])
        f, _, mask = rhs_phi_arrays(phi, a, p.j_x)
        g, _, gmask = rhs_a_arrays(phi, a, p.j_x)
        assert not mask.any() and not gmask.any()
        for i in range(phi.size):
            assert f[i] == eval_F(phi[i], a[i], p)
            assert g[i] == eval_G(phi[i], a[i], p)

    def test_masked_nodes_report_zero(self):
        phi = np.array([0.0, 0.5])
        a = np.array([0.0, 0.3])
        f, df, mask = rhs_phi_arrays(phi, a, 1.0)
        assert mask[0] and not mask[1]
        assert f[0] == 0.0 and df[0] == 0.0
        assert f[1] > 0.0

    def test_radicand_mask_consistent_with_threshold(self):
        phi = np.array([1e-16, 0.5])
        r, mask = radicand_arrays(phi, np.zeros(2))
        assert mask[0] and not mask[1]
        assert abs(r[1] - 1.25) < 1e-15

    def test_derivative_signs_on_positive_branch(self):
        # dF/dphi = -j (1+a^2)/r^(3/2) < 0, dG/da = j (r+a^2)/r^(3/2) > 0
        phi = np.linspace(0.1, 2.0, 9)
        a = np.full(9, 0.2)
        _, df, _ = rhs_phi_arrays(phi, a, 0.8)
        _, dg, _ = rhs_a_arrays(phi, a, 0.8)
        assert np.all(df < 0.0)
        assert np.all(dg > 0.0)

    def test_derivative_matches_finite_difference(self):
        p = params(j_x=0.5)
        phi, a, h = 0.7, 0.25, 1e-6
        _, df, _ = rhs_phi_arrays(np.array([phi]), np.array([a]), p.j_x)
        fd = (eval_F(phi + h, a, p) - eval_F(phi - h, a, p)) / (2.0 * h)
        assert abs(df[0] - fd) < 1e-6 * max(1.0, abs(fd))


@given(
    phi=st.floats(min_value=1e-3, max_value=3.0),
    frac=st.floats(min_value=0.0, max_value=0.9),
    j=st.floats(min_value=1e-3, max_value=1.0),
)
@settings(max_examples=60, deadline=None)
def test_rhs_property_positive_branch(phi, frac, j):
    """F > 0, dF/dphi < 0 and dG/da >= 0 anywhere strictly inside the branch."""
    a = frac * math.sqrt(phi * (2.0 + phi))
    f, df, mask = rhs_phi_arrays(np.array([phi]), np.array([a]), j)
    g, dg, _ = rhs_a_arrays(np.array([phi]), np.array([a]), j)
    assert not mask[0]
    assert f[0] > 0.0
    assert df[0] < 0.0
    assert g[0] >= 0.0
    assert dg[0] >= 0.0


@given(st.floats(min_value=0.0, max_value=5.0), st.floats(min_value=-3.0, max_value=3.0))
@settings(max_examples=60, deadline=None)
def test_radicand_equals_expanded_square(phi, a):
    """phi(2+phi) - a^2 agrees with (1+phi)^2 - 1 - a^2 up to roundoff in the
    big terms (and is the more accurate of the two for small phi)."""
    r, _ = radicand_arrays(np.array([phi]), np.array([a]))
    naive = (1.0 + phi) ** 2 - 1.0 - a * a
    scale = max(1.0, (1.0 + phi) ** 2, a * a)
    assert abs(r[0] - naive) <= 4.0 * np.finfo(float).eps * scale


def test_transform_is_involution():
    mesh = make_mesh(33, "uniform")
    prof = FieldProfile.from_values(mesh, mesh.nodes**2, info={"tag": 1})
    twice = to_transformed(to_transformed(prof))
    assert np.array_equal(twice.values, prof.values)
    assert to_transformed(prof).values[-1] == -1.0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
