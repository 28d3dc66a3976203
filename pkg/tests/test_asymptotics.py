import math
import warnings

import numpy as np
import pytest

from sigma2lab.analytic import QuadraticField
from sigma2lab.asymptotics import (
    BlowdownReport,
    RatioBoundWarning,
    alpha_fit,
    blowdown_convergence,
    directions,
    envelopes,
    extremal_radii,
    level_crossings,
)
from sigma2lab.field import ScalarField4
from sigma2lab.radial import DomainError, asymptotic_slope

BLOWDOWN_LEVELS = np.arange(-2.0, -12.5, -2.0)
# deep enough for four decades of radius on each profile
DEEP_LEVELS = {0.0: np.linspace(-2.0, -17.0, 9), 0.5: np.linspace(-2.0, -18.0, 9),
               1.0: np.linspace(-2.0, -23.0, 12)}


def test_directions_are_distinct_unit_vectors():
    d = directions()
    assert d.shape == (48, 4)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0, atol=1e-15)
    gram = d @ d.T - np.eye(48)
    assert gram.max() < 1 - 1e-9


def test_crossings_on_sphere():
    f = ScalarField4.centered(QuadraticField(-2 * np.eye(4)), 24, 1.5)
    cr = level_crossings(f, -1.0)
    # linear interpolation of r^2 along an edge is off by at most h^2 / 4
    assert np.max(np.abs(cr.radii**2 - 1.0)) <= f.spacing[0] ** 2 / 4 + 1e-12
    # x.grad u = -2|x|^2 = -2 on the level, up to the same interpolation error
    np.testing.assert_allclose(cr.x_dot_grad, -2.0, atol=f.spacing[0] ** 2)


def test_crossings_reject_missing_level():
    f = ScalarField4.centered(QuadraticField(-2 * np.eye(4)), 12, 1.0)
    with pytest.raises(DomainError):
        level_crossings(f, -50.0)


def test_extremal_radii_radial(profiles):
    p = profiles[0.5]
    lo, hi = extremal_radii(p, -3.0)
    assert lo == hi == pytest.approx(math.exp(p.s_of_t(-3.0)))
    with pytest.raises(DomainError, match="not below"):
        extremal_radii(p, p.u_max + 1)


def test_extremal_radii_ellipsoid():
    # u = -(x1^2 / 4 + x2^2 + x3^2 + x4^2): level -1/4 spans radii 1/2 to 1
    f = ScalarField4.centered(QuadraticField(-np.diag([0.5, 2, 2, 2])), 33, 1.5)
    h = f.spacing[0]
    lo, hi = extremal_radii(f, -0.25)
    assert lo == pytest.approx(0.5, abs=h**2)
    assert hi == pytest.approx(1.0, abs=h**2)


def test_envelopes():
    f = ScalarField4.centered(QuadraticField(-np.diag([0.5, 2, 2, 2])), 33, 1.5)
    # multilinear interpolation undershoots a concave quadratic by at most sum_i h^2 |u_ii| / 8
    bound = f.spacing[0] ** 2 * 6.5 / 8
    lo, hi = envelopes(f, [0.5, 1.0])
    np.testing.assert_allclose(lo, [-0.25, -1.0], atol=bound)
    np.testing.assert_allclose(hi, [-0.0625, -0.25], atol=bound)


def test_envelopes_radial_coincide(profiles):
    lo, hi = envelopes(profiles[1.0], [0.5, 2.0])
    np.testing.assert_array_equal(lo, hi)


@pytest.mark.parametrize("rho", [0.0, 0.5, 1.0])
def test_alpha_fit_radial(profiles, rho):
    a, res = alpha_fit(profiles[rho], DEEP_LEVELS[rho], return_residual=True)
    assert a == pytest.approx(asymptotic_slope(rho), abs=1e-6)
    assert res < 1e-5


def test_alpha_fit_needs_decades(profiles):
    with pytest.raises(DomainError, match="decades"):
        alpha_fit(profiles[0.5], [-1.0, -1.5, -2.0, -2.5])
    with pytest.raises(DomainError, match="at least 4"):
        alpha_fit(profiles[0.5], [-2.0, -4.0, -6.0])


def test_alpha_fit_short_sequence_is_refused_not_guessed(profiles):
    """-2 .. -12 covers under three decades at rho = 1/2; the fit declines."""
    with pytest.raises(DomainError, match="2.7"):
        alpha_fit(profiles[0.5], BLOWDOWN_LEVELS)
    assert alpha_fit(profiles[0.5], BLOWDOWN_LEVELS, min_decades=2.5) == pytest.approx(
        asymptotic_slope(0.5), abs=1e-5)


def test_blowdown_radial_rho_half(profiles):
    rep = blowdown_convergence(profiles[0.5], BLOWDOWN_LEVELS)
    assert isinstance(rep, BlowdownReport)
    g = rep.gradient_alignment_error
    assert np.all(np.diff(g) < 0)
    assert g[-1] <= 1e-2
    assert abs(rep.alpha_fit - asymptotic_slope(0.5)) <= 1e-3
    assert np.all(np.diff(rep.uniform_error) < 0)
    assert rep.ratio_max == 1.0 and rep.violations == []
    assert rep.table().shape == (6, len(BlowdownReport.COLUMNS))


def test_blowdown_grid_ellipsoid_warns():
    f = ScalarField4.centered(QuadraticField(-np.diag([0.08, 2, 2, 2])), 24, 1.5)
    with pytest.warns(RatioBoundWarning):
        rep = blowdown_convergence(f, [-0.02, -0.03, -0.05, -0.08], R=2.0, alpha=-2.0)
    assert rep.violations and rep.violations[0]["ratio"] > 2.0
    assert rep.summary()["violations"] == rep.violations


def test_blowdown_grid_agrees_with_profile(grid_case):
    p, f = grid_case["profile"], grid_case["field"]
    t = grid_case["levels"][::3]
    with warnings.catch_warnings():
        warnings.simplefilter("error", RatioBoundWarning)
        grid = blowdown_convergence(f, t, alpha=p.alpha)
    rad = blowdown_convergence(p, t)
    np.testing.assert_allclose(grid.r_min, rad.r_min, rtol=2e-2)
    assert np.all(grid.sup_log_radius_error < 5e-2)
    # x.grad u on the level tracks r u'(r) up to stencil and interpolation error
    assert np.all(np.abs(grid.gradient_alignment_error - rad.gradient_alignment_error) < 5e-2)
