import math
import warnings

import numpy as np
import pytest

from sigma2lab.analytic import QuadraticField
from sigma2lab.field import ScalarField4
from sigma2lab.functions import S3_AREA, FSpec, KSpec
from sigma2lab.mass import npqv_radial
from sigma2lab.pohozaev import (
    PohozaevReport,
    RefusedError,
    mass_pohozaev_consistency,
    pohozaev_grid,
    pohozaev_radial,
)
from sigma2lab.radial import DomainError, solve_radial, solve_radial_general

# On the sphere |x| = 1 the boundary side is |S3| (2 |u_s|^3) when rho = 0,
# with u_s(0) = -27/20 fixed by the gauge. Worked by hand: 2 pi^2 * 2 * 1.35^3.
RHS_RHO0_R1 = 2 * math.pi**2 * 2 * 1.35**3


def test_hand_value_of_boundary_side():
    assert RHS_RHO0_R1 == pytest.approx(97.13171171332, abs=1e-9)


def test_radial_rho0_unit_ball(exact_rho0):
    rep = pohozaev_radial(exact_rho0, 1.0)
    assert rep.rhs == pytest.approx(RHS_RHO0_R1, rel=1e-12)
    assert rep.lhs == pytest.approx(rep.rhs, rel=1e-8)
    assert rep.domain == {"kind": "ball", "R": 1.0, "tau": pytest.approx(exact_rho0.u_at(np.array([0.0]))[0])}


@pytest.mark.parametrize("rho, R", [(0.0, 0.3), (0.0, 5.0), (0.5, 1.0), (0.5, 4.0), (1.0, 2.0)])
def test_radial_identity_holds(profiles, rho, R):
    rep = pohozaev_radial(profiles[rho], R)
    assert rep.rel_residual <= 1e-8


@pytest.mark.parametrize("rho, epsilon", [(0.0, 1.0), (0.5, 1.0), (1.0, 1.0), (1.5, 0.3)])
@pytest.mark.parametrize("R", [0.5, 1.0, 2.0])
def test_radial_consistency_table(rho, epsilon, R):
    # rho = 1.5 stops at the cone edge; the gauge 0.3 keeps the edge beyond r = 2
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prof = solve_radial(rho, epsilon)
    assert pohozaev_radial(prof, R).rel_residual <= 1e-6


def test_radial_identity_truncated_family():
    with pytest.warns(UserWarning, match="truncated"):
        prof = solve_radial(1.5, 0.3)
    rep = pohozaev_radial(prof, 2.0)
    assert rep.rel_residual <= 1e-8


def test_radial_weighted_k():
    k = KSpec(0.5, 1.0)
    prof = solve_radial_general(0.0, 1.0, k_spec=k)
    rep = pohozaev_radial(prof, 1.0)
    assert rep.K_spec == {"form": "1+a*exp(-b|x|^2)", "a": 0.5, "b": 1.0}
    assert rep.lhs == pytest.approx(rep.rhs, rel=1e-6)


def test_radial_weight_must_match_solution(exact_rho0):
    with pytest.raises(RefusedError, match="different K"):
        pohozaev_radial(exact_rho0, 1.0, KSpec(0.5, 1.0))


def test_radial_weight_gradient_term_is_needed():
    """Integrating K alone, without the x.grad K part, misses the boundary side."""
    from scipy.integrate import quad

    k = KSpec(0.5, 1.0)
    prof = solve_radial_general(0.0, 1.0, k_spec=k)
    rep = pohozaev_radial(prof, 1.0)
    F, tau = prof.f_spec.F, rep.domain["tau"]

    def body(r, with_gradient):
        w = k.radial(r) + (0.25 * k.radial_x_dot_grad(r) if with_gradient else 0.0)
        u = prof.u_at(np.array([math.log(r)]))[0]
        return 8 * w * (F(u) - F(tau)) * r**3

    full = S3_AREA * quad(body, 1e-6, 1.0, args=(True,), epsabs=1e-12, epsrel=1e-11)[0]
    bare = S3_AREA * quad(body, 1e-6, 1.0, args=(False,), epsabs=1e-12, epsrel=1e-11)[0]
    assert full == pytest.approx(rep.rhs, rel=1e-6)
    assert abs(bare - rep.rhs) > 1e-2 * rep.rhs


def test_radial_domain_errors(exact_rho0):
    with pytest.raises(DomainError):
        pohozaev_radial(exact_rho0, 0.0)
    with pytest.raises(DomainError, match="beyond"):
        pohozaev_radial(exact_rho0, 1e8)


def test_report_serialises(exact_rho0):
    d = pohozaev_radial(exact_rho0, 1.0).to_dict()
    assert set(d) >= {"lhs", "rhs", "domain", "K_spec", "anchor", "abs_residual", "rel_residual"}
    assert d["anchor"]["F(tau)"] == 0.0
    rep = PohozaevReport(lhs=1.0, rhs=2.0, domain={}, K_spec={}, anchor={})
    assert rep.abs_residual == 1.0 and rep.rel_residual == 0.5


@pytest.mark.parametrize("rho", [0.0, 0.5, 1.0])
def test_mass_bridge_radial(profiles, rho):
    prof = profiles[rho]
    for t in prof.u_at(np.array([-1.0, 0.0, 2.0])):
        _, P, _, _ = npqv_radial(prof, float(t))
        assert mass_pohozaev_consistency(prof, float(t)) <= 1e-9 * max(1.0, abs(12 * P))


def test_mass_bridge_sign_is_not_symmetric(profiles):
    """Flipping the sign of the boundary side would not close the bridge."""
    prof = profiles[0.5]
    t = float(prof.u_at(np.array([0.0]))[0])
    _, P, x, _ = npqv_radial(prof, t)
    assert abs(12 * P) > 1e-2
    assert mass_pohozaev_consistency(prof, t) < 1e-9 * abs(24 * P)


def test_grid_refuses_non_solution():
    # -|x|^2 has sigma_2 = 24 everywhere, far from f(u) = 3/2 e^{4u} on the region
    f = ScalarField4.centered(QuadraticField(-np.eye(4)), 24, 2.0)
    with pytest.raises(RefusedError, match="PDE residual"):
        pohozaev_grid(f, 0.0, FSpec((1.5,)), -0.5)


def test_grid_rejects_boundary_level(grid_case):
    p = grid_case["profile"]
    low = float(p.u_at(np.array([math.log(2.5)]))[0])
    with pytest.raises(DomainError, match="boundary"):
        pohozaev_grid(grid_case["sweep"], 0.5, p.f_spec, low)


def test_grid_identity_on_fine_field(grid_case):
    p, sweep = grid_case["profile"], grid_case["sweep"]
    t = float(grid_case["levels"][-1])
    rep = pohozaev_grid(sweep, 0.5, p.f_spec, t)
    ref = pohozaev_radial(p, math.exp(float(p.s_of_t(t))))
    assert rep.rel_residual < 2e-2
    assert rep.rhs == pytest.approx(ref.rhs, rel=2e-2)
    assert rep.extra["edge_weight"] < 1e-3
    assert rep.error_estimate >= 0


def test_grid_mass_bridge(grid_case):
    p = grid_case["profile"]
    t = float(grid_case["levels"][-1])
    _, P, _, _ = npqv_radial(p, t)
    assert mass_pohozaev_consistency(grid_case["sweep"], t, rho=0.5, f_spec=p.f_spec) < 3e-2 * abs(12 * P)


@pytest.mark.slow
def test_grid_residual_second_order(pohozaev_pair):
    coarse, fine = pohozaev_pair["reports"]
    ratio = coarse.abs_residual / fine.abs_residual
    assert 3.0 <= ratio <= 5.0
    # the quadrature part is small next to the stencil part at both sizes
    assert coarse.error_estimate < 0.2 * coarse.abs_residual
    assert fine.error_estimate < 0.2 * fine.abs_residual
