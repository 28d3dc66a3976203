import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from sigma2lab.estimators import MassScanner, RadialSolver
from sigma2lab.radial import NonexistenceError


def test_radial_solver_matches_closed_form():
    est = RadialSolver(rho=0.0, epsilon=1.35).fit()
    r = np.array([0.1, 1.0, 10.0])
    np.testing.assert_allclose(est.predict(r), -0.75 * np.log(r**2 + 1 / 9), atol=1e-9)
    assert est.alpha_ == -1.5


def test_radial_solver_accepts_points():
    est = RadialSolver(rho=0.5).fit()
    x = np.array([[1.0, 0, 0, 0], [0, 0.6, 0.8, 0]])
    np.testing.assert_allclose(est.predict(x), est.predict(np.array([1.0, 1.0])))
    assert est.predict_slope(np.array([1.0]))[0] == pytest.approx(-1.0, abs=1e-9)


def test_radial_solver_params_roundtrip():
    est = RadialSolver(rho=1.0, epsilon=0.7)
    assert est.get_params()["epsilon"] == 0.7
    twin = clone(est).set_params(epsilon=0.5)
    assert twin.epsilon == 0.5 and est.epsilon == 0.7
    with pytest.raises(NotFittedError):
        est.predict(np.array([1.0]))


def test_radial_solver_errors():
    with pytest.raises(NonexistenceError):
        RadialSolver(rho=2.5).fit()
    with pytest.raises(ValueError):
        RadialSolver(epsilon=-1.0).fit()


def test_radial_solver_general_path():
    est = RadialSolver(rho=0.0, epsilon=1.0, k_amplitude=0.5).fit()
    assert est.profile_.k_spec.amplitude == 0.5


def test_mass_scanner_profile(profiles):
    sc = MassScanner().fit(profiles[0.5])
    rows = sc.transform(np.linspace(-1, -6, 8))
    assert rows.shape == (8, 8)
    assert np.max(np.abs(rows[:, 5])) < 1e-9
    sup = MassScanner(f_scale=0.5).fit(profiles[0.5]).scan(np.linspace(-1, -6, 8))
    inc = np.argsort(sup.t_grid)
    assert np.all(np.diff(sup.M[inc]) > -1e-8)


def test_mass_scanner_grid(grid_case):
    sc = MassScanner(rho=0.5).fit(grid_case["field"])
    scan = sc.scan(grid_case["levels"][:3])
    assert scan.source == "grid"
    assert np.all(np.abs(scan.M) < 5e-3)
    with pytest.raises(ValueError, match="rho"):
        MassScanner().fit(grid_case["field"])
    with pytest.raises(TypeError):
        MassScanner().fit(np.zeros(3))
