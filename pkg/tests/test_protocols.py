import numpy as np
import pytest

from maskmodes.diffraction import UnitaryMatrix
from maskmodes.errors import DimensionMismatch, InvalidEfficiency
from maskmodes.fock import two_mode_closed_form
from maskmodes.protocols import (
    hom_coincidence,
    ifm_project,
    noon_fidelity_scan,
    noon_surface,
)

BALANCED = UnitaryMatrix.balanced_splitter()
BELL = np.array([0, 1, 1, 0]) / np.sqrt(2)


def test_ifm_perfect_absorption_projects_bell_state():
    atoms, p_null = ifm_project(1.0, BALANCED)
    assert abs(p_null - 1.0) < 1e-12
    assert abs(atoms.fidelity_with(BELL) - 1.0) < 1e-12


def test_ifm_partial_absorption_same_bell_state():
    atoms, p_null = ifm_project(0.5, BALANCED)
    assert abs(p_null - 0.5) < 1e-12
    assert abs(atoms.fidelity_with(BELL) - 1.0) < 1e-12


def test_ifm_unbalanced_block():
    theta = 1.1
    atoms, _ = ifm_project(1.0, UnitaryMatrix.su2(theta))
    target = np.array([0, np.sin(theta / 2), np.cos(theta / 2), 0])
    assert abs(atoms.fidelity_with(target) - 1.0) < 1e-12


def test_ifm_probability_conservation():
    for eta in (0.25, 0.5, 1.0):
        for theta in (np.pi / 2, 0.7, 2.4):
            _, p_null = ifm_project(eta, UnitaryMatrix.su2(theta))
            detected = (1.0 - eta)  # photon always reaches the detector if not absorbed
            assert abs(p_null + detected - 1.0) < 1e-12


def test_ifm_invalid_efficiency():
    with pytest.raises(InvalidEfficiency):
        ifm_project(0.0, BALANCED)
    with pytest.raises(InvalidEfficiency):
        ifm_project(1.2, BALANCED)
    with pytest.raises(DimensionMismatch):
        ifm_project(1.0, UnitaryMatrix.identity(3))


def test_hom_dip_at_balanced_block():
    assert hom_coincidence(BALANCED) < 1e-12
    assert hom_coincidence(UnitaryMatrix.su2(np.pi / 2)) < 1e-12


def test_hom_identity_always_coincides():
    assert abs(hom_coincidence(UnitaryMatrix.identity(2)) - 1.0) < 1e-15


def test_hom_third_pi_splitter():
    got = hom_coincidence(UnitaryMatrix.su2(np.pi / 3))
    assert abs(got - 0.25) < 1e-9


def test_hom_sweep_matches_cos_squared():
    for theta in np.linspace(0.0, np.pi, 64):
        got = hom_coincidence(UnitaryMatrix.su2(theta))
        assert abs(got - np.cos(theta) ** 2) < 1e-9


def test_noon_scan_small_photon_numbers_reach_unity():
    for n in (1, 2):
        res = noon_fidelity_scan(n, grid=(64, 64))
        assert res.best_fidelity >= 1.0 - 1e-9


def test_noon_two_photons_uses_hong_ou_mandel_point():
    res = noon_fidelity_scan(2, grid=(64, 64))
    assert res.best_split == 1
    assert abs(res.best_theta - np.pi / 2) < 1e-9


def test_noon_three_and_four_photons_capped():
    for n, known_best in ((3, 0.75), (4, 0.75)):
        res = noon_fidelity_scan(n, grid=(256, 256))
        assert res.best_fidelity <= 1.0 - 1e-3
        # brute maximum of the closed-form family lands on 3/4
        assert abs(res.best_fidelity - known_best) < 1e-9


def test_noon_scan_monotone_under_refinement():
    last = 0.0
    for g in (64, 128, 256):
        res = noon_fidelity_scan(3, grid=(g, g), refine_rounds=0)
        assert res.best_fidelity >= last - 1e-15
        last = res.best_fidelity
    refined = noon_fidelity_scan(3, grid=(256, 256), refine_rounds=4)
    assert refined.best_fidelity >= last - 1e-15


def test_noon_scan_consistent_with_closed_form_states():
    # the scan's overlap amplitudes must match the full closed-form state
    for (m, n, theta) in ((1, 1, np.pi / 2), (2, 1, 1.0), (3, 1, 2.0)):
        st = two_mode_closed_form(m, n, theta, 0.0)
        total = m + n
        a = abs(st.amplitude((total, 0)))
        b = abs(st.amplitude((0, total)))
        direct = (a + b) ** 2 / 2
        from maskmodes.protocols import _noon_fidelity_theta

        assert abs(direct - _noon_fidelity_theta(m, n, np.array([theta]))[0]) < 1e-12


def test_noon_scan_grid_validation():
    with pytest.raises(ValueError):
        noon_fidelity_scan(0)
    with pytest.raises(ValueError):
        noon_fidelity_scan(2, grid=(32, 64))


def test_noon_surface_shape_and_range():
    thetas, phis, vals = noon_surface(2, grid=(64, 64))
    assert vals.shape == (65, 64)
    assert np.all(vals >= 0) and np.all(vals <= 1 + 1e-12)
    assert abs(np.max(vals) - 1.0) < 1e-12


def test_scan_result_serialization():
    doc = noon_fidelity_scan(2, grid=(64, 64)).to_json()
    assert doc["photons"] == 2
    assert 0 <= doc["best_fidelity"] <= 1
