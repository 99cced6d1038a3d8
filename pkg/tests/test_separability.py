import numpy as np
import pytest

from maskmodes.agreement import run_agreement_suite
from maskmodes.diffraction import UnitaryMatrix
from maskmodes.entanglement import Bipartition, entanglement_report
from maskmodes.errors import DimensionMismatch, NonAnalyticInput, NotPure
from maskmodes.fock import (
    Coherent,
    Fock,
    InputStateSpec,
    SqueezedVacuum,
    Vacuum,
    apply_unitary,
    build_input_state,
)
from maskmodes.separability import (
    BargmannInput,
    check_no_entanglement,
    coupled_input_modes,
    covariance_separable,
    gaussian_covariance_propagate,
    squeezing_to_quadratic_coeff,
)
from util import haar_unitary

BALANCED = UnitaryMatrix.balanced_splitter()


def block_diag_unitary(*blocks):
    n = sum(b.shape[0] for b in blocks)
    m = np.zeros((n, n), dtype=complex)
    at = 0
    for b in blocks:
        d = b.shape[0]
        m[at : at + d, at : at + d] = b
        at += d
    return UnitaryMatrix(m)


def test_coupled_modes_block_diagonal():
    rng = np.random.default_rng(31)
    u = block_diag_unitary(BALANCED.matrix, haar_unitary(rng, 2))
    assert coupled_input_modes(u, {0}) == {0, 1}
    assert coupled_input_modes(u, {0, 1}) == {0, 1}
    assert coupled_input_modes(u, {2}) == {2, 3}


def test_coupled_modes_grating_block():
    assert coupled_input_modes(BALANCED, {0}) == {0, 1}


def test_coupled_modes_fully_connected():
    rng = np.random.default_rng(32)
    u = UnitaryMatrix(haar_unitary(rng, 4))
    assert coupled_input_modes(u, {2}) == {0, 1, 2, 3}


def test_bargmann_conversion():
    spec = InputStateSpec([Coherent(0.5 + 0.1j), SqueezedVacuum(0.3), Vacuum(), Fock(2)])
    b = BargmannInput.from_input_spec(spec)
    assert b.coefficients[0, 1] == 0.5 + 0.1j
    assert abs(b.coefficients[1, 2] - np.tanh(0.3) / 2) < 1e-15
    assert not any(b.non_gaussian[:3])
    assert b.non_gaussian[3]
    with pytest.raises(NonAnalyticInput):
        BargmannInput([[np.nan]])


def test_all_coherent_always_separable():
    rng = np.random.default_rng(33)
    spec = InputStateSpec([Coherent(1.2), Coherent(-0.3 + 0.8j), Coherent(0.1j)])
    b = BargmannInput.from_input_spec(spec)
    for _ in range(5):
        u = UnitaryMatrix(haar_unitary(rng, 3))
        for subset in ({0}, {1, 2}, {0, 1, 2}):
            assert check_no_entanglement(b, u, subset).separable


def test_equal_squeezing_real_balanced_separable():
    spec = InputStateSpec([SqueezedVacuum(0.15), SqueezedVacuum(0.15)])
    b = BargmannInput.from_input_spec(spec)
    v = check_no_entanglement(b, BALANCED, {0, 1})
    assert v.separable
    assert v.coupled_modes == {0, 1}


def test_opposite_squeezing_fails_with_cross_term_witness():
    lam = squeezing_to_quadratic_coeff(0.15)
    b = BargmannInput([[0, 0, lam], [0, 0, -lam]])
    v = check_no_entanglement(b, BALANCED, {0, 1})
    assert not v.separable
    assert v.witness.kind == "d2_cross_term"
    assert v.witness.order == 2
    # |sum_j lam_j U[j,0] U[j,1]| = lam * (1/2 + 1/2)
    assert abs(v.witness.residual - abs(lam)) < 1e-12


def test_unequal_magnitude_squeezing_not_separable():
    spec = InputStateSpec([SqueezedVacuum(0.3), SqueezedVacuum(0.1)])
    b = BargmannInput.from_input_spec(spec)
    assert not check_no_entanglement(b, BALANCED, {0}).separable


def test_fock_input_on_coupled_mode_not_separable():
    spec = InputStateSpec([Fock(1), Vacuum()])
    b = BargmannInput.from_input_spec(spec)
    v = check_no_entanglement(b, BALANCED, {0})
    assert not v.separable
    assert v.witness.kind == "non_gaussian"
    assert v.witness.modes == (0,)


def test_fock_two_on_coupled_mode_entangles_well_above_threshold():
    spec = InputStateSpec([Fock(2), Vacuum()])
    v = check_no_entanglement(BargmannInput.from_input_spec(spec), BALANCED, {0})
    assert not v.separable
    out = apply_unitary(build_input_state(spec), BALANCED)
    rep = entanglement_report(out, Bipartition((0,), 2))
    assert rep.entropy_bits > 1e-3


def test_higher_order_coefficient_rejected():
    b = BargmannInput([[0, 0, 0, 0.2], [0, 0, 0]])
    v = check_no_entanglement(b, BALANCED, {0})
    assert not v.separable
    assert v.witness.kind == "higher_order"
    assert v.witness.order == 3


def test_uncoupled_mode_freedom():
    rng = np.random.default_rng(34)
    u = block_diag_unitary(BALANCED.matrix, np.array([[np.exp(0.4j)]]))
    base = InputStateSpec([SqueezedVacuum(0.2), SqueezedVacuum(0.2), Vacuum()])
    wild = InputStateSpec([SqueezedVacuum(0.2), SqueezedVacuum(0.2), SqueezedVacuum(0.39)])
    for spec in (base, wild):
        v = check_no_entanglement(BargmannInput.from_input_spec(spec), u, {0, 1})
        assert v.separable
        assert v.coupled_modes == {0, 1}
    # Fock oracle: subset-mode entropies unchanged by squeezing the spectator
    outs = [
        apply_unitary(build_input_state(spec), u) for spec in (base, wild)
    ]
    for k in (0, 1):
        part = Bipartition((k,), 3)
        s0 = entanglement_report(outs[0], part).entropy_bits
        s1 = entanglement_report(outs[1], part).entropy_bits
        assert abs(s0 - s1) < 1e-9


def test_fock_on_uncoupled_mode_is_fine():
    u = block_diag_unitary(BALANCED.matrix, np.eye(1, dtype=complex))
    spec = InputStateSpec([SqueezedVacuum(0.2), SqueezedVacuum(0.2), Fock(2)])
    v = check_no_entanglement(BargmannInput.from_input_spec(spec), u, {0, 1})
    assert v.separable


def test_verdict_invariant_under_paired_rephasing():
    rng = np.random.default_rng(35)
    u = UnitaryMatrix(haar_unitary(rng, 3))
    spec = InputStateSpec([SqueezedVacuum(0.25), SqueezedVacuum(0.25), SqueezedVacuum(0.25)])
    b = BargmannInput.from_input_spec(spec)
    alphas = rng.uniform(0, 2 * np.pi, size=3)
    betas = rng.uniform(0, 2 * np.pi, size=3)
    # relabeling the modes by phases rotates both the network and the
    # input coefficients: lam_j[d] -> lam_j[d] e^{i d alpha_j}
    u2 = UnitaryMatrix(
        np.diag(np.exp(-1j * alphas)) @ u.matrix @ np.diag(np.exp(1j * betas))
    )
    coeffs2 = b.coefficients * np.exp(
        1j * np.outer(alphas, np.arange(b.d_max + 1))
    )
    b2 = BargmannInput(coeffs2, non_gaussian=b.non_gaussian)
    for subset in ({0}, {0, 2}, {0, 1, 2}):
        v1 = check_no_entanglement(b, u, subset)
        v2 = check_no_entanglement(b2, u2, subset)
        assert v1.separable == v2.separable


def test_checker_dimension_mismatch():
    b = BargmannInput([[0, 0, 0.1]])
    with pytest.raises(DimensionMismatch):
        check_no_entanglement(b, BALANCED, {0})


# --------------------------------------------------------------------------
# Gaussian covariance oracle


def test_coherent_covariance_identity_under_any_network():
    rng = np.random.default_rng(36)
    u = UnitaryMatrix(haar_unitary(rng, 3))
    mean, cov = gaussian_covariance_propagate(
        [(0.5, 0.0), (0.2 - 0.1j, 0.0), (0.0, 0.0)], u
    )
    np.testing.assert_allclose(cov, np.eye(6), atol=1e-12)
    assert np.linalg.norm(mean) > 0


def test_equal_squeezing_through_real_orthogonal_stays_uncorrelated():
    rng = np.random.default_rng(37)
    g = rng.normal(size=(3, 3))
    q, _ = np.linalg.qr(g)
    u = UnitaryMatrix(q.astype(complex))
    lam = 0.3
    _, cov = gaussian_covariance_propagate([(0, lam), (0, lam), (0, lam)], u)
    np.testing.assert_allclose(cov, np.diag([np.e ** (2 * lam)] * 3 + [np.e ** (-2 * lam)] * 3), atol=1e-12)


def test_opposite_squeezing_balanced_gives_sinh_correlations():
    lam = 0.3
    _, cov = gaussian_covariance_propagate([(0, lam), (0, -lam)], BALANCED)
    assert abs(cov[0, 1] - np.sinh(2 * lam)) < 1e-12
    assert abs(cov[2, 3] + np.sinh(2 * lam)) < 1e-12
    assert not covariance_separable(cov, Bipartition((0,), 2))


def test_covariance_separable_identity_and_blocks():
    assert covariance_separable(np.eye(4), Bipartition((0,), 2))
    lam1, lam2 = 0.2, 0.4
    cov = np.diag(
        [np.e ** (2 * lam1), np.e ** (2 * lam2), np.e ** (-2 * lam1), np.e ** (-2 * lam2)]
    )
    assert covariance_separable(cov, Bipartition((0,), 2))


def test_covariance_not_pure_raises():
    with pytest.raises(NotPure):
        covariance_separable(2 * np.eye(4), Bipartition((0,), 2))


def test_fock_oracle_matches_gaussian_oracle_on_squeezed_pair():
    lam = 0.3
    spec = InputStateSpec([SqueezedVacuum(lam), SqueezedVacuum(-lam)], cutoff=24)
    out = apply_unitary(build_input_state(spec), BALANCED)
    rep = entanglement_report(out, Bipartition((0,), 2), tol=1e-6)
    assert not rep.separable
    # two-mode squeezed vacuum entropy: cosh^2 log2 cosh^2 - sinh^2 log2 sinh^2
    ch2, sh2 = np.cosh(lam) ** 2, np.sinh(lam) ** 2
    expected = ch2 * np.log2(ch2) - sh2 * np.log2(sh2)
    assert abs(rep.entropy_bits - expected) < 1e-6


def test_agreement_mini_suite():
    res = run_agreement_suite(n_trials=20, seed=11)
    assert res["all_agree"]
    gauss_checked = [t for t in res["trials"] if t["gaussian_separable"] is not None]
    assert gauss_checked, "some trials must exercise the covariance oracle"


def test_verdict_json_schema():
    spec = InputStateSpec([Fock(1), Vacuum()])
    v = check_no_entanglement(BargmannInput.from_input_spec(spec), BALANCED, {0})
    doc = v.to_json()
    assert doc["separable"] is False
    assert doc["witness"]["kind"] == "non_gaussian"
    assert doc["coupled_modes"] == [0, 1]
