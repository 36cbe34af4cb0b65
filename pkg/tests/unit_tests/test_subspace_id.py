import numpy as np
import pytest
from numpy.testing import assert_allclose

from backend.exceptions import DimensionError, ExcitationError
from backend.identification.result import finalize
from backend.identification.subspace_id import (
    SIM_VARIANTS,
    default_block_rows,
    identify_sim,
    recover_state_matrices,
    sim_weights,
)
from backend.lti_model import StateSpaceModel, impulse_response, simulate
from backend.numerics import project_out_rows
from backend.signals import SignalSequence, gen_random
from backend.utils import relative_error


def excite(plant, n_samples=400, seed=0):
    u = gen_random(plant.n_u, n_samples, (-1.0, 1.0), seed=seed)
    return u, simulate(plant, u)


@pytest.mark.parametrize("variant", SIM_VARIANTS)
def test_scalar_lag_markov_parameters(scalar_lag, variant):
    u, y = excite(scalar_lag, 300)
    identified = identify_sim(u, y, k=5, n_r=1, variant=variant)

    assert identified.order == 1
    assert identified.method == variant
    assert identified.model.n_x == 1
    h = impulse_response(identified.model, 10).params[:, 0, 0]
    assert_allclose(h, impulse_response(scalar_lag, 10).params[:, 0, 0], atol=1e-6)
    assert identified.stable


@pytest.mark.parametrize("variant,tolerance", [("n4sid", 1e-5), ("moesp", 1e-5), ("cva", 1e-4)])
def test_mimo_markov_parameters(rng, make_plant, variant, tolerance):
    for trial in range(5):
        n_x = int(rng.integers(2, 5))
        plant = make_plant(n_x, int(rng.integers(1, 3)), int(rng.integers(1, 4)))
        u, y = excite(plant, 500, seed=trial)
        k = default_block_rows(n_x, plant.n_y)
        identified = identify_sim(u, y, n_r=n_x, variant=variant)

        expected = impulse_response(plant, 2 * k).params
        actual = impulse_response(identified.model, 2 * k).params
        assert relative_error(actual, expected) < tolerance


def test_energy_goal_picks_order(scalar_lag):
    u, y = excite(scalar_lag, 300)
    identified = identify_sim(u, y, energy_goal=0.95)
    assert identified.order == 1
    assert identified.diagnostics["block_rows"] == 20
    assert identified.energy_level > 0.95


def test_zero_input_is_not_exciting(scalar_lag):
    u = SignalSequence(np.zeros((1, 100)))
    with pytest.raises(ExcitationError) as info:
        identify_sim(u, simulate(scalar_lag, u), k=4, n_r=1)
    assert info.value.diagnostics["first_block_rank"] == 0


def test_argument_errors(scalar_lag):
    u, y = excite(scalar_lag, 100)
    with pytest.raises(ValueError, match="exactly one"):
        identify_sim(u, y, k=4)
    with pytest.raises(ValueError, match="exceeds"):
        identify_sim(u, y, k=3, n_r=3)
    with pytest.raises(DimensionError):
        identify_sim(u, SignalSequence(y.data[:, :50], kind="output"), k=4, n_r=1)


def test_truncation_residual_monotone(make_plant):
    plant = make_plant(4, 1, 2)
    u, y = excite(plant, 400)
    residuals = [identify_sim(u, y, k=6, n_r=n).diagnostics["truncation_residual"] for n in range(1, 6)]
    assert all(b <= a for a, b in zip(residuals, residuals[1:]))


def test_n4sid_weights_are_identity(rng):
    O = rng.standard_normal((4, 30))
    U_f = rng.standard_normal((2, 30))
    weights = sim_weights("n4sid", rng.standard_normal((4, 30)), U_f)
    assert weights.apply(O, U_f) is O


def test_moesp_weights_fix_orthogonal_rows(rng):
    U_f = rng.standard_normal((2, 30))
    O = project_out_rows(rng.standard_normal((4, 30)), U_f)
    weights = sim_weights("moesp", O, U_f)
    assert_allclose(weights.apply(O, U_f), O, atol=1e-10)


def test_cva_weights_identity_on_whitened_outputs(rng):
    m = 40
    U_f = rng.standard_normal((2, m))
    basis = np.linalg.qr(project_out_rows(rng.standard_normal((3, m)), U_f).T)[0].T
    Y_f = np.sqrt(m) * basis
    weights = sim_weights("cva", Y_f, U_f)

    assert not weights.pseudo_root
    assert_allclose(weights.left, np.eye(3), atol=1e-8)
    assert_allclose(weights.apply(Y_f, U_f), Y_f, atol=1e-8)


def test_unknown_variant(rng):
    with pytest.raises(ValueError):
        sim_weights("pca", rng.standard_normal((2, 5)), rng.standard_normal((1, 5)))


def test_recover_state_matrices_exact(rng, make_plant):
    plant = make_plant(3, 2, 2)
    X = rng.standard_normal((3, 20))
    U = rng.standard_normal((2, 20))
    recovery = recover_state_matrices(X, plant.A @ X + plant.B @ U, U, plant.C @ X + plant.D @ U)

    for name in ("A", "B", "C", "D"):
        assert_allclose(getattr(recovery, name), getattr(plant, name), atol=1e-9)
    assert recovery.residual < 1e-9
    assert not recovery.underdetermined


def test_recover_state_matrices_autonomous(rng):
    A = np.array([[0.6, 0.2], [-0.1, 0.4]])
    X = np.empty((2, 15))
    X[:, 0] = [1.0, -2.0]
    X[:, 1:] = 0.0
    for k in range(14):
        X[:, k + 1] = A @ X[:, k]
    X = np.hstack([X, rng.standard_normal((2, 5))])
    X_next = A @ X
    recovery = recover_state_matrices(X, X_next, np.zeros((1, 20)), X[:1])

    assert_allclose(recovery.A, A, atol=1e-9)
    assert_allclose(recovery.B, 0.0, atol=1e-12)


def test_recover_state_matrices_single_column():
    recovery = recover_state_matrices(np.array([[1.0]]), np.array([[0.5]]), np.array([[2.0]]), np.array([[3.0]]))
    assert recovery.underdetermined
    assert recovery.residual == pytest.approx(0.0, abs=1e-12)


def test_recover_state_matrices_shape_check():
    with pytest.raises(DimensionError):
        recover_state_matrices(np.ones((2, 5)), np.ones((2, 4)), np.ones((1, 5)), np.ones((1, 5)))


def test_finalize_flags_instability():
    unstable = StateSpaceModel([[1.5]], [[1.0]], [[1.0]], [[0.0]])
    identified = finalize(unstable, np.array([2.0, 1.0]), "cva", {})
    assert not identified.stable
    assert identified.diagnostics["spectral_radius"] == pytest.approx(1.5)
    assert identified.energy_level == pytest.approx(2.0 / 3.0)
