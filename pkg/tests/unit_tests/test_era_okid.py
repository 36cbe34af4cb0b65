import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from backend.exceptions import ExcitationError, InsufficientDataError, RealizationError
from backend.identification.era_okid import (
    EraConfig,
    default_era_config,
    era,
    markov_from_impulse,
    markov_hankel,
    okid_era,
    okid_markov,
    read_markov_csv,
    write_markov_csv,
)
from backend.lti_model import cascade, impulse_response, simulate
from backend.signals import MarkovSequence, SignalSequence, gen_impulse, gen_random, gen_rectangular
from backend.utils import relative_error


def scalar_markov(values):
    return MarkovSequence(np.asarray(values, dtype=float)[:, np.newaxis, np.newaxis])


def test_era_halving_sequence():
    identified = era(scalar_markov([0.0, 1.0, 0.5, 0.25, 0.125]), EraConfig(1, 1, n_r=1))
    model = identified.model
    assert_allclose(model.A, [[0.5]], atol=1e-12)
    assert_allclose(model.C @ model.B, [[1.0]], atol=1e-12)
    assert_allclose(model.D, [[0.0]])
    assert identified.diagnostics["hankel_rank"] == 1


def test_markov_hankel_layout():
    h = scalar_markov(np.arange(8.0))
    assert_array_equal(markov_hankel(h, 1, 2), [[1, 2, 3], [2, 3, 4]])
    assert_array_equal(markov_hankel(h, 1, 2, shift=1), [[2, 3, 4], [3, 4, 5]])


def test_markov_hankel_mimo_blocks(rng):
    h = MarkovSequence(rng.standard_normal((8, 2, 3)))
    H = markov_hankel(h, 2, 1)
    assert H.shape == (6, 6)
    assert_array_equal(H[2:4, 3:6], h[3])


def test_default_era_config():
    cfg = default_era_config(10, n_r=2)
    assert (cfg.m_o, cfg.m_c, cfg.n_r) == (3, 4, 2)
    assert cfg.required_parameters == 10
    with pytest.raises(InsufficientDataError):
        default_era_config(4)


def test_era_config_bounds():
    with pytest.raises(ValueError):
        EraConfig(0, 2)
    with pytest.raises(ValueError):
        EraConfig(2, 2, n_r=0)


def test_era_round_trip_random_plants(rng, make_plant):
    for _ in range(50):
        n_x = int(rng.integers(2, 11))
        plant = make_plant(n_x, int(rng.integers(1, 3)), int(rng.integers(1, 4)),
                           radius=0.9, orthogonal=True)
        h = impulse_response(plant, 80)
        identified = era(h, default_era_config(len(h), n_r=n_x))

        assert identified.order == n_x
        assert_array_equal(identified.model.D, plant.D)
        realized = impulse_response(identified.model, 20).params
        assert relative_error(realized, h.params[:21]) < 1e-8


def test_era_balanced_gramians(make_plant):
    plant = make_plant(4, 1, 2)
    h = impulse_response(plant, 40)
    cfg = default_era_config(len(h), n_r=4)
    identified = era(h, cfg)
    A, B, C = identified.model.A, identified.model.B, identified.model.C

    observability = sum(np.linalg.matrix_power(A, i).T @ C.T @ C @ np.linalg.matrix_power(A, i)
                        for i in range(cfg.m_o + 1))
    controllability = sum(np.linalg.matrix_power(A, j) @ B @ B.T @ np.linalg.matrix_power(A, j).T
                          for j in range(cfg.m_c + 1))
    sigma = np.diag(identified.singular_values[:4])
    assert_allclose(observability, sigma, atol=1e-8 * sigma[0, 0])
    assert_allclose(controllability, sigma, atol=1e-8 * sigma[0, 0])


def test_era_carries_time_step(scalar_lag):
    h = impulse_response(scalar_lag, 20)
    assert era(h, default_era_config(len(h), n_r=1)).model.dt == 1.0
    assert era(h, default_era_config(len(h), n_r=1), dt=15.0).model.dt == 15.0


def test_era_keeps_markov_parameters(scalar_lag):
    h = impulse_response(scalar_lag, 20)
    assert era(h, default_era_config(len(h), n_r=1)).markov is h


def test_era_energy_goal(scalar_lag):
    h = impulse_response(scalar_lag, 20)
    identified = era(h, default_era_config(len(h)), energy_goal=0.95)
    assert identified.order == 1


def test_era_zero_hankel():
    with pytest.raises(RealizationError):
        era(scalar_markov([1.0, 0.0, 0.0, 0.0, 0.0, 0.0]), EraConfig(1, 2, n_r=1))


def test_era_order_errors(scalar_lag):
    h = impulse_response(scalar_lag, 10)
    with pytest.raises(RealizationError, match="numerical rank"):
        era(h, EraConfig(3, 3, n_r=2))
    with pytest.raises(ValueError, match="Hankel limit"):
        era(h, EraConfig(1, 1, n_r=3))
    with pytest.raises(ValueError, match="exactly one"):
        era(h, EraConfig(1, 1))
    with pytest.raises(InsufficientDataError):
        era(scalar_markov([0.0, 1.0, 0.5]), EraConfig(1, 1, n_r=1))


def test_okid_impulse_gives_outputs(make_plant):
    plant = make_plant(3)
    y = simulate(plant, gen_impulse(1, 30))
    h = okid_markov(gen_impulse(1, 30), y)
    assert h.horizon == 29
    assert_allclose(h.params[:, 0, 0], y.data[0], atol=1e-12)


def test_okid_rectangular_pulse(scalar_lag):
    u = gen_rectangular(1, 40, 0, 1.0, 0, 5)
    h = okid_markov(u, simulate(scalar_lag, u))
    assert_allclose(h.params, impulse_response(scalar_lag, 39).params, atol=1e-8)


def test_okid_mimo_random_input(make_plant):
    plant = make_plant(4, 2, 2)
    u = gen_random(2, 400, (-1.0, 1.0), seed=7)
    h = okid_markov(u, simulate(plant, u), m=80)
    assert relative_error(h.params[:20], impulse_response(plant, 19).params) < 1e-6


def test_okid_rank_deficient_input(scalar_lag):
    u = SignalSequence(np.zeros((1, 20)))
    with pytest.raises(ExcitationError) as info:
        okid_markov(u, simulate(scalar_lag, u))
    assert info.value.diagnostics["required"] == 20


def test_okid_default_horizon_mimo(make_plant):
    plant = make_plant(4, 2, 2)
    u = gen_random(2, 400, (-1.0, 1.0), seed=7)
    h = okid_markov(u, simulate(plant, u))
    assert h.horizon <= 199
    assert relative_error(h.params[:20], impulse_response(plant, 19).params) < 1e-6


def test_okid_default_horizon_long_random_record(make_plant):
    plant = make_plant(3, 1, 1)
    u = gen_random(1, 2000, (-1.0, 1.0), seed=5)
    h = okid_markov(u, simulate(plant, u))
    assert h.horizon < 1999
    assert relative_error(h.params[:20], impulse_response(plant, 19).params) < 1e-6


def test_okid_explicit_horizon_is_not_shortened():
    u = gen_random(2, 20, seed=1)
    with pytest.raises(ExcitationError) as info:
        okid_markov(u, SignalSequence(np.zeros((1, 20))), m=10)
    assert info.value.diagnostics["horizon"] == 10


def test_okid_era_round_trip_random_plants(rng, make_plant):
    for seed in range(50):
        n_x = int(rng.integers(2, 11))
        n_u = int(rng.integers(1, 3))
        plant = make_plant(n_x, n_u, int(rng.integers(1, 4)), radius=0.8, orthogonal=True)
        u = gen_random(n_u, 600, (-1.0, 1.0), seed=seed)
        identified = okid_era(u, simulate(plant, u), n_r=n_x)

        realized = impulse_response(identified.model, 19).params
        assert relative_error(realized, impulse_response(plant, 19).params) < 1e-6


def test_okid_era_carries_time_step(make_plant):
    plant = make_plant(3, 1, 1, dt=15.0)
    u = gen_random(1, 300, (-1.0, 1.0), seed=2, dt=15.0)
    identified = okid_era(u, simulate(plant, u), n_r=3)

    assert identified.model.dt == 15.0
    assert identified.markov.horizon == identified.diagnostics["okid_horizon"]
    series = cascade(plant, identified.model)
    assert series.dt == 15.0


def test_okid_horizon_longer_than_record(scalar_lag):
    u = gen_impulse(1, 10)
    with pytest.raises(InsufficientDataError):
        okid_markov(u, simulate(scalar_lag, u), m=10)


def test_okid_era_recovers_plant(make_plant):
    plant = make_plant(5, 1, 2)
    u = gen_random(1, 400, (-1.0, 1.0), seed=3)
    identified = okid_era(u, simulate(plant, u), m=80, n_r=5)

    assert identified.method == "okid-era"
    assert identified.diagnostics["okid_horizon"] == 80
    assert identified.diagnostics["okid_samples"] == 400
    realized = impulse_response(identified.model, 19).params
    assert relative_error(realized, impulse_response(plant, 19).params) < 1e-6


def test_okid_era_keeps_feedthrough(make_plant):
    plant = make_plant(2, 1, 1)
    u = gen_impulse(1, 30)
    y = simulate(plant, u)
    identified = okid_era(u, y, n_r=2)
    assert_allclose(identified.model.D, okid_markov(u, y)[0], atol=0)


def test_markov_from_impulse(make_plant):
    plant = make_plant(3, 2, 2)
    amplitude = 2.5
    responses = [simulate(plant, gen_impulse(2, 12, channel, amplitude)) for channel in range(2)]
    h = markov_from_impulse(responses, amplitude)
    assert_allclose(h.params, impulse_response(plant, 11).params, atol=1e-12)


def test_markov_from_impulse_errors(scalar_lag):
    with pytest.raises(ValueError):
        markov_from_impulse([])
    with pytest.raises(ValueError):
        markov_from_impulse([simulate(scalar_lag, gen_impulse(1, 5))], amplitude=0.0)


def test_markov_csv_round_trip(tmp_path, rng):
    h = MarkovSequence(rng.standard_normal((15, 2, 3)))
    path = tmp_path / "markov.csv"
    write_markov_csv(h, str(path))

    header = path.read_text().splitlines()[0].split(",")
    assert header[:3] == ["k", "h0_0", "h0_1"]
    assert_array_equal(read_markov_csv(str(path)).params, h.params)
