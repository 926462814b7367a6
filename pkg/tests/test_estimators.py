import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from qlstm_rc.env import N_ACTIONS, OBS_DIM
from qlstm_rc.estimators import QLSTMReservoir, QuantumA3CAgent


def test_reservoir_transform_shape_and_determinism(rng):
    X = rng.normal(size=(6, 4))
    a = QLSTMReservoir(random_state=3).fit(X).transform(X)
    b = QLSTMReservoir(random_state=3).fit_transform(X)
    assert a.shape == (6, 4)
    np.testing.assert_array_equal(a, b)
    assert np.all(np.abs(a) <= 1.0)


def test_reservoir_params_and_clone():
    est = QLSTMReservoir(n_layers=2, random_state=1)
    assert est.get_params() == {"n_layers": 2, "hidden_dim": 4, "random_state": 1}
    assert clone(est).get_params() == est.get_params()


def test_reservoir_feature_mismatch(rng):
    est = QLSTMReservoir(random_state=0).fit(rng.normal(size=(3, 2)))
    with pytest.raises(ValueError):
        est.transform(rng.normal(size=(3, 4)))


def test_reservoir_not_fitted():
    with pytest.raises(NotFittedError):
        QLSTMReservoir().transform(np.zeros((1, 4)))


def test_agent_fit_predict(rng):
    agent = QuantumA3CAgent(n_workers=1, max_episodes=2, random_state=0)
    assert agent.get_params()["learning_rate"] == 1e-4
    agent.fit()
    assert agent.scores_.shape == (2,) and agent.n_updates_ > 0
    X = rng.integers(0, 3, size=(3, OBS_DIM)).astype(float)
    proba = agent.predict_proba(X)
    assert proba.shape == (3, N_ACTIONS)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert set(agent.predict(X)) <= set(range(N_ACTIONS))
    mean, std = agent.evaluate(episodes=2)
    assert 0.0 <= mean <= 1.0 and std >= 0.0
