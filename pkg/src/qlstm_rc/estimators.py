"""scikit-learn compatible wrappers around the QLSTM reservoir and the agent."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .a3c import Hyperparams, moving_average, train
from .experiment import evaluate_policy, parse_scenario
from .model import DressedModel
from .nets import softmax
from .qlstm import QlstmCell, QlstmState


class QLSTMReservoir(TransformerMixin, BaseEstimator):
    """Frozen random QLSTM used as a sequence feature map.

    ``transform`` runs the cell over the rows of ``X`` (one time step per row)
    from a zero state and returns the hidden output of every step.

    Parameters
    ----------
    n_layers : int, default=1
        Variational layers per VQC.
    hidden_dim : int, default=4
        Hidden width; each VQC acts on ``n_features + hidden_dim`` qubits.
    random_state : int or None
        Seed for the frozen VQC angles.
    """

    def __init__(self, n_layers=1, hidden_dim=4, random_state=None):
        self.n_layers = n_layers
        self.hidden_dim = hidden_dim
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        self.cell_ = QlstmCell(
            self.n_layers, "reservoir", input_dim=self.n_features_in_,
            hidden_dim=self.hidden_dim, rng=np.random.default_rng(self.random_state),
        )
        return self

    def transform(self, X):
        check_is_fitted(self, "cell_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        state = QlstmState.zeros(self.hidden_dim, self.cell_.cell_dim)
        return self.cell_.run(X, state)[0]


class QuantumA3CAgent(BaseEstimator):
    """Dressed QLSTM actor-critic trained by asynchronous advantage actor-critic.

    ``fit`` ignores ``X`` and ``y``: the data come from interacting with the
    configured MiniGrid-Empty scenario. ``predict`` maps an observation
    sequence (one 147-vector per row, a single episode) to greedy actions.
    """

    def __init__(self, scenario="empty5-fixed", mode="reservoir", n_layers=1, n_workers=8,
                 max_episodes=3000, learning_rate=1e-4, beta1=0.92, beta2=0.999, gamma=0.9,
                 lookup_steps=5, value_loss_coef=0.5, entropy_coef=0.0,
                 grad_method="adjoint", random_state=0):
        self.scenario = scenario
        self.mode = mode
        self.n_layers = n_layers
        self.n_workers = n_workers
        self.max_episodes = max_episodes
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.gamma = gamma
        self.lookup_steps = lookup_steps
        self.value_loss_coef = value_loss_coef
        self.entropy_coef = entropy_coef
        self.grad_method = grad_method
        self.random_state = random_state

    def _hyperparams(self) -> Hyperparams:
        return Hyperparams(
            learning_rate=self.learning_rate, beta1=self.beta1, beta2=self.beta2,
            gamma=self.gamma, lookup_steps=self.lookup_steps, n_workers=self.n_workers,
            value_loss_coef=self.value_loss_coef, entropy_coef=self.entropy_coef,
            max_episodes=self.max_episodes,
        )

    def _new_model(self) -> DressedModel:
        return DressedModel(self.n_layers, self.mode, seed=self.random_state,
                            grad_method=self.grad_method)

    def fit(self, X=None, y=None):
        seed = 0 if self.random_state is None else int(self.random_state)
        env_config = parse_scenario(self.scenario, seed)
        store = train(self._new_model, env_config, self._hyperparams(), seed=seed)
        self.model_ = self._new_model()
        self.model_.set_flat(store.params)
        self.scores_ = np.array([s[2] for s in sorted(store.scores)])
        self.moving_average_ = moving_average(self.scores_, 100)
        self.n_updates_ = store.step
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        state = self.model_.initial_state()
        probs = []
        for obs in X:
            out = self.model_.step(obs, state)
            probs.append(softmax(out.logits))
            state = out.state
        return np.array(probs)

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def evaluate(self, episodes=100, seed=0):
        """Mean and standard deviation of greedy episode scores."""
        check_is_fitted(self, "model_")
        scores = evaluate_policy(self.model_, parse_scenario(self.scenario, seed), episodes, seed)
        return float(scores.mean()), float(scores.std())

    def score(self, X=None, y=None):
        return self.evaluate()[0]
