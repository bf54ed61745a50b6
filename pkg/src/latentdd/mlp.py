"""Small fully connected ELU network trained by mini-batch SGD.

Used as the full-domain and per-domain baselines. Everything is plain numpy so
training is deterministic for a given seed.
"""
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._container import fmt_float, read_container, write_container
from .dataset import _column_stats
from .errors import DimMismatch, NonFiniteLoss, UndersizedDomain

MLP_FORMAT_VERSION = 1

# architecture / optimiser presets; "desk" is a small one for quick runs
PRESETS = {
    "case1": {"layer_sizes": (10,), "batch_size": 10, "epochs": 2000,
              "full_lr": 5.33e-6, "domain_lrs": (3.55e-5, 3.55e-5, 3.55e-7)},
    "case2": {"layer_sizes": (3087,), "batch_size": 50, "epochs": 2000,
              "full_lr": 1.4e-3, "domain_lrs": (4.72e-5, 4.72e-6),
              "domain_batch_size": 20},
    "appendix3": {"layer_sizes": (1345, 3680), "batch_size": 50, "epochs": 2000,
                  "full_lr": 1.11e-7, "domain_lrs": (1.24e-7, 1.24e-6, 6.2e-9),
                  "domain_batch_sizes": (30, 30, 5)},
    "desk": {"layer_sizes": (32,), "batch_size": 20, "epochs": 200,
             "full_lr": 1e-3, "domain_lrs": (1e-3,)},
}


def elu(z):
    return np.where(z > 0, z, np.expm1(np.minimum(z, 0.0)))


def elu_grad(z):
    return np.where(z > 0, 1.0, np.exp(np.minimum(z, 0.0)))


@dataclass(frozen=True)
class MlpConfig:
    layer_sizes: tuple = (10,)
    activation: str = "elu"
    learning_rate: float = 1e-3
    batch_size: int = 10
    epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "layer_sizes", tuple(int(s) for s in self.layer_sizes))
        if any(s < 1 for s in self.layer_sizes):
            raise ValueError("layer sizes must be positive")
        if self.activation != "elu":
            raise ValueError("only the ELU activation is supported")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")


@dataclass
class MlpModel:
    weights: list
    biases: list
    config: MlpConfig
    loss_history: list = field(default_factory=list)

    @property
    def n_inputs(self):
        return self.weights[0].shape[0]

    @property
    def n_outputs(self):
        return self.weights[-1].shape[1]

    def forward(self, X, keep=False):
        a = X
        cache = []
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ W + b
            cache.append((a, z))
            a = elu(z)
        out = a @ self.weights[-1] + self.biases[-1]
        cache.append((a, None))
        return (out, cache) if keep else out

    def loss_and_grads(self, X, Y):
        """Mean squared error over all entries and its parameter gradients."""
        out, cache = self.forward(X, keep=True)
        diff = out - Y
        loss = float(np.mean(diff ** 2))
        delta = 2.0 * diff / diff.size
        gW, gb = [None] * len(self.weights), [None] * len(self.biases)
        for layer in range(len(self.weights) - 1, -1, -1):
            a, _ = cache[layer]
            gW[layer] = a.T @ delta
            gb[layer] = delta.sum(axis=0)
            if layer:
                _, z_prev = cache[layer - 1]
                delta = (delta @ self.weights[layer].T) * elu_grad(z_prev)
        return loss, gW, gb


def init_model(n_in, n_out, cfg):
    rng = np.random.default_rng(cfg.seed)
    sizes = (n_in,) + cfg.layer_sizes + (n_out,)
    weights = [rng.uniform(-1.0, 1.0, size=(a, b)) / np.sqrt(a)
               for a, b in zip(sizes[:-1], sizes[1:])]
    biases = [np.zeros(b) for b in sizes[1:]]
    return MlpModel(weights, biases, cfg), rng


def train_mlp(X, Y, cfg=MlpConfig()):
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Y = Y.reshape(-1, 1) if Y.ndim == 1 else Y
    n = len(X)
    if n < cfg.batch_size:
        raise ValueError(f"need at least batch_size={cfg.batch_size} rows, got {n}")
    model, rng = init_model(X.shape[1], Y.shape[1], cfg)
    with np.errstate(over="ignore", invalid="ignore"):
        _sgd(model, X, Y, cfg, rng)
    return model


def _sgd(model, X, Y, cfg, rng):
    n, lr = len(X), cfg.learning_rate
    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            sel = perm[start:start + cfg.batch_size]
            _, gW, gb = model.loss_and_grads(X[sel], Y[sel])
            for W, g in zip(model.weights, gW):
                W -= lr * g
            for b, g in zip(model.biases, gb):
                b -= lr * g
        loss = float(np.mean((model.forward(X) - Y) ** 2))
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"loss became {loss} at epoch {epoch} (lr={lr})")
        model.loss_history.append(loss)


def mlp_predict(model, X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_inputs:
        raise DimMismatch(f"expected {model.n_inputs} columns, got {X.shape[1]}")
    return model.forward(X)


class ELUNetRegressor(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`train_mlp` with internal standardization."""

    def __init__(self, layer_sizes=(10,), learning_rate=1e-3, batch_size=10,
                 epochs=100, seed=0, standardize=True):
        self.layer_sizes = layer_sizes
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.seed = seed
        self.standardize = standardize

    def fit(self, X, y):
        X = check_array(X)
        Y = check_array(y, ensure_2d=False)
        Y = Y.reshape(-1, 1) if Y.ndim == 1 else Y
        if self.standardize:
            self.x_mean_, self.x_std_, _ = _column_stats(X)
            self.y_mean_, self.y_std_, _ = _column_stats(Y)
        else:
            self.x_mean_, self.x_std_ = np.zeros(X.shape[1]), np.ones(X.shape[1])
            self.y_mean_, self.y_std_ = np.zeros(Y.shape[1]), np.ones(Y.shape[1])
        cfg = MlpConfig(self.layer_sizes, "elu", self.learning_rate,
                        self.batch_size, self.epochs, self.seed)
        self.model_ = train_mlp((X - self.x_mean_) / self.x_std_,
                                (Y - self.y_mean_) / self.y_std_, cfg)
        self.n_features_in_ = X.shape[1]
        self.n_outputs_ = Y.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X)
        Y = mlp_predict(self.model_, (X - self.x_mean_) / self.x_std_)
        Y = Y * self.y_std_ + self.y_mean_
        return Y[:, 0] if self.n_outputs_ == 1 else Y


def train_per_domain(X, Y, domains, cfgs, min_points=2):
    """Train one model per domain label; ``cfgs`` is reused cyclically from its end."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    Y = Y.reshape(-1, 1) if Y.ndim == 1 else Y
    domains = np.asarray(domains)
    models = []
    for i, d in enumerate(np.unique(domains)):
        sel = domains == d
        if sel.sum() < min_points:
            raise UndersizedDomain(f"domain {d} has {int(sel.sum())} rows < {min_points}")
        cfg = cfgs[min(i, len(cfgs) - 1)]
        if sel.sum() < cfg.batch_size:
            cfg = MlpConfig(cfg.layer_sizes, cfg.activation, cfg.learning_rate,
                            int(sel.sum()), cfg.epochs, cfg.seed)
        models.append(train_mlp(X[sel], Y[sel], cfg))
    return models


class DomainMLPRegressor(RegressorMixin, BaseEstimator):
    """One network per decomposed domain, queries routed by ``router.domain_of``.

    ``router`` is a fitted :class:`~latentdd.predict.LatentManifoldRegressor`
    whose training rows are the ``X`` passed to :meth:`fit`.
    """

    def __init__(self, router=None, configs=(MlpConfig(),), min_points=2,
                 standardize=True):
        self.router = router
        self.configs = configs
        self.min_points = min_points
        self.standardize = standardize

    def fit(self, X, y):
        X = check_array(X)
        Y = check_array(y, ensure_2d=False)
        Y = Y.reshape(-1, 1) if Y.ndim == 1 else Y
        if self.router is None:
            self.domain_ids_ = np.zeros(1, dtype=int)
            train_domains = np.zeros(len(X), dtype=int)
        else:
            train_domains = self.router.training_domains_
            if len(train_domains) != len(X):
                raise DimMismatch("router was fitted on a different training set")
            self.domain_ids_ = np.unique(train_domains)
        if self.standardize:
            self.x_mean_, self.x_std_, _ = _column_stats(X)
            self.y_mean_, self.y_std_, _ = _column_stats(Y)
        else:
            self.x_mean_, self.x_std_ = np.zeros(X.shape[1]), np.ones(X.shape[1])
            self.y_mean_, self.y_std_ = np.zeros(Y.shape[1]), np.ones(Y.shape[1])
        self.models_ = train_per_domain((X - self.x_mean_) / self.x_std_,
                                        (Y - self.y_mean_) / self.y_std_,
                                        train_domains, list(self.configs),
                                        self.min_points)
        self.n_outputs_ = Y.shape[1]
        return self

    def domain_of(self, X):
        check_is_fitted(self, "models_")
        if self.router is None:
            return np.zeros(len(X), dtype=int)
        return self.router.domain_of(X)

    def predict(self, X):
        check_is_fitted(self, "models_")
        X = check_array(X)
        doms = self.domain_of(X)
        Xs = (X - self.x_mean_) / self.x_std_
        out = np.empty((len(X), self.n_outputs_))
        for model, d in zip(self.models_, self.domain_ids_):
            sel = doms == d
            if sel.any():
                out[sel] = mlp_predict(model, Xs[sel])
        out = out * self.y_std_ + self.y_mean_
        return out[:, 0] if self.n_outputs_ == 1 else out


def save_mlp(model, path):
    arrays = {}
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"W{i}"] = W
        arrays[f"b{i}"] = b
    arrays["loss_history"] = np.asarray(model.loss_history, dtype=float)
    cfg = asdict(model.config)
    cfg["layer_sizes"] = list(cfg["layer_sizes"])
    write_container(path, "mlp", MLP_FORMAT_VERSION,
                    {"config": cfg, "n_layers": len(model.weights)}, arrays)


def load_mlp(path):
    meta, arrays = read_container(path, "mlp", MLP_FORMAT_VERSION)
    n = meta["n_layers"]
    return MlpModel([arrays[f"W{i}"] for i in range(n)],
                    [arrays[f"b{i}"] for i in range(n)],
                    MlpConfig(**meta["config"]),
                    arrays["loss_history"].tolist())


def export_loss_csv(model, path):
    with open(path, "w") as fh:
        fh.write("epoch,loss\n")
        for i, loss in enumerate(model.loss_history):
            fh.write(f"{i + 1},{fmt_float(loss)}\n")
