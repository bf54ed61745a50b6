"""Learning and prediction in the latent space of the stretched manifold.

Prediction for a query ``x`` follows

    y_hat = destandardize(inverse_y(g_b(Phi_b(project_x(x)))))

where ``b`` is the branch of the training point nearest to ``x``, ``Phi_b``
that branch's mirror map and ``g_b`` a piecewise-linear interpolant through
the branch's stretched points.
"""
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._container import fmt_float, read_container, write_container
from .dataset import _column_stats
from .decompose import (DecompositionConfig, SegmentDecomposition,
                        classify_index, lissda)
from .errors import DimMismatch, EmptyTraining
from .ipca import IterativePCA, projector_from_arrays, projector_to_arrays
from .manifold import (BranchedDomain, Curve1M, StretchedManifold,
                       ball_pivot, extract_connected_curve, find_turning_points,
                       stretch)

PREDICTOR_FORMAT_VERSION = 1
INVERSE_MODES = ("pinv", "complement", "none")


def dedupe_knots(x, y):
    """Sort knots by ``x`` and average ``y`` over exactly repeated ``x``."""
    xs, inv = np.unique(np.asarray(x, dtype=float), return_inverse=True)
    ys = np.bincount(inv, weights=y) / np.bincount(inv)
    return xs, ys


def nearest_rows(queries, train, curve_rank):
    """Index of the nearest training row per query; ties go to the lower curve rank."""
    tree = cKDTree(train)
    d, _ = tree.query(queries, k=1)
    out = np.empty(len(queries), dtype=int)
    for i, (q, dmin) in enumerate(zip(queries, d)):
        cand = tree.query_ball_point(q, dmin * (1 + 1e-12) + 1e-300)
        cand = np.asarray(cand, dtype=int)
        dist = np.linalg.norm(train[cand] - q, axis=1)
        cand = cand[dist == dist.min()]
        out[i] = cand[np.argmin(curve_rank[cand])]
    return out


def nearest_rows_bruteforce(queries, train, curve_rank):
    D = cdist(queries, train)
    out = np.empty(len(queries), dtype=int)
    for i, row in enumerate(D):
        cand = np.flatnonzero(row == row.min())
        out[i] = cand[np.argmin(curve_rank[cand])]
    return out


class LatentManifoldRegressor(RegressorMixin, BaseEstimator):
    """Regressor that interpolates on the stretched 1-manifold of the data.

    Parameters
    ----------
    reducer : {"ipca", "pca"}
        Iterative reduction, or a single SVD step (classical PCA).
    evr_floor, fallback_drop : float, int
        Iterative PCA schedule, see :class:`~latentdd.ipca.IterativePCA`.
    radius : float, optional
        Ball-pivoting radius in unit-box coordinates.
    radius_factor : float
        Radius as a multiple of the median nearest-neighbour distance, used
        when ``radius`` is None.
    gamma : float
        Line-similarity constant for the domain decomposition.
    min_points_per_domain : int
    inverse_mode : {"pinv", "complement", "none"}
        Output inverse projection. ``"none"`` is only valid for scalar outputs,
        which are never reduced.
    k_nn : int
        Neighbours for the complement inverse.
    standardize : bool
        Standardize inputs and outputs with training statistics internally.
    """

    def __init__(self, reducer="ipca", evr_floor=0.9, fallback_drop=1,
                 radius=None, radius_factor=3.0, gamma=4.0,
                 min_points_per_domain=100, inverse_mode="pinv", k_nn=1,
                 standardize=True, check_connected=False):
        self.reducer = reducer
        self.evr_floor = evr_floor
        self.fallback_drop = fallback_drop
        self.radius = radius
        self.radius_factor = radius_factor
        self.gamma = gamma
        self.min_points_per_domain = min_points_per_domain
        self.inverse_mode = inverse_mode
        self.k_nn = k_nn
        self.standardize = standardize
        self.check_connected = check_connected

    def _reducer(self):
        if self.reducer not in ("ipca", "pca"):
            raise ValueError(f"unknown reducer {self.reducer!r}")
        return IterativePCA(1, self.evr_floor, self.fallback_drop,
                            single_step=self.reducer == "pca",
                            inverse_method="complement" if self.inverse_mode == "complement" else "pinv",
                            k_nn=self.k_nn)

    def fit(self, X, y):
        X = check_array(X, ensure_min_samples=3)
        Y = check_array(y, ensure_2d=False)
        Y = Y.reshape(-1, 1) if Y.ndim == 1 else Y
        if len(Y) != len(X):
            raise DimMismatch(f"X has {len(X)} rows, y has {len(Y)}")
        if self.inverse_mode not in INVERSE_MODES:
            raise ValueError(f"unknown inverse_mode {self.inverse_mode!r}")
        q = Y.shape[1]
        if self.inverse_mode == "none" and q > 1:
            raise ValueError("inverse_mode='none' requires a scalar output")

        if self.standardize:
            self.x_mean_, self.x_std_, _ = _column_stats(X)
            self.y_mean_, self.y_std_, _ = _column_stats(Y)
        else:
            self.x_mean_, self.x_std_ = np.zeros(X.shape[1]), np.ones(X.shape[1])
            self.y_mean_, self.y_std_ = np.zeros(q), np.ones(q)
        Xs = (X - self.x_mean_) / self.x_std_
        Ys = (Y - self.y_mean_) / self.y_std_

        self.proj_x_ = self._reducer().fit(Xs)
        x_tilde = self.proj_x_.transform(Xs)[:, 0]
        if q > 1:
            self.proj_y_ = self._reducer().fit(Ys)
            y_tilde = self.proj_y_.transform(Ys)[:, 0]
        else:
            self.proj_y_ = None
            y_tilde = Ys[:, 0]

        cloud = np.column_stack([x_tilde, y_tilde])
        self.edges_ = ball_pivot(cloud, self.radius, self.radius_factor,
                                 check_connected=self.check_connected)
        curve = extract_connected_curve(self.edges_, cloud)
        self.manifold_ = stretch(curve)
        self.decomposition_ = lissda(
            self.manifold_, DecompositionConfig(self.gamma, self.min_points_per_domain))
        self.X_train_ = Xs
        self.n_features_in_ = X.shape[1]
        self.n_outputs_ = q
        self._finalize()
        return self

    def _finalize(self):
        sm = self.manifold_
        self.curve_rank_ = np.empty(len(sm), dtype=int)
        self.curve_rank_[sm.source.order] = np.arange(len(sm))
        self.knots_ = [dedupe_knots(sm.x[b.start:b.end + 1], sm.y[b.start:b.end + 1])
                       for b in sm.branches]

    # latent-space pieces ---------------------------------------------------

    def _standardize_x(self, X):
        check_is_fitted(self, "manifold_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise DimMismatch(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return (X - self.x_mean_) / self.x_std_

    def nearest_training(self, X, standardized=False):
        Xs = X if standardized else self._standardize_x(X)
        if len(self.X_train_) == 0:
            raise EmptyTraining("no training points")
        return nearest_rows(Xs, self.X_train_, self.curve_rank_)

    def classify_bpd(self, X):
        """Branch of each query, via its nearest training point."""
        idx = self.nearest_training(X)
        return [self.manifold_.branch_of_index(self.curve_rank_[i]) for i in idx]

    def domain_of(self, X):
        """Decomposed-domain id of each query, via its nearest training point."""
        idx = self.nearest_training(X)
        return np.array([classify_index(self.decomposition_, self.curve_rank_[i]) for i in idx])

    @property
    def training_domains_(self):
        labels = self.decomposition_.labels()
        return labels[self.curve_rank_]

    def latent(self, X):
        """Return ``(x_bar, y_bar, branch_ids, clamped)`` for queries ``X``."""
        Xs = self._standardize_x(X)
        x_tilde = self.proj_x_.transform(Xs)[:, 0]
        idx = nearest_rows(Xs, self.X_train_, self.curve_rank_)
        m = len(Xs)
        x_bar, y_bar = np.empty(m), np.empty(m)
        bids = np.empty(m, dtype=int)
        clamped = np.zeros(m, dtype=bool)
        for i in range(m):
            br = self.manifold_.branch_of_index(self.curve_rank_[idx[i]])
            xb = float(br.apply(x_tilde[i]))
            lo, hi = min(br.lo, br.hi), max(br.lo, br.hi)
            if xb < lo or xb > hi:
                clamped[i] = True
                xb = min(max(xb, lo), hi)
            kx, ky = self.knots_[br.id]
            x_bar[i], y_bar[i], bids[i] = xb, np.interp(xb, kx, ky), br.id
        return x_bar, y_bar, bids, clamped

    def predict(self, X):
        _, y_bar, _, _ = self.latent(X)
        Z = y_bar[:, None]
        if self.proj_y_ is not None:
            Z = self.proj_y_.inverse_transform(Z, method=self.inverse_mode, k_nn=self.k_nn)
        Y = Z * self.y_std_ + self.y_mean_
        return Y[:, 0] if self.n_outputs_ == 1 else Y


def fit_predictor(train, **params):
    """Fit a :class:`LatentManifoldRegressor` on a (standardized) dataset."""
    X, Y = train.raw()
    return LatentManifoldRegressor(**params).fit(X, Y)


# error metrics -------------------------------------------------------------

@dataclass
class ErrorReport:
    method: str
    mean_relative_error: float
    variance: float
    per_domain: list = field(default_factory=list)
    weighted_error: float = float("nan")
    inference_time_seconds: float = float("nan")
    errors: np.ndarray = None


def sample_errors(Y, Y_hat, metric="relative_l2"):
    Y = np.asarray(Y, dtype=float).reshape(len(Y), -1)
    Y_hat = np.asarray(Y_hat, dtype=float).reshape(len(Y), -1)
    if metric == "relative_l2":
        num = np.linalg.norm(Y - Y_hat, axis=1)
        den = np.linalg.norm(Y, axis=1)
    elif metric == "linf":
        num = np.max(np.abs(Y - Y_hat), axis=1)
        den = np.max(np.abs(Y), axis=1)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0),
                        np.where(num > 0, np.inf, 0.0))


def weighted_error(per_domain):
    """``sum N_i R_i / sum N_i`` over ``(domain, N_i, R_i)`` rows."""
    total = sum(n for _, n, _ in per_domain)
    if total == 0:
        return float("nan")
    return float(sum(n * r for _, n, r in per_domain) / total)


def error_report(method, Y, Y_hat, domains=None, metric="relative_l2",
                 inference_time=float("nan")):
    err = sample_errors(Y, Y_hat, metric)
    per = []
    if domains is not None:
        domains = np.asarray(domains)
        for d in np.unique(domains):
            sel = domains == d
            per.append((int(d), int(sel.sum()), float(err[sel].mean())))
    return ErrorReport(method, float(err.mean()), float(err.var()), per,
                       weighted_error(per) if per else float(err.mean()),
                       inference_time, err)


def evaluate(pred, test, metric="relative_l2", method="interpolant"):
    """Score ``pred`` on a test dataset (standardized with training statistics)."""
    X, Y = test.raw()
    t0 = time.perf_counter()
    Y_hat = pred.predict(X)
    elapsed = (time.perf_counter() - t0) / max(len(X), 1)
    domains = pred.domain_of(X) if hasattr(pred, "domain_of") else None
    return error_report(method, Y, Y_hat, domains, metric, elapsed)


def format_table(reports, title="Relative error"):
    """Aligned plain-text table: method, mean, variance, t(s)."""
    def cell(v, spec):
        return "-" if np.isnan(v) else format(v, spec)

    rows = [(r.method, cell(r.mean_relative_error, ".4g"), cell(r.variance, ".4g"),
             cell(r.inference_time_seconds, ".2e")) for r in reports]
    head = (title, "Mean", "Variance", "t(s)")
    widths = [max(len(str(row[i])) for row in rows + [head]) for i in range(4)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*head), "  ".join("-" * w for w in widths)]
    lines += [fmt.format(*row) for row in rows]
    return "\n".join(lines) + "\n"


def reports_to_csv(reports, path):
    """Write the numeric columns of ``reports``; wall-clock time is left out."""
    with open(path, "w") as fh:
        fh.write("method,mean,variance,weighted_error,n_test\n")
        for r in reports:
            n = len(r.errors) if r.errors is not None else 0
            nums = ",".join(fmt_float(v) for v in
                            (r.mean_relative_error, r.variance, r.weighted_error))
            fh.write(f"{r.method},{nums},{n}\n")


def per_domain_to_csv(reports, path):
    with open(path, "w") as fh:
        fh.write("method,domain,n_test,error\n")
        for r in reports:
            for d, n, e in r.per_domain:
                fh.write(f"{r.method},{d},{n},{fmt_float(e)}\n")


# persistence ----------------------------------------------------------------

def save_predictor(pred, path):
    check_is_fitted(pred, "manifold_")
    sm, dec = pred.manifold_, pred.decomposition_
    mx, ax = projector_to_arrays(pred.proj_x_, "x.")
    arrays = dict(ax)
    meta = {"params": pred.get_params(), "proj_x": mx, "proj_y": None,
            "n_features_in": int(pred.n_features_in_), "n_outputs": int(pred.n_outputs_),
            "jumps": int(sm.source.jumps), "epsilon": dec.epsilon, "gamma": dec.gamma}
    if pred.proj_y_ is not None:
        my, ay = projector_to_arrays(pred.proj_y_, "y.")
        meta["proj_y"] = my
        arrays.update(ay)
    arrays.update(
        x_mean=pred.x_mean_, x_std=pred.x_std_, y_mean=pred.y_mean_, y_std=pred.y_std_,
        X_train=pred.X_train_, edges=pred.edges_.reshape(-1, 2),
        curve_points=sm.source.points, curve_order=sm.source.order,
        stretched=sm.points,
        branches=np.array([[b.lo, b.hi, b.sign, b.offset, b.start, b.end]
                           for b in sm.branches], dtype=float),
        segments=np.array(dec.segments, dtype=int).reshape(-1, 2),
        raw_segments=np.array(dec.raw_segments, dtype=int).reshape(-1, 2),
    )
    write_container(path, "predictor", PREDICTOR_FORMAT_VERSION, meta, arrays)


def load_predictor(path):
    meta, arrays = read_container(path, "predictor", PREDICTOR_FORMAT_VERSION)
    pred = LatentManifoldRegressor(**meta["params"])
    pred.proj_x_ = projector_from_arrays(meta["proj_x"], arrays, "x.")
    pred.proj_y_ = (projector_from_arrays(meta["proj_y"], arrays, "y.")
                    if meta["proj_y"] is not None else None)
    for name in ("x_mean", "x_std", "y_mean", "y_std", "edges"):
        setattr(pred, name + "_", arrays[name])
    pred.X_train_ = arrays["X_train"]
    curve = Curve1M(arrays["curve_points"], arrays["curve_order"], meta["jumps"])
    branches = [BranchedDomain(i, lo, hi, sign, off, int(s), int(e))
                for i, (lo, hi, sign, off, s, e) in enumerate(arrays["branches"])]
    tps = find_turning_points(curve)
    centers = tuple(float(arrays["stretched"][tp.index, 0]) for tp in tps)
    pred.manifold_ = StretchedManifold(arrays["stretched"], branches, curve, tps, centers)
    pred.decomposition_ = SegmentDecomposition(
        tuple(map(tuple, arrays["segments"].tolist())), meta["epsilon"], meta["gamma"],
        tuple(map(tuple, arrays["raw_segments"].tolist())))
    pred.n_features_in_ = meta["n_features_in"]
    pred.n_outputs_ = meta["n_outputs"]
    pred._finalize()
    return pred
