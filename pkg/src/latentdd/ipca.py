"""Iterative PCA with pseudo-inverse and component-complement inversion.

Each iteration takes the SVD of the current coordinates ``X_{j-1}``, keeps the
leading right singular vectors ``V_j`` and records the discarded ones
``V_j^c`` together with the training coordinates along them
(``X_j^c = X_{j-1} V_j^c``). Because ``[V_j | V_j^c]`` is orthogonal,

    X_{j-1} = X_j V_j^T + X_j^c V_j^{cT}

holds exactly for training rows, which is what the complement inverse uses.
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._container import read_container, write_container
from .errors import DegenerateRank, DimMismatch, EmptyTraining

PROJECTOR_FORMAT_VERSION = 1


@dataclass(frozen=True)
class IpcaConfig:
    target_dim: int = 1
    evr_floor: float = 0.9
    fallback_drop: int = 1
    single_step: bool = False

    def __post_init__(self):
        if self.target_dim < 1:
            raise ValueError("target_dim must be >= 1")
        if not 0 < self.evr_floor <= 1:
            raise ValueError("evr_floor must lie in (0, 1]")
        if self.fallback_drop < 1:
            raise ValueError("fallback_drop must be >= 1")


@dataclass(frozen=True)
class SvdStep:
    V_kept: np.ndarray
    V_comp: np.ndarray
    X_kept: np.ndarray
    X_comp: np.ndarray
    singular_values: np.ndarray
    evr_kept: float

    @property
    def in_dim(self):
        return self.V_kept.shape[0]

    @property
    def out_dim(self):
        return self.V_kept.shape[1]


def oriented_svd(X):
    """Full SVD ``X = U S V^T`` with a deterministic sign per right vector.

    Returns ``(s, V)`` where ``s`` is padded with zeros to ``X.shape[1]`` and
    the largest-magnitude entry of every column of ``V`` is positive.
    """
    _, s, Vt = np.linalg.svd(X, full_matrices=True)
    V = Vt.T.copy()
    p = V.shape[1]
    s = np.concatenate([s, np.zeros(p - len(s))])
    pivot = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[pivot, np.arange(p)])
    signs[signs == 0] = 1.0
    return s, V * signs


def _choose_kept(energy, p_prev, cfg):
    if cfg.single_step:
        return cfg.target_dim
    total = energy.sum()
    if total > 0:
        cum = np.cumsum(energy) / total
        keep = int(np.searchsorted(cum, cfg.evr_floor * (1 - 1e-12))) + 1
    else:
        keep = p_prev
    keep = max(keep, cfg.target_dim)
    if keep >= p_prev:
        keep = max(p_prev - cfg.fallback_drop, cfg.target_dim)
    return keep


class IterativePCA(TransformerMixin, BaseEstimator):
    """Reduce features to ``n_components`` by repeated truncated SVD.

    Parameters
    ----------
    n_components : int
        Target dimension.
    evr_floor : float
        Each iteration keeps the shortest prefix of singular directions whose
        explained variance ratio reaches this value.
    fallback_drop : int
        Columns dropped when the EVR rule would keep all of them.
    single_step : bool
        Reduce straight to ``n_components`` with one SVD (classical PCA).
    inverse_method : {"pinv", "complement"}
        Default strategy for :meth:`inverse_transform`.
    k_nn : int
        Neighbours used to estimate complements in the complement inverse.
    """

    def __init__(self, n_components=1, evr_floor=0.9, fallback_drop=1,
                 single_step=False, inverse_method="pinv", k_nn=1):
        self.n_components = n_components
        self.evr_floor = evr_floor
        self.fallback_drop = fallback_drop
        self.single_step = single_step
        self.inverse_method = inverse_method
        self.k_nn = k_nn

    @property
    def config(self):
        return IpcaConfig(self.n_components, self.evr_floor,
                          self.fallback_drop, self.single_step)

    def fit(self, X, y=None):
        X = check_array(X, ensure_min_samples=2)
        cfg = self.config
        if X.shape[1] < cfg.target_dim:
            raise DimMismatch(
                f"cannot reduce {X.shape[1]} features to {cfg.target_dim}")
        steps = []
        Xj = X
        rank_checked = False
        while Xj.shape[1] > cfg.target_dim:
            s, V = oriented_svd(Xj)
            if not rank_checked:
                tol = s[0] * max(Xj.shape) * np.finfo(float).eps if s[0] > 0 else 0.0
                rank = int(np.sum(s > tol))
                if rank < cfg.target_dim:
                    warnings.warn(
                        f"data rank {rank} is below target dimension {cfg.target_dim}",
                        DegenerateRank, stacklevel=2)
                rank_checked = True
            energy = s ** 2
            keep = _choose_kept(energy, Xj.shape[1], cfg)
            total = energy.sum()
            evr = float(energy[:keep].sum() / total) if total > 0 else 1.0
            V_kept, V_comp = V[:, :keep], V[:, keep:]
            X_kept = Xj @ V_kept
            steps.append(SvdStep(V_kept, V_comp, X_kept, Xj @ V_comp, s, evr))
            Xj = X_kept
        self.steps_ = steps
        self.n_features_in_ = X.shape[1]
        self.n_components_ = Xj.shape[1]
        return self

    def _check_input(self, X, width):
        check_is_fitted(self, "steps_")
        X = check_array(X)
        if X.shape[1] != width:
            raise DimMismatch(f"expected {width} columns, got {X.shape[1]}")
        return X

    def transform(self, X):
        X = self._check_input(X, self.n_features_in_)
        for step in self.steps_:
            X = X @ step.V_kept
        return X

    def inverse_transform(self, X, method=None, k_nn=None):
        method = method or self.inverse_method
        if method == "pinv":
            return self.pinv_reconstruct(X)
        if method == "complement":
            return self.complement_reconstruct(X, self.k_nn if k_nn is None else k_nn)
        raise ValueError(f"unknown inverse method {method!r}")

    def pinv_reconstruct(self, Xk):
        # (V V^T)^+ = V V^T for orthonormal columns, so F_j = V_j^T
        X = self._check_input(Xk, self.n_components_)
        for step in reversed(self.steps_):
            X = X @ step.V_kept.T
        return X

    def complement_reconstruct(self, Xk, k_nn=1):
        """Invert by estimating the discarded coordinates from training data.

        At every step, going outward, the unknown complement is the
        inverse-distance-weighted mean of the complements of the ``k_nn``
        nearest training rows in the reduced coordinates. A row that coincides
        with a training row takes that row's complement exactly.
        """
        if k_nn < 1:
            raise ValueError("k_nn must be >= 1")
        X = self._check_input(Xk, self.n_components_)
        for step in reversed(self.steps_):
            n_train = step.X_kept.shape[0]
            if n_train == 0:
                raise EmptyTraining("projector holds no training complements")
            k = min(k_nn, n_train)
            D = cdist(X, step.X_kept)
            nearest = np.argsort(D, axis=1, kind="stable")[:, :k]
            d = np.take_along_axis(D, nearest, axis=1)
            scale = 1.0 + np.linalg.norm(X, axis=1, keepdims=True)
            exact = d[:, :1] <= 1e-10 * scale
            with np.errstate(divide="ignore"):
                w = np.where(exact, 0.0, 1.0 / d)
            w[exact[:, 0], 0] = 1.0
            w /= w.sum(axis=1, keepdims=True)
            comp = np.einsum("mk,mkc->mc", w, step.X_comp[nearest])
            X = X @ step.V_kept.T + comp @ step.V_comp.T
        return X

    def evr_report(self):
        """List of ``(step, kept_dim, evr_kept)``; see :func:`total_evr`."""
        check_is_fitted(self, "steps_")
        return [(j + 1, st.out_dim, st.evr_kept) for j, st in enumerate(self.steps_)]

    @property
    def components_(self):
        """Composite projection matrix ``V_1 V_2 ... V_k`` (p x p_k)."""
        check_is_fitted(self, "steps_")
        P = np.eye(self.n_features_in_)
        for step in self.steps_:
            P = P @ step.V_kept
        return P


def total_evr(report):
    return float(np.prod([evr for _, _, evr in report])) if report else 1.0


# functional surface -------------------------------------------------------

def fit_ipca(X, cfg=IpcaConfig()):
    return IterativePCA(cfg.target_dim, cfg.evr_floor, cfg.fallback_drop,
                        cfg.single_step).fit(X)


def project(proj, X):
    return proj.transform(X)


def pinv_reconstruct(proj, Xk):
    return proj.pinv_reconstruct(Xk)


def complement_reconstruct(proj, Xk, k_nn=1):
    return proj.complement_reconstruct(Xk, k_nn)


def evr_report(proj):
    return proj.evr_report()


# serialization ------------------------------------------------------------

def projector_to_arrays(proj, prefix=""):
    meta = {
        "params": proj.get_params(),
        "n_features_in": int(proj.n_features_in_),
        "n_components": int(proj.n_components_),
        "n_steps": len(proj.steps_),
        "evr": [st.evr_kept for st in proj.steps_],
    }
    arrays = {}
    for j, st in enumerate(proj.steps_):
        for name in ("V_kept", "V_comp", "X_kept", "X_comp", "singular_values"):
            arrays[f"{prefix}step{j}.{name}"] = getattr(st, name)
    return meta, arrays


def projector_from_arrays(meta, arrays, prefix=""):
    proj = IterativePCA(**meta["params"])
    steps = []
    for j in range(meta["n_steps"]):
        parts = {name: arrays[f"{prefix}step{j}.{name}"] for name in
                 ("V_kept", "V_comp", "X_kept", "X_comp", "singular_values")}
        steps.append(SvdStep(evr_kept=meta["evr"][j], **parts))
    proj.steps_ = steps
    proj.n_features_in_ = meta["n_features_in"]
    proj.n_components_ = meta["n_components"]
    return proj


def save_projector(proj, path):
    meta, arrays = projector_to_arrays(proj)
    write_container(path, "projector", PROJECTOR_FORMAT_VERSION, meta, arrays)


def load_projector(path):
    meta, arrays = read_container(path, "projector", PROJECTOR_FORMAT_VERSION)
    return projector_from_arrays(meta, arrays)
