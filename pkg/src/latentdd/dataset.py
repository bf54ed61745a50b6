"""Harmonic-transport datasets: generation, standardization and storage.

The model problem is the complex ODE ``m y' - i k y = g`` on ``[0, 1]`` with
``y(0) = 0``. Two study cases are produced:

* case 1: six scalar parameters ``(m, x_m, k, a, alpha, sigma)`` drawn by Latin
  hypercube sampling, scalar output ``||y||_{L2}``;
* case 2: Chebyshev coefficients of the Mach and source fields drawn
  uniformly, output the full discrete solution ``(Re y, Im y)``.
"""
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from numpy.polynomial import chebyshev
from scipy.stats import qmc

from ._container import read_container, write_container
from .errors import (GridTooSmall, InvalidRange, NonPositiveMach,
                     StandardizationError, ZeroVarianceColumn)

DATASET_FORMAT_VERSION = 1

CASE1_NAMES = ("m", "x_m", "k", "a", "alpha", "sigma")
CASE1_RANGES = (
    (0.2, 0.7),     # m
    (0.0, 1.0),     # x_m
    (80.0, 100.0),  # k
    (0.5, 1.0),     # a
    (50.0, 150.0),  # alpha
    (0.1, 0.5),     # sigma
)
CASE2_MACH_RANGE = (0.2, 0.7)
CASE2_SOURCE_RANGE = (25.0, 150.0)
DEFAULT_M = 1024
DEFAULT_CASE2_K = 90.0


class CaseId(str, Enum):
    CASE1 = "Case1"
    CASE2 = "Case2"


@dataclass(frozen=True)
class TransportConfig:
    M: int = DEFAULT_M
    k: float = DEFAULT_CASE2_K
    case_id: CaseId = CaseId.CASE1

    def __post_init__(self):
        if self.M < 2:
            raise GridTooSmall(f"M must be >= 2, got {self.M}")
        if not self.k > 0:
            raise InvalidRange(f"k must be positive, got {self.k}")


@dataclass(frozen=True)
class Case1Params:
    m: float
    x_m: float
    k: float
    a: float
    alpha: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidRange("sigma must be positive")

    @classmethod
    def from_row(cls, row):
        return cls(*(float(v) for v in row))


@dataclass(frozen=True)
class FieldParams:
    m_coeffs: np.ndarray
    g_coeffs: np.ndarray

    def __post_init__(self):
        M = len(self.m_coeffs)
        if len(self.g_coeffs) != 2 * M:
            raise InvalidRange(
                f"g_coeffs must have length 2*M={2 * M}, got {len(self.g_coeffs)}")


def grid(M):
    if M < 2:
        raise GridTooSmall(f"M must be >= 2, got {M}")
    return np.linspace(0.0, 1.0, M)


def solve_transport_batch(m_field, k, g_field):
    """Solve ``m y' - i k y = g``, ``y(0) = 0`` for a batch of fields.

    Parameters
    ----------
    m_field : array_like, shape (M,) or (n, M)
        Mach number at each node, strictly positive.
    k : float or array_like, shape (n,)
        Wave number per sample.
    g_field : array_like, shape (M,) or (n, M), complex
        Source values at each node.

    Returns
    -------
    ndarray of complex, shape (n, M) or (M,)

    Notes
    -----
    First-order exponentially fitted upwind scheme. On each cell
    ``(x_{i-1}, x_i]`` the coefficients are frozen at the downwind node and the
    resulting linear ODE is integrated exactly::

        y_i = e^{i theta_i} y_{i-1} + g_i (h / m_i) phi(i theta_i),
        theta_i = k h / m_i,  phi(z) = (e^z - 1) / z.

    The homogeneous wave is propagated without amplitude or phase error, so
    the scheme stays accurate at large ``k / m`` where plain implicit upwind
    damps the solution. As ``theta -> 0`` it reduces to implicit upwind.
    """
    m = np.asarray(m_field, dtype=float)
    g = np.asarray(g_field, dtype=complex)
    single = m.ndim == 1 and g.ndim == 1
    m = np.atleast_2d(m)
    g = np.atleast_2d(g)
    n = max(m.shape[0], g.shape[0])
    M = max(m.shape[1], g.shape[1])
    if M < 2:
        raise GridTooSmall(f"M must be >= 2, got {M}")
    m = np.broadcast_to(m, (n, M))
    g = np.broadcast_to(g, (n, M))
    if np.any(~(m > 0)):
        raise NonPositiveMach(f"Mach field has {int(np.sum(~(m > 0)))} non-positive entries")
    k = np.broadcast_to(np.asarray(k, dtype=float).reshape(-1, 1), (n, 1))
    h = 1.0 / (M - 1)

    z = 1j * k * h / m
    prop = np.exp(z)
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = np.where(z == 0, 1.0 + 0j, np.expm1(z) / z)
    forcing = g * (h / m) * phi

    y = np.zeros((n, M), dtype=complex)
    for i in range(1, M):
        y[:, i] = prop[:, i] * y[:, i - 1] + forcing[:, i]
    return y[0] if single else y


def solve_transport(m_field, k, g_field):
    """Single-sample wrapper around :func:`solve_transport_batch`."""
    m = np.asarray(m_field, dtype=float)
    g = np.asarray(g_field, dtype=complex)
    if m.ndim != 1 or g.ndim != 1:
        raise ValueError("solve_transport expects 1-D fields")
    if len(m) < 2:
        raise GridTooSmall(f"M must be >= 2, got {len(m)}")
    return solve_transport_batch(m, k, g)


def source_function(x, p):
    """Case-1 source ``a e^{i alpha x} + e^{i alpha x - (x - x_m)^2 / (2 sigma^2)}``."""
    x = np.asarray(x, dtype=float)
    phase = np.exp(1j * p.alpha * x)
    return p.a * phase + phase * np.exp(-((x - p.x_m) ** 2) / (2.0 * p.sigma ** 2))


def chebyshev_field(coeffs, x):
    """Evaluate ``sum_j c_j T_j(2x - 1)``; ``coeffs`` may be batched as (n, deg+1)."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size == 0:
        raise InvalidRange("coeffs must be nonempty")
    t = 2.0 * np.asarray(x, dtype=float) - 1.0
    if coeffs.ndim == 1:
        return chebyshev.chebval(t, coeffs)
    return coeffs @ chebyshev.chebvander(t, coeffs.shape[1] - 1).T


def chebyshev_mean_field(coeffs, x):
    """Chebyshev-weighted average ``sum_j c_j T_j^2 / sum_j T_j^2`` on ``t = 2x - 1``.

    The weights are non-negative and sum to one at every point, so the field
    stays inside ``[min c, max c]``. Used for the Case-2 Mach number, which
    must stay positive.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size == 0:
        raise InvalidRange("coeffs must be nonempty")
    t = 2.0 * np.asarray(x, dtype=float) - 1.0
    w = chebyshev.chebvander(t, coeffs.shape[-1] - 1) ** 2
    w /= w.sum(axis=1, keepdims=True)
    return coeffs @ w.T


def lhs_sample(ranges, n, seed):
    """Latin hypercube sample of ``n`` points over the box ``ranges``."""
    ranges = np.asarray(ranges, dtype=float).reshape(-1, 2)
    if n < 1:
        raise InvalidRange(f"n must be >= 1, got {n}")
    lo, hi = ranges[:, 0], ranges[:, 1]
    if np.any(~(lo < hi)):
        raise InvalidRange(f"each range needs low < high, got {ranges.tolist()}")
    unit = qmc.LatinHypercube(d=len(ranges), rng=np.random.default_rng(seed)).random(n)
    return lo + unit * (hi - lo)


@dataclass
class Dataset:
    X: np.ndarray
    Y: np.ndarray
    x_mean: np.ndarray = None
    x_std: np.ndarray = None
    y_mean: np.ndarray = None
    y_std: np.ndarray = None
    standardized: bool = False
    x_zero_var: np.ndarray = None
    y_zero_var: np.ndarray = None
    case_id: str = "custom"
    seed: int = -1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.asarray(self.Y, dtype=float)
        self.Y = Y.reshape(-1, 1) if Y.ndim == 1 else Y
        if self.X.shape[0] != self.Y.shape[0]:
            raise ValueError(
                f"X has {self.X.shape[0]} rows but Y has {self.Y.shape[0]}")

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def q(self):
        return self.Y.shape[1]

    @property
    def has_stats(self):
        return self.x_mean is not None

    def raw(self):
        """Return ``(X, Y)`` in original units."""
        if not self.standardized:
            return self.X, self.Y
        return (self.X * self.x_std + self.x_mean,
                self.Y * self.y_std + self.y_mean)


def _column_stats(A):
    mean = A.mean(axis=0)
    std = A.std(axis=0, ddof=1)
    zero = ~(std > 1e-12 * np.maximum(1.0, np.abs(mean)))
    std = np.where(zero, 1.0, std)
    return mean, std, zero


def standardize(ds, reference=None):
    """Return a standardized copy of ``ds``.

    With ``reference`` the statistics of that (training) dataset are reused;
    otherwise they are computed from ``ds`` itself, which needs ``n >= 2``.
    Zero-variance columns are only centered and flagged.
    """
    if ds.standardized:
        raise StandardizationError("dataset is already standardized")
    if reference is not None:
        if not reference.has_stats:
            raise StandardizationError("reference dataset carries no statistics")
        if reference.p != ds.p or reference.q != ds.q:
            raise ValueError("reference dataset has different dimensions")
        xm, xs, xz = reference.x_mean, reference.x_std, reference.x_zero_var
        ym, ys, yz = reference.y_mean, reference.y_std, reference.y_zero_var
    else:
        if ds.n < 2:
            raise StandardizationError("standardization needs at least 2 rows")
        xm, xs, xz = _column_stats(ds.X)
        ym, ys, yz = _column_stats(ds.Y)
        n_zero = int(xz.sum() + yz.sum())
        if n_zero:
            warnings.warn(f"{n_zero} zero-variance column(s) centered only",
                          ZeroVarianceColumn, stacklevel=2)
    return replace(ds, X=(ds.X - xm) / xs, Y=(ds.Y - ym) / ys,
                   x_mean=xm, x_std=xs, y_mean=ym, y_std=ys,
                   x_zero_var=xz, y_zero_var=yz, standardized=True,
                   meta=dict(ds.meta))


def destandardize(ds):
    if not ds.standardized:
        raise StandardizationError("dataset is not standardized")
    X, Y = ds.raw()
    return replace(ds, X=X, Y=Y, standardized=False, meta=dict(ds.meta))


def sample_case1(n, seed, M=DEFAULT_M, reference=None):
    """Generate a standardized Case-1 dataset (p=6, q=1)."""
    X = lhs_sample(CASE1_RANGES, n, seed)
    x = grid(M)
    m, x_m, k, a, alpha, sigma = (X[:, [j]] for j in range(6))
    phase = np.exp(1j * alpha * x)
    g = a * phase + phase * np.exp(-((x - x_m) ** 2) / (2.0 * sigma ** 2))
    y = solve_transport_batch(np.broadcast_to(m, g.shape), k[:, 0], g)
    h = 1.0 / (M - 1)
    Y = np.sqrt(h * np.sum(np.abs(y) ** 2, axis=1, keepdims=True))
    raw = Dataset(X, Y, case_id=CaseId.CASE1.value, seed=int(seed),
                  meta={"M": int(M), "names": list(CASE1_NAMES)})
    return standardize(raw, reference)


def case2_fields(X, M):
    """Map Case-2 coefficient rows ``(m_coeffs, g_re_coeffs, g_im_coeffs)`` to nodal fields."""
    X = np.atleast_2d(X)
    x = grid(M)
    m = chebyshev_mean_field(X[:, :M], x)
    g = chebyshev_field(X[:, M:2 * M], x) + 1j * chebyshev_field(X[:, 2 * M:3 * M], x)
    return m, g


def sample_case2(n, M=DEFAULT_M, k=DEFAULT_CASE2_K, seed=0, reference=None):
    """Generate a standardized Case-2 dataset (p=3M, q=2M)."""
    if n < 1:
        raise InvalidRange(f"n must be >= 1, got {n}")
    if M < 2:
        raise GridTooSmall(f"M must be >= 2, got {M}")
    rng = np.random.default_rng(seed)
    mc = rng.uniform(*CASE2_MACH_RANGE, size=(n, M))
    gc = rng.uniform(*CASE2_SOURCE_RANGE, size=(n, 2 * M))
    X = np.hstack([mc, gc])
    m, g = case2_fields(X, M)
    y = solve_transport_batch(m, k, g)
    Y = np.hstack([y.real, y.imag])
    raw = Dataset(X, Y, case_id=CaseId.CASE2.value, seed=int(seed),
                  meta={"M": int(M), "k": float(k)})
    return standardize(raw, reference)


def save_dataset(ds, path):
    meta = {
        "case_id": ds.case_id, "n": ds.n, "p": ds.p, "q": ds.q,
        "seed": int(ds.seed), "standardized": bool(ds.standardized),
        "chebyshev_map": "t=2x-1", "meta": ds.meta,
    }
    arrays = {"X": ds.X, "Y": ds.Y}
    if ds.has_stats:
        arrays.update(x_mean=ds.x_mean, x_std=ds.x_std, y_mean=ds.y_mean,
                      y_std=ds.y_std, x_zero_var=ds.x_zero_var,
                      y_zero_var=ds.y_zero_var)
    write_container(path, "dataset", DATASET_FORMAT_VERSION, meta, arrays)


def load_dataset(path):
    header, arrays = read_container(path, "dataset", DATASET_FORMAT_VERSION)
    stats = {}
    if "x_mean" in arrays:
        stats = {key: arrays[key] for key in
                 ("x_mean", "x_std", "y_mean", "y_std")}
        stats["x_zero_var"] = arrays["x_zero_var"].astype(bool)
        stats["y_zero_var"] = arrays["y_zero_var"].astype(bool)
    return Dataset(arrays["X"], arrays["Y"], standardized=header["standardized"],
                   case_id=header["case_id"], seed=header["seed"],
                   meta=header.get("meta", {}), **stats)


def export_csv(ds, path):
    """Write the dataset rows as CSV with full-precision decimals."""
    cols = [f"x{j}" for j in range(ds.p)] + [f"y{j}" for j in range(ds.q)]
    np.savetxt(path, np.hstack([ds.X, ds.Y]), delimiter=",", fmt="%.17g",
               header=",".join(cols), comments="")
