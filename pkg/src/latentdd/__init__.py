"""Latent-space domain decomposition for parametric regression.

Inputs and outputs are reduced to one dimension each by iterative PCA, the
resulting planar curve is unfolded into a function by mirror stretching, and
the stretched curve is split into line-similar domains.
"""
__version__ = "0.1.0"

from .dataset import Dataset, sample_case1, sample_case2  # noqa: E402
from .decompose import DecompositionConfig, lissda  # noqa: E402
from .ipca import IterativePCA  # noqa: E402
from .manifold import ball_pivot, extract_connected_curve, stretch  # noqa: E402
from .mlp import DomainMLPRegressor, ELUNetRegressor, MlpConfig, train_mlp  # noqa: E402
from .predict import LatentManifoldRegressor, evaluate, fit_predictor  # noqa: E402

__all__ = [
    "Dataset", "DecompositionConfig", "DomainMLPRegressor", "ELUNetRegressor",
    "IterativePCA", "LatentManifoldRegressor", "MlpConfig", "ball_pivot",
    "evaluate", "extract_connected_curve", "fit_predictor", "lissda",
    "sample_case1", "sample_case2", "stretch", "train_mlp",
]
