"""scikit-learn compatible wrappers around the feature map and the RPE mask.

``PositiveRandomFeatures`` follows the ``kernel_approximation`` samplers:
``fit`` draws the projection, ``transform`` maps rows. ``RPEMask`` is fitted
on token coordinates and then applies its mask to columns of length L.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils import check_random_state
from sklearn.utils.validation import check_array, check_is_fitted

from .attention import apply_feature_map
from .core import FeatureMap, ModulationFunction, PointCloud, normalize_coords
from .encodings import sample_cauchy_quadrature
from .fastmult import MaskSpec, dense_quadrature_mask, fastmult
from .nudft import NufftAccuracy


def _seed(random_state) -> int:
    if isinstance(random_state, (int, np.integer)):
        return int(random_state)
    return int(check_random_state(random_state).randint(np.iinfo(np.int32).max))


class PositiveRandomFeatures(TransformerMixin, BaseEstimator):
    """Positive random features for the softmax kernel ``exp(x . y)``.

    Parameters
    ----------
    n_components : int, default=256
        Number of random features ``m``.
    random_state : int, RandomState instance or None, default=None
        Seed for the Gaussian projection.

    Attributes
    ----------
    feature_map_ : FeatureMap
    n_features_in_ : int
    """

    def __init__(self, n_components=256, random_state=None):
        self.n_components = n_components
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        self.feature_map_ = FeatureMap.positive_random(X.shape[1], self.n_components, _seed(self.random_state))
        return self

    def transform(self, X):
        check_is_fitted(self, "feature_map_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return apply_feature_map(self.feature_map_, X)


class RPEMask(TransformerMixin, BaseEstimator):
    """Relative-position mask over a fixed point cloud, applied without forming it.

    ``fit(coords)`` samples a Cauchy quadrature for ``exp(-lam |xi|)``;
    ``transform(U)`` returns ``M @ U`` for ``U`` of shape ``(L, C)``.

    Parameters
    ----------
    lam : float, default=1.0
    n_samples : int, default=8
        Quadrature size ``S`` (even).
    backend : {"direct", "gridded"}, default="direct"
    epsilon : float, default=1e-6
        Gridded-backend accuracy.
    normalize : bool, default=False
        Center and rescale coordinates before sampling.
    random_state : int, RandomState instance or None, default=None
    """

    def __init__(self, lam=1.0, n_samples=8, backend="direct", epsilon=1e-6, normalize=False, random_state=None):
        self.lam = lam
        self.n_samples = n_samples
        self.backend = backend
        self.epsilon = epsilon
        self.normalize = normalize
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        cloud = PointCloud(X)
        self.cloud_ = normalize_coords(cloud) if self.normalize else cloud
        quad = sample_cauchy_quadrature(cloud.dim, self.n_samples, self.lam, _seed(self.random_state))
        self.spec_ = MaskSpec(quad, ModulationFunction(self.lam))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, U):
        check_is_fitted(self, "spec_")
        U = check_array(U, dtype=np.float64, ensure_2d=False)
        return fastmult(self.cloud_, U, self.spec_, self.backend, NufftAccuracy(self.epsilon))

    def to_dense(self):
        check_is_fitted(self, "spec_")
        return dense_quadrature_mask(self.cloud_, self.spec_)
