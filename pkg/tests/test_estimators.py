import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from relflex.estimators import PositiveRandomFeatures, RPEMask


def test_positive_random_features(rng):
    X = rng.standard_normal((10, 4)) * 0.3
    est = PositiveRandomFeatures(n_components=32, random_state=0)
    Z = est.fit_transform(X)
    assert Z.shape == (10, 32) and np.all(Z > 0)
    np.testing.assert_array_equal(Z, clone(est).fit(X).transform(X))
    with pytest.raises(ValueError):
        est.transform(X[:, :3])
    with pytest.raises(NotFittedError):
        PositiveRandomFeatures().transform(X)


def test_params_roundtrip():
    est = RPEMask(lam=2.0, n_samples=16, random_state=3)
    assert est.get_params()["lam"] == 2.0
    twin = clone(est).set_params(n_samples=32)
    assert twin.n_samples == 32 and est.n_samples == 16


def test_rpe_mask_matches_dense(rng):
    coords = rng.random((40, 3))
    U = rng.standard_normal((40, 2))
    est = RPEMask(n_samples=16, random_state=1).fit(coords)
    np.testing.assert_allclose(est.transform(U), est.to_dense() @ U, rtol=1e-10, atol=1e-12)
    gridded = RPEMask(n_samples=128, backend="gridded", epsilon=1e-8, random_state=1).fit(coords)
    ref = gridded.to_dense() @ U
    assert np.linalg.norm(gridded.transform(U) - ref) <= 1e-7 * np.linalg.norm(ref)
    assert est.n_features_in_ == 3


def test_rpe_mask_normalize(rng):
    coords = rng.random((20, 2))
    a = RPEMask(normalize=True, random_state=0).fit(coords)
    b = RPEMask(normalize=True, random_state=0).fit(coords * 10 + 4)
    np.testing.assert_allclose(a.to_dense(), b.to_dense(), rtol=1e-10)


def test_in_pipeline(rng):
    X = rng.standard_normal((8, 3)) * 0.2
    pipe = make_pipeline(PositiveRandomFeatures(n_components=8, random_state=0))
    assert pipe.fit_transform(X).shape == (8, 8)
