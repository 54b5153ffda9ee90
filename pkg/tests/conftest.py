import os

import numpy as np
import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
IONOSPHERE = os.path.join(ROOT, "data", "ionosphere.csv")


@pytest.fixture
def write_csv(tmp_path):
    def _write(text, name="data.csv"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)
    return _write


@pytest.fixture
def toy_outliers():
    """Two tight Gaussian blobs of inliers plus a ring of far outliers."""
    rng = np.random.default_rng(7)
    inl = rng.normal(0.0, 0.3, size=(60, 3))
    ang = rng.uniform(0, 2 * np.pi, size=12)
    out = np.c_[3 * np.cos(ang), 3 * np.sin(ang), rng.normal(0, 0.3, 12)]
    X = np.vstack([inl, out])
    y = np.r_[np.zeros(60, dtype=int), np.ones(12, dtype=int)]
    return X, y
