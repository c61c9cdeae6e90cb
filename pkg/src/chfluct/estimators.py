"""scikit-learn style wrappers for the cosine transform and the rate functional.

Rows of ``X`` are flattened fields on the node grid (C order), so these
objects drop into pipelines that expect 2-D float arrays.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from chfluct._validation import check_batch_array
from chfluct.deterministic import solve_u0
from chfluct.model import ModelSpec
from chfluct.rate import rate_eval
from chfluct.spectral import GridSpec, Trajectory, physical_values, spectral_coeffs

__all__ = ["CosineTransformer", "RateFunctionalScorer"]


class CosineTransformer(TransformerMixin, BaseEstimator):
    """Node values to orthonormal Neumann cosine coefficients and back.

    ``n_modes`` keeps only the modes with every index below it (zero padding
    on the way back), giving a spectral low-pass projection.
    """

    def __init__(self, d: int = 1, n: int = 64, n_modes=None):
        self.d = d
        self.n = n
        self.n_modes = n_modes

    def fit(self, X, y=None):
        self.grid_ = GridSpec(self.d, self.n)
        check_batch_array(X, self.grid_.size)
        keep = self.n if self.n_modes is None else int(self.n_modes)
        if not 1 <= keep <= self.n:
            raise ValueError(f"n_modes must lie in [1, {self.n}], got {self.n_modes}")
        self.keep_ = keep
        self.n_features_in_ = self.grid_.size
        return self

    def _block(self):
        return (slice(None),) + (slice(0, self.keep_),) * self.d

    def transform(self, X):
        check_is_fitted(self, "grid_")
        X = check_batch_array(X, self.grid_.size)
        c = spectral_coeffs(X.reshape((-1,) + self.grid_.shape), self.grid_)
        return c[self._block()].reshape(len(X), -1)

    def inverse_transform(self, C):
        check_is_fitted(self, "grid_")
        C = check_batch_array(C, self.keep_**self.d, "C")
        full = np.zeros((len(C),) + self.grid_.shape)
        full[self._block()] = C.reshape((-1,) + (self.keep_,) * self.d)
        return physical_values(full, self.grid_).reshape(len(C), -1)


class RateFunctionalScorer(BaseEstimator):
    """I(g) for target paths given as rows of shape ((nt + 1) * n^d,).

    ``fit`` solves the deterministic limit once; ``transform`` returns one
    rate value per row (``inf`` for targets not starting at zero).
    """

    def __init__(self, model: ModelSpec = None):
        self.model = model

    def fit(self, X=None, y=None):
        m = self.model if self.model is not None else ModelSpec()
        self.model_ = m
        self.u0_ = solve_u0(m)
        return self

    def transform(self, X):
        check_is_fitted(self, "u0_")
        grid = self.model_.grid
        X = check_batch_array(X, (grid.nt + 1) * grid.size)
        out = np.empty(len(X))
        for i, row in enumerate(X):
            g = Trajectory(grid, grid.times, row.reshape((grid.nt + 1,) + grid.shape))
            out[i] = rate_eval(g, self.u0_, self.model_).value
        return out[:, None]

    def fit_transform(self, X, y=None):
        return self.fit(X).transform(X)
