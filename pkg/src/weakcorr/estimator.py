"""Scikit-learn style wrapper around the detector.

Samples are WaveFunction objects, so the estimator sits at the start of a
pipeline: ``transform`` turns states into the (n, 4) indicator matrix and
``predict`` into class labels.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .detector import (
    DEFAULT_TAU,
    INDICATOR_NAMES,
    EntanglementIndicators,
    Label,
    check_tau,
    classify,
    indicators,
)
from .grid import DEFAULT_EPS_REL
from .validation import check_scheme, check_states
from .weak_values import momentum_representation


class EntanglementDetector(BaseEstimator, ClassifierMixin, TransformerMixin):
    """Classify bipartite pure states as PRODUCT, A_ONLY, P_ONLY or AP.

    Parameters
    ----------
    tau : float
        Threshold on the dimensionless indicators, in (0, 0.1].
    eps_rel : float
        Relative density below which grid points are masked.
    scheme : {"fd4", "spectral"}
        Differentiation scheme for ψ.
    representation : {"position", "momentum"}
        Postselection basis. Position-representation inputs are Fourier
        transformed first when ``"momentum"`` is chosen.
    """

    def __init__(self, tau=DEFAULT_TAU, eps_rel=DEFAULT_EPS_REL, scheme="fd4",
                 representation="position"):
        self.tau = tau
        self.eps_rel = eps_rel
        self.scheme = scheme
        self.representation = representation

    def _validate_params(self):
        check_tau(self.tau)
        check_scheme(self.scheme)
        if self.representation not in ("position", "momentum"):
            raise ValueError(f"representation must be 'position' or 'momentum', got {self.representation!r}")

    def fit(self, X, y=None):
        """Validate parameters and inputs; there is nothing to learn."""
        self._validate_params()
        check_states(X)
        self.classes_ = np.array([label.value for label in Label])
        self.feature_names_out_ = np.array(INDICATOR_NAMES)
        return self

    def _prepare(self, wf):
        if self.representation == "momentum" and wf.representation == "position":
            return momentum_representation(wf, scheme=self.scheme)
        return wf

    def transform(self, X):
        """Indicator matrix with columns iA_mean, iA_sup, iP_mean, iP_sup."""
        check_is_fitted(self, "classes_")
        states = check_states(X)
        rows = [indicators(self._prepare(wf), scheme=self.scheme, eps_rel=self.eps_rel).as_array()
                for wf in states]
        return np.vstack(rows)

    def predict(self, X):
        check_is_fitted(self, "classes_")
        return np.array([classify(EntanglementIndicators(*row), self.tau).label.value
                         for row in self.transform(X)])

    def get_feature_names_out(self, input_features=None):
        return np.array(INDICATOR_NAMES, dtype=object)
