"""Input validation for the estimator interface."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .exceptions import UsageError
from .grid import SCHEMES
from .states import WaveFunction


def check_wavefunction(wf) -> WaveFunction:
    """Return ``wf`` if it is a normalized, finite WaveFunction."""
    if not isinstance(wf, WaveFunction):
        raise UsageError(f"expected a WaveFunction, got {type(wf).__name__}")
    if not np.all(np.isfinite(wf.psi)):
        raise UsageError(f"state {wf.label!r} contains non-finite amplitudes")
    if abs(wf.norm - 1.0) > 1e-8:
        raise UsageError(f"state {wf.label!r} is not normalized (norm {wf.norm:.12g})")
    return wf


def check_states(X) -> list[WaveFunction]:
    """Accept one WaveFunction or a non-empty sequence of them."""
    if isinstance(X, WaveFunction):
        return [check_wavefunction(X)]
    if isinstance(X, (str, bytes)) or not isinstance(X, Sequence):
        raise UsageError(f"expected a WaveFunction or a sequence of them, got {type(X).__name__}")
    if len(X) == 0:
        raise UsageError("no states given")
    return [check_wavefunction(wf) for wf in X]


def check_scheme(scheme) -> str:
    if scheme not in SCHEMES:
        raise UsageError(f"unknown differentiation scheme {scheme!r}; expected one of {SCHEMES}")
    return scheme
