"""scikit-learn style front end for metric-space fixed-point solving.

:class:`FixpointTransformer` maps each row of ``X`` (an initial point) to the
fixed point its iteration reaches; ``fit`` additionally runs the uniqueness
check across all rows. :class:`NestedEquilibriumTransformer` does the same for
nested games, mapping outer initial points to global equilibria.

    >>> import numpy as np
    >>> est = FixpointTransformer(map=lambda x: x / 2 + 1, factor=0.5)
    >>> est.fit(np.array([[0.0], [10.0]])).fixed_point_.round(6)
    array([2.])
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .engine import DEFAULT_CHECK_SAMPLES, DEFAULT_LIMIT_CAP, DEFAULT_WINDOW, iterate_to_fixpoint, verify_uniqueness
from .games import NestedGame, solve_nested, verify_nested_uniqueness
from .ordinal import as_ordinal
from .space import CONTRACTION, GENERAL, MetricSpace, Operator


class FixpointTransformer(TransformerMixin, BaseEstimator):
    """Iterate ``map`` to its fixed point from each input row.

    Parameters
    ----------
    map : callable
        Self-map on ``R^n`` taking and returning 1-D arrays.
    factor : float, optional
        Declared contraction factor in (0, 1). When given, the map is checked
        by sampling before any iteration; when omitted it is iterated unchecked.
    budget : str or int
        Ordinal budget in text syntax, e.g. ``"w*10"``.
    tolerance : float
        Equality tolerance of the metric space.
    distance : {"euclidean", "max"}
    """

    def __init__(self, map: Optional[Callable] = None, factor: Optional[float] = None, budget="w*10",
                 tolerance: float = 1e-9, distance: str = "euclidean", window: int = DEFAULT_WINDOW,
                 limit_cap: int = DEFAULT_LIMIT_CAP, check_samples: int = DEFAULT_CHECK_SAMPLES,
                 random_state: int = 0):
        self.map = map
        self.factor = factor
        self.budget = budget
        self.tolerance = tolerance
        self.distance = distance
        self.window = window
        self.limit_cap = limit_cap
        self.check_samples = check_samples
        self.random_state = random_state

    def _operator(self, dim: int) -> Operator:
        if self.map is None:
            raise ValueError("map must be set")
        space = MetricSpace(dim, self.distance, self.tolerance)
        kind = CONTRACTION if self.factor is not None else GENERAL
        return Operator(space, self.map, kind=kind, factor=self.factor, name="map")

    def _run_kwargs(self):
        return dict(window=self.window, limit_cap=self.limit_cap, check_samples=self.check_samples,
                    seed=self.random_state)

    def fit(self, X, y=None):
        X = check_array(X, dtype=float, ensure_min_samples=1)
        self.n_features_in_ = X.shape[1]
        self.operator_ = self._operator(X.shape[1])
        budget = as_ordinal(self.budget)
        if len(X) >= 2:
            result = verify_uniqueness(self.operator_, list(X), budget, **self._run_kwargs())
            self.uniqueness_ = result.status
            self.certificates_ = result.certificates
            self.fixed_points_ = np.array(result.values)
        else:
            cert = iterate_to_fixpoint(self.operator_, X[0], budget, **self._run_kwargs())
            self.uniqueness_ = "unique"
            self.certificates_ = [cert]
            self.fixed_points_ = np.array([cert.value])
        self.fixed_point_ = self.fixed_points_[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "operator_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        budget = as_ordinal(self.budget)
        return np.vstack([iterate_to_fixpoint(self.operator_, row, budget, **self._run_kwargs()).value
                          for row in X])


class NestedEquilibriumTransformer(TransformerMixin, BaseEstimator):
    """Map outer initial points to the global equilibrium of a nested game."""

    def __init__(self, game: Optional[NestedGame] = None, y0=None, random_state: int = 0):
        self.game = game
        self.y0 = y0
        self.random_state = random_state

    def _y0(self):
        return self.game.inner_space.default_point() if self.y0 is None else self.y0

    def fit(self, X, y=None):
        if self.game is None:
            raise ValueError("game must be set")
        X = check_array(X, dtype=float)
        self.n_features_in_ = X.shape[1]
        starts = [(row, self._y0()) for row in X]
        if len(starts) >= 2:
            result = verify_nested_uniqueness(self.game, starts, seed=self.random_state)
            self.uniqueness_ = result.status
            self.certificates_ = result.certificates
        else:
            cert = solve_nested(self.game, starts[0][0], starts[0][1], seed=self.random_state)
            self.uniqueness_ = "unique"
            self.certificates_ = [cert]
        first = next(c for c in self.certificates_ if c is not None)
        self.equilibrium_ = first.value
        self.inner_equilibrium_ = first.inner_value
        return self

    def transform(self, X):
        check_is_fitted(self, "equilibrium_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return np.vstack([solve_nested(self.game, row, self._y0(), seed=self.random_state).value for row in X])
