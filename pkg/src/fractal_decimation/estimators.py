"""scikit-learn style wrappers around the compute modules.

``SpectrumEstimator.fit`` computes a spectrum from its constructor
parameters (there is no training data). ``HeatTransformer`` and
``WaveTransformer`` map rows of initial data on the graph vertices to
solutions at a fixed time, so they compose with ``sklearn.pipeline``.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import analysis, spacetime, variants
from .models import INTERVAL, make_params
from .validation import check_bc, check_cutoff, check_level, check_model


def _spectrum(model, param, level, bc, variant, cutoff, sequence):
    model = check_model(model)
    level = check_level(level)
    bc = check_bc(bc)
    if variant == "threshold":
        if model != INTERVAL:
            raise ValueError("threshold subdivision is defined on the Interval only")
        return variants.threshold_spectrum(param, check_cutoff(cutoff), level, bc)
    if variant == "hierarchical":
        hp = variants.HierarchicalParams(model, tuple(sequence))
        return variants.hierarchical_spectrum(hp, level, bc)
    if variant not in (None, "none"):
        raise ValueError(f"unknown variant {variant!r}")
    params = make_params(model, param)
    if bc == "dirichlet":
        if model == INTERVAL:
            from .interval_decimation import full_spectrum_interval
            from .graphs import build_graph
            spec = full_spectrum_interval(params.p, level)
            spec.graph = build_graph(params, level)
            return spec
        from .sg_decimation import full_spectrum_sg
        return full_spectrum_sg(params.r, level)
    from .graphs import assemble_operator, build_graph, dense_spectrum
    return dense_spectrum(assemble_operator(build_graph(params, level), bc))


class SpectrumEstimator(BaseEstimator):
    """Compute a complete graph spectrum.

    After ``fit``: ``spectrum_`` (the Spectrum), ``eigenvalues_``
    (renormalized) and ``alpha_`` (closed-form Weyl exponent when defined).
    """

    def __init__(self, model="interval", param=0.5, level=3, bc="dirichlet", variant=None,
                 cutoff=0.0, sequence=None):
        self.model = model
        self.param = param
        self.level = level
        self.bc = bc
        self.variant = variant
        self.cutoff = cutoff
        self.sequence = sequence

    def fit(self, X=None, y=None):
        self.spectrum_ = _spectrum(self.model, self.param, self.level, self.bc, self.variant,
                                   self.cutoff, self.sequence)
        self.eigenvalues_ = self.spectrum_.eigenvalues
        self.alpha_ = None
        if self.variant in (None, "none"):
            self.alpha_ = analysis.weyl_alpha(make_params(check_model(self.model), self.param))
        return self

    def counting(self, x):
        check_is_fitted(self, "spectrum_")
        return analysis.counting_function(self.spectrum_, x)

    def weyl(self, grid=400):
        check_is_fitted(self, "spectrum_")
        alpha = self.alpha_ if self.alpha_ is not None else 1.0
        return analysis.weyl_series(self.spectrum_, alpha, grid)


class _EvolutionTransformer(TransformerMixin, BaseEstimator):
    def __init__(self, model="interval", param=0.5, level=3, t=0.01):
        self.model = model
        self.param = param
        self.level = level
        self.t = t

    _bc = "dirichlet"

    def fit(self, X=None, y=None):
        params = make_params(check_model(self.model), self.param)
        self.basis_ = spacetime.basis_for(params, self.level, self._bc)
        self.n_features_in_ = self.basis_.functions.shape[0]
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} vertex values per row, "
                             f"got {X.shape[1]}")
        return np.vstack([self._solve(row) for row in X])


class HeatTransformer(_EvolutionTransformer):
    """Neumann heat solution at time ``t`` for each row of initial data."""

    _bc = "neumann"

    def _solve(self, row):
        return spacetime.heat_solution(self.basis_, row, float(self.t))


class WaveTransformer(_EvolutionTransformer):
    """Dirichlet wave solution at time ``t`` for each row of initial velocities."""

    def _solve(self, row):
        return spacetime.wave_solution(self.basis_, row, float(self.t))
