"""Threshold-subdivision and hierarchical (level-varying parameter) Laplacians."""

from dataclasses import dataclass
import csv

import numpy as np

from . import models
from .exceptions import ConsistencyError, ParameterError, PreconditionError
from .graphs import (GraphApprox, assemble_operator, dense_spectrum, format_float,
                     interval_graph_from_weights, sg_graph_from_weights)
from .interval_decimation import decimate_interval
from .models import INTERVAL, IntervalParams, SGParams
from .spectrum import cluster_sizes
from .validation import check_bc, check_cutoff, check_level, check_model, check_p, check_r

MATCH_RTOL = 1e-8
MULTIPLICITY_RTOL = 1e-10


@dataclass(frozen=True)
class ThresholdPartition:
    """Cells of mixed generation tiling [0, 1], ordered left to right."""

    p: float
    c: float
    level: int
    cells: tuple

    @property
    def starts(self):
        return np.array([_cell_interval(w)[0] for w in self.cells])

    @property
    def ends(self):
        return np.array([_cell_interval(w)[1] for w in self.cells])

    @property
    def measures(self):
        params = IntervalParams(self.p)
        return np.array([models.interval_cell_weights(params, w)[0] for w in self.cells])

    @property
    def resistances(self):
        params = IntervalParams(self.p)
        return np.array([models.interval_cell_weights(params, w)[1] for w in self.cells])

    def word_lengths(self):
        return np.array([w.level for w in self.cells])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["start", "end", "measure", "resistance"])
            for a, b, mu, res in zip(self.starts, self.ends, self.measures, self.resistances):
                w.writerow([format_float(a), format_float(b), format_float(mu), format_float(res)])


def _cell_interval(word):
    start = 0.0
    width = 1.0
    for a in word.letters:
        width /= 4.0
        start += a * width
    return start, start + width


def threshold_partition(p, c, m):
    """Apply the threshold rule from the whole interval for ``m`` steps.

    At step ``l`` (building ``C_{l+1}`` from ``C_l``) every cell with measure
    at least ``c^(l+1)`` is split into its four children; the others are kept.
    """
    p = check_p(p)
    c = check_cutoff(c)
    m = check_level(m)
    params = IntervalParams(p)
    cells = [models.interval_word()]
    for level in range(m):
        limit = c ** (level + 1)
        nxt = []
        for w in cells:
            if models.interval_cell_weights(params, w)[0] >= limit:
                nxt.extend(w.child(a) for a in range(4))
            else:
                nxt.append(w)
        cells = nxt
    return ThresholdPartition(p=p, c=c, level=m, cells=tuple(cells))


def threshold_graph(partition):
    """Graph on the partition endpoints; pointmasses average adjacent cell measures."""
    measure = partition.measures
    resistance = partition.resistances
    n = len(measure) + 1
    edges = np.column_stack([np.arange(n - 1), np.arange(1, n)])
    mass = np.zeros(n)
    mass[:-1] += measure / 2.0
    mass[1:] += measure / 2.0
    coords = np.concatenate([partition.starts, [1.0]]).reshape(-1, 1)
    outer = np.array([models.outer_count(w) for w in partition.cells])
    return GraphApprox(
        model=INTERVAL, level=partition.level, coords=coords, edges=edges,
        conductances=1.0 / resistance, pointmass=mass, boundary=(0, n - 1),
        cells=edges.copy(), cell_measure=measure, cell_outer=outer,
        params=IntervalParams(partition.p), lattice=None)


def threshold_spectrum(p, c, m, bc="dirichlet"):
    """Dense spectrum of the threshold Laplacian (renormalized by ``(4/pq)^m``)."""
    bc = check_bc(bc)
    graph = threshold_graph(threshold_partition(p, c, m))
    return dense_spectrum(assemble_operator(graph, bc))


def asymmetry(coords, f):
    """Distance of ``f`` from the nearest of ``f(1-x)`` and ``-f(1-x)``, relative to ``max|f|``.

    The reflection is evaluated by linear interpolation, so partitions that
    are not themselves symmetric are handled.
    """
    x = np.asarray(coords, dtype=float).ravel()
    f = np.asarray(f, dtype=float)
    g = np.interp(1.0 - x, x, f)
    scale = np.max(np.abs(f))
    return float(min(np.max(np.abs(f - g)), np.max(np.abs(f + g))) / scale)


def max_multiplicity(spectrum, rtol=MULTIPLICITY_RTOL):
    """Largest eigenvalue multiplicity, grouping values within ``rtol``.

    The tolerance is tighter than the default clustering width because
    localized threshold modes produce chains of distinct values only about
    1e-8 apart, which the dense solver resolves.
    """
    return int(cluster_sizes(spectrum.graph_eigenvalues, rtol).max()) if len(spectrum) else 0


@dataclass(frozen=True)
class HierarchicalParams:
    """A parameter sequence for one model, cycled to the working depth."""

    model: str
    values: tuple

    def __post_init__(self):
        model = check_model(self.model)
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ParameterError("parameter sequence is empty")
        check = check_p if model == INTERVAL else check_r
        values = tuple(check(v) for v in values)
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "values", values)

    def at(self, level):
        """Parameter governing the split of level-``level`` cells (0-based)."""
        return self.values[level % len(self.values)]

    def sequence(self, m):
        return [self.at(i) for i in range(m)]

    def renorm(self, m):
        """Product of the per-level renormalization factors."""
        make = IntervalParams if self.model == INTERVAL else SGParams
        return float(np.prod([make(v).renorm for v in self.sequence(m)]))


def hierarchical_weights(params, word):
    """``(measure, resistance)`` of a cell whose letter at depth ``l`` uses ``params.at(l)``."""
    if word.model != params.model:
        raise PreconditionError("word and parameter sequence belong to different models")
    measure, resistance = 1.0, 1.0
    for depth, letter in enumerate(word.letters):
        outer = models.is_outer(word.model, letter)
        if params.model == INTERVAL:
            p = params.at(depth)
            q = 1.0 - p
            measure *= (p if outer else q) / 2.0
            resistance *= (q if outer else p) / 2.0
        else:
            g = SGParams(params.at(depth))
            measure *= g.mu0 if outer else g.mu1
            resistance *= g.r0 if outer else g.r1
    return measure, resistance


def hierarchical_graph(params, m):
    m = check_level(m)
    seq = params.sequence(m)
    if params.model == INTERVAL:
        measure, resistance = models.interval_level_weights(seq)
        return interval_graph_from_weights(m, measure, resistance)
    consts = [SGParams(r) for r in seq]

    def weights(letters):
        outer = letters // 3 == letters % 3
        measure = np.ones(len(letters))
        resistance = np.ones(len(letters))
        for depth, g in enumerate(consts):
            o = outer[:, depth]
            measure *= np.where(o, g.mu0, g.mu1)
            resistance *= np.where(o, g.r0, g.r1)
        return measure, 1.0 / resistance

    return sg_graph_from_weights(m, weights)


def hierarchical_spectrum(params, m, bc="dirichlet", check=True):
    """Spectrum of the hierarchical Laplacian at level ``m``.

    Dirichlet Interval spectra come from level-indexed decimation, checked
    pairwise against the dense oracle when ``check`` is set. Everything else
    uses the oracle alone.
    """
    bc = check_bc(bc)
    m = check_level(m)
    graph = hierarchical_graph(params, m)
    scale = params.renorm(m)
    if params.model == INTERVAL and bc == "dirichlet":
        spec = decimate_interval(params.sequence(m), m)
        spec.graph = graph
        if check:
            oracle = dense_spectrum(assemble_operator(graph, bc), scale=scale, level=m)
            err = np.max(np.abs(spec.eigenvalues - oracle.eigenvalues) / np.abs(oracle.eigenvalues))
            if err > MATCH_RTOL:
                raise ConsistencyError(
                    f"hierarchical decimation disagrees with the oracle (max rel. error {err:.3e})")
        return spec
    return dense_spectrum(assemble_operator(graph, bc), scale=scale, level=m)
