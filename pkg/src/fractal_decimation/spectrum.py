"""Containers for eigenpairs and complete spectra."""

from dataclasses import dataclass, field

import numpy as np

DECIMATED = "decimated"
BORN = "born"
ORACLE = "oracle"

# relative width used to group numerically degenerate eigenvalues
CLUSTER_RTOL = 1e-7


@dataclass(frozen=True)
class EigenGenealogy:
    """How an eigenvalue was produced: where it was born and which branches followed.

    ``seed`` names the born class (``"G1"``, ``"G2"``, ``"G3"`` on the Interval;
    ``"b1"`` ... ``"b7"`` and ``"nine"`` on the gasket). ``branches`` lists the
    decimation branch indices applied after birth, oldest first.
    """

    birth_level: int
    seed: str
    branches: tuple = ()

    @property
    def level(self):
        return self.birth_level + len(self.branches)

    def extend(self, branch):
        return EigenGenealogy(self.birth_level, self.seed, self.branches + (int(branch),))

    def branch_string(self):
        return "".join(str(b) for b in self.branches)


@dataclass(frozen=True)
class EigenPair:
    graph_eigenvalue: float
    renormalized: float
    eigenfunction: np.ndarray = field(repr=False)
    genealogy: EigenGenealogy = None
    multiplicity: int = 1
    provenance: str = ORACLE


def cluster_sizes(values, rtol=CLUSTER_RTOL):
    """Multiplicity of each entry of a sorted array, grouping within ``rtol``."""
    values = np.asarray(values, dtype=float)
    n = len(values)
    sizes = np.ones(n, dtype=int)
    if n == 0:
        return sizes
    start = 0
    for i in range(1, n + 1):
        if i == n or abs(values[i] - values[i - 1]) > rtol * max(abs(values[i]), abs(values[i - 1]), 1e-300):
            sizes[start:i] = i - start
            start = i
    return sizes


def cluster_slices(values, rtol=CLUSTER_RTOL):
    """Yield ``slice`` objects covering each degenerate group of a sorted array."""
    sizes = cluster_sizes(values, rtol)
    i = 0
    while i < len(values):
        yield slice(i, i + sizes[i])
        i += sizes[i]


class Spectrum:
    """Ordered list of eigenpairs at one level.

    Eigenvalues are stored in graph units (before renormalization) together
    with ``scale``, the factor that converts them to renormalized values.
    Eigenfunctions are the columns of ``eigenfunctions`` and are indexed by
    the vertex ids of ``graph``; Dirichlet functions carry explicit zeros on
    the boundary.
    """

    def __init__(self, graph_eigenvalues, scale, eigenfunctions=None, genealogies=None,
                 provenance=None, *, model=None, level=None, params=None, bc="dirichlet",
                 graph=None, sort=True):
        values = np.asarray(graph_eigenvalues, dtype=float)
        k = len(values)
        genealogies = list(genealogies) if genealogies is not None else [None] * k
        if provenance is None:
            provenance = [ORACLE] * k
        elif isinstance(provenance, str):
            provenance = [provenance] * k
        else:
            provenance = list(provenance)
        if eigenfunctions is not None:
            eigenfunctions = np.asarray(eigenfunctions, dtype=float)
            if eigenfunctions.ndim != 2 or eigenfunctions.shape[1] != k:
                raise ValueError("eigenfunctions must have one column per eigenvalue")
        if sort:
            order = np.argsort(values, kind="stable")
            values = values[order]
            genealogies = [genealogies[i] for i in order]
            provenance = [provenance[i] for i in order]
            if eigenfunctions is not None:
                eigenfunctions = eigenfunctions[:, order]
        self.graph_eigenvalues = values
        self.scale = float(scale)
        self.eigenfunctions = eigenfunctions
        self.genealogies = genealogies
        self.provenance = provenance
        self.model = model
        self.level = level
        self.params = params
        self.bc = bc
        self.graph = graph
        self.multiplicities = cluster_sizes(values)

    @property
    def eigenvalues(self):
        """Renormalized eigenvalues."""
        return self.graph_eigenvalues * self.scale

    def __len__(self):
        return len(self.graph_eigenvalues)

    def __getitem__(self, i):
        f = None if self.eigenfunctions is None else self.eigenfunctions[:, i]
        return EigenPair(
            graph_eigenvalue=float(self.graph_eigenvalues[i]),
            renormalized=float(self.graph_eigenvalues[i] * self.scale),
            eigenfunction=f,
            genealogy=self.genealogies[i],
            multiplicity=int(self.multiplicities[i]),
            provenance=self.provenance[i],
        )

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __repr__(self):
        return (f"Spectrum(model={self.model!r}, level={self.level}, n={len(self)}, "
                f"bc={self.bc!r})")
