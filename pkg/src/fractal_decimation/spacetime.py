"""Spectral operator, heat and wave solutions on either model.

All sums run over the complete finite-level basis in a fixed index order.
Inner products are weighted by the vertex pointmasses.
"""

from dataclasses import dataclass, field
import csv

import numpy as np

from .exceptions import NumericalError, PreconditionError
from .graphs import assemble_operator, build_graph, dense_spectrum, format_float, normalize_signs
from .models import INTERVAL
from .spectrum import cluster_slices
from .validation import check_bc, check_level

GRAM_TOL = 1e-8
RANK_TOL = 1e-8
ZERO_MODE = 1e-12
UNIT_MASS = "unit_mass"
RAW_VALUE = "raw_value"


@dataclass
class SpectralBasis:
    """Orthonormal eigenbasis on all vertices of one graph.

    ``functions[:, j]`` has eigenvalue ``eigenvalues[j]`` (renormalized);
    Dirichlet functions vanish on the boundary.
    """

    bc: str
    eigenvalues: np.ndarray
    functions: np.ndarray = field(repr=False)
    pointmass: np.ndarray = field(repr=False)
    coords: np.ndarray = field(repr=False)
    model: str = None

    def __len__(self):
        return len(self.eigenvalues)

    def inner(self, a, b):
        """Pointmass-weighted inner product of two functions."""
        return float(np.dot(np.asarray(a) * np.asarray(b), self.pointmass))

    def gram(self):
        F = self.functions
        return (F * self.pointmass[:, None]).T @ F

    def gram_deviation(self):
        return float(np.max(np.abs(self.gram() - np.eye(len(self)))))

    def coefficients(self, u):
        """``<u, u_j>`` for each basis element; ``u`` may be 1-d or columns."""
        u = np.asarray(u, dtype=float)
        return self.functions.T @ (u * (self.pointmass if u.ndim == 1 else self.pointmass[:, None]))


def orthonormal_basis(spectrum, pointmass=None):
    """Weighted modified Gram-Schmidt inside each eigenvalue cluster.

    Distinct eigenvalues give orthogonal functions already; the full Gram
    matrix is checked afterwards and a deviation above ``GRAM_TOL`` raises.
    """
    if spectrum.eigenfunctions is None:
        raise PreconditionError("spectrum carries no eigenfunctions")
    if pointmass is None:
        if spectrum.graph is None:
            raise PreconditionError("pointmasses are required when the spectrum has no graph")
        pointmass = spectrum.graph.pointmass
    mass = np.asarray(pointmass, dtype=float)
    F = np.array(spectrum.eigenfunctions, dtype=float, copy=True)
    if F.shape[0] != len(mass):
        raise PreconditionError("eigenfunctions and pointmasses have different lengths")
    for sl in cluster_slices(spectrum.graph_eigenvalues):
        for j in range(sl.start, sl.stop):
            v = F[:, j]
            start = np.sqrt(np.dot(v * v, mass))
            for i in range(sl.start, j):
                v = v - np.dot(v * F[:, i], mass) * F[:, i]
            norm = np.sqrt(np.dot(v * v, mass))
            if not norm > RANK_TOL * start:
                raise NumericalError(f"eigenfunction {j} is linearly dependent on its cluster")
            F[:, j] = v / norm
    F = normalize_signs(F)
    coords = spectrum.graph.coords if spectrum.graph is not None else None
    basis = SpectralBasis(bc=spectrum.bc, eigenvalues=np.array(spectrum.eigenvalues),
                          functions=F, pointmass=mass, coords=coords, model=spectrum.model)
    dev = basis.gram_deviation()
    if dev > GRAM_TOL:
        raise NumericalError(f"basis is not orthonormal (Gram deviation {dev:.3e})")
    return basis


def basis_for(params, m, bc="dirichlet"):
    """Complete orthonormal basis for one model, level and boundary condition.

    Dirichlet spectra come from decimation; Neumann spectra from the dense
    solver.
    """
    bc = check_bc(bc)
    m = check_level(m)
    if bc == "dirichlet":
        if params.model == INTERVAL:
            from .interval_decimation import decimate_interval
            spec = decimate_interval(params.p, m)
            spec.graph = build_graph(params, m)
        else:
            from .sg_decimation import full_spectrum_sg
            spec = full_spectrum_sg(params.r, m)
    else:
        spec = dense_spectrum(assemble_operator(build_graph(params, m), bc))
    return orthonormal_basis(spec)


def spectral_operator(fn, basis, u):
    """``sum_j fn(lambda_j) <u, u_j> u_j``; ``u`` may hold several columns."""
    u = np.asarray(u, dtype=float)
    if u.shape[0] != basis.functions.shape[0]:
        raise PreconditionError(f"function has {u.shape[0]} values, basis has "
                                f"{basis.functions.shape[0]} vertices")
    weights = np.asarray(fn(basis.eigenvalues), dtype=float)
    weights = np.broadcast_to(weights, basis.eigenvalues.shape)
    c = basis.coefficients(u)
    c = c * (weights if c.ndim == 1 else weights[:, None])
    return basis.functions @ c


def nearest_vertex(basis, location):
    """Index of the vertex closest to ``location`` (scalar or point)."""
    if basis.coords is None:
        raise PreconditionError("basis has no vertex coordinates")
    loc = np.atleast_1d(np.asarray(location, dtype=float))
    d = np.sum((basis.coords - loc[None, :]) ** 2, axis=1)
    return int(np.argmin(d))


def delta(basis, vertex, convention=UNIT_MASS):
    """Discrete delta at ``vertex``.

    ``unit_mass`` puts ``1/m_x`` at the vertex so the integral is 1;
    ``raw_value`` puts 1 there, so the integral equals the pointmass.
    """
    f = np.zeros(basis.functions.shape[0])
    if convention == UNIT_MASS:
        f[vertex] = 1.0 / basis.pointmass[vertex]
    elif convention == RAW_VALUE:
        f[vertex] = 1.0
    else:
        raise PreconditionError(f"unknown delta convention {convention!r}")
    return f


def _times(t, allow_negative):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if not allow_negative and np.any(t < 0):
        raise PreconditionError("times must be nonnegative")
    return t


def heat_solution(basis, f, t):
    """``u(., t) = sum_j exp(-lambda_j t) <f, u_j> u_j``.

    Returns one row per entry of ``t`` (a 1-d array for scalar ``t``).
    """
    scalar = np.ndim(t) == 0
    times = _times(t, False)
    c = basis.coefficients(np.asarray(f, dtype=float))
    lam = basis.eigenvalues
    out = np.array([basis.functions @ (np.exp(-lam * s) * c) for s in times])
    return out[0] if scalar else out


def wave_coefficients(eigenvalues, t):
    """``sin(t sqrt(lambda)) / sqrt(lambda)``, equal to ``t`` for ``lambda <= 1e-12``."""
    lam = np.asarray(eigenvalues, dtype=float)
    out = np.full(lam.shape, float(t))
    pos = lam > ZERO_MODE
    root = np.sqrt(lam[pos])
    out[pos] = np.sin(t * root) / root
    return out


def wave_solution(basis, f, t, allow_negative=False):
    """Solution with ``u(., 0) = 0`` and initial velocity ``f``."""
    scalar = np.ndim(t) == 0
    times = _times(t, allow_negative)
    c = basis.coefficients(np.asarray(f, dtype=float))
    out = np.array([basis.functions @ (wave_coefficients(basis.eigenvalues, s) * c)
                    for s in times])
    return out[0] if scalar else out


def write_time_series_csv(basis, times, values, path):
    """Rows ``(t, coordinates..., value)`` for each time and vertex."""
    values = np.atleast_2d(values)
    coords = basis.coords
    dims = coords.shape[1]
    names = ["x"] if dims == 1 else ["x", "y"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + names + ["value"])
        for t, row in zip(np.atleast_1d(times), values):
            for k in range(len(row)):
                w.writerow([format_float(t)] + [format_float(c) for c in coords[k]]
                           + [format_float(row[k])])
