"""Level-m graph approximations, the pointwise Laplacian, and the dense oracle.

Interval vertices are ordered by coordinate (vertex ``k`` sits at ``k/4^m``).
Gasket vertices are ordered by generation: the first ``|V_l|`` ids of the
level-m graph are exactly the level-l graph's vertices in the same order, so
a level-l function embeds by zero-padding. Gasket junctions are identified
through exact integer lattice coordinates in the frame ``q0=(0,0)``,
``q1=(N,0)``, ``q2=(0,N)`` with ``N = 4^m``.
"""

from dataclasses import dataclass, field
import csv
import math

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from . import models
from .exceptions import NumericalError, ResourceError
from .models import INTERVAL, SG
from .spectrum import Spectrum, cluster_slices
from .validation import check_bc, check_level

MAX_VERTICES = 5_000_000
ORACLE_CAP = 12000
RESIDUAL_TOL = 1e-9

_SQ3_2 = math.sqrt(3.0) / 2.0
# plane positions of q0 (top), q1 (bottom right), q2 (bottom left)
SG_CORNERS = np.array([[0.5, _SQ3_2], [1.0, 0.0], [0.0, 0.0]])


@dataclass(eq=False)
class GraphApprox:
    """Weighted graph on ``V_m`` with pointmasses.

    ``cells`` holds one row of vertex ids per m-cell (2 endpoints on the
    Interval, 3 corners on the gasket) and ``cell_outer`` the outer count of
    the cell's word; both follow lexicographic word order.
    """

    model: str
    level: int
    coords: np.ndarray
    edges: np.ndarray
    conductances: np.ndarray
    pointmass: np.ndarray
    boundary: tuple
    cells: np.ndarray
    cell_measure: np.ndarray
    cell_outer: np.ndarray
    params: object = None
    lattice: np.ndarray = field(default=None, repr=False)

    @property
    def n_vertices(self):
        return len(self.pointmass)

    @property
    def n_edges(self):
        return len(self.edges)

    @property
    def interior(self):
        mask = np.ones(self.n_vertices, dtype=bool)
        mask[list(self.boundary)] = False
        return np.flatnonzero(mask)

    def conductance_matrix(self):
        n = self.n_vertices
        a, b = self.edges[:, 0], self.edges[:, 1]
        c = self.conductances
        C = sp.coo_matrix((np.concatenate([c, c]), (np.concatenate([a, b]), np.concatenate([b, a]))),
                          shape=(n, n))
        return C.tocsr()

    def to_csv(self, edge_path, vertex_path):
        """Write the edge list and vertex table as CSV files."""
        with open(edge_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex_a", "vertex_b", "conductance"])
            for (a, b), c in zip(self.edges, self.conductances):
                w.writerow([int(a), int(b), format_float(c)])
        bset = set(self.boundary)
        with open(vertex_path, "w", newline="") as fh:
            w = csv.writer(fh)
            if self.model == INTERVAL:
                w.writerow(["id", "x", "pointmass", "is_boundary"])
                for i in range(self.n_vertices):
                    w.writerow([i, format_float(self.coords[i, 0]), format_float(self.pointmass[i]),
                                int(i in bset)])
            else:
                w.writerow(["id", "x", "y", "pointmass", "is_boundary"])
                for i in range(self.n_vertices):
                    w.writerow([i, format_float(self.coords[i, 0]), format_float(self.coords[i, 1]),
                                format_float(self.pointmass[i]), int(i in bset)])


def format_float(x):
    return repr(float(f"{float(x):.17g}"))


def _interval_outer_counts(m):
    k = np.arange(4**m)
    count = np.zeros(4**m, dtype=int)
    for _ in range(m):
        d = k % 4
        count += (d == 0) | (d == 3)
        k //= 4
    return count


def interval_graph_from_weights(m, measure, resistance, params=None):
    """Interval graph from per-cell ``measure`` and ``resistance`` arrays."""
    n_cells = 4**m
    n = n_cells + 1
    if n > MAX_VERTICES:
        raise ResourceError(f"level {m} needs {n} vertices (budget {MAX_VERTICES})")
    measure = np.asarray(measure, dtype=float)
    resistance = np.asarray(resistance, dtype=float)
    edges = np.column_stack([np.arange(n_cells), np.arange(1, n)])
    mass = np.zeros(n)
    mass[:-1] += measure / 2.0
    mass[1:] += measure / 2.0
    coords = (np.arange(n) / n_cells).reshape(-1, 1)
    return GraphApprox(
        model=INTERVAL, level=m, coords=coords, edges=edges,
        conductances=1.0 / resistance, pointmass=mass, boundary=(0, n - 1),
        cells=edges.copy(), cell_measure=measure, cell_outer=_interval_outer_counts(m),
        params=params, lattice=np.arange(n).reshape(-1, 1))


def build_interval_graph(params, m):
    """Level-``m`` Interval graph with vertices at ``k/4^m``."""
    m = check_level(m)
    if 4**m + 1 > MAX_VERTICES:
        raise ResourceError(f"level {m} exceeds the vertex budget")
    measure, resistance = models.interval_level_weights([params.p] * m)
    return interval_graph_from_weights(m, measure, resistance, params)


def sg_vertex_count(m):
    return (3 ** (2 * m + 1) + 3) // 2


def sg_cells(m):
    """Corner lattice coordinates and letters of all level-``m`` gasket cells.

    Returns ``(corners, letters)`` with ``corners`` of shape ``(9^m, 3, 2)``
    in the frame scaled by ``4^m`` and ``letters`` of shape ``(9^m, m)``
    holding ``3*j + k`` for the letter ``(j, k)``.
    """
    N = 4**m
    corners = np.array([[[0, 0], [N, 0], [0, N]]], dtype=np.int64)
    letters = np.zeros((1, 0), dtype=np.int64)
    for _ in range(m):
        P = corners
        kids = []
        for j in range(3):
            for k in range(3):
                # corner i of F_j F_k(cell) is (P_i + P_k + 2 P_j) / 4
                kid = (P + P[:, [k], :] + 2 * P[:, [j], :]) // 4
                kids.append(kid)
        corners = np.stack(kids, axis=1).reshape(-1, 3, 2)
        letters = np.concatenate([np.repeat(letters, 9, axis=0),
                                  np.tile(np.arange(9), len(letters)).reshape(-1, 1)], axis=1)
    return corners, letters


def sg_lattice_to_plane(lattice, m):
    N = float(4**m)
    a = lattice[:, 0] / N
    b = lattice[:, 1] / N
    q0, q1, q2 = SG_CORNERS
    return q0 + np.outer(a, q1 - q0) + np.outer(b, q2 - q0)


def sg_graph_from_weights(m, weight_fn, params=None):
    """Gasket graph with ``weight_fn(letters) -> (measure, conductance)`` per cell.

    ``letters`` is the ``(9^m, m)`` array from :func:`sg_cells`.
    """
    n = sg_vertex_count(m)
    if n > MAX_VERTICES:
        raise ResourceError(f"level {m} needs {n} vertices (budget {MAX_VERTICES})")
    index = {}
    order = []
    for level in range(m + 1):
        corners, _ = sg_cells(level)
        corners = corners * 4 ** (m - level)
        for cell in corners:
            for pt in cell:
                key = (int(pt[0]), int(pt[1]))
                if key not in index:
                    index[key] = len(order)
                    order.append(key)
    corners, letters = sg_cells(m)
    cells = np.array([[index[(int(a), int(b))] for a, b in cell] for cell in corners], dtype=np.int64)
    measure, conductance = weight_fn(letters)
    edges = np.concatenate([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]], axis=0)
    cond = np.concatenate([conductance, conductance, conductance])
    mass = np.zeros(n)
    for c in range(3):
        np.add.at(mass, cells[:, c], measure / 3.0)
    lattice = np.array(order, dtype=np.int64)
    outer = (letters // 3 == letters % 3).sum(axis=1) if m > 0 else np.zeros(1, dtype=int)
    return GraphApprox(
        model=SG, level=m, coords=sg_lattice_to_plane(lattice, m), edges=edges,
        conductances=cond, pointmass=mass, boundary=(0, 1, 2), cells=cells,
        cell_measure=measure, cell_outer=outer, params=params, lattice=lattice)


def build_sg_graph(params, m):
    """Level-``m`` twice-iterated gasket graph (the standard level-2m graph)."""
    m = check_level(m)
    if sg_vertex_count(m) > MAX_VERTICES:
        raise ResourceError(f"level {m} exceeds the vertex budget")

    def weights(letters):
        i = (letters // 3 == letters % 3).sum(axis=1)
        measure = params.mu0**i * params.mu1 ** (m - i)
        conductance = params.r0 ** (-i.astype(float)) * params.r1 ** (-(m - i).astype(float))
        return measure, conductance

    return sg_graph_from_weights(m, weights, params)


def build_graph(params, m):
    if params.model == INTERVAL:
        return build_interval_graph(params, m)
    return build_sg_graph(params, m)


@dataclass(eq=False)
class DiscreteOperator:
    """Matrix of ``-Delta_m`` restricted to the active vertices.

    Row ``i`` corresponds to vertex ``index[i]`` and encodes
    ``(1/m_x) sum_y c(x,y) (u(x) - u(y))``.
    """

    sparse: sp.csr_matrix
    bc: str
    index: np.ndarray
    pointmass: np.ndarray
    graph: GraphApprox = None

    @property
    def dimension(self):
        return len(self.index)

    @property
    def matrix(self):
        if self.dimension > ORACLE_CAP:
            raise ResourceError(f"dense operator of dimension {self.dimension} exceeds cap {ORACLE_CAP}")
        return self.sparse.toarray()

    def apply(self, u):
        """Apply to a function on the active vertices."""
        return self.sparse @ u

    def apply_full(self, f):
        """Apply to a function on all vertices; returns values on active vertices."""
        return self.sparse @ np.asarray(f)[self.index]

    def symmetrized(self):
        """Dense ``D^{1/2} A D^{-1/2}``, symmetric by construction."""
        s = np.sqrt(self.pointmass)
        A = self.matrix
        S = (s[:, None] * A) / s[None, :]
        return 0.5 * (S + S.T)


def assemble_operator(graph, bc="dirichlet"):
    """Assemble the pointmass-weighted Laplacian under the given boundary condition."""
    bc = check_bc(bc)
    C = graph.conductance_matrix()
    degree = np.asarray(C.sum(axis=1)).ravel()
    K = (sp.diags(degree) - C).tocsr()
    if bc == "dirichlet":
        index = graph.interior
    else:
        index = np.arange(graph.n_vertices)
    K = K[index][:, index]
    mass = graph.pointmass[index]
    A = sp.diags(1.0 / mass) @ K
    return DiscreteOperator(sparse=A.tocsr(), bc=bc, index=index, pointmass=mass, graph=graph)


def normalize_signs(vectors, tol=1e-10):
    """Flip columns so the first entry exceeding ``tol * max|v|`` is positive."""
    vectors = np.array(vectors, dtype=float, copy=True)
    for j in range(vectors.shape[1]):
        v = vectors[:, j]
        big = np.abs(v) > tol * np.max(np.abs(v))
        first = np.argmax(big)
        if v[first] < 0:
            vectors[:, j] = -v
    return vectors


def embed(op, U):
    """Lift functions on the active vertices to all vertices (zeros on V_0 for Dirichlet)."""
    n = op.graph.n_vertices
    full = np.zeros((n,) + U.shape[1:])
    full[op.index] = U
    return full


def residuals(op, values, F):
    """Backward error ``||A f - lam f||_inf / (||A||_inf ||f||_inf)`` per column.

    The residual is measured against the operator norm rather than ``|lam|``:
    rounding the stored eigenvector alone perturbs ``A f`` by about
    ``eps * ||A||``, which swamps ``|lam|`` for the smallest eigenvalues of
    strongly graded operators.
    """
    A = op.sparse
    F = np.asarray(F)
    if F.shape[0] != op.dimension:
        F = F[op.index]
    norm_a = float(abs(A).sum(axis=1).max()) if op.dimension else 1.0
    R = A @ F - F * np.asarray(values)[None, :]
    return np.max(np.abs(R), axis=0) / (norm_a * np.max(np.abs(F), axis=0))


def dense_spectrum(op, cap=ORACLE_CAP, scale=None, level=None):
    """Full eigendecomposition of ``op`` via the symmetric similarity transform.

    Returns a :class:`Spectrum` whose eigenfunctions have unit
    pointmass-weighted norm and a positive first significant entry.
    """
    if op.dimension > cap:
        raise ResourceError(f"operator dimension {op.dimension} exceeds oracle cap {cap}")
    graph = op.graph
    if scale is None:
        scale = graph.params.renorm ** graph.level if graph.params is not None else 1.0
    S = op.symmetrized()
    w, V = scipy.linalg.eigh(S)
    w, V = _refine(op, w, V)
    F = V / np.sqrt(op.pointmass)[:, None]
    F = normalize_signs(F)
    resid = residuals(op, w, F)
    if resid.max() > RESIDUAL_TOL:
        raise NumericalError(f"dense eigensolver residual too large (max {resid.max():.3e})",
                             residual=float(resid.max()))
    floor = op.dimension * np.finfo(float).eps * float(abs(op.sparse).sum(axis=1).max())
    if op.bc == "neumann" and len(w) and abs(w[0]) <= floor:
        # the graph is connected, so the kernel is exactly the constants;
        # the computed value is rounding noise that exp(-lambda t) would amplify
        w = w.copy()
        w[0] = 0.0
        F[:, 0] = 1.0 / math.sqrt(float(op.pointmass.sum()))
    if op.bc == "dirichlet" and len(w):
        # the Dirichlet operator is positive definite; eigenvalues below the
        # absolute accuracy eps*||A|| cannot be resolved by the dense route
        if w[0] <= floor:
            raise NumericalError(
                f"operator too ill-conditioned for the dense oracle: smallest eigenvalue "
                f"{w[0]:.3e} is below the resolution bound {floor:.3e}")
    graph_values = w / scale
    return Spectrum(graph_values, scale, embed(op, F), provenance="oracle",
                    model=graph.model, level=graph.level if level is None else level,
                    params=graph.params, bc=op.bc, graph=graph)


def _sparse_symmetrized(op):
    s = np.sqrt(op.pointmass)
    S = (sp.diags(s) @ op.sparse @ sp.diags(1.0 / s)).tocsc()
    return ((S + S.T) * 0.5).tocsc()


def _refine(op, w, V):
    """One step of block inverse iteration plus Rayleigh-Ritz per cluster.

    The dense solver is accurate to ``eps * ||S||`` in absolute terms, which is
    not enough for the smallest eigenvalues of strongly graded operators.
    """
    S = _sparse_symmetrized(op)
    n = S.shape[0]
    if n == 0:
        return w, V
    norm = float(np.max(np.abs(w)))
    eye = sp.identity(n, format="csc")
    w = w.copy()
    V = V.copy()
    for sl in cluster_slices(w):
        sigma = float(np.mean(w[sl])) - 1e-13 * norm
        try:
            lu = scipy.sparse.linalg.splu(S - sigma * eye)
            X = lu.solve(V[:, sl])
        except RuntimeError:
            continue
        if not np.all(np.isfinite(X)):
            continue
        Q, _ = np.linalg.qr(X)
        H = Q.T @ (S @ Q)
        mu, U = np.linalg.eigh(0.5 * (H + H.T))
        w[sl] = mu
        V[:, sl] = Q @ U
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def kron_reduce(graph, keep):
    """Schur complement of the conductance Laplacian onto ``keep`` vertices."""
    C = graph.conductance_matrix()
    degree = np.asarray(C.sum(axis=1)).ravel()
    K = (sp.diags(degree) - C).toarray()
    keep = np.asarray(keep)
    rest = np.setdiff1d(np.arange(graph.n_vertices), keep)
    Kkk = K[np.ix_(keep, keep)]
    Kkr = K[np.ix_(keep, rest)]
    Krr = K[np.ix_(rest, rest)]
    return Kkk - Kkr @ np.linalg.solve(Krr, Kkr.T)


def effective_resistance(graph, a, b):
    """Two-terminal effective resistance between vertices ``a`` and ``b``.

    Grounds ``b`` and injects a unit current at ``a``; the potential at ``a``
    is the resistance. This avoids the cancellation of the Schur complement
    when conductances span many orders of magnitude.
    """
    C = graph.conductance_matrix()
    degree = np.asarray(C.sum(axis=1)).ravel()
    K = (sp.diags(degree) - C).tocsc()
    keep = np.flatnonzero(np.arange(graph.n_vertices) != b)
    rhs = (keep == a).astype(float)
    v = scipy.sparse.linalg.spsolve(K[keep][:, keep].tocsc(), rhs)
    return float(v[np.flatnonzero(keep == a)[0]])
