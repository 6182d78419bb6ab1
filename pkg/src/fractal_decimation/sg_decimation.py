"""Spectral decimation for the Dirichlet Laplacian on the twice-iterated gasket.

Graph eigenvalues at level ``m`` are dense eigenvalues times ``L(r)^m``.
Going from level ``m`` to ``m+1`` each ``m``-cell with corner values
``x0, x1, x2`` receives twelve new points::

    w_i  = (P_j + P_k) / 2
    z_i  = (2 P_i + P_j + P_k) / 4
    y_ij = (3 P_i + P_j) / 4

whose values follow from the extension formulas below. Eigenvalue 9 carries
a born family whose level-m members decimate through only three branches;
the other two roots are the forbidden values ``b1``, ``b2``.
"""

from dataclasses import dataclass, field
import functools
import math

import numpy as np
import scipy.linalg

from .exceptions import (ConsistencyError, ExtensionError, NumericalError, PreconditionError,
                         ResourceError,
                         SingularityError)
from .graphs import ORACLE_CAP, assemble_operator, build_sg_graph, normalize_signs, sg_cells
from .models import SG, SGParams
from .spectrum import BORN, CLUSTER_RTOL, DECIMATED, EigenGenealogy, Spectrum, cluster_slices
from .validation import check_level, check_r

FORBIDDEN_RTOL = 1e-9
IMAG_TOL = 1e-9
NINE = 9.0
# outside this range the forbidden values merge in double precision
# (b2 ~ b3 ~ 9 and b6 ~ b7 ~ 6) and root classification is unreliable
DECIMATION_R_RANGE = (1e-6, 1e6)
B6 = 6.0

ROLES = ("w0", "w1", "w2", "z0", "z1", "z2", "y01", "y02", "y10", "y12", "y20", "y21")


def _quadratic(r):
    return np.array([1.0 + r, -(9.0 * r + 6.0), 9.0])


def _cubic(r):
    s = (1.0 + r) ** 2
    return np.array([4.0 * s, -60.0 * s, 243.0 * r * r + 558.0 * r + 279.0,
                     -(243.0 * r * r + 702.0 * r + 405.0)])


def gamma_coefficients(r):
    """Coefficients of ``gamma(r, .)`` (degree 5, highest first)."""
    return np.polymul(_quadratic(r), _cubic(r))


def gamma_eval(r, lam):
    r = check_r(r)
    lam = np.asarray(lam, dtype=float)
    return np.polyval(_quadratic(r), lam) * np.polyval(_cubic(r), lam)


def _numerator(r):
    # lambda * (lambda (1 + r) - 6 r - 3) * cubic(lambda)
    return np.polymul([1.0 + r, -(6.0 * r + 3.0), 0.0], _cubic(r))


def _denominator(r):
    return np.array([1.0 + r, -(3.0 * r + 6.0)])


def pole(r):
    """The pole ``(3r + 6)/(1 + r)`` of the forward map."""
    return (3.0 * r + 6.0) / (1.0 + r)


def lambda_forward_sg(r, lam_next):
    """``lambda_m`` as a function of ``lambda_{m+1}``.

    At ``r = 1`` the pole cancels against the zero ``(6r + 3)/(1 + r)`` and the
    map reduces to ``-lambda * cubic(lambda) / 54``.
    """
    r = check_r(r)
    x = np.asarray(lam_next, dtype=float)
    den = 54.0 * r * np.polyval(_denominator(r), x)
    if r == 1.0:
        return -x * np.polyval(_cubic(r), x) / 54.0
    scale = 54.0 * r * (1.0 + r) * np.maximum(1.0, np.abs(x))
    if np.any(np.abs(den) <= 1e-12 * scale):
        raise SingularityError(f"forward map has a pole at {pole(r)!r}")
    return -np.polyval(_numerator(r), x) / den


def quintic_coefficients(r, lam_m):
    """Clearing the denominator of ``lambda_forward_sg(r, x) = lam_m``."""
    return np.polyadd(_numerator(r), 54.0 * r * lam_m * _denominator(r))


@dataclass(frozen=True)
class ForbiddenSet:
    """Forbidden and born reference values for one ``r``.

    ``b1 < b2`` are the roots of the quadratic factor of gamma; ``b4 < b5 < b3``
    are the roots of the cubic factor, which reproduces the ordering
    ``b1 < b4 < b5 < b2 < b3`` at ``r = 1``.
    """

    r: float
    b1: float
    b2: float
    b3: float
    b4: float
    b5: float
    b6: float = B6
    b7: float = 0.0

    @property
    def gamma_roots(self):
        return (self.b1, self.b2, self.b3, self.b4, self.b5)

    @property
    def excluded(self):
        return self.gamma_roots + (self.b6,)

    def images(self):
        """``(value, forward image)`` for each excluded value.

        A quintic root near a forbidden value is only a true collision when
        ``lambda_m`` also equals that value's image; otherwise it is a regular
        preimage that happens to sit close by (cubic roots attract the small
        preimages of tiny ``lambda_m`` when ``r`` is large).
        """
        try:
            six = float(lambda_forward_sg(self.r, self.b6))
        except SingularityError:
            six = math.inf
        return ((self.b1, NINE), (self.b2, NINE), (self.b3, 0.0), (self.b4, 0.0),
                (self.b5, 0.0), (self.b6, six))


def _real_sorted_roots(coeffs):
    roots = np.roots(coeffs)
    if np.max(np.abs(roots.imag)) > 1e-7 * max(1.0, np.max(np.abs(roots))):
        raise ConsistencyError(f"expected real roots, got {roots}")
    return np.sort(roots.real)


@functools.lru_cache(maxsize=256)
def forbidden_set(r):
    r = check_r(r)
    b1, b2 = _real_sorted_roots(_quadratic(r))
    b4, b5, b3 = (_polish(_cubic(r), x) for x in _real_sorted_roots(_cubic(r)))
    return ForbiddenSet(r=r, b1=_polish(_quadratic(r), b1), b2=_polish(_quadratic(r), b2),
                        b3=b3, b4=b4, b5=b5, b7=(9.0 + 6.0 * r) / (1.0 + r))


def _polish(coeffs, x, steps=3):
    d = np.polyder(coeffs)
    for _ in range(steps):
        dp = np.polyval(d, x)
        if dp == 0:
            break
        x = x - np.polyval(coeffs, x) / dp
    return float(x)


def backward_error(coeffs, x):
    """``|P(x)| / sum |c_i| |x|^i``: relative residual of a polynomial root."""
    powers = np.abs(x) ** np.arange(len(coeffs) - 1, -1, -1)
    return abs(np.polyval(coeffs, x)) / float(np.dot(np.abs(coeffs), powers))


@dataclass(frozen=True)
class QuinticBranchSet:
    """All roots of the cleared quintic for one ``lambda_m``.

    ``flags`` holds ``"admissible"``, ``"forbidden"`` or ``"complex"`` per
    entry of ``roots`` (complex roots are reported by real part).
    """

    lam_m: float
    roots: np.ndarray
    flags: tuple

    @property
    def admissible(self):
        return np.array([x for x, f in zip(self.roots, self.flags) if f == "admissible"])


def expected_branch_count(lam_m):
    return 3 if is_nine(lam_m) else 5


def is_nine(lam):
    return abs(lam - NINE) <= CLUSTER_RTOL * NINE


def phi_branches_sg(r, lam_m, check=True):
    """Inverse branches of the forward map at ``lam_m`` via companion roots.

    Roots are Newton-polished on the cleared quintic, which keeps full
    relative accuracy for the small branch near 0.
    """
    r = check_r(r)
    lam_m = float(lam_m)
    coeffs = quintic_coefficients(r, lam_m)
    raw = np.roots(coeffs)
    order = np.argsort(raw.real, kind="stable")
    raw = raw[order]
    fs = forbidden_set(r)
    roots, flags = [], []
    for z in raw:
        if abs(z.imag) > IMAG_TOL * max(1.0, abs(z.real)):
            roots.append(z.real)
            flags.append("complex")
            continue
        x = _polish(coeffs, z.real)
        roots.append(x)
        near = any(abs(x - b) <= FORBIDDEN_RTOL * max(1.0, abs(b))
                   and abs(lam_m - image) <= CLUSTER_RTOL * max(abs(lam_m), 1e-300)
                   for b, image in fs.images())
        ok = x > 0 and backward_error(coeffs, x) <= 1e-10 and not near
        flags.append("admissible" if ok else "forbidden")
    result = QuinticBranchSet(lam_m=lam_m, roots=np.array(roots), flags=tuple(flags))
    if check and lam_m > 0:
        n = len(result.admissible)
        if n != expected_branch_count(lam_m):
            raise ConsistencyError(
                f"r={r}: lambda_m={lam_m!r} has {n} admissible branches, expected "
                f"{expected_branch_count(lam_m)}; roots {result.roots}, flags {result.flags}")
    return result


def _ext_coefficients(r, lam):
    """Coefficient arrays for the closed-form extension, each shaped like ``lam``."""
    s = (1.0 + r) ** 2
    l = np.asarray(lam, dtype=float)
    A = (4.0 * l**4 * s - 72.0 * l**3 * s + l**2 * (405.0 * r * r + 900.0 * r + 459.0)
         - l * (756.0 * r * r + 2106.0 * r + 1242.0) + 243.0 * r * r + 1134.0 * r + 1215.0)
    B = -27.0 * l * r * r - 81.0 * l * r + 243.0 * r * r + 405.0 * r
    C = (18.0 * l**2 * r * r + 18.0 * l**2 * r - 189.0 * l * r * r - 189.0 * l * r
         + 243.0 * r * r + 567.0 * r)
    W = 9.0 * l * s - 81.0 * r * r - 162.0 * r - 27.0
    D = (2.0 * l**3 * s - 30.0 * l**2 * s + l * (117.0 * r * r + 270.0 * r + 135.0)
         - (81.0 * r * r + 270.0 * r + 189.0))
    E = (4.0 * l**3 * s - 54.0 * l**2 * s + l * (171.0 * r * r + 432.0 * r + 225.0)
         - (81.0 * r * r + 324.0 * r + 297.0))
    G = -3.0 * l**2 * s + l * (36.0 * r * r + 63.0 * r + 27.0) - (81.0 * r * r + 189.0 * r + 54.0)
    return A, B, C, W, D, E, G


def extension_matrix(r, lam):
    """Matrices ``M`` with ``new = M @ (x0, x1, x2)`` in :data:`ROLES` order.

    Shape ``lam.shape + (12, 3)``.
    """
    r = check_r(r)
    lam = np.asarray(lam, dtype=float)
    fs = forbidden_set(r)
    flat = np.atleast_1d(lam)
    for b in fs.excluded:
        hit = np.abs(flat - b) <= FORBIDDEN_RTOL * max(1.0, abs(b))
        if hit.any():
            raise ExtensionError(f"extension at forbidden eigenvalue {flat[hit][0]!r} (root {b!r})",
                                 offending=b)
    gam = gamma_eval(r, lam)
    A, B, C, W, D, E, G = _ext_coefficients(r, lam)
    M = np.zeros(lam.shape + (12, 3))
    for i in range(3):
        j, k = [t for t in range(3) if t != i]
        M[..., i, i] = 9.0 * W / gam
        M[..., i, j] = M[..., i, k] = 9.0 * D / gam
        M[..., 3 + i, i] = 9.0 * E / gam
        M[..., 3 + i, j] = M[..., 3 + i, k] = 9.0 * G / gam
    for row, (i, j) in enumerate([(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]):
        k = 3 - i - j
        M[..., 6 + row, i] = -3.0 * A / gam
        M[..., 6 + row, j] = -3.0 * C / gam
        M[..., 6 + row, k] = -3.0 * B / gam
    return M


def extend_cell_sg(r, lam, x0, x1, x2):
    """The twelve new values of one cell, as a dict keyed by :data:`ROLES`."""
    M = extension_matrix(r, float(lam))
    vals = M @ np.array([x0, x1, x2], dtype=float)
    return dict(zip(ROLES, vals))


@functools.lru_cache(maxsize=16)
def cell_extension_ids(m):
    """Vertex ids (in the level-(m+1) graph) of corners and new points per m-cell."""
    g = _topology(m + 1)
    index = {(int(a), int(b)): i for i, (a, b) in enumerate(g.lattice)}
    corners, _ = sg_cells(m)
    P = corners * 4
    corner_ids = np.array([[index[tuple(map(int, pt))] for pt in cell] for cell in P])
    new = []
    for i in range(3):
        j, k = [t for t in range(3) if t != i]
        new.append((P[:, j] + P[:, k]) // 2)
    for i in range(3):
        j, k = [t for t in range(3) if t != i]
        new.append((2 * P[:, i] + P[:, j] + P[:, k]) // 4)
    for i, j in [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]:
        new.append((3 * P[:, i] + P[:, j]) // 4)
    new_ids = np.array([[index[tuple(map(int, pt))] for pt in role] for role in new]).T
    return corner_ids, new_ids


@functools.lru_cache(maxsize=8)
def _topology(m):
    return build_sg_graph(SGParams(1.0), m)


def extend_function_sg(r, lam, f, m):
    """Extend level-``m`` functions (columns) to level ``m+1``."""
    f = np.asarray(f, dtype=float)
    squeeze = f.ndim == 1
    if squeeze:
        f = f[:, None]
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (f.shape[1],))
    corner_ids, new_ids = cell_extension_ids(m)
    n_next = (3 ** (2 * m + 3) + 3) // 2
    out = np.zeros((n_next, f.shape[1]))
    out[: f.shape[0]] = f
    M = extension_matrix(r, lam)  # (k, 12, 3)
    X = f[corner_ids]  # (cells, 3, k)
    vals = np.einsum("kji,cik->cjk", M, X)
    out[new_ids.ravel()] = vals.reshape(-1, f.shape[1])
    return out[:, 0] if squeeze else out


def born_multiplicities(r, level):
    """``{seed: multiplicity}`` for eigenvalues born at ``level`` (>= 1)."""
    level = check_level(level)
    k = level - 1
    cubic = (3 ** (2 * k) + 3) // 2
    mult = {"b3": cubic, "b4": cubic, "b5": cubic,
            "nine": (3 ** (2 * k + 2) - 3) // 2, "b7": 9**k}
    if level == 1:
        mult = {"b1": 1, "b2": 1, **mult}
    return mult


def born_value(r, seed):
    fs = forbidden_set(r)
    if seed == "nine":
        return NINE
    return getattr(fs, seed)


def counting_identity(m):
    """Terms of the level ``m -> m+1`` count; the last entry is the target."""
    n_m = (3 ** (2 * m + 1) - 3) // 2
    nine = (3 ** (2 * m) - 3) // 2
    decimated = 5 * (n_m - nine) + 3 * nine
    born = sum(born_multiplicities(1.0, m + 1).values())
    return decimated, born, (3 ** (2 * m + 3) - 3) // 2


@dataclass
class BornEigenspace:
    value: float
    seeds: tuple
    multiplicity: int
    basis: np.ndarray = field(default=None, repr=False)


def _group_born(r, level):
    """Born classes merged when their values coincide (e.g. b3 = b7 at r = 1)."""
    items = sorted(((born_value(r, s), s, n) for s, n in born_multiplicities(r, level).items()))
    groups = []
    for v, s, n in items:
        if groups and abs(v - groups[-1][0]) <= CLUSTER_RTOL * max(1.0, v):
            groups[-1][1].append((s, n))
        else:
            groups.append((v, [(s, n)]))
    return groups


def _window_eigenvectors(S, value, renorm):
    lam = value * renorm
    delta = 1e-6 * max(1.0, lam)
    w, V = scipy.linalg.eigh(S, subset_by_value=(lam - delta, lam + delta))
    return w, V


def born_eigenspaces_sg(r, m, decimated=None, op=None):
    """Born eigenvalues at level ``m`` with numerically extracted bases.

    Bases are weighted-orthonormal columns on all level-``m`` vertices.
    ``decimated`` optionally gives ``(values, functions)`` of decimated pairs
    to project out when a born value coincides with a decimated one.
    """
    r = check_r(r)
    m = check_level(m)
    params = SGParams(r)
    if op is None:
        op = assemble_operator(build_sg_graph(params, m), "dirichlet")
    if op.dimension > ORACLE_CAP:
        raise ResourceError(f"born eigenspaces at level {m} need a dense solve of dimension "
                            f"{op.dimension}")
    S = op.symmetrized()
    sq = np.sqrt(op.pointmass)
    renorm = params.renorm**m
    out = []
    for value, members in _group_born(r, m):
        need = sum(n for _, n in members)
        _, V = _window_eigenvectors(S, value, renorm)
        if decimated is not None:
            dv, dF = decimated
            hit = np.abs(np.asarray(dv) - value) <= 1e-6 * max(1.0, value)
            if hit.any():
                U = dF[op.index][:, hit] * sq[:, None]
                U, _ = np.linalg.qr(U)
                V = V - U @ (U.T @ V)
                u, sv, _ = np.linalg.svd(V, full_matrices=False)
                V = u[:, sv > 0.5]
        if V.shape[1] < need:
            raise ConsistencyError(
                f"r={r}, level {m}: eigenspace at {value!r} has dimension {V.shape[1]}, "
                f"born classes {members} need {need}")
        basis = np.zeros((op.graph.n_vertices, need))
        basis[op.index] = V[:, :need] / sq[:, None]
        out.append(BornEigenspace(value=value, seeds=tuple(s for s, _ in members),
                                  multiplicity=need, basis=basis))
    return out


def _normalize(F, mass):
    norms = np.sqrt(np.einsum("ij,ij,i->j", F, F, mass))
    return normalize_signs(F / norms)


def full_spectrum_sg(r, m, eigenfunctions=True):
    """Complete Dirichlet spectrum of the level-``m`` gasket graph.

    Built bottom-up from level 1; every decimated pair records its branch
    sequence. Eigenfunctions need dense solves for the born eigenspaces and
    are limited to operators within the oracle cap.
    """
    r = check_r(r)
    m = check_level(m)
    lo, hi = DECIMATION_R_RANGE
    if not lo <= r <= hi:
        raise NumericalError(f"gasket decimation is supported for {lo} <= r <= {hi}, got {r}")
    params = SGParams(r)
    values, genealogies, provenance, F = [], [], [], None
    for level in range(1, m + 1):
        if level > 1:
            new_vals, new_gen, new_prov, cols = [], [], [], []
            prev = np.asarray(values)
            for sl in cluster_slices(prev):
                branches = phi_branches_sg(r, float(np.mean(prev[sl])))
                for b_index, (x, flag) in enumerate(zip(branches.roots, branches.flags)):
                    if flag != "admissible":
                        continue
                    for i in range(sl.start, sl.stop):
                        new_vals.append(x)
                        new_gen.append(genealogies[i].extend(b_index + 1))
                        new_prov.append(DECIMATED)
                        cols.append(i)
            if eigenfunctions:
                F = extend_function_sg(r, np.asarray(new_vals), F[:, cols], level - 1)
            values, genealogies, provenance = new_vals, new_gen, new_prov
        born_vals, born_gen = [], []
        for v, members in _group_born(r, level):
            for s, n in members:
                born_vals += [v] * n
                born_gen += [EigenGenealogy(level, s)] * n
        if eigenfunctions:
            mass = build_sg_graph(params, level).pointmass
            dec = None
            if F is not None and F.shape[1]:
                dec = (np.asarray(values), _normalize(F, mass))
            spaces = born_eigenspaces_sg(r, level, decimated=dec)
            B = np.column_stack([sp.basis for sp in spaces])
            F = B if F is None else np.column_stack([F, B])
        values = list(values) + born_vals
        genealogies = list(genealogies) + born_gen
        provenance = list(provenance) + [BORN] * len(born_vals)
        expected = (3 ** (2 * level + 1) - 3) // 2
        if len(values) != expected:
            dec_count = len(values) - len(born_vals)
            raise ConsistencyError(
                f"level {level}: {dec_count} decimated + {len(born_vals)} born != {expected}")
    graph = None
    if eigenfunctions:
        graph = build_sg_graph(params, m)
        F = _normalize(F, graph.pointmass)
    return Spectrum(np.asarray(values), params.renorm**m, F, genealogies, provenance,
                    model=SG, level=m, params=params, bc="dirichlet", graph=graph)


def renormalized_limit_sg(r, genealogy, depth):
    """Renormalized value at level ``depth`` along ``genealogy`` then ``Phi^1``.

    Branch indices refer to positions among the sorted quintic roots, as
    recorded by :func:`full_spectrum_sg`. Returns ``(value, change)`` where
    ``change`` is the relative difference from the previous level.
    """
    r = check_r(r)
    if depth <= genealogy.level:
        raise PreconditionError(f"depth must exceed the genealogy level {genealogy.level}")
    L = SGParams(r).L
    lam = born_value(r, genealogy.seed)
    value = lam / L**genealogy.birth_level
    for b in genealogy.branches:
        nxt = float(phi_branches_sg(r, lam, check=False).roots[b - 1])
        value *= nxt / (lam * L)
        lam = nxt
    prev = value
    for _ in range(genealogy.level, depth):
        nxt = float(phi_branches_sg(r, lam, check=False).admissible[0])
        prev, value = value, value * nxt / (lam * L)
        lam = nxt
    return value, abs(value - prev) / abs(value)


def ground_state_limit(r, depth):
    """Renormalized ground eigenvalue along ``b1`` followed by ``Phi^1``."""
    return renormalized_limit_sg(r, EigenGenealogy(1, "b1"), max(depth, 2))


def golden_level1(r, seed):
    """Explicit level-1 eigenvectors keyed by role for ``b1``, ``b2``, ``b7`` and 9."""
    if seed in ("b1", "b2"):
        root = math.sqrt(r * (8.0 + 9.0 * r))
        a = 4.0 * r / (r + root) if seed == "b1" else 4.0 * r / (r - root)
        vals = {k: (a if k.startswith("y") else 1.0) for k in ROLES}
    elif seed == "b7":
        vals = dict.fromkeys(ROLES, 0.0)
        vals.update(y01=1.0, y02=-1.0, y10=-1.0, y12=1.0, y20=1.0, y21=-1.0)
    elif seed == "nine":
        vals = dict.fromkeys(ROLES, 0.0)
        vals.update(w0=2.0, y10=1.0, y20=1.0, z1=-1.0, z2=-1.0, y12=-1.0, y21=-1.0)
    else:
        raise ValueError(f"no explicit level-1 pattern for {seed!r}")
    return vals


def golden_vector(r, seed):
    """The pattern of :func:`golden_level1` on level-1 vertex ids (15 entries)."""
    _, new_ids = cell_extension_ids(0)
    f = np.zeros(15)
    vals = golden_level1(r, seed)
    for role, vid in zip(ROLES, new_ids[0]):
        f[vid] = vals[role]
    return f
