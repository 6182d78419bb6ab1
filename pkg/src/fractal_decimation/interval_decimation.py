"""Spectral decimation for the Dirichlet Laplacian on the Interval.

Graph eigenvalues live in (0, 4). Level ``m+1`` is obtained from level ``m``
by four inverse branches of the quartic ``quartic_forward`` plus three born
eigenvalues (the forbidden values, realized by miniaturization). Every
routine also accepts a level-indexed parameter sequence so that the
hierarchical variant reuses the same machinery: ``p_seq[l]`` governs the
split of level-``l`` cells into level-``l+1`` cells.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import models
from .exceptions import ConsistencyError, DomainError, ExtensionError, PreconditionError
from .graphs import interval_graph_from_weights, normalize_signs
from .models import INTERVAL, IntervalParams
from .spectrum import BORN, DECIMATED, EigenGenealogy, Spectrum
from .validation import check_level, check_p

FORBIDDEN_RTOL = 1e-12
SEEDS = ("G1", "G2", "G3")


def _root(p, lam, co=None):
    """``sqrt(1 - pq*lam)``; with ``co = 4 - lam`` it is formed as
    ``sqrt((q-p)^2 + pq*co)``, which keeps accuracy as ``lam -> 4``."""
    q = 1.0 - p
    lam = np.asarray(lam, dtype=float)
    if co is None:
        s = 1.0 - p * q * lam
    else:
        s = (q - p) ** 2 + p * q * np.asarray(co, dtype=float)
    if np.any(s < -1e-12):
        raise DomainError(f"phi maps undefined: 1 - pq*lambda = {np.min(s):.3e} < 0")
    return np.sqrt(np.clip(s, 0.0, None))


def _branch_data(p, lam, co=None):
    """Per-branch ``(value, 4 - value, value - 2, d)`` with ``d = (value-2)^2 - 4q``.

    Each quantity is formed without cancellation, so eigenvalues lying very
    close to a forbidden value still extend accurately. Arrays have shape
    ``lam.shape + (4,)``.
    """
    q = 1.0 - p
    lam = np.asarray(lam, dtype=float)
    co = 4.0 - lam if co is None else np.asarray(co, dtype=float)
    root = _root(p, lam, co)
    small = 2.0 * p * q * lam / (1.0 + root)  # 2 - 2 root
    big = 2.0 + 2.0 * root
    sb = np.sqrt(big)
    ss = np.sqrt(small)
    phi1 = small / (2.0 + sb)  # = 2 - sqrt(big)

    def gap(sign):
        # root - sign*(q - p), rationalized when the terms nearly cancel
        k = sign * (q - p)
        with np.errstate(divide="ignore", invalid="ignore"):
            rationalized = p * q * co / (root + k)
        return np.where(k <= 0, root - k, rationalized)

    d_big = 2.0 * gap(1.0)
    d_small = -2.0 * gap(-1.0)
    value = np.stack([phi1, 2.0 - ss, 2.0 + ss, 2.0 + sb], axis=-1)
    covalue = np.stack([2.0 + sb, 2.0 + ss, 2.0 - ss, phi1], axis=-1)
    shift = np.stack([-sb, -ss, ss, sb], axis=-1)
    d = np.stack([d_big, d_small, d_small, d_big], axis=-1)
    return value, covalue, shift, d


def phi_maps(p, lam):
    """The four inverse branches ``(Phi_1, ..., Phi_4)`` of the quartic.

    Written in cancellation-free form so that ``Phi_1`` keeps full relative
    accuracy for tiny arguments. Returns an array of shape ``lam.shape + (4,)``.
    """
    p = check_p(p)
    return _branch_data(p, lam)[0]


def phi(p, lam, branch):
    return phi_maps(p, lam)[..., branch - 1]


def quartic_forward(p, lam_next):
    """``lambda_m`` as a function of ``lambda_{m+1}``."""
    q = 1.0 - p
    x = np.asarray(lam_next, dtype=float)
    return (4.0 - x) * (x - 2.0) ** 2 * x / (4.0 * p * q)


def forbidden_interval(p):
    q = 1.0 - check_p(p)
    s = math.sqrt(q)
    # 2(1 - sqrt(q)) without cancellation for small p
    return (2.0 * (1.0 - q) / (1.0 + s), 2.0, 2.0 * (1.0 + s))


def _cell_values(p, shift, d, x1, x2):
    q = 1.0 - p
    if np.any(shift == 0) or np.any(d == 0):
        raise ExtensionError("extension is singular at a forbidden eigenvalue")
    a = shift**2 - 2.0 * q
    y1 = (-4.0 * p * q * x2 - 2.0 * p * x1 * a) / (d * shift)
    y2 = (-4.0 * p * q * x1 - 2.0 * p * x2 * a) / (d * shift)
    z = 2.0 * p * (x1 + x2) / d
    return y1, z, y2


def _check_admissible(p, lam):
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    for b in forbidden_interval(p):
        hit = np.abs(lam - b) <= FORBIDDEN_RTOL * b
        if hit.any():
            raise ExtensionError(f"eigenvalue {lam[hit][0]!r} is forbidden (root {b!r})", offending=b)


def extend_cell(p, lam, x1, x2):
    """Values ``(y1, z, y2)`` at the three new points of one cell."""
    p = check_p(p)
    _check_admissible(p, lam)
    q = 1.0 - p
    lam = np.asarray(lam, dtype=float)
    shift = lam - 2.0
    return _cell_values(p, shift, shift**2 - 4.0 * q, x1, x2)


def _extend_columns(p, shift, d, f):
    n_cells = f.shape[0] - 1
    out = np.zeros((4 * n_cells + 1, f.shape[1]))
    out[::4] = f
    y1, z, y2 = _cell_values(p, shift[None, :], d[None, :], f[:-1], f[1:])
    out[1::4] = y1
    out[2::4] = z
    out[3::4] = y2
    return out


def extend_function(p, lam, f):
    """Extend level-m functions (columns of ``f``) to level m+1.

    ``lam`` holds one level-(m+1) graph eigenvalue per column.
    """
    p = check_p(p)
    f = np.asarray(f, dtype=float)
    squeeze = f.ndim == 1
    if squeeze:
        f = f[:, None]
    lam = np.broadcast_to(np.asarray(lam, dtype=float), (f.shape[1],))
    _check_admissible(p, lam)
    shift = lam - 2.0
    out = _extend_columns(p, shift, shift**2 - 4.0 * (1.0 - p), f)
    return out[:, 0] if squeeze else out


def born_seeds(p):
    """Level-1 born eigenpairs ``[(value, function on V_1, seed), ...]``.

    Functions include the zero boundary values.
    """
    q = 1.0 - check_p(p)
    s = math.sqrt(q)
    g1 = np.array([0.0, s, 1.0, s, 0.0])
    g2 = np.array([0.0, 1.0, 0.0, -1.0, 0.0])
    g3 = np.array([0.0, s, -1.0, s, 0.0])
    values = forbidden_interval(p)
    return [(values[0], g1, "G1"), (values[1], g2, "G2"), (values[2], g3, "G3")]


def parity(f, tol=1e-9):
    """``"symmetric"`` or ``"skew"`` about 1/2, else raise."""
    f = np.asarray(f, dtype=float)
    scale = max(np.max(np.abs(f)), 1e-300)
    if np.max(np.abs(f - f[::-1])) <= tol * scale:
        return "symmetric"
    if np.max(np.abs(f + f[::-1])) <= tol * scale:
        return "skew"
    raise PreconditionError("function is neither symmetric nor skew-symmetric about 1/2")


def miniaturize(p, f, kind=None):
    """Glue four scaled copies of ``f`` into a level-(m+1) eigenfunction.

    Works column-wise on 2-d input; ``kind`` is checked when not given.
    """
    p = check_p(p)
    q = 1.0 - p
    f = np.asarray(f, dtype=float)
    if f.ndim == 2:
        return np.column_stack([miniaturize(p, f[:, j], kind) for j in range(f.shape[1])])
    if kind is None:
        kind = parity(f)
    elif kind != parity(f):
        raise PreconditionError(f"function is not {kind} about 1/2")
    t = p / q
    weights = (1.0, t, t, 1.0) if kind == "skew" else (1.0, -t, t, -1.0)
    n = len(f) - 1
    out = np.zeros(4 * n + 1)
    for i, w in enumerate(weights):
        out[i * n:(i + 1) * n + 1] = w * f
    return out


def _born_covalues(p):
    """``4 - value`` for the three born values, without cancellation."""
    s = math.sqrt(1.0 - p)
    return np.array([2.0 + 2.0 * s, 2.0, 2.0 * p / (1.0 + s)])


def _born_at(p_seq, level):
    """Born eigenpairs of the level-``level`` graph built from ``p_seq``."""
    deepest = p_seq[level - 1]
    pairs = []
    for value, g, seed in born_seeds(deepest):
        f = g
        for ell in range(level - 2, -1, -1):
            f = miniaturize(p_seq[ell], f)
        pairs.append((value, f, seed))
    return pairs


def _as_sequence(p, m):
    if np.ndim(p) == 0:
        return [check_p(p)] * m
    seq = [check_p(x) for x in p]
    if not seq:
        raise PreconditionError("parameter sequence is empty")
    return [seq[i % len(seq)] for i in range(m)]


def interval_pointmass(p_seq):
    measure, resistance = models.interval_level_weights(p_seq)
    return interval_graph_from_weights(len(p_seq), measure, resistance).pointmass


def _normalize(F, mass):
    norms = np.sqrt(np.einsum("ij,ij,i->j", F, F, mass))
    return normalize_signs(F / norms)


def decimate_interval(p, m, eigenfunctions=True):
    """Complete Dirichlet spectrum of the level-``m`` graph by decimation.

    ``p`` is a scalar or a level-indexed sequence (cycled to length ``m``).
    Eigenvalues are in graph units; ``scale`` is the product of the per-level
    factors ``4/(p_l q_l)``.
    """
    m = check_level(m)
    p_seq = _as_sequence(p, m)
    seeds = born_seeds(p_seq[0])
    values = np.array([v for v, _, _ in seeds])
    covalues = _born_covalues(p_seq[0])
    genealogies = [EigenGenealogy(1, s) for _, _, s in seeds]
    provenance = [BORN] * 3
    F = np.column_stack([g for _, g, _ in seeds]) if eigenfunctions else None
    for level in range(1, m):
        pl = p_seq[level]
        branch, co, shift, d = _branch_data(pl, values, covalues)
        new_values = [branch[:, i] for i in range(4)]
        new_gen = [[g.extend(i + 1) for g in genealogies] for i in range(4)]
        if eigenfunctions:
            new_F = [_extend_columns(pl, shift[:, i], d[:, i], F) for i in range(4)]
        born = _born_at(p_seq, level + 1)
        values = np.concatenate(new_values + [np.array([v for v, _, _ in born])])
        covalues = np.concatenate([co[:, i] for i in range(4)] + [_born_covalues(p_seq[level])])
        genealogies = sum(new_gen, []) + [EigenGenealogy(level + 1, s) for _, _, s in born]
        provenance = [DECIMATED] * (4 * len(new_gen[0])) + [BORN] * 3
        if eigenfunctions:
            F = np.column_stack(new_F + [np.column_stack([f for _, f, _ in born])])
    expected = 4**m - 1
    if len(values) != expected:
        raise ConsistencyError(f"decimation produced {len(values)} eigenvalues, expected {expected}")
    scale = float(np.prod([4.0 / (x * (1.0 - x)) for x in p_seq]))
    if eigenfunctions:
        F = _normalize(F, interval_pointmass(p_seq))
    params = IntervalParams(p_seq[0]) if len(set(p_seq)) == 1 else None
    return Spectrum(values, scale, F, genealogies, provenance, model=INTERVAL, level=m,
                    params=params, bc="dirichlet")


def full_spectrum_interval(p, m, eigenfunctions=True):
    """Complete, increasing Dirichlet spectrum for a constant ``p``.

    The exact spectrum is simple, but for extreme ``p`` neighbouring graph
    eigenvalues crowd against 2 and 4 closer than one ulp; such ties are
    accepted, any larger inversion raises.
    """
    spec = decimate_interval(check_p(p), m, eigenfunctions)
    w = spec.graph_eigenvalues
    if np.any(np.diff(w) < -4.0 * np.finfo(float).eps * w[1:]):
        raise ConsistencyError("interval spectrum is out of order")
    return spec


@dataclass(frozen=True)
class LimitResult:
    value: float
    level: int
    change: float
    converged: bool


def seed_value(p, seed):
    return dict(zip(SEEDS, forbidden_interval(p)))[seed]


def renormalized_limit(p, genealogy, depth, tol=1e-10):
    """Renormalized eigenvalue at level ``depth`` along ``genealogy`` then Phi_1.

    The explicit branches of ``genealogy`` are applied first and Phi_1 fills
    the remaining levels. ``change`` is the relative difference from the
    value one level earlier.
    """
    p = check_p(p)
    q = 1.0 - p
    if genealogy.seed not in SEEDS:
        raise PreconditionError(f"unknown interval seed {genealogy.seed!r}")
    if any(b not in (1, 2, 3, 4) for b in genealogy.branches):
        raise PreconditionError("interval branch indices must be in 1..4")
    if depth <= genealogy.level:
        raise PreconditionError(f"depth must exceed the genealogy level {genealogy.level}")
    factor = 4.0 / (p * q)
    lam = seed_value(p, genealogy.seed)
    level = genealogy.birth_level
    value = lam * factor**level
    for b in genealogy.branches:
        nxt = float(phi(p, lam, b))
        value *= factor * nxt / lam
        lam = nxt
        level += 1
    prev = value
    while level < depth:
        # Phi_1(x)/x is evaluated without forming (pq/4)^level explicitly, so
        # underflow of the graph eigenvalue is harmless
        root = math.sqrt(max(1.0 - p * q * lam, 0.0))
        ratio = (2.0 * p * q / (1.0 + root)) / (2.0 + math.sqrt(2.0 + 2.0 * root))
        lam *= ratio
        prev, value = value, value * factor * ratio
        level += 1
    change = abs(value - prev) / abs(value)
    return LimitResult(value=value, level=level, change=change, converged=change <= tol)
