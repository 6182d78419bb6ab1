"""Spectral statistics: counting function, Weyl ratio, eigenvalue ratios,
oscillation (zeros and extrema) of Interval eigenfunctions and the p <-> q
coincidence pattern.

Every routine takes either a :class:`~fractal_decimation.spectrum.Spectrum`
(renormalized eigenvalues are used) or a plain array of eigenvalues.
"""

from dataclasses import dataclass, field
import csv
import math

import numpy as np

from . import models
from .exceptions import PreconditionError
from .graphs import format_float
from .spectrum import Spectrum
from .validation import check_level, check_p

ZERO_RTOL = 1e-12
RATIO_ZERO_TOL = 1e-6
REGRESSION_TRIM = 0.1
COINCIDENCE_RTOL = 1e-8


def _values(spectrum):
    if isinstance(spectrum, Spectrum):
        v = spectrum.eigenvalues
    else:
        v = np.asarray(spectrum, dtype=float).ravel()
    if len(v) and np.any(np.diff(v) < 0):
        v = np.sort(v)
    return v


def counting_function(spectrum, x):
    """``N(x)``: number of eigenvalues ``<= x`` counted with multiplicity."""
    v = _values(spectrum)
    out = np.searchsorted(v, np.asarray(x, dtype=float), side="right")
    return int(out) if np.ndim(out) == 0 else out


def weyl_alpha(params):
    """Closed-form Weyl exponent ``log(#cells) / log(renormalization)``."""
    return models.weyl_alpha_closed_form(params)


@dataclass
class WeylSeries:
    alpha: float
    grid: np.ndarray
    counts: np.ndarray
    weyl: np.ndarray
    slope: float
    intercept: float
    window: tuple

    def middle(self):
        lo, hi = self.window
        return (self.grid >= lo) & (self.grid <= hi)

    def bound_ratio(self):
        """``max W / min W`` over the regression window."""
        w = self.weyl[self.middle()]
        return float(w.max() / w.min())


def weyl_series(spectrum, alpha, grid=400):
    """Sample ``N`` and ``W = N / lambda^alpha`` on a log grid.

    ``grid`` is either a point count (log-spaced between the smallest and
    largest eigenvalue) or explicit sample points. The slope of ``log N``
    against ``log lambda`` is fitted over the middle 80% of the log range.
    """
    v = _values(spectrum)
    v = v[v > 0]
    if not len(v):
        raise PreconditionError("spectrum has no positive eigenvalues")
    lo, hi = math.log(v[0]), math.log(v[-1])
    if np.ndim(grid) == 0:
        points = np.exp(np.linspace(lo, hi, int(grid)))
    else:
        points = np.sort(np.asarray(grid, dtype=float))
    counts = counting_function(v, points)
    weyl = counts / points**alpha
    a = math.exp(lo + REGRESSION_TRIM * (hi - lo))
    b = math.exp(hi - REGRESSION_TRIM * (hi - lo))
    keep = (points >= a) & (points <= b) & (counts > 0)
    if keep.sum() >= 2:
        slope, intercept = np.polyfit(np.log(points[keep]), np.log(counts[keep]), 1)
    else:
        slope, intercept = math.nan, math.nan
    return WeylSeries(alpha=float(alpha), grid=points, counts=np.asarray(counts), weyl=weyl,
                      slope=float(slope), intercept=float(intercept), window=(a, b))


@dataclass
class RatioSet:
    ratios: np.ndarray
    bin_edges: np.ndarray
    histogram: np.ndarray
    excluded: int

    def clusters(self, min_count=1):
        """Centers of occupied histogram bins."""
        centers = 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])
        return centers[self.histogram >= min_count]

    def fraction_near(self, targets, tol):
        if not len(self.ratios):
            return math.nan
        t = np.asarray(targets, dtype=float)
        d = np.min(np.abs(self.ratios[:, None] - t[None, :]), axis=1)
        return float(np.mean(d <= tol))


def ratio_set(spectrum, window=1, bin_width=0.01, zero_tol=RATIO_ZERO_TOL):
    """Ratios ``lambda_j / lambda_i`` for ``0 < |i - j| <= window`` in sorted order.

    Both orientations are kept, so the multiset is closed under reciprocals.
    Pairs whose smaller member lies below ``zero_tol`` times the spectral
    median are dropped and counted in ``excluded``.
    """
    v = _values(spectrum)
    if not len(v):
        raise PreconditionError("spectrum is empty")
    floor = zero_tol * float(np.median(v))
    parts = []
    excluded = 0
    for k in range(1, int(window) + 1):
        if k >= len(v):
            break
        a, b = v[:-k], v[k:]
        keep = a >= floor
        excluded += int((~keep).sum())
        parts += [b[keep] / a[keep], a[keep] / b[keep]]
    ratios = np.concatenate(parts) if parts else np.zeros(0)
    top = max(float(ratios.max()) if len(ratios) else 1.0, 1.0)
    edges = np.arange(0.0, top + 2 * bin_width, bin_width)
    hist, edges = np.histogram(ratios, bins=edges)
    return RatioSet(ratios=ratios, bin_edges=edges, histogram=hist, excluded=excluded)


def consecutive_ratio_sup(spectrum, tail=0.5):
    """``max lambda_{n+1}/lambda_n`` over the upper ``tail`` of the spectrum."""
    v = _values(spectrum)
    v = v[v > 0]
    start = int(len(v) * (1.0 - tail))
    seg = v[start:]
    return float(np.max(seg[1:] / seg[:-1])) if len(seg) > 1 else math.nan


@dataclass
class SturmProfile:
    """Zeros and extrema of Interval eigenfunctions sorted by eigenvalue.

    ``zero_locations[i]`` holds interior zeros of ``f_{i+1}`` (linear
    interpolation between vertices, or the vertex itself for an exact zero).
    """

    coords: np.ndarray
    zeros: np.ndarray
    extrema: np.ndarray
    zero_locations: list
    extremum_locations: list = field(repr=False)
    extremum_signs_ok: np.ndarray = field(repr=False)
    one_extremum_between_zeros: np.ndarray = field(repr=False)
    interlacing: np.ndarray = field(repr=False)
    notes: list = field(default_factory=list)

    def failures(self):
        """Indices (1-based) of eigenfunctions violating any oscillation rule."""
        n = len(self.zeros)
        idx = np.arange(1, n + 1)
        bad = ((self.zeros != idx - 1) | (self.extrema != idx) | ~self.extremum_signs_ok
               | ~self.one_extremum_between_zeros)
        bad[:-1] |= ~self.interlacing
        return [int(i) for i in idx[bad]]


def _zeros_of(x, f, tol):
    """Interior zeros of one function sampled at ``x`` (boundary excluded)."""
    zero = np.abs(f) <= tol
    s = np.where(zero, 0, np.sign(f)).astype(int)
    locs = []
    exact = 0
    last_sign, last_idx = 0, None
    for k in range(len(f)):
        if s[k] == 0:
            continue
        if last_sign and s[k] != last_sign:
            if k - last_idx > 1:
                # one or more exact vertex zeros between opposite signs
                mid = (last_idx + k) // 2
                locs.append(float(x[mid]) if zero[mid] else 0.5 * (x[last_idx] + x[k]))
                exact += 1
            else:
                a, b = f[last_idx], f[k]
                locs.append(float(x[last_idx] + (x[k] - x[last_idx]) * a / (a - b)))
        last_sign, last_idx = s[k], k
    return np.array(locs), exact


def _extrema_of(f):
    c = f[1:-1]
    up = (c > f[:-2]) & (c > f[2:])
    down = (c < f[:-2]) & (c < f[2:])
    return np.flatnonzero(up) + 1, np.flatnonzero(down) + 1


def sturm_profile(eigenfunctions, coords=None):
    """Oscillation profile of Dirichlet Interval eigenfunctions.

    ``eigenfunctions`` is a Spectrum or an array with one column per
    eigenfunction on all vertices (boundary included), sorted by eigenvalue.
    """
    if isinstance(eigenfunctions, Spectrum):
        spec = eigenfunctions
        if spec.model not in (None, models.INTERVAL):
            raise PreconditionError("sturm_profile applies to Interval eigenfunctions")
        F = spec.eigenfunctions
        if F is None:
            raise PreconditionError("spectrum carries no eigenfunctions")
        if coords is None and spec.graph is not None:
            coords = spec.graph.coords[:, 0]
    else:
        F = np.asarray(eigenfunctions, dtype=float)
    if F.ndim != 2:
        raise PreconditionError("eigenfunctions must be a 2-d array")
    n_pts, k = F.shape
    x = np.linspace(0.0, 1.0, n_pts) if coords is None else np.asarray(coords, dtype=float)
    zeros = np.zeros(k, dtype=int)
    extrema = np.zeros(k, dtype=int)
    signs_ok = np.ones(k, dtype=bool)
    one_between = np.ones(k, dtype=bool)
    zero_locs, ext_locs, notes = [], [], []
    for i in range(k):
        f = F[:, i]
        tol = ZERO_RTOL * np.max(np.abs(f))
        z, exact = _zeros_of(x, f, tol)
        if exact:
            notes.append(f"f_{i + 1}: {exact} zero(s) fall exactly on vertices")
        maxima, minima = _extrema_of(f)
        ext = np.sort(np.concatenate([maxima, minima]))
        zeros[i] = len(z)
        extrema[i] = len(ext)
        signs_ok[i] = bool(np.all(f[maxima] > 0) and np.all(f[minima] < 0))
        bounds = np.concatenate([[x[0]], z, [x[-1]]])
        per = np.histogram(x[ext], bins=bounds)[0] if len(bounds) > 1 else np.array([len(ext)])
        one_between[i] = bool(np.all(per == 1))
        zero_locs.append(z)
        ext_locs.append(x[ext])
    interlacing = np.ones(max(k - 1, 0), dtype=bool)
    for i in range(k - 1):
        bounds = np.concatenate([[x[0]], zero_locs[i], [x[-1]]])
        nxt = zero_locs[i + 1]
        counts = (np.searchsorted(nxt, bounds[1:], side="right")
                  - np.searchsorted(nxt, bounds[:-1], side="left"))
        interlacing[i] = bool(np.all(counts == 1))
    return SturmProfile(coords=x, zeros=zeros, extrema=extrema, zero_locations=zero_locs,
                        extremum_locations=ext_locs, extremum_signs_ok=signs_ok,
                        one_extremum_between_zeros=one_between, interlacing=interlacing,
                        notes=notes)


def sturm_comparison(profile):
    """Pairs ``(i, j)``, ``i < j`` (1-based), where some interval between
    consecutive zeros of ``f_i`` contains no zero of ``f_j``.

    Boundary points count as zeros of every Dirichlet eigenfunction.
    """
    x0, x1 = profile.coords[0], profile.coords[-1]
    full = [np.concatenate([[x0], z, [x1]]) for z in profile.zero_locations]
    bad = []
    for i in range(len(full)):
        a, b = full[i][:-1], full[i][1:]
        for j in range(i + 1, len(full)):
            zj = full[j]
            hits = np.searchsorted(zj, b, side="right") - np.searchsorted(zj, a, side="left")
            if np.any(hits < 1):
                bad.append((i + 1, j + 1))
    return bad


def predicted_coincidences(m):
    """Indices ``n <= 4^m - 1`` with ``n = 4^a/2 (mod 4^a)`` for some ``a <= m``."""
    m = check_level(m)
    n = np.arange(1, 4**m)
    hit = np.zeros(len(n), dtype=bool)
    for a in range(1, m + 1):
        hit |= n % 4**a == 4**a // 2
    return set(int(i) for i in n[hit])


@dataclass
class SymmetryReport:
    predicted: set
    measured: set

    @property
    def agree(self):
        return self.predicted == self.measured


def pq_symmetry_indices(p, m, rtol=COINCIDENCE_RTOL):
    """Indices where the ``p`` and ``1 - p`` spectra coincide, predicted and measured."""
    from .interval_decimation import decimate_interval

    p = check_p(p)
    m = check_level(m)
    a = decimate_interval(p, m, eigenfunctions=False).eigenvalues
    b = decimate_interval(1.0 - p, m, eigenfunctions=False).eigenvalues
    close = np.abs(a - b) <= rtol * np.abs(a)
    measured = set(int(i) + 1 for i in np.flatnonzero(close))
    return SymmetryReport(predicted=predicted_coincidences(m), measured=measured)


def _write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_counting_csv(spectrum, path):
    v = _values(spectrum)
    uniq = np.unique(v)
    counts = counting_function(v, uniq)
    _write(path, ["lambda", "N"], [[format_float(a), int(c)] for a, c in zip(uniq, counts)])


def write_weyl_csv(series, path):
    _write(path, ["lambda", "N", "W"],
           [[format_float(a), int(c), format_float(w)]
            for a, c, w in zip(series.grid, series.counts, series.weyl)])


def write_ratio_csv(ratios, path):
    centers = 0.5 * (ratios.bin_edges[:-1] + ratios.bin_edges[1:])
    _write(path, ["value", "count"],
           [[format_float(c), int(h)] for c, h in zip(centers, ratios.histogram) if h])


def write_sturm_csv(profile, path):
    _write(path, ["index", "zeros", "extrema"],
           [[i + 1, int(z), int(e)] for i, (z, e) in enumerate(zip(profile.zeros, profile.extrema))])
