"""Parameter objects and cell-address arithmetic for both models.

The Interval model uses the 4-map system ``F_i(x) = x/4 + i/4``; letters 0
and 3 are the *outer* maps. The gasket model uses the 9 compositions
``F_j o F_k``; a letter ``(j, k)`` is outer when ``j == k``. Words are stored
most-significant level first, matching the composition order
``F_{w_1} o ... o F_{w_m}``.
"""

from dataclasses import dataclass
import itertools
import math

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .exceptions import ParameterError
from .validation import check_p, check_r

INTERVAL = "interval"
SG = "sg"


@dataclass(frozen=True)
class CellWord:
    """Address of an m-cell as a sequence of IFS letters."""

    model: str
    letters: tuple = ()

    def __post_init__(self):
        letters = tuple(self.letters)
        if self.model == INTERVAL:
            letters = tuple(int(a) for a in letters)
            if any(a not in (0, 1, 2, 3) for a in letters):
                raise ParameterError(f"interval letters must be in 0..3, got {letters}")
        elif self.model == SG:
            letters = tuple((int(a[0]), int(a[1])) for a in letters)
            if any(j not in (0, 1, 2) or k not in (0, 1, 2) for j, k in letters):
                raise ParameterError(f"SG letters must be pairs over 0..2, got {letters}")
        else:
            raise ParameterError(f"unknown model {self.model!r}")
        object.__setattr__(self, "letters", letters)

    @property
    def level(self):
        return len(self.letters)

    def child(self, letter):
        return CellWord(self.model, self.letters + (letter,))


def interval_word(*letters):
    return CellWord(INTERVAL, letters)


def sg_word(*letters):
    return CellWord(SG, letters)


def is_outer(model, letter):
    if model == INTERVAL:
        return letter in (0, 3)
    return letter[0] == letter[1]


def outer_count(word):
    """Number of outer letters in ``word`` (the exponent ``i(A)``)."""
    return sum(1 for a in word.letters if is_outer(word.model, a))


def all_words(model, m):
    """Every level-``m`` word, in lexicographic order."""
    alphabet = range(4) if model == INTERVAL else list(itertools.product(range(3), repeat=2))
    for letters in itertools.product(alphabet, repeat=m):
        yield CellWord(model, letters)


@dataclass(frozen=True)
class IntervalParams:
    """Measure weight ``p``; the resistance weight ``q = 1 - p`` is derived."""

    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", check_p(self.p))

    model = INTERVAL

    @property
    def q(self):
        return 1.0 - self.p

    @property
    def renorm(self):
        return 4.0 / (self.p * self.q)


@dataclass(frozen=True)
class SGParams:
    """Resistance ratio ``r = r0 / r1`` with the derived gasket constants."""

    r: float

    def __post_init__(self):
        object.__setattr__(self, "r", check_r(self.r))

    model = SG

    @property
    def mu0(self):
        return 1.0 / (3.0 * (1.0 + 2.0 * self.r))

    @property
    def mu1(self):
        return self.r / (3.0 * (1.0 + 2.0 * self.r))

    @property
    def _poly(self):
        r = self.r
        return 9.0 * r * r + 26.0 * r + 15.0

    @property
    def r0(self):
        r = self.r
        return 6.0 * r * (r + 2.0) / self._poly

    @property
    def r1(self):
        return 6.0 * (self.r + 2.0) / self._poly

    @property
    def rho(self):
        return self._poly / (6.0 * (self.r + 2.0))

    @property
    def L(self):
        return renormalization_L(self.r)

    @property
    def renorm(self):
        return 1.0 / self.L


def renormalization_L(r):
    """``mu0 * r0 = mu1 * r1`` as a closed form in ``r``."""
    return 2.0 * r * (r + 2.0) / ((2.0 * r + 1.0) * (9.0 * r * r + 26.0 * r + 15.0))


def make_params(model, value):
    if model == INTERVAL:
        return IntervalParams(value)
    if model == SG:
        return SGParams(value)
    raise ParameterError(f"unknown model {model!r}")


def interval_cell_weights(params, word):
    """Return ``(measure, resistance)`` of an Interval cell."""
    if word.model != INTERVAL:
        raise ParameterError("interval_cell_weights needs an Interval word")
    i = outer_count(word)
    m = word.level
    p, q = params.p, params.q
    measure = p**i * q ** (m - i) / 2.0**m
    resistance = q**i * p ** (m - i) / 2.0**m
    return measure, resistance


def interval_level_weights(p_seq):
    """Measures and resistances of all level-``m`` Interval cells in word order.

    ``p_seq[l]`` is the measure weight used to split level-``l`` cells, so a
    constant sequence reproduces :func:`interval_cell_weights`.
    """
    measure = np.ones(1)
    resistance = np.ones(1)
    for p in p_seq:
        p = check_p(p)
        q = 1.0 - p
        m_fac = np.array([p, q, q, p]) / 2.0
        r_fac = np.array([q, p, p, q]) / 2.0
        measure = np.outer(measure, m_fac).ravel()
        resistance = np.outer(resistance, r_fac).ravel()
    return measure, resistance


def sg_cell_weights(params, word):
    """Return ``(measure, conductance scale)`` of a gasket cell."""
    if word.model != SG:
        raise ParameterError("sg_cell_weights needs an SG word")
    i = outer_count(word)
    m = word.level
    measure = params.mu0**i * params.mu1 ** (m - i)
    conductance = params.r0 ** (-i) * params.r1 ** (-(m - i))
    return measure, conductance


def renorm_factor(params):
    """Per-level eigenvalue multiplier: ``4/(pq)`` or ``1/L(r)``."""
    return params.renorm


def locate_r_max(lo=1e-4, hi=10.0, tol=1e-8):
    """Maximizer of ``L(r)`` by golden-section search."""
    res = minimize_scalar(lambda r: -renormalization_L(r), bracket=(lo, 1.0, hi),
                          method="golden", tol=tol)
    return float(res.x)


def conjugate_r(r):
    """The unique ``r' != r`` with ``L(r') == L(r)``.

    Returns ``r`` itself when ``r`` is the maximizer (within 1e-8).
    """
    r = check_r(r)
    r_max = locate_r_max()
    target = renormalization_L(r)
    if abs(r - r_max) <= 1e-8 * max(1.0, r_max):
        return r
    f = lambda x: renormalization_L(x) - target
    if r < r_max:
        hi = r_max
        while f(hi) > 0:
            hi *= 2.0
        return brentq(f, r_max, hi, xtol=1e-300, rtol=1e-14, maxiter=500)
    lo = r_max
    while f(lo) > 0:
        lo /= 2.0
    return brentq(f, lo, r_max, xtol=1e-300, rtol=1e-14, maxiter=500)


def weyl_alpha_closed_form(params):
    if params.model == INTERVAL:
        return math.log(4.0) / math.log(params.renorm)
    return math.log(9.0) / math.log(params.renorm)
