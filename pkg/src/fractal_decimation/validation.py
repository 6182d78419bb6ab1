"""Input validation helpers used at every public entry point.

Bounds are chosen so that renormalization factors stay finite in double
precision while still admitting the extreme parameters studied for the
limiting Laplacians (p = 1e-5, r = 1e5).
"""

import math
import numbers

import numpy as np

from .exceptions import ParameterError

P_MIN = 1e-9
P_MAX = 1.0 - 1e-9
R_MIN = 1e-9
R_MAX = 1e9

MODELS = ("interval", "sg")
BOUNDARY_CONDITIONS = ("dirichlet", "neumann")


def check_p(p):
    """Return ``p`` as a float, raising :class:`ParameterError` if out of range."""
    if isinstance(p, bool) or not isinstance(p, numbers.Real):
        raise ParameterError(f"p must be a real number, got {p!r}")
    p = float(p)
    if not math.isfinite(p) or not (P_MIN <= p <= P_MAX):
        raise ParameterError(f"p must lie in [{P_MIN}, {P_MAX}], got {p}")
    return p


def check_r(r):
    if isinstance(r, bool) or not isinstance(r, numbers.Real):
        raise ParameterError(f"r must be a real number, got {r!r}")
    r = float(r)
    if not math.isfinite(r) or not (R_MIN <= r <= R_MAX):
        raise ParameterError(f"r must lie in [{R_MIN}, {R_MAX}], got {r}")
    return r


def check_level(m, minimum=1, maximum=None):
    if isinstance(m, bool) or not isinstance(m, numbers.Integral):
        raise ParameterError(f"level must be an integer, got {m!r}")
    m = int(m)
    if m < minimum:
        raise ParameterError(f"level must be >= {minimum}, got {m}")
    if maximum is not None and m > maximum:
        raise ParameterError(f"level must be <= {maximum}, got {m}")
    return m


def check_model(model):
    model = str(model).lower()
    if model not in MODELS:
        raise ParameterError(f"model must be one of {MODELS}, got {model!r}")
    return model


def check_bc(bc):
    bc = str(bc).lower()
    if bc not in BOUNDARY_CONDITIONS:
        raise ParameterError(
            f"boundary condition must be one of {BOUNDARY_CONDITIONS}, got {bc!r}")
    return bc


def check_cutoff(c):
    if isinstance(c, bool) or not isinstance(c, numbers.Real):
        raise ParameterError(f"cutoff must be a real number, got {c!r}")
    c = float(c)
    if not (0.0 <= c < 1.0):
        raise ParameterError(f"cutoff must satisfy 0 <= c < 1, got {c}")
    return c


def check_vector(u, n, name="u"):
    """Coerce ``u`` to a 1-d float array of length ``n``."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.shape[0] != n:
        raise ParameterError(f"{name} must be a vector of length {n}, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ParameterError(f"{name} contains non-finite values")
    return u
