import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_decimation import graphs
from fractal_decimation import interval_decimation as idec
from fractal_decimation.exceptions import ExtensionError, ParameterError, PreconditionError
from fractal_decimation.models import IntervalParams
from fractal_decimation.spectrum import EigenGenealogy

from conftest import rel_err

ps = st.floats(min_value=1e-3, max_value=1 - 1e-3)


def _level1_operator(p):
    graph = graphs.build_interval_graph(IntervalParams(p), 1)
    C = graph.conductance_matrix().toarray()
    K = np.diag(C.sum(axis=1)) - C
    return K / graph.pointmass[:, None], 4.0 / (p * (1 - p))


@given(ps, st.floats(0.0, 4.0))
@settings(max_examples=60)
def test_phi_branches_invert_the_quartic(p, lam):
    branches = idec.phi_maps(p, lam)
    assert np.all(np.diff(branches) >= 0)
    back = idec.quartic_forward(p, branches)
    np.testing.assert_allclose(back, lam, rtol=1e-9, atol=1e-12)


def test_phi_one_keeps_relative_accuracy_for_tiny_arguments():
    p = 0.3
    lam = 1e-14
    # Phi_1(x) ~ p q x / 4 near zero
    assert idec.phi(p, lam, 1) == pytest.approx(p * (1 - p) * lam / 4, rel=1e-6)


def test_forbidden_values_are_quartic_roots_of_the_born_values():
    for p in (1e-6, 0.1, 0.5, 0.9):
        values = idec.forbidden_interval(p)
        q = 1 - p
        np.testing.assert_allclose(values, [2 - 2 * np.sqrt(q), 2.0, 2 + 2 * np.sqrt(q)],
                                   rtol=1e-9)


@pytest.mark.parametrize("p", [0.1, 0.5, 0.8])
def test_born_seeds_solve_the_level_one_equation(p):
    A, scale = _level1_operator(p)
    for value, g, _ in idec.born_seeds(p):
        interior = (A @ g)[1:-1]
        np.testing.assert_allclose(interior, value * scale * g[1:-1], atol=1e-12)


@given(ps, st.floats(-2, 2), st.floats(-2, 2), st.floats(0.05, 3.95))
@settings(max_examples=60)
def test_extension_matches_local_solve(p, x1, x2, lam):
    forbidden = idec.forbidden_interval(p)
    if min(abs(lam - b) for b in forbidden) < 1e-3:
        return
    A, scale = _level1_operator(p)
    # interior rows of (A - lam * scale) u = 0 with u(0) = x1, u(1) = x2
    M = A - lam * scale * np.eye(5)
    rhs = -(M[1:4, 0] * x1 + M[1:4, 4] * x2)
    local = np.linalg.solve(M[1:4, 1:4], rhs)
    np.testing.assert_allclose(idec.extend_cell(p, lam, x1, x2), local,
                               rtol=1e-7, atol=1e-9 * (abs(x1) + abs(x2) + 1))


def test_extension_rejects_forbidden_values():
    p = 0.3
    for b in idec.forbidden_interval(p):
        with pytest.raises(ExtensionError):
            idec.extend_cell(p, b, 1.0, 0.5)


@pytest.mark.parametrize("p", [0.1, 0.3, 0.5, 0.9])
@pytest.mark.parametrize("m", [1, 2, 3, 4])
def test_decimation_matches_oracle(p, m, interval_oracle):
    dec = idec.full_spectrum_interval(p, m)
    oracle = interval_oracle(p, m)
    assert len(dec) == 4**m - 1
    assert rel_err(dec.eigenvalues, oracle.eigenvalues) < 1e-8
    assert np.max(np.abs(dec.eigenfunctions - oracle.eigenfunctions)) < 1e-8


def test_extended_eigenfunction_solves_the_next_level(interval_oracle):
    p, m = 0.2, 2
    dec = idec.full_spectrum_interval(p, m + 1)
    op = graphs.assemble_operator(graphs.build_interval_graph(IntervalParams(p), m + 1))
    assert graphs.residuals(op, dec.eigenvalues, dec.eigenfunctions).max() < graphs.RESIDUAL_TOL


def test_genealogy_bookkeeping():
    spec = idec.full_spectrum_interval(0.4, 3)
    gens = spec.genealogies
    assert sum(g.birth_level == 3 for g in gens) == 3
    assert sum(g.birth_level == 1 for g in gens) == 3 * 16
    assert all(g.level == 3 for g in gens)
    assert gens[0] == EigenGenealogy(1, "G1", (1, 1))
    assert {g.seed for g in gens} == set(idec.SEEDS)


@pytest.mark.parametrize("p", [0.2, 0.7])
def test_miniaturize_preserves_eigenfunctions(p):
    A, scale = _level1_operator(p)
    g2 = graphs.build_interval_graph(IntervalParams(p), 2)
    op = graphs.assemble_operator(g2)
    for value, g, _ in idec.born_seeds(p):
        f = idec.miniaturize(p, g)
        res = graphs.residuals(op, [value * scale**2], f[:, None])
        assert res[0] < 1e-12


def test_parity_and_miniaturize_checks():
    assert idec.parity([0, 1, 2, 1, 0]) == "symmetric"
    assert idec.parity([0, 1, 0, -1, 0]) == "skew"
    with pytest.raises(PreconditionError):
        idec.parity([0, 1, 2, 0, 0])
    with pytest.raises(PreconditionError):
        idec.miniaturize(0.3, np.array([0, 1, 0, -1, 0.0]), kind="symmetric")


@pytest.mark.parametrize("p, expected", [(1e-2, 4.0507), (1e-4, 4.0005), (1e-5, 4.0000)])
def test_ground_state_limits(p, expected):
    res = idec.renormalized_limit(p, EigenGenealogy(1, "G1"), 30)
    assert res.converged
    assert res.value == pytest.approx(expected, abs=1e-4)


def test_higher_limits_small_and_large_p():
    # second eigenvalue is p <-> q symmetric
    for p in (1e-2, 1 - 1e-2):
        res = idec.renormalized_limit(p, EigenGenealogy(1, "G2"), 30)
        assert res.value == pytest.approx(813.1334, rel=5e-5)
    res = idec.renormalized_limit(1 - 1e-2, EigenGenealogy(1, "G1"), 30)
    assert res.value == pytest.approx(731.361, rel=5e-5)


def test_limit_preconditions():
    with pytest.raises(PreconditionError):
        idec.renormalized_limit(0.1, EigenGenealogy(1, "G1", (1, 2)), 3)
    with pytest.raises(PreconditionError):
        idec.renormalized_limit(0.1, EigenGenealogy(1, "b1"), 10)
    with pytest.raises(ParameterError):
        idec.full_spectrum_interval(0.0, 2)


def test_hierarchical_sequence_is_cycled():
    a = idec.decimate_interval([0.2, 0.7], 4, eigenfunctions=False)
    b = idec.decimate_interval([0.2, 0.7, 0.2, 0.7], 4, eigenfunctions=False)
    np.testing.assert_array_equal(a.eigenvalues, b.eigenvalues)
