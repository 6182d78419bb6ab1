import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_decimation import graphs
from fractal_decimation import sg_decimation as sgd
from fractal_decimation.exceptions import ExtensionError, NumericalError, PreconditionError
from fractal_decimation.models import SGParams
from fractal_decimation.spectrum import EigenGenealogy

from conftest import rel_err

rs = st.floats(min_value=0.05, max_value=20.0)


def _level1(r):
    graph = graphs.build_sg_graph(SGParams(r), 1)
    C = graph.conductance_matrix().toarray()
    K = np.diag(C.sum(axis=1)) - C
    return graph, K / graph.pointmass[:, None], SGParams(r).renorm


@pytest.mark.parametrize("r", [0.3, 1.0, 4.0])
@pytest.mark.parametrize("seed", ["b1", "b2", "b7", "nine"])
def test_golden_level_one_patterns(r, seed):
    graph, A, scale = _level1(r)
    f = sgd.golden_vector(r, seed)
    lam = sgd.born_value(r, seed)
    interior = graph.interior
    np.testing.assert_allclose((A @ f)[interior], lam * scale * f[interior], atol=1e-11)
    assert np.all(f[list(graph.boundary)] == 0)


def test_golden_patterns_by_role():
    vals = sgd.golden_level1(1.0, "b7")
    assert vals["y01"] == 1.0 and vals["y02"] == -1.0 and vals["w0"] == 0.0
    nine = sgd.golden_level1(2.0, "nine")
    assert nine["w0"] == 2.0 and nine["z1"] == -1.0
    with pytest.raises(ValueError):
        sgd.golden_level1(1.0, "b3")


@given(rs)
@settings(max_examples=30)
def test_gamma_roots_and_ordering(r):
    fs = sgd.forbidden_set(r)
    vals = np.array(fs.gamma_roots)
    scale = np.max(np.abs(sgd.gamma_coefficients(r)))
    assert np.all(np.abs(sgd.gamma_eval(r, vals)) <= 1e-9 * scale * np.maximum(1, vals) ** 5)
    assert fs.b1 < fs.b2 and fs.b4 < fs.b5 < fs.b3


def test_root_ordering_at_r_one():
    fs = sgd.forbidden_set(1.0)
    assert fs.b1 < fs.b4 < fs.b5 < fs.b2 < fs.b3


@given(rs, st.floats(0.01, 8.9))
@settings(max_examples=40, deadline=None)
def test_branches_invert_forward_map(r, lam):
    branches = sgd.phi_branches_sg(r, lam, check=False)
    for x in branches.admissible:
        if r == 1.0 and x == pytest.approx(sgd.pole(1.0)):
            continue
        assert sgd.lambda_forward_sg(r, x) == pytest.approx(lam, rel=1e-8, abs=1e-10)


def test_cancelled_pole_is_a_common_branch_at_r_one(sg_oracle):
    # at r = 1 the pole 9/2 cancels and 9/2 is a preimage of every value
    for lam in (0.5, 2.0, 7.5):
        assert np.min(np.abs(sgd.phi_branches_sg(1.0, lam).admissible - sgd.pole(1.0))) < 1e-12
    w = sg_oracle(1.0, 2).graph_eigenvalues
    assert np.sum(np.abs(w - 4.5) < 1e-9) == 12


def test_nine_has_three_branches():
    b = sgd.phi_branches_sg(1.0, 9.0)
    assert len(b.admissible) == 3
    assert b.flags.count("forbidden") == 2


def test_forward_map_at_r_one_reduces():
    x = np.linspace(0.1, 8, 7)
    reduced = -x * np.polyval(sgd._cubic(1.0), x) / 54.0
    np.testing.assert_allclose(sgd.lambda_forward_sg(1.0, x), reduced)


@given(st.floats(0.2, 5.0), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1),
       st.floats(0.05, 8.9))
@settings(max_examples=40, deadline=None)
def test_extension_matches_local_solve(r, x0, x1, x2, lam):
    fs = sgd.forbidden_set(r)
    if min(abs(lam - b) for b in fs.excluded) < 1e-2:
        return
    graph, A, scale = _level1(r)
    M = A - lam * scale * np.eye(graph.n_vertices)
    inner = graph.interior
    bnd = np.array(graph.boundary)
    rhs = -M[np.ix_(inner, bnd)] @ np.array([x0, x1, x2])
    local = np.zeros(graph.n_vertices)
    local[bnd] = (x0, x1, x2)
    local[inner] = np.linalg.solve(M[np.ix_(inner, inner)], rhs)
    corner_ids, new_ids = sgd.cell_extension_ids(0)
    ext = sgd.extend_cell_sg(r, lam, x0, x1, x2)
    got = np.array([ext[k] for k in sgd.ROLES])
    size = abs(x0) + abs(x1) + abs(x2) + 1
    np.testing.assert_allclose(got, local[new_ids[0]], rtol=1e-6, atol=1e-8 * size)


def test_extension_rejects_forbidden():
    fs = sgd.forbidden_set(0.5)
    for b in fs.excluded:
        with pytest.raises(ExtensionError):
            sgd.extension_matrix(0.5, b)


def test_born_multiplicities_and_counting_identity():
    assert sgd.born_multiplicities(1.0, 1)["b1"] == 1
    assert sgd.born_multiplicities(1.0, 1)["b2"] == 1
    level2 = sgd.born_multiplicities(1.0, 2)
    assert level2["b3"] == level2["b4"] == level2["b5"] == 6
    assert level2["b7"] == 9
    assert "b1" not in level2
    decimated, born, target = sgd.counting_identity(1)
    assert decimated + born == target == 120
    for m in (1, 2, 3):
        decimated, born, target = sgd.counting_identity(m)
        assert decimated + born == target


@pytest.mark.parametrize("r", [0.5, 1.0, 3.0])
@pytest.mark.parametrize("m", [1, 2])
def test_decimation_matches_oracle(r, m, sg_oracle):
    dec = sgd.full_spectrum_sg(r, m)
    oracle = sg_oracle(r, m)
    assert len(dec) == (3 ** (2 * m + 1) - 3) // 2
    assert rel_err(dec.eigenvalues, oracle.eigenvalues) < 1e-6
    np.testing.assert_array_equal(dec.multiplicities, oracle.multiplicities)
    op = graphs.assemble_operator(dec.graph)
    assert graphs.residuals(op, dec.eigenvalues, dec.eigenfunctions).max() < 1e-9
    F, mass = dec.eigenfunctions, dec.graph.pointmass
    np.testing.assert_allclose(F.T @ (F * mass[:, None]), np.eye(len(dec)), atol=1e-8)


def test_decimation_range_guard():
    with pytest.raises(NumericalError):
        sgd.full_spectrum_sg(1e7, 1)


@pytest.mark.parametrize("r, expected", [(1e-2, 1.0096e3), (1e-4, 1.10958e5), (1e2, 9.0750),
                                         (1e4, 9.0008)])
def test_ground_state_limits(r, expected):
    value, change = sgd.ground_state_limit(r, 30)
    assert value == pytest.approx(expected, rel=2e-4)
    assert change < 1e-10


def test_limit_preconditions():
    with pytest.raises(PreconditionError):
        sgd.renormalized_limit_sg(1.0, EigenGenealogy(1, "b1", (1, 1)), 2)
