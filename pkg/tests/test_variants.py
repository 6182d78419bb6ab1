import csv

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fractal_decimation import graphs, variants
from fractal_decimation import interval_decimation as idec
from fractal_decimation.exceptions import ParameterError, PreconditionError
from fractal_decimation.models import INTERVAL, SG, IntervalParams, SGParams

from conftest import rel_err


@pytest.mark.parametrize("c, counts", [(0.35, [4, 16, 52]), (0.5, [4, 10, 16])])
def test_threshold_cell_counts_by_hand(c, counts):
    # p = 0.3: outer cells carry 0.15, inner 0.35 of their parent's measure
    got = [len(variants.threshold_partition(0.3, c, m).cells) for m in (1, 2, 3)]
    assert got == counts


@given(st.floats(0.05, 0.95), st.floats(0.0, 0.9), st.integers(1, 4))
@settings(max_examples=30, deadline=None)
def test_threshold_partition_tiles_the_interval(p, c, m):
    part = variants.threshold_partition(p, c, m)
    assert part.starts[0] == 0.0 and part.ends[-1] == 1.0
    np.testing.assert_allclose(part.ends[:-1], part.starts[1:])
    assert part.measures.sum() == pytest.approx(1.0)
    assert part.resistances.sum() == pytest.approx(1.0)
    assert part.word_lengths().max() <= m


def test_threshold_zero_cutoff_is_the_standard_spectrum():
    spec = variants.threshold_spectrum(0.3, 0.0, 3)
    dec = idec.full_spectrum_interval(0.3, 3, eigenfunctions=False)
    assert rel_err(spec.eigenvalues, dec.eigenvalues) < 1e-8


def test_asymmetric_eigenfunctions_exist_high_in_the_spectrum():
    spec = variants.threshold_spectrum(0.3, 0.35, 4)
    x = spec.graph.coords[:, 0]
    n = len(spec)
    asym = [variants.asymmetry(x, spec.eigenfunctions[:, j]) for j in range(n // 2, n)]
    assert max(asym) > 1e-3
    low = [variants.asymmetry(x, spec.eigenfunctions[:, j]) for j in range(3)]
    assert max(low) < 1e-6


def test_asymmetry_of_symmetric_and_skew_functions():
    x = np.linspace(0, 1, 9)
    assert variants.asymmetry(x, np.sin(np.pi * x)) < 1e-12
    assert variants.asymmetry(x, np.sin(2 * np.pi * x)) < 1e-12
    assert variants.asymmetry(x, x * (1 - x) * x) > 1e-2


def test_threshold_multiplicities():
    spec = variants.threshold_spectrum(0.3, 0.35, 4)
    assert variants.max_multiplicity(spec) == 2
    assert variants.max_multiplicity(variants.threshold_spectrum(0.3, 0.5, 3)) == 1


def test_threshold_partition_csv(tmp_path):
    part = variants.threshold_partition(0.3, 0.5, 2)
    part.to_csv(tmp_path / "p.csv")
    rows = list(csv.reader(open(tmp_path / "p.csv")))
    assert rows[0] == ["start", "end", "measure", "resistance"]
    assert len(rows) == 11


def test_hierarchical_constant_sequence_is_standard():
    params = variants.HierarchicalParams(INTERVAL, (0.5,))
    spec = variants.hierarchical_spectrum(params, 3)
    std = idec.full_spectrum_interval(0.5, 3, eigenfunctions=False)
    assert rel_err(spec.eigenvalues, std.eigenvalues) < 1e-12


def test_hierarchical_interval_matches_oracle():
    params = variants.HierarchicalParams(INTERVAL, (0.2, 0.7, 0.4))
    spec = variants.hierarchical_spectrum(params, 4)
    assert len(spec) == 4**4 - 1
    assert params.renorm(3) == pytest.approx(4**3 / (0.2 * 0.8 * 0.7 * 0.3 * 0.4 * 0.6))


def test_hierarchical_weights_by_depth():
    params = variants.HierarchicalParams(INTERVAL, (0.2, 0.6))
    from fractal_decimation.models import interval_word
    mu, res = variants.hierarchical_weights(params, interval_word(0, 1, 3))
    assert mu == pytest.approx(0.1 * 0.2 * 0.1)
    assert res == pytest.approx(0.4 * 0.3 * 0.4)


def test_hierarchical_sg_constant_sequence_is_standard(sg_oracle):
    params = variants.HierarchicalParams(SG, (2.0,))
    spec = variants.hierarchical_spectrum(params, 2)
    assert rel_err(spec.eigenvalues, sg_oracle(2.0, 2).eigenvalues) < 1e-10


def test_hierarchical_sg_graph_uses_levelwise_constants():
    params = variants.HierarchicalParams(SG, (0.5, 3.0))
    g = variants.hierarchical_graph(params, 2)
    assert g.pointmass.sum() == pytest.approx(1.0)
    a, b, _ = g.boundary
    assert graphs.effective_resistance(g, a, b) == pytest.approx(2.0 / 3.0, rel=1e-9)


def test_hierarchical_validation():
    with pytest.raises(ParameterError):
        variants.HierarchicalParams(INTERVAL, ())
    with pytest.raises(ParameterError):
        variants.HierarchicalParams(INTERVAL, (0.2, 1.5))
    params = variants.HierarchicalParams(INTERVAL, (0.2,))
    from fractal_decimation.models import sg_word
    with pytest.raises(PreconditionError):
        variants.hierarchical_weights(params, sg_word((0, 0)))
