"""Acceptance criteria, one test each, at their stated tolerances.

Each test prints a single PASS/FAIL line; the lines are repeated in the
pytest terminal summary. Criterion 11 is a note rather than a check and is
covered by the data-column tests of criteria 3, 6 and 9.
"""

import csv
import math
import time

import numpy as np
import pytest

from fractal_decimation import analysis, cli, graphs, spacetime, variants
from fractal_decimation import interval_decimation as idec
from fractal_decimation import sg_decimation as sgd
from fractal_decimation.models import IntervalParams, SGParams

from conftest import record_criterion

SG_LIMIT_RATIOS = (1 / 6, 1 / 4, 1 / 3, 1 / 2, 2 / 3, 3 / 4, 1, 4 / 3, 3 / 2, 2, 3, 4, 6)


def _sign_aligned_error(a, b):
    return float(np.max(np.minimum(np.abs(a - b), np.abs(a + b)).max(axis=0)))


def test_criterion_01_interval_decimation_completeness():
    start = time.perf_counter()
    worst_val = worst_fn = 0.0
    counts_ok = True
    for p in (0.1, 0.3, 0.5, 0.9):
        for m in (1, 2, 3, 4):
            dec = idec.full_spectrum_interval(p, m)
            oracle = graphs.dense_spectrum(graphs.assemble_operator(
                graphs.build_interval_graph(IntervalParams(p), m)))
            counts_ok &= len(dec) == 4**m - 1 == len(oracle)
            worst_val = max(worst_val, float(np.max(
                np.abs(dec.eigenvalues - oracle.eigenvalues) / oracle.eigenvalues)))
            worst_fn = max(worst_fn, _sign_aligned_error(dec.eigenfunctions, oracle.eigenfunctions))
    elapsed = time.perf_counter() - start
    ok = counts_ok and worst_val <= 1e-8 and worst_fn <= 1e-8 and elapsed <= 30
    assert record_criterion(1, ok, f"counts={counts_ok} max rel eig err={worst_val:.2e} "
                                   f"max eigfn err={worst_fn:.2e} time={elapsed:.1f}s")


def test_criterion_02_sg_decimation_completeness():
    start = time.perf_counter()
    worst = 0.0
    counts_ok = mult_ok = True
    for r in (0.5, 1.0, 3.0):
        for m in (1, 2, 3):
            dec = sgd.full_spectrum_sg(r, m, eigenfunctions=False)
            oracle = graphs.dense_spectrum(graphs.assemble_operator(
                graphs.build_sg_graph(SGParams(r), m)))
            counts_ok &= len(dec) == (3 ** (2 * m + 1) - 3) // 2 == len(oracle)
            mult_ok &= bool(np.array_equal(dec.multiplicities, oracle.multiplicities))
            worst = max(worst, float(np.max(
                np.abs(dec.eigenvalues - oracle.eigenvalues) / oracle.eigenvalues)))
    elapsed = time.perf_counter() - start
    ok = counts_ok and mult_ok and worst <= 1e-6 and elapsed <= 300
    assert record_criterion(2, ok, f"counts={counts_ok} multiplicities={mult_ok} "
                                   f"max rel err={worst:.2e} time={elapsed:.1f}s")


def _table(path):
    rows = list(csv.reader(open(path)))
    return [[float(v) if v else math.nan for v in row[1:]] for row in rows[1:]]


def test_criterion_03_table1(tmp_path):
    tables = {}
    worst = 0.0
    for p in (0.1, 0.9):
        out = tmp_path / str(p)
        assert cli.main(["spectrum", "--p", str(p), "--level", "3", "--out", str(out)]) == 0
        table = np.array(_table(out / "table.csv"))
        tables[p] = table
        for m in (1, 2, 3):
            oracle = graphs.dense_spectrum(graphs.assemble_operator(
                graphs.build_interval_graph(IntervalParams(p), m))).eigenvalues
            col = table[: 4**m - 1, m - 1]
            worst = max(worst, float(np.max(np.abs(col - oracle) / oracle)))
    coincide_ok = True
    for m in (1, 2, 3):
        a = tables[0.1][: 4**m - 1, m - 1]
        b = tables[0.9][: 4**m - 1, m - 1]
        measured = set(int(i) + 1 for i in np.flatnonzero(np.abs(a - b) <= 1e-5 * a))
        coincide_ok &= measured == analysis.predicted_coincidences(m)
    ok = worst <= 1e-5 and coincide_ok
    assert record_criterion(3, ok, f"max rel err vs oracle={worst:.2e} "
                                   f"coincidence indices (8k+-2, 8(2k+1), 8(8k+4)) match={coincide_ok}")


def test_criterion_04_limits():
    from fractal_decimation.spectrum import EigenGenealogy

    interval = idec.renormalized_limit(1e-4, EigenGenealogy(1, "G1"), 30).value
    sg, _ = sgd.ground_state_limit(1e4, 30)
    ok = abs(interval - 4.0005) <= 1e-3 and abs(sg - 9.0008) <= 1e-2
    assert record_criterion(4, ok, f"interval p=1e-4 lambda1={interval:.6f} (4.0005); "
                                   f"SG r=1e4 lambda1={sg:.6f} (9.0008)")


def test_criterion_05_sturm():
    total = 0
    failures = 0
    for p in (0.1, 0.3, 0.5, 0.7, 0.9):
        spec = idec.full_spectrum_interval(p, 5)
        spec.graph = graphs.build_interval_graph(IntervalParams(p), 5)
        prof = analysis.sturm_profile(spec)
        total += len(spec)
        failures += len(prof.failures())
    ok = failures == 0 and total == 5 * 1023
    assert record_criterion(5, ok, f"{failures} failures over {total} eigenfunctions")


def test_criterion_06_weyl():
    parts = []
    ok = True
    cases = [(IntervalParams(p), idec.full_spectrum_interval(p, 5, eigenfunctions=False))
             for p in (0.1, 0.9)]
    cases += [(SGParams(r), sgd.full_spectrum_sg(r, 3, eigenfunctions=False))
              for r in (0.5, 1.0, 3.0)]
    for params, spec in cases:
        alpha = analysis.weyl_alpha(params)
        series = analysis.weyl_series(spec, alpha)
        bound = series.bound_ratio()
        ok &= abs(series.slope - alpha) <= 0.05 and bound < 10
        name = f"p={params.p}" if params.model == "interval" else f"r={params.r}"
        parts.append(f"{name}: slope {series.slope:.3f} alpha {alpha:.3f} W {bound:.2f}")
    assert record_criterion(6, ok, "; ".join(parts))


def test_criterion_07_ratios():
    spec = idec.decimate_interval(1e-4, 5, eigenfunctions=False)
    frac = analysis.ratio_set(spec).fraction_near([0.5, 1.0, 2.0], 0.02)
    sg = sgd.full_spectrum_sg(1e4, 3, eigenfunctions=False)
    # the spectrum spans ~20 decades; clusters below 1e-3 of the median
    # are separate scales whose mutual ratios are not limit ratios
    rs = analysis.ratio_set(sg, zero_tol=1e-3)
    clusters = rs.clusters()
    targets = np.array(SG_LIMIT_RATIOS)
    stray = [c for c in clusters if np.min(np.abs(c - targets)) > 0.02]
    ok = frac >= 0.9 and not stray
    assert record_criterion(7, ok, f"interval fraction near {{1/2,1,2}}={frac:.4f}; "
                                   f"SG clusters outside limit set={stray}")


def test_criterion_08_forbidden_born():
    worst = 0.0
    for r in (0.1, 0.5, 1.0, 3.0, 10.0):
        fs = sgd.forbidden_set(r)
        for b in fs.gamma_roots:
            worst = max(worst, sgd.backward_error(sgd.gamma_coefficients(r), b))
    fs = sgd.forbidden_set(1.0)
    order_ok = fs.b1 < fs.b4 < fs.b5 < fs.b2 < fs.b3
    m1 = sgd.born_multiplicities(1.0, 1)
    m2 = sgd.born_multiplicities(1.0, 2)
    mult_ok = (m1["b1"] == m1["b2"] == 1 and m2["b3"] == m2["b4"] == m2["b5"] == 6
               and m2["b7"] == 9)
    decimated, born, target = sgd.counting_identity(1)
    count_ok = decimated + born == target == 120
    ok = worst <= 1e-9 and order_ok and mult_ok and count_ok
    assert record_criterion(8, ok, f"gamma backward error={worst:.1e} ordering={order_ok} "
                                   f"multiplicities={mult_ok} identity {decimated}+{born}={target}")


def _threshold_oracle(p, c, m):
    # direct construction: a cell of measure mu splits when mu >= c^(step+1)
    q = 1 - p
    cells = [(1.0, 1.0)]
    for step in range(m):
        nxt = []
        for mu, res in cells:
            if mu >= c ** (step + 1):
                nxt += [(mu * p / 2, res * q / 2), (mu * q / 2, res * p / 2),
                        (mu * q / 2, res * p / 2), (mu * p / 2, res * q / 2)]
            else:
                nxt.append((mu, res))
        cells = nxt
    mu = np.array([a for a, _ in cells])
    cond = 1 / np.array([b for _, b in cells])
    mass = np.zeros(len(cells) + 1)
    mass[:-1] += mu / 2
    mass[1:] += mu / 2
    n = len(mass)
    K = np.zeros((n, n))
    for i, g in enumerate(cond):
        K[i, i] += g
        K[i + 1, i + 1] += g
        K[i, i + 1] -= g
        K[i + 1, i] -= g
    s = 1 / np.sqrt(mass[1:-1])
    return np.linalg.eigvalsh(s[:, None] * K[1:-1, 1:-1] * s[None, :])


def test_criterion_09_threshold(tmp_path):
    std = variants.threshold_spectrum(0.3, 0.0, 4).eigenvalues
    dec = idec.full_spectrum_interval(0.3, 4, eigenfunctions=False).eigenvalues
    c0 = float(np.max(np.abs(std - dec) / dec))
    worst = 0.0
    for c in (0.35, 0.5):
        out = tmp_path / str(c)
        assert cli.main(["spectrum", "--p", "0.3", "--c", str(c), "--level", "3",
                         "--out", str(out)]) == 0
        table = np.array(_table(out / "table.csv"))
        for m in (1, 2, 3):
            oracle = _threshold_oracle(0.3, c, m)
            col = table[: len(oracle), m - 1]
            worst = max(worst, float(np.max(np.abs(col - oracle) / oracle)))
            assert np.all(np.isnan(table[len(oracle):, m - 1]))
    spec = variants.threshold_spectrum(0.3, 0.35, 4)
    x = spec.graph.coords[:, 0]
    n = len(spec)
    asym = max(variants.asymmetry(x, spec.eigenfunctions[:, j]) for j in range(n // 2, n))
    ok = c0 <= 1e-8 and worst <= 1e-5 and asym > 1e-3
    assert record_criterion(9, ok, f"c=0 rel err={c0:.1e}; Table 5 rel err={worst:.1e}; "
                                   f"max upper-half asymmetry={asym:.3f}")


def test_criterion_10_spacetime():
    heat = spacetime.basis_for(IntervalParams(0.3), 4, "neumann")
    f = spacetime.delta(heat, spacetime.nearest_vertex(heat, [0.3]))
    ones = np.ones_like(f)
    mass0 = heat.inner(f, ones)
    times = np.array([0.0, 1e-4, 1e-2, 1.0, 10.0])
    drift = max(abs(heat.inner(u, ones) - mass0) for u in spacetime.heat_solution(heat, f, times))
    late = spacetime.heat_solution(heat, f, 1e5)
    limit_err = float(np.max(np.abs(late - float(np.dot(f, heat.pointmass)))))
    sg_heat = spacetime.basis_for(SGParams(2.0), 2, "neumann")
    g = spacetime.delta(sg_heat, 7)
    drift = max(drift, max(abs(sg_heat.inner(u, np.ones_like(g)) - sg_heat.inner(g, np.ones_like(g)))
                           for u in spacetime.heat_solution(sg_heat, g, times)))

    wave = spacetime.basis_for(SGParams(1.0), 3, "dirichlet")
    v = spacetime.delta(wave, spacetime.nearest_vertex(wave, [0.5, 0.3]))
    h = 1e-7
    u = spacetime.wave_solution(wave, v, [0.0, h])
    target = wave.functions @ wave.coefficients(v)
    fd_err = float(np.max(np.abs((u[1] - u[0]) / h - target)) / np.max(np.abs(target)))
    gram = max(wave.gram_deviation(), heat.gram_deviation(), sg_heat.gram_deviation())
    ok = drift <= 1e-9 and limit_err <= 1e-8 and fd_err <= 1e-4 and gram <= 1e-8
    assert record_criterion(10, ok, f"mass drift={drift:.1e} long-time err={limit_err:.1e} "
                                    f"wave FD err={fd_err:.1e} Gram dev={gram:.1e} "
                                    f"(SG r=1 m=3 Dirichlet included)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
