import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aperiodica.autocorr import autocorrelation, convergence_report, measure_deviation
from aperiodica.cutproject import generate_model_set, preset
from aperiodica.errors import CutoffTooLarge, IncompatibleSamples
from aperiodica.pointset import PointSet

from conftest import integer_sample


def test_integer_weights():
    n = 100
    g = autocorrelation(integer_sample(n), 10)
    assert g.positions[:, 0].tolist() == list(range(-10, 11))
    for z, w in zip(g.positions[:, 0], g.weights):
        assert w == (2 * n + 1 - abs(z)) / (2 * n)
    assert g.weight_at([0.0]) == 201 / 200


def test_single_point():
    g = autocorrelation(PointSet([[0.0]], 3), 1)
    assert g.positions.tolist() == [[0.0]]
    assert g.weights.tolist() == [1 / 6]


def test_cutoff_too_large(z100):
    with pytest.raises(CutoffTooLarge):
        autocorrelation(z100, 201)


def test_hash_equals_naive_fibonacci(fib1000):
    a = autocorrelation(fib1000, 10, method="hash")
    b = autocorrelation(fib1000, 10, method="naive")
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.weights, b.weights)


def test_against_double_loop(fib300):
    g = autocorrelation(fib300, 10)
    x = fib300.points[:, 0]
    d = (x[:, None] - x[None, :]).ravel()
    d = d[np.abs(d) <= 10]
    for z, w in zip(g.positions[:, 0], g.weights):
        count = np.count_nonzero(np.abs(d - z) < 1e-6)
        assert abs(w - count / fib300.volume) < 1e-12


def test_symmetry_and_mass(fib300):
    g = autocorrelation(fib300, 10)
    assert np.array_equal(g.positions[:, 0], -g.positions[::-1, 0])
    assert np.array_equal(g.weights, g.weights[::-1])
    assert g.weight_at([0.0]) == fib300.density
    x = fib300.points[:, 0]
    pairs = np.count_nonzero(np.abs(x[:, None] - x[None, :]) <= 10 + g.cluster_tol)
    assert int(g.pair_counts.sum()) == pairs
    assert g.total_mass == pytest.approx(pairs / fib300.volume, rel=1e-14)


def test_box_region():
    g = autocorrelation(integer_sample(50), 3, region="box")
    assert g.normalization_volume == 100.0


def test_two_dimensional_hash_equals_naive():
    cps, w = preset("ammann_beenker")
    ps = generate_model_set(cps, w, 20)
    assert len(ps) <= 2000
    a = autocorrelation(ps, 2.5, method="hash")
    b = autocorrelation(ps, 2.5, method="naive")
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.weights, b.weights)
    # +/- pairing in 2D
    neg = np.lexsort((-a.positions[:, 1], -a.positions[:, 0]))
    assert np.allclose(a.positions[neg], -a.positions, atol=0)
    assert np.array_equal(a.weights[neg], a.weights)


def test_cutoff_sphere_atoms_counted_consistently():
    # (sqrt2, sqrt2) has norm exactly 2 up to rounding; all of its pairs must be kept
    cps, w = preset("ammann_beenker")
    ps = generate_model_set(cps, w, 60)
    at = autocorrelation(ps, 2.0).weight_at([2**0.5, 2**0.5])
    beyond = autocorrelation(ps, 2.1).weight_at([2**0.5, 2**0.5])
    assert at == beyond > 0


def test_convergence_examples(fib_scheme):
    z = convergence_report(integer_sample(100), integer_sample(200), 10)
    assert z <= 10 / 200 + 1e-12
    same = integer_sample(50)
    assert convergence_report(same, same, 5) == 0.0
    cps, w = fib_scheme
    a, b = generate_model_set(cps, w, 500), generate_model_set(cps, w, 1000)
    assert convergence_report(a, b, 20) < 0.05 * b.density
    with pytest.raises(IncompatibleSamples):
        convergence_report(same, PointSet([[0.0, 0.0]], 1), 1)


def test_lattice_weights_error_constant():
    # weights at lattice vectors z tend to the density with error |z| / (2n) exactly for aZ
    for a in (1.0, 0.7):
        n = 140
        ps = integer_sample(n, a)
        g = autocorrelation(ps, 5)
        dens = 1 / a
        for z, w in zip(g.positions[:, 0], g.weights):
            assert abs(w - dens) <= (abs(z) / a + 1) / (2 * n) + 1e-12


def test_measure_deviation_unmatched():
    a = autocorrelation(integer_sample(20), 2)
    b = autocorrelation(PointSet(np.arange(-20, 21, 2.0)[:, None], 20), 2)
    assert measure_deviation(a, b) == pytest.approx(a.weight_at([1.0]))


@settings(max_examples=25, deadline=None)
@given(st.lists(st.tuples(st.floats(-15, 15), st.floats(-15, 15)), min_size=1, max_size=80),
       st.floats(0.5, 6))
def test_hash_naive_random_2d(pts, cutoff):
    x = np.array(pts)
    x = x[np.linalg.norm(x, axis=1) <= 15]
    if len(x) == 0:
        return
    ps = PointSet(x, 15)
    a = autocorrelation(ps, cutoff, method="hash")
    b = autocorrelation(ps, cutoff, method="naive")
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.weights, b.weights)
    assert a.weight_at(np.zeros(2)) == pytest.approx(len(ps) / ps.volume)
    assert a.pair_counts.sum() >= len(ps)
