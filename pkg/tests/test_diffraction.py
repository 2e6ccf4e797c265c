import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aperiodica.autocorr import AtomicMeasure, autocorrelation
from aperiodica.cutproject import analytic_diffraction, generate_model_set, preset, reciprocal_points
from aperiodica.diffraction import (DiffractionSpectrum, Peak, bragg_scan, compare_spectra,
                                    empirical_amplitude, empirical_spectrum, exponential_sums,
                                    peak_gap_bound, refine_peak, smoothed_transform)
from aperiodica.errors import DimensionMismatch, InconsistentDimension, NoAscent
from aperiodica.pointset import PointSet

from conftest import integer_sample


def test_integer_amplitudes(z100):
    assert empirical_amplitude(z100, [0.0]) == 1.005
    assert empirical_amplitude(z100, [np.pi]).real == pytest.approx(0.005, abs=1e-14)
    assert abs(empirical_amplitude(z100, [np.pi]).imag) < 1e-14


def test_amplitude_exact_at_zero(fib1000):
    assert empirical_amplitude(fib1000, [0.0]) == fib1000.density


def test_empirical_spectrum_examples(z100):
    s = empirical_spectrum(z100, [[0.0], [np.pi], [2 * np.pi]], 0.5)
    assert [p.k[0] for p in s.peaks] == [0.0, 2 * np.pi]
    assert np.allclose(s.intensities, 1.005**2)
    assert len(empirical_spectrum(z100, [], 0.0)) == 0
    for p in s.peaks:
        assert p.intensity == pytest.approx(abs(p.amplitude) ** 2, abs=1e-12)


def test_fibonacci_peak_vs_formula(fib1000, fib_scheme):
    cps, w = fib_scheme
    ana = analytic_diffraction(cps, w, 20, 30).strongest(2)
    top = [p for p in ana.peaks if p.k[0] != 0.0][0]
    emp = abs(empirical_amplitude(fib1000, top.k)) ** 2
    assert abs(emp - top.intensity) <= 0.02 * top.intensity


def test_nonzero_exactly_where_formula_is(fib1000, fib_scheme):
    cps, w = fib_scheme
    cands = reciprocal_points(cps, 20, 30)
    emp = empirical_spectrum(fib1000, cands)
    ana = analytic_diffraction(cps, w, 20, 30)
    assert np.array_equal(emp.ks, ana.ks)
    strong = ana.intensities > 1e-3
    assert np.all(emp.intensities[strong] > 0.5 * ana.intensities[strong])
    assert np.corrcoef(emp.intensities, ana.intensities)[0, 1] > 0.999


def test_lattice_convergence_rate():
    # intensity error at 2pi m / a is C/n; report the fitted C
    for a in (1.0, 0.7):
        errs = []
        for n in (100.0, 1000.0, 10000.0):
            ps = integer_sample(n, a)
            i = abs(empirical_amplitude(ps, [2 * np.pi / a])) ** 2
            errs.append(n * abs(i - 1 / a**2))
        c = max(errs)
        print(f"lattice a={a}: fitted C = {c:.4f}")
        assert c <= 2 / a**2 + 1e-6
        ps = integer_sample(1e4 / a, a)
        assert abs(empirical_amplitude(ps, [np.pi / a])) ** 2 < 1e-3
        assert abs(empirical_amplitude(ps, [1.234])) ** 2 < 1e-3


def test_translation_covariance(fib_scheme):
    cps, w = fib_scheme
    big = generate_model_set(cps, w, 520)
    n, t = 500.0, 1.0
    base = big.cropped(n)
    shifted = big.points + t
    moved = PointSet(shifted[np.abs(shifted[:, 0]) <= n], n)
    d = base.density
    bound = 4 * d**2 * (t * 2 / (2 * n))
    ks = analytic_diffraction(cps, w, 20, 30, 1e-3).ks
    for k in ks:
        a = empirical_amplitude(base, k)
        b = empirical_amplitude(moved, k)
        assert abs(abs(a) ** 2 - abs(b) ** 2) <= bound


def test_refine_peak(z100):
    ps = integer_sample(200)
    r = refine_peak(ps, [2 * np.pi + 0.01], 0.05)
    xs = np.linspace(2 * np.pi - 0.04, 2 * np.pi + 0.06, 20001)
    oracle = xs[np.argmax(np.abs(empirical_amplitude(ps, xs[:, None])) ** 2)]
    tol = 1e-3 * 2 * np.pi / 200
    assert abs(r["k"][0] - oracle) <= 2 * tol
    assert abs(r["k"][0] - 2 * np.pi) <= 2 * np.pi / 400
    same = refine_peak(ps, [2 * np.pi], 0.05)
    assert abs(same["k"][0] - 2 * np.pi) <= tol
    with pytest.raises(ValueError):
        refine_peak(ps, [2 * np.pi], 0.01)


def test_refine_no_ascent():
    ps = integer_sample(200)
    w = 2 * np.pi / 200
    with pytest.raises(NoAscent):
        refine_peak(ps, [2 * np.pi + 1.2 * w], w)


def test_refine_2d():
    cps, w = preset("lattice:1")
    g = np.stack(np.meshgrid(np.arange(-30, 31), np.arange(-30, 31)), -1).reshape(-1, 2).astype(float)
    ps = PointSet(g[np.linalg.norm(g, axis=1) <= 30], 30)
    r = refine_peak(ps, [2 * np.pi + 0.02, -0.03], 0.25)
    assert np.allclose(r["k"], [2 * np.pi, 0.0], atol=2e-3 * 2 * np.pi / 30)


def test_bragg_scan_integers():
    seq = [integer_sample(100), integer_sample(200)]
    s = bragg_scan(seq, [[np.pi], [2 * np.pi]], 0.05)
    assert [p.k[0] for p in s.peaks] == [2 * np.pi]
    strict = bragg_scan([integer_sample(100.5), integer_sample(200.5)], [[np.pi], [1.0]], 0.0)
    assert len(strict) == 0
    with pytest.raises(ValueError):
        bragg_scan(seq[:1], [[0.0]], 0.1)


def test_bragg_scan_fibonacci(fib_scheme):
    cps, w = fib_scheme
    seq = [generate_model_set(cps, w, 500), generate_model_set(cps, w, 1000)]
    s = bragg_scan(seq, reciprocal_points(cps, 40, 60), 0.05, 1e-3)
    assert len(s) > 10
    assert peak_gap_bound(s, 40, 1e-3) < 10


def test_smoothed_transform(z100):
    single = AtomicMeasure(1, np.zeros((1, 1)), np.array([0.7]), 1.0, 5.0)
    vals = smoothed_transform(single, [0.0, 1.0, 7.0], 1.0)
    assert [v for _, v in vals] == [0.7, 0.7, 0.7]
    g = autocorrelation(z100, 20)
    vals = dict((k[0], v) for k, v in smoothed_transform(g, [np.pi, 2 * np.pi], 5.0))
    assert vals[2 * np.pi] > 10 * abs(vals[np.pi])
    tiny = smoothed_transform(g, [0.3, 2.0], 1e-6)
    assert all(v == pytest.approx(g.weight_at([0.0])) for _, v in tiny)
    with pytest.raises(InconsistentDimension):
        smoothed_transform(g, [[1.0, 2.0]], 1.0)


def test_compare_spectra():
    a = DiffractionSpectrum(1, (Peak((0.0,), 1.0), Peak((1.0,), 0.5)))
    r = compare_spectra(a, a, 1e-9)
    assert r.max_rel_intensity_error == 0 and not r.unmatched_a and not r.unmatched_b
    b = DiffractionSpectrum(1, (Peak((5.0,), 1.0),))
    r = compare_spectra(a, b, 1e-3)
    assert len(r.unmatched_a) == 2 and len(r.unmatched_b) == 1 and not r.matched_pairs
    with pytest.raises(DimensionMismatch):
        compare_spectra(a, DiffractionSpectrum(2, ()), 1.0)


def test_thread_count_does_not_change_bits(monkeypatch, fib1000):
    xi = np.linspace(-30, 30, 5001)[:, None]
    monkeypatch.setenv("APERIODICA_THREADS", "1")
    one = exponential_sums(fib1000.points, xi)
    monkeypatch.setenv("APERIODICA_THREADS", "4")
    four = exponential_sums(fib1000.points, xi)
    assert np.array_equal(one, four)


@settings(max_examples=40, deadline=None)
@given(st.floats(-50, 50, allow_nan=False))
def test_conjugate_symmetry_and_bound(xi):
    cps, w = preset("fibonacci")
    ps = generate_model_set(cps, w, 150)
    a = empirical_amplitude(ps, [xi])
    b = empirical_amplitude(ps, [-xi])
    assert abs(a - np.conj(b)) <= 1e-12
    assert abs(a) <= ps.density * (1 + 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-30, 30), min_size=1, max_size=50), st.floats(-5, 5))
def test_sum_matches_direct(xs, xi):
    x = np.array(xs)[:, None]
    got = exponential_sums(x, [[xi]])[0]
    want = np.sum(np.exp(-1j * x[:, 0] * xi))
    assert abs(got - want) <= 1e-12 * len(xs)
