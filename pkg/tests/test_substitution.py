import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aperiodica.cutproject import TAU, fibonacci_substitution_window, generate_model_set, preset
from aperiodica.errors import DimensionMismatch, NotPrimitive, WordTooLong
from aperiodica.pointset import PointSet
from aperiodica.substitution import (FIBONACCI, PERIOD_DOUBLING, SILVER_MEAN, SubstitutionRule,
                                     expand_word, generate_substitution_points, is_primitive,
                                     length_residual, match_model_set, perron_data, rule_from_dict)


def test_perron_fibonacci():
    d = perron_data(FIBONACCI)
    assert d["eigenvalue"] == pytest.approx(TAU, abs=1e-12)
    assert d["lengths"] == pytest.approx([1.0, 1 / TAU], abs=1e-12)
    assert length_residual(FIBONACCI, d["lengths"], d["eigenvalue"]) < 1e-10


def test_perron_period_doubling_and_silver():
    d = perron_data(PERIOD_DOUBLING)
    assert d["eigenvalue"] == pytest.approx(2.0, abs=1e-12)
    s = perron_data(SILVER_MEAN)
    assert s["eigenvalue"] == pytest.approx(1 + 2**0.5, abs=1e-12)
    assert length_residual(SILVER_MEAN, s["lengths"], s["eigenvalue"]) < 1e-10


def test_one_letter_rule():
    r = SubstitutionRule(("a",), {"a": "a"})
    d = perron_data(r)
    assert d["eigenvalue"] == 1.0 and list(d["lengths"]) == [1.0]
    assert len(generate_substitution_points(r, "a", 5)) == 1


def test_not_primitive():
    r = SubstitutionRule(("a", "b"), {"a": "a", "b": "b"})
    assert not is_primitive(r.matrix)
    with pytest.raises(NotPrimitive):
        perron_data(r)
    with pytest.raises(NotPrimitive):
        generate_substitution_points(r, "a", 3)


def test_word_lengths_follow_recursion():
    # |sigma^k(a)| obeys L_k = L_{k-1} + L_{k-2}, L_0 = 1, L_1 = 2
    lengths = [1, 2]
    while len(lengths) < 13:
        lengths.append(lengths[-1] + lengths[-2])
    for k, want in enumerate(lengths):
        assert len(expand_word(FIBONACCI, "a", k)) == want
    assert len(generate_substitution_points(FIBONACCI, "a", 10)) == 144


def test_zero_iterations():
    c = generate_substitution_points(FIBONACCI, "a", 0, origin=2.5)
    assert c.points.points.tolist() == [[2.5]] and c.colours == ("a",)


def test_doubling_lattice():
    r = SubstitutionRule(("a",), {"a": "aa"})
    c = generate_substitution_points(r, "a", 6, origin=-3.0)
    assert c.points.points[:, 0].tolist() == list(-3.0 + np.arange(64))


def test_word_budget():
    with pytest.raises(WordTooLong):
        expand_word(PERIOD_DOUBLING, "a", 30, budget=1000)


@pytest.mark.parametrize("rule", [FIBONACCI, SILVER_MEAN, PERIOD_DOUBLING])
def test_gaps_match_colours(rule):
    c = generate_substitution_points(rule, "a", 8)
    x = c.points.points[:, 0]
    lengths = dict(zip(rule.alphabet, rule.tile_lengths()))
    want = np.array([lengths[s] for s in c.colours[:-1]])
    assert np.allclose(np.diff(x), want, atol=1e-9)


def test_letter_frequencies():
    d = perron_data(FIBONACCI)
    m = FIBONACCI.matrix.astype(float)
    vals, vecs = np.linalg.eig(m)
    right = np.abs(vecs[:, np.argmax(vals.real)].real)
    right /= right.sum()
    word = expand_word(FIBONACCI, "a", 12)
    freq = np.bincount(word, minlength=2) / len(word)
    assert np.allclose(freq, right, rtol=0.01)
    assert d["eigenvalue"] == pytest.approx(np.max(vals.real))


def test_self_similarity():
    lam = perron_data(FIBONACCI)["eigenvalue"]
    small = generate_substitution_points(FIBONACCI, "a", 8).points.points[:, 0]
    big = generate_substitution_points(FIBONACCI, "a", 9).points.points[:, 0]
    scaled = PointSet((lam * small)[:, None], lam * small.max() + 1)
    assert np.all(PointSet(big[:, None], big.max() + 1).contains(scaled.points, tol=1e-8))


def test_match_self_and_mismatch():
    c = generate_substitution_points(FIBONACCI, "a", 10)
    r = match_model_set(c, c.points, 1e-12)
    assert r["matched"] and r["max_deviation"] == 0.0 and r["alignment_shift"] == 0.0
    s = generate_substitution_points(SILVER_MEAN, "a", 6)
    assert not match_model_set(c, s.points, 1e-6)["matched"]
    with pytest.raises(DimensionMismatch):
        match_model_set(c, PointSet([[0.0, 0.0]], 1), 1e-6)


def test_match_model_set_fibonacci():
    cps, _ = preset("fibonacci")
    ps = generate_model_set(cps, fibonacci_substitution_window(), 1000)
    c = generate_substitution_points(FIBONACCI, "a", 12)
    r = match_model_set(c, ps, 1e-6)
    assert r["matched"] and r["max_deviation"] < 1e-6


def test_rule_from_dict():
    r = rule_from_dict({"alphabet": ["a", "b"], "rules": {"a": "ab", "b": "a"}, "lengths": "perron"})
    assert r == FIBONACCI
    assert np.array_equal(r.matrix, [[1, 1], [1, 0]])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.sampled_from("ab"), min_size=1, max_size=4).map("".join),
       st.lists(st.sampled_from("ab"), min_size=1, max_size=4).map("".join))
def test_perron_self_consistency(ra, rb):
    r = SubstitutionRule(("a", "b"), {"a": ra, "b": rb})
    if not is_primitive(r.matrix):
        with pytest.raises(NotPrimitive):
            perron_data(r)
        return
    d = perron_data(r)
    assert d["lengths"][0] == 1.0 and np.all(d["lengths"] > 0)
    assert length_residual(r, d["lengths"], d["eigenvalue"]) < 1e-10 * max(1.0, d["eigenvalue"])
