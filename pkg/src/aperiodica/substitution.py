"""One-dimensional point sets from primitive substitutions.

Tiles get their natural lengths from the left Perron eigenvector of the
substitution matrix; points sit at left tile endpoints and carry the tile's
symbol as a colour.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotPrimitive, WordTooLong
from .pointset import PointSet

WORD_BUDGET = 10**7


@dataclass(frozen=True)
class SubstitutionRule:
    alphabet: tuple
    rules: dict
    lengths: tuple | None = None

    def __post_init__(self):
        alphabet = tuple(self.alphabet)
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("alphabet symbols must be distinct")
        rules = {a: tuple(self.rules[a]) for a in alphabet}
        for a, img in rules.items():
            if not img or any(s not in alphabet for s in img):
                raise ValueError(f"rule for {a!r} must be a nonempty word over the alphabet")
        object.__setattr__(self, "alphabet", alphabet)
        object.__setattr__(self, "rules", rules)
        if self.lengths is not None:
            object.__setattr__(self, "lengths", tuple(float(x) for x in self.lengths))

    @property
    def matrix(self):
        """Entry [i, j] counts symbol i in the image of symbol j."""
        pos = {a: i for i, a in enumerate(self.alphabet)}
        m = np.zeros((len(self.alphabet), len(self.alphabet)), dtype=np.int64)
        for j, a in enumerate(self.alphabet):
            for s in self.rules[a]:
                m[pos[s], j] += 1
        return m

    def tile_lengths(self):
        return np.array(self.lengths) if self.lengths is not None else perron_data(self)["lengths"]


def is_primitive(m):
    n = len(m)
    reach = (np.asarray(m) > 0).astype(np.int64)
    power = reach.copy()
    for _ in range(n * n):
        if np.all(power > 0):
            return True
        power = ((power @ reach) > 0).astype(np.int64)
    return False


def perron_data(rule, tol=1e-12, max_iter=100_000):
    """Perron eigenvalue and tile lengths (left eigenvector, first length 1)."""
    m = rule.matrix.astype(float)
    if not is_primitive(m):
        raise NotPrimitive("substitution matrix has no entrywise positive power")
    v = np.ones(len(m))
    for _ in range(max_iter):
        w = v @ m
        w = w / w[0]
        done = np.max(np.abs(w - v)) < tol
        v = w
        if done:
            break
    lam = float((v @ m)[0] / v[0])
    return {"eigenvalue": lam, "lengths": v}


def length_residual(rule, lengths, eigenvalue):
    """``max_a |L(a) λ - sum_{b in rule(a)} L(b)|``."""
    lengths = np.asarray(lengths, dtype=float)
    return float(np.max(np.abs(lengths * eigenvalue - lengths @ rule.matrix)))


def expand_word(rule, seed_symbol, iterations, budget=WORD_BUDGET):
    """Letter indices of ``rule^iterations(seed_symbol)``."""
    if iterations < 0:
        raise ValueError("iterations must be nonnegative")
    if not is_primitive(rule.matrix):
        raise NotPrimitive("substitution matrix has no entrywise positive power")
    pos = {a: i for i, a in enumerate(rule.alphabet)}
    images = [np.array([pos[s] for s in rule.rules[a]], dtype=np.int64) for a in rule.alphabet]
    img_len = np.array([len(i) for i in images], dtype=np.int64)
    word = np.array([pos[seed_symbol]], dtype=np.int64)
    for _ in range(iterations):
        lens = img_len[word]
        total = int(lens.sum())
        if total > budget:
            raise WordTooLong(f"word length {total} exceeds {budget}")
        starts = np.cumsum(lens) - lens
        out = np.empty(total, dtype=np.int64)
        for a, img in enumerate(images):
            at = starts[word == a]
            for j, s in enumerate(img):
                out[at + j] = s
        word = out
    return word


@dataclass(frozen=True, eq=False)
class ColouredPointSet:
    points: PointSet
    colours: tuple

    def __len__(self):
        return len(self.colours)


def generate_substitution_points(rule, seed_symbol, iterations, origin=0.0):
    """Left endpoints of the tiles of ``rule^iterations(seed)`` laid out from ``origin``."""
    word = expand_word(rule, seed_symbol, iterations)
    lengths = rule.tile_lengths()
    # position = origin + sum over symbols of (count before this tile) * length
    before = np.zeros((len(word), len(lengths)))
    for a in range(len(lengths)):
        before[:, a] = np.cumsum(word == a) - (word == a)
    x = origin + before @ lengths
    radius = float(max(np.max(np.abs(x)), 1e-9))
    ps = PointSet(x, radius, label=f"substitution:{seed_symbol}^{iterations}", dimension=1)
    colours = tuple(rule.alphabet[i] for i in word)
    return ColouredPointSet(ps, colours)


def _matches(c, p, shift, tol):
    """Max deviation of ``c + shift`` against ``p`` on their overlap, or None if some point is unmatched."""
    cs = c + shift
    lo, hi = max(cs[0], p[0]), min(cs[-1], p[-1])
    short = cs if cs[-1] - cs[0] <= p[-1] - p[0] else p
    if lo > short[0] + tol or hi < short[-1] - tol:
        return None
    ci = cs[(cs >= lo - tol) & (cs <= hi + tol)]
    pi = p[(p >= lo - tol) & (p <= hi + tol)]
    if len(ci) != len(pi):
        return None
    dev = float(np.max(np.abs(ci - pi))) if len(ci) else 0.0
    return dev if dev <= tol else None


def match_model_set(cset, ps, tol):
    """Look for one translation mapping the coloured set onto the point set.

    Candidate shifts align the first point of ``cset`` with each point of
    ``ps``.  A shift matches when, on the overlap of the two spans (which must
    cover the shorter set), the points pair up one to one within ``tol``.
    """
    pts = cset.points if isinstance(cset, ColouredPointSet) else cset
    if pts.dimension != 1 or ps.dimension != 1:
        raise DimensionMismatch("match_model_set compares 1D point sets")
    c = pts.points[:, 0]
    p = ps.points[:, 0]
    if len(c) == 0 or len(p) == 0:
        return {"matched": False, "max_deviation": float("inf"), "alignment_shift": 0.0}
    best = None
    for shift in sorted(p - c[0], key=abs):
        dev = _matches(c, p, shift, tol)
        if dev is not None:
            return {"matched": True, "max_deviation": dev, "alignment_shift": float(shift)}
        if best is None:
            best = float(shift)
    # no alignment works: report the deviation at the shift nearest zero
    cs = c + best
    pos = np.searchsorted(p, cs)
    left = np.abs(cs - p[np.clip(pos - 1, 0, len(p) - 1)])
    right = np.abs(cs - p[np.clip(pos, 0, len(p) - 1)])
    return {"matched": False, "max_deviation": float(np.max(np.minimum(left, right))),
            "alignment_shift": best}


FIBONACCI = SubstitutionRule(("a", "b"), {"a": "ab", "b": "a"})
PERIOD_DOUBLING = SubstitutionRule(("a", "b"), {"a": "ab", "b": "aa"})
SILVER_MEAN = SubstitutionRule(("a", "b"), {"a": "aab", "b": "a"})


def rule_from_dict(spec):
    lengths = spec.get("lengths", "perron")
    if lengths == "perron":
        lengths = None
    elif isinstance(lengths, dict):
        lengths = [lengths[a] for a in spec["alphabet"]]
    return SubstitutionRule(tuple(spec["alphabet"]), dict(spec["rules"]), lengths)
