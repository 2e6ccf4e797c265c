"""Finite samples of Delone sets and geometric order diagnostics.

A :class:`PointSet` stands for ``Lambda ∩ B_n``: the part of an infinite
point set inside the ball of radius ``n`` about the origin.  The functions
below estimate Delone constants, build difference sets, look for Meyer
witnesses and measure how well a translation maps the sample onto itself.
All of them work at one finite radius and make no claim about the limit.
"""

from dataclasses import dataclass, asdict
from math import gamma, pi

import numpy as np
from scipy.spatial import cKDTree

from ._pairs import cluster_differences, hashed_differences
from .errors import CutoffTooLarge, DegenerateSample, EmptySet, ShiftTooLarge

MATCH_TOL = 1e-8
BOUNDARY_SLACK = 1e-9
MAX_PROBES = 20_000_000


def ball_volume(dim, radius):
    """Lebesgue volume of the ``dim``-dimensional ball."""
    if dim == 0:
        return 1.0
    if dim == 1:
        return 2.0 * radius
    if dim == 2:
        return pi * radius * radius
    return pi ** (dim / 2) / gamma(dim / 2 + 1) * radius**dim


def _lexsort_rows(x):
    if len(x) == 0:
        return x
    return x[np.lexsort(x.T[::-1])]


def _dedupe_sorted(x, tol):
    if len(x) < 2:
        return x
    if x.shape[1] == 1:
        keep = np.concatenate(([True], np.diff(x[:, 0]) > tol))
        return x[keep]
    pairs = cKDTree(x).query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return x
    drop = np.zeros(len(x), dtype=bool)
    # Visit pairs in index order so the first point of each group survives.
    for i, j in pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]:
        if not drop[i]:
            drop[j] = True
    return x[~drop]


class PointSet:
    """Immutable finite sample of a point set in R^N.

    Points are deduplicated at ``match_tol`` and stored in lexicographic
    order, so equal samples compare and hash equal.
    """

    __slots__ = ("_points", "sample_radius", "label", "match_tol", "_tree")

    def __init__(self, points, sample_radius, label=None, dimension=None,
                 match_tol=MATCH_TOL, boundary_slack=BOUNDARY_SLACK):
        x = np.asarray(points, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1) if dimension in (None, 1) else x.reshape(-1, dimension)
        if x.size == 0:
            x = np.zeros((0, dimension or (x.shape[1] if x.ndim == 2 else 1)))
        if dimension is not None and x.shape[1] != dimension:
            raise ValueError(f"points have dimension {x.shape[1]}, expected {dimension}")
        if sample_radius <= 0:
            raise ValueError("sample_radius must be positive")
        x = _dedupe_sorted(_lexsort_rows(x), match_tol)
        if len(x) and np.max(np.linalg.norm(x, axis=1)) > sample_radius + boundary_slack:
            raise ValueError("point outside the sample ball")
        x.setflags(write=False)
        self._points = x
        self.sample_radius = float(sample_radius)
        self.label = label
        self.match_tol = match_tol
        self._tree = None

    @property
    def points(self):
        return self._points

    @property
    def dimension(self):
        return self._points.shape[1]

    def __len__(self):
        return len(self._points)

    def __repr__(self):
        return (f"PointSet(dim={self.dimension}, size={len(self)}, "
                f"radius={self.sample_radius:g}, label={self.label!r})")

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return (self.sample_radius == other.sample_radius
                and self._points.shape == other._points.shape
                and np.array_equal(self._points, other._points))

    def __hash__(self):
        return hash((self.sample_radius, self._points.shape, self._points.tobytes()))

    @property
    def volume(self):
        """Volume of the sample ball ``|B_n|``."""
        return ball_volume(self.dimension, self.sample_radius)

    @property
    def density(self):
        return len(self) / self.volume

    def tree(self):
        if self._tree is None:
            self._tree = cKDTree(self._points)
        return self._tree

    def contains(self, queries, tol=None):
        """Boolean mask: is each query point in the sample (within ``tol``)?"""
        tol = self.match_tol if tol is None else tol
        q = np.asarray(queries, dtype=float).reshape(-1, self.dimension)
        if len(self) == 0:
            return np.zeros(len(q), dtype=bool)
        if self.dimension == 1:
            xs = self._points[:, 0]
            pos = np.searchsorted(xs, q[:, 0])
            left = np.abs(q[:, 0] - xs[np.clip(pos - 1, 0, len(xs) - 1)])
            right = np.abs(q[:, 0] - xs[np.clip(pos, 0, len(xs) - 1)])
            return np.minimum(left, right) <= tol
        dist, _ = self.tree().query(q, k=1, distance_upper_bound=2 * tol + 1e-300)
        return dist <= tol

    def cropped(self, radius):
        """Sub-sample inside the smaller ball ``B_radius``."""
        x = self._points[np.linalg.norm(self._points, axis=1) <= radius]
        return PointSet(x, radius, self.label, self.dimension, self.match_tol)

    def translated(self, t):
        """``ps + t`` cropped to the ball ``B_{n-|t|}`` that it still covers."""
        t = np.asarray(t, dtype=float).reshape(self.dimension)
        r = self.sample_radius - float(np.linalg.norm(t))
        if r <= 0:
            raise ShiftTooLarge("translation exceeds the sample radius")
        x = self._points + t
        x = x[np.linalg.norm(x, axis=1) <= r]
        return PointSet(x, r, self.label, self.dimension, self.match_tol)


@dataclass(frozen=True)
class DeloneReport:
    packing_diameter: float
    covering_radius: float
    density_estimate: float
    probe_spacing: float

    def to_dict(self):
        return asdict(self)


def probe_grid(dim, radius, spacing):
    """Cubic grid of the given spacing restricted to the closed ball ``B_radius``."""
    if radius < 0:
        return np.zeros((0, dim))
    m = int(np.floor(radius / spacing))
    count = (2 * m + 1) ** dim
    if count > MAX_PROBES:
        raise ValueError(f"probe grid of {count} points is too large; increase probe_spacing")
    axis = np.arange(-m, m + 1) * spacing
    grid = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    return grid[np.linalg.norm(grid, axis=1) <= radius]


def _max_gap_distance(ps, probes):
    if len(probes) == 0:
        return 0.0
    if ps.dimension == 1:
        xs = ps.points[:, 0]
        pos = np.searchsorted(xs, probes[:, 0])
        left = np.abs(probes[:, 0] - xs[np.clip(pos - 1, 0, len(xs) - 1)])
        right = np.abs(probes[:, 0] - xs[np.clip(pos, 0, len(xs) - 1)])
        return float(np.max(np.minimum(left, right)))
    dist, _ = ps.tree().query(probes, k=1)
    return float(np.max(dist))


def nearest_neighbour_distances(ps):
    if ps.dimension == 1:
        gaps = np.diff(ps.points[:, 0])
        left = np.concatenate(([np.inf], gaps))
        right = np.concatenate((gaps, [np.inf]))
        return np.minimum(left, right)
    dist, _ = ps.tree().query(ps.points, k=2)
    return dist[:, 1]


def delone_report(ps, probe_spacing):
    """Estimate the Delone constants of a sample.

    The packing diameter ``2r`` is the exact minimum pairwise distance.  The
    covering radius ``R`` is the largest probe-to-sample distance over a grid
    restricted to ``B_{n - 2 R0}``, where ``R0`` comes from a coarse first pass;
    the guard band keeps truncation at the sample boundary out of the estimate.
    """
    if len(ps) == 0:
        raise EmptySet("point set is empty")
    if len(ps) < 2:
        raise DegenerateSample("need at least two distinct points")
    packing = float(np.min(nearest_neighbour_distances(ps)))

    n = ps.sample_radius
    coarse_spacing = max(probe_spacing, n / 64)
    coarse = _max_gap_distance(ps, probe_grid(ps.dimension, n / 2, coarse_spacing))
    guard = 2 * coarse
    inner = n - guard if n - guard > 0 else 0.0
    covering = _max_gap_distance(ps, probe_grid(ps.dimension, inner, probe_spacing))
    return DeloneReport(packing, covering, ps.density, float(probe_spacing))


def _check_cutoff(ps, cutoff):
    if cutoff <= 0:
        raise ValueError("cutoff must be positive")
    if cutoff > 2 * ps.sample_radius:
        raise CutoffTooLarge(f"cutoff {cutoff} exceeds twice the sample radius")


def difference_set(ps, cutoff):
    """All distinct vectors ``x - y`` (x, y in the sample) with norm <= cutoff."""
    _check_cutoff(ps, cutoff)
    reach = cutoff + ps.match_tol
    pos, _ = cluster_differences(
        hashed_differences(ps.points, reach), ps.dimension, ps.match_tol)
    return PointSet(pos, reach, label=f"diff({ps.label})", dimension=ps.dimension,
                    match_tol=ps.match_tol)


@dataclass(frozen=True)
class MeyerReport:
    uniformly_discrete_diff: bool
    min_gap: float
    witness_F: list | None

    def to_dict(self):
        return asdict(self)


def meyer_check(ps, cutoff, min_gap_threshold=None, f_max=64):
    """Finite-patch evidence for the Meyer property.

    ``uniformly_discrete_diff`` compares the smallest gap in the difference set
    against ``min_gap_threshold`` (default ``10 * match_tol``).  The witness
    ``F`` is built greedily so that every difference found lies in ``ps + F``;
    it is ``None`` when more than ``f_max`` translates would be needed, which
    is inconclusive rather than a negative answer.
    """
    diffs = difference_set(ps, cutoff)
    d = diffs.points
    threshold = 10 * ps.match_tol if min_gap_threshold is None else min_gap_threshold
    min_gap = float(np.min(nearest_neighbour_distances(diffs))) if len(d) > 1 else float("inf")

    order = np.lexsort(tuple(d.T[::-1]) + (np.linalg.norm(d, axis=1),))
    witness = []
    covered = np.zeros(len(d), dtype=bool)
    for idx in order:
        if covered[idx]:
            continue
        if len(ps) == 0:
            witness = None
            break
        # Smallest-norm residual d - x is attained at the sample point nearest d.
        if ps.dimension == 1:
            xs = ps.points[:, 0]
            pos = np.searchsorted(xs, d[idx, 0])
            cand = xs[np.clip([pos - 1, pos], 0, len(xs) - 1)]
            x = cand[np.argmin(np.abs(cand - d[idx, 0]))].reshape(1)
        else:
            _, j = ps.tree().query(d[idx], k=1)
            x = ps.points[j]
        f = d[idx] - x
        witness.append(f)
        if len(witness) > f_max:
            witness = None
            break
        covered |= ps.contains(d - f)
    if witness is not None:
        witness = [tuple(float(c) for c in f) for f in witness]
    return MeyerReport(bool(min_gap > threshold), min_gap, witness)


def _default_guard(ps, t_norm):
    nn = nearest_neighbour_distances(ps)
    nn = nn[np.isfinite(nn)]
    r_est = float(np.max(nn)) if len(nn) else 0.0
    return t_norm + 2 * r_est


def almost_period_defect(ps, t, guard=None):
    """Density of the symmetric difference ``ps Δ (ps + t)`` on ``B_{n-guard}``.

    ``guard`` defaults to ``|t| + 2R`` with ``R`` bounded by the largest
    nearest-neighbour distance in the sample.
    """
    t = np.asarray(t, dtype=float).reshape(ps.dimension)
    t_norm = float(np.linalg.norm(t))
    if guard is None:
        guard = _default_guard(ps, t_norm)
    if t_norm + guard >= ps.sample_radius:
        raise ShiftTooLarge(f"|t| + guard = {t_norm + guard} reaches the sample radius")
    inner = ps.sample_radius - guard
    x = ps.points
    r = np.linalg.norm(x, axis=1)
    here = x[r <= inner]
    shifted = x + t
    shifted = shifted[np.linalg.norm(shifted, axis=1) <= inner]
    # here \ (ps + t): y with y - t not in ps; (ps + t) \ ps: shifted points missing from ps
    missing_a = np.count_nonzero(~ps.contains(here - t))
    missing_b = np.count_nonzero(~ps.contains(shifted))
    return (missing_a + missing_b) / ball_volume(ps.dimension, inner)


def statistical_almost_periods(ps, eps, candidates, guard=None):
    """Candidates whose defect is at most ``eps``, sorted by norm."""
    cands = np.asarray(candidates, dtype=float).reshape(-1, ps.dimension)
    keep = [c for c in cands if almost_period_defect(ps, c, guard) <= eps]
    keep.sort(key=lambda c: (float(np.linalg.norm(c)), tuple(c)))
    return keep
