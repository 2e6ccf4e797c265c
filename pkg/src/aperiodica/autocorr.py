"""Finite-volume approximants of the autocorrelation (Patterson) measure.

For a sample ``Lambda ∩ B_n`` the approximant is

    gamma_n = (1/|B_n|) * sum_{x, y} delta_{x - y}

restricted to ``|x - y| <= diff_cutoff``.  Difference vectors closer than
``cluster_tol`` are merged into one atom.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from ._pairs import cluster_differences, hashed_differences, naive_differences
from .errors import CutoffTooLarge, IncompatibleSamples

CLUSTER_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class AtomicMeasure:
    """Finitely many weighted point masses, sorted by position."""

    dimension: int
    positions: np.ndarray
    weights: np.ndarray
    normalization_volume: float
    diff_cutoff: float = float("inf")
    cluster_tol: float = CLUSTER_TOL
    pair_counts: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.weights)

    def weight_at(self, z, tol=None):
        """Weight of the atom at ``z`` (0.0 when there is none)."""
        tol = 10 * self.cluster_tol if tol is None else tol
        z = np.asarray(z, dtype=float).reshape(self.dimension)
        dist = np.linalg.norm(self.positions - z, axis=1)
        if len(dist) == 0 or dist.min() > tol:
            return 0.0
        return float(self.weights[np.argmin(dist)])

    @property
    def total_mass(self):
        return float(np.sum(self.weights))


def autocorrelation(ps, diff_cutoff, cluster_tol=CLUSTER_TOL, method="hash", region="ball"):
    """Autocorrelation approximant of a point-set sample.

    ``method`` picks the pair enumerator: ``"hash"`` (spatial hash, cell side
    ``diff_cutoff``) or ``"naive"`` (double loop).  ``region="box"``
    normalises by the cube ``[-n, n]^N`` instead of the ball.
    """
    if diff_cutoff <= 0:
        raise ValueError("diff_cutoff must be positive")
    if diff_cutoff > 2 * ps.sample_radius:
        raise CutoffTooLarge(f"cutoff {diff_cutoff} exceeds twice the sample radius")
    if region == "ball":
        vol = ps.volume
    elif region == "box":
        vol = (2 * ps.sample_radius) ** ps.dimension
    else:
        raise ValueError(f"unknown averaging region {region!r}")
    enumerate_pairs = {"hash": hashed_differences, "naive": naive_differences}[method]
    # differences lying on the cutoff sphere are kept whatever their rounding
    pos, counts = cluster_differences(
        enumerate_pairs(ps.points, diff_cutoff + cluster_tol), ps.dimension, cluster_tol)
    pos.setflags(write=False)
    return AtomicMeasure(ps.dimension, pos, counts / vol, vol, float(diff_cutoff),
                         cluster_tol, counts)


def _match(a_pos, b_pos, tol):
    """Pairs (i, j) of atoms of a and b within ``tol``; greedy, nearest first."""
    if len(a_pos) == 0 or len(b_pos) == 0:
        return np.zeros((0, 2), dtype=int)
    dist, j = cKDTree(b_pos).query(a_pos, k=1, distance_upper_bound=tol)
    i = np.flatnonzero(np.isfinite(dist))
    order = np.argsort(dist[i], kind="stable")
    used, pairs = set(), []
    for ii in i[order]:
        if j[ii] not in used:
            used.add(j[ii])
            pairs.append((ii, j[ii]))
    return np.array(pairs, dtype=int).reshape(-1, 2)


def measure_deviation(a, b, tol=None):
    """Largest weight discrepancy between two atomic measures.

    Unmatched atoms count with their full weight.
    """
    tol = 10 * max(a.cluster_tol, b.cluster_tol) if tol is None else tol
    pairs = _match(a.positions, b.positions, tol)
    dev = 0.0
    if len(pairs):
        dev = float(np.max(np.abs(a.weights[pairs[:, 0]] - b.weights[pairs[:, 1]])))
    for m, used in ((a, pairs[:, 0]), (b, pairs[:, 1])):
        rest = np.setdiff1d(np.arange(len(m)), used)
        if len(rest):
            dev = max(dev, float(np.max(m.weights[rest])))
    return dev


def convergence_report(ps_small, ps_large, diff_cutoff, cluster_tol=CLUSTER_TOL):
    """Max weight change of the autocorrelation between two sample radii.

    A small value is numerical evidence that the approximants settle on the
    cutoff ball; it is not a proof that the limit exists.
    """
    if ps_small.dimension != ps_large.dimension:
        raise IncompatibleSamples("samples differ in dimension")
    a = autocorrelation(ps_small, diff_cutoff, cluster_tol)
    b = autocorrelation(ps_large, diff_cutoff, cluster_tol)
    return measure_deviation(a, b)
