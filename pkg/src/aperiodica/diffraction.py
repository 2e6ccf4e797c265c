"""Empirical diffraction of point-set samples.

The central quantity is the volume-averaged exponential sum

    c_n(xi) = (1/|B_n|) * sum_{x in Lambda ∩ B_n} exp(-i x·xi)

whose squared modulus approximates the Bragg intensity at ``xi``.  Sums run
in the canonical (lexicographic) point order, pairwise within blocks and
Neumaier-compensated across blocks, so results are reproducible bit for bit.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InconsistentDimension, NoAscent
from .pointset import PointSet, delone_report

_BLOCK = 256
_TILE = 2_000_000
_GOLDEN = (np.sqrt(5) - 1) / 2


def thread_count():
    """Worker threads for candidate-parallel loops (APERIODICA_THREADS, 0 = auto)."""
    try:
        n = int(os.environ.get("APERIODICA_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class Peak:
    k: tuple
    intensity: float
    amplitude: complex | None = None
    index: tuple | None = None


def _k_order_key(p):
    k = np.asarray(p.k, dtype=float)
    return (round(float(np.linalg.norm(k)), 12), tuple(k))


@dataclass(frozen=True)
class DiffractionSpectrum:
    """Bragg peaks sorted by |k|, then lexicographically."""

    dimension: int
    peaks: tuple = field(default=())
    sample_radius_used: float = float("inf")
    method: str = "empirical"

    def __post_init__(self):
        if self.method not in ("empirical", "analytic", "smoothed"):
            raise ValueError(f"unknown spectrum method {self.method!r}")
        object.__setattr__(self, "peaks", tuple(sorted(self.peaks, key=_k_order_key)))

    def __len__(self):
        return len(self.peaks)

    @property
    def ks(self):
        return np.array([p.k for p in self.peaks], dtype=float).reshape(-1, self.dimension)

    @property
    def intensities(self):
        return np.array([p.intensity for p in self.peaks], dtype=float)

    def strongest(self, count):
        """Sub-spectrum of the ``count`` most intense peaks (ties broken by |k| order)."""
        order = np.argsort(-self.intensities, kind="stable")[:count]
        return DiffractionSpectrum(self.dimension, tuple(self.peaks[i] for i in order),
                                   self.sample_radius_used, self.method)

    def above(self, threshold):
        return DiffractionSpectrum(
            self.dimension, tuple(p for p in self.peaks if p.intensity >= threshold),
            self.sample_radius_used, self.method)


def _neumaier(parts):
    """Compensated sum over axis 1 of a 2D array (one running sum per row)."""
    s = np.zeros(parts.shape[0])
    c = np.zeros(parts.shape[0])
    for j in range(parts.shape[1]):
        v = parts[:, j]
        t = s + v
        c += np.where(np.abs(s) >= np.abs(v), (s - t) + v, (v - t) + s)
        s = t
    return s + c


def _exp_sums_chunk(x, xi):
    p = len(x)
    nblocks = -(-p // _BLOCK)
    re = np.empty((len(xi), nblocks))
    im = np.empty((len(xi), nblocks))
    cols = max(_BLOCK, (_TILE // max(len(xi), 1)) // _BLOCK * _BLOCK)
    for start in range(0, p, cols):
        xs = x[start:start + cols]
        phase = xi @ xs.T
        pad = (-len(xs)) % _BLOCK
        cs = np.cos(phase)
        sn = np.sin(phase)
        if pad:
            cs = np.pad(cs, ((0, 0), (0, pad)))
            sn = np.pad(sn, ((0, 0), (0, pad)))
        b0 = start // _BLOCK
        nb = cs.shape[1] // _BLOCK
        re[:, b0:b0 + nb] = cs.reshape(len(xi), nb, _BLOCK).sum(axis=2)
        im[:, b0:b0 + nb] = -sn.reshape(len(xi), nb, _BLOCK).sum(axis=2)
    return _neumaier(re) + 1j * _neumaier(im)


def exponential_sums(points, xi):
    """``sum_x exp(-i x·xi)`` for each row of ``xi`` (no normalisation)."""
    x = np.asarray(points, dtype=float)
    xi = np.asarray(xi, dtype=float).reshape(-1, x.shape[1])
    if len(xi) == 0:
        return np.zeros(0, dtype=complex)
    if len(x) == 0:
        return np.zeros(len(xi), dtype=complex)
    rows = max(1, min(len(xi), _TILE // max(len(x), 1)))
    chunks = [xi[i:i + rows] for i in range(0, len(xi), rows)]
    workers = min(thread_count(), len(chunks))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: _exp_sums_chunk(x, c), chunks))
    else:
        parts = [_exp_sums_chunk(x, c) for c in chunks]
    return np.concatenate(parts)


def empirical_amplitude(ps, xi):
    """``c_n(xi)``: the exponential sum over the sample divided by ``|B_n|``.

    A single vector gives a complex scalar; rows of vectors give an array.
    """
    arr = np.asarray(xi, dtype=float)
    single = arr.ndim == 0 or (arr.ndim == 1 and arr.size == ps.dimension)
    sums = exponential_sums(ps.points, arr.reshape(-1, ps.dimension))
    # divide the parts separately: complex / float in numpy is not correctly rounded
    out = sums.real / ps.volume + 1j * (sums.imag / ps.volume)
    return complex(out[0]) if single else out


def _candidate_arrays(candidates, dim):
    ks, idx = [], []
    for c in candidates:
        if hasattr(c, "integer_index"):
            ks.append(c.k)
            idx.append(c.integer_index)
        else:
            ks.append(np.asarray(c, dtype=float).reshape(dim))
            idx.append(None)
    return np.asarray(ks, dtype=float).reshape(-1, dim), idx


def empirical_spectrum(ps, candidates, intensity_floor=0.0):
    """Evaluate ``|c_n|^2`` at candidate wave vectors, keeping those above the floor."""
    ks, idx = _candidate_arrays(candidates, ps.dimension)
    amps = empirical_amplitude(ps, ks) if len(ks) else np.zeros(0, dtype=complex)
    peaks = [Peak(tuple(map(float, k)), float(abs(a) ** 2), complex(a), i)
             for k, a, i in zip(ks, amps, idx) if abs(a) ** 2 >= intensity_floor]
    return DiffractionSpectrum(ps.dimension, tuple(peaks), ps.sample_radius, "empirical")


def _intensity(ps, k):
    return abs(empirical_amplitude(ps, np.atleast_2d(k))[0]) ** 2


def _golden_max(f, a, b, tol):
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return (a + b) / 2


def refine_peak(ps, xi0, search_radius):
    """Locate the maximum of ``|c_n|^2`` in the box ``xi0 ± search_radius``.

    A scan at an eighth of the peak width ``2π/n`` brackets the maximum,
    then golden-section search (per axis, by coordinate ascent when N >= 2)
    refines it to ``1e-3 * 2π/n``.  Raises :class:`NoAscent` carrying the best
    point when the maximum sits on the box boundary.
    """
    n = ps.sample_radius
    width = 2 * np.pi / n
    if search_radius < width:
        raise ValueError(f"search_radius must be at least 2π/n = {width:.3g}")
    xi0 = np.asarray(xi0, dtype=float).reshape(ps.dimension)
    lo, hi = xi0 - search_radius, xi0 + search_radius
    tol = 1e-3 * width

    steps = int(min(np.ceil(2 * search_radius / (width / 8)), max(8, 4096 // ps.dimension)))
    axes = [np.linspace(a, b, steps + 1) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, ps.dimension)
    vals = np.abs(empirical_amplitude(ps, grid)) ** 2
    k = grid[np.argmax(vals)].copy()
    h = (hi - lo) / steps

    for _ in range(20):
        prev = k.copy()
        for j in range(ps.dimension):
            def f(t, j=j):
                q = k.copy()
                q[j] = t
                return _intensity(ps, q)
            k[j] = _golden_max(f, max(lo[j], k[j] - h[j]), min(hi[j], k[j] + h[j]), tol)
        if np.max(np.abs(k - prev)) < tol:
            break
    inten = _intensity(ps, k)
    if np.any(k - lo <= 2 * tol) or np.any(hi - k <= 2 * tol):
        raise NoAscent(tuple(k), inten)
    return {"k": tuple(float(v) for v in k), "intensity": float(inten)}


def bragg_scan(ps_sequence, candidates, stability_tol, intensity_floor=0.0):
    """Keep candidates whose intensity is stable across the two largest radii.

    A candidate survives when ``|I_last - I_prev| < stability_tol * max(I_last,
    I_prev)`` and ``I_last >= intensity_floor``; intensities come from the
    largest sample.
    """
    seq = sorted(ps_sequence, key=lambda p: p.sample_radius)
    if len(seq) < 2:
        raise ValueError("bragg_scan needs samples at two or more radii")
    prev, last = seq[-2], seq[-1]
    ks, idx = _candidate_arrays(candidates, last.dimension)
    if len(ks) == 0:
        return DiffractionSpectrum(last.dimension, (), last.sample_radius, "empirical")
    a_prev = empirical_amplitude(prev, ks)
    a_last = empirical_amplitude(last, ks)
    i_prev, i_last = np.abs(a_prev) ** 2, np.abs(a_last) ** 2
    stable = np.abs(i_last - i_prev) < stability_tol * np.maximum(i_last, i_prev)
    keep = stable & (i_last >= intensity_floor)
    peaks = [Peak(tuple(map(float, ks[i])), float(i_last[i]), complex(a_last[i]), idx[i])
             for i in np.flatnonzero(keep)]
    return DiffractionSpectrum(last.dimension, tuple(peaks), last.sample_radius, "empirical")


def smoothed_transform(gamma, k_grid, damping_width=None):
    """Gaussian-damped cosine transform of an autocorrelation approximant.

    ``value(k) = sum_z w_z cos(k·z) exp(-|z|^2 / (2 width^2))``; real because
    the atoms come in ± pairs.  An exploration aid, not a peak detector.
    """
    if damping_width is None:
        damping_width = gamma.diff_cutoff / 4
    if damping_width <= 0 or damping_width > gamma.diff_cutoff:
        raise ValueError("damping_width must lie in (0, diff_cutoff]")
    k = np.asarray(k_grid, dtype=float)
    if k.ndim == 1 and gamma.dimension == 1:
        k = k.reshape(-1, 1)
    if k.ndim != 2 or k.shape[1] != gamma.dimension:
        raise InconsistentDimension(
            f"k grid of shape {k.shape} for a {gamma.dimension}-dimensional measure")
    z = gamma.positions
    r2 = np.einsum("ij,ij->i", z, z)
    with np.errstate(under="ignore"):
        damp = gamma.weights * np.exp(-r2 / (2 * damping_width**2))
    values = np.cos(k @ z.T) @ damp
    return [(tuple(map(float, kk)), float(v)) for kk, v in zip(k, values)]


@dataclass(frozen=True)
class SpectrumComparison:
    matched_pairs: list
    max_rel_intensity_error: float
    unmatched_a: list
    unmatched_b: list

    def to_dict(self):
        return {
            "matched_pairs": self.matched_pairs,
            "max_rel_intensity_error": self.max_rel_intensity_error,
            "unmatched_a": self.unmatched_a,
            "unmatched_b": self.unmatched_b,
        }


def compare_spectra(a, b, k_match_tol):
    """Greedy nearest matching of peaks of ``a`` to peaks of ``b``.

    Peaks of ``b`` (the reference) are visited from most to least intense and
    paired with the nearest unused peak of ``a`` within ``k_match_tol``.  The
    relative error of a pair is ``|I_a - I_b| / I_b``.
    """
    if a.dimension != b.dimension:
        raise DimensionMismatch("spectra differ in dimension")
    ka, kb = a.ks, b.ks
    used = np.zeros(len(ka), dtype=bool)
    pairs, unmatched_b, worst = [], [], 0.0
    for j in np.argsort(-b.intensities, kind="stable"):
        if len(ka):
            dist = np.linalg.norm(ka - kb[j], axis=1)
            dist[used] = np.inf
            i = int(np.argmin(dist))
        if not len(ka) or dist[i] > k_match_tol:
            unmatched_b.append(list(map(float, kb[j])))
            continue
        used[i] = True
        ia, ib = a.peaks[i].intensity, b.peaks[j].intensity
        rel = abs(ia - ib) / ib if ib > 0 else (0.0 if ia == 0 else float("inf"))
        worst = max(worst, rel)
        pairs.append({"k_a": list(map(float, ka[i])), "k_b": list(map(float, kb[j])),
                      "intensity_a": ia, "intensity_b": ib, "rel_error": rel})
    unmatched_a = [list(map(float, ka[i])) for i in np.flatnonzero(~used)]
    return SpectrumComparison(pairs, worst, unmatched_a, unmatched_b)


def peak_gap_bound(spectrum, k_radius, threshold, probe_spacing=None):
    """Largest hole in the set of peak positions with intensity >= threshold.

    In 1D this is the largest gap between consecutive peaks inside
    ``|k| <= k_radius``.  In higher dimension it is twice the covering radius
    of the peak set estimated on a probe grid.
    """
    ks = spectrum.above(threshold).ks
    ks = ks[np.linalg.norm(ks, axis=1) <= k_radius]
    if spectrum.dimension == 1:
        if len(ks) < 2:
            return float("inf")
        return float(np.max(np.diff(np.sort(ks[:, 0]))))
    if len(ks) < 2:
        return float("inf")
    spacing = probe_spacing or k_radius / 200
    rep = delone_report(PointSet(ks, k_radius, dimension=spectrum.dimension), spacing)
    return 2 * rep.covering_radius
