"""Cut-and-project schemes over R^N with Euclidean internal space R^M.

The lattice is ``B @ Z^(N+M)`` where the columns of the square matrix ``B``
are basis vectors; the first N rows are physical components and the last M
rows internal ones.  Characters are ``exp(i k·x)``, so the dual lattice is
``2π B^{-T} Z^(N+M)``.  Internal Lebesgue measure is scaled by
``haar_scale = 1/|det B|`` so a fundamental domain of the lattice has
measure one; with that choice ``haar_scale * |W|`` is the density of the
model set and the Bragg amplitude at ``k`` is ``haar_scale * ∫_W e^{i k*·y} dy``.
"""

import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .diffraction import DiffractionSpectrum, Peak
from .errors import (DensenessSuspect, EnumerationTooLarge, ProjectionNotInjective,
                     SingularBasis)
from .pointset import BOUNDARY_SLACK, PointSet
from .windows import BoxWindow, PolytopeWindow, window_fourier

TAU = (1 + 5**0.5) / 2
SILVER = 1 + 2**0.5
PHYS_ZERO_TOL = 1e-9
DEFAULT_BUDGET = 10**8
_CHUNK_ROWS = 2_000_000


@dataclass(frozen=True, eq=False)
class CutProjectScheme:
    physical_dim: int
    internal_dim: int
    basis: np.ndarray
    haar_scale: float
    injectivity_search_bound: int = 50
    dense_gap: float | None = None

    @property
    def dim(self):
        return self.physical_dim + self.internal_dim

    @property
    def phys_rows(self):
        return self.basis[: self.physical_dim]

    @property
    def int_rows(self):
        return self.basis[self.physical_dim:]

    @property
    def dual_basis(self):
        """Columns span the dual lattice ``2π B^{-T} Z^(N+M)``."""
        return 2 * np.pi * np.linalg.inv(self.basis).T

    def to_dict(self):
        return {"physical_dim": self.physical_dim, "internal_dim": self.internal_dim,
                "basis": self.basis.tolist()}


def _best_subset(block, size):
    """Column subset of ``block`` whose square submatrix is best conditioned."""
    best, best_val = None, 0.0
    for cols in itertools.combinations(range(block.shape[1]), size):
        sub = block[:, cols]
        val = abs(np.linalg.det(sub)) / max(np.prod(np.linalg.norm(sub, axis=0)), 1e-300)
        if val > best_val + 1e-12:
            best, best_val = cols, val
    return best


def fibered_candidates(basis, rows, lo, hi, free_lo, free_hi, budget=DEFAULT_BUDGET):
    """Integer vectors z with ``basis[rows] @ z`` inside the box [lo, hi].

    The remaining (free) coordinates range over the integer box
    [free_lo, free_hi]; for each of them the constrained coordinates are
    solved from the box and widened by one unit.  Yields candidate batches;
    candidates still need filtering against the exact constraints.
    """
    d = basis.shape[1]
    block = basis[rows]
    r = block.shape[0]
    solve = _best_subset(block, r) if r else ()
    if r and solve is None:
        raise SingularBasis("constraint block has no invertible square submatrix")
    free = [j for j in range(d) if j not in solve]
    inv = np.linalg.inv(block[:, solve]) if r else np.zeros((0, 0))
    mid = (np.asarray(lo, float) + np.asarray(hi, float)) / 2
    half = (np.asarray(hi, float) - np.asarray(lo, float)) / 2
    spread = np.abs(inv) @ half if r else np.zeros(0)
    width = np.floor(2 * spread).astype(np.int64) + 3

    free_lo = np.asarray(free_lo, dtype=np.int64)[free]
    free_hi = np.asarray(free_hi, dtype=np.int64)[free]
    free_counts = free_hi - free_lo + 1
    n_free = int(np.prod(free_counts.astype(float)))
    per_fiber = int(np.prod(width.astype(float)))
    if n_free * per_fiber > budget:
        raise EnumerationTooLarge(
            f"{n_free * per_fiber:.3g} lattice candidates exceed the budget {budget:.3g}")
    offsets = (np.stack(np.meshgrid(*[np.arange(w) for w in width], indexing="ij"),
                        axis=-1).reshape(-1, r) if r else np.zeros((1, 0), dtype=np.int64))

    step = max(1, _CHUNK_ROWS // per_fiber)
    for start in range(0, n_free, step):
        flat = np.arange(start, min(start + step, n_free))
        if free:
            zf = np.stack(np.unravel_index(flat, tuple(free_counts)), axis=-1) + free_lo
        else:
            zf = np.zeros((len(flat), 0), dtype=np.int64)
        z = np.zeros((len(zf) * len(offsets), d), dtype=np.int64)
        z[:, free] = np.repeat(zf, len(offsets), axis=0)
        if r:
            centre = (mid[None, :] - zf @ block[:, free].T) @ inv.T
            base = np.floor(centre - spread).astype(np.int64) - 1
            z[:, list(solve)] = (base[:, None, :] + offsets[None, :, :]).reshape(-1, r)
        yield z


def _injectivity_certificate(basis, n, m, bound):
    if m == 0:
        return
    tol = PHYS_ZERO_TOL
    lo, hi = -np.full(n, tol), np.full(n, tol)
    box = np.full(n + m, bound)
    for z in fibered_candidates(basis, slice(0, n), lo, hi, -box, box, budget=10**9):
        phys = z @ basis[:n].T
        ok = (np.max(np.abs(phys), axis=1) < tol) & (np.max(np.abs(z), axis=1) <= bound)
        ok &= np.any(z != 0, axis=1)
        if np.any(ok):
            hits = z[ok]
            norms = np.max(np.abs(hits), axis=1)
            raise ProjectionNotInjective(hits[np.argmin(norms)])


def _denseness_gap(basis, n, m, count=1_000_000, spacing=0.01):
    d = n + m
    b = max(1, int((count ** (1 / d) - 1) // 2))
    grid = np.arange(-b, b + 1)
    z = np.stack(np.meshgrid(*([grid] * d), indexing="ij"), axis=-1).reshape(-1, d)
    y = z @ basis[n:].T
    y = y[np.max(np.abs(y), axis=1) <= 1.0]
    axis = np.arange(-0.5, 0.5 + spacing / 2, spacing)
    probes = np.stack(np.meshgrid(*([axis] * m), indexing="ij"), axis=-1).reshape(-1, m)
    if len(y) == 0:
        return float("inf")
    dist, _ = cKDTree(y).query(probes, k=1)
    return float(np.max(dist))


def new_scheme(basis, physical_dim, internal_dim, injectivity_search_bound=50,
               dense_gap_tol=0.05, check_denseness=True):
    """Validate a lattice basis and build a :class:`CutProjectScheme`.

    Raises ``SingularBasis`` or ``ProjectionNotInjective``; emits a
    ``DensenessSuspect`` warning when internal images of small lattice vectors
    leave a gap larger than ``dense_gap_tol`` in the unit reference box.
    """
    b = np.array(basis, dtype=float)
    n, m = int(physical_dim), int(internal_dim)
    if b.shape != (n + m, n + m):
        raise ValueError(f"basis must be square of size {n + m}, got {b.shape}")
    det = float(np.linalg.det(b))
    if abs(det) <= 1e-12:
        raise SingularBasis(f"|det B| = {abs(det):.3g}")
    _injectivity_certificate(b, n, m, injectivity_search_bound)
    gap = None
    if m and check_denseness:
        gap = _denseness_gap(b, n, m)
        if gap > dense_gap_tol:
            warnings.warn(DensenessSuspect(
                f"internal images leave a gap of {gap:.3g} in the reference box"),
                stacklevel=2)
    b.setflags(write=False)
    return CutProjectScheme(n, m, b, 1.0 / abs(det), injectivity_search_bound, gap)


def star(cps, x_index):
    """Physical and internal projections of the lattice point ``B @ x_index``."""
    v = cps.basis @ np.asarray(x_index, dtype=float).reshape(cps.dim)
    return v[: cps.physical_dim], v[cps.physical_dim:]


def _free_box(cps, phys_radius, lo, hi):
    """Integer bounding box of B^{-1}(B_phys_radius x [lo, hi]) inflated by one."""
    inv = np.linalg.inv(cps.basis)
    n = cps.physical_dim
    mid = (lo + hi) / 2
    half = (hi - lo) / 2
    centre = inv[:, n:] @ mid if cps.internal_dim else np.zeros(cps.dim)
    extent = phys_radius * np.linalg.norm(inv[:, :n], axis=1)
    if cps.internal_dim:
        extent = extent + np.abs(inv[:, n:]) @ half
    return (np.floor(centre - extent).astype(np.int64) - 1,
            np.ceil(centre + extent).astype(np.int64) + 1)


def model_set_indices(cps, w, region_radius, budget=DEFAULT_BUDGET):
    """Integer coordinates of all lattice points selected by the window."""
    n, m = cps.physical_dim, cps.internal_dim
    if m:
        lo, hi = w.bounding_box()
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    else:
        lo = hi = np.zeros(0)
    free_lo, free_hi = _free_box(cps, region_radius, lo, hi)
    if m:
        pad = 1e-9 * max(1.0, float(np.max(np.abs(np.concatenate([lo, hi])))))
        rows, clo, chi = slice(n, n + m), lo - pad, hi + pad
    else:
        rows, clo, chi = slice(0, 0), lo, hi
    found = []
    for z in fibered_candidates(cps.basis, rows, clo, chi, free_lo, free_hi, budget):
        v = z @ cps.basis.T
        keep = np.linalg.norm(v[:, :n], axis=1) <= region_radius + BOUNDARY_SLACK
        if m:
            keep[keep] = w.contains(v[keep, n:])
        found.append(z[keep])
    z = np.concatenate(found) if found else np.zeros((0, cps.dim), dtype=np.int64)
    return np.unique(z, axis=0)


def generate_model_set(cps, w, region_radius, budget=DEFAULT_BUDGET, label=None):
    """``{x in L : x* in W, |x| <= region_radius}`` as a :class:`PointSet`."""
    if region_radius <= 0:
        raise ValueError("region_radius must be positive")
    if w is not None and w.dim != cps.internal_dim:
        raise ValueError("window dimension differs from internal dimension")
    z = model_set_indices(cps, w, region_radius, budget)
    x = (z @ cps.basis.T)[:, : cps.physical_dim]
    return PointSet(x, region_radius, label=label, dimension=cps.physical_dim)


@dataclass(frozen=True)
class ReciprocalPoint:
    k: tuple
    k_star: tuple
    integer_index: tuple


def reciprocal_points(cps, k_radius, index_bound, k_star_radius=None,
                      budget=DEFAULT_BUDGET):
    """Dual-lattice points with ``|k| <= k_radius`` and ``|index|_inf <= index_bound``.

    ``k_star_radius`` optionally also bounds the internal component.  The
    result is sorted by ``|k|`` and then lexicographically.
    """
    n, m, d = cps.physical_dim, cps.internal_dim, cps.dim
    dual = cps.dual_basis
    box = np.full(d, int(index_bound))
    if k_star_radius is not None and m:
        rows = slice(n, d)
        lo, hi = -np.full(m, float(k_star_radius)), np.full(m, float(k_star_radius))
    else:
        rows = slice(0, n)
        lo, hi = -np.full(n, float(k_radius)), np.full(n, float(k_radius))
    out = []
    for z in fibered_candidates(dual, rows, lo, hi, -box, box, budget):
        v = z @ dual.T
        keep = np.max(np.abs(z), axis=1) <= index_bound
        keep &= np.linalg.norm(v[:, :n], axis=1) <= k_radius
        if k_star_radius is not None and m:
            keep &= np.linalg.norm(v[:, n:], axis=1) <= k_star_radius
        out.append(z[keep])
    z = np.unique(np.concatenate(out), axis=0) if out else np.zeros((0, d), dtype=np.int64)
    v = z @ dual.T
    order = np.lexsort(tuple(v[:, :n].T[::-1]) + (np.round(np.linalg.norm(v[:, :n], axis=1), 12),))
    return [ReciprocalPoint(tuple(v[i, :n]), tuple(v[i, n:]), tuple(int(c) for c in z[i]))
            for i in order]


def analytic_diffraction(cps, w, k_radius, index_bound, intensity_floor=0.0,
                         k_star_radius=None):
    """Closed-form Bragg spectrum of the regular model set ``⋏(W)``.

    Amplitude ``haar_scale * ∫_W exp(i k*·y) dy``, intensity its squared
    modulus; peaks below ``intensity_floor`` are dropped.  ``k = 0`` is always
    enumerated, so it is kept whenever ``A_0 >= intensity_floor``.
    """
    pts = reciprocal_points(cps, k_radius, index_bound, k_star_radius)
    if not pts:
        return DiffractionSpectrum(cps.physical_dim, (), float("inf"), "analytic")
    ks = np.array([p.k_star for p in pts]).reshape(len(pts), cps.internal_dim)
    amps = cps.haar_scale * window_fourier(w, ks) if cps.internal_dim else \
        np.full(len(pts), cps.haar_scale, dtype=complex)
    peaks = []
    for p, a in zip(pts, amps):
        inten = abs(a) ** 2
        if inten >= intensity_floor:
            peaks.append(Peak(p.k, inten, complex(a), p.integer_index))
    return DiffractionSpectrum(cps.physical_dim, tuple(peaks), float("inf"), "analytic")


# Presets ------------------------------------------------------------------

PRESET_NAMES = ("fibonacci", "silver_mean", "ammann_beenker", "lattice:a")


def _ammann_beenker_basis():
    j = np.arange(4)
    phys = np.stack([np.cos(j * np.pi / 4), np.sin(j * np.pi / 4)])
    internal = np.stack([np.cos(3 * j * np.pi / 4), np.sin(3 * j * np.pi / 4)])
    return np.vstack([phys, internal])


def ammann_beenker_window():
    """Regular octagon of edge 1: the internal projection of the centred unit 4-cube."""
    ang = np.pi / 8 + np.arange(8) * np.pi / 4
    r = 0.5 / np.sin(np.pi / 8)
    return PolytopeWindow(tuple(zip(r * np.cos(ang), r * np.sin(ang))))


def fibonacci_substitution_window():
    """Window whose Fibonacci model set has the substitution tile lengths (1, 1/τ).

    Scaling by 1/τ in physical space multiplies internal coordinates by -τ, so
    the default window [-1, τ-1) becomes [-1, τ) (orientation made half-open).
    """
    return BoxWindow(((-1.0, TAU),), (True,))


def preset(name):
    """Return ``(scheme, window)`` for a named preset."""
    if name == "fibonacci":
        cps = new_scheme([[1.0, TAU], [1.0, 1 - TAU]], 1, 1)
        return cps, BoxWindow(((-1.0, TAU - 1),), (True,))
    if name == "silver_mean":
        cps = new_scheme([[1.0, SILVER], [1.0, 2 - SILVER]], 1, 1)
        return cps, BoxWindow(((-1.0, SILVER - 2),), (True,))
    if name == "ammann_beenker":
        return new_scheme(_ammann_beenker_basis(), 2, 2), ammann_beenker_window()
    if name.startswith("lattice:"):
        a = float(name.split(":", 1)[1])
        if a <= 0:
            raise ValueError("lattice spacing must be positive")
        return new_scheme([[a]], 1, 0), BoxWindow(())
    raise KeyError(f"unknown preset {name!r}; known: {', '.join(PRESET_NAMES)}")


def scheme_from_dict(spec):
    """Scheme and window from the JSON config layout (basis row-major)."""
    from .windows import window_from_dict

    n, m = int(spec["physical_dim"]), int(spec["internal_dim"])
    cps = new_scheme(spec["basis"], n, m)
    w = window_from_dict(spec["window"]) if "window" in spec else None
    if w is None and m == 0:
        w = BoxWindow(())
    return cps, w
