"""Windows (atomic surfaces) in internal space R^M.

Every window knows its Lebesgue volume, an axis-aligned bounding box, a
membership test with a deterministic boundary convention, and the exact
Fourier integral ``∫_W exp(i k·y) dy``.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np
from scipy.special import j1, spherical_jn

from .errors import InvalidWindow, UnsupportedShapeDim

EDGE_TOL = 1e-12


class Window:
    dim: int

    def contains(self, y):
        raise NotImplementedError

    def fourier(self, k_star):
        raise NotImplementedError

    @property
    def volume(self):
        raise NotImplementedError

    def bounding_box(self):
        raise NotImplementedError

    def translated(self, v):
        raise NotImplementedError

    def _as_rows(self, y):
        return np.asarray(y, dtype=float).reshape(-1, self.dim)


@dataclass(frozen=True)
class BoxWindow(Window):
    """Product of intervals; ``half_open[j]`` makes axis j the interval [a, b)."""

    intervals: tuple
    half_open: tuple = None

    def __post_init__(self):
        iv = tuple((float(a), float(b)) for a, b in self.intervals)
        ho = (tuple(bool(h) for h in self.half_open) if self.half_open is not None
              else (True,) * len(iv))
        if len(ho) != len(iv):
            raise InvalidWindow("half_open mask length differs from number of intervals")
        # zero-width axes are allowed: such a window selects only exact hits
        if any(b < a for a, b in iv):
            raise InvalidWindow("box window needs b >= a on every axis")
        object.__setattr__(self, "intervals", iv)
        object.__setattr__(self, "half_open", ho)

    @property
    def dim(self):
        return len(self.intervals)

    @property
    def volume(self):
        return float(np.prod([b - a for a, b in self.intervals]))

    def bounding_box(self):
        lo = np.array([a for a, _ in self.intervals])
        hi = np.array([b for _, b in self.intervals])
        return lo, hi

    def contains(self, y):
        y = self._as_rows(y)
        mask = np.ones(len(y), dtype=bool)
        for j, ((a, b), ho) in enumerate(zip(self.intervals, self.half_open)):
            tol = EDGE_TOL * max(1.0, abs(a), abs(b))
            c = y[:, j]
            mask &= c >= a - tol
            mask &= (c < b - tol) if ho else (c <= b + tol)
        return mask

    def fourier(self, k_star):
        k = np.asarray(k_star, dtype=float).reshape(-1, self.dim)
        out = np.ones(len(k), dtype=complex)
        for j, (a, b) in enumerate(self.intervals):
            w, c = b - a, (a + b) / 2
            # (e^{ibk} - e^{iak}) / (ik) written in a form regular at k = 0
            out *= np.exp(1j * k[:, j] * c) * w * np.sinc(k[:, j] * w / (2 * np.pi))
        return out

    def translated(self, v):
        v = np.asarray(v, dtype=float).reshape(self.dim)
        return BoxWindow(tuple((a + s, b + s) for (a, b), s in zip(self.intervals, v)),
                         self.half_open)


@dataclass(frozen=True)
class BallWindow(Window):
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.radius <= 0:
            raise InvalidWindow("ball radius must be positive")

    @property
    def dim(self):
        return len(self.center)

    @property
    def volume(self):
        from .pointset import ball_volume
        return ball_volume(self.dim, self.radius)

    def bounding_box(self):
        c = np.array(self.center)
        return c - self.radius, c + self.radius

    def contains(self, y):
        y = self._as_rows(y)
        r = np.linalg.norm(y - np.array(self.center), axis=1)
        return r <= self.radius * (1 + EDGE_TOL)

    def fourier(self, k_star):
        k = np.asarray(k_star, dtype=float).reshape(-1, self.dim)
        if self.dim not in (1, 2, 3):
            raise UnsupportedShapeDim(f"ball window Fourier transform for M={self.dim}")
        phase = np.exp(1j * (k @ np.array(self.center)))
        r = self.radius
        x = np.linalg.norm(k, axis=1) * r
        if self.dim == 1:
            shape = 2 * r * np.sinc(x / np.pi)
        elif self.dim == 2:
            safe = np.where(x > 1e-8, x, 1.0)
            shape = np.pi * r**2 * np.where(x > 1e-8, 2 * j1(safe) / safe, 1 - x**2 / 8)
        else:
            safe = np.where(x > 1e-6, x, 1.0)
            ratio = np.where(x > 1e-6, spherical_jn(1, safe) / safe, 1 / 3 - x**2 / 30)
            shape = 4 * np.pi * r**3 * ratio
        return phase * shape

    def translated(self, v):
        v = np.asarray(v, dtype=float).reshape(self.dim)
        return BallWindow(tuple(np.array(self.center) + v), self.radius)


def _phi1(s):
    """(e^{is} - 1) / (is), regular at s = 0."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < 1e-4
    safe = np.where(small, 1.0, s)
    big = (-2 * np.sin(safe / 2) ** 2 + 1j * np.sin(safe)) / (1j * safe)
    z = 1j * s
    series = 1 + z / 2 + z * z / 6 + z**3 / 24
    return np.where(small, series, big)


def _exp_divdiff3(s):
    """Second divided difference of exp at nodes ``i*s`` (rows of s, shape (K, 3))."""
    s = np.sort(np.asarray(s, dtype=float), axis=1)
    s0, s1, s2 = s[:, 0], s[:, 1], s[:, 2]
    spread = s2 - s0
    out = np.empty(len(s), dtype=complex)

    far = spread > 0.1
    if np.any(far):
        a, b, c = s0[far], s1[far], s2[far]
        f01 = np.exp(1j * a) * _phi1(b - a)
        f12 = np.exp(1j * b) * _phi1(c - b)
        out[far] = (f12 - f01) / (1j * (c - a))

    near = ~far
    if np.any(near):
        centre = (s0[near] + s1[near] + s2[near]) / 3
        u = [1j * (v[near] - centre) for v in (s0, s1, s2)]
        # h_m: complete homogeneous symmetric polynomials of the shifted nodes
        h1 = np.ones(len(centre), dtype=complex)
        h2 = h1.copy()
        h3 = h1.copy()
        acc = h3 / 2
        for m in range(1, 18):
            h1 = h1 * u[0]
            h2 = u[1] * h2 + h1
            h3 = u[2] * h3 + h2
            acc = acc + h3 / factorial(m + 2)
        out[near] = np.exp(1j * centre) * acc
    return out


def triangle_fourier(vertices, k_star):
    """Exact ``∫_T exp(i k·y) dy`` for a triangle in R^2."""
    v = np.asarray(vertices, dtype=float).reshape(3, 2)
    k = np.asarray(k_star, dtype=float).reshape(-1, 2)
    e1, e2 = v[1] - v[0], v[2] - v[0]
    area = abs(e1[0] * e2[1] - e1[1] * e2[0]) / 2
    return 2 * area * _exp_divdiff3(k @ v.T)


def _convex_ccw(vertices):
    v = np.asarray(vertices, dtype=float)
    centre = v.mean(axis=0)
    ang = np.arctan2(v[:, 1] - centre[1], v[:, 0] - centre[0])
    v = v[np.argsort(ang, kind="stable")]
    edges = np.roll(v, -1, axis=0) - v
    nxt = np.roll(edges, -1, axis=0)
    cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    if np.any(cross <= 1e-14 * np.max(np.abs(v)) ** 2):
        raise InvalidWindow("polytope vertices are not in strictly convex position")
    return v


@dataclass(frozen=True)
class PolytopeWindow(Window):
    """Convex polytope given by its vertices; M = 1 (interval) or M = 2.

    Boundary points are assigned by a half-open rule: a point on an edge is
    inside iff the edge's outward normal has negative x component, or zero x
    and negative y.  Translates that tile the plane then share no points.
    """

    vertices: tuple

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.shape[1] == 1:
            if len(v) != 2 or v[0, 0] == v[1, 0]:
                raise InvalidWindow("1D polytope needs two distinct endpoints")
            v = np.sort(v, axis=0)
        elif v.shape[1] == 2:
            if len(v) < 3:
                raise InvalidWindow("2D polytope needs at least three vertices")
            v = _convex_ccw(v)
        else:
            raise UnsupportedShapeDim(f"polytope windows support M <= 2, got M={v.shape[1]}")
        object.__setattr__(self, "vertices", tuple(tuple(map(float, p)) for p in v))

    @property
    def dim(self):
        return len(self.vertices[0])

    def _v(self):
        return np.array(self.vertices)

    def _as_box(self):
        v = self._v()
        return BoxWindow(((v[0, 0], v[1, 0]),), (True,))

    @property
    def volume(self):
        if self.dim == 1:
            return self._as_box().volume
        v = self._v()
        x, y = v[:, 0], v[:, 1]
        return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2)

    def bounding_box(self):
        v = self._v()
        return v.min(axis=0), v.max(axis=0)

    def contains(self, y):
        if self.dim == 1:
            return self._as_box().contains(y)
        y = self._as_rows(y)
        v = self._v()
        scale = max(1.0, float(np.max(np.abs(v))))
        mask = np.ones(len(y), dtype=bool)
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            e = b - a
            normal = np.array([e[1], -e[0]]) / np.hypot(*e)  # outward for CCW order
            s = (y - a) @ normal
            owned = normal[0] < -1e-12 or (abs(normal[0]) <= 1e-12 and normal[1] < 0)
            tol = EDGE_TOL * scale
            mask &= (s < -tol) | ((np.abs(s) <= tol) if owned else False)
        return mask

    def fourier(self, k_star):
        if self.dim == 1:
            return self._as_box().fourier(k_star)
        v = self._v()
        k = np.asarray(k_star, dtype=float).reshape(-1, 2)
        out = np.zeros(len(k), dtype=complex)
        for i in range(1, len(v) - 1):
            out += triangle_fourier(v[[0, i, i + 1]], k)
        return out

    def translated(self, t):
        t = np.asarray(t, dtype=float).reshape(self.dim)
        return PolytopeWindow(tuple(map(tuple, self._v() + t)))


@dataclass(frozen=True)
class UnionWindow(Window):
    """Union of windows assumed to overlap only in measure zero."""

    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise InvalidWindow("union of no windows")
        if len({m.dim for m in members}) != 1:
            raise InvalidWindow("union members differ in dimension")
        object.__setattr__(self, "members", members)
        self._check_disjoint()

    def _check_disjoint(self):
        lo, hi = self.bounding_box()
        rng = np.random.default_rng(0)
        y = lo + (hi - lo) * rng.random((20000, self.dim))
        hits = sum(m.contains(y).astype(int) for m in self.members)
        overlap = np.mean(hits > 1) * float(np.prod(hi - lo))
        if overlap > 1e-3 * self.volume:
            raise InvalidWindow("union members overlap in positive measure")

    @property
    def dim(self):
        return self.members[0].dim

    @property
    def volume(self):
        return float(sum(m.volume for m in self.members))

    def bounding_box(self):
        boxes = [m.bounding_box() for m in self.members]
        return (np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0))

    def contains(self, y):
        y = self._as_rows(y)
        mask = np.zeros(len(y), dtype=bool)
        for m in self.members:
            mask |= m.contains(y)
        return mask

    def fourier(self, k_star):
        return sum(m.fourier(k_star) for m in self.members)

    def translated(self, v):
        return UnionWindow(tuple(m.translated(v) for m in self.members))


def window_fourier(w, k_star):
    """``∫_W exp(i k*·y) dy``; equals ``w.volume`` at ``k* = 0``.

    A single vector (or a scalar when M = 1) gives a complex scalar; an array
    of rows gives an array.
    """
    k = np.asarray(k_star, dtype=float)
    single = k.ndim == 0 or (k.ndim == 1 and w.dim != 1)
    if w.dim == 0:
        out = np.ones(1 if single else len(k), dtype=complex)
    else:
        out = w.fourier(k.reshape(-1, w.dim))
    return complex(out[0]) if single else out


def window_from_dict(spec):
    """Build a window from its JSON description."""
    shape = spec.get("shape")
    if shape == "box":
        return BoxWindow(tuple(map(tuple, spec["intervals"])), spec.get("half_open"))
    if shape == "ball":
        return BallWindow(tuple(spec["center"]), float(spec["radius"]))
    if shape == "polytope":
        return PolytopeWindow(tuple(map(tuple, spec["vertices"])))
    if shape == "union":
        return UnionWindow(tuple(window_from_dict(m) for m in spec["members"]))
    raise InvalidWindow(f"unknown window shape {shape!r}")


def window_to_dict(w):
    if isinstance(w, BoxWindow):
        return {"shape": "box", "intervals": [list(iv) for iv in w.intervals],
                "half_open": list(w.half_open)}
    if isinstance(w, BallWindow):
        return {"shape": "ball", "center": list(w.center), "radius": w.radius}
    if isinstance(w, PolytopeWindow):
        return {"shape": "polytope", "vertices": [list(v) for v in w.vertices]}
    if isinstance(w, UnionWindow):
        return {"shape": "union", "members": [window_to_dict(m) for m in w.members]}
    raise TypeError(type(w))
