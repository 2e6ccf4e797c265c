"""Midpoint-type quadrature oracles for window Fourier integrals (about 10^6 nodes each)."""

import numpy as np


def triangle(vertices, k, m=1000):
    """Centroid rule on the m^2 congruent sub-triangles of a triangle."""
    v0, v1, v2 = (np.asarray(v, dtype=float) for v in vertices)
    e1, e2 = v1 - v0, v2 - v0
    area = abs(e1[0] * e2[1] - e1[1] * e2[0]) / 2
    i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    up = i + j <= m - 1
    down = i + j <= m - 2
    s = np.concatenate([(i[up] + 1 / 3) / m, (i[down] + 2 / 3) / m])
    t = np.concatenate([(j[up] + 1 / 3) / m, (j[down] + 2 / 3) / m])
    y = v0 + s[:, None] * e1 + t[:, None] * e2
    return np.exp(1j * (y @ np.asarray(k, dtype=float))).sum() * area / m**2


def box(intervals, k, m=1000):
    axes = [a + (np.arange(m) + 0.5) * (b - a) / m for a, b in intervals]
    cell = np.prod([(b - a) / m for a, b in intervals])
    total = 1.0 + 0j
    # tensor rule factorises
    for ax, kk in zip(axes, k):
        total *= np.exp(1j * kk * ax).sum()
    return total * cell


def ball2(centre, radius, k, m=1000):
    r = (np.arange(m) + 0.5) * radius / m
    th = (np.arange(m) + 0.5) * 2 * np.pi / m
    rr, tt = np.meshgrid(r, th, indexing="ij")
    y = np.stack([centre[0] + rr * np.cos(tt), centre[1] + rr * np.sin(tt)], -1)
    w = rr * (radius / m) * (2 * np.pi / m)
    return (np.exp(1j * (y @ np.asarray(k, dtype=float))) * w).sum()


def ball3(centre, radius, k, m=100):
    r = (np.arange(m) + 0.5) * radius / m
    th = (np.arange(m) + 0.5) * np.pi / m
    ph = (np.arange(m) + 0.5) * 2 * np.pi / m
    rr, tt, pp = np.meshgrid(r, th, ph, indexing="ij")
    y = np.stack([rr * np.sin(tt) * np.cos(pp), rr * np.sin(tt) * np.sin(pp), rr * np.cos(tt)], -1)
    y = y + np.asarray(centre, dtype=float)
    w = rr**2 * np.sin(tt) * (radius / m) * (np.pi / m) * (2 * np.pi / m)
    return (np.exp(1j * (y @ np.asarray(k, dtype=float))) * w).sum()


def ball1(centre, radius, k, m=10**6):
    y = centre[0] - radius + (np.arange(m) + 0.5) * 2 * radius / m
    return np.exp(1j * k[0] * y).sum() * 2 * radius / m
