"""Text formats for point sets, measures and spectra.

Floats are written with 17 significant digits, which round-trips IEEE
doubles exactly.
"""

import csv
import json
import re
from pathlib import Path

import numpy as np

from .autocorr import AtomicMeasure
from .diffraction import DiffractionSpectrum, Peak
from .pointset import PointSet

_HEADER = re.compile(r"#\s*aperiodica points dim=(\d+) radius=(\S+)(?: label=(.*))?$")


class FormatError(ValueError):
    pass


def fmt(x):
    return format(float(x), ".17g")


def write_points(path, ps, colours=None):
    label = "" if ps.label is None else str(ps.label)
    lines = [f"# aperiodica points dim={ps.dimension} radius={fmt(ps.sample_radius)} label={label}"]
    for i, row in enumerate(ps.points):
        fields = [fmt(v) for v in row]
        if colours is not None:
            fields.append(str(colours[i]))
        lines.append(" ".join(fields))
    Path(path).write_text("\n".join(lines) + "\n")


def read_points(path, coloured=False):
    """Read a point file; with ``coloured=True`` returns ``(PointSet, colours)``."""
    text = Path(path).read_text().splitlines()
    if not text:
        raise FormatError(f"{path}: empty file")
    m = _HEADER.match(text[0].strip())
    if not m:
        raise FormatError(f"{path}: missing '# aperiodica points' header")
    dim, radius = int(m.group(1)), float(m.group(2))
    label = m.group(3) or None
    rows, colours = [], []
    for lineno, line in enumerate(text[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        want = dim + (1 if coloured else 0)
        if len(parts) != want:
            raise FormatError(f"{path}:{lineno}: expected {want} fields, got {len(parts)}")
        rows.append([float(v) for v in parts[:dim]])
        if coloured:
            colours.append(parts[dim])
    pts = np.array(rows, dtype=float).reshape(-1, dim)
    if coloured:
        order = np.lexsort(pts.T[::-1]) if len(pts) else np.zeros(0, dtype=int)
        colours = [colours[i] for i in order]
    ps = PointSet(pts, radius, label=label, dimension=dim)
    return (ps, tuple(colours)) if coloured else ps


def write_measure(path, gamma):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"z_{i + 1}" for i in range(gamma.dimension)] + ["weight"])
        for z, wt in zip(gamma.positions, gamma.weights):
            w.writerow([fmt(v) for v in z] + [fmt(wt)])


def measure_sidecar(gamma):
    return {"normalization_volume": gamma.normalization_volume,
            "diff_cutoff": gamma.diff_cutoff, "cluster_tol": gamma.cluster_tol}


def read_measure(path, sidecar=None):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    dim = len(header) - 1
    if header[-1] != "weight" or any(h != f"z_{i + 1}" for i, h in enumerate(header[:-1])):
        raise FormatError(f"{path}: unexpected measure header {header}")
    data = np.array([[float(v) for v in r] for r in body], dtype=float).reshape(-1, dim + 1)
    meta = sidecar or {}
    return AtomicMeasure(dim, data[:, :dim], data[:, dim],
                         float(meta.get("normalization_volume", float("nan"))),
                         float(meta.get("diff_cutoff", float("inf"))),
                         float(meta.get("cluster_tol", 1e-6)))


def write_spectrum(path, spec):
    idx_len = max((len(p.index) for p in spec.peaks if p.index is not None), default=0)
    header = ([f"k_{i + 1}" for i in range(spec.dimension)] + ["intensity", "amp_re", "amp_im"]
              + [f"idx_{i + 1}" for i in range(idx_len)])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for p in spec.peaks:
            amp = p.amplitude if p.amplitude is not None else complex("nan")
            idx = list(p.index) if p.index is not None else [""] * idx_len
            w.writerow([fmt(v) for v in p.k] + [fmt(p.intensity), fmt(amp.real), fmt(amp.imag)]
                       + [str(i) for i in idx])


def read_spectrum(path, method="empirical", sample_radius_used=float("inf")):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError(f"{path}: empty spectrum file")
    header = rows[0]
    try:
        n = header.index("intensity")
    except ValueError:
        raise FormatError(f"{path}: spectrum header lacks an intensity column") from None
    if header[n + 1:n + 3] != ["amp_re", "amp_im"]:
        raise FormatError(f"{path}: expected amp_re, amp_im after intensity")
    peaks = []
    for r in rows[1:]:
        k = tuple(float(v) for v in r[:n])
        amp = complex(float(r[n + 1]), float(r[n + 2]))
        idx = tuple(int(v) for v in r[n + 3:]) if len(r) > n + 3 and r[n + 3] != "" else None
        peaks.append(Peak(k, float(r[n]), None if np.isnan(amp.real) else amp, idx))
    return DiffractionSpectrum(n, tuple(peaks), sample_radius_used, method)


def spectrum_to_json(spec):
    return {
        "dimension": spec.dimension,
        "method": spec.method,
        "sample_radius_used": spec.sample_radius_used,
        "peaks": [{"k": list(p.k), "intensity": p.intensity,
                   "amp_re": None if p.amplitude is None else p.amplitude.real,
                   "amp_im": None if p.amplitude is None else p.amplitude.imag,
                   "index": None if p.index is None else list(p.index)} for p in spec.peaks],
    }


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, Path):
        return str(o)
    raise TypeError(f"cannot serialise {type(o).__name__}")
