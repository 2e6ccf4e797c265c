"""Command-line front end.

Every artifact gets a JSON sidecar (``<output>.json``) echoing the full
configuration, the seed and the library version.  Exit status 2 flags a
configuration problem, 3 a computation error raised by the library.
"""

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, io
from .autocorr import autocorrelation, convergence_report
from .cutproject import (PRESET_NAMES, fibonacci_substitution_window, generate_model_set,
                         analytic_diffraction, preset, reciprocal_points, scheme_from_dict)
from .diffraction import compare_spectra, empirical_spectrum
from .errors import AperiodicaError
from .pointset import PointSet, ball_volume, delone_report, meyer_check, statistical_almost_periods
from .substitution import (FIBONACCI, PERIOD_DOUBLING, SILVER_MEAN,
                           generate_substitution_points, rule_from_dict)
from .windows import BoxWindow

COMMANDS = ("generate", "substitute", "analyze", "autocorr", "diffract-empirical",
            "diffract-analytic", "almost-periods", "compare")
RULE_PRESETS = {"fibonacci": FIBONACCI, "period_doubling": PERIOD_DOUBLING,
                "silver_mean": SILVER_MEAN}


class ConfigError(ValueError):
    """Bad user configuration; the message names the offending field."""


@dataclass
class RunConfig:
    command: str
    output: str | None = None
    inputs: dict = field(default_factory=dict)
    knobs: dict = field(default_factory=dict)
    format: str = "csv"
    seed: int | None = None

    def echo(self):
        return asdict(self)


def _positive(name, value):
    if value is None or not value > 0:
        raise ConfigError(f"--{name}: must be positive (got {value})")
    return value


def _load_scheme(cfg):
    name, path = cfg.knobs.get("preset"), cfg.inputs.get("config")
    if name and path:
        raise ConfigError("--preset/--config: give only one of them")
    if path:
        try:
            spec = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"--config: cannot read {path}: {exc}") from None
        for key in ("physical_dim", "internal_dim", "basis"):
            if key not in spec:
                raise ConfigError(f"--config: missing field {key!r}")
        cps, w = scheme_from_dict(spec)
        if w is None:
            raise ConfigError("--config: missing field 'window'")
        return cps, w
    if not name:
        raise ConfigError("--preset: required (or --config)")
    try:
        return preset(name)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"--preset: {exc}") from None


def _read_points(path, flag):
    try:
        return io.read_points(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"--{flag}: {exc}") from None


def _sidecar(cfg, extra=None):
    out = {"config": cfg.echo(), "seed": cfg.seed, "version": __version__}
    if extra:
        out.update(extra)
    return out


def _write_with_sidecar(cfg, writer, extra=None):
    if not cfg.output:
        raise ConfigError("-o/--output: required")
    writer(cfg.output)
    io.write_json(cfg.output + ".json", _sidecar(cfg, extra))


def _cmd_generate(cfg):
    k = cfg.knobs
    radius = _positive("radius", k.get("radius"))
    if k.get("random_poisson") is not None:
        density = _positive("random-poisson", k["random_poisson"])
        dim = int(k.get("dim") or 1)
        if cfg.seed is None:
            cfg.seed = 0
        rng = np.random.default_rng(cfg.seed)
        count = rng.poisson(density * ball_volume(dim, radius))
        # uniform in the ball: direction from a normal vector, radius from r^(1/dim)
        g = rng.standard_normal((count, dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        x = g * (radius * rng.random(count) ** (1 / dim))[:, None]
        ps = PointSet(x, radius, label=f"poisson:{density}:seed={cfg.seed}", dimension=dim)
    else:
        cps, w = _load_scheme(cfg)
        if k.get("window") == "substitution":
            if k.get("preset") != "fibonacci":
                raise ConfigError("--window: 'substitution' is defined for --preset fibonacci")
            w = fibonacci_substitution_window()
        ps = generate_model_set(cps, w, radius, label=k.get("preset") or "config")
    _write_with_sidecar(cfg, lambda p: io.write_points(p, ps),
                        {"count": len(ps), "density": ps.density})


def _cmd_substitute(cfg):
    k = cfg.knobs
    if cfg.inputs.get("rule"):
        try:
            rule = rule_from_dict(json.loads(Path(cfg.inputs["rule"]).read_text()))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"--rule: {exc}") from None
    else:
        name = k.get("preset") or "fibonacci"
        if name not in RULE_PRESETS:
            raise ConfigError(f"--preset: unknown substitution {name!r}")
        rule = RULE_PRESETS[name]
    seed_symbol = k.get("seed_symbol") or rule.alphabet[0]
    if seed_symbol not in rule.alphabet:
        raise ConfigError(f"--seed-symbol: {seed_symbol!r} not in alphabet")
    if k.get("iterations") is None or k["iterations"] < 0:
        raise ConfigError("--iterations: must be a nonnegative integer")
    cset = generate_substitution_points(rule, seed_symbol, k["iterations"], k.get("origin") or 0.0)
    _write_with_sidecar(cfg, lambda p: io.write_points(p, cset.points, cset.colours),
                        {"count": len(cset)})


def _cmd_analyze(cfg):
    ps = _read_points(cfg.inputs.get("input"), "input")
    k = cfg.knobs
    report = {"delone": delone_report(ps, _positive("probe-spacing", k.get("probe_spacing"))).to_dict()}
    if k.get("cutoff"):
        report["meyer"] = meyer_check(ps, k["cutoff"], k.get("min_gap"), k.get("f_max") or 64).to_dict()
    _write_with_sidecar(cfg, lambda p: io.write_json(p, report))


def _cmd_autocorr(cfg):
    ps = _read_points(cfg.inputs.get("input"), "input")
    k = cfg.knobs
    cutoff = _positive("cutoff", k.get("cutoff"))
    gamma = autocorrelation(ps, cutoff, k.get("cluster_tol") or 1e-6, region=k.get("region") or "ball")
    extra = io.measure_sidecar(gamma)
    if cfg.inputs.get("large"):
        big = _read_points(cfg.inputs["large"], "large")
        extra["convergence_report"] = convergence_report(ps, big, cutoff, gamma.cluster_tol)
    if cfg.format == "json":
        writer = lambda p: io.write_json(p, {"positions": gamma.positions, "weights": gamma.weights,
                                             **io.measure_sidecar(gamma)})
    else:
        writer = lambda p: io.write_measure(p, gamma)
    _write_with_sidecar(cfg, writer, extra)


def _write_spectrum(cfg, spec, extra=None):
    if cfg.format == "json":
        writer = lambda p: io.write_json(p, io.spectrum_to_json(spec))
    else:
        writer = lambda p: io.write_spectrum(p, spec)
    _write_with_sidecar(cfg, writer, {"peaks": len(spec), "method": spec.method,
                                      "sample_radius_used": spec.sample_radius_used, **(extra or {})})


def _cmd_diffract_empirical(cfg):
    ps = _read_points(cfg.inputs.get("input"), "input")
    k = cfg.knobs
    if cfg.inputs.get("candidates"):
        try:
            cands = io.read_spectrum(cfg.inputs["candidates"]).ks
        except (OSError, ValueError) as exc:
            raise ConfigError(f"--candidates: {exc}") from None
    else:
        cps, _ = _load_scheme(cfg)
        if cps.physical_dim != ps.dimension:
            raise ConfigError("--preset: scheme dimension differs from the point set")
        cands = reciprocal_points(cps, _positive("k-radius", k.get("k_radius")),
                                  int(k.get("index_bound") or 40), k.get("k_star_radius"))
    spec = empirical_spectrum(ps, cands, k.get("floor") or 0.0)
    _write_spectrum(cfg, spec)


def _cmd_diffract_analytic(cfg):
    cps, w = _load_scheme(cfg)
    k = cfg.knobs
    spec = analytic_diffraction(cps, w, _positive("k-radius", k.get("k_radius")),
                                int(k.get("index_bound") or 40), k.get("floor") or 0.0,
                                k.get("k_star_radius"))
    _write_spectrum(cfg, spec, {"A_0": (cps.haar_scale * w.volume) ** 2})


def _cmd_almost_periods(cfg):
    ps = _read_points(cfg.inputs.get("input"), "input")
    k = cfg.knobs
    eps = _positive("eps", k.get("eps"))
    max_shift = _positive("max-shift", k.get("max_shift"))
    if cfg.inputs.get("candidates"):
        cands = _read_points(cfg.inputs["candidates"], "candidates").points
    else:
        cps, _ = _load_scheme(cfg)
        s = _positive("star-max", k.get("star_max"))
        box = BoxWindow(tuple((-s, s) for _ in range(cps.internal_dim)))
        cands = generate_model_set(cps, box, max_shift).points
    cands = cands[np.linalg.norm(cands, axis=1) <= max_shift]
    periods = statistical_almost_periods(ps, eps, cands, k.get("guard"))
    report = {"eps": eps, "candidates": len(cands),
              "periods": [list(map(float, t)) for t in periods]}
    _write_with_sidecar(cfg, lambda p: io.write_json(p, report))


def _cmd_compare(cfg):
    try:
        a = io.read_spectrum(cfg.inputs["a"])
        b = io.read_spectrum(cfg.inputs["b"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"--a/--b: {exc}") from None
    top = cfg.knobs.get("top")
    if top:
        b = b.strongest(int(top))
    report = compare_spectra(a, b, _positive("ktol", cfg.knobs.get("ktol"))).to_dict()
    _write_with_sidecar(cfg, lambda p: io.write_json(p, report))


HANDLERS = {
    "generate": _cmd_generate,
    "substitute": _cmd_substitute,
    "analyze": _cmd_analyze,
    "autocorr": _cmd_autocorr,
    "diffract-empirical": _cmd_diffract_empirical,
    "diffract-analytic": _cmd_diffract_analytic,
    "almost-periods": _cmd_almost_periods,
    "compare": _cmd_compare,
}


def run(cfg):
    """Execute one command; returns the process exit status."""
    try:
        if cfg.command not in HANDLERS:
            raise ConfigError(f"command: unknown {cfg.command!r}")
        if cfg.format not in ("csv", "json"):
            raise ConfigError(f"--format: must be csv or json (got {cfg.format!r})")
        HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"aperiodica: error: {exc}", file=sys.stderr)
        return 2
    except AperiodicaError as exc:
        print(f"aperiodica: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


def build_parser():
    epilog = ("presets: " + ", ".join(PRESET_NAMES)
              + " (lattice:a takes the spacing, e.g. lattice:0.7); substitution presets: "
              + ", ".join(RULE_PRESETS) + ". APERIODICA_THREADS caps worker threads (0 = auto).")
    parser = argparse.ArgumentParser(prog="aperiodica", description=__doc__.splitlines()[0],
                                     epilog=epilog)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, inp=True):
        if inp:
            p.add_argument("-i", "--input", required=True, help="point file")
        p.add_argument("-o", "--output", required=True)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--seed", type=int)

    def scheme_args(p):
        p.add_argument("--preset", help="scheme preset: " + ", ".join(PRESET_NAMES))
        p.add_argument("--config", help="scheme config JSON")

    p = sub.add_parser("generate", help="generate a model set or a Poisson control sample",
                       epilog=epilog)
    common(p, inp=False)
    scheme_args(p)
    p.add_argument("--radius", type=float, required=True)
    p.add_argument("--window", choices=("default", "substitution"), default="default")
    p.add_argument("--random-poisson", type=float, metavar="DENSITY")
    p.add_argument("--dim", type=int, default=1)

    p = sub.add_parser("substitute", help="points from a primitive substitution")
    common(p, inp=False)
    p.add_argument("--rule", help="rule config JSON")
    p.add_argument("--preset", help="substitution preset: " + ", ".join(RULE_PRESETS))
    p.add_argument("--seed-symbol")
    p.add_argument("--iterations", type=int, required=True)
    p.add_argument("--origin", type=float, default=0.0)

    p = sub.add_parser("analyze", help="Delone constants and Meyer check")
    common(p)
    p.add_argument("--probe-spacing", type=float, default=0.05)
    p.add_argument("--cutoff", type=float)
    p.add_argument("--min-gap", type=float)
    p.add_argument("--f-max", type=int, default=64)

    p = sub.add_parser("autocorr", help="autocorrelation (Patterson) approximant")
    common(p)
    p.add_argument("--cutoff", type=float, required=True)
    p.add_argument("--cluster-tol", type=float, default=1e-6)
    p.add_argument("--region", choices=("ball", "box"), default="ball")
    p.add_argument("--large", help="larger sample of the same set for a convergence report")

    p = sub.add_parser("diffract-empirical", help="exponential-sum intensities at candidates")
    common(p)
    scheme_args(p)
    p.add_argument("--candidates", help="spectrum CSV whose k columns are the candidates")
    p.add_argument("--k-radius", type=float)
    p.add_argument("--k-star-radius", type=float)
    p.add_argument("--index-bound", type=int, default=40)
    p.add_argument("--floor", type=float, default=0.0)

    p = sub.add_parser("diffract-analytic", help="closed-form model-set spectrum")
    common(p, inp=False)
    scheme_args(p)
    p.add_argument("--k-radius", type=float, required=True)
    p.add_argument("--k-star-radius", type=float)
    p.add_argument("--index-bound", type=int, default=40)
    p.add_argument("--floor", type=float, default=0.0)

    p = sub.add_parser("almost-periods", help="statistical almost periods among candidates")
    common(p)
    scheme_args(p)
    p.add_argument("--candidates", help="point file of candidate translations")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--max-shift", type=float, required=True)
    p.add_argument("--star-max", type=float)
    p.add_argument("--guard", type=float)

    p = sub.add_parser("compare", help="match two spectra and report intensity errors")
    common(p, inp=False)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--ktol", type=float, required=True)
    p.add_argument("--top", type=int, help="only the N strongest peaks of --b")
    return parser


_INPUT_KEYS = ("input", "config", "rule", "large", "candidates", "a", "b")


def config_from_args(ns):
    d = vars(ns).copy()
    command = d.pop("command")
    output = d.pop("output", None)
    fmt = d.pop("format", "csv")
    seed = d.pop("seed", None)
    inputs = {k: d.pop(k) for k in _INPUT_KEYS if k in d and d[k] is not None}
    for k in _INPUT_KEYS:
        d.pop(k, None)
    return RunConfig(command, output, inputs, d, fmt, seed)


def main(argv=None):
    args = build_parser().parse_args(argv)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
