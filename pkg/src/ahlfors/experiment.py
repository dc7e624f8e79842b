"""Multi-level weight experiments driven by a YAML config.

A config names an ambient space, one or more subsets ``F_i`` and a grid of
exponents.  Each refinement level is generated, fitted, and the sampled
A_p suprema of the distance-power weights are recorded; verdicts come from
the growth of those suprema across levels.

Config precedence: command-line flags override keys from the config file,
which override the defaults of :class:`ExperimentConfig`.
"""

from __future__ import annotations

import copy
import hashlib
import json
import platform
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy
import yaml

from .dimension import ahlfors_fit
from .fractals import generate, spec_from_dict
from .io import write_json, write_table
from .space import distance_to_set
from .weights import _power, ap_constant_estimate, build_neighborhoods, classify_growth, theoretical_range

__all__ = [
    "ConfigError",
    "ResourceLimitError",
    "ExperimentConfig",
    "LevelResult",
    "ExperimentReport",
    "load_config",
    "run_experiment",
    "emit_report",
    "in_range",
]

__version__ = "0.1.0"

DEFAULT_ATOM_CAP = 20_000


class ConfigError(ValueError):
    pass


class ResourceLimitError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    """Validated experiment settings.

    YAML layout::

        name: flagship
        space: {kind: gasket}
        subsets: [{kind: triangle-boundary}]
        levels: [5, 6, 7]
        p: [1]
        gamma: [0.25, 0.5, 0.75]     # or beta: [...]
        alpha: 1.584962500721156     # optional; fitted when absent
        s: [1.0]                     # optional, one per subset
        sampler: {balls: 500, seed: 0, rmin_cells: 2.0, rmax: null}
        thresholds: {stable: 1.5, divergent: 2.0}
        atom_cap: 20000
        out: results/flagship

    Space and subset specs may omit their size parameter; it is then tied
    to the level (gasket and Cantor ``level``, grids ``n = 2**level``,
    triangle boundary ``segments = 2**level``).
    """

    levels: list[int]
    seed: int
    name: str = "experiment"
    space: dict = field(default_factory=lambda: {"kind": "gasket"})
    subsets: list[dict] = field(default_factory=lambda: [{"kind": "triangle-boundary"}])
    p: list[float] = field(default_factory=lambda: [1.0])
    beta: list[float] = field(default_factory=list)
    gamma: list[float] = field(default_factory=list)
    alpha: float | None = None
    s: list[float] | None = None
    balls: int = 500
    rmin_cells: float = 2.0
    rmax: float | None = None
    stable: float = 1.5
    divergent: float = 2.0
    atom_cap: int = DEFAULT_ATOM_CAP
    threads: int = 1
    out: str | None = None

    def __post_init__(self):
        self.levels = [int(v) for v in self.levels]
        if not self.levels:
            raise ConfigError("levels must be nonempty")
        if any(b <= a for a, b in zip(self.levels, self.levels[1:])):
            raise ConfigError("levels must be strictly ascending")
        self.p = [float(v) for v in self.p]
        if not self.p or any(v < 1 for v in self.p):
            raise ConfigError("p values must be >= 1")
        self.beta = [float(v) for v in self.beta]
        self.gamma = [float(v) for v in self.gamma]
        if self.beta and self.gamma:
            raise ConfigError("give either beta or gamma, not both")
        if not self.subsets:
            raise ConfigError("at least one subset is required")
        if self.s is not None and len(self.s) != len(self.subsets):
            raise ConfigError("s needs one value per subset")
        if not (self.stable > 1 and self.divergent > 1):
            raise ConfigError("thresholds must exceed 1")
        if self.divergent < self.stable:
            raise ConfigError("divergent threshold below stable threshold")
        if self.balls < 10:
            raise ConfigError("need at least 10 balls")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        self.seed = int(self.seed)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = copy.deepcopy(d or {})
        sampler = d.pop("sampler", {}) or {}
        thresholds = d.pop("thresholds", {}) or {}
        known = set(cls.__dataclass_fields__)
        flat = {**d, **sampler, **thresholds}
        unknown = set(flat) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("levels", "seed"):
            if key not in flat or flat[key] is None:
                raise ConfigError(f"config is missing {key!r}")
        try:
            return cls(**flat)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form, ignoring output location and threads."""
        d = self.to_dict()
        d.pop("out")
        d.pop("threads")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def with_overrides(self, **kw) -> "ExperimentConfig":
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return ExperimentConfig(**d)

    @property
    def mode(self) -> str:
        return "gamma" if self.gamma else "beta"

    @property
    def grid(self) -> list[float]:
        return self.gamma if self.gamma else self.beta


def load_config(path, **overrides) -> ExperimentConfig:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    raw = dict(raw or {})
    for k, v in overrides.items():
        if v is not None:
            raw[k] = v
    if "seed" in overrides and overrides["seed"] is not None:
        raw.setdefault("sampler", {})
        raw["sampler"] = {**(raw["sampler"] or {}), "seed": overrides["seed"]}
        raw.pop("seed")
    return ExperimentConfig.from_dict(raw)


_LEVEL_KEYS = {
    "gasket": ("level", lambda n: n),
    "cantor": ("level", lambda n: n),
    "triangle-boundary": ("segments", lambda n: 2 ** n),
    "square-grid": ("n", lambda n: 2 ** n),
    "interval-grid": ("n", lambda n: 2 ** n),
}


def _at_level(spec: dict, level: int) -> dict:
    spec = dict(spec)
    kind = spec.get("kind")
    if kind == "union":
        spec["members"] = [_at_level(m, level) for m in spec["members"]]
    elif kind in _LEVEL_KEYS:
        key, f = _LEVEL_KEYS[kind]
        spec.setdefault(key, f(level))
    return spec


def in_range(beta: float, interval: tuple[float, float]) -> bool:
    """Membership in the theoretical exponent range (``0`` always qualifies)."""
    return beta == 0 or interval[0] < beta < interval[1]


@dataclass
class LevelResult:
    level: int
    atoms: int
    alpha_hat: float
    constant: float
    radius_range: tuple
    alpha: float
    s: list[float]
    kappas: list[float] | None
    rows: list[dict]


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    levels: list[LevelResult]
    verdicts: list[dict]
    provenance: dict

    @property
    def passed(self) -> bool:
        return all(v["ok"] for v in self.verdicts)

    def supremum(self, label: float, level: int, p: float) -> float:
        for lv in self.levels:
            if lv.level == level:
                for r in lv.rows:
                    if r["value"] == label and r["p"] == p:
                        return r["supremum"]
        raise KeyError((label, level, p))


def _run_level(cfg: ExperimentConfig, level: int) -> LevelResult:
    try:
        spec = spec_from_dict(_at_level(cfg.space, level))
        sub_specs = [spec_from_dict(_at_level(s, level)) for s in cfg.subsets]
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad fractal spec: {exc}") from None
    gen = generate(spec)
    if len(gen) > cfg.atom_cap:
        raise ResourceLimitError(f"level {level}: {len(gen)} atoms exceeds the cap of {cfg.atom_cap}")
    space = gen.space()
    est = ahlfors_fit(space, seed=cfg.seed)
    alpha = est.exponent if cfg.alpha is None else float(cfg.alpha)
    subs = [generate(s) for s in sub_specs]
    if cfg.s is not None:
        s_vals = [float(v) for v in cfg.s]
    else:
        s_vals = [ahlfors_fit(g.space(), seed=cfg.seed).exponent for g in subs]
    n = len(space)
    dists = [np.atleast_1d(distance_to_set(space, np.arange(n), g.subset())) for g in subs]
    kappas = None
    if len(subs) > 1:
        nb = build_neighborhoods(subs, alpha, est.constant, declared=[{"s": s} for s in s_vals], seed=cfg.seed)
        kappas = nb.kappas
    lo = cfg.rmin_cells * space.cell
    hi = space.diameter if cfg.rmax is None else float(cfg.rmax)
    rows = []
    for value in cfg.grid:
        betas = [(s - alpha) * value for s in s_vals] if cfg.mode == "gamma" else [value] * len(subs)
        if kappas is None:
            w = _power(dists[0], betas[0])
        else:
            w = np.ones(n)
            for d, b, k in zip(dists, betas, kappas):
                inside = d < k
                w[inside] = _power(d[inside], b)
        reps = ap_constant_estimate(space, w, cfg.p, cfg.balls, cfg.seed, (lo, hi))
        for rep in reps:
            rows.append({
                "level": level, "value": value, "betas": betas, "p": rep.p, "atoms": n, "balls": rep.balls,
                "supremum": rep.supremum, "q50": rep.quantiles[50], "q90": rep.quantiles[90],
                "q99": rep.quantiles[99], "excluded": rep.excluded_atoms, "products": rep.products,
            })
    return LevelResult(level, n, est.exponent, est.constant, est.radius_range, alpha, s_vals, kappas, rows)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run every level, then classify each (exponent, p) row.

    A row is expected stable when its exponents lie in the theoretical
    range for every subset (computed at the finest level's ``alpha`` and
    ``s_i``), divergent otherwise.  The report passes when every row
    meets its expectation.

    Raises
    ------
    ResourceLimitError
        When a level exceeds the atom cap.
    ConfigError
        For malformed fractal specs.
    """
    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as ex:
            levels = list(ex.map(lambda L: _run_level(config, L), config.levels))
    else:
        levels = [_run_level(config, L) for L in config.levels]
    finest = levels[-1]
    verdicts = []
    for value in config.grid:
        for p in config.p:
            sups = [next(r["supremum"] for r in lv.rows if r["value"] == value and r["p"] == p) for lv in levels]
            verdict, growth = classify_growth(sups, config.stable, config.divergent)
            betas = next(r["betas"] for r in finest.rows if r["value"] == value)
            ranges = [theoretical_range(finest.alpha, s, p) for s in finest.s]
            inside = all(in_range(b, iv) for b, iv in zip(betas, ranges))
            expected = "stable" if inside else "divergent"
            verdicts.append({
                "value": value, "p": p, "in_range": inside, "expected": expected, "verdict": verdict,
                "suprema": sups, "growth": growth, "ok": verdict == expected,
            })
    provenance = {
        "config_sha256": config.digest(),
        "package": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }
    return ExperimentReport(config, levels, verdicts, provenance)


def _betas_text(betas) -> str:
    return ";".join(repr(float(b)) for b in betas)


def emit_report(report: ExperimentReport, out=None, formats=("txt", "csv", "json")) -> list[Path]:
    """Write ``summary.txt``, ``suprema.csv``, ``verdicts.csv``,
    ``levels.csv`` and ``report.json`` under ``out``.

    Output contains no timestamps or absolute paths, so identical configs
    and seeds give identical bytes.
    """
    cfg = report.config
    out = Path(out if out is not None else (cfg.out or "."))
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from None
    mode = cfg.mode
    written = []
    rows = [r for lv in report.levels for r in lv.rows]
    if "csv" in formats:
        written.append(write_table(
            out / "suprema.csv",
            ["level", mode, "betas", "p", "atoms", "balls", "supremum", "q50", "q90", "q99", "excluded"],
            ([r["level"], r["value"], _betas_text(r["betas"]), r["p"], r["atoms"], r["balls"], r["supremum"],
              r["q50"], r["q90"], r["q99"], r["excluded"]] for r in rows)))
        written.append(write_table(
            out / "verdicts.csv", [mode, "p", "in_range", "expected", "verdict", "suprema", "growth", "ok"],
            ([v["value"], v["p"], v["in_range"], v["expected"], v["verdict"], _betas_text(v["suprema"]),
              _betas_text(v["growth"]), v["ok"]] for v in report.verdicts)))
        written.append(write_table(
            out / "levels.csv", ["level", "atoms", "alpha_hat", "constant", "rmin", "rmax", "alpha", "s", "kappas"],
            ([lv.level, lv.atoms, lv.alpha_hat, lv.constant, lv.radius_range[0], lv.radius_range[1], lv.alpha,
              _betas_text(lv.s), "" if lv.kappas is None else _betas_text(lv.kappas)] for lv in report.levels)))
    if "json" in formats:
        doc = {
            "config": {k: v for k, v in cfg.to_dict().items() if k not in ("out", "threads")},
            "provenance": report.provenance,
            "levels": [{k: v for k, v in asdict(lv).items() if k != "rows"} for lv in report.levels],
            "rows": [{k: v for k, v in r.items() if k != "products"} for r in rows],
            "verdicts": report.verdicts,
            "passed": report.passed,
        }
        written.append(write_json(out / "report.json", doc))
    if "txt" in formats:
        lines = [f"experiment {cfg.name}  config {report.provenance['config_sha256'][:12]}"]
        for lv in report.levels:
            lines.append(f"level {lv.level}: {lv.atoms} atoms, alpha_hat {lv.alpha_hat:.4f}, constant {lv.constant:.3f}")
        for v in report.verdicts:
            sup = ", ".join(f"{x:.4g}" for x in v["suprema"])
            lines.append(f"{mode} {v['value']:g} p {v['p']:g}: suprema [{sup}] -> {v['verdict']} "
                         f"(expected {v['expected']}) {'OK' if v['ok'] else 'FAIL'}")
        lines.append("PASS" if report.passed else "FAIL")
        p = out / "summary.txt"
        p.write_text("\n".join(lines) + "\n")
        written.append(p)
    return written
