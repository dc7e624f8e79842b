"""Distance-power and maximal-function weights and sampled A_p statistics.

The A_p product of a weight over a ball ``B`` is

    (avg_B w) * (avg_B w**(-1/(p-1)))**(p-1)        for p > 1,
    (avg_B w) / min_B w                              for p = 1,

with ``mu``-weighted averages over the atoms in ``B``.  A single finite
discretization always has a finite supremum, so membership in A_p is read
off from how the sampled supremum grows under refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dimension import ahlfors_fit
from .fractals import GASKET_DIM, GeneratedSet, _member_gap, gasket_boundary_pair
from .maximal import DiscreteMeasure, ball_mass_matrix, default_radii, maximal_of_measure
from .space import Ball, MetricMeasureSpace, ball_query, distance_to_set

__all__ = [
    "PowerDistance",
    "PiecewisePower",
    "MaximalPower",
    "TruncatedMaximalPower",
    "Constant",
    "NeighborhoodSpec",
    "ApReport",
    "KolmogorovReport",
    "SweepResult",
    "weight_values",
    "eval_weight",
    "build_neighborhoods",
    "ap_ball_product",
    "sample_balls",
    "ap_products",
    "ap_constant_estimate",
    "kolmogorov_check",
    "theoretical_range",
    "classify_growth",
    "range_sweep",
]


@dataclass(frozen=True)
class PowerDistance:
    subset: object
    beta: float


@dataclass(frozen=True)
class PiecewisePower:
    """``d(x, F_i)**beta_i`` on ``U_i = {d(x, F_i) < kappa_i}``, 1 elsewhere."""

    subsets: tuple
    betas: tuple
    kappas: tuple

    def __post_init__(self):
        if not (len(self.subsets) == len(self.betas) == len(self.kappas)):
            raise ValueError("subsets, betas and kappas differ in length")


@dataclass(frozen=True)
class MaximalPower:
    nu: DiscreteMeasure
    gamma: float
    radii: tuple | None = None

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")


@dataclass(frozen=True)
class TruncatedMaximalPower:
    nu: DiscreteMeasure
    gamma: float
    floor: float
    radii: tuple | None = None

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise ValueError("gamma must lie in [0, 1)")
        if not self.floor > 0:
            raise ValueError("floor must be positive")


@dataclass(frozen=True)
class Constant:
    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("constant weight must be positive")


def _power(d: np.ndarray, beta: float) -> np.ndarray:
    if beta == 0:
        return np.ones_like(d)
    with np.errstate(divide="ignore"):
        return np.where(d > 0, d ** beta, np.inf if beta < 0 else 0.0)


def weight_values(spec, space: MetricMeasureSpace, where=None) -> np.ndarray:
    """Weight at each atom in ``where`` (all atoms by default).

    Atoms lying exactly on ``F`` get ``inf`` for negative exponents and
    ``0`` for positive ones; such values are excluded from ball averages
    downstream.
    """
    if where is None:
        where = np.arange(len(space))
    where = np.asarray(where)
    n = len(space.as_locators(where))
    if isinstance(spec, Constant):
        return np.full(n, float(spec.c))
    if isinstance(spec, PowerDistance):
        return _power(np.atleast_1d(distance_to_set(space, where, spec.subset)), spec.beta)
    if isinstance(spec, PiecewisePower):
        out = np.ones(n)
        for F, beta, kappa in zip(spec.subsets, spec.betas, spec.kappas):
            d = np.atleast_1d(distance_to_set(space, where, F))
            inside = d < kappa
            out[inside] = _power(d[inside], beta)
        return out
    if isinstance(spec, (MaximalPower, TruncatedMaximalPower)):
        radii = None if spec.radii is None else np.asarray(spec.radii)
        m = maximal_of_measure(space, spec.nu, where, radii).values
        w = m ** spec.gamma
        if isinstance(spec, TruncatedMaximalPower):
            w = np.maximum(w, spec.floor)
        return w
    raise TypeError(f"unknown weight spec {type(spec).__name__}")


def eval_weight(spec, space: MetricMeasureSpace, x: int) -> float:
    """Weight at a single atom."""
    return float(weight_values(spec, space, np.array([int(x)]))[0])


@dataclass
class NeighborhoodSpec:
    """Radii ``kappa_i`` of the neighbourhoods ``U_i = {d(x, F_i) < kappa_i}``.

    ``third_terms`` holds the dimension-balancing term of the min-of-three
    rule; ``inputs`` records the constants each member used.
    """

    kappas: list[float]
    gap: float
    third_terms: list[float]
    inputs: list[dict]
    alpha: float
    c: float
    K: float
    nu_total: float

    def labels(self, space: MetricMeasureSpace, subsets: Sequence) -> np.ndarray:
        """Index ``i`` of the neighbourhood holding each atom, -1 outside all.

        Raises if some atom falls in two neighbourhoods.
        """
        lab = np.full(len(space), -1)
        for i, (F, k) in enumerate(zip(subsets, self.kappas)):
            inside = np.atleast_1d(distance_to_set(space, np.arange(len(space)), F)) < k
            if np.any(inside & (lab >= 0)):
                raise AssertionError("neighbourhoods overlap")
            lab[inside] = i
        return lab


def kappa_third_term(c: float, c_i: float, alpha: float, s_i: float, K: float, nu_total: float, gap: float) -> float:
    """``(c 2^a K^a nu(F) / (c_i gap^a 2^s K^s))**(1/(s - a))``; ``inf`` for an infinite gap."""
    if math.isinf(gap):
        return math.inf
    base = c * 2 ** alpha * K ** alpha * nu_total / (c_i * gap ** alpha * 2 ** s_i * K ** s_i)
    return base ** (1.0 / (s_i - alpha))


def build_neighborhoods(members: Sequence[GeneratedSet], alpha: float, c: float, K: float = 1.0,
                        declared: Sequence[dict] | None = None, seed: int = 0) -> NeighborhoodSpec:
    """Neighbourhood radii for pairwise disjoint sets ``F_1..F_H``.

    ``kappa_i = min(2 r_i, gap/2, third term)``.  Per-member ``s_i``,
    ``c_i``, ``r_i`` come from ``declared`` when given (keys ``s``, ``c``,
    ``r``), otherwise from an Ahlfors fit of the member over
    ``[2 cell, diam/2]`` with ``r_i = diam(F_i)``.

    Raises
    ------
    ValueError
        If two members touch.
    """
    members = list(members)
    gap = math.inf
    for i in range(len(members)):
        for j in range(i + 1, len(members)):
            gap = min(gap, _member_gap(members[i], members[j]))
    if not gap > 0:
        raise ValueError("members touch: gap is zero")
    nu_total = float(sum(m.total_mass for m in members))
    inputs, kappas, thirds = [], [], []
    for i, m in enumerate(members):
        d = dict(declared[i]) if declared is not None and declared[i] is not None else {}
        sp = m.space()
        if "r" not in d:
            d["r"] = sp.diameter
        if "s" not in d or "c" not in d:
            est = ahlfors_fit(sp, seed=seed)
            d.setdefault("s", est.exponent)
            d.setdefault("c", est.constant)
        if not d["s"] < alpha:
            raise ValueError(f"member {i} exponent {d['s']} is not below alpha {alpha}")
        third = kappa_third_term(c, d["c"], alpha, d["s"], K, nu_total, gap)
        kappas.append(min(2 * d["r"], gap / 2, third))
        thirds.append(third)
        inputs.append(d)
    return NeighborhoodSpec(kappas, gap, thirds, inputs, alpha, c, K, nu_total)


def _ball_product(w: np.ndarray, m: np.ndarray, p: float) -> float:
    # normalizing by the minimum keeps constant weights exactly at 1
    u = w / w.min()
    mass = np.sum(m)
    avg = np.sum(u * m) / mass
    if p == 1:
        return float(avg)
    dual = np.sum(u ** (-1.0 / (p - 1)) * m) / mass
    return float(avg * dual ** (p - 1))


def ap_ball_product(space: MetricMeasureSpace, weights, ball: Ball, p: float, exclude_invalid: bool = False) -> float:
    """A_p product of per-atom ``weights`` over one ball.

    Raises
    ------
    ValueError
        On an empty ball, or when nonpositive/infinite weights sit in the
        ball and ``exclude_invalid`` is false.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    idx = ball_query(space, ball)
    if idx.size == 0:
        raise ValueError("empty ball")
    w = np.asarray(weights, dtype=float)[idx]
    ok = np.isfinite(w) & (w > 0)
    if not ok.all():
        if not exclude_invalid:
            raise ValueError("ball holds atoms with zero or infinite weight")
        if not ok.any():
            raise ValueError("no valid atoms in ball")
    return _ball_product(w[ok], space.masses[idx][ok], p)


def sample_balls(space: MetricMeasureSpace, n: int, seed: int = 0, window=None) -> tuple[np.ndarray, np.ndarray]:
    """Centres uniform over atoms, radii log-uniform over ``window``.

    Uses a counter-based bit generator, so the ``k``-th ball depends only
    on ``seed`` and ``k``.
    """
    lo, hi = space.valid_window() if window is None else window
    rng = np.random.Generator(np.random.Philox(seed))
    centers = rng.integers(0, len(space), size=n)
    radii = np.exp(rng.uniform(math.log(lo), math.log(hi), size=n))
    return centers, radii


def ap_products(space: MetricMeasureSpace, weights, centers, radii, ps: Sequence[float]) -> tuple[np.ndarray, int]:
    """A_p products for each ball and each ``p`` (rows follow ``ps``).

    Returns the products and the number of excluded atom occurrences
    (zero or infinite weight).  Balls without a valid atom give ``nan``.
    """
    w = np.asarray(weights, dtype=float)
    ok_atom = np.isfinite(w) & (w > 0)
    out = np.full((len(ps), len(centers)), np.nan)
    excluded = 0
    for k, (c, r) in enumerate(zip(centers, radii)):
        idx = space.ball_indices(np.array([c]), float(r))
        good = idx[ok_atom[idx]]
        excluded += idx.size - good.size
        if good.size == 0:
            continue
        wv, mv = w[good], space.masses[good]
        for j, p in enumerate(ps):
            out[j, k] = _ball_product(wv, mv, p)
    return out, excluded


@dataclass
class ApReport:
    p: float
    weight_id: str
    balls: int
    products: np.ndarray = field(repr=False)
    supremum: float
    quantiles: dict
    radius_range: tuple
    seed: int
    centers: np.ndarray = field(repr=False)
    radii: np.ndarray = field(repr=False)
    excluded_atoms: int = 0


def _report(p, weight_id, products, centers, radii, window, seed, excluded) -> ApReport:
    valid = ~np.isnan(products)
    if valid.sum() < 10:
        raise ValueError("fewer than 10 valid balls")
    pv = products[valid]
    q = {k: float(np.quantile(pv, k / 100)) for k in (50, 90, 99)}
    return ApReport(p, weight_id, int(valid.sum()), pv, float(pv.max()), q, tuple(map(float, window)), seed,
                    centers[valid], radii[valid], excluded)


def ap_constant_estimate(space: MetricMeasureSpace, weight, p: float | Sequence[float], balls: int = 500, seed: int = 0,
                         window=None, weight_id: str = "w"):
    """Sampled A_p supremum of a weight (a spec or per-atom values).

    With a sequence of ``p`` values the same balls are reused and a list of
    reports is returned.
    """
    w = weight if isinstance(weight, np.ndarray) else weight_values(weight, space)
    window = space.valid_window() if window is None else window
    centers, radii = sample_balls(space, balls, seed, window)
    ps = list(p) if isinstance(p, (list, tuple, np.ndarray)) else [p]
    prods, excluded = ap_products(space, w, centers, radii, ps)
    reps = [_report(pp, weight_id, prods[j], centers, radii, window, seed, excluded) for j, pp in enumerate(ps)]
    return reps if isinstance(p, (list, tuple, np.ndarray)) else reps[0]


@dataclass
class KolmogorovReport:
    gamma: float
    max_ratio: float
    ratios: np.ndarray = field(repr=False)
    kinds: list = field(repr=False)


def kolmogorov_check(space: MetricMeasureSpace, nu: DiscreteMeasure, gamma: float, n_sets: int = 200, seed: int = 0,
                     radii=None, window=None) -> KolmogorovReport:
    """Worst ratio ``int_E (M nu_1)^gamma dmu / (mu(E)^(1-gamma) ||nu_1||^gamma)``.

    For each trial a ball ``B(x0, r0)`` is drawn, ``nu_1`` is ``nu``
    restricted to ``B(x0, 2K r0)`` and ``E`` is either ``B(x0, r0)`` (even
    trials) or a random half of the atoms of ``B(x0, 2K r0)`` (odd trials).
    A vanishing ``nu_1`` gives ratio 0.
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    radii = default_radii(space) if radii is None else np.sort(np.asarray(radii, dtype=float))
    K = space.metric.K
    centers, r0s = sample_balls(space, n_sets, seed, space.valid_window() if window is None else window)
    rng = np.random.Generator(np.random.Philox(seed + 1))
    coins = rng.random((n_sets, len(space)))
    all_loc = space.locators()
    mu_ball = ball_mass_matrix(space, all_loc, all_loc, space.masses, radii)
    nu_loc = nu.locators(space)
    ratios, kinds = np.zeros(n_sets), []
    for t, (x0, r0) in enumerate(zip(centers, r0s)):
        d_nu = space.metric.pairwise(space.locators([x0]), nu_loc)[0]
        keep = d_nu < 2 * K * r0
        big = space.ball_indices(np.array([x0]), 2 * K * r0)
        if t % 2 == 0:
            E = space.ball_indices(np.array([x0]), float(r0))
            kinds.append("ball")
        else:
            E = big[coins[t, : big.size] < 0.5]
            if E.size == 0:
                E = np.array([x0])
            kinds.append("subset")
        if not keep.any():
            continue
        nu1_b = ball_mass_matrix(space, space.locators(E), nu_loc[keep], nu.masses[keep], radii)
        M = (nu1_b / mu_ball[E]).max(axis=1)
        lhs = float((M ** gamma) @ space.masses[E])
        muE = float(space.masses[E].sum())
        ratios[t] = lhs / (muE ** (1 - gamma) * float(nu.masses[keep].sum()) ** gamma)
    return KolmogorovReport(gamma, float(ratios.max()), ratios, kinds)


def theoretical_range(alpha: float, s: float, p: float) -> tuple[float, float]:
    """Open interval of exponents ``beta`` with ``d(x, F)**beta`` in A_p."""
    return -(alpha - s), (alpha - s) * (p - 1)


def classify_growth(suprema: Sequence[float], stable: float = 1.5, divergent: float = 2.0) -> tuple[str, list[float]]:
    """Verdict from level-to-level growth of sampled suprema."""
    sup = np.asarray(suprema, dtype=float)
    growth = list(sup[1:] / sup[:-1]) if sup.size > 1 else []
    if not growth:
        return "inconclusive", growth
    if all(g < stable for g in growth):
        return "stable", [float(g) for g in growth]
    if all(g >= divergent for g in growth):
        return "divergent", [float(g) for g in growth]
    return "inconclusive", [float(g) for g in growth]


def gasket_with_boundary(level: int):
    """Builder for sweeps: gasket space, analytic boundary, (alpha, s)."""
    g, b = gasket_boundary_pair(level)
    return g.space(), b.subset(), (GASKET_DIM, 1.0)


@dataclass
class SweepResult:
    p: float
    levels: list[int]
    betas: list[float]
    suprema: np.ndarray
    growth: list[list[float]]
    verdicts: list[str]
    in_range: list[bool]
    interval: tuple[float, float]
    reports: dict = field(default_factory=dict, repr=False)


def range_sweep(p: float, betas: Sequence[float], levels: Sequence[int], balls: int = 500, seed: int = 0,
                stable: float = 1.5, divergent: float = 2.0,
                builder: Callable[[int], tuple] = gasket_with_boundary, extra_ps: Sequence[float] = ()) -> SweepResult:
    """Sampled A_p suprema of ``d(x, F)**beta`` across refinement levels.

    ``suprema[i, j]`` is for ``betas[i]`` at ``levels[j]``; ``reports``
    maps ``(beta, level, p)`` to the full :class:`ApReport` (including the
    ``extra_ps`` computed on the same balls).
    """
    levels = list(levels)
    betas = [float(b) for b in betas]
    sup = np.zeros((len(betas), len(levels)))
    reports = {}
    interval = None
    for j, lvl in enumerate(levels):
        space, F, (alpha, s) = builder(lvl)
        interval = theoretical_range(alpha, s, p)
        d = np.atleast_1d(distance_to_set(space, np.arange(len(space)), F))
        for i, beta in enumerate(betas):
            ps = [p, *extra_ps]
            reps = ap_constant_estimate(space, _power(d, beta), ps, balls, seed, weight_id=f"d^{beta:g}")
            for rp in reps:
                reports[(beta, lvl, rp.p)] = rp
            sup[i, j] = reps[0].supremum
    verdicts, growth = [], []
    for i in range(len(betas)):
        v, g = classify_growth(sup[i], stable, divergent)
        verdicts.append(v)
        growth.append(g)
    in_range = [interval[0] < b < interval[1] for b in betas]
    return SweepResult(p, levels, betas, sup, growth, verdicts, in_range, interval, reports)
