"""Ahlfors exponent/constant fits, doubling constants and ball-cover sums.

Cover sums count each greedy ball at its nominal diameter ``rho``: the
value is ``ballCount * rho**s``, an upper bound for the fixed-scale
spherical content of the set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .maximal import DiscreteMeasure, ball_mass_matrix
from .space import MetricMeasureSpace, greedy_net, log_radii

__all__ = [
    "AhlforsEstimate",
    "CoverSum",
    "LocalGlobalReport",
    "ScanTable",
    "sample_centers",
    "ahlfors_fit",
    "doubling_estimate",
    "local_to_global_check",
    "cover_sum",
    "dimension_scan",
    "dyadic_rho_grid",
    "optimal_cover_count",
]

MAX_CENTERS = 512


@dataclass
class AhlforsEstimate:
    exponent: float
    constant: float
    radius_range: tuple[float, float]
    residual: float
    samples: int
    intercept: float = 0.0
    table: np.ndarray | None = field(default=None, repr=False)

    def constant_at(self, exponent: float) -> float:
        """Two-sided constant of the stored samples at another exponent."""
        r, m = self.table[:, 1], self.table[:, 2]
        q = m / r ** exponent
        return float(np.max(np.maximum(q, 1.0 / q)))


def sample_centers(n_atoms: int, seed: int = 0, max_centers: int = MAX_CENTERS) -> np.ndarray:
    """All atoms, or ``max_centers`` distinct seeded picks, ascending."""
    if n_atoms <= max_centers:
        return np.arange(n_atoms)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_atoms, size=max_centers, replace=False))


def _measure_of(space, measure):
    if measure is None:
        return DiscreteMeasure.of_space(space)
    return measure


def ahlfors_fit(space: MetricMeasureSpace, radii=None, centers=None, measure: DiscreteMeasure | None = None,
                seed: int = 0) -> AhlforsEstimate:
    """Fit ``mu(B(x, r)) ~ r**alpha`` by pooled log-log least squares.

    The exponent is the least-squares slope over all (center, radius)
    samples.  The constant is the worst two-sided ratio
    ``max(mu(B)/r**a, r**a/mu(B))`` at the fitted exponent, so it is >= 1.

    Parameters
    ----------
    space : MetricMeasureSpace
    radii : array_like, optional
        Defaults to 12 radii per decade over ``[2 cell, diameter / 2]``.
    centers : array_like, optional
        Atom indices; defaults to at most 512 seeded picks.
    measure : DiscreteMeasure, optional
        Defaults to the space's own atom masses.

    Raises
    ------
    ValueError
        If a ball at some radius carries no mass.
    """
    if radii is None:
        radii = log_radii(2 * space.cell, space.diameter / 2)
    radii = np.sort(np.asarray(radii, dtype=float))
    if centers is None:
        centers = sample_centers(len(space), seed)
    centers = np.asarray(centers, dtype=int)
    meas = _measure_of(space, measure)
    mb = ball_mass_matrix(space, space.locators(centers), meas.locators(space), meas.masses, radii)
    if np.any(mb <= 0):
        raise ValueError("empty ball at the smallest radius; radii are below the resolution")
    lr = np.broadcast_to(np.log(radii), mb.shape).ravel()
    lm = np.log(mb).ravel()
    if radii.size < 2 or np.ptp(lr) == 0:
        slope, icpt = 0.0, float(lm.mean())
    else:
        slope, icpt = np.polyfit(lr, lm, 1)
    resid = float(np.sqrt(np.mean((lm - (slope * lr + icpt)) ** 2)))
    if abs(slope) < 1e-12:
        slope = 0.0
    table = np.column_stack([np.repeat(centers, radii.size), np.tile(radii, len(centers)), mb.ravel()])
    q = mb / radii[None, :] ** slope
    const = float(np.max(np.maximum(q, 1.0 / q)))
    return AhlforsEstimate(float(slope), const, (float(radii[0]), float(radii[-1])), resid,
                           int(mb.size), float(icpt), table)


def doubling_estimate(space: MetricMeasureSpace, radii=None, centers=None, measure: DiscreteMeasure | None = None,
                      seed: int = 0) -> float:
    """``max mu(B(x, 2r)) / mu(B(x, r))`` over sampled centers and radii."""
    if radii is None:
        radii = log_radii(2 * space.cell, space.diameter / 2)
    radii = np.sort(np.asarray(radii, dtype=float))
    if centers is None:
        centers = sample_centers(len(space), seed)
    meas = _measure_of(space, measure)
    both = np.concatenate([radii, 2 * radii])
    order = np.argsort(both, kind="stable")
    mb = ball_mass_matrix(space, space.locators(np.asarray(centers, dtype=int)), meas.locators(space),
                          meas.masses, both[order])
    inv = np.empty_like(order)
    inv[order] = np.arange(order.size)
    mb = mb[:, inv]
    small, big = mb[:, : radii.size], mb[:, radii.size:]
    if np.any(small <= 0):
        raise ValueError("empty ball B(x, r)")
    return float(np.max(big / small))


@dataclass
class LocalGlobalReport:
    local: AhlforsEstimate | None
    global_: AhlforsEstimate | None
    local_constant: float
    global_constant: float
    net_size: int
    r0: float
    passed: bool
    trivial: bool = False

    @property
    def constant_ratio(self) -> float:
        return self.global_constant / self.local_constant if self.local_constant else math.inf


def local_to_global_check(gen, r0: float | None = None, seed: int = 0, per_decade: int = 12) -> LocalGlobalReport:
    """Compare Ahlfors constants below ``r0`` and up to the diameter.

    The global constant is evaluated at the locally fitted exponent.  The
    check passes when it exceeds the local constant by at most the factor
    ``I``, the size of a greedy ``r0/2``-net of the set.
    """
    space = gen.space() if not isinstance(gen, MetricMeasureSpace) else gen
    diam = space.diameter
    if r0 is None:
        r0 = diam / 4
    lo = 2 * space.cell
    if diam <= r0:
        est = ahlfors_fit(space, log_radii(lo, diam * (1 - 1e-9), per_decade), seed=seed) if lo < diam else None
        c = est.constant if est else 1.0
        return LocalGlobalReport(est, None, c, c, 1, r0, True, trivial=True)
    if not lo < r0:
        raise ValueError("r0 must exceed twice the cell size")
    local = ahlfors_fit(space, log_radii(lo, r0, per_decade), seed=seed)
    glob = ahlfors_fit(space, log_radii(lo, diam * (1 - 1e-9), per_decade), seed=seed)
    net = greedy_net(space, r0 / 2)
    gc = glob.constant_at(local.exponent)
    return LocalGlobalReport(local, glob, local.constant, gc, int(net.size), r0,
                             bool(gc <= net.size * local.constant))


@dataclass
class CoverSum:
    s: float
    rho: float
    value: float
    ball_count: int
    centers: np.ndarray = field(repr=False)
    diameters: np.ndarray = field(repr=False)


def _set_diameter(space, idx) -> float:
    if idx.size < 2:
        return 0.0
    loc = space.locators(idx)
    best = 0.0
    for start in range(0, idx.size, 512):
        best = max(best, float(space.metric.pairwise(loc[start:start + 512], loc).max()))
    return best


def cover_sum(space: MetricMeasureSpace, subset=None, s: float = 1.0, rho: float = 1.0,
              diameters: bool = True) -> CoverSum:
    """Greedy cover of ``subset`` by open balls of radius ``rho/2`` centred
    in the subset, at the lowest-index uncovered atom each time.

    ``value = ballCount * rho**s``.  ``diameters`` records the realized
    diameter of the atoms each ball covers (always ``<= rho``).
    """
    if not rho > 0 or s < 0:
        raise ValueError("need rho > 0 and s >= 0")
    idx = np.arange(len(space)) if subset is None else np.sort(np.asarray(subset, dtype=int))
    in_subset = np.zeros(len(space), dtype=bool)
    in_subset[idx] = True
    covered = np.zeros(len(space), dtype=bool)
    centers, diams = [], []
    for i in idx:
        if covered[i]:
            continue
        members = space.ball_indices(np.array([i]), rho / 2)
        members = members[in_subset[members]]
        covered[members] = True
        centers.append(i)
        if diameters:
            diams.append(_set_diameter(space, members))
    k = len(centers)
    return CoverSum(float(s), float(rho), k * rho ** s, k, np.asarray(centers, dtype=int), np.asarray(diams))


@dataclass
class ScanTable:
    s_grid: np.ndarray
    rho_grid: np.ndarray
    values: np.ndarray
    counts: np.ndarray
    trend: np.ndarray
    critical_s: float

    def rows(self):
        for i, s in enumerate(self.s_grid):
            for j, rho in enumerate(self.rho_grid):
                yield float(s), float(rho), float(self.values[i, j]), int(self.counts[j])


def dyadic_rho_grid(space: MetricMeasureSpace, floor_cells: float = 4.0) -> np.ndarray:
    """``diam/4 * 2**-k`` for ``k = 0, 1, ...`` while above ``floor_cells`` cells.

    Halving steps keep the window an integer number of octaves, which
    avoids the log-periodic bias of greedy counts on self-similar sets.
    """
    top = space.diameter / 4
    k = int(np.floor(np.log2(top / (floor_cells * space.cell)) + 1e-9)) if space.cell > 0 else 0
    return top * 2.0 ** -np.arange(max(k, 0) + 1)


def dimension_scan(space: MetricMeasureSpace, subset=None, s_grid=(0.0, 0.5, 1.0, 1.5, 2.0), rho_grid=None) -> ScanTable:
    """Cover sums over an ``(s, rho)`` grid.

    ``trend[i]`` is the log-log slope of the value against ``1/rho`` for
    ``s_grid[i]`` (positive: growing as rho shrinks).  The critical ``s``
    is where that trend changes sign, linearly interpolated between grid
    points; ``nan`` if it never does.  The default ``rho`` grid is
    :func:`dyadic_rho_grid`.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    if rho_grid is None:
        rho_grid = dyadic_rho_grid(space)
    rho_grid = np.asarray(rho_grid, dtype=float)
    if s_grid.size == 0 or rho_grid.size == 0:
        raise ValueError("grids must be nonempty")
    counts = np.array([cover_sum(space, subset, 0.0, rho, diameters=False).ball_count for rho in rho_grid])
    values = counts[None, :] * rho_grid[None, :] ** s_grid[:, None]
    if rho_grid.size > 1:
        x = -np.log(rho_grid)
        trend = np.array([np.polyfit(x, np.log(v), 1)[0] for v in values])
    else:
        trend = np.full(s_grid.size, np.nan)
    crit = math.nan
    for i in range(s_grid.size - 1):
        a, b = trend[i], trend[i + 1]
        if a > 0 >= b:
            crit = float(s_grid[i] + (s_grid[i + 1] - s_grid[i]) * a / (a - b))
            break
    return ScanTable(s_grid, rho_grid, values, counts, trend, crit)


def optimal_cover_count(space: MetricMeasureSpace, subset, rho: float) -> int:
    """Minimum number of sets of diameter ``<= rho`` covering ``subset``.

    Exhaustive dynamic programme over subsets; only for tiny instances
    (at most 16 atoms).
    """
    idx = np.asarray(subset, dtype=int)
    k = idx.size
    if k > 16:
        raise ValueError("brute-force cover limited to 16 atoms")
    if k == 0:
        return 0
    D = space.metric.pairwise(space.locators(idx), space.locators(idx))
    close = D <= rho
    full = (1 << k) - 1
    # feasible[m]: every pair inside mask m is within rho
    feasible = np.zeros(1 << k, dtype=bool)
    feasible[0] = True
    nbr = [sum(1 << j for j in range(k) if close[i, j]) for i in range(k)]
    for m in range(1, 1 << k):
        low = (m & -m).bit_length() - 1
        rest = m & (m - 1)
        feasible[m] = feasible[rest] and (rest & ~nbr[low]) == 0
    best = [0] + [k + 1] * full
    for m in range(1, full + 1):
        low = m & -m
        rest = m ^ low
        sub = rest
        b = k + 1
        while True:
            g = sub | low
            if feasible[g]:
                c = 1 + best[m ^ g]
                if c < b:
                    b = c
            if sub == 0:
                break
            sub = (sub - 1) & rest
        best[m] = b
    return best[full]
