"""Hardy-Littlewood maximal functions of measures and functions, and a
Riesz-type potential.

All maximal functions here are centred: the supremum over radii of
``nu(B(x, r)) / mu(B(x, r))`` with open balls, realized as a maximum over a
finite radius grid.  ``mu`` is always the atomic measure of the space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .space import MetricMeasureSpace, log_radii

__all__ = [
    "DiscreteMeasure",
    "MaximalProfile",
    "ball_mass_matrix",
    "maximal_of_measure",
    "dirac_maximal",
    "maximal_of_function",
    "riesz_potential",
    "domination_check",
    "default_radii",
]

_CHUNK_CELLS = 2_000_000


class DiscreteMeasure:
    """Finite atomic measure, located either on atoms of a space or at
    free coordinates in the same Euclidean frame.

    Parameters
    ----------
    masses : array_like
        Strictly positive atom masses.
    points : array_like, optional
        Coordinates of the atoms.
    support_indices : array_like, optional
        Atom indices into a :class:`MetricMeasureSpace`.  Required for table
        metrics.
    """

    def __init__(self, masses, points=None, support_indices=None):
        masses = np.asarray(masses, dtype=float).ravel()
        if np.any(~np.isfinite(masses)) or np.any(masses <= 0):
            raise ValueError("measure masses must be finite and > 0")
        if points is None and support_indices is None:
            raise ValueError("a measure needs points or support indices")
        self.masses = masses
        self.points = None if points is None else np.atleast_2d(np.asarray(points, dtype=float))
        if self.points is not None and self.points.shape[0] != masses.size:
            if masses.size == 1 and self.points.shape[1] == 1 and self.points.shape[0] > 1:
                self.points = self.points.T
            if self.points.shape[0] != masses.size:
                raise ValueError("points and masses differ in length")
        self.support_indices = None if support_indices is None else np.asarray(support_indices, dtype=int).ravel()
        if self.support_indices is not None and self.support_indices.size != masses.size:
            raise ValueError("support indices and masses differ in length")
        self.total_mass = float(masses.sum())

    def __len__(self):
        return self.masses.size

    def __repr__(self):
        return f"DiscreteMeasure(atoms={len(self)}, total_mass={self.total_mass:.6g})"

    @classmethod
    def of_space(cls, space: MetricMeasureSpace, indices=None, scale: float = 1.0) -> "DiscreteMeasure":
        """The space's own measure (optionally restricted and rescaled)."""
        idx = np.arange(len(space)) if indices is None else np.asarray(indices, dtype=int)
        pts = None if not space.is_euclidean else space.points[idx]
        return cls(space.masses[idx] * scale, points=pts, support_indices=idx)

    @classmethod
    def dirac(cls, space: MetricMeasureSpace, index: int, mass: float = 1.0) -> "DiscreteMeasure":
        pts = None if not space.is_euclidean else space.points[[index]]
        return cls([mass], points=pts, support_indices=[index])

    def scaled(self, c: float) -> "DiscreteMeasure":
        return DiscreteMeasure(self.masses * c, self.points, self.support_indices)

    def restricted(self, keep) -> "DiscreteMeasure | None":
        """Restriction to the atoms selected by a boolean mask; None if empty."""
        keep = np.asarray(keep, dtype=bool)
        if not keep.any():
            return None
        return DiscreteMeasure(
            self.masses[keep],
            None if self.points is None else self.points[keep],
            None if self.support_indices is None else self.support_indices[keep],
        )

    def __add__(self, other: "DiscreteMeasure") -> "DiscreteMeasure":
        pts = None if self.points is None or other.points is None else np.vstack([self.points, other.points])
        sup = None
        if self.support_indices is not None and other.support_indices is not None:
            sup = np.concatenate([self.support_indices, other.support_indices])
        return DiscreteMeasure(np.concatenate([self.masses, other.masses]), pts, sup)

    def locators(self, space: MetricMeasureSpace):
        if space.is_euclidean:
            if self.points is not None:
                dim = space.points.shape[1]
                pts = self.points
                if pts.shape[1] < dim:
                    pts = np.hstack([pts, np.zeros((len(pts), dim - pts.shape[1]))])
                return pts
            return space.points[self.support_indices]
        if self.support_indices is None:
            raise TypeError("table metrics need support indices")
        return self.support_indices

    def ball_masses(self, space: MetricMeasureSpace, where, radii, closed: bool = False) -> np.ndarray:
        return ball_mass_matrix(space, space.as_locators(where), self.locators(space), self.masses, radii, closed)


def ball_mass_matrix(space: MetricMeasureSpace, eval_loc, target_loc, weights, radii, closed: bool = False) -> np.ndarray:
    """``out[i, j] = sum of weights[k] over targets with d(x_i, y_k) < radii[j]``.

    ``weights`` may be 2-D (one row per weight vector); the result then has
    a leading axis of the same length.  ``radii`` must be ascending.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) < 0):
        raise ValueError("radii must be ascending")
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    n_eval, n_t, R = len(eval_loc), len(target_loc), radii.size
    out = np.zeros((W.shape[0], n_eval, R))
    side = "left" if closed else "right"
    step = max(1, _CHUNK_CELLS // max(n_t, 1))
    for start in range(0, n_eval, step):
        stop = min(n_eval, start + step)
        D = space.metric.pairwise(eval_loc[start:stop], target_loc)
        k = np.searchsorted(radii, D, side=side)
        flat = (k + (R + 1) * np.arange(stop - start)[:, None]).ravel()
        for w in range(W.shape[0]):
            acc = np.bincount(flat, weights=np.broadcast_to(W[w], D.shape).ravel(), minlength=(stop - start) * (R + 1))
            out[w, start:stop] = np.cumsum(acc.reshape(stop - start, R + 1), axis=1)[:, :R]
    return out[0] if np.ndim(weights) == 1 else out


def default_radii(space: MetricMeasureSpace, per_decade: int = 12) -> np.ndarray:
    lo, hi = space.valid_window()
    if not lo > 0 or lo >= hi:
        raise ValueError("space has no usable radius window; pass radii explicitly")
    return log_radii(lo, hi, per_decade)


@dataclass
class MaximalProfile:
    """Maximal-function values at evaluation points.

    ``flagged`` marks evaluation points that sit on an atom of ``nu``; in
    the continuum the maximal function is infinite there.
    """

    values: np.ndarray
    radii: np.ndarray
    argmax_radius: np.ndarray
    flagged: np.ndarray

    def __len__(self):
        return self.values.size


def _refined_ratio(d_nu, m_nu, d_mu, m_mu, rmin, rmax):
    # Exact sup of nu(B)/mu(B) over r in [rmin, rmax]: the ratio only rises
    # right after a nu-distance, so probe midway to the next realized distance.
    o_nu = np.argsort(d_nu)
    dn, cn = d_nu[o_nu], np.cumsum(m_nu[o_nu])
    o_mu = np.argsort(d_mu)
    dm, cm = d_mu[o_mu], np.cumsum(m_mu[o_mu])
    realized = np.unique(np.concatenate([dn, dm, [rmax]]))
    cand = np.unique(dn[(dn >= rmin) & (dn < rmax)])
    if cand.size == 0:
        return -np.inf, np.nan
    nxt = realized[np.minimum(np.searchsorted(realized, cand, side="right"), realized.size - 1)]
    r = np.where(nxt > cand, 0.5 * (cand + nxt), cand)
    r = np.clip(r, rmin, rmax)
    inu = np.searchsorted(dn, r, side="left")
    imu = np.searchsorted(dm, r, side="left")
    num = np.where(inu > 0, cn[np.maximum(inu - 1, 0)], 0.0)
    den = np.where(imu > 0, cm[np.maximum(imu - 1, 0)], 0.0)
    ok = den > 0
    if not ok.any():
        return -np.inf, np.nan
    ratio = np.where(ok, num / np.where(ok, den, 1.0), -np.inf)
    j = int(np.argmax(ratio))
    return float(ratio[j]), float(r[j])


def maximal_of_measure(space: MetricMeasureSpace, nu: DiscreteMeasure, where=None, radii=None,
                       refine: bool = False) -> MaximalProfile:
    """Centred maximal function ``M_mu nu(x) = max_r nu(B(x,r)) / mu(B(x,r))``.

    Parameters
    ----------
    space : MetricMeasureSpace
        Carries ``mu`` as its atom masses.
    nu : DiscreteMeasure
    where : array_like, optional
        Atom indices (int) or coordinates (float).  Defaults to every atom.
    radii : array_like, optional
        Ascending radius grid; defaults to 12 per decade over the space's
        valid window.
    refine : bool
        Also probe one radius between each realized ``nu``-distance and the
        next realized distance inside the grid's span, which turns the grid
        maximum into the exact supremum over that span.

    Raises
    ------
    ValueError
        If some ``mu``-ball on the grid is empty (radius below resolution).
    """
    if where is None:
        where = np.arange(len(space))
    radii = default_radii(space) if radii is None else np.sort(np.asarray(radii, dtype=float))
    loc = space.as_locators(where)
    mu_b = ball_mass_matrix(space, loc, space.locators(), space.masses, radii)
    if np.any(mu_b <= 0):
        raise ValueError("empty mu-ball on the radius grid; radii fall below the resolution")
    nu_loc = nu.locators(space)
    nu_b = ball_mass_matrix(space, loc, nu_loc, nu.masses, radii)
    ratio = nu_b / mu_b
    j = np.argmax(ratio, axis=1)
    values = ratio[np.arange(len(loc)), j]
    arg_r = radii[j].copy()
    d_nu_min = np.empty(len(loc))
    for start in range(0, len(loc), 1024):
        d_nu_min[start:start + 1024] = space.metric.pairwise(loc[start:start + 1024], nu_loc).min(axis=1)
    if refine:
        mu_loc = space.locators()
        for i in range(len(loc)):
            d_nu = space.metric.pairwise(loc[i:i + 1], nu_loc)[0]
            d_mu = space.metric.pairwise(loc[i:i + 1], mu_loc)[0]
            v, r = _refined_ratio(d_nu, nu.masses, d_mu, space.masses, radii[0], radii[-1])
            if v > values[i]:
                values[i], arg_r[i] = v, r
    return MaximalProfile(values, radii, arg_r, d_nu_min == 0)


def dirac_maximal(space: MetricMeasureSpace, x0, where=None) -> np.ndarray:
    """Maximal function of a unit point mass at ``x0``, in closed form
    ``1 / mu(closed ball(x, d(x, x0)))``; ``inf`` at ``x0`` itself."""
    if where is None:
        where = np.arange(len(space))
    loc = space.as_locators(where)
    x0_loc = space.as_locators(x0)
    d0 = space.metric.pairwise(loc, x0_loc)[:, 0]
    out = np.empty(len(loc))
    all_loc = space.locators()
    for start in range(0, len(loc), 1024):
        D = space.metric.pairwise(loc[start:start + 1024], all_loc)
        closed_mass = (D <= d0[start:start + 1024, None]) @ space.masses
        out[start:start + 1024] = closed_mass
    with np.errstate(divide="ignore"):
        vals = 1.0 / out
    vals[d0 == 0] = np.inf
    return vals


def maximal_of_function(space: MetricMeasureSpace, f, where=None, radii=None) -> MaximalProfile:
    """Centred maximal function of ``f`` (values per atom) over the grid."""
    f = np.asarray(f, dtype=float)
    if f.shape != (len(space),) or not np.all(np.isfinite(f)):
        raise ValueError("f must hold one finite value per atom")
    if where is None:
        where = np.arange(len(space))
    radii = default_radii(space) if radii is None else np.sort(np.asarray(radii, dtype=float))
    loc = space.as_locators(where)
    both = ball_mass_matrix(space, loc, space.locators(), np.vstack([np.abs(f) * space.masses, space.masses]), radii)
    num, den = both
    if np.any(den <= 0):
        raise ValueError("empty mu-ball on the radius grid")
    ratio = num / den
    j = np.argmax(ratio, axis=1)
    return MaximalProfile(ratio[np.arange(len(loc)), j], radii, radii[j], np.zeros(len(loc), dtype=bool))


def riesz_potential(space: MetricMeasureSpace, f, alpha: float, where=None) -> np.ndarray:
    """``u(x) = sum_{y != x} d(x, y)**(1 - alpha) f(y) mu({y})``."""
    if not alpha > 1:
        raise ValueError("kernel exponent alpha must exceed 1")
    f = np.asarray(f, dtype=float)
    if where is None:
        where = np.arange(len(space))
    loc = space.as_locators(where)
    fm = f * space.masses
    all_loc = space.locators()
    u = np.empty(len(loc))
    step = max(1, _CHUNK_CELLS // len(space))
    for start in range(0, len(loc), step):
        D = space.metric.pairwise(loc[start:start + step], all_loc)
        with np.errstate(divide="ignore"):
            ker = np.where(D > 0, D ** (1.0 - alpha), 0.0)
        u[start:start + step] = ker @ fm
    return u


def domination_check(u, profile) -> float:
    """``max |u(x)| / M f(x)`` with ``0/0`` read as 0."""
    m = profile.values if isinstance(profile, MaximalProfile) else np.asarray(profile, dtype=float)
    u = np.abs(np.asarray(u, dtype=float))
    if u.shape != m.shape:
        raise ValueError("potential and maximal profile are on different point sets")
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(u == 0, 0.0, u / m)
    return float(r.max()) if r.size else 0.0
