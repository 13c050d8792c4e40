"""Brute-force numerical verifier.

``sample_stationary_set`` enumerates the stationary points of the problem
inside a box around the reference point by a vectorized grid scan of the
first-order residual followed by damped (batched) Newton refinement on the
active branch.  ``aubin_probe`` samples parameter pairs at shrinking radii
and measures one-sided set-distance ratios, producing evidence for or
against the Lipschitz-like property.  The probe is an evidence generator,
not a decision procedure: its thresholds are heuristic and recorded in the
report.
"""

from __future__ import annotations

import csv
import math
import warnings as _warnings
import dataclasses
from dataclasses import dataclass

import numpy as np

from .calculus import (
    EvalPoint,
    ProblemDerivatives,
    ToleranceConfig,
    problem_derivatives,
)
from .errors import DimensionMismatch, DomainError, GridTooCoarse
from .expr import ProblemSpec

__all__ = [
    "GridSpec",
    "ProbeConfig",
    "SampleSet",
    "LevelStats",
    "ProbeReport",
    "kkt_residual",
    "sample_stationary_set",
    "aubin_probe",
    "write_samples_csv",
    "ACCEPT_RESIDUAL",
]

# A grid/Newton point counts as stationary when its first-order residual is
# below this bar (absolute; the problems are desk-scale).
ACCEPT_RESIDUAL = 1e-9

_GOLDEN = 0.6180339887498949
_PLASTIC = 0.7548776662466927

FLAG_CONSISTENT = "Consistent"
FLAG_VIOLATION = "Violation"
FLAG_INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class GridSpec:
    """Sampling box around the reference x and Newton refinement controls.

    ``points_per_axis`` defaults to 201 for n = 1 and 61 for n = 2; it must
    be odd and >= 3 so the reference point itself lies on the grid.
    """

    r_x: float = 0.5
    points_per_axis: int | None = None
    newton_cap: int = 30
    tau_newton: float = 1e-12

    def __post_init__(self):
        if self.r_x <= 0.0:
            raise ValueError("box radius r_x must be positive")
        if self.points_per_axis is not None:
            m = self.points_per_axis
            if m < 3 or m % 2 == 0:
                raise ValueError("points_per_axis must be odd and >= 3")
        if self.newton_cap < 1 or self.tau_newton <= 0.0:
            raise ValueError("invalid Newton controls")

    def resolve_points(self, n: int) -> int:
        if self.points_per_axis is not None:
            return self.points_per_axis
        return 201 if n == 1 else 61

    def spacing(self, n: int) -> float:
        return 2.0 * self.r_x / (self.resolve_points(n) - 1)


@dataclass(frozen=True)
class ProbeConfig:
    """Parameter sampling plan and flag thresholds for the Aubin probe.

    Radii shrink as delta_k = delta0 * 2^-k for k = 0..levels-1.  Each level
    draws ``samples`` parameters: a bulk annulus plus a radial ladder that
    deepens geometrically with the level, so a genuinely divergent distance
    ratio grows by a constant factor per level while a Lipschitz map stays
    flat.  ``growth`` and ``blowup`` gate the Violation flag; ratios below
    ``ratio_floor`` count as numerically zero.
    """

    delta0: float = 0.1
    levels: int = 4
    samples: int = 64
    rho_u: float | None = None  # locality radius; defaults to r_x / 2
    growth: float = 3.0
    blowup: float = 100.0
    ratio_floor: float = 1e-6
    seed: int = 20260810

    def __post_init__(self):
        if min(self.delta0, self.growth, self.blowup, self.ratio_floor) <= 0.0:
            raise ValueError("probe thresholds must be positive")
        if self.levels < 2 or self.samples < 8:
            raise ValueError("need at least 2 levels and 8 samples per level")
        if self.rho_u is not None and self.rho_u <= 0.0:
            raise ValueError("locality radius must be positive")


@dataclass
class SampleSet:
    """Stationary points found inside the box for one parameter value."""

    w: tuple
    points: np.ndarray  # (k, n), lexicographically sorted
    residuals: np.ndarray
    lambdas: np.ndarray
    branches: tuple  # "interior" | "boundary" per point
    warnings: tuple = ()

    def __len__(self):
        return self.points.shape[0]

    @property
    def is_empty(self) -> bool:
        return self.points.shape[0] == 0


# ---------------------------------------------------------------------------
# KKT residual
# ---------------------------------------------------------------------------

def _kkt_batch(derivs: ProblemDerivatives, X: np.ndarray, w, tol: ToleranceConfig):
    """Vectorized first-order residual over a batch of x points.

    Returns (residuals, lambdas, boundary_mask, mfcq_skipped).  Infeasible
    points get +inf; non-finite evaluations are treated as out of domain.
    """
    w = np.asarray(w, dtype=float)
    N = X.shape[1]
    F = derivs.F_batch(X, w)
    g = derivs.f0_grad_x_batch(X, w)
    thr = tol.tau_act * (1.0 + np.abs(F))
    res = np.full(N, np.inf)
    lam = np.zeros(N)

    bad = ~np.isfinite(F) | ~np.all(np.isfinite(g), axis=0)
    interior = (F < -thr) & ~bad
    if np.any(interior):
        res[interior] = np.linalg.norm(g[:, interior], axis=0)

    boundary = (np.abs(F) <= thr) & ~bad
    skipped = 0
    if np.any(boundary):
        gF = derivs.F_grad_x_batch(X, w)
        gg = np.sum(gF * gF, axis=0)
        ok = boundary & np.all(np.isfinite(gF), axis=0) & (gg > tol.tau_zero**2)
        skipped = int(np.sum(boundary & ~ok))
        lam_star = np.zeros(N)
        with np.errstate(invalid="ignore", divide="ignore"):
            lam_star[ok] = np.maximum(0.0, -np.sum(gF * g, axis=0)[ok] / gg[ok])
        if np.any(ok):
            res[ok] = np.linalg.norm(g[:, ok] + lam_star[ok] * gF[:, ok], axis=0)
            lam[ok] = lam_star[ok]
    boundary_mask = boundary
    return res, lam, boundary_mask, skipped


def kkt_residual(spec: ProblemSpec, x, w, tol: ToleranceConfig = ToleranceConfig()) -> float:
    """First-order residual of the stationarity system at (x, w).

    +inf encodes infeasibility (F > 0) and out-of-domain evaluations; at a
    boundary point the residual minimizes ||grad f0 + lam grad F|| over
    lam >= 0 in closed form.
    """
    derivs = problem_derivatives(spec)
    X = np.asarray(x, dtype=float).reshape(-1, 1)
    try:
        res, _, _, _ = _kkt_batch(derivs, X, w, tol)
    except DomainError:
        return math.inf
    return float(res[0])


# ---------------------------------------------------------------------------
# Batched damped Newton refinement
# ---------------------------------------------------------------------------

def _pinv_step(J: np.ndarray, G: np.ndarray) -> np.ndarray:
    # Least-squares Newton step, batched; singular Jacobians yield short steps.
    return -np.einsum("nij,nj->ni", np.linalg.pinv(J), G)


class _Refiner:
    """Damped Newton on the interior or boundary branch, batched over seeds."""

    def __init__(self, derivs, w, grid: GridSpec, tol: ToleranceConfig, center: np.ndarray):
        self.derivs = derivs
        self.w = np.asarray(w, dtype=float)
        self.grid = grid
        self.tol = tol
        self.center = center
        self.n = derivs.spec.n

    def _residual(self, Zc: np.ndarray, branch: str):
        """Branch system values over a (k, m) subset; returns (G, ||G||)."""
        d = self.derivs
        X = Zc[:, : self.n].T
        W = d.param_rows(self.w, X.shape[1])
        g = d.eval_rows(d.f0x, X, W)
        if branch == "interior":
            G = g.T
        else:
            lam = Zc[:, self.n]
            gF = d.eval_rows(d.Fx, X, W)
            F = d.eval_rows([d.spec.F], X, W)[0]
            G = np.concatenate([(g + lam[None, :] * gF).T, F[:, None]], axis=1)
        G = np.where(np.isfinite(G), G, 1e30)
        return G, np.linalg.norm(G, axis=1)

    def _jacobian(self, Zc: np.ndarray, branch: str) -> np.ndarray:
        d = self.derivs
        n = self.n
        X = Zc[:, : self.n].T
        W = d.param_rows(self.w, X.shape[1])
        H = d.hess_rows(d.f0xx, X, W)
        if branch == "interior":
            return np.where(np.isfinite(H), H, 0.0)
        lam = Zc[:, self.n]
        H = H + lam[:, None, None] * d.hess_rows(d.Fxx, X, W)
        gF = d.eval_rows(d.Fx, X, W).T
        J = np.zeros((Zc.shape[0], n + 1, n + 1))
        J[:, :n, :n] = H
        J[:, :n, n] = gF
        J[:, n, :n] = gF
        return np.where(np.isfinite(J), J, 0.0)

    def run(self, seeds: np.ndarray, branch: str):
        """Refine seeds (k, n); returns (points, lambdas, converged_mask)."""
        if seeds.size == 0:
            return np.empty((0, self.n)), np.empty(0), np.zeros(0, dtype=bool)
        N = seeds.shape[0]
        if branch == "interior":
            Z = seeds.copy()
        else:
            X = seeds.T
            W = self.derivs.param_rows(self.w, N)
            g = self.derivs.eval_rows(self.derivs.f0x, X, W)
            gF = self.derivs.eval_rows(self.derivs.Fx, X, W)
            gg = np.sum(gF * gF, axis=0)
            with np.errstate(invalid="ignore", divide="ignore"):
                lam0 = np.where(gg > 0, np.maximum(0.0, -np.sum(gF * g, axis=0) / gg), 0.0)
            lam0 = np.where(np.isfinite(lam0), lam0, 0.0)
            Z = np.concatenate([seeds, lam0[:, None]], axis=1)

        settled = np.zeros(N, dtype=bool)
        kill_radius = 1.5 * self.grid.r_x

        _, rnorm = self._residual(Z, branch)
        for _ in range(self.grid.newton_cap):
            # Iterate to stall, not to an absolute bar: very flat residual
            # landscapes need machine-level resolution to locate the root.
            active = np.flatnonzero(~settled & (rnorm > 0.0))
            if active.size == 0:
                break
            Za = Z[active]
            Ga, base = self._residual(Za, branch)
            J = self._jacobian(Za, branch)
            step = _pinv_step(J, Ga)

            # Vectorized backtracking on the residual norm, subset only.
            alpha = np.ones(active.size)
            cand = Za + alpha[:, None] * step
            _, rn_new = self._residual(cand, branch)
            for _ in range(10):
                worse = rn_new > (1.0 - 1e-4 * alpha) * base
                if not np.any(worse):
                    break
                alpha[worse] *= 0.5
                cand[worse] = Za[worse] + alpha[worse, None] * step[worse]
                _, rn_w = self._residual(cand[worse], branch)
                rn_new[worse] = rn_w

            stalled = (rn_new >= base * (1.0 - 1e-12)) | (
                np.linalg.norm(alpha[:, None] * step, axis=1)
                <= 1e-15 * (1.0 + np.linalg.norm(Za, axis=1))
            )
            moved = ~stalled
            Z[active[moved]] = cand[moved]
            rnorm[active[moved]] = rn_new[moved]
            settled[active[stalled]] = True
            escaped = (
                np.max(np.abs(Z[active][:, : self.n] - self.center[None, :]), axis=1)
                > kill_radius
            )
            settled[active[escaped]] = True

        points = Z[:, : self.n]
        lams = Z[:, self.n] if branch == "boundary" else np.zeros(N)
        return points, lams, rnorm <= max(self.grid.tau_newton, ACCEPT_RESIDUAL)


# ---------------------------------------------------------------------------
# Stationary set sampling
# ---------------------------------------------------------------------------

def _build_grid(center: np.ndarray, grid: GridSpec, n: int) -> np.ndarray:
    m = grid.resolve_points(n)
    axes = [center[i] + np.linspace(-grid.r_x, grid.r_x, m) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.vstack([a.ravel() for a in mesh])  # (n, m^n)


def _local_minima(res: np.ndarray, n: int, m: int) -> np.ndarray:
    """Indices of grid points whose residual is <= every axis neighbor's."""
    finite = np.isfinite(res)
    if n == 1:
        ok = finite.copy()
        ok[1:] &= res[1:] <= res[:-1]
        ok[:-1] &= res[:-1] <= res[1:]
        return np.flatnonzero(ok)
    R = res.reshape(m, m)
    ok = np.isfinite(R)
    ok[1:, :] &= R[1:, :] <= R[:-1, :]
    ok[:-1, :] &= R[:-1, :] <= R[1:, :]
    ok[:, 1:] &= R[:, 1:] <= R[:, :-1]
    ok[:, :-1] &= R[:, :-1] <= R[:, 1:]
    return np.flatnonzero(ok.ravel())


def _with_neighbors(idx: np.ndarray, n: int, m: int) -> np.ndarray:
    if idx.size == 0:
        return idx
    if n == 1:
        out = np.concatenate([idx, idx - 1, idx + 1])
        return np.unique(out[(out >= 0) & (out < m)])
    rows, cols = idx // m, idx % m
    parts = [idx]
    for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        r, c = rows + dr, cols + dc
        keep = (r >= 0) & (r < m) & (c >= 0) & (c < m)
        parts.append(r[keep] * m + c[keep])
    return np.unique(np.concatenate(parts))


def sample_stationary_set(
    spec: ProblemSpec,
    w,
    grid: GridSpec = GridSpec(),
    tol: ToleranceConfig = ToleranceConfig(),
    center=None,
) -> SampleSet:
    """Stationary points of the problem at parameter ``w`` inside the box.

    The box has radius ``grid.r_x`` around ``center`` (the reference x, or
    the origin when omitted).  Grid points that already meet the acceptance
    residual are kept as-is (degenerate stationary manifolds stay fully
    sampled); local minima of the residual field and their neighbors are
    refined by damped Newton on both the interior and the boundary branch.
    Accepted points satisfy the first-order residual bound, carry
    lam >= -tau_zero on the boundary branch, and are deduplicated within
    half a grid spacing.
    """
    n = spec.n
    if n > 2:
        raise DimensionMismatch("stationary set sampling supports n <= 2")
    derivs = problem_derivatives(spec)
    w = np.asarray(w, dtype=float)
    if w.shape[0] != spec.d:
        raise DimensionMismatch(f"parameter has {w.shape[0]} entries, expected {spec.d}")
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    if center.shape[0] != n:
        raise DimensionMismatch(f"center has {center.shape[0]} entries, expected {n}")
    return _sample_impl(derivs, w, center, grid, tol)


def _sample_impl(
    derivs: ProblemDerivatives,
    w: np.ndarray,
    center: np.ndarray,
    grid: GridSpec,
    tol: ToleranceConfig,
) -> SampleSet:
    spec = derivs.spec
    n = spec.n
    m = grid.resolve_points(n)
    spacing = grid.spacing(n)
    X = _build_grid(center, grid, n)
    res, lam_grid, boundary_mask, _ = _kkt_batch(derivs, X, w, tol)

    cand_pts = []
    cand_res = []
    cand_lam = []
    warn: list[str] = []

    direct = np.flatnonzero(res <= ACCEPT_RESIDUAL)
    if direct.size:
        cand_pts.append(X[:, direct].T)
        cand_res.append(res[direct])
        cand_lam.append(np.where(boundary_mask[direct], lam_grid[direct], 0.0))

    seeds_idx = _with_neighbors(_local_minima(res, n, m), n, m)
    seeds_idx = seeds_idx[np.isfinite(res[seeds_idx])]
    if seeds_idx.size > 256:
        # Large seed sets are residual plateaus; the direct-accept path above
        # keeps the manifold itself, so refining a stride subsample suffices.
        seeds_idx = seeds_idx[:: (seeds_idx.size + 255) // 256]
    n_seeds = seeds_idx.size
    n_diverged = 0
    if n_seeds:
        seeds = X[:, seeds_idx].T
        refiner = _Refiner(derivs, w, grid, tol, center)
        produced = np.zeros(n_seeds, dtype=bool)
        for branch in ("interior", "boundary"):
            pts, lams, conv = refiner.run(seeds, branch)
            if not np.any(conv):
                continue
            pts, lams = pts[conv], lams[conv]
            final, _, bmask, _ = _kkt_batch(derivs, pts.T, w, tol)
            in_box = np.max(np.abs(pts - center[None, :]), axis=1) <= grid.r_x + spacing
            ok = (final <= ACCEPT_RESIDUAL) & in_box
            if branch == "boundary":
                ok &= lams >= -tol.tau_zero
            produced[np.flatnonzero(conv)[ok]] = True
            if np.any(ok):
                cand_pts.append(pts[ok])
                cand_res.append(final[ok])
                cand_lam.append(np.where(bmask[ok], np.maximum(lams[ok], 0.0), 0.0))
        seed_ok = produced | (res[seeds_idx] <= ACCEPT_RESIDUAL)
        n_diverged = int(np.sum(~seed_ok))
        if n_seeds and n_diverged > 0.1 * n_seeds:
            msg = (
                f"Newton refinement diverged for {n_diverged}/{n_seeds} seeds; "
                "the grid may be too coarse"
            )
            warn.append(msg)
            _warnings.warn(msg, GridTooCoarse, stacklevel=2)

    if not cand_pts:
        empty = np.empty((0, n))
        return SampleSet(tuple(w), empty, np.empty(0), np.empty(0), (), tuple(warn))

    pts = np.vstack(cand_pts)
    rs = np.concatenate(cand_res)
    ls = np.concatenate(cand_lam)

    # Deduplicate within spacing/2: bucket to half-spacing cells, keep the
    # smallest-residual representative of each cell, deterministically.
    order = np.lexsort(tuple(pts[:, i] for i in reversed(range(n))) + (rs,))
    pts, rs, ls = pts[order], rs[order], ls[order]
    cells = np.floor((pts - (center - grid.r_x)[None, :]) / (spacing / 2.0) + 0.5).astype(int)
    keep_idx = {}
    for i in range(pts.shape[0]):
        key = tuple(cells[i])
        j = keep_idx.get(key)
        if j is None or rs[i] < rs[j]:
            keep_idx[key] = i
    keep = sorted(keep_idx.values())
    pts, rs, ls = pts[keep], rs[keep], ls[keep]

    order = np.lexsort(tuple(pts[:, i] for i in reversed(range(n))))
    pts, rs, ls = pts[order], rs[order], ls[order]
    Fv = derivs.F_batch(pts.T, w)
    thr = tol.tau_act * (1.0 + np.abs(Fv))
    branches = tuple("boundary" if abs(f) <= t else "interior" for f, t in zip(Fv, thr))
    ls = np.where([b == "boundary" for b in branches], ls, 0.0)
    return SampleSet(tuple(w), pts, rs, ls, branches, tuple(warn))


# ---------------------------------------------------------------------------
# Aubin probe
# ---------------------------------------------------------------------------

@dataclass
class LevelStats:
    delta: float
    n_pairs: int
    n_ratio_pairs: int
    worst_ratio: float | None
    empty_value_events: int
    worst_pair: dict | None

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "n_pairs": self.n_pairs,
            "n_ratio_pairs": self.n_ratio_pairs,
            "worst_ratio": self.worst_ratio,
            "empty_value_events": self.empty_value_events,
            "worst_pair": self.worst_pair,
        }


@dataclass
class ProbeReport:
    """Evidence about the Lipschitz-like property gathered by sampling.

    flag semantics: Violation when per-level worst ratios grow by at least
    the ``growth`` factor across every consecutive radius level and the
    finest worst ratio exceeds ``blowup``, or when an empty-value event
    (perturbed set nonempty near x while the base set vanished from the box)
    occurs at every level; Consistent when no events occur and all worst
    ratios stay within 10x the coarsest-level median (or under the numeric
    floor); otherwise Inconclusive.
    """

    flag: str
    flag_reason: str
    levels: list
    baseline_median: float | None
    seed: int
    delta0: float
    rho_u: float
    growth: float
    blowup: float
    ratio_floor: float
    warnings: tuple = ()
    samples: list | None = None

    def to_dict(self) -> dict:
        return {
            "flag": self.flag,
            "flag_reason": self.flag_reason,
            "levels": [lv.to_dict() for lv in self.levels],
            "baseline_median": self.baseline_median,
            "seed": self.seed,
            "delta0": self.delta0,
            "rho_u": self.rho_u,
            "growth_threshold": self.growth,
            "blowup_threshold": self.blowup,
            "ratio_floor": self.ratio_floor,
            "warnings": list(self.warnings),
        }


def _frac(v: float) -> float:
    return v - math.floor(v)


def _directions(d: int, count: int, seed: int) -> list:
    if d == 1:
        start = seed % 2
        return [np.array([1.0 if (i + start) % 2 == 0 else -1.0]) for i in range(count)]
    offset = _frac(seed * 0.321750554396642)
    dirs = []
    for i in range(count):
        theta = 2.0 * math.pi * _frac((i + 1) * _GOLDEN + offset)
        dirs.append(np.array([math.cos(theta), math.sin(theta)]))
    return dirs


def _relative_radii(level: int, samples: int) -> list:
    # Radial ladder that deepens with the level: a divergent distance ratio
    # then grows by a fixed factor per level, while a Lipschitz map stays flat.
    ladder = [2.0 ** (-j) for j in range(5, 4 * level + 9)]
    bulk = [(i + 1) / 16.0 for i in range(16)]
    filler = [
        1.0 / 16.0 + (15.0 / 16.0) * _frac((t + 1) * _PLASTIC)
        for t in range(max(0, samples - len(ladder) - len(bulk)))
    ]
    return (ladder + bulk + filler)[:samples]


def _set_distances(xps: np.ndarray, target: SampleSet, polisher, grid: GridSpec) -> np.ndarray:
    """Distance from each row of xps to the target stationary set.

    Uses the sampled points plus a local Newton polish started from each
    query point; grid-only distances overestimate by up to half the spacing.
    """
    dists = np.full(xps.shape[0], np.inf)
    if not target.is_empty:
        diff = xps[:, None, :] - target.points[None, :, :]
        dists = np.min(np.linalg.norm(diff, axis=2), axis=1)
    for branch in ("interior", "boundary"):
        pts, lams, conv = polisher.run(xps.copy(), branch)
        if not np.any(conv):
            continue
        final, _, _, _ = _kkt_batch(polisher.derivs, pts.T, polisher.w, polisher.tol)
        ok = conv & (final <= ACCEPT_RESIDUAL)
        if branch == "boundary":
            ok &= lams >= -polisher.tol.tau_zero
        ok &= np.max(np.abs(pts - polisher.center[None, :]), axis=1) <= grid.r_x + grid.spacing(polisher.n)
        cand = np.linalg.norm(pts - xps, axis=1)
        dists = np.where(ok, np.minimum(dists, cand), dists)
    return dists


def aubin_probe(
    spec: ProblemSpec,
    point: EvalPoint,
    cfg: ProbeConfig = ProbeConfig(),
    grid: GridSpec = GridSpec(),
    tol: ToleranceConfig = ToleranceConfig(),
    keep_samples: bool = False,
) -> ProbeReport:
    """Empirically probe the Lipschitz-like inclusion around (w, x).

    For each radius level, parameters are drawn deterministically around the
    reference w (bulk annulus plus deepening radial ladder, both paired with
    the reference itself and cross-paired); for every ordered pair (base,
    perturbed) the one-sided worst ratio

        max over x' in S(perturbed) near x of d(x', S(base)) / ||perturbed - base||

    is recorded.  See ProbeReport for the flag semantics.
    """
    if spec.n > 2 or spec.d > 2:
        raise DimensionMismatch("the probe supports n <= 2 and d <= 2")
    derivs = problem_derivatives(spec)
    x_center, w_bar = point.arrays()
    rho_u = cfg.rho_u if cfg.rho_u is not None else grid.r_x / 2.0
    # The distance polish only needs quadratic-convergent corrections.
    polish_grid = dataclasses.replace(grid, newton_cap=min(grid.newton_cap, 10))

    cache: dict = {}
    order: list = []

    def get_set(wv: np.ndarray) -> SampleSet:
        key = tuple(float(v) for v in wv)
        if key not in cache:
            cache[key] = _sample_impl(derivs, np.asarray(wv, dtype=float), x_center, grid, tol)
            order.append(cache[key])
        return cache[key]

    levels: list[LevelStats] = []
    level0_ratios: list[float] = []
    warn_seen: list[str] = []

    for k in range(cfg.levels):
        delta = cfg.delta0 * 2.0 ** (-k)
        radii = _relative_radii(k, cfg.samples)
        dirs = _directions(spec.d, len(radii), cfg.seed + k)
        draws = [w_bar + delta * r * u for r, u in zip(radii, dirs)]

        pairs = []
        for p in draws:
            pairs.append((w_bar, p))
            pairs.append((p, w_bar))
        for i in range(0, len(draws) - 1, 4):
            pairs.append((draws[i], draws[i + 1]))
            pairs.append((draws[i + 1], draws[i]))

        n_ratio_pairs = 0
        events = 0
        worst = None
        worst_pair = None
        for base, pert in pairs:
            dist_w = float(np.linalg.norm(np.asarray(pert) - np.asarray(base)))
            if dist_w == 0.0:
                continue
            S_pert = get_set(pert)
            if S_pert.is_empty:
                continue
            near = S_pert.points[
                np.linalg.norm(S_pert.points - x_center[None, :], axis=1) <= rho_u
            ]
            if near.shape[0] == 0:
                continue
            S_base = get_set(base)
            if S_base.is_empty:
                events += 1
                if worst_pair is None:
                    worst_pair = {
                        "w_base": [float(v) for v in base],
                        "w_perturbed": [float(v) for v in pert],
                        "event": "empty_base_set",
                        "ratio": None,
                    }
                continue
            polisher = _Refiner(derivs, np.asarray(base, dtype=float), polish_grid, tol, x_center)
            dists = _set_distances(near, S_base, polisher, grid)
            ratios = dists / dist_w
            i_max = int(np.argmax(ratios))
            ratio = float(ratios[i_max])
            n_ratio_pairs += 1
            if k == 0:
                level0_ratios.append(ratio)
            if worst is None or ratio > worst:
                worst = ratio
                worst_pair = {
                    "w_base": [float(v) for v in base],
                    "w_perturbed": [float(v) for v in pert],
                    "x_point": [float(v) for v in near[i_max]],
                    "distance": float(dists[i_max]),
                    "ratio": ratio,
                }
        levels.append(
            LevelStats(delta, len(pairs), n_ratio_pairs, worst, events, worst_pair)
        )

    for s in order:
        for msg in s.warnings:
            if msg not in warn_seen:
                warn_seen.append(msg)

    significant = [r for r in level0_ratios if r > cfg.ratio_floor]
    baseline = float(np.median(significant)) if significant else None

    worsts = [lv.worst_ratio for lv in levels]
    events_every_level = all(lv.empty_value_events > 0 for lv in levels)
    growth_fires = (
        all(wr is not None for wr in worsts)
        and all(worsts[i + 1] >= cfg.growth * worsts[i] for i in range(len(worsts) - 1))
        and worsts[-1] > cfg.blowup
    )

    if events_every_level:
        flag = FLAG_VIOLATION
        reason = "empty-value events at every radius level: the base stationary set vanishes from the box while the perturbed one persists"
    elif growth_fires:
        flag = FLAG_VIOLATION
        reason = (
            f"worst distance ratios grew by >= {cfg.growth}x across every consecutive "
            f"radius level and reached {worsts[-1]:.3g} > {cfg.blowup} at the finest level"
        )
    else:
        total_events = sum(lv.empty_value_events for lv in levels)
        measured = [wr for wr in worsts if wr is not None]
        bound = 10.0 * baseline if baseline is not None else cfg.ratio_floor
        consistent = (
            total_events == 0
            and len(measured) > 0
            and all(wr <= max(bound, cfg.ratio_floor) for wr in measured)
        )
        if consistent:
            flag = FLAG_CONSISTENT
            reason = (
                "all worst ratios stay within 10x the coarsest-level median"
                if baseline is not None
                else "all measured ratios are below the numeric floor"
            )
        else:
            flag = FLAG_INCONCLUSIVE
            reason = "ratios neither stayed bounded near the baseline nor grew consistently past the thresholds"

    return ProbeReport(
        flag=flag,
        flag_reason=reason,
        levels=levels,
        baseline_median=baseline,
        seed=cfg.seed,
        delta0=cfg.delta0,
        rho_u=rho_u,
        growth=cfg.growth,
        blowup=cfg.blowup,
        ratio_floor=cfg.ratio_floor,
        warnings=tuple(warn_seen),
        samples=order if keep_samples else None,
    )


def write_samples_csv(samples, path, n: int, d: int):
    """Dump sampled stationary sets: w-components, x-components, residual,
    branch, lambda; one row per accepted point."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [f"w{k + 1}" for k in range(d)]
            + [f"x{i + 1}" for i in range(n)]
            + ["residual", "branch", "lambda"]
        )
        for s in samples:
            for i in range(len(s)):
                writer.writerow(
                    [repr(v) for v in s.w]
                    + [repr(float(v)) for v in s.points[i]]
                    + [repr(float(s.residuals[i])), s.branches[i], repr(float(s.lambdas[i]))]
                )
