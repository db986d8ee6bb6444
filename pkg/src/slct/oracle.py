"""Monte-Carlo estimators of the log canonical threshold of ``K`` near its center.

Two estimators share one sampling pass: uniform draws from the box
``[w* - rho, w* + rho]^d``.

* volume: ``log V(eps) = lam log eps + (theta - 1) log log(s/eps) + c`` with
  ``V(eps)`` the fraction of draws with ``K <= eps``;
* laplace: ``log Z(n) = -lam log n + (theta - 1) log log(s n) + c`` with
  ``Z(n)`` the sample mean of ``exp(-n K)``.

The constant ``s`` (``e**2`` times the largest K in the first block) does not
change the asymptotics; it makes both fits invariant under ``K -> c K``.
For monomials sampled in a box it is exactly the constant that appears in
the sublevel volume.

Fits are weighted least squares with weight equal to the hit count (volume)
or the effective sample size (laplace), the inverse of the approximate
variance of each log value.

By default the grid is placed where the asymptotic form holds: between the
K values of the ``min_hits``-th smallest draw and the ``max_fraction``
quantile.  An explicit grid may be given instead; points outside that window
are dropped.

Sampling runs in fixed blocks of :data:`BLOCK_ROWS` draws.  Block ``b`` uses
``SeedSequence(seed, spawn_key=(0, b))``, so the draws, and therefore every
estimate, do not depend on how many worker threads run the blocks.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errorfn import KEvaluator

DEFAULT_RADIUS = 0.5
DEFAULT_SAMPLES = 10**6
MIN_SAMPLES = 10**5
MIN_HITS = 100
MAX_FRACTION = 0.05
GRID_POINTS = 13
N_BOOT = 50
POOR_FIT_R2 = 0.95
BLOCK_ROWS = 1 << 16
#: draws with ``n_min * K`` above this carry weight below exp(-30) and are discarded
LAPLACE_CUTOFF = 30.0
#: the fixed-grid defaults (used only when a grid is requested explicitly)
DEFAULT_EPS_RANGE = (1e-8, 1e-2)
DEFAULT_N_RANGE = (1e2, 1e6)


class OracleError(RuntimeError):
    """Numerical failure of an estimator."""


class InsufficientHits(OracleError):
    def __init__(self, usable, needed=4):
        super().__init__(f"insufficient hits: {usable} usable grid points, need {needed}")
        self.usable = usable


@dataclass(frozen=True)
class LCTEstimate:
    """Result of a threshold regression.

    ``loglog_coef`` estimates ``theta - 1``; ``theta_hat`` is ``1 + loglog_coef``
    and is ``None`` when the two-regressor fit was rejected.  ``grid``,
    ``hits`` and ``log_values`` hold every grid point; ``used`` marks the
    ones that entered the fit.  For the laplace method ``hits`` is the
    effective sample size of the weights.
    """

    lambda_hat: float
    theta_hat: float | None
    stderr_lambda: float
    fit_r2: float
    samples_used: int
    method: str
    loglog_coef: float | None = None
    stderr_loglog: float | None = None
    grid: tuple = ()
    hits: tuple = ()
    log_values: tuple = ()
    used: tuple = ()
    seed: int | None = None
    radius: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def poor_fit(self) -> bool:
        return self.fit_r2 < POOR_FIT_R2

    def interval(self, k=2.0):
        return self.lambda_hat - k * self.stderr_lambda, self.lambda_hat + k * self.stderr_lambda

    def z_score(self, value) -> float:
        return (self.lambda_hat - float(value)) / self.stderr_lambda

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "lambdaHat": self.lambda_hat,
            "thetaHat": self.theta_hat,
            "stderrLambda": self.stderr_lambda,
            "loglogCoef": self.loglog_coef,
            "stderrLoglog": self.stderr_loglog,
            "fitR2": self.fit_r2,
            "poorFit": self.poor_fit,
            "samplesUsed": self.samples_used,
            "seed": self.seed,
            "radius": self.radius,
            "gridPointsUsed": int(sum(self.used)),
        }

    def diagnostics(self):
        """Rows ``(eps_or_n, hits, logV_or_logZ)`` for the used grid points."""
        return [(g, h, v) for g, h, v, u in zip(self.grid, self.hits, self.log_values, self.used) if u]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["eps_or_n", "hits", "logV_or_logZ"])
            for g, h, v in self.diagnostics():
                hits = int(h) if self.method == "volume" else repr(float(h))
                w.writerow([repr(float(g)), hits, repr(float(v))])


# -- sampling ---------------------------------------------------------------

def default_threads():
    env = os.environ.get("SLCT_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise ValueError("SLCT_THREADS must be a positive integer")
        return n
    return os.cpu_count() or 1


def _block_rng(seed, b):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0, b)))


def _sample_block(K, seed, b, n_rows, radius, cap):
    rng = _block_rng(seed, b)
    W = K.center + rng.uniform(-radius, radius, size=(n_rows, K.dimension))
    k = K.evaluate(W, cap)
    if np.isfinite(cap):
        k = k[k <= cap]
    if np.any(k < 0) or np.any(np.isnan(k)):
        raise OracleError(f"{K.name} returned negative or NaN values")
    return k


def sample_small_values(K: KEvaluator, n_samples, seed, radius, cap=np.inf, threads=None, skip=()):
    """Sorted K values at or below ``cap`` over all blocks except ``skip``."""
    n_blocks = -(-n_samples // BLOCK_ROWS)
    jobs = [b for b in range(n_blocks) if b not in skip]
    rows = [min(BLOCK_ROWS, n_samples - b * BLOCK_ROWS) for b in jobs]
    workers = min(threads or default_threads(), max(len(jobs), 1))
    if workers <= 1:
        parts = [_sample_block(K, seed, b, r, radius, cap) for b, r in zip(jobs, rows)]
    else:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda br: _sample_block(K, seed, br[0], br[1], radius, cap), zip(jobs, rows)))
    return np.concatenate(parts) if parts else np.empty(0)


def _collect(K, n_samples, seed, radius, threads, cap_from_quantile):
    """Sorted small K values and the log-log scale; caps come from a pilot.

    Block 0 is drawn first without a cap.  ``cap_from_quantile(pilot)``
    returns ``(cap, from_quantile)``; if a quantile-based cap turns out too
    small the pass is repeated without one.  The scale is ``e**2`` times the
    largest pilot value.
    """
    pilot = np.sort(sample_small_values(K, min(n_samples, BLOCK_ROWS), seed, radius, threads=1))
    scale = np.e ** 2 * float(pilot[-1])
    cap, quantile_cap = cap_from_quantile(pilot)
    rest = sample_small_values(K, n_samples, seed, radius, cap, threads, skip=(0,))
    ks = np.sort(np.concatenate([pilot[pilot <= cap], rest]))
    if quantile_cap and ks.size < int(MAX_FRACTION * n_samples):
        rest = sample_small_values(K, n_samples, seed, radius, np.inf, threads, skip=(0,))
        ks = np.sort(np.concatenate([pilot, rest]))
    return ks, scale


# -- regression -------------------------------------------------------------

def _wls(X, y, w):
    """Weighted least squares; returns (coef, weighted R^2)."""
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    resid = y - X @ coef
    ybar = float(w @ y) / float(w.sum())
    ss_tot = float(w @ (y - ybar) ** 2)
    r2 = 1.0 - float(w @ resid ** 2) / ss_tot if ss_tot > 0 else 1.0
    return coef, r2


def _adjusted(r2, n, p):
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)


def _choose_fit(x, ll, y, w):
    """Return (use_two, coef, r2).  ``coef`` is (slope, loglog) or (slope,)."""
    n = len(x)
    one = np.column_stack([x, np.ones(n)])
    c1, r1 = _wls(one, y, w)
    if ll is None or n < 4:
        return False, c1[:1], r1
    two = np.column_stack([x, ll, np.ones(n)])
    if np.linalg.matrix_rank(two) < 3:
        return False, c1[:1], r1
    c2, r2 = _wls(two, y, w)
    if _adjusted(r2, n, 2) <= _adjusted(r1, n, 1):
        return False, c1[:1], r1
    return True, c2[:2], r2


def _refit(x, ll, y, w, use_two):
    n = len(x)
    X = np.column_stack([x, ll, np.ones(n)]) if use_two else np.column_stack([x, np.ones(n)])
    coef, _ = _wls(X, y, w)
    return coef[:2] if use_two else coef[:1]


def _loglog(t):
    """log log t, or None when some t <= 1."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 1.0):
        return None
    return np.log(np.log(t))


def _finish(method, fit, boots, grid, hits, logs, used, n_samples, seed, radius):
    use_two, coef, r2 = _choose_fit(*fit)
    # model choice is repeated per resample so its variability enters the error
    lams = np.array([_choose_fit(*b)[1][0] for b in boots])
    se = float(lams.std(ddof=1)) if len(lams) > 1 else float("nan")
    beta = se_beta = None
    if use_two:
        beta = float(coef[1])
        betas = np.array([_refit(*b, True)[1] for b in boots if b[1] is not None])
        se_beta = float(betas.std(ddof=1)) if len(betas) > 1 else None
    return LCTEstimate(
        lambda_hat=max(float(coef[0]), 0.0),
        theta_hat=None if beta is None else 1.0 + beta,
        stderr_lambda=se,
        fit_r2=min(max(r2, 0.0), 1.0),
        samples_used=n_samples,
        method=method,
        loglog_coef=beta,
        stderr_loglog=se_beta,
        grid=tuple(float(g) for g in grid),
        hits=tuple(float(h) for h in hits),
        log_values=tuple(float(v) for v in logs),
        used=tuple(bool(u) for u in used),
        seed=seed,
        radius=radius,
    )


def _check_common(K, radius, n_samples, n_boot):
    if not isinstance(K, KEvaluator):
        raise TypeError("K must be a KEvaluator")
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    if n_boot < 2:
        raise ValueError("need at least 2 bootstrap resamples")


def _check_grid(grid, min_points, min_decades, what):
    grid = np.sort(np.asarray(grid, dtype=float))
    if grid.ndim != 1 or grid.size < min_points:
        raise ValueError(f"{what} grid needs at least {min_points} points")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError(f"{what} grid must be positive and strictly increasing")
    if np.log10(grid[-1] / grid[0]) < min_decades - 1e-9:
        raise ValueError(f"{what} grid must span at least {min_decades} decades")
    return grid


def _window(ks, n_samples, min_hits, max_fraction):
    top = int(max_fraction * n_samples)
    if top <= min_hits or ks.size < top:
        raise InsufficientHits(0)
    lo, hi = float(ks[min_hits - 1]), float(ks[top - 1])
    if lo <= 0.0:
        raise OracleError("K vanishes on a set of positive volume near the center")
    if not hi > lo:
        raise InsufficientHits(1)
    return lo, hi


def _boot_rng(seed):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1,)))


def _quantile_cap(factor, max_fraction):
    def pick(pilot):
        q = float(pilot[max(int(max_fraction * pilot.size) - 1, 0)])
        return factor * q, True
    return pick


# -- estimators -------------------------------------------------------------

def _volume_points(ks, scale, n_samples, eps, min_hits, max_fraction, n_points):
    if eps is None:
        lo, hi = _window(ks, n_samples, min_hits, max_fraction)
        eps = np.geomspace(lo, hi, n_points)
    cum = np.searchsorted(ks, eps, side="right")
    used = (cum >= min_hits) & (cum <= max_fraction * n_samples)
    if used.sum() < 4:
        raise InsufficientHits(int(used.sum()))
    logv = np.log(np.maximum(cum, 1) / n_samples)
    # var(log hits) is about 1/hits, so weight by hits
    return eps, cum, logv, used, (np.log(eps[used]), _loglog(scale / eps[used]), logv[used],
                                  cum[used].astype(float))


def _laplace_points(ks, scale, n_samples, ns, min_hits, max_fraction, n_points):
    if ns is None:
        lo, hi = _window(ks, n_samples, min_hits, max_fraction)
        ns = np.geomspace(1.0 / hi, 1.0 / lo, n_points)
    if not ks.size or ks[0] > LAPLACE_CUTOFF / ns[0]:
        raise InsufficientHits(0)
    z = np.empty(ns.size)
    ess = np.empty(ns.size)
    # ks is sorted, so the values that matter for each n form a prefix
    ends = np.searchsorted(ks, LAPLACE_CUTOFF / ns, side="right")
    for i, n in enumerate(ns):
        w = np.exp(-n * ks[:ends[i]])
        s = w.sum()
        z[i] = s / n_samples
        ess[i] = s * s / max(float(w @ w), 1e-300)
    used = (ess >= min_hits) & (z <= max_fraction)
    if used.sum() < 4:
        raise InsufficientHits(int(used.sum()))
    logz = np.log(np.maximum(z, 1e-300))
    return ns, ess, logz, used, (-np.log(ns[used]), _loglog(scale * ns[used]), logz[used], ess[used])


def _bootstrap(points, ks, n_samples, seed, n_boot):
    """Refit on resampled draws, repeating the grid placement each time.

    Only the retained small values matter, so a resample keeps a binomial
    number of them, drawn with replacement.
    """
    rng = _boot_rng(seed)
    out = []
    for _ in range(n_boot):
        m = rng.binomial(n_samples, ks.size / n_samples)
        kb = ks[np.sort(rng.integers(0, ks.size, m))]
        try:
            out.append(points(kb)[-1])
        except OracleError:
            continue
    if len(out) < max(2, n_boot // 2):
        raise OracleError(f"bootstrap failed: only {len(out)} of {n_boot} resamples had a usable grid")
    return out


def estimate_lct_volume(K: KEvaluator, radius=DEFAULT_RADIUS, eps_grid=None, n_samples=DEFAULT_SAMPLES,
                        seed=0, *, min_hits=MIN_HITS, max_fraction=MAX_FRACTION, n_boot=N_BOOT,
                        n_points=GRID_POINTS, threads=None) -> LCTEstimate:
    """Sublevel-volume estimate of the threshold of ``K`` at its center.

    Parameters
    ----------
    K : KEvaluator
    radius : float
        Half-width of the sampling box.
    eps_grid : array_like, optional
        Explicit levels (at least 8, spanning at least 4 decades).  Default:
        ``n_points`` geometric levels across the asymptotic window.
    n_samples : int
    seed : int
    min_hits, max_fraction : grid levels with fewer hits, or a larger hit
        fraction, are dropped.
    n_boot : int
        Bootstrap resamples for the standard error.

    Raises
    ------
    InsufficientHits
        Fewer than four levels survive.
    """
    _check_common(K, radius, n_samples, n_boot)
    if eps_grid is not None:
        eps = _check_grid(eps_grid, 8, 4, "eps")
        ks, scale = _collect(K, n_samples, seed, radius, threads, lambda p: (float(eps[-1]), False))
    else:
        eps = None
        ks, scale = _collect(K, n_samples, seed, radius, threads, _quantile_cap(4.0, max_fraction))

    def points(values):
        return _volume_points(values, scale, n_samples, eps, min_hits, max_fraction, n_points)

    grid, hits, logs, used, fit = points(ks)
    boots = _bootstrap(points, ks, n_samples, seed, n_boot)
    return _finish("volume", fit, boots, grid, hits, logs, used, n_samples, seed, radius)


def estimate_lct_laplace(K: KEvaluator, radius=DEFAULT_RADIUS, n_grid=None, n_samples=DEFAULT_SAMPLES,
                         seed=0, *, min_hits=MIN_HITS, max_fraction=MAX_FRACTION, n_boot=N_BOOT,
                         n_points=GRID_POINTS, threads=None) -> LCTEstimate:
    """Laplace-integral estimate of the threshold of ``K`` at its center.

    Same sampling, dropout and bootstrap rules as :func:`estimate_lct_volume`,
    with the hit count replaced by the effective sample size of
    ``exp(-n K)`` and the hit fraction by ``Z(n)``.  An explicit ``n_grid``
    must span at least 3 decades.
    """
    _check_common(K, radius, n_samples, n_boot)
    if n_grid is not None:
        ns = _check_grid(n_grid, 4, 3, "n")
        ks, scale = _collect(K, n_samples, seed, radius, threads, lambda p: (LAPLACE_CUTOFF / float(ns[0]), False))
    else:
        ns = None
        ks, scale = _collect(K, n_samples, seed, radius, threads, _quantile_cap(2.0 * LAPLACE_CUTOFF, max_fraction))

    def points(values):
        return _laplace_points(values, scale, n_samples, ns, min_hits, max_fraction, n_points)

    grid, hits, logs, used, fit = points(ks)
    boots = _bootstrap(points, ks, n_samples, seed, n_boot)
    return _finish("laplace", fit, boots, grid, hits, logs, used, n_samples, seed, radius)


def estimate_lct(K: KEvaluator, method="volume", **kwargs) -> LCTEstimate:
    if method == "volume":
        return estimate_lct_volume(K, **kwargs)
    if method == "laplace":
        return estimate_lct_laplace(K, **kwargs)
    raise ValueError(f"unknown method {method!r}; expected 'volume' or 'laplace'")
