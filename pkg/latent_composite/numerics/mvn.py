# latent_composite/numerics/mvn.py
"""
Gaussian rectangle probabilities (d <= 4) and the conditional law of the two
discrete latent outcomes given the two continuous ones.

Above two dimensions the probability is computed with Genz's separation of
variables on a variable-reordered Cholesky factor, integrated with several
independently scrambled Sobol sequences; the spread across scrambles gives the
error estimate.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

from latent_composite.numerics.bvn import phi2_rectangle
from latent_composite.numerics.linalg import cholesky

DEFAULT_POINTS = 20_000
DEFAULT_SHIFTS = 8
DEFAULT_SEED = 20240607

# rows * points evaluated at once
_CHUNK = 2_000_000
_U_LO = np.finfo(float).tiny
_U_HI = 1.0 - np.finfo(float).eps / 2.0


class Rectangle(NamedTuple):
    lower: np.ndarray
    upper: np.ndarray


class CondNormal(NamedTuple):
    mu_cond: np.ndarray
    sigma_cond: np.ndarray


class MvnResult(NamedTuple):
    probability: float | np.ndarray
    error: float | np.ndarray
    n_points: int


def _sigma_rho(p):
    if hasattr(p, "sigma1"):
        return (p.sigma1, p.sigma2), tuple(p.rho)
    return tuple(p.sigma), tuple(p.rho)


def conditional_34(p, y1, y2, mu1, mu2, mu3, mu4) -> CondNormal:
    """
    Mean and covariance of (Y3*, Y4*) given Y1 = y1, Y2 = y2.

    `p` is a LatentParams or the array view from `core.params.unpack`.
    Scalars or equal-length arrays are accepted; mu_cond has a trailing axis of 2.
    """
    (s1, s2), (r12, r13, r14, r23, r24, r34) = _sigma_rho(p)
    if not abs(r12) < 1.0:
        raise ValueError("conditioning requires |rho12| < 1")
    den = 1.0 - r12 * r12

    z1 = (np.asarray(y1, dtype=float) - mu1) / s1
    z2 = (np.asarray(y2, dtype=float) - mu2) / s2
    m3 = mu3 + ((r13 - r12 * r23) * z1 + (r23 - r12 * r13) * z2) / den
    m4 = mu4 + ((r14 - r12 * r24) * z1 + (r24 - r12 * r14) * z2) / den

    v33 = 1.0 - (r13 * r13 + r23 * r23 - 2.0 * r12 * r13 * r23) / den
    v44 = 1.0 - (r14 * r14 + r24 * r24 - 2.0 * r12 * r14 * r24) / den
    v34 = r34 - (r13 * r14 + r23 * r24 - r12 * (r13 * r24 + r14 * r23)) / den

    return CondNormal(
        mu_cond=np.stack(np.broadcast_arrays(m3, m4), axis=-1),
        sigma_cond=np.array([[v33, v34], [v34, v44]]),
    )


def _truncated_mean(lo, hi):
    """Mean of a standard normal truncated to (lo, hi)."""
    mass = ndtr(hi) - ndtr(lo)
    dens_lo = 0.0 if math.isinf(lo) else math.exp(-lo * lo / 2.0)
    dens_hi = 0.0 if math.isinf(hi) else math.exp(-hi * hi / 2.0)
    if mass > 1e-300:
        return (dens_lo - dens_hi) / (math.sqrt(2.0 * math.pi) * mass)
    if math.isinf(lo):
        return hi
    if math.isinf(hi):
        return lo
    return (lo + hi) / 2.0


def greedy_order(lower: np.ndarray, upper: np.ndarray, sigma: np.ndarray) -> list[int]:
    """
    Integrate the tightest (least probable) interval first, conditioning each
    later choice on the expected values of the variables already placed.
    """
    d = len(lower)
    order: list[int] = []
    expected: list[float] = []
    remaining = list(range(d))
    while remaining:
        best, best_mass, best_state = None, math.inf, None
        for i in remaining:
            if order:
                s = sigma[np.ix_(order, order)]
                c = sigma[i, order]
                w = np.linalg.solve(s, c)
                var = max(sigma[i, i] - c @ w, 1e-300)
                mean = float(w @ np.asarray(expected))
            else:
                var, mean = sigma[i, i], 0.0
            sd = math.sqrt(var)
            lo = (lower[i] - mean) / sd
            hi = (upper[i] - mean) / sd
            mass = ndtr(hi) - ndtr(lo)
            if mass < best_mass:
                best, best_mass, best_state = i, mass, (mean, sd, lo, hi)
        mean, sd, lo, hi = best_state
        order.append(best)
        expected.append(mean + sd * _truncated_mean(lo, hi))
        remaining.remove(best)
    return order


def _sobol_sets(dim: int, n_points: int, n_shifts: int, seed) -> tuple[list[np.ndarray], int]:
    m = max(int(math.ceil(math.log2(max(n_points, 2)))), 1)
    rng = np.random.default_rng(seed)
    sets = [qmc.Sobol(d=dim, scramble=True, seed=rng).random_base2(m) for _ in range(n_shifts)]
    return sets, 2**m


def _sov_means(a: np.ndarray, b: np.ndarray, chol: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Average separation-of-variables integrand per row of the (m, d) bounds."""
    m, d = a.shape
    n = u.shape[0]
    e = ndtr(a[:, 0] / chol[0, 0])
    f = ndtr(b[:, 0] / chol[0, 0])
    width = np.repeat((f - e)[:, None], n, axis=1)
    y = np.empty((d - 1, m, n))
    lo, span = e[:, None], (f - e)[:, None]
    for i in range(1, d):
        y[i - 1] = ndtri(np.clip(lo + u[None, :, i - 1] * span, _U_LO, _U_HI))
        shift = np.tensordot(chol[i, :i], y[:i], axes=(0, 0))
        e = ndtr((a[:, i, None] - shift) / chol[i, i])
        f = ndtr((b[:, i, None] - shift) / chol[i, i])
        span = f - e
        lo = e
        width = width * span
    return width.mean(axis=1)


def mvn_batch(
    lower,
    upper,
    mu,
    sigma,
    n_points: int = DEFAULT_POINTS,
    n_shifts: int = DEFAULT_SHIFTS,
    seed=DEFAULT_SEED,
    order: Optional[Sequence[int]] = None,
) -> MvnResult:
    """
    P(lower < Y <= upper) for Y ~ N(mu, sigma), one row per rectangle.

    All rows share sigma, one variable order and the same quasi-random points,
    so differences between rows (or between calls with the same seed) carry
    common random numbers.
    """
    sigma = np.asarray(sigma, dtype=float)
    d = sigma.shape[0]
    if d > 4:
        raise ValueError("rectangle probabilities are limited to d <= 4")
    lower = np.atleast_2d(np.asarray(lower, dtype=float))
    upper = np.atleast_2d(np.asarray(upper, dtype=float))
    mu = np.asarray(mu, dtype=float)
    lower, upper, mu = np.broadcast_arrays(lower, upper, np.atleast_2d(mu))
    if np.any(lower > upper):
        raise ValueError("rectangle lower bound exceeds upper bound")
    cholesky(sigma)

    a = lower - mu
    b = upper - mu
    rows = a.shape[0]
    prob = np.zeros(rows)
    err = np.zeros(rows)
    empty = np.any(a >= b, axis=1)

    # coordinates unbounded on every row integrate out exactly
    keep = [j for j in range(d) if not (np.all(np.isneginf(a[:, j])) and np.all(np.isposinf(b[:, j])))]
    if order is not None:
        keep = [j for j in order if j in keep]
    a, b = a[:, keep], b[:, keep]
    sub = sigma[np.ix_(keep, keep)]
    k = len(keep)
    live = ~empty

    if k == 0:
        prob[live] = 1.0
        return MvnResult(prob, err, 0)
    sd = np.sqrt(np.diag(sub))
    if k == 1:
        prob[live] = ndtr(b[live, 0] / sd[0]) - ndtr(a[live, 0] / sd[0])
        return MvnResult(np.clip(prob, 0.0, 1.0), err, 0)
    if k == 2:
        r = sub[0, 1] / (sd[0] * sd[1])
        prob[live] = phi2_rectangle(
            a[live, 0] / sd[0], b[live, 0] / sd[0], a[live, 1] / sd[1], b[live, 1] / sd[1], r
        )
        return MvnResult(prob, err, 0)

    if order is None:
        perm = greedy_order(np.median(a[live], axis=0), np.median(b[live], axis=0), sub) if live.any() else list(range(k))
    else:
        perm = list(range(k))
    a, b = a[:, perm], b[:, perm]
    chol = cholesky(sub[np.ix_(perm, perm)])

    sets, n_per = _sobol_sets(k - 1, n_points, n_shifts, seed)
    idx = np.flatnonzero(live)
    estimates = np.zeros((n_shifts, idx.size))
    step = max(1, _CHUNK // n_per)
    for s, u in enumerate(sets):
        for start in range(0, idx.size, step):
            rows_ = idx[start : start + step]
            estimates[s, start : start + rows_.size] = _sov_means(a[rows_], b[rows_], chol, u)

    prob[idx] = estimates.mean(axis=0)
    if n_shifts > 1:
        err[idx] = estimates.std(axis=0, ddof=1) / math.sqrt(n_shifts)
    return MvnResult(np.clip(prob, 0.0, 1.0), err, n_per * n_shifts)


def mvn_rectangle(rect: Rectangle, mu, sigma, **kwargs) -> MvnResult:
    res = mvn_batch(rect.lower, rect.upper, mu, sigma, **kwargs)
    return MvnResult(float(res.probability[0]), float(res.error[0]), res.n_points)


def phi4(upper, mu, sigma, **kwargs) -> MvnResult:
    """P(Y <= upper) for Y ~ N(mu, sigma) in up to four dimensions."""
    upper = np.asarray(upper, dtype=float)
    return mvn_rectangle(Rectangle(np.full(upper.shape, -np.inf), upper), mu, sigma, **kwargs)


def phi4_batch(upper, mu, sigma, **kwargs) -> MvnResult:
    upper = np.atleast_2d(np.asarray(upper, dtype=float))
    return mvn_batch(np.full(upper.shape, -np.inf), upper, mu, sigma, **kwargs)


def batch_order(lower, upper, mu, sigma) -> list[int]:
    """
    Variable order mvn_batch would pick for these rectangles, as original
    coordinate indices. Passing it back as `order` freezes the order across
    nearby parameter values.
    """
    sigma = np.asarray(sigma, dtype=float)
    lower = np.atleast_2d(np.asarray(lower, dtype=float))
    upper = np.atleast_2d(np.asarray(upper, dtype=float))
    lower, upper, mu = np.broadcast_arrays(lower, upper, np.atleast_2d(np.asarray(mu, dtype=float)))
    a, b = lower - mu, upper - mu
    d = sigma.shape[0]
    keep = [j for j in range(d) if not (np.all(np.isneginf(a[:, j])) and np.all(np.isposinf(b[:, j])))]
    if len(keep) <= 2:
        return keep
    sub = sigma[np.ix_(keep, keep)]
    perm = greedy_order(np.median(a[:, keep], axis=0), np.median(b[:, keep], axis=0), sub)
    return [keep[i] for i in perm]
