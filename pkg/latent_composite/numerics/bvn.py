# latent_composite/numerics/bvn.py
"""
Standard bivariate normal distribution function.

Drezner-Wesolowsky / Genz recipe: Gauss-Legendre over the correlation integral
for moderate |r|, and the asymptotic expansion around |r| = 1 otherwise.
Every entry point is vectorized over broadcastable inputs.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtr, roots_legendre

_TWO_PI = 2.0 * np.pi
_HIGH_R = 0.925

_x, _w = roots_legendre(20)
# nodes on (0, 2), matching the half-interval layout of the reference routine
_NODES = 1.0 + _x
_WEIGHTS = _w


def _bvnu_moderate(h, k, r):
    hk = h * k
    hs = (h * h + k * k) / 2.0
    asr = np.arcsin(r) / 2.0
    sn = np.sin(asr[..., None] * _NODES)
    terms = np.exp((sn * hk[..., None] - hs[..., None]) / (1.0 - sn * sn))
    bvn = terms @ _WEIGHTS
    return bvn * asr / _TWO_PI + ndtr(-h) * ndtr(-k)


def _bvnu_high(h, k, r):
    k = np.where(r < 0, -k, k)
    hk = h * k

    as_ = (1.0 - r) * (1.0 + r)
    a = np.sqrt(as_)
    bs = (h - k) ** 2
    asr = -(bs / as_ + hk) / 2.0
    c = (4.0 - hk) / 8.0
    d = (12.0 - hk) / 80.0

    bvn = np.where(
        asr > -100,
        a * np.exp(asr) * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_),
        0.0,
    )
    b = np.sqrt(bs)
    tail = np.exp(-hk / 2.0) * np.sqrt(_TWO_PI) * ndtr(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0)
    bvn = np.where(hk > -100, bvn - tail, bvn)

    half = a / 2.0
    xs = (half[..., None] * _NODES) ** 2
    asr_q = -(bs[..., None] / xs + hk[..., None]) / 2.0
    keep = asr_q > -100
    sp = 1.0 + c[..., None] * xs * (1.0 + 5.0 * d[..., None] * xs)
    rs = np.sqrt(1.0 - xs)
    ep = np.exp(-(hk[..., None] / 2.0) * xs / (1.0 + rs) ** 2) / rs
    quad = np.where(keep, np.exp(np.where(keep, asr_q, 0.0)) * (sp - ep), 0.0) @ _WEIGHTS
    bvn = (half * quad - bvn) / _TWO_PI

    pos = bvn + ndtr(-np.maximum(h, k))
    gap = np.where(h < 0, ndtr(k) - ndtr(h), ndtr(-h) - ndtr(-k))
    neg = np.where(h >= k, -bvn, gap - bvn)
    return np.where(r > 0, pos, neg)


def bvnu(h, k, r):
    """P(X > h, Y > k) for a standard bivariate normal with correlation r."""
    h, k, r = np.broadcast_arrays(
        np.asarray(h, dtype=float), np.asarray(k, dtype=float), np.asarray(r, dtype=float)
    )
    if np.any(np.abs(r) >= 1.0) or np.any(np.isnan(r)):
        raise ValueError("correlation must lie strictly inside (-1, 1)")

    out = np.empty(h.shape, dtype=float)
    h_inf, k_inf = np.isinf(h), np.isinf(k)

    # infinite limits are resolved analytically
    zero = (h == np.inf) | (k == np.inf)
    both = (h == -np.inf) & (k == -np.inf)
    only_h = (h == -np.inf) & ~k_inf
    only_k = (k == -np.inf) & ~h_inf
    out[zero] = 0.0
    out[both & ~zero] = 1.0
    out[only_h] = ndtr(-k[only_h])
    out[only_k] = ndtr(-h[only_k])

    finite = ~(h_inf | k_inf)
    indep = finite & (r == 0.0)
    out[indep] = ndtr(-h[indep]) * ndtr(-k[indep])

    moderate = finite & (r != 0.0) & (np.abs(r) < _HIGH_R)
    high = finite & (np.abs(r) >= _HIGH_R)
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        if moderate.any():
            out[moderate] = _bvnu_moderate(h[moderate], k[moderate], r[moderate])
        if high.any():
            out[high] = _bvnu_high(h[high], k[high], r[high])

    return np.clip(out, 0.0, 1.0)


def phi2(b1, b2, r):
    """
    P(Z1 <= b1, Z2 <= b2) for standard normals with correlation r.

    Bounds may be +/-inf. Returns a float for scalar input, else an array.
    """
    p = bvnu(-np.asarray(b1, dtype=float), -np.asarray(b2, dtype=float), r)
    return float(p) if p.ndim == 0 else p


def phi2_rectangle(lower1, upper1, lower2, upper2, r):
    """P(lower1 < Z1 <= upper1, lower2 < Z2 <= upper2), by inclusion-exclusion."""
    p = (
        phi2(upper1, upper2, r)
        - phi2(lower1, upper2, r)
        - phi2(upper1, lower2, r)
        + phi2(lower1, lower2, r)
    )
    return np.clip(p, 0.0, 1.0)
