"""Quadrature rules used throughout the package.

Real-line pieces are integrated after the substitution x = mid - half*cos(phi),
which behaves like x = c + t**2 at both ends and removes square-root edge
singularities. The phi-interval is split into panels graded geometrically
towards both ends and refined adaptively with Gauss-Legendre rules.
Smooth periodic integrands on the full circle use the trapezoid rule.
"""
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre


class QuadratureError(RuntimeError):
    pass


@lru_cache(maxsize=64)
def gauss_legendre(n):
    x, w = roots_legendre(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _offsets(lo, hi, phi):
    # x together with exact distances to both ends
    half = 0.5 * (hi - lo)
    dl = 2 * half * np.sin(0.5 * phi) ** 2
    dr = 2 * half * np.cos(0.5 * phi) ** 2
    x = np.where(phi < 0.5 * np.pi, lo + dl, hi - dr)
    return x, dl, dr


def phi_rule(n, panel=64):
    """n-point rule on [0, pi]: one Gauss-Legendre rule, or equal panels of
    order `panel` for large n (high-order nodes lose accuracy)."""
    if n <= 2 * panel:
        t, w = gauss_legendre(n)
        return 0.5 * np.pi * (t + 1.0), 0.5 * np.pi * w
    m = -(-n // panel)
    t, w = gauss_legendre(panel)
    h = np.pi / m
    left = h * np.arange(m)[:, None]
    return (left + 0.5 * h * (t + 1.0)).ravel(), np.tile(0.5 * h * w, m)


def cosine_nodes(lo, hi, n, offsets=False):
    """Non-adaptive rule on [lo, hi] with about n nodes in phi."""
    phi, w = phi_rule(n)
    half = 0.5 * (hi - lo)
    x, dl, dr = _offsets(lo, hi, phi)
    wx = w * half * np.sin(phi)
    if offsets:
        return x, wx, dl, dr
    return x, wx


def _graded_breaks(levels, sigma):
    left = 0.5 * np.pi * sigma ** np.arange(levels, 0, -1)
    return np.concatenate([[0.0], left, [0.5 * np.pi], np.pi - left[::-1], [np.pi]])


def adaptive_cosine(fun, lo, hi, tol=1e-13, order=16, levels=14, sigma=0.15,
                    max_rounds=40, offsets=False):
    """Integrate fun over [lo, hi]; fun is vectorized and may return complex.

    With offsets=True fun is called as fun(x, x - lo, hi - x), the distances
    being computed without cancellation so edge singularities stay resolved.
    """
    if hi <= lo:
        return 0.0
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t1, w1 = gauss_legendre(order)
    t2, w2 = gauss_legendre(2 * order)

    def panel_sums(a, b, t, w):
        c = 0.5 * (a + b)[:, None]
        r = 0.5 * (b - a)[:, None]
        phi = c + r * t[None, :]
        if offsets:
            vals = fun(*_offsets(lo, hi, phi.ravel())).reshape(phi.shape)
        else:
            vals = fun(mid - half * np.cos(phi).ravel()).reshape(phi.shape)
        vals = vals * (half * np.sin(phi))
        return (vals * (r * w[None, :])).sum(axis=1)

    br = _graded_breaks(levels, sigma)
    a, b = br[:-1], br[1:]
    total = 0.0
    for _ in range(max_rounds):
        q1 = panel_sums(a, b, t1, w1)
        q2 = panel_sums(a, b, t2, w2)
        err = np.abs(q2 - q1)
        ok = err <= tol * (b - a) / np.pi + 1e-300
        total = total + q2[ok].sum()
        if ok.all():
            return total
        a, b = a[~ok], b[~ok]
        m = 0.5 * (a + b)
        a, b = np.concatenate([a, m]), np.concatenate([m, b])
        if a.size > 20000:
            break
    # accept the best estimate of the remaining panels
    return total + panel_sums(a, b, t2, w2).sum()


def adaptive_cosine_nodes(fun, lo, hi, n, tol=1e-14, order=16, max_panels=20000):
    """Nodes, weights and end offsets on [lo, hi] resolving the density fun.

    Starts from about n nodes on equal phi-panels and bisects panels whose
    mass is not reproduced to tol by the order-point rule; accepted panels
    carry the 2*order-point rule. Used to discretize measures with sharp peaks."""
    half = 0.5 * (hi - lo)
    t1, w1 = gauss_legendre(order)
    t2, w2 = gauss_legendre(2 * order)

    def nodes(a, b, t, w):
        c = 0.5 * (a + b)[:, None]
        r = 0.5 * (b - a)[:, None]
        phi = (c + r * t[None, :]).ravel()
        x, dl, dr = _offsets(lo, hi, phi)
        wx = ((r * w[None, :]) * (half * np.sin(c + r * t[None, :]))).ravel()
        return phi.shape, x, wx, dl, dr

    m = max(1, -(-n // (2 * order)))
    edges = np.linspace(0.0, np.pi, m + 1)
    a, b = edges[:-1], edges[1:]
    keep = []
    while a.size:
        _, x1, w1x, d1, e1 = nodes(a, b, t1, w1)
        _, x2, w2x, d2, e2 = nodes(a, b, t2, w2)
        q1 = (fun(x1, d1, e1) * w1x).reshape(a.size, -1).sum(axis=1)
        q2 = (fun(x2, d2, e2) * w2x).reshape(a.size, -1).sum(axis=1)
        # absolute target per unit phi, floored at rounding level
        ok = np.abs(q2 - q1) <= np.maximum(tol * (b - a) / np.pi, 1e-13 * np.abs(q2)) + 1e-300
        if a.size + sum(k[0].size for k in keep) > max_panels:
            ok[:] = True
        keep.append((a[ok], b[ok]))
        a, b = a[~ok], b[~ok]
        mid = 0.5 * (a + b)
        a, b = np.concatenate([a, mid]), np.concatenate([mid, b])
    a = np.concatenate([k[0] for k in keep])
    b = np.concatenate([k[1] for k in keep])
    order_ = np.argsort(a)
    _, x, wx, dl, dr = nodes(a[order_], b[order_], t2, w2)
    return x, wx, dl, dr


def periodic_trapezoid(fun, tol=1e-13, n0=256, nmax=2 ** 18):
    """(1/2pi) * integral of fun over [0, 2pi) by the trapezoid rule with doubling."""
    n = n0
    theta = 2 * np.pi * np.arange(n) / n
    prev = fun(theta).mean()
    while n < nmax:
        theta = 2 * np.pi * (np.arange(n) + 0.5) / n
        mid = fun(theta).mean()
        cur = 0.5 * (prev + mid)
        n *= 2
        if abs(cur - prev) <= tol * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev
