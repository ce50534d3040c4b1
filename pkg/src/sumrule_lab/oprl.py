"""Orthogonal polynomials on the real line: Jacobi coefficients, canonical
moments and z-coefficients."""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .measures import REAL, MeasureError, atomic_measure, discretize

NEAR_TRIVIAL = 1e-10
SUPPORT_TOL = 1e-8


class SupportError(ValueError):
    """Coefficients incompatible with the assumed support."""


class TrivialMeasureError(ValueError):
    """The measure has fewer support points than coefficients requested."""

    def __init__(self, msg, max_n):
        super().__init__(msg)
        self.max_n = max_n


class NearTrivialWarning(UserWarning):
    pass


@dataclass(frozen=True)
class JacobiCoeffs:
    b: np.ndarray
    a: np.ndarray
    tail: tuple = None   # (a_inf, b_inf) for a constant tail, else None

    def __post_init__(self):
        object.__setattr__(self, "b", np.asarray(self.b, dtype=float))
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float))
        if np.any(self.a <= 0):
            raise ValueError("Jacobi off-diagonal coefficients must be positive")

    @property
    def n(self):
        return len(self.b)

    def to_dict(self):
        d = {"b": self.b.tolist(), "a": self.a.tolist(), "tail": None}
        if self.tail is not None:
            d["tail"] = "constant"
            d["tail_values"] = {"a": self.tail[0], "b": self.tail[1]}
        return d

    @classmethod
    def from_dict(cls, d):
        tail = None
        if d.get("tail") == "constant":
            tv = d.get("tail_values", {"a": 1.0, "b": 0.0})
            tail = (float(tv["a"]), float(tv["b"]))
        return cls(d.get("b", []), d.get("a", []), tail)


def _support_size(mu):
    return np.inf if mu.pieces else len(mu.atoms)


def lanczos(x, w, n):
    """Stieltjes/Lanczos on the discrete measure sum w_i delta_{x_i}.

    Returns b_1..b_n, a_1..a_{n-1} (a_n too when possible) and the
    orthogonality residual of the Krylov basis."""
    keep = w > 0
    x, w = x[keep], w[keep]
    q = np.sqrt(w / w.sum())
    Q = np.zeros((n + 1, len(x)))
    Q[0] = q
    b, a = np.zeros(n), np.zeros(n)
    prev = np.zeros_like(q)
    for k in range(n):
        v = x * Q[k]
        b[k] = Q[k] @ v
        v = v - b[k] * Q[k] - (a[k - 1] * prev if k else 0.0)
        # full reorthogonalization, twice
        for _ in range(2):
            v -= Q[:k + 1].T @ (Q[:k + 1] @ v)
        a[k] = np.linalg.norm(v)
        if a[k] == 0:
            break
        prev = Q[k]
        Q[k + 1] = v / a[k]
    G = Q @ Q.T
    resid = np.max(np.abs(G - np.eye(n + 1)))
    return b, a, resid


def gauss_rule(mu, M):
    """Discrete measure matching the moments of mu through degree 2M - 1, or None.

    Available for coefficient-defined measures (Golub-Welsch on the truncated
    Jacobi matrix) and for atoms and mixtures built on top of them."""
    if mu.kind == "coeffs" and "tail" in mu.info:
        ta, tb = mu.info["tail"]
        b = np.full(M, tb)
        a = np.full(M - 1, ta)
        nb, na = min(M, len(mu.info["b"])), min(M - 1, len(mu.info["a"]))
        b[:nb] = mu.info["b"][:nb]
        a[:na] = mu.info["a"][:na]
        x, V = eigh_tridiagonal(b, a)
        return x, V[0] ** 2
    if mu.kind == "composite" and "base" in mu.info:
        base = gauss_rule(mu.info["base"], M)
        if base is None:
            return None
        add = mu.info.get("added", ())
        w = sum(m for _, m in add)
        return (np.concatenate([base[0], [x for x, _ in add]]),
                np.concatenate([(1 - w) * base[1], [m for _, m in add]]))
    if mu.kind == "mixture":
        tau = mu.info["tau"]
        parts = [gauss_rule(c, M) for c in mu.info["components"]]
        if any(p is None for p in parts):
            return None
        return (np.concatenate([parts[0][0], parts[1][0]]),
                np.concatenate([tau * parts[0][1], (1 - tau) * parts[1][1]]))
    return None


def jacobi_from_measure(mu, N, M=None):
    """First N Jacobi coefficients b_1..b_N, a_1..a_N of the real measure mu."""
    if mu.space != REAL:
        raise MeasureError("jacobi_from_measure needs a real-line measure")
    size = _support_size(mu)
    if N > size:
        raise TrivialMeasureError(
            f"measure has {size} support points; at most N = {size} coefficients exist", int(size))
    rule = gauss_rule(mu, N + 1)
    if rule is not None:
        b, a, _ = lanczos(*rule, N)
        return JacobiCoeffs(b, a)
    M = M or max(4 * N + 20, 200)
    prev = None
    for _ in range(8):
        x, w = discretize(mu, M, adaptive=True)
        b, a, resid = lanczos(x, w, N)
        if size == N:
            # the last a vanishes for an N-point measure
            return JacobiCoeffs(b[:N], a[:N - 1])
        if not mu.pieces:
            return JacobiCoeffs(b, a)
        # accept once orthogonality holds and a doubled quadrature agrees
        if resid <= 1e-10 and prev is not None:
            if max(np.max(np.abs(b - prev[0])), np.max(np.abs(a - prev[1]))) <= 1e-12:
                return JacobiCoeffs(b, a)
        prev = (b, a)
        M *= 2
    raise ArithmeticError(f"Jacobi coefficients did not stabilize (residual {resid:.2e})")


def canonical_from_jacobi(J):
    """Canonical moments u_1, u_2, ... of a measure supported in [-2, 2]."""
    b, a = J.b, J.a
    u = {0: -1.0}
    out = []
    nb, na = len(b), len(a)

    def check(val, k):
        if abs(val) > 1 + SUPPORT_TOL:
            raise SupportError(f"|u_{k}| = {abs(val):.6g} > 1: support leaves [-2, 2]")
        if abs(val) >= 1 - NEAR_TRIVIAL:
            warnings.warn(f"u_{k} = {val:.12g} is at the boundary; the measure is (near) trivial",
                          NearTrivialWarning, stacklevel=3)
            return True
        return False

    for k in range(max(nb, na)):
        if k < nb:
            prev = u.get(2 * k - 1, 0.0)
            val = (b[k] + (1 + u[2 * k]) * prev) / (1 - u[2 * k])
            u[2 * k + 1] = val
            out.append(val)
            if check(val, 2 * k + 1):
                break
        if k < na:
            den = (1 - u[2 * k]) * (1 - u[2 * k + 1] ** 2)
            val = a[k] ** 2 / den - 1
            u[2 * k + 2] = val
            out.append(val)
            if check(val, 2 * k + 2):
                break
    return np.array(out)


def jacobi_from_canonical(u):
    """Inverse of canonical_from_jacobi; u = (u_1, u_2, ...)."""
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) > 1 + SUPPORT_TOL):
        raise SupportError("canonical moments must satisfy |u_k| <= 1")
    uu = np.concatenate([[0.0, -1.0], u])   # uu[j + 1] = u_j, j >= -1
    b, a = [], []
    for k in range((len(u) + 1) // 2):
        b.append((1 - uu[2 * k + 1]) * uu[2 * k + 2] - (1 + uu[2 * k + 1]) * uu[2 * k])
        if 2 * k + 2 <= len(u):
            a2 = (1 - uu[2 * k + 1]) * (1 - uu[2 * k + 2] ** 2) * (1 + uu[2 * k + 3])
            if a2 <= 0:
                break
            a.append(np.sqrt(a2))
    return JacobiCoeffs(np.array(b), np.array(a))


def z_from_jacobi(J):
    """z_1, z_2, ... with b_k = z_{2k-2} + z_{2k-1} and a_k^2 = z_{2k-1} z_{2k}."""
    z = []
    prev = 0.0
    for k in range(len(J.b)):
        odd = J.b[k] - prev
        if odd < -SUPPORT_TOL:
            raise SupportError(f"z_{2 * k + 1} = {odd:.6g} < 0: support leaves [0, inf)")
        z.append(max(odd, 0.0))
        if k < len(J.a):
            if odd <= 0:
                raise SupportError("z vanishes before the end of the coefficients")
            prev = J.a[k] ** 2 / odd
            z.append(prev)
    return np.array(z)


def jacobi_from_z(z):
    z = np.asarray(z, dtype=float)
    if np.any(z < -SUPPORT_TOL):
        raise SupportError("z-coefficients must be nonnegative")
    zz = np.concatenate([[0.0], z])
    b = [zz[2 * k - 2] + zz[2 * k - 1] for k in range(1, (len(z) + 1) // 2 + 1)]
    a = [np.sqrt(zz[2 * k - 1] * zz[2 * k]) for k in range(1, len(z) // 2 + 1)]
    return JacobiCoeffs(np.array(b), np.array(a))


def finite_jacobi_spectral_measure(J):
    """Atomic spectral measure of the n x n truncation defined by b_1..b_n, a_1..a_{n-1}."""
    n = len(J.b)
    if n < 1:
        raise ValueError("need at least one diagonal coefficient")
    lam, vec = eigh_tridiagonal(J.b, J.a[:n - 1])
    masses = vec[0] ** 2
    masses = masses / masses.sum()
    return atomic_measure(REAL, list(zip(lam, masses)))


def evaluate_oprl(J, x, n, monic=False):
    """Values p_0(x)..p_n(x) (orthonormal) or P_0..P_n (monic); shape (n+1,) + x.shape."""
    if n > len(J.b) or len(J.a) < (n - 1 if monic else n):
        raise ValueError("not enough stored coefficients")
    x = np.asarray(x, dtype=float)
    out = np.zeros((n + 1,) + x.shape)
    out[0] = 1.0
    for k in range(n):
        ak = J.a[k - 1] if k else 0.0
        prev = out[k - 1] if k else 0.0
        if monic:
            out[k + 1] = (x - J.b[k]) * out[k] - ak ** 2 * prev
        else:
            out[k + 1] = ((x - J.b[k]) * out[k] - ak * prev) / J.a[k]
    return out
