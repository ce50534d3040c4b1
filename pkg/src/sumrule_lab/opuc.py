"""Orthogonal polynomials on the unit circle.

Convention: Phi_{k+1}(z) = z Phi_k(z) - conj(alpha_k) Phi_k^*(z), so that
alpha_k = -conj(Phi_{k+1}(0)); moments are c_k = int exp(-i k theta) dnu and
alpha_0 = c_1 = f(0) for the Schur function f of nu.
"""
from dataclasses import dataclass

import numpy as np

from .measures import CIRCLE, MeasureError, TWO_PI, discretize, gw_params, trig_moments


class MomentDegeneracyError(ArithmeticError):
    """The Toeplitz moment matrix lost positive definiteness."""


class TrivialMeasureError(ValueError):
    def __init__(self, msg, max_n):
        super().__init__(msg)
        self.max_n = max_n


@dataclass(frozen=True)
class VerblunskyCoeffs:
    alpha: np.ndarray
    real: bool = False
    tail: dict = None   # {"kind": "zero" | "constant" | "gw", "params": {...}}

    def __post_init__(self):
        al = np.asarray(self.alpha, dtype=complex)
        object.__setattr__(self, "alpha", al)
        if len(al) and np.any(np.abs(al[:-1]) >= 1):
            raise ValueError("Verblunsky coefficients must lie in the open unit disk")
        if self.real and np.any(np.abs(al.imag) >= 1e-12):
            raise ValueError("real flag set on complex coefficients")

    def __len__(self):
        return len(self.alpha)

    def extended(self, n):
        """alpha_0..alpha_{n-1}, continuing with the tail when stored ones run out."""
        if n <= len(self.alpha):
            return self.alpha[:n]
        k = np.arange(len(self.alpha), n)
        return np.concatenate([self.alpha, tail_values(self.tail, k)])

    def to_dict(self):
        return {"alpha": [[float(a.real), float(a.imag)] for a in self.alpha],
                "tail": self.tail}

    @classmethod
    def from_dict(cls, d):
        al = [complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in d["alpha"]]
        al = np.array(al, dtype=complex)
        return cls(al, bool(np.all(np.abs(al.imag) < 1e-12)), d.get("tail"))


def tail_values(tail, k):
    k = np.asarray(k)
    kind = (tail or {"kind": "zero"})["kind"]
    params = (tail or {}).get("params", {})
    if kind == "zero":
        return np.zeros(k.shape, dtype=complex)
    if kind == "constant":
        g = params["gamma"]
        return np.full(k.shape, complex(*g) if isinstance(g, (list, tuple)) else complex(g))
    if kind == "gw":
        return gw_alpha(float(params["g"]), k)
    raise ValueError(f"unknown tail kind {kind!r}")


def gw_alpha(g, n):
    """Closed-form Verblunsky coefficients of GW(g)."""
    n = np.asarray(n)
    if g > 0:
        return (-1.0) ** (n + 1) * gw_alpha(-g, n)
    if g == 0:
        return np.zeros(n.shape, dtype=complex)
    if g == -1:
        return (-1.0 / (n + 2)).astype(complex)
    if g > -1:
        info = gw_params(g)
        xp, xm = info["x_plus"], info["x_minus"]
        # -(xp - xm)/(xp^(n+2) - xm^(n+2)) with xp * xm = 1, written to underflow only
        r = xm * xm
        return (-(1 - r) * xm ** (n + 1) / (1 - r ** (n + 2))).astype(complex)
    q = gw_params(g)["q"]
    m = n + 1
    return (1 - 2 / (1 + q) * (1 - q ** (m + 2)) / (1 - q ** (m + 1))).astype(complex)


@dataclass(frozen=True)
class OpucPolyState:
    n: int
    Phi: complex
    PhiStar: complex
    kappa: float
    z: complex

    @property
    def phi(self):
        return self.kappa * self.Phi

    @property
    def phi_star(self):
        return self.kappa * self.PhiStar


def szego_evaluate(alpha, z, n=None):
    """Monic Phi_n(z), Phi_n^*(z) and kappa_n = prod(1-|alpha_k|^2)^(-1/2)."""
    alpha = np.asarray(alpha, dtype=complex)
    n = len(alpha) if n is None else n
    z = np.asarray(z, dtype=complex)
    phi = np.ones_like(z)
    star = np.ones_like(z)
    for a in alpha[:n]:
        phi, star = z * phi - np.conj(a) * star, star - a * z * phi
    kappa = float(np.prod(1 - np.abs(alpha[:n]) ** 2) ** -0.5)
    return OpucPolyState(n, phi, star, kappa, z)


def levinson(c, N):
    """Verblunsky coefficients alpha_0..alpha_{N-1} and prediction errors from c_0..c_N."""
    c = np.asarray(c, dtype=complex) / c[0]
    p = np.zeros(N + 1, dtype=complex)   # coefficients of Phi_k, lowest degree first
    p[0] = 1.0
    E = np.zeros(N + 1)
    E[0] = 1.0
    alpha = np.zeros(N, dtype=complex)
    for k in range(N):
        # <z Phi_k, 1> = sum_j p_j c_{j+1}: c_{j+1} is the moment of e^{-i(j+1)theta}
        s = np.sum(p[:k + 1] * np.conj(c[1:k + 2]))
        a = np.conj(s) / E[k]
        alpha[k] = a
        rev = np.conj(p[:k + 1][::-1])
        new = np.zeros(N + 1, dtype=complex)
        new[1:k + 2] = p[:k + 1]
        new[:k + 1] -= np.conj(a) * rev
        p = new
        E[k + 1] = E[k] * (1 - abs(a) ** 2)
        if E[k + 1] <= 0 or abs(a) >= 1:
            raise MomentDegeneracyError(f"prediction error vanished at step {k}")
    return alpha, E


def arnoldi_verblunsky(t, w, N):
    """Isometric Arnoldi on the discrete measure sum w_i delta_{t_i}."""
    keep = w > 0
    t, w = t[keep], w[keep]
    z = np.exp(1j * t)
    sw = np.sqrt(w / w.sum())
    Qh = np.zeros((N + 1, len(t)), dtype=complex)   # conjugated basis rows
    Qh[0] = sw                        # phi_0 = 1, stored as sqrt(w) * phi
    star = sw.copy()
    zk = np.ones_like(z)
    alpha = np.zeros(N, dtype=complex)
    for k in range(N):
        zq = z * np.conj(Qh[k])
        a_bar = np.vdot(star, zq)   # <z phi_k, phi_k^*>
        alpha[k] = np.conj(a_bar)
        v = zq - a_bar * star
        n0 = np.linalg.norm(v)
        # classical Gram-Schmidt, repeated only when cancellation is severe
        for _ in range(2):
            v -= (Qh[:k + 1] @ v) @ Qh[:k + 1].conj()
            nv = np.linalg.norm(v)
            if nv > 0.5 * n0:
                break
            n0 = nv
        if nv < 1e-14:
            return alpha[:k + 1], k + 1
        q = v / nv
        Qh[k + 1] = np.conj(q)
        zk *= z
        star = zk * Qh[k + 1] / sw * sw
    return alpha, N


def verblunsky_from_measure(nu, N, method="auto"):
    """alpha_0..alpha_{N-1} of a circle measure; Levinson on moments, with the
    isometric Arnoldi process as fallback when the moment matrix is ill-conditioned."""
    if nu.space != CIRCLE:
        raise MeasureError("verblunsky_from_measure needs a circle measure")
    size = np.inf if nu.pieces else len(nu.atoms)
    if size <= N:
        raise TrivialMeasureError(
            f"measure has {size} support points; at most {size - 1} nontrivial coefficients",
            int(size - 1))
    if method in ("auto", "levinson"):
        c = trig_moments(nu, N)
        try:
            alpha, E = levinson(c, N)
            # Cybenko's bound on the amplification of moment errors
            r = np.abs(alpha)
            growth = np.prod((1 + r) / (1 - r))
            if method == "levinson" or (E.min() >= 1e-6 and growth <= 1e5):
                return _wrap(alpha)
        except MomentDegeneracyError:
            if method == "levinson":
                raise
    M = max(4 * N + 64, 256)
    prev = None
    for _ in range(10):
        t, w = discretize(nu, M)
        alpha, _ = arnoldi_verblunsky(t, w, N)
        if prev is not None and np.max(np.abs(alpha - prev)) < 1e-13:
            return _wrap(alpha)
        prev = alpha
        M *= 2
    raise ArithmeticError("Verblunsky coefficients did not stabilize")


def _wrap(alpha):
    real = bool(np.all(np.abs(alpha.imag) < 1e-12))
    if real:
        alpha = alpha.real.astype(complex)
    return VerblunskyCoeffs(alpha, real)


def cmv_matrix(alpha, size):
    """Principal size x size section of the CMV matrix C = L M, with L and M."""
    alpha = np.asarray(alpha, dtype=complex)
    if size > len(alpha):
        raise ValueError("not enough coefficients for the requested size")
    n = size + 2
    al = np.concatenate([alpha, np.zeros(n)])

    def theta(k):
        r = np.sqrt(1 - abs(al[k]) ** 2)
        return np.array([[np.conj(al[k]), r], [r, -al[k]]])

    L = np.zeros((n, n), dtype=complex)
    Mm = np.zeros((n, n), dtype=complex)
    for k in range(0, n - 1, 2):
        L[k:k + 2, k:k + 2] = theta(k)
    Mm[0, 0] = 1.0
    for k in range(1, n - 1, 2):
        Mm[k:k + 2, k:k + 2] = theta(k)
    if n % 2 == 1:
        L[n - 1, n - 1] = 1.0
    else:
        Mm[n - 1, n - 1] = 1.0
    C = L @ Mm
    return C[:size, :size], L[:size, :size], Mm[:size, :size]


def deformed_verblunsky(alpha):
    """gamma_0 = conj(alpha_0), gamma_k = conj(alpha_k) prod_{j<k} (1 - conj(gamma_j))/(1 - gamma_j)."""
    alpha = np.asarray(alpha, dtype=complex)
    gamma = np.zeros_like(alpha)
    ratio = 1.0 + 0j
    for k, a in enumerate(alpha):
        gamma[k] = np.conj(a) * ratio
        if abs(1 - gamma[k]) < 1e-15:
            raise ZeroDivisionError(f"gamma_{k} = 1: degenerate normalization at z = 1")
        ratio *= (1 - np.conj(gamma[k])) / (1 - gamma[k])
    return gamma


# ------------------------------------------------------------ Schur functions

def caratheodory(nu, z, tol=1e-14):
    """F(z) = int (e^{it} + z)/(e^{it} - z) dnu(t) for |z| < 1."""
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z) >= 1):
        raise ValueError("Caratheodory function needs |z| < 1")
    rmax = float(np.max(np.abs(z))) if z.size else 0.0
    n = int(min(max(256, 32 / (1 - rmax)), 2 ** 16))
    prev = None
    while True:
        t, w = discretize(nu, n)
        e = np.exp(1j * t)
        F = ((e[None, :] + z.reshape(-1, 1)) / (e[None, :] - z.reshape(-1, 1))) @ w
        if prev is not None and np.max(np.abs(F - prev)) < tol or n >= 2 ** 18:
            return F.reshape(z.shape)
        prev = F
        n *= 2


def schur_from_caratheodory(F, z):
    F = np.asarray(F, dtype=complex)
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("use the Taylor limit at z = 0")
    return (F - 1) / (z * (F + 1))


def caratheodory_from_schur(f, z):
    zf = np.asarray(z) * np.asarray(f)
    return (1 + zf) / (1 - zf)


class SchurFunction:
    """A Schur function given by a pointwise evaluator on the open disk."""

    def __init__(self, evaluator, provenance="closed form", taylor0=None):
        self.evaluator = evaluator
        self.provenance = provenance
        self.taylor0 = taylor0

    def __call__(self, z):
        return self.evaluator(np.asarray(z, dtype=complex))

    @classmethod
    def from_measure(cls, nu):
        c1 = complex(trig_moments(nu, 1)[1])

        def ev(z):
            z = np.atleast_1d(z)
            out = np.empty(z.shape, dtype=complex)
            small = np.abs(z) < 1e-8
            if (~small).any():
                out[~small] = schur_from_caratheodory(caratheodory(nu, z[~small]), z[~small])
            if small.any():
                out[small] = c1
            return out

        return cls(ev, "measure", c1)

    @classmethod
    def from_coefficients(cls, alpha, tail=None):
        """Geronimus continued fraction f = (a_0 + z f_1)/(1 + conj(a_0) z f_1)."""
        alpha = np.asarray(alpha, dtype=complex)
        if tail is None or tail.get("kind") == "zero":
            start = None
        elif tail["kind"] == "constant":
            g = tail["params"]["gamma"]
            start = complex(*g) if isinstance(g, (list, tuple)) else complex(g)
        else:
            raise ValueError("only zero or constant tails have a closed-form Schur tail")

        def ev(z):
            z = np.asarray(z, dtype=complex)
            f = np.zeros_like(z) if start is None else constant_tail_schur(start, z)
            for a in alpha[::-1]:
                f = (a + z * f) / (1 + np.conj(a) * z * f)
            return f

        return cls(ev, "coefficients", complex(alpha[0]) if len(alpha) else 0j)

    @classmethod
    def constant(cls, value):
        value = complex(value)
        return cls(lambda z: np.full(np.shape(z), value, dtype=complex), "closed form", value)


def constant_tail_schur(gamma, z):
    """Schur function with all Verblunsky coefficients equal to gamma (fixed point
    f = (gamma + z f)/(1 + conj(gamma) z f), root with |f| <= 1)."""
    z = np.asarray(z, dtype=complex)
    # conj(gamma) z f^2 + (1 - z) f - gamma = 0
    if gamma == 0:
        return np.zeros_like(z)
    B = 1 - z
    disc = np.sqrt(B * B + 4 * abs(gamma) ** 2 * z)
    # the two roots have product of modulus 1/|z|: keep the one inside the disk
    with np.errstate(all="ignore"):
        r1 = 2 * gamma / (B + disc)
        r2 = 2 * gamma / (B - disc)
    return np.where(np.abs(r1) <= np.abs(r2), r1, r2)


def taylor_coefficients(f, L, radius):
    """First L Taylor coefficients of the analytic function f via FFT on |z| = radius."""
    n = 512
    while n < max(8 * L, 40 / (1 - radius)):
        n *= 2
    z = radius * np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.asarray(f(z), dtype=complex)
    coef = np.fft.fft(vals) / n
    return coef[:L] / radius ** np.arange(L)


def _series_div(num, den, L):
    out = np.zeros(L, dtype=complex)
    for k in range(L):
        s = num[k] if k < len(num) else 0.0
        s -= np.dot(out[:k][::-1], den[1:k + 1]) if k else 0.0
        out[k] = s / den[0]
    return out


def schur_parameters_from_series(g, N):
    """Schur algorithm applied to a truncated power series."""
    g = np.asarray(g, dtype=complex)
    out = []
    for k in range(N):
        a = g[0]
        out.append(a)
        if abs(a) >= 1 - 1e-14:
            break
        L = len(g) - 1
        den = -np.conj(a) * g[:L]
        den[0] += 1
        g = _series_div(g[1:], den, L)
    return np.array(out)


def schur_iterates(f, N, radius=None):
    """alpha_k = S^[k] f(0), k < N, together with iterate evaluators.

    The removable singularity at 0 is resolved by running the Schur step on
    Taylor coefficients of f rather than on pointwise difference quotients."""
    if not isinstance(f, SchurFunction):
        f = SchurFunction(f)
    L = N + 8
    if radius is None:
        radius = 0.75 if N <= 30 else 1 - 1.0 / (N + 2)
    g = taylor_coefficients(f, L, radius)
    alpha = schur_parameters_from_series(g, N)
    if len(alpha) and abs(alpha[-1]) >= 1 - 1e-14:
        alpha[-1] = alpha[-1] / abs(alpha[-1])

    def iterate(k):
        def ev(z):
            z = np.asarray(z, dtype=complex)
            val = f(z)
            for j in range(k):
                a = alpha[j]
                val = (val - a) / (z * (1 - np.conj(a) * val))
            return val
        return ev

    return alpha, [iterate(k) for k in range(len(alpha))]


def mobius(rho, z):
    """m_rho(z) = (z - rho)/(1 - conj(rho) z)."""
    return (z - rho) / (1 - np.conj(rho) * z)


def nevanlinna_pick_iterates(f, zeta, N, omega=True):
    """S_zeta^[k](f)(zeta) for k = 0..N.

    With h = f o m_{-zeta} one has S_zeta^[k](f) o m_{-zeta} = omega^k S^[k](h),
    so the values at zeta are omega^k times the Schur parameters of h."""
    zeta = complex(zeta)
    if not isinstance(f, SchurFunction):
        f = SchurFunction(f)
    if zeta == 0:
        return schur_iterates(f, N + 1)[0]
    w = -zeta / abs(zeta) if omega else 1.0
    h = SchurFunction(lambda u: f(mobius(-zeta, u)), "composed")
    alpha = schur_iterates(h, N + 1)[0]
    return alpha * w ** np.arange(len(alpha))


def composed_schur_series(nu, zeta, L, tol=1e-14):
    """Taylor coefficients of h = f o m_{-zeta} (f the Schur function of nu) read
    off the measure: with z = m_{-zeta}(w), (F(z) - 1)/z = int 2/(e - z) dnu and
    each kernel is geometric in w, so no pointwise evaluation near the circle is needed."""
    zeta = complex(zeta)
    k = np.arange(L)
    n = max(4 * L + 64, 512)
    prev = None
    while n <= 2 ** 18:
        t, w = discretize(nu, n)
        e = np.exp(1j * t)
        C = e - zeta
        q = -(e * np.conj(zeta) - 1) / C          # unimodular
        powers = q[None, :] ** k[:, None]
        # 2/(e - m(w)) = 2 (1 + conj(zeta) w) / C * sum q^k w^k
        g = powers @ (2 * w / C)
        P = g.copy()
        P[1:] += np.conj(zeta) * g[:-1]
        # 1 + F(m(w)), kernel (e + m)/(e - m) expanded the same way
        den = powers @ (w * (e + zeta) / C)
        den[1:] += powers[:-1] @ (w * (e * np.conj(zeta) + 1) / C)
        den[0] += 1
        h = _series_div(P, den, L)
        if prev is not None and np.max(np.abs(h - prev)) < tol:
            return h
        prev = h
        n *= 2
    raise ArithmeticError("composed Schur series did not converge")


def nevanlinna_pick_from_measure(nu, zeta, N):
    """Same values as nevanlinna_pick_iterates for the Schur function of nu, computed
    from moments of the measure instead of evaluations of f."""
    zeta = complex(zeta)
    if zeta == 0:
        return verblunsky_from_measure(nu, N + 1).alpha
    h = composed_schur_series(nu, zeta, N + 8)
    alpha = schur_parameters_from_series(h, N + 1)
    return alpha * (-zeta / abs(zeta)) ** np.arange(len(alpha))
