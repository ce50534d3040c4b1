"""Sum rules: entropy/outlier side, coefficient side and their comparison.

Every rule is evaluated twice, independently: the spectral side by quadrature
of the relative entropy plus the outlier functional, the coefficient side as a
series in recursion coefficients extracted from the measure. Series are summed
to a truncation N and completed by a tail estimate.
"""
import math
import re
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .mappings import dvz_push, is_symmetric
from .measures import (CIRCLE, REAL, TWO_PI, Measure, MeasureError, from_spec, hp_params,
                       kl, kmk_params, make_reference, mix, support_classify,
                       verblunsky_measure)
from .oprl import canonical_from_jacobi, jacobi_from_measure, z_from_jacobi
from .opuc import (SchurFunction, deformed_verblunsky, gw_alpha, mobius,
                   nevanlinna_pick_from_measure, nevanlinna_pick_iterates, szego_evaluate,
                   verblunsky_from_measure)
from .quadrature import adaptive_cosine

LOG2 = math.log(2.0)
DEFAULT_N = 200
DEFAULT_TOL = 1e-6
DEFAULT_CAP = 1e6
WINDOW = 20


class RuleError(ValueError):
    """Rule parameters or the measure do not fit the rule."""


# ------------------------------------------------------------ scalar pieces

def G(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = x - 1 - np.log(x)
    return np.where(x > 0, out, np.inf)


def H_gw(g):
    """K(GW(g) | UNIF) for |g| <= 1."""
    s = math.sqrt(1 - g * g)
    return 1 - s + math.log((1 + s) / 2)


def C_mixture(g):
    """Constant of the Jacobi-coefficient form of the rho_g sum rule, equal to
    -|g| K(SC | rho_g) - (1 - |g|) K(Arcsine | rho_g)."""
    a = abs(g)
    return -a * (1 - LOG2) + H_gw(g)


def H_even(u, kappa1, kappa2):
    ue = kmk_params(kappa1, kappa2)["u_e"]
    u = np.asarray(u, dtype=float)
    return (-(1 + kappa1 + kappa2) * np.log((1 - u) / (1 - ue))
            - np.log((1 + u) / (1 + ue)))


def H_odd(u, kappa1, kappa2):
    uo = kmk_params(kappa1, kappa2)["u_o"]
    u = np.asarray(u, dtype=float)
    return (-(1 + kappa1) * np.log((1 - u) / (1 - uo))
            - (1 + kappa2) * np.log((1 + u) / (1 + uo)))


def H_hp(gamma, d):
    gd = -d / (1 + d)
    gamma = np.asarray(gamma, dtype=complex)
    r2 = np.abs(gamma) ** 2
    if np.any(r2 >= 1):
        raise RuleError("deformed coefficients must lie in the open unit disk")
    return (-np.log((1 - r2) / (1 - gd * gd))
            - 2 * d * np.log(np.abs(1 - gamma) / (1 - gd)))


# ------------------------------------------------------- outlier functionals

def F_sc(x):
    x = abs(float(x))
    if x < 2:
        return math.inf
    s = 2 * math.acosh(x / 2)
    if s < 0.1:
        # sinh(s) - s without cancellation
        term, total, k = s, 0.0, 1
        while True:
            term *= s * s / ((2 * k) * (2 * k + 1))
            total += term
            if term <= 1e-18 * total:
                return total
            k += 1
    return math.sinh(s) - s


def F_mp(x, tau):
    lo, hi = (1 - math.sqrt(tau)) ** 2, (1 + math.sqrt(tau)) ** 2
    x = float(x)
    if lo < x < hi:
        return math.inf
    if x >= hi:
        return adaptive_cosine(lambda t, dl, dr: np.sqrt(dl * (t - lo)) / (tau * t),
                               hi, x, offsets=True)
    if x <= 0:
        return math.inf
    return adaptive_cosine(lambda t, dl, dr: np.sqrt((hi - t) * dr) / (tau * t),
                           x, lo, offsets=True)


def F_kmk(x, kappa1, kappa2):
    p = kmk_params(kappa1, kappa2)
    lo, hi = p["u_minus"], p["u_plus"]
    c = 2 + kappa1 + kappa2
    x = float(x)
    if lo < x < hi:
        return math.inf
    if x >= hi:
        if x >= 2:
            return 0.0 if hi >= 2 and x == 2 else math.inf
        return adaptive_cosine(lambda t, dl, dr: c * np.sqrt(dl * (t - lo)) / ((2 - t) * (2 + t)),
                               hi, x, offsets=True)
    if x <= -2:
        return 0.0 if lo <= -2 and x == -2 else math.inf
    return adaptive_cosine(lambda t, dl, dr: c * np.sqrt((hi - t) * dr) / ((2 - t) * (2 + t)),
                           x, lo, offsets=True)


def F_hp(theta, d):
    td = hp_params(d)["theta_d"]
    t = float(np.mod(theta, TWO_PI))
    t = min(t, TWO_PI - t)
    if t > td:
        return math.inf
    if t <= 0:
        return math.inf

    def f(phi, dl, dr):
        # sin^2(td/2) - sin^2(phi/2) = sin((td - phi)/2) sin((td + phi)/2)
        return (1 + d) * np.sqrt(np.sin(dr / 2) * np.sin((td + phi) / 2)) / np.sin(phi / 2)

    return adaptive_cosine(f, t, td, offsets=True)


# ------------------------------------------------------------------ series

@dataclass
class Series:
    terms: np.ndarray
    const: float = 0.0
    tail: float = 0.0
    err: float = 0.0
    status: str = "converged"      # converged | divergent | unconverged
    model: str = ""

    @property
    def partials(self):
        return self.const + np.cumsum(self.terms)

    @property
    def value(self):
        if self.status == "divergent":
            return math.inf if self.direction >= 0 else -math.inf
        return float(self.const + np.sum(self.terms) + self.tail)

    @property
    def direction(self):
        t = self.terms[-WINDOW:]
        return 1 if np.sum(t) >= 0 else -1

    @property
    def N(self):
        return len(self.terms)


def _power_fit(t, k):
    A = np.column_stack([np.ones_like(k), -np.log(k), 1 / k, 1 / k ** 2])
    coef, *_ = np.linalg.lstsq(A, np.log(np.abs(t)), rcond=None)
    resid = np.max(np.abs(A @ coef - np.log(np.abs(t))))
    return coef, resid


def _power_tail(coef, N, sign):
    c0, p, c1, c2 = coef
    if p <= 1.1:
        return None
    s = N + 1.0
    z0 = float(hurwitz_zeta(p, s))
    if z0 == 0.0 or c0 + math.log(z0) < -700:
        return 0.0
    corr = 1 + (c1 * hurwitz_zeta(p + 1, s) + (c2 + 0.5 * c1 * c1) * hurwitz_zeta(p + 2, s)) / z0
    return sign * math.exp(c0 + math.log(z0)) * float(corr)


def _geom_fit(t, k):
    A = np.column_stack([np.ones_like(k), k])
    coef, *_ = np.linalg.lstsq(A, np.log(np.abs(t)), rcond=None)
    resid = np.max(np.abs(A @ coef - np.log(np.abs(t))))
    return coef, resid


def _geom_tail(coef, t_last):
    r = math.exp(coef[1])
    if r >= 1 - 1e-9:
        return None
    return t_last * r / (1 - r)


def _same_sign_tail(t, start):
    """Tail of a same-sign series from its last terms; start is the 1-based
    index of t[0] in the whole series. Returns (tail or None if divergent,
    model, log-fit residual)."""
    k = np.arange(start, start + len(t), dtype=float)
    N = start + len(t) - 1
    sign = 1.0 if t[-1] > 0 else -1.0
    pc, pres = _power_fit(t, k)
    gc, gres = _geom_fit(t, k)
    if pres <= gres:
        return _power_tail(pc, N, sign), "power", pres
    return _geom_tail(gc, t[-1]), "geometric", gres


def _estimate(t, W, depth):
    n = len(t)
    scale = max(1.0, abs(float(np.sum(t))))
    last = t[-W:]
    big = float(np.max(np.abs(last)))
    if big <= 1e-18 * scale:
        return 0.0, big * W, "converged", "vanishing", 0.0
    if W < 8 or n < 16:
        return 0.0, big * W, "unconverged", "too short", math.inf
    best = (0.0, big * W, "converged" if big * W < 1e-9 * scale else "unconverged",
            "irregular", math.inf)
    if np.all(last > 0) or np.all(last < 0):
        tail, model, resid = _same_sign_tail(last, n - W + 1)
        if tail is None:
            best = (math.inf, 0.0, "divergent", model, resid)
        else:
            h = W // 2
            prev = None
            if n - h - W >= 0:
                prev = _same_sign_tail(t[n - h - W:n - h], n - h - W + 1)[0]
            err = abs(tail) if prev is None else abs(prev - (np.sum(t[n - h:]) + tail))
            best = (float(tail), float(err + 1e-16 * scale), "converged", model, resid)
    if depth == 0 and n >= 32 and best[4] > 1e-6:
        # alternating signs or different laws on even and odd indices:
        # sum consecutive pairs aligned with the end
        start = n % 2
        m = (n - start) // 2
        pairs = t[start::2][:m] + t[start + 1::2][:m]
        cand = _estimate(pairs, min(max(W // 2, WINDOW), m), 1)
        if cand[4] < best[4] or (best[3] == "irregular" and cand[3] != "irregular"):
            best = cand[:3] + ("paired " + cand[3], cand[4])
    return best


def estimate_tail(terms, window=None):
    """Tail estimate of sum(terms) beyond the last one.

    Returns (tail, err, status, model). Same-sign windows are fitted by a
    power law with Laurent corrections (tail from Hurwitz zeta values) or by a
    geometric law, whichever fits the log-terms better; power laws with
    exponent <= 1.1 and non-decaying geometric laws count as divergent. The
    error is the disagreement with the same estimate made half a window earlier.
    When the fit is poor the series of consecutive pairs is tried as well
    (alternating signs, parity patterns). Irregular windows give no tail and an
    error of window * max|term|.
    """
    t = np.asarray(terms, dtype=float)
    n = len(t)
    if n == 0:
        return 0.0, 0.0, "converged", "empty"
    if not np.all(np.isfinite(t)):
        return math.inf, 0.0, "divergent", "infinite term"
    W = window or min(max(WINDOW, n // 4), n)
    return _estimate(t, W, 0)[:4]


def make_series(terms, const=0.0, complete=True):
    terms = np.asarray(terms, dtype=float)
    s = Series(terms, float(const))
    if complete:
        s.tail, s.err, s.status, s.model = estimate_tail(terms)
    return s


# --------------------------------------------------------- coefficient sides

def _finite_streams(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(np.asarray(a))):
            raise RuleError("coefficients contain non-finite values")


def coeff_side_killip_simon(b, a):
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    _finite_streams(b, a)
    if np.any(a <= 0):
        raise RuleError("off-diagonal coefficients must be positive")
    n = min(len(b), len(a))
    return make_series(0.5 * b[:n] ** 2 + G(a[:n] ** 2))


def coeff_side_mp(z, tau):
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise RuleError("z-coefficients must be nonnegative")
    n = len(z) // 2
    odd, even = z[0:2 * n:2], z[1:2 * n:2]
    return make_series(G(odd) / tau + G(even / tau))


def _check_u(u):
    u = np.asarray(u, dtype=float)
    if np.any(np.abs(u) >= 1):
        raise RuleError("canonical moments must satisfy |u_k| < 1")
    return u


def coeff_side_kmk(u, kappa1, kappa2):
    u = _check_u(u)
    n = len(u) // 2
    return make_series(H_odd(u[0:2 * n:2], kappa1, kappa2) + H_even(u[1:2 * n:2], kappa1, kappa2))


def coeff_side_arcsine(u):
    u = _check_u(u)
    return make_series(-np.log1p(-u * u))


def coeff_side_c0(a):
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise RuleError("off-diagonal coefficients must be positive")
    return make_series(-np.log(a * a), LOG2)


def _gw_range(g, lo=-1.0, hi=0.0):
    if not lo <= g <= hi:
        raise RuleError(f"g = {g} outside [{lo}, {hi}]")


def coeff_side_gw(alpha, g, variant="classical"):
    """Coefficient side of the GW(g) rule; alpha_{-1} = -1."""
    alpha = np.asarray(alpha, dtype=complex)
    if np.any(np.abs(alpha) >= 1):
        raise RuleError("Verblunsky coefficients must lie in the open unit disk")
    prev = np.concatenate([[-1.0], alpha[:-1]])
    r2 = np.abs(alpha) ** 2
    if variant == "classical":
        _gw_range(g)
        terms = -0.5 * g * np.abs(alpha - prev) ** 2 - np.log1p(-r2) + g * r2
        return make_series(terms, H_gw(g) + 0.5 * g)
    if variant == "modified":
        _gw_range(g, -1.0, 1.0)
        ref = gw_alpha(g, np.arange(len(alpha)))
        rprev = np.concatenate([[-1.0], ref[:-1]])
        terms = (g * np.real(alpha * np.conj(prev) - ref * np.conj(rprev))
                 - np.log((1 - r2) / (1 - np.abs(ref) ** 2)))
        return make_series(terms)
    raise RuleError(f"unknown GW variant {variant!r}")


def coeff_side_szego(alpha):
    alpha = np.asarray(alpha, dtype=complex)
    r2 = np.abs(alpha) ** 2
    if np.any(r2 >= 1):
        raise RuleError("Verblunsky coefficients must lie in the open unit disk")
    return make_series(-np.log1p(-r2))


def coeff_side_hp(gamma, d):
    if d < 0:
        raise RuleError("HP requires d >= 0")
    return make_series(H_hp(gamma, d))


def _neglog1m(r2):
    """-log(1 - r2), +inf for r2 >= 1."""
    r2 = np.asarray(r2, dtype=float)
    out = np.full(r2.shape, math.inf)
    ok = r2 < 1
    out[ok] = -np.log1p(-r2[ok])
    return out


def _truncation_extra(zeta):
    r = abs(zeta)
    return 0 if r == 0 else int(math.ceil(math.log(1e-17) / math.log(r))) + 2


def _np_length(zeta, N):
    # Taylor coefficient j <= N of f(m(w)) picks up c_k with weight ~ C(k, j) |zeta|^(k-j),
    # which peaks near k = j / (1 - |zeta|); twice that plus the geometric margin suffices
    r = abs(zeta)
    return int(math.ceil(2 * N * (1 + r) / (1 - r))) + _truncation_extra(zeta)


def _schur_tail_values(alpha, zeta):
    """f_k(zeta) for the Schur functions with parameters alpha_k, alpha_{k+1}, ...
    (continued fraction run backwards from a zero tail)."""
    alpha = np.asarray(alpha, dtype=complex)
    out = np.zeros(len(alpha) + 1, dtype=complex)
    f = 0j
    for k in range(len(alpha) - 1, -1, -1):
        a = alpha[k]
        f = (a + zeta * f) / (1 + np.conj(a) * zeta * f)
        out[k] = f
    return out[:-1]


def _np_series(vals, zeta, N):
    # vals[0] = f(zeta); an iterate on the circle means a finitely supported remainder
    head = abs(mobius(np.conj(zeta), complex(vals[0]))) ** 2
    r2 = np.abs(vals[1:N]) ** 2
    return make_series(_neglog1m(r2), float(_neglog1m(np.array([head]))[0]))


def coeff_side_poisson(f, zeta, variant="NP", N=DEFAULT_N):
    """Coefficient side of a Poisson(zeta) rule. f is a SchurFunction (NP) or an
    array of Verblunsky coefficients (any variant). For Bessonov and Simon the
    array should extend past N until |zeta|^extra is negligible; NP needs
    roughly 2N(1+|zeta|)/(1-|zeta|) terms since composing with the disk
    automorphism mixes in high Taylor coefficients."""
    zeta = complex(zeta)
    if abs(zeta) >= 1:
        raise RuleError("Poisson rules need |zeta| < 1")
    if variant == "NP":
        if not isinstance(f, SchurFunction):
            f = SchurFunction.from_coefficients(np.asarray(f, dtype=complex))
        return _np_series(nevanlinna_pick_iterates(f, zeta, N), zeta, N)
    alpha = np.asarray(f, dtype=complex)
    if variant == "Bessonov":
        fk = _schur_tail_values(alpha, zeta)
        f0 = fk[0]
        if abs(f0) >= 1:
            return make_series(np.array([math.inf]))
        head = math.log(abs(1 - zeta * f0) ** 2 / ((1 - abs(zeta) ** 2) * (1 - abs(f0) ** 2)))
        v2 = np.abs(fk[1:N]) ** 2
        terms = np.log1p(-abs(zeta) ** 2 * v2) + _neglog1m(v2)
        return make_series(terms, head)
    if variant == "Simon":
        # -log lambda_infinity(zeta) = log sum_k |phi_k(zeta)|^2 (Christoffel
        # function); the terms log(S_n / S_{n-1}) are nonnegative
        Phi, star = 1.0 + 0j, 1.0 + 0j
        norm2 = 1.0
        total = 1.0
        terms = np.zeros(max(min(N, len(alpha) + 1) - 1, 0))
        for n in range(len(terms)):
            a = alpha[n]
            Phi, star = zeta * Phi - np.conj(a) * star, star - a * zeta * Phi
            norm2 *= 1 - abs(a) ** 2
            if norm2 <= 0:
                terms[n:] = math.inf
                break
            v = abs(Phi) ** 2 / norm2
            terms[n] = math.log1p(v / total)
            total += v
        return make_series(terms)
    raise RuleError(f"unknown Poisson variant {variant!r}")


def coeff_side_gateway(variant, coeffs, params=None):
    """Coefficient sides of the rules obtained by pushing GW sum rules to the line.

    NewGW, ShiftedMP and GWMixtureU take canonical moments u_1, u_2, ...;
    GWMixtureA takes the a_k of a symmetric measure; KSVariant takes (b, a)."""
    params = params or {}
    if variant == "NewGW":
        g = float(params["g"])
        _gw_range(g)
        u = _check_u(coeffs)
        prev = np.concatenate([[-1.0], u[:-1]])
        terms = -0.5 * g * (u - prev) ** 2 - np.log1p(-u * u) + g * u * u
        return make_series(terms, H_gw(g) + 0.5 * g)
    if variant == "ShiftedMP":
        u = _check_u(coeffs)
        prev = np.concatenate([[-1.0], u[:-1]])
        return make_series(G((1 - prev) * (1 + u)))
    if variant == "GWMixtureU":
        g = float(params["g"])
        _gw_range(g)
        u = _check_u(coeffs)
        even = u[1::2]
        prev = np.concatenate([[-1.0], even[:-1]])
        terms = -0.5 * g * (even - prev) ** 2 - np.log1p(-even * even) + g * even * even
        return make_series(terms, H_gw(g) + 0.5 * g)
    if variant == "GWMixtureA":
        g = float(params["g"])
        _gw_range(g)
        a2 = np.asarray(coeffs, dtype=float) ** 2
        if np.any(a2 <= 0):
            raise RuleError("off-diagonal coefficients must be positive")
        ag = abs(g)
        terms = ag * G(a2) - (1 - ag) * np.log(a2)
        return make_series(terms, C_mixture(g) + (1 - ag) * LOG2)
    if variant == "KSVariant":
        b, a = coeffs
        s = coeff_side_killip_simon(b, a)
        s.const += 0.5 - LOG2
        return s
    raise RuleError(f"unknown gateway variant {variant!r}")


# -------------------------------------------------------------------- rules

RULE_PARAMS = {
    "SzegoVerblunsky": (), "KillipSimon": (), "MP": ("tau",), "KMK": ("kappa1", "kappa2"),
    "Arcsine": (), "ArcsineC0": (), "GW": ("g",), "GWModified": ("g",), "HP": ("d",),
    "PoissonNP": ("zeta",), "PoissonBessonov": ("zeta",), "PoissonSimon": ("zeta",),
    "NewGW": ("g",), "ShiftedMP": (), "GWMixtureU": ("g",), "GWMixtureA": ("g",),
    "KSVariant": (),
}


def _num(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1] if len(v) > 1 else 0.0)
    if isinstance(v, str):
        c = complex(v.replace(" ", "").replace("i", "j"))
        return c.real if c.imag == 0 else c
    return v


@dataclass(frozen=True)
class Rule:
    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "name", canonical_rule_name(self.name))
        need = RULE_PARAMS[self.name]
        p = {k: _num(v) for k, v in self.params.items()}
        missing = [k for k in need if k not in p]
        if missing:
            raise RuleError(f"rule {self.name} needs parameters {missing}")
        for k in need:
            if k != "zeta":
                p[k] = float(np.real(p[k]))
            else:
                p[k] = complex(p[k])
        object.__setattr__(self, "params", {k: p[k] for k in need})
        self._check_range()

    def _check_range(self):
        p = self.params
        n = self.name
        if n == "MP" and not 0 < p["tau"] <= 1:
            raise RuleError("MP rule needs 0 < tau <= 1")
        if n == "KMK" and (p["kappa1"] < 0 or p["kappa2"] < 0):
            raise RuleError("KMK rule needs kappa1, kappa2 >= 0")
        if n in ("GW", "NewGW", "GWMixtureU", "GWMixtureA"):
            _gw_range(p["g"])
        if n == "GWModified":
            _gw_range(p["g"], -1.0, 1.0)
        if n == "HP" and p["d"] < 0:
            raise RuleError("HP rule needs d >= 0")
        if n.startswith("Poisson") and abs(p["zeta"]) >= 1:
            raise RuleError("Poisson rules need |zeta| < 1")

    @property
    def label(self):
        if not self.params:
            return self.name
        vals = []
        for v in self.params.values():
            if isinstance(v, complex):
                vals.append(f"{v.real:g}{v.imag:+g}j" if v.imag else f"{v.real:g}")
            else:
                vals.append(f"{v:g}")
        return f"{self.name}({', '.join(vals)})"

    @property
    def space(self):
        if self.name in ("SzegoVerblunsky", "GW", "GWModified", "HP", "KSVariant") \
                or self.name.startswith("Poisson"):
            return CIRCLE
        return REAL

    def reference(self):
        n, p = self.name, self.params
        if n == "SzegoVerblunsky":
            return make_reference("UNIF")
        if n == "KillipSimon":
            return make_reference("SC")
        if n == "MP":
            return make_reference("MP", tau=p["tau"])
        if n == "KMK":
            return make_reference("KMK", kappa1=p["kappa1"], kappa2=p["kappa2"])
        if n in ("Arcsine", "ArcsineC0"):
            return make_reference("Arcsine")
        if n in ("GW", "GWModified"):
            return make_reference("GW", g=p["g"])
        if n == "HP":
            return make_reference("HP", d=p["d"]) if p["d"] > 0 else make_reference("UNIF")
        if n.startswith("Poisson"):
            return make_reference("Pois", zeta=p["zeta"])
        if n == "NewGW":
            g = abs(p["g"])
            return _mixture(g, make_reference("D", a=2.0, b=-2.0), make_reference("Arcsine"))
        if n == "ShiftedMP":
            return make_reference("D", a=2.0, b=-2.0)
        if n in ("GWMixtureU", "GWMixtureA"):
            return _mixture(abs(p["g"]), make_reference("SC"), make_reference("Arcsine"))
        if n == "KSVariant":
            return dvz_push(make_reference("GW", g=-1.0), "+")
        raise RuleError(n)

    def band(self):
        """Band of the reference and the outlier functional (None: no outliers possible)."""
        n, p = self.name, self.params
        if n == "KillipSimon":
            return (-2.0, 2.0), F_sc
        if n == "KSVariant":
            return (-2.0, 2.0), None
        if n == "MP":
            t = p["tau"]
            return ((1 - math.sqrt(t)) ** 2, (1 + math.sqrt(t)) ** 2), lambda x: F_mp(x, t)
        if n == "KMK":
            k = kmk_params(p["kappa1"], p["kappa2"])
            return (k["u_minus"], k["u_plus"]), lambda x: F_kmk(x, p["kappa1"], p["kappa2"])
        if n == "HP" and p["d"] > 0:
            td = hp_params(p["d"])["theta_d"]
            return (td, TWO_PI - td), lambda t: F_hp(t, p["d"])
        if self.space == CIRCLE:
            return (0.0, TWO_PI), None
        return (-2.0, 2.0), None

    def support_range(self):
        """Where the rule's measures must live (real rules only)."""
        if self.name == "KillipSimon" or self.space == CIRCLE:
            return None
        if self.name == "MP":
            return (0.0, math.inf)
        return (-2.0, 2.0)

    @property
    def needs_symmetric(self):
        return self.name in ("GWMixtureU", "GWMixtureA", "KSVariant")


def _mixture(w, m1, m2):
    if w == 0:
        return m2
    if w == 1:
        return m1
    return mix(w, m1, m2)


_RULE_NAMES = {re.sub(r"[^a-z0-9]", "", k.lower()): k for k in RULE_PARAMS}


def canonical_rule_name(name):
    """'killip-simon', 'KillipSimon' and 'killip_simon' all name the same rule."""
    key = re.sub(r"[^a-z0-9]", "", str(name).lower())
    if key not in _RULE_NAMES:
        raise RuleError(f"unknown rule {name!r}; known: {', '.join(RULE_PARAMS)}")
    return _RULE_NAMES[key]


_RULE_RE = re.compile(r"^\s*([\w-]+)\s*(?:\((.*)\))?\s*$")


def parse_rule(rule):
    """Rule from a Rule, a dict {"rule"/"name": ..., "params": {...}} or a string
    such as "KMK(1, 0.5)", "GW(g=-0.5)" or "PoissonNP(0.3+0.2j)"."""
    if isinstance(rule, Rule):
        return rule
    if isinstance(rule, dict):
        name = rule.get("rule", rule.get("name"))
        if isinstance(name, str) and "(" in name:
            base = parse_rule(name)
            return Rule(base.name, {**base.params, **(rule.get("params", {}) or {})})
        return Rule(canonical_rule_name(name), dict(rule.get("params", {}) or {}))
    m = _RULE_RE.match(str(rule))
    if not m:
        raise RuleError(f"cannot parse rule {rule!r}")
    name, args = canonical_rule_name(m.group(1)), m.group(2)
    params = {}
    if args and args.strip():
        parts = [s.strip() for s in args.split(",")]
        names = RULE_PARAMS[name]
        for i, s in enumerate(parts):
            if "=" in s:
                k, v = s.split("=", 1)
                params[k.strip()] = _num(v.strip())
            elif i < len(names):
                params[names[i]] = _num(s)
            else:
                raise RuleError(f"too many parameters for {name}")
    return Rule(name, params)


# ---------------------------------------------------------- spectral side

def _rule_measure(rule, mu):
    """The measure the rule is evaluated at (KSVariant pushes a symmetric circle
    measure through DVZ)."""
    if rule.name == "KSVariant":
        if mu.space != CIRCLE:
            raise RuleError("KSVariant is evaluated at DVZ(nu): pass the symmetric circle measure nu")
        if not is_symmetric(mu):
            raise RuleError("KSVariant needs a symmetric circle measure nu")
        return dvz_push(mu, "+")
    if mu.space != rule.space:
        raise MeasureError(f"rule {rule.label} needs a {rule.space} measure, got {mu.space}")
    if rule.needs_symmetric and not is_symmetric(mu):
        raise RuleError(f"rule {rule.label} needs a symmetric measure")
    rng = rule.support_range() if mu.space == REAL else None
    if rng is not None:
        lo, hi = mu.support_hull()
        if lo < rng[0] - 1e-12 or hi > rng[1] + 1e-12:
            raise RuleError(f"rule {rule.label} needs support in [{rng[0]}, {rng[1]}]; "
                            f"measure spans [{lo:.6g}, {hi:.6g}]")
    return mu


def spectral_side(rule, mu, cap=DEFAULT_CAP, tol=1e-12):
    """(kl term, outlier term, reason). Infinite values carry a reason string."""
    rule = parse_rule(rule)
    mu = _rule_measure(rule, mu)
    (lo, hi), F = rule.band()
    band_ok, outliers = support_classify(mu, lo, hi)
    if not band_ok:
        return math.inf, math.inf, "absolutely continuous mass outside the band"
    out = 0.0
    reason = ""
    if F is None and outliers:
        return math.inf, math.inf, "atoms outside the support of the reference"
    for x, _ in outliers:
        v = F(x)
        if math.isinf(v):
            reason = f"outlier at {x:.12g} has infinite weight"
        out += v
    if out > cap:
        out = math.inf
    K, info = kl(rule.reference(), mu, tol=tol, cap=cap, details=True)
    if math.isinf(K):
        reg = info.get("region")
        reason = reason or (f"reference not absolutely continuous w.r.t. the measure near {reg}"
                            if reg else "relative entropy exceeds the divergence cap")
    return float(K), float(out), reason


# ---------------------------------------------------- coefficient extraction

def real_coefficients(mu, N):
    """b_1..b_N, a_1..a_N: exact for coefficient-defined measures, Lanczos otherwise."""
    if mu.kind == "coeffs" and "tail" in mu.info:
        b, a = mu.info["b"], mu.info["a"]
        ta, tb = mu.info["tail"]
        bb = np.full(N, tb)
        aa = np.full(N, ta)
        bb[:min(N, len(b))] = b[:N]
        aa[:min(N, len(a))] = a[:N]
        return bb, aa
    J = jacobi_from_measure(mu, N)
    return J.b, J.a


def circle_coefficients(nu, N):
    if nu.kind == "coeffs" and "alpha" in nu.info:
        al = np.zeros(N, dtype=complex)
        src = np.asarray(nu.info["alpha"], dtype=complex)[:N]
        al[:len(src)] = src
        return al
    return verblunsky_from_measure(nu, N).alpha


def _stream(coeffs, N, dtype=complex):
    if callable(coeffs):
        return np.array([coeffs(k) for k in range(N)], dtype=dtype)
    return np.asarray(coeffs, dtype=dtype)


def coefficient_side(rule, mu=None, N=DEFAULT_N, coeffs=None):
    """Coefficient-side series of the rule at mu (or at an explicit coefficient
    stream: Verblunsky alpha for circle rules, (b, a) for Jacobi rules)."""
    rule = parse_rule(rule)
    n, p = rule.name, rule.params
    if mu is not None:
        mu = from_spec(mu)
    if rule.space == CIRCLE and n != "KSVariant":
        if n == "PoissonNP" and coeffs is None and not (mu.kind == "coeffs" and "alpha" in mu.info):
            # moments of the measure give the composed Schur series directly
            return _np_series(nevanlinna_pick_from_measure(mu, p["zeta"], N), complex(p["zeta"]), N)
        if n == "PoissonNP":
            length = _np_length(p["zeta"], N)
        elif n.startswith("Poisson"):
            length = N + _truncation_extra(p["zeta"])
        else:
            length = N
        if coeffs is not None:
            alpha = _stream(coeffs, length)
        else:
            alpha = circle_coefficients(mu, length)
        if n == "SzegoVerblunsky":
            return coeff_side_szego(alpha[:N])
        if n == "GW":
            return coeff_side_gw(alpha[:N], p["g"], "classical")
        if n == "GWModified":
            return coeff_side_gw(alpha[:N], p["g"], "modified")
        if n == "HP":
            return coeff_side_hp(deformed_verblunsky(alpha[:N]), p["d"])
        variant = n[len("Poisson"):]
        return coeff_side_poisson(alpha, p["zeta"], variant, N)
    if n == "KSVariant":
        if coeffs is not None:
            b, a = coeffs
        elif mu.kind == "coeffs" and "alpha" in mu.info:
            from .mappings import dvz_jacobi
            b, a = dvz_jacobi(circle_coefficients(mu, N), "+")
        else:
            b, a = real_coefficients(_rule_measure(rule, mu), N)
        return coeff_side_gateway("KSVariant", (np.asarray(b)[:N], np.asarray(a)[:N]))
    if coeffs is not None:
        b, a = (np.asarray(c, dtype=float) for c in coeffs)
    else:
        b, a = real_coefficients(mu, N)
    b, a = b[:N], a[:N]
    if n == "KillipSimon":
        return coeff_side_killip_simon(b, a)
    if n == "MP":
        from .oprl import JacobiCoeffs
        return coeff_side_mp(z_from_jacobi(JacobiCoeffs(b, a)), p["tau"])
    if n == "ArcsineC0":
        return coeff_side_c0(a)
    if n == "GWMixtureA":
        return coeff_side_gateway("GWMixtureA", a, p)
    from .oprl import JacobiCoeffs
    u = canonical_from_jacobi(JacobiCoeffs(b, a))
    if len(u) < 2 * N:
        raise RuleError("measure is (near) trivial: canonical moments reach the boundary")
    if n == "KMK":
        return coeff_side_kmk(u, p["kappa1"], p["kappa2"])
    if n == "Arcsine":
        return coeff_side_arcsine(u)
    if n in ("NewGW", "ShiftedMP", "GWMixtureU"):
        return coeff_side_gateway(n, u, p)
    raise RuleError(n)


# ------------------------------------------------------------------ reports

@dataclass
class SumRuleReport:
    rule: str
    lhs: float
    rhs: float
    kl: float
    outliers: float
    partials: np.ndarray
    N: int
    tail: float
    tail_err: float
    verdict: str
    diff: float
    tol: float
    reason: str = ""
    series_status: str = ""
    model: str = ""

    def to_dict(self, partials=False):
        def num(v):
            if v is None:
                return None
            v = float(v)
            if math.isinf(v):
                return "inf" if v > 0 else "-inf"
            if math.isnan(v):
                return None
            return v
        d = {"rule": self.rule, "lhs": num(self.lhs), "rhs": num(self.rhs), "kl": num(self.kl),
             "outliers": num(self.outliers), "N": self.N, "tail": num(self.tail),
             "verdict": self.verdict, "diff": num(self.diff), "tail_err": num(self.tail_err),
             "tol": self.tol}
        if self.reason:
            d["reason"] = self.reason
        if partials:
            d["partials"] = [num(v) for v in self.partials]
        return d


def _verdict(lhs, rhs, series, tol, cap):
    lhs_inf = math.isinf(lhs) or lhs > cap
    rhs_inf = series.status == "divergent" or math.isinf(rhs) or rhs > cap
    if lhs_inf and rhs_inf:
        return "both_infinite", math.inf
    if lhs_inf or rhs_inf:
        return "mismatch", math.inf
    diff = abs(lhs - rhs)
    if series.status == "unconverged" or series.err > tol:
        return "unconverged", diff
    return ("match" if diff <= tol else "mismatch"), diff


def verify(rule, measure=None, N=DEFAULT_N, tol=DEFAULT_TOL, cap=DEFAULT_CAP, coeffs=None,
           quad_tol=1e-12):
    """Evaluate both sides of the rule at the measure and compare them.

    measure may be a Measure or a JSON measure description. For circle rules it
    may be omitted when coeffs gives an infinite Verblunsky stream (a callable
    k -> alpha_k): the entropy side is then followed along Bernstein-Szego
    truncations and declared infinite when it keeps growing under doubling."""
    rule = parse_rule(rule)
    if measure is None:
        if coeffs is None or rule.space != CIRCLE or rule.name == "KSVariant":
            raise RuleError("verify needs a measure (or a Verblunsky stream for circle rules)")
        K, reason = _lhs_from_truncations(rule, coeffs, N, cap)
        out = 0.0
    else:
        measure = from_spec(measure)
        K, out, reason = spectral_side(rule, measure, cap, quad_tol)
    lhs = K + out
    series = coefficient_side(rule, measure, N, coeffs)
    rhs = series.value
    if series.status == "divergent" and not reason:
        reason = f"coefficient series diverges ({series.model} terms)"
    verdict, diff = _verdict(lhs, rhs, series, tol, cap)
    return SumRuleReport(rule.label, lhs, rhs, K, out, series.partials, series.N, series.tail,
                         series.err, verdict, diff, tol, reason, series.status, series.model)


def _lhs_from_truncations(rule, coeffs, N, cap):
    ref = rule.reference()
    sizes = [max(4, N // 8), max(8, N // 4), max(16, N // 2), N]
    vals = []
    for M in sizes:
        # Bernstein-Szego truncations are normalized by construction
        vals.append(kl(ref, verblunsky_measure(_stream(coeffs, M)), cap=cap, check=False))
        if math.isinf(vals[-1]):
            return math.inf, "relative entropy of a truncation is infinite"
    d = np.diff(vals)
    if np.all(d > 0) and d[-1] > 0.7 * d[-2] and d[-1] > 1e-8:
        return math.inf, "relative entropy of truncations keeps growing under doubling"
    r = d[-1] / d[-2] if d[-2] != 0 else 0.0
    extra = d[-1] * r / (1 - r) if abs(r) < 0.9 else 0.0
    return float(vals[-1] + extra), ""


# ------------------------------------------------------------- diagnostics

def gem_diagnostic(alpha, g):
    """Predict finiteness of the GW(g) coefficient side from the stream alone."""
    alpha = np.asarray(alpha, dtype=complex)
    _gw_range(g)
    r2 = np.abs(alpha) ** 2
    if g > -1:
        checks = [r2]
    else:
        checks = [r2 * r2, np.abs(np.diff(alpha)) ** 2]
    for terms in checks:
        if estimate_tail(terms)[2] == "divergent":
            return "infinite"
    return "finite"


def hp_partial_sum_check(nu, d, n):
    """S_n from the H_d terms and from the leading coefficients and values at 1 of
    the orthonormal polynomials of nu and of HP(d)."""
    if d <= 0:
        raise RuleError("the comparison needs d > 0")
    if isinstance(nu, Measure):
        alpha = circle_coefficients(nu, n)
    else:
        alpha = np.asarray(nu, dtype=complex)[:n]
    gamma = deformed_verblunsky(alpha)
    direct = float(np.sum(H_hp(gamma, d)))
    gd = -d / (1 + d)
    st = szego_evaluate(alpha, 1.0 + 0j, n)
    ref = szego_evaluate(np.full(n, gd, dtype=complex), 1.0 + 0j, n)
    if abs(st.Phi) == 0:
        raise ZeroDivisionError("phi_n(1) = 0")
    via_poly = (2 * (1 + d) * math.log(st.kappa / ref.kappa)
                - 2 * d * math.log(abs(st.phi) / abs(ref.phi)))
    return direct, via_poly


def phi_one_product(alpha, n=None):
    """(|Phi_n(1)|, |prod_{k<n} (1 - gamma_k)|)."""
    alpha = np.asarray(alpha, dtype=complex)
    n = len(alpha) if n is None else n
    gamma = deformed_verblunsky(alpha[:n])
    return abs(complex(szego_evaluate(alpha, 1.0 + 0j, n).Phi)), abs(np.prod(1 - gamma))


def outlier_function(rule):
    """The outlier functional of the rule as a callable (None when the band is full)."""
    return parse_rule(rule).band()[1]
