"""Symbolic probability measures on the real line and on the unit circle.

A measure is stored as a tuple of absolutely continuous pieces plus a tuple
of atoms. Each piece carries a closed-form density on an interval (real line,
density with respect to dx) or on an arc (circle, density with respect to
d(theta)/2pi). Mixtures, pushforwards and reweightings build new pieces from
old ones, so every density stays an exact pointwise formula.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .quadrature import adaptive_cosine, adaptive_cosine_nodes, cosine_nodes, periodic_trapezoid

TWO_PI = 2 * np.pi
REAL = "real"
CIRCLE = "circle"
TINY = 1e-300
NORM_TOL = 1e-10

REAL_FAMILIES = ("SC", "MP", "KMK", "Arcsine", "D")
CIRCLE_FAMILIES = ("UNIF", "GW", "HP", "Pois")


class MeasureError(ValueError):
    """Invalid parameters, mismatched spaces or non-normalized input."""


@dataclass(frozen=True, eq=False)
class Piece:
    """Density on [lo, hi]; func(x, dl, dr) gets dl = x - lo and dr = hi - x."""
    lo: float
    hi: float
    func: object
    periodic: bool = False
    cuts: tuple = ()

    def evaluate(self, x, space):
        x = np.asarray(x, dtype=float)
        if self.periodic:
            t = np.mod(x, TWO_PI)
            return np.asarray(self.func(t, t, TWO_PI - t), dtype=float) * np.ones(x.shape)
        t = self.lo + np.mod(x - self.lo, TWO_PI) if space == CIRCLE else x
        inside = (t >= self.lo) & (t <= self.hi)
        out = np.zeros(t.shape)
        if inside.any():
            ti = t[inside]
            out[inside] = self.func(ti, ti - self.lo, self.hi - ti)
        return out

    def local(self, a, b, x, da, db):
        """Evaluate on the cell [a, b] (piece coordinates) from offsets to its ends."""
        if self.periodic:
            t = np.mod(x, TWO_PI)
            return self.func(t, t, TWO_PI - t)
        tol = 1e-13 * max(1.0, abs(self.lo), abs(self.hi))
        dl = da if abs(a - self.lo) <= tol else (a - self.lo) + da
        dr = db if abs(b - self.hi) <= tol else (self.hi - b) + db
        return self.func(x, dl, dr)

    def scaled(self, c):
        f = self.func
        return Piece(self.lo, self.hi, lambda x, dl, dr: c * f(x, dl, dr), self.periodic, self.cuts)

    def segments(self):
        pts = [self.lo] + sorted(c for c in self.cuts if self.lo < c < self.hi) + [self.hi]
        return list(zip(pts[:-1], pts[1:]))


@dataclass(frozen=True, eq=False)
class Measure:
    space: str
    kind: str
    pieces: tuple = ()
    atoms: tuple = ()
    symmetric: bool = False
    label: str = ""
    info: dict = field(default_factory=dict)
    spec: dict = None

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            for p in self.pieces:
                out = out + p.evaluate(x, self.space)
        # 0 * inf at a hard edge
        return np.where(np.isnan(out), 0.0, out)

    def __call__(self, x):
        return self.density(x)

    def cell_density(self, a, b, x, da, db):
        """Density on the cell [a, b] between consecutive breakpoints."""
        out = np.zeros(np.shape(x))
        for p in self.pieces:
            if p.periodic:
                out = out + p.local(a, b, x, da, db)
                continue
            if self.space == CIRCLE:
                shift = self._shift(p, a, b)
                if shift is None:
                    continue
                out = out + p.local(a + shift, b + shift, x + shift, da, db)
            elif p.lo <= a + 1e-14 and b <= p.hi + 1e-14:
                out = out + p.local(a, b, x, da, db)
        return out

    @staticmethod
    def _shift(p, a, b):
        for k in (-2, -1, 0, 1, 2):
            s = k * TWO_PI
            if p.lo <= a + s + 1e-13 and b + s <= p.hi + 1e-13:
                return s
        return None

    @cached_property
    def ac_mass(self):
        return float(np.real(integrate(self, lambda x: np.ones(np.shape(x)), atoms=False)))

    @property
    def atom_mass(self):
        return float(sum(m for _, m in self.atoms))

    @property
    def mass(self):
        return self.ac_mass + self.atom_mass

    def breakpoints(self):
        pts = []
        for p in self.pieces:
            if not p.periodic:
                pts += [p.lo, p.hi]
            pts += list(p.cuts)
        if self.space == CIRCLE:
            pts = [float(np.mod(t, TWO_PI)) for t in pts]
            pts = [0.0 if t > TWO_PI - 1e-13 else t for t in pts]
        return _unique(pts)

    def support_hull(self):
        if self.space == CIRCLE:
            return 0.0, TWO_PI
        pts = [p.lo for p in self.pieces] + [p.hi for p in self.pieces]
        pts += [x for x, _ in self.atoms]
        return min(pts), max(pts)

    def validate(self, tol=NORM_TOL):
        if any(m <= 0 for _, m in self.atoms):
            raise MeasureError("atom masses must be positive")
        locs = [x for x, _ in self.atoms]
        if len(_unique(locs, 1e-14)) != len(locs):
            raise MeasureError("atom locations must be distinct")
        if abs(self.mass - 1.0) > tol:
            raise MeasureError(f"measure {self.label or self.kind} has mass {self.mass!r}, expected 1")
        return self

    def __repr__(self):
        return f"Measure({self.space}, {self.label or self.kind})"


def _unique(pts, tol=1e-12):
    out = []
    for t in sorted(pts):
        if not out or t - out[-1] > tol:
            out.append(float(t))
    return out


# ---------------------------------------------------------------- integration

def integrate_piece(piece, f, space, tol=1e-13):
    g = piece.func
    if piece.periodic:
        return periodic_trapezoid(lambda t: f(t) * g(t, t, TWO_PI - t), tol=tol)
    total = 0.0
    for a, b in piece.segments():
        def fun(x, da, db, a=a, b=b):
            return f(x) * piece.local(a, b, x, da, db)
        total = total + adaptive_cosine(fun, a, b, tol=tol, offsets=True)
    return total / TWO_PI if space == CIRCLE else total


def integrate(mu, f, atoms=True, tol=1e-13):
    """Integral of the vectorized function f against mu."""
    total = 0.0
    for p in mu.pieces:
        total = total + integrate_piece(p, f, mu.space, tol)
    if atoms and mu.atoms:
        locs = np.array([x for x, _ in mu.atoms])
        masses = np.array([m for _, m in mu.atoms])
        total = total + np.sum(masses * f(locs))
    return total


def discretize(mu, n, adaptive=False):
    """Nodes and nonnegative weights reproducing mu; n nodes per piece segment.

    adaptive=True refines segments where the density is poorly resolved
    (sharp peaks), so the node count may exceed n."""
    xs, ws = [], []
    for p in mu.pieces:
        if p.periodic:
            t = TWO_PI * np.arange(n) / n
            xs.append(t)
            ws.append(p.func(t, t, TWO_PI - t) * np.ones(n) / n)
            continue
        for a, b in p.segments():
            if adaptive:
                x, w, da, db = adaptive_cosine_nodes(
                    lambda x, da, db, a=a, b=b, p=p: p.local(a, b, x, da, db), a, b, n)
            else:
                x, w, da, db = cosine_nodes(a, b, n, offsets=True)
            v = p.local(a, b, x, da, db) * w
            xs.append(x)
            ws.append(v / TWO_PI if mu.space == CIRCLE else v)
    for x, m in mu.atoms:
        xs.append(np.array([x]))
        ws.append(np.array([m]))
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ws)


def _cells(mu, a, b):
    pts = mu.breakpoints()
    if mu.space == CIRCLE:
        pts = [a + np.mod(t - a, TWO_PI) for t in pts]
    pts = _unique([a] + [t for t in pts if a < t < b] + [b])
    return list(zip(pts[:-1], pts[1:]))


def interval_mass(mu, a, b):
    """a.c. mass of mu on [a, b] (real) or on the arc from a to b (circle)."""
    total = 0.0
    for lo, hi in _cells(mu, a, b):
        total += adaptive_cosine(lambda x, da, db: mu.cell_density(lo, hi, x, da, db),
                                 lo, hi, tol=1e-13, offsets=True)
    return total / TWO_PI if mu.space == CIRCLE else total


# ---------------------------------------------------------- reference families

def _sqrtpos(v):
    return np.sqrt(np.maximum(v, 0.0))


def _real_piece(lo, hi, f, cuts=()):
    return Piece(float(lo), float(hi), f, False, tuple(cuts))


def _sc():
    f = lambda x, dl, dr: _sqrtpos(dl * dr) / TWO_PI
    return (_real_piece(-2, 2, f),), {"band": (-2.0, 2.0)}


def _mp(tau, convention="standard"):
    if not 0 < tau <= 1:
        raise MeasureError("MP requires 0 < tau <= 1")
    if convention == "standard":
        lo, hi = (1 - np.sqrt(tau)) ** 2, (1 + np.sqrt(tau)) ** 2
    elif convention == "printed":
        lo, hi = np.sqrt(1 - tau), np.sqrt(1 + tau)
    else:
        raise MeasureError(f"unknown MP convention {convention!r}")

    def raw(x, dl, dr):
        return _sqrtpos(dl * dr) / (TWO_PI * tau * x)

    norm = 1.0
    if convention != "standard":
        norm = 1.0 / adaptive_cosine(raw, lo, hi, offsets=True)

    def f(x, dl, dr):
        return norm * raw(x, dl, dr)

    info = {"tau": tau, "tau_minus": lo, "tau_plus": hi, "band": (lo, hi),
            "convention": convention, "normalization": norm}
    return (_real_piece(lo, hi, f),), info


def kmk_params(kappa1, kappa2):
    s = 2 + kappa1 + kappa2
    root = 4 * np.sqrt((1 + kappa1) * (1 + kappa2) * (1 + kappa1 + kappa2))
    # distances of the band edges to -2 and 2, free of cancellation
    gap_lo = 8 * kappa2 ** 2 / (2 * (kappa1 * kappa2 + 2 * kappa1 + kappa2 ** 2 + 2 * kappa2 + 2) + root)
    gap_hi = 8 * kappa1 ** 2 / (2 * (kappa1 ** 2 + kappa1 * kappa2 + 2 * kappa1 + 2 * kappa2 + 2) + root)
    return {"kappa1": kappa1, "kappa2": kappa2, "u_minus": -2 + gap_lo, "u_plus": 2 - gap_hi,
            "gap_lo": gap_lo, "gap_hi": gap_hi, "u_e": -(kappa1 + kappa2) / s,
            "u_o": (kappa2 - kappa1) / s}


def _kmk(kappa1, kappa2):
    if kappa1 < 0 or kappa2 < 0:
        raise MeasureError("KMK requires kappa1, kappa2 >= 0")
    info = kmk_params(kappa1, kappa2)
    lo, hi = info["u_minus"], info["u_plus"]
    c = (2 + kappa1 + kappa2) / TWO_PI
    gl, gr = info["gap_lo"], info["gap_hi"]

    def f(x, dl, dr):
        return c * _sqrtpos(dl * dr) / ((dl + gl) * (dr + gr))

    info["band"] = (lo, hi)
    return (_real_piece(lo, hi, f),), info


def _arcsine():
    f = lambda x, dl, dr: 1 / (np.pi * np.sqrt(dl * dr))
    return (_real_piece(-2, 2, f),), {"band": (-2.0, 2.0)}


def _dab(a, b):
    if a == b:
        raise MeasureError("D(a, b) requires a != b")
    lo, hi = min(a, b), max(a, b)
    c = 2 / (np.pi * (hi - lo))

    def f(x, dl, dr):
        return c * np.sqrt(dl / dr) if a < b else c * np.sqrt(dr / dl)

    return (_real_piece(lo, hi, f),), {"a": a, "b": b, "band": (lo, hi)}


def _unif():
    return (Piece(0.0, TWO_PI, lambda t, dl, dr: np.ones(np.shape(t)), True),), {}


def gw_params(g):
    info = {"g": g}
    if abs(g) >= 1:
        info["theta_g"] = 2 * np.arcsin(1 / np.sqrt(abs(g)))
        info["q"] = (np.sqrt(abs(g)) - np.sqrt(abs(g) - 1)) ** 2
    elif g != 0:
        # roots of x + 1/x = -2/g; the small one without cancellation
        s = np.sqrt(1 - g * g)
        with np.errstate(over="ignore"):
            big, small = -(1 + s) / np.float64(g), -g / (1 + s)
        info["x_plus"], info["x_minus"] = (big, small) if g < 0 else (small, big)
    return info


def _gw_gapped(g):
    info = gw_params(g)
    tg = info["theta_g"]
    ag = abs(g)
    if g < 0:
        c2 = np.cos(tg / 2) ** 2

        def f(t, dl, dr):
            s = np.sin(t / 2)
            return 2 * ag * np.abs(s) * _sqrtpos(s * s - c2)

        lo, hi = np.pi - tg, np.pi + tg
    else:
        s2 = np.sin(tg / 2) ** 2

        def f(t, dl, dr):
            return 2 * ag * np.abs(np.cos(t / 2)) * _sqrtpos(s2 - np.sin(t / 2) ** 2)

        lo, hi = -tg, tg
    info["band"] = (lo, hi)
    return Piece(lo, hi, f), info


def _gw(g):
    if abs(g) >= 1:
        piece, info = _gw_gapped(g)
        return (piece,), info
    info = gw_params(g)
    info["band"] = (0.0, TWO_PI)
    if g == 0:
        return _unif()[0], info
    edge, _ = _gw_gapped(-1.0 if g < 0 else 1.0)
    return (edge.scaled(abs(g)), _unif()[0][0].scaled(1 - abs(g))), info


def hp_params(d):
    return {"d": d, "theta_d": 2 * np.arcsin(d / (1 + d)), "gamma_d": -d / (1 + d),
            "x_d": 2 * (1 + 2 * d - d * d) / (1 + d) ** 2,
            "xhat_d": 2 * np.sqrt(1 + 2 * d) / (1 + d)}


def _hp(d):
    if d <= 0:
        raise MeasureError("HP requires d > 0")
    info = hp_params(d)
    td = info["theta_d"]
    s2 = np.sin(td / 2) ** 2

    def f(t, dl, dr):
        s = np.sin(t / 2)
        return (1 + d) * _sqrtpos(s * s - s2) / s

    info["band"] = (td, TWO_PI - td)
    return (Piece(td, TWO_PI - td, f),), info


def _pois(zeta):
    zeta = complex(zeta)
    if abs(zeta) >= 1:
        raise MeasureError("Pois requires |zeta| < 1")
    c = 1 - abs(zeta) ** 2

    def f(t, dl, dr):
        return c / np.abs(np.exp(1j * t) - zeta) ** 2

    return (Piece(0.0, TWO_PI, f, True),), {"zeta": zeta, "band": (0.0, TWO_PI)}


def _as_complex(v):
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1] if len(v) > 1 else 0.0)
    return complex(v)


def make_reference(family, params=None, **kw):
    """Reference measure of the given family; params as a dict or keywords."""
    p = dict(params or {})
    p.update(kw)
    sym = False
    if family == "SC":
        pieces, info = _sc()
        space, sym, spec_params = REAL, True, {}
    elif family == "MP":
        conv = p.get("convention", "standard")
        pieces, info = _mp(float(p["tau"]), conv)
        space, spec_params = REAL, {"tau": float(p["tau"])}
        if conv != "standard":
            spec_params["convention"] = conv
    elif family == "KMK":
        k1 = float(p.get("kappa1", p.get("kappa", 0.0)))
        k2 = float(p.get("kappa2", p.get("kappa", 0.0)))
        pieces, info = _kmk(k1, k2)
        space, sym, spec_params = REAL, k1 == k2, {"kappa1": k1, "kappa2": k2}
    elif family == "Arcsine":
        pieces, info = _arcsine()
        space, sym, spec_params = REAL, True, {}
    elif family == "D":
        a, b = float(p["a"]), float(p["b"])
        pieces, info = _dab(a, b)
        space, spec_params = REAL, {"a": a, "b": b}
    elif family == "UNIF":
        pieces, info = _unif()
        space, sym, spec_params = CIRCLE, True, {}
    elif family == "GW":
        g = float(p["g"])
        pieces, info = _gw(g)
        space, sym, spec_params = CIRCLE, True, {"g": g}
    elif family == "HP":
        d = float(p["d"])
        pieces, info = _hp(d)
        space, sym, spec_params = CIRCLE, True, {"d": d}
    elif family == "Pois":
        zeta = _as_complex(p.get("zeta", 0.0))
        pieces, info = _pois(zeta)
        space, sym = CIRCLE, zeta.imag == 0
        spec_params = {"zeta": [zeta.real, zeta.imag]}
    else:
        raise MeasureError(f"unknown family {family!r}")
    spec = {"space": space, "kind": "reference", "family": family, "params": spec_params}
    label = family + (f"({', '.join(f'{k}={v}' for k, v in spec_params.items())})" if spec_params else "")
    return Measure(space, "reference", tuple(pieces), (), sym, label, info, spec)


# -------------------------------------------------------------- constructions

def _merge_atoms(atoms, space):
    merged = {}
    for x, m in atoms:
        key = float(np.mod(x, TWO_PI)) if space == CIRCLE else float(x)
        hit = next((k for k in merged if abs(k - key) < 1e-12 or
                    (space == CIRCLE and abs(abs(k - key) - TWO_PI) < 1e-12)), None)
        merged[key if hit is None else hit] = merged.get(hit, 0.0) + m if hit is not None else m
    return tuple((k, v) for k, v in sorted(merged.items()) if v > 0)


def mix(tau1, mu1, mu2):
    """Convex combination tau1*mu1 + (1-tau1)*mu2."""
    if mu1.space != mu2.space:
        raise MeasureError("mixture components live on different spaces")
    if not 0 < tau1 < 1:
        raise MeasureError("mixture weight must lie in (0, 1)")
    tau2 = 1 - tau1
    pieces = tuple(p.scaled(tau1) for p in mu1.pieces) + tuple(p.scaled(tau2) for p in mu2.pieces)
    atoms = [(x, tau1 * m) for x, m in mu1.atoms] + [(x, tau2 * m) for x, m in mu2.atoms]
    spec = {"space": mu1.space, "kind": "mixture", "params": {"tau": tau1},
            "components": [mu1.spec, mu2.spec]}
    return Measure(mu1.space, "mixture", pieces, _merge_atoms(atoms, mu1.space),
                   mu1.symmetric and mu2.symmetric, f"{tau1:g}*{mu1.label}+{tau2:g}*{mu2.label}",
                   {"tau": tau1, "components": (mu1, mu2)}, spec)


def add_atoms(base, atoms, symmetric=None):
    """(1 - sum of masses) * base + sum of point masses."""
    atoms = [(float(x), float(m)) for x, m in atoms]
    if any(m <= 0 for _, m in atoms):
        raise MeasureError("atom masses must be positive")
    w = sum(m for _, m in atoms)
    if not 0 <= w < 1:
        raise MeasureError("total atom mass must lie in [0, 1)")
    pieces = tuple(p.scaled(1 - w) for p in base.pieces)
    merged = _merge_atoms([(x, (1 - w) * m) for x, m in base.atoms] + atoms, base.space)
    if symmetric is None:
        symmetric = base.symmetric and _atoms_symmetric(merged, base.space)
    spec = {"space": base.space, "kind": "composite", "atoms": [list(a) for a in atoms],
            "components": [base.spec]}
    return Measure(base.space, "composite", pieces, merged, symmetric,
                   f"{base.label}+atoms", {"base": base, "added": tuple(atoms)}, spec)


def atomic_measure(space, atoms):
    atoms = _merge_atoms([(float(x), float(m)) for x, m in atoms], space)
    if any(m <= 0 for _, m in atoms):
        raise MeasureError("atom masses must be positive")
    spec = {"space": space, "kind": "composite", "atoms": [list(a) for a in atoms], "components": []}
    return Measure(space, "atomic", (), atoms, _atoms_symmetric(atoms, space),
                   f"atomic[{len(atoms)}]", {}, spec)


def _atoms_symmetric(atoms, space):
    locs = {round(float(x), 10): m for x, m in atoms}
    for x, m in atoms:
        mirror = np.mod(-x, TWO_PI) if space == CIRCLE else -x
        key = round(float(mirror), 10)
        if space == CIRCLE and abs(mirror - TWO_PI) < 1e-10:
            key = 0.0
        if key not in locs or abs(locs[key] - m) > 1e-12:
            return False
    return True


def density_measure(space, func, lo, hi, symmetric=False, normalize=True, cuts=(),
                    periodic=False, label="density"):
    """Measure with the given density on [lo, hi] (an arc when space is circle)."""
    piece = Piece(float(lo), float(hi), func, periodic, tuple(cuts))
    c = 1.0
    if normalize:
        c = 1.0 / float(np.real(integrate_piece(piece, lambda x: np.ones(np.shape(x)), space)))
        piece = piece.scaled(c)
    spec = {"space": space, "kind": "density", "params": {"lo": lo, "hi": hi}}
    return Measure(space, "density", (piece,), (), symmetric, label, {"normalization": c}, spec)


def reweight(mu, weight, normalize=True, label=None, symmetric=False):
    """Measure proportional to weight * mu."""
    pieces = []
    for p in mu.pieces:
        f = p.func
        pieces.append(Piece(p.lo, p.hi, lambda x, dl, dr, f=f: weight(x) * f(x, dl, dr),
                            p.periodic, p.cuts))
    atoms = [(x, float(m * weight(np.array([x]))[0])) for x, m in mu.atoms]
    atoms = [(x, m) for x, m in atoms if m > 0]
    out = Measure(mu.space, "reweighted", tuple(pieces), tuple(atoms), symmetric,
                  label or f"w*{mu.label}", {"base": mu}, None)
    if normalize:
        c = 1.0 / out.mass
        out = Measure(mu.space, "reweighted", tuple(p.scaled(c) for p in pieces),
                      tuple((x, c * m) for x, m in atoms), symmetric, out.label,
                      {"base": mu, "normalization": c}, None)
    return out


# --------------------------------------------------- coefficient-defined measures

def _m_boundary(x, dl, dr, b, a, tail_a, tail_b):
    """Boundary value m(x + i0) of int dmu(t)/(t - z) inside the band."""
    z = np.asarray(x, dtype=float)
    m = (-(z - tail_b) + 1j * np.sqrt(dl * dr)) / (2 * tail_a ** 2)
    for n in range(len(b) - 1, -1, -1):
        m = 1.0 / (b[n] - z - a[n] ** 2 * m)
    return m


def _padded(b, a, tail_a, tail_b):
    n = max(len(b), len(a))
    bb = np.full(n, float(tail_b))
    aa = np.full(n, float(tail_a))
    bb[:len(b)] = b
    aa[:len(a)] = a
    return bb, aa


def jost_atoms(b, a, tail=(1.0, 0.0), grid=6000):
    """Eigenvalues outside the essential band of a finitely perturbed Jacobi matrix,
    with the masses they carry in the spectral measure of e_1."""
    ta, tb = tail
    bb, aa = _padded(np.asarray(b, float), np.asarray(a, float), ta, tb)
    L = len(bb)

    def solution(xi):
        # Jost solution u_n = xi^(n-L-1) for n > L, recursed back to u_0 (a_0 = 1)
        xi = np.asarray(xi, dtype=float)
        lam = tb + ta * (xi + 1 / xi)
        u_next, u = xi, np.ones_like(xi)
        vals = [u]
        for n in range(L + 1, 0, -1):
            b_n = bb[n - 1] if n <= L else tb
            a_n = aa[n - 1] if n <= L else ta
            a_prev = aa[n - 2] if n >= 2 else 1.0
            u_next, u = u, ((lam - b_n) * u - a_n * u_next) / a_prev
            vals.append(u)
        return lam, vals[::-1]

    s = np.concatenate([np.geomspace(1e-12, 1e-2, grid // 3, endpoint=False),
                        np.linspace(1e-2, 1 - 1e-9, 2 * grid // 3)])
    out = []
    for sign in (1.0, -1.0):
        xs = sign * s
        with np.errstate(all="ignore"):
            vals = solution(xs)[1][0]
        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
            xi = brentq(lambda x: float(solution(x)[1][0]), xs[i], xs[i + 1],
                        xtol=1e-16, rtol=1e-15)
            lam, v = solution(xi)
            v = np.array([float(t) for t in v[1:]])
            norm = np.sum(v ** 2) + xi ** 2 / (1 - xi ** 2) * v[-1] ** 2
            out.append((float(lam), float(v[0] ** 2 / norm)))
    return sorted(out)


def jacobi_measure(b, a, tail=(1.0, 0.0)):
    """Spectral measure of the Jacobi matrix with given leading coefficients
    followed by the constant tail a_k = tail[0], b_k = tail[1]."""
    b = np.asarray(b, dtype=float)
    a = np.asarray(a, dtype=float)
    ta, tb = float(tail[0]), float(tail[1])
    if np.any(a <= 0) or ta <= 0:
        raise MeasureError("off-diagonal Jacobi coefficients must be positive")
    bb, aa = _padded(b, a, ta, tb)
    lo, hi = tb - 2 * ta, tb + 2 * ta

    def f(x, dl, dr):
        return np.maximum(_m_boundary(x, dl, dr, bb, aa, ta, tb).imag, 0.0) / np.pi

    atoms = tuple(jost_atoms(b, a, (ta, tb)))
    sym = bool(np.allclose(bb, 0) and tb == 0)
    spec = {"space": REAL, "kind": "coeffs",
            "params": {"b": b.tolist(), "a": a.tolist(), "tail": {"a": ta, "b": tb}}}
    info = {"b": bb, "a": aa, "tail": (ta, tb), "band": (lo, hi)}
    return Measure(REAL, "coeffs", (_real_piece(lo, hi, f),), atoms, sym,
                   f"jacobi[{len(bb)}]", info, spec)


def _szego_phi(alpha, z):
    phi = np.ones_like(z)
    star = np.ones_like(z)
    for al in alpha:
        phi, star = z * phi - np.conj(al) * star, star - al * z * phi
    return phi


def verblunsky_measure(alpha):
    """Bernstein-Szego measure with Verblunsky coefficients alpha, then zeros."""
    alpha = np.asarray(alpha, dtype=complex)
    if np.any(np.abs(alpha) >= 1):
        raise MeasureError("Verblunsky coefficients must lie in the open unit disk")
    c = float(np.prod(1 - np.abs(alpha) ** 2))

    def f(t, dl, dr):
        return c / np.abs(_szego_phi(alpha, np.exp(1j * np.asarray(t)))) ** 2

    real = bool(np.all(np.abs(alpha.imag) < 1e-14))
    spec = {"space": CIRCLE, "kind": "coeffs",
            "params": {"alpha": [[x.real, x.imag] for x in alpha]}}
    return Measure(CIRCLE, "coeffs", (Piece(0.0, TWO_PI, f, True),), (), real,
                   f"bernstein-szego[{len(alpha)}]", {"alpha": alpha}, spec)


# ------------------------------------------------------------- divergences

def _kl_cells(nu, mu):
    pts = _unique(nu.breakpoints() + mu.breakpoints())
    if nu.space == REAL:
        cells = list(zip(pts[:-1], pts[1:]))
    else:
        if not pts:
            return None
        cells = list(zip(pts, pts[1:] + [pts[0] + TWO_PI]))
    keep = []
    for a, b in cells:
        m = np.array([0.5 * (a + b)])
        if nu.cell_density(a, b, m, m - a, b - m)[0] > 0:
            keep.append((a, b))
    return keep


def kl(nu, mu, tol=1e-12, cap=1e6, details=False, check=True):
    """Relative entropy K(nu | mu) = int log(dnu/dmu) dnu; +inf when nu is not << mu."""
    if nu.space != mu.space:
        raise MeasureError("kl needs two measures on the same space")
    if check:
        nu.validate()
        mu.validate()
    info = {}

    def ratio_terms(p, q):
        out = np.zeros(np.shape(p))
        ok = (p > 0) & (q >= TINY)
        out[ok] = p[ok] * np.log(p[ok] / q[ok])
        return out

    def infinite(region):
        info["region"] = region
        return (np.inf, info) if details else np.inf

    total = 0.0
    if nu.pieces:
        cells = _kl_cells(nu, mu)
        if cells is None:
            t = TWO_PI * np.arange(4096) / 4096
            p, q = nu.density(t), mu.density(t)
            if np.mean(np.where(q < TINY, p, 0.0)) > 1e-10:
                return infinite((0.0, TWO_PI))
            total = periodic_trapezoid(lambda t: ratio_terms(nu.density(t), mu.density(t)), tol=tol)
        else:
            scale = 1 / TWO_PI if nu.space == CIRCLE else 1.0
            for a, b in cells:
                x, w, da, db = cosine_nodes(a, b, 400, offsets=True)
                p = nu.cell_density(a, b, x, da, db)
                q = mu.cell_density(a, b, x, da, db)
                hit = (q < TINY) & (p > 0)
                if scale * np.sum(w * np.where(hit, p, 0.0)) > 1e-10:
                    return infinite((float(x[hit].min()), float(x[hit].max())))

                def fun(x, da, db, a=a, b=b):
                    return ratio_terms(nu.cell_density(a, b, x, da, db),
                                       mu.cell_density(a, b, x, da, db))

                total += scale * adaptive_cosine(fun, a, b, tol=tol, offsets=True)
    for x, m in nu.atoms:
        match = [mm for y, mm in mu.atoms if abs(y - x) < 1e-12 or
                 (nu.space == CIRCLE and abs(abs(y - x) - TWO_PI) < 1e-12)]
        if not match:
            return infinite((x, x))
        total += m * np.log(m / match[0])
    total = float(total)
    if total > cap:
        total = np.inf
    return (total, info) if details else total


def mixture_kl_decompose(tau1, mu1, mu2, mu, tol=1e-12):
    """Both sides of K(tau1 mu1 + tau2 mu2 | mu) = sum_i tau_i (K(mu_i|mu) - K(mu_i|mix))."""
    tau2 = 1 - tau1
    m = mix(tau1, mu1, mu2)
    lhs = kl(m, mu, tol)
    terms = [kl(mu1, mu, tol), kl(mu2, mu, tol), kl(mu1, m, tol), kl(mu2, m, tol)]
    if np.isinf(terms[0]) or np.isinf(terms[1]):
        rhs = np.inf
    else:
        rhs = tau1 * terms[0] + tau2 * terms[1] - tau1 * terms[2] - tau2 * terms[3]
    return lhs, rhs


def trig_moments(nu, K, tol=2e-14):
    """c_k = int exp(-i k theta) dnu(theta) for k = 0..K."""
    if nu.space != CIRCLE:
        raise MeasureError("trig_moments needs a circle measure")
    k = np.arange(K + 1)
    n = max(4 * K + 64, 256)
    prev = None
    while n <= 2 ** 17:
        t, w = discretize(nu, n)
        c = np.exp(-1j * np.outer(k, t)) @ w
        if prev is not None and np.max(np.abs(c - prev)) < tol:
            break
        prev = c
        n *= 2
    else:
        raise ArithmeticError(f"trigonometric moments of {nu!r} did not converge")
    if abs(c[0] - 1) > NORM_TOL:
        raise MeasureError(f"measure {nu!r} is not normalized (c_0 = {c[0]})")
    return c


def support_classify(mu, lo, hi, tol=1e-10):
    """Return (band_ok, outliers): band_ok is False when a.c. mass lies outside the
    band; outliers are the atoms outside the band sorted by distance to it."""
    outside = 0.0
    if mu.space == REAL:
        a, b = mu.support_hull()
        if a < lo:
            outside += interval_mass(mu, a, min(lo, b))
        if b > hi:
            outside += interval_mass(mu, max(hi, a), b)

        def dist(x):
            return lo - x if x < lo else x - hi if x > hi else 0.0
    else:
        if hi - lo < TWO_PI - 1e-14:
            outside = interval_mass(mu, hi, lo + TWO_PI)

        def dist(x):
            t = lo + np.mod(x - lo, TWO_PI)
            return 0.0 if t <= hi + 1e-12 else min(t - hi, lo + TWO_PI - t)

    outliers = [(x, m) for x, m in mu.atoms if dist(x) > 1e-12]
    outliers.sort(key=lambda a: dist(a[0]))
    return outside <= tol, outliers


# ------------------------------------------------------------------ DSL

_SPEC_KEYS = {
    "reference": {"space", "kind", "family", "params"},
    "mixture": {"space", "kind", "params", "components"},
    "composite": {"space", "kind", "atoms", "components"},
    "coeffs": {"space", "kind", "params"},
    "pushforward": {"space", "kind", "maps", "components"},
}


def from_spec(doc):
    """Build a measure from the JSON measure description."""
    if isinstance(doc, Measure):
        return doc
    if not isinstance(doc, dict):
        raise MeasureError("measure description must be a JSON object")
    kind = doc.get("kind", "reference" if "family" in doc else None)
    extra = set(doc) - _SPEC_KEYS.get(kind, set(doc))
    if extra:
        hint = " (atoms belong to a composite measure)" if "atoms" in extra else ""
        raise MeasureError(f"unexpected key(s) {sorted(extra)} for a {kind} measure{hint}")
    params = doc.get("params", {}) or {}
    comps = doc.get("components", []) or []
    if kind == "reference":
        fam = doc.get("family")
        if fam is None:
            raise MeasureError("reference measure needs a 'family'")
        try:
            mu = make_reference(fam, params)
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, MeasureError):
                raise
            raise MeasureError(f"bad parameters for {fam}: {e!r}") from None
        if "space" in doc and doc["space"] != mu.space:
            raise MeasureError(f"family {fam} lives on the {mu.space} space")
    elif kind == "mixture":
        if len(comps) != 2:
            raise MeasureError("mixture needs exactly two components")
        mu = mix(float(params["tau"]), from_spec(comps[0]), from_spec(comps[1]))
    elif kind == "composite":
        atoms = [(float(x), float(m)) for x, m in doc.get("atoms", [])]
        if not comps:
            mu = atomic_measure(doc.get("space", REAL), atoms)
        else:
            mu = add_atoms(from_spec(comps[0]), atoms)
    elif kind == "coeffs":
        space = doc.get("space", CIRCLE if "alpha" in params else REAL)
        if space == CIRCLE:
            mu = verblunsky_measure([_as_complex(v) for v in params["alpha"]])
        else:
            tail = params.get("tail") or {"a": 1.0, "b": 0.0}
            mu = jacobi_measure(params.get("b", []), params.get("a", []),
                                (float(tail.get("a", 1.0)), float(tail.get("b", 0.0))))
    elif kind == "pushforward":
        from .mappings import apply_maps
        if len(comps) != 1:
            raise MeasureError("pushforward needs exactly one component")
        mu = apply_maps(from_spec(comps[0]), doc.get("maps", []))
    else:
        raise MeasureError(f"unknown measure kind {kind!r}")
    return mu
