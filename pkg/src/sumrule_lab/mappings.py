"""Measure mappings between the unit circle and the real line.

Sz: theta -> 2 cos(theta), two-to-one, for symmetric circle measures.
DG_d^+: theta -> 2d cos(theta/2) on [0, 2pi); DG_d^-: theta -> 2d sin(theta/2) on (-pi, pi].
DVZ^+-: (2 +- x)/2 times DG_1.
Mobius m_z0 and the rotation by pi act on the circle.
"""
import numpy as np

from .measures import (CIRCLE, REAL, TWO_PI, Measure, MeasureError, Piece,
                       _merge_atoms, _atoms_symmetric)

PI = np.pi


class SymmetryError(MeasureError):
    """The map needs a symmetric measure."""


def is_symmetric(nu, tol=1e-10):
    if nu.symmetric:
        return True
    if nu.space == CIRCLE:
        t = np.linspace(0.01, PI - 0.01, 97)
        mirror = TWO_PI - t
    else:
        lo, hi = nu.support_hull()
        r = max(abs(lo), abs(hi))
        t = np.linspace(0.01 * r, 0.99 * r, 97)
        mirror = -t
    p, q = nu.density(t), nu.density(mirror)
    if np.max(np.abs(p - q)) > tol * max(1.0, np.max(np.abs(p))):
        return False
    return _atoms_symmetric(nu.atoms, nu.space)


def _require_symmetric(nu, name):
    if not is_symmetric(nu):
        raise SymmetryError(f"{name} needs a symmetric measure")


def _arc_parts(p, lo, hi):
    """Sub-intervals of [lo, hi] covered by the circle piece p, as (a, b, shift)
    with a, b in [lo, hi] and a - shift in piece coordinates."""
    if p.periodic:
        return [(lo, hi, 0.0)]
    out = []
    for k in (-2, -1, 0, 1, 2):
        s = k * TWO_PI
        a, b = max(lo, p.lo + s), min(hi, p.hi + s)
        if b - a > 1e-14:
            out.append((a, b, s))
    return out


def _circle_value(p, t, s):
    """Evaluate the circle piece p at angle t (shifted by s into piece coordinates)."""
    u = t - s
    if p.periodic:
        u = np.mod(u, TWO_PI)
        return p.func(u, u, TWO_PI - u)
    return p.func(u, u - p.lo, p.hi - u)


def _real_out(pieces, atoms, symmetric, label, spec, info=None):
    spec = {**spec, "space": REAL}
    return Measure(REAL, "pushforward", tuple(pieces), _merge_atoms(atoms, REAL),
                   symmetric, label, info or {}, spec)


def _circle_out(pieces, atoms, symmetric, label, spec, info=None):
    spec = {**spec, "space": CIRCLE}
    return Measure(CIRCLE, "pushforward", tuple(pieces), _merge_atoms(atoms, CIRCLE),
                   symmetric, label, info or {}, spec)


def _spec(source, maps):
    return {"space": None, "kind": "pushforward", "maps": maps, "components": [source.spec]}


# ----------------------------------------------------------------- Szego map

def _theta_of_x(x, dl, dr, xlo, xhi, scale):
    """theta in [0, pi] with x = scale * 2 cos(theta), accurate at x = +-2 scale."""
    two = 2 * scale
    near_hi = np.where(xhi >= two, dr, dr + (two - xhi))   # two - x
    near_lo = np.where(xlo <= -two, dl, dl + (xlo + two))  # two + x
    th_small = 2 * np.arcsin(np.sqrt(np.clip(near_hi / (2 * two), 0, 1)))
    th_big = PI - 2 * np.arcsin(np.sqrt(np.clip(near_lo / (2 * two), 0, 1)))
    return np.where(x >= 0, th_small, th_big), near_lo, near_hi


def szego_push(nu):
    """Pushforward of a symmetric circle measure by theta -> 2 cos(theta)."""
    if nu.space != CIRCLE:
        raise MeasureError("Sz pushes circle measures")
    _require_symmetric(nu, "Sz")
    pieces = []
    for p in nu.pieces:
        for a, b, s in _arc_parts(p, 0.0, PI):
            xlo, xhi = 2 * np.cos(b), 2 * np.cos(a)
            if a == 0.0:
                xhi = 2.0
            if b == PI:
                xlo = -2.0

            def f(x, dl, dr, p=p, s=s, xlo=xlo, xhi=xhi):
                th, plus, minus = _theta_of_x(x, dl, dr, xlo, xhi, 1.0)
                return _circle_value(p, th, s) / (PI * np.sqrt(plus * minus))

            pieces.append(Piece(xlo, xhi, f))
    atoms = [(2 * np.cos(t), m) for t, m in nu.atoms]
    return _real_out(pieces, atoms, True, f"Sz({nu.label})", _spec(nu, [{"map": "Sz"}]))


def _sin_from(c, u):
    """sin(c - u), exact for small u when c = pi."""
    return np.sin(u) if c == PI else np.sin(c - u)


def szego_pull(mu):
    """Symmetric circle measure nu with Sz(nu) = mu."""
    if mu.space != REAL:
        raise MeasureError("Sz pulls real measures")
    lo, hi = mu.support_hull()
    if lo < -2 - 1e-12 or hi > 2 + 1e-12:
        raise MeasureError("Sz pullback needs support in [-2, 2]")
    pieces = []
    for p in mu.pieces:
        tlo, thi = np.arccos(np.clip(p.hi / 2, -1, 1)), np.arccos(np.clip(p.lo / 2, -1, 1))

        def f(t, dl, dr, p=p, tlo=tlo, thi=thi, mirror=False):
            if mirror:
                t, dl, dr = TWO_PI - t, dr, dl
            x = 2 * np.cos(t)
            hi_minus_x = 4 * np.sin(tlo + dl / 2) * np.sin(dl / 2)
            x_minus_lo = 4 * _sin_from(thi, dr / 2) * np.sin(dr / 2)
            s0 = dl if tlo == 0.0 else t
            spi = dr if thi == PI else PI - t
            sin_t = np.sin(np.minimum(s0, spi))
            return TWO_PI * sin_t * p.func(x, x_minus_lo, hi_minus_x)

        pieces.append(Piece(tlo, thi, f))
        pieces.append(Piece(TWO_PI - thi, TWO_PI - tlo,
                            lambda t, dl, dr, f=f: f(t, dl, dr, mirror=True)))
    atoms = []
    for x, m in mu.atoms:
        t = float(np.arccos(np.clip(x / 2, -1, 1)))
        if t < 1e-15 or PI - t < 1e-15:
            atoms.append((t, m))
        else:
            atoms += [(t, m / 2), (TWO_PI - t, m / 2)]
    return _circle_out(pieces, atoms, True, f"Sz^-1({mu.label})",
                       _spec(mu, [{"map": "Sz", "params": {"inverse": True}}]))


# ---------------------------------------------------------- Delsarte-Genin

def dg_push(nu, d=1.0, sign="+"):
    """Pushforward by theta -> 2d cos(theta/2) (sign +) or 2d sin(theta/2) (sign -)."""
    if nu.space != CIRCLE:
        raise MeasureError("DG pushes circle measures")
    if d <= 0:
        raise MeasureError("DG needs d > 0")
    _require_symmetric(nu, "DG")
    if sign == "-":
        out = reflect(dg_push(rotate_pi(nu), d, "+"))
        spec = {**_spec(nu, [{"map": "DG", "params": {"d": d, "sign": "-"}}]), "space": REAL}
        return Measure(REAL, "pushforward", out.pieces, out.atoms, out.symmetric,
                       f"DG-_{d:g}({nu.label})", {}, spec)
    pieces = []
    two = 2 * d
    for p in nu.pieces:
        for a, b, s in _arc_parts(p, 0.0, TWO_PI):
            xlo, xhi = two * np.cos(b / 2), two * np.cos(a / 2)
            if a == 0.0:
                xhi = two
            if b == TWO_PI:
                xlo = -two

            def f(x, dl, dr, p=p, s=s, xlo=xlo, xhi=xhi):
                half_th, plus, minus = _theta_of_x(x, dl, dr, xlo, xhi, d)
                return _circle_value(p, 2 * half_th, s) / (PI * np.sqrt(plus * minus))

            pieces.append(Piece(xlo, xhi, f))
    atoms = []
    for t, m in nu.atoms:
        t = float(np.mod(t, TWO_PI))
        if t < 1e-15 or TWO_PI - t < 1e-15:
            atoms += [(two, m / 2), (-two, m / 2)]
        else:
            atoms.append((two * np.cos(t / 2), m))
    return _real_out(pieces, atoms, True, f"DG_{d:g}({nu.label})",
                     _spec(nu, [{"map": "DG", "params": {"d": d, "sign": "+"}}]))


def dg_pull(mu, d=1.0):
    """Symmetric circle measure nu with DG_d^+(nu) = mu."""
    if mu.space != REAL:
        raise MeasureError("DG pulls real measures")
    _require_symmetric(mu, "DG pullback")
    two = 2 * d
    lo, hi = mu.support_hull()
    if lo < -two - 1e-12 or hi > two + 1e-12:
        raise MeasureError(f"DG_{d:g} pullback needs support in [-{two:g}, {two:g}]")
    pieces = []
    for p in mu.pieces:
        tlo = 2 * np.arccos(np.clip(p.hi / two, -1, 1))
        thi = 2 * np.arccos(np.clip(p.lo / two, -1, 1))

        def f(t, dl, dr, p=p, tlo=tlo, thi=thi):
            x = two * np.cos(t / 2)
            hi_minus_x = 4 * d * np.sin(tlo / 2 + dl / 4) * np.sin(dl / 4)
            x_minus_lo = 4 * d * _sin_from(thi / 2, dr / 4) * np.sin(dr / 4)
            s0 = dl if tlo == 0.0 else t
            s2 = dr if thi == TWO_PI else TWO_PI - t
            sin_half = np.sin(np.minimum(s0, s2) / 2)
            return PI * two * sin_half * p.func(x, x_minus_lo, hi_minus_x)

        pieces.append(Piece(tlo, thi, f))
    atoms = []
    for x, m in mu.atoms:
        if abs(abs(x) - two) < 1e-12:
            atoms.append((0.0, m))
        else:
            atoms.append((2 * float(np.arccos(x / two)), m))
    return _circle_out(pieces, atoms, True, f"DG_{d:g}^-1({mu.label})",
                       _spec(mu, [{"map": "DG", "params": {"d": d, "inverse": True}}]))


def reflect(mu):
    """Image of a real measure under x -> -x."""
    if mu.space != REAL:
        raise MeasureError("reflect acts on real measures")
    pieces = [Piece(-p.hi, -p.lo, lambda x, dl, dr, f=p.func: f(-x, dr, dl)) for p in mu.pieces]
    atoms = [(-x, m) for x, m in mu.atoms]
    return _real_out(pieces, atoms, mu.symmetric, f"-{mu.label}", _spec(mu, [{"map": "Reflect"}]))


# --------------------------------------------------- Derevyagin-Vinet-Zhedanov

def dvz_push(nu, sign="+", tol=1e-10):
    """(2 +- x)/2 dDG_1(nu); for "+" the spectral measure of L + M."""
    base = dg_push(nu, 1.0, "+")
    pieces = []
    for p in base.pieces:
        if sign == "+":
            def f(x, dl, dr, p=p):
                return 0.5 * (dl + (p.lo + 2)) * p.func(x, dl, dr)
        else:
            def f(x, dl, dr, p=p):
                return 0.5 * (dr + (2 - p.hi)) * p.func(x, dl, dr)
        pieces.append(Piece(p.lo, p.hi, f))
    sgn = 1.0 if sign == "+" else -1.0
    atoms = [(x, 0.5 * (2 + sgn * x) * m) for x, m in base.atoms]
    atoms = [(x, m) for x, m in atoms if m > 1e-300]
    out = _real_out(pieces, atoms, False, f"DVZ{sign}({nu.label})",
                    _spec(nu, [{"map": "DVZ", "params": {"sign": sign}}]))
    if abs(out.mass - 1) > tol:
        raise ArithmeticError(f"DVZ image has mass {out.mass!r}")
    return out


# ------------------------------------------------------------ circle maps

def mobius_push(nu, z0):
    """Pushforward by m_z0(z) = (z - z0)/(1 - conj(z0) z)."""
    if nu.space != CIRCLE:
        raise MeasureError("Mobius maps act on circle measures")
    z0 = complex(z0)
    if abs(z0) >= 1:
        raise MeasureError("Mobius parameter must satisfy |z0| < 1")
    spec = _spec(nu, [{"map": "Mobius", "params": {"z0": [z0.real, z0.imag]}}])
    if z0 == 0:
        return Measure(CIRCLE, nu.kind, nu.pieces, nu.atoms, nu.symmetric, nu.label, nu.info, spec)
    c = 1 - abs(z0) ** 2

    def fwd(t):
        e = np.exp(1j * np.asarray(t))
        return np.angle((e - z0) / (1 - np.conj(z0) * e))

    def back(phi):
        e = np.exp(1j * np.asarray(phi))
        return np.angle((e + z0) / (1 + np.conj(z0) * e)), c / np.abs(1 + np.conj(z0) * e) ** 2

    pieces = []
    for p in nu.pieces:
        if p.periodic:
            def f(phi, dl, dr, p=p):
                th, jac = back(phi)
                th = np.mod(th, TWO_PI)
                return p.func(th, th, TWO_PI - th) * jac
            pieces.append(Piece(0.0, TWO_PI, f, True))
            continue
        a = float(fwd(p.lo))
        b = a + float(np.mod(fwd(p.hi) - a, TWO_PI))
        if b - a < 1e-14:
            b = a + TWO_PI

        def f(phi, dl, dr, p=p):
            th, jac = back(phi)
            th = p.lo + np.mod(th - p.lo, TWO_PI)
            return p.func(th, th - p.lo, p.hi - th) * jac

        pieces.append(Piece(a, b, f))
    atoms = [(float(np.mod(fwd(t), TWO_PI)), m) for t, m in nu.atoms]
    sym = nu.symmetric and z0.imag == 0
    return _circle_out(pieces, atoms, sym, f"m_{z0:g}({nu.label})", spec)


def rotate_pi(nu):
    """Image under theta -> theta + pi."""
    if nu.space != CIRCLE:
        raise MeasureError("rotation acts on circle measures")
    pieces = []
    for p in nu.pieces:
        if p.periodic:
            pieces.append(Piece(0.0, TWO_PI, lambda t, dl, dr, f=p.func:
                                f(np.mod(t - PI, TWO_PI), dl, dr), True))
        else:
            pieces.append(Piece(p.lo + PI, p.hi + PI, lambda t, dl, dr, f=p.func:
                                f(t - PI, dl, dr), False, tuple(c + PI for c in p.cuts)))
    atoms = [(float(np.mod(t + PI, TWO_PI)), m) for t, m in nu.atoms]
    return _circle_out(pieces, atoms, nu.symmetric, f"rot({nu.label})",
                       _spec(nu, [{"map": "RotPi"}]))


# ------------------------------------------------------------ map DSL

def apply_map(mu, m):
    kind = m.get("map")
    params = m.get("params", {}) or {}
    inverse = bool(params.get("inverse", False))
    if kind == "Sz":
        return szego_pull(mu) if inverse else szego_push(mu)
    if kind == "DG":
        d = float(params.get("d", 1.0))
        return dg_pull(mu, d) if inverse else dg_push(mu, d, params.get("sign", "+"))
    if kind == "DVZ":
        return dvz_push(mu, params.get("sign", "+"))
    if kind == "Mobius":
        z0 = params.get("z0", 0.0)
        z0 = complex(*z0) if isinstance(z0, (list, tuple)) else complex(z0)
        return mobius_push(mu, -z0 if inverse else z0)
    if kind == "RotPi":
        return rotate_pi(mu)
    if kind == "Reflect":
        return reflect(mu)
    raise MeasureError(f"unknown map {kind!r}")


def apply_maps(mu, maps):
    """Apply a list of map descriptions left to right."""
    for m in maps:
        mu = apply_map(mu, m)
    return mu


# ------------------------------------------------- coefficient correspondences

def geronimus_canonical(alpha):
    """u_k(Sz(nu)) = alpha_{k-1}(nu), k >= 1."""
    return np.real(np.asarray(alpha, dtype=complex))


def dg_jacobi(alpha, d=1.0):
    """a_n^2 = d^2 (1 + alpha_{n-1})(1 - alpha_{n-2}), b_n = 0, alpha_{-1} = -1."""
    al = np.real(np.asarray(alpha, dtype=complex))
    prev = np.concatenate([[-1.0], al[:-1]])
    a2 = d * d * (1 + al) * (1 - prev)
    return np.zeros(len(al)), np.sqrt(a2)


def dvz_jacobi(alpha, sign="+"):
    """J-coefficients of DVZ^+-(nu) from real Verblunsky coefficients.

    DVZ^-(nu) = (2 - x)/2 dDG_1(nu) is the mirror image of DVZ^+(nu), so its
    diagonal is -b. (The matrix L - M instead has diagonal
    (-1)^k (alpha_k + alpha_{k-1}); its spectral measure is DVZ^-(rotate_pi(nu)).)
    """
    al = np.real(np.asarray(alpha, dtype=complex))
    prev = np.concatenate([[-1.0], al[:-1]])
    rho = np.sqrt(1 - al ** 2)
    b = al - prev
    return (b if sign == "+" else -b), rho


def alpha_from_dvz_jacobi(b, sign="+"):
    """Invert the DVZ diagonal law: alpha_k from b_1..b_{k+1}."""
    b = np.asarray(b, dtype=float)
    al = np.zeros(len(b))
    prev = -1.0
    for k in range(len(b)):
        al[k] = (b[k] if sign == "+" else -b[k]) + prev
        prev = al[k]
    if np.any(np.abs(al) >= 1):
        raise MeasureError("measure is not in the image of DVZ (|alpha_k| >= 1)")
    return al
