"""Command-line front end: sumrule-lab {verify, coeffs, map, kl, batch}."""
import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .mappings import apply_maps
from .measures import CIRCLE, MeasureError, from_spec, kl
from .oprl import canonical_from_jacobi, jacobi_from_measure, z_from_jacobi
from .opuc import deformed_verblunsky, verblunsky_from_measure
from .sumrules import DEFAULT_CAP, DEFAULT_N, DEFAULT_TOL, RuleError, parse_rule, verify

EXIT_OK, EXIT_USAGE, EXIT_MISMATCH, EXIT_UNCONVERGED = 0, 1, 2, 3
VERDICT_CODES = {"match": EXIT_OK, "both_infinite": EXIT_OK,
                 "mismatch": EXIT_MISMATCH, "unconverged": EXIT_UNCONVERGED}
# worst first: usage/validation errors, then mismatches, then unconverged runs
SEVERITY = {EXIT_USAGE: 3, EXIT_MISMATCH: 2, EXIT_UNCONVERGED: 1, EXIT_OK: 0}


class UsageError(Exception):
    pass


def worst(codes):
    return max(codes, key=lambda c: SEVERITY[c], default=EXIT_OK)


def _num(v):
    if isinstance(v, complex):
        return [_num(v.real), _num(v.imag)]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if math.isnan(v):
            return None
    if isinstance(v, np.integer):
        return int(v)
    return v


def load_json(text, what):
    """Parse a JSON argument; '@path' reads the file."""
    if text is None:
        raise UsageError(f"missing {what}")
    src = text
    if text.startswith("@"):
        try:
            with open(text[1:], encoding="utf-8") as fh:
                src = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read {what} file {text[1:]!r}: {exc.strerror}")
    try:
        return json.loads(src)
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed {what} JSON at line {exc.lineno}, column {exc.colno} "
                         f"(char {exc.pos}): {exc.msg}")


def _measure(text):
    doc = load_json(text, "measure")
    try:
        return from_spec(doc)
    except (MeasureError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid measure: {exc}")


def _rule(name, params):
    extra = {}
    for p in params or []:
        if "=" not in p:
            raise UsageError(f"--param expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        extra[k.strip()] = v.strip()
    try:
        return parse_rule({"rule": name, "params": extra})
    except RuleError as exc:
        raise UsageError(str(exc))


# ----------------------------------------------------------------- output

def _csv(rows):
    buf = io.StringIO()
    if rows:
        keys = list(rows[0].keys())
        for r in rows[1:]:
            keys += [k for k in r if k not in keys]
        w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v
                        for k, v in r.items()})
    return buf.getvalue()


def _text(rows):
    lines = []
    for r in rows:
        lines.append("  ".join(f"{k}={v}" for k, v in r.items()))
    return "\n".join(lines) + ("\n" if lines else "")


def render(doc, fmt):
    if fmt == "json":
        return json.dumps(doc, indent=2) + "\n"
    rows = doc.get("reports", [doc]) if isinstance(doc, dict) else doc
    if fmt == "csv":
        return _csv(rows)
    out = _text(rows)
    if isinstance(doc, dict) and "summary" in doc:
        s = doc["summary"]
        counts = " ".join(f"{k}={v}" for k, v in sorted(s["verdicts"].items()))
        out += f"summary: entries={s['entries']} {counts} exit_code={s['exit_code']}\n"
    return out


def emit(doc, args):
    out = render(doc, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


# --------------------------------------------------------------- commands

def run_verify_entry(rule, measure, options):
    rep = verify(rule, measure, N=int(options.get("N", DEFAULT_N)),
                 tol=float(options.get("tol", DEFAULT_TOL)),
                 cap=float(options.get("cap", DEFAULT_CAP)),
                 quad_tol=float(options.get("quad_tol", 1e-12)))
    return rep.to_dict(partials=bool(options.get("partials", False)))


def cmd_verify(args):
    rule = _rule(args.rule, args.param)
    mu = _measure(args.measure)
    opts = {"N": args.n, "tol": args.tol, "cap": args.cap, "quad_tol": args.quad_tol,
            "partials": args.partials}
    rep = run_verify_entry(rule, mu, opts)
    emit(rep, args)
    return VERDICT_CODES[rep["verdict"]]


def coefficients(mu, kind, n):
    if kind == "verblunsky":
        al = verblunsky_from_measure(mu, n).alpha
        return {"alpha": _complex_list(al)}
    if kind == "deformed":
        return {"gamma": _complex_list(deformed_verblunsky(verblunsky_from_measure(mu, n).alpha))}
    J = jacobi_from_measure(mu, n)
    if kind == "jacobi":
        return {"b": J.b.tolist(), "a": J.a.tolist()}
    if kind == "canonical":
        return {"u": canonical_from_jacobi(J)[:n].tolist()}
    if kind == "z":
        return {"z": z_from_jacobi(J)[:n].tolist()}
    raise UsageError(f"unknown coefficient kind {kind!r}")


def _complex_list(v):
    v = np.asarray(v, dtype=complex)
    if np.all(np.abs(v.imag) < 1e-12):
        return v.real.tolist()
    return [[float(z.real), float(z.imag)] for z in v]


def cmd_coeffs(args):
    mu = _measure(args.measure)
    if args.kind in ("verblunsky", "deformed") and mu.space != CIRCLE:
        raise UsageError(f"{args.kind} coefficients need a circle measure")
    if args.kind not in ("verblunsky", "deformed") and mu.space == CIRCLE:
        raise UsageError(f"{args.kind} coefficients need a real-line measure")
    doc = {"measure": mu.label, "kind": args.kind, "n": args.n}
    doc.update(coefficients(mu, args.kind, args.n))
    emit(doc, args)
    return EXIT_OK


def cmd_map(args):
    mu = _measure(args.measure)
    maps = load_json(args.apply, "map list")
    if isinstance(maps, dict):
        maps = [maps]
    try:
        img = apply_maps(mu, maps)
    except (MeasureError, KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid map: {exc}")
    doc = {"measure": img.label, "space": img.space, "spec": img.spec}
    if args.emit == "density":
        at = np.asarray(args.at or [], dtype=float)
        doc["at"] = at.tolist()
        doc["density"] = [_num(v) for v in img.density(at)]
    elif args.emit == "atoms":
        doc["atoms"] = [[_num(x), _num(m)] for x, m in img.atoms]
    elif args.emit == "mass":
        doc["mass"] = _num(img.mass)
        doc["atom_mass"] = _num(img.atom_mass)
    emit(doc, args)
    return EXIT_OK


def cmd_kl(args):
    nu = _measure(args.ref)
    mu = _measure(args.measure)
    if nu.space != mu.space:
        raise UsageError("both measures must live on the same space")
    val, info = kl(nu, mu, details=True)
    doc = {"ref": nu.label, "measure": mu.label, "kl": _num(val)}
    if "region" in info:
        doc["region"] = [_num(v) for v in info["region"]]
    emit(doc, args)
    return EXIT_OK


def _threads():
    env = os.environ.get("SUMRULE_LAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"SUMRULE_LAB_THREADS must be an integer, got {env!r}")
    return os.cpu_count() or 1


def _batch_entry(i, entry):
    try:
        if not isinstance(entry, dict):
            raise UsageError("entry must be an object")
        rule = parse_rule(entry["rule"] if isinstance(entry.get("rule"), (str, dict))
                          else entry)
        mu = from_spec(entry["measure"])
        rep = run_verify_entry(rule, mu, entry.get("options", {}) or {})
        code = VERDICT_CODES[rep["verdict"]]
    except Exception as exc:    # entry failures are reported, the batch goes on
        rep = {"rule": str(entry.get("rule")) if isinstance(entry, dict) else None,
               "verdict": "error", "error": f"{type(exc).__name__}: {exc}"}
        code = EXIT_USAGE
    rep = {"id": entry.get("id", i) if isinstance(entry, dict) else i, **rep, "exit_code": code}
    return rep, code


def run_batch(manifest, threads=None):
    entries = manifest.get("entries", []) if isinstance(manifest, dict) else manifest
    if not isinstance(entries, list):
        raise UsageError("manifest must be a list of entries or {\"entries\": [...]}")
    threads = threads or _threads()
    if threads > 1 and len(entries) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda p: _batch_entry(*p), enumerate(entries)))
    else:
        results = [_batch_entry(i, e) for i, e in enumerate(entries)]
    reports = [r for r, _ in results]
    codes = [c for _, c in results]
    counts = {}
    for r in reports:
        counts[r["verdict"]] = counts.get(r["verdict"], 0) + 1
    summary = {"entries": len(reports), "verdicts": counts, "exit_code": worst(codes)}
    return {"reports": reports, "summary": summary}, worst(codes)


def cmd_batch(args):
    manifest = load_json("@" + args.manifest, "manifest")
    doc, code = run_batch(manifest)
    emit(doc, args)
    return code


# ------------------------------------------------------------------ parser

def build_parser():
    p = argparse.ArgumentParser(prog="sumrule-lab",
                                description="Sum rules for spectral measures on the line and the circle.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--format", choices=("json", "csv", "text"), default="json")
        sp.add_argument("--out", help="write the report here instead of standard output")

    v = sub.add_parser("verify", help="evaluate both sides of a sum rule")
    v.add_argument("--rule", required=True, help="e.g. killip-simon, 'kmk(1,0)', gw --param g=-0.5")
    v.add_argument("--param", action="append", help="rule parameter key=value (repeatable)")
    v.add_argument("--measure", required=True, help="measure JSON or @file")
    v.add_argument("--n", type=int, default=DEFAULT_N, help="series truncation")
    v.add_argument("--tol", type=float, default=DEFAULT_TOL, help="match tolerance")
    v.add_argument("--cap", type=float, default=DEFAULT_CAP, help="divergence cap")
    v.add_argument("--quad-tol", type=float, default=1e-12, help="quadrature tolerance")
    v.add_argument("--partials", action="store_true", help="include the partial sums")
    common(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("coeffs", help="recursion coefficients of a measure")
    c.add_argument("--kind", required=True,
                   choices=("jacobi", "verblunsky", "canonical", "z", "deformed"))
    c.add_argument("--n", type=int, default=10)
    c.add_argument("--measure", required=True)
    common(c)
    c.set_defaults(func=cmd_coeffs)

    m = sub.add_parser("map", help="push a measure through a list of maps")
    m.add_argument("--apply", required=True, help='map list JSON, e.g. [{"map":"Sz"}]')
    m.add_argument("--measure", required=True)
    m.add_argument("--emit", choices=("density", "atoms", "mass", "spec"), default="spec")
    m.add_argument("--at", type=float, nargs="*", help="points for --emit density")
    common(m)
    m.set_defaults(func=cmd_map)

    k = sub.add_parser("kl", help="relative entropy K(ref | measure)")
    k.add_argument("--ref", required=True)
    k.add_argument("--measure", required=True)
    common(k)
    k.set_defaults(func=cmd_kl)

    b = sub.add_parser("batch", help="run a manifest of verifications")
    b.add_argument("manifest")
    common(b)
    b.set_defaults(func=cmd_batch)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if getattr(args, "n", 1) is not None and getattr(args, "n", 1) < 1:
            raise UsageError("--n must be positive")
        if getattr(args, "tol", 1) <= 0:
            raise UsageError("--tol must be positive")
        return args.func(args)
    except UsageError as exc:
        print(f"sumrule-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MeasureError, RuleError, ArithmeticError, ValueError) as exc:
        print(f"sumrule-lab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
