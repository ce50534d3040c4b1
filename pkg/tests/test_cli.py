import json
import math
import os
import re
from pathlib import Path

import jsonschema
import pytest

from sumrule_lab.cli import main, run_batch, worst

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"
SCHEMAS = HERE.parent / "docs" / "schemas"
REGEN = os.environ.get("SUMRULE_LAB_REGEN_GOLDEN") == "1"

HP1 = '{"family":"HP","params":{"d":1}}'
BS = '{"kind":"coeffs","space":"circle","params":{"alpha":[[0.5,0.0],[0.0,0.5],0.25]}}'

# name, argv, expected exit code, schema
CASES = [
    ("verify_ks_sc", ["verify", "--rule", "killip-simon", "--measure", '{"family":"SC"}'], 0, "report"),
    ("verify_kmk_atoms", ["verify", "--rule", "KMK(1,0.5)", "--measure",
                          '{"kind":"composite","atoms":[[1.9,0.05]],'
                          '"components":[{"family":"KMK","params":{"kappa1":1,"kappa2":0.5}}]}'],
     0, "report"),
    ("verify_gw_param", ["verify", "--rule", "gw", "--param", "g=-0.5", "--measure",
                         '{"family":"UNIF"}', "--n", "60", "--partials"], 0, "report"),
    ("verify_both_infinite", ["verify", "--rule", "SzegoVerblunsky", "--measure", HP1], 0, "report"),
    # the series is exact for a finite stream, so an absurd tolerance forces a mismatch
    ("verify_mismatch", ["verify", "--rule", "SzegoVerblunsky", "--measure", BS,
                         "--tol", "1e-30"], 2, "report"),
    ("verify_unconverged", ["verify", "--rule", "KillipSimon", "--measure", '{"family":"Arcsine"}',
                            "--n", "1", "--tol", "1e-12"], 3, "report"),
    ("verify_csv", ["verify", "--rule", "MP(0.5)", "--measure",
                    '{"family":"MP","params":{"tau":0.5}}', "--format", "csv"], 0, None),
    ("verify_text", ["verify", "--rule", "Arcsine", "--measure", '{"family":"Arcsine"}',
                     "--format", "text"], 0, None),
    ("coeffs_verblunsky_hp", ["coeffs", "--kind", "verblunsky", "--n", "5", "--measure", HP1], 0, "coeffs"),
    ("coeffs_deformed_bs", ["coeffs", "--kind", "deformed", "--n", "4", "--measure", BS], 0, "coeffs"),
    ("coeffs_jacobi_mp", ["coeffs", "--kind", "jacobi", "--n", "6", "--measure",
                          '{"family":"MP","params":{"tau":0.25}}'], 0, "coeffs"),
    ("coeffs_canonical_kmk", ["coeffs", "--kind", "canonical", "--n", "6", "--measure",
                              '{"family":"KMK","params":{"kappa1":1,"kappa2":0.5}}'], 0, "coeffs"),
    ("coeffs_z_mp", ["coeffs", "--kind", "z", "--n", "6", "--measure",
                     '{"family":"MP","params":{"tau":0.25}}'], 0, "coeffs"),
    ("map_sz_hp_density", ["map", "--apply", '[{"map":"Sz"}]', "--measure", HP1,
                           "--emit", "density", "--at", "-1.5", "0.0", "0.9"], 0, "map"),
    ("map_dg_atoms", ["map", "--apply", '[{"map":"DG","params":{"d":1}}]', "--measure",
                      '{"kind":"composite","atoms":[[0.0,0.1],[1.0,0.05],[5.283185307179586,0.05]],'
                      '"components":[{"family":"UNIF"}]}', "--emit", "atoms"], 0, "map"),
    ("map_mobius_mass", ["map", "--apply", '{"map":"Mobius","params":{"z0":[0.3,0.2]}}', "--measure",
                         '{"family":"Pois","params":{"zeta":[0.3,0.2]}}', "--emit", "mass"], 0, "map"),
    ("map_chain_spec", ["map", "--apply", '[{"map":"RotPi"},{"map":"DVZ","params":{"sign":"+"}}]',
                        "--measure", '{"family":"GW","params":{"g":1}}'], 0, "map"),
    ("kl_arcsine_sc", ["kl", "--ref", '{"family":"Arcsine"}', "--measure", '{"family":"SC"}'], 0, "kl"),
    ("kl_infinite", ["kl", "--ref", '{"family":"UNIF"}', "--measure", HP1], 0, "kl"),
    ("batch_small", ["batch", str(GOLDEN / "small_manifest.json")], 1, "batch"),
    ("batch_text", ["batch", str(GOLDEN / "small_manifest.json"), "--format", "text"], 1, None),
]


def _num_close(a, b):
    if isinstance(a, bool) or isinstance(b, bool):
        return a == b
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        if math.isnan(a) or math.isnan(b):
            return math.isnan(a) and math.isnan(b)
        return abs(a - b) <= 1e-9 * max(abs(a), abs(b)) + 1e-13
    return a == b


def _same(a, b, path="$"):
    if isinstance(a, dict) and isinstance(b, dict):
        assert a.keys() == b.keys(), f"{path}: keys {sorted(a)} != {sorted(b)}"
        for k in a:
            _same(a[k], b[k], f"{path}.{k}")
    elif isinstance(a, list) and isinstance(b, list):
        assert len(a) == len(b), f"{path}: length {len(a)} != {len(b)}"
        for i, (x, y) in enumerate(zip(a, b)):
            _same(x, y, f"{path}[{i}]")
    else:
        assert _num_close(a, b), f"{path}: {a!r} != {b!r}"


NUM = re.compile(r"-?\d+\.?\d*(?:[eE][-+]?\d+)?")


def _same_text(a, b):
    assert NUM.sub("#", a) == NUM.sub("#", b)
    for x, y in zip(NUM.findall(a), NUM.findall(b)):
        assert _num_close(float(x), float(y)), f"{x} != {y}"


def _run(argv, tmp_path):
    out = tmp_path / "out.txt"
    code = main(argv + ["--out", str(out)])
    return code, out.read_text() if out.exists() else ""


@pytest.mark.parametrize("name,argv,code,schema", CASES, ids=[c[0] for c in CASES])
def test_golden(name, argv, code, schema, tmp_path):
    got_code, text = _run(argv, tmp_path)
    assert got_code == code
    is_json = "--format" not in argv
    path = GOLDEN / (name + (".json" if is_json else ".txt"))
    if REGEN:
        path.write_text(text)
    expected = path.read_text()
    if is_json:
        doc = json.loads(text)
        _same(doc, json.loads(expected))
        if schema:
            jsonschema.validate(doc, json.loads((SCHEMAS / f"{schema}.json").read_text()))
    else:
        _same_text(text, expected)


def test_deterministic(tmp_path):
    argv = ["verify", "--rule", "PoissonNP(0.5)", "--measure", '{"family":"GW","params":{"g":-0.5}}']
    _, a = _run(argv, tmp_path)
    _, b = _run(argv, tmp_path)
    assert a == b


@pytest.mark.parametrize("argv", [
    ["verify", "--rule", "KillipSimon", "--measure", '{"family": "SC",}'],
    ["verify", "--rule", "NoSuchRule", "--measure", '{"family":"SC"}'],
    ["verify", "--rule", "KillipSimon", "--measure", '{"family":"Nope"}'],
    ["verify", "--rule", "KillipSimon", "--measure", '{"family":"MP"}'],
    ["verify", "--rule", "KillipSimon", "--measure", '{"family":"SC"}', "--n", "0"],
    ["verify", "--rule", "GW(-3)", "--measure", '{"family":"UNIF"}'],
    ["verify", "--rule", "KillipSimon", "--measure", '{"family":"UNIF"}'],
    ["coeffs", "--kind", "verblunsky", "--measure", '{"family":"SC"}'],
    ["map", "--apply", '[{"map":"Sz"}]', "--measure", '{"family":"Pois","params":{"zeta":[0.1,0.3]}}'],
    ["map", "--apply", '[{"map":"Warp"}]', "--measure", '{"family":"UNIF"}'],
    ["kl", "--ref", '{"family":"SC"}', "--measure", '{"family":"UNIF"}'],
    ["verify", "--measure", '{"family":"SC"}'],
    ["frobnicate"],
])
def test_usage_errors(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_malformed_json_position(capsys):
    assert main(["kl", "--ref", '{"family":\n "SC" "x"}', "--measure", '{"family":"SC"}']) == 1
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


def test_measure_file(tmp_path):
    f = tmp_path / "m.json"
    f.write_text('{"family": "SC"}')
    code, text = _run(["verify", "--rule", "KillipSimon", "--measure", "@" + str(f)], tmp_path)
    assert code == 0 and json.loads(text)["verdict"] == "match"
    assert main(["verify", "--rule", "KillipSimon", "--measure", "@" + str(tmp_path / "missing.json")]) == 1


def test_batch_empty():
    doc, code = run_batch([])
    assert code == 0 and doc == {"reports": [], "summary": {"entries": 0, "verdicts": {}, "exit_code": 0}}


def test_batch_order_and_threads(monkeypatch):
    entries = [{"id": f"e{i}", "rule": "KMK(0,0)",
                "measure": {"kind": "mixture", "params": {"tau": t},
                            "components": [{"family": "SC"}, {"family": "Arcsine"}]}}
               for i, t in enumerate((0.2, 0.5, 0.8, 0.35))]
    entries.insert(2, {"id": "bad", "rule": "KillipSimon", "measure": {"family": "Nope"}})
    serial, c1 = run_batch({"entries": entries}, threads=1)
    monkeypatch.setenv("SUMRULE_LAB_THREADS", "3")
    par, c2 = run_batch({"entries": entries})
    assert [r["id"] for r in par["reports"]] == ["e0", "e1", "bad", "e2", "e3"]
    assert par == serial and c1 == c2 == 1
    assert par["reports"][2]["verdict"] == "error"
    assert par["summary"]["verdicts"] == {"match": 4, "error": 1}


def test_batch_bad_threads_env(monkeypatch, tmp_path):
    monkeypatch.setenv("SUMRULE_LAB_THREADS", "many")
    f = tmp_path / "m.json"
    f.write_text('[{"rule": "KillipSimon", "measure": {"family": "SC"}}, '
                 '{"rule": "KillipSimon", "measure": {"family": "SC"}}]')
    assert main(["batch", str(f)]) == 1


def test_worst_code_ranking():
    assert worst([]) == 0
    assert worst([0, 3, 2]) == 2
    assert worst([3, 0]) == 3
    assert worst([2, 1, 3]) == 1


def test_schema_files_are_valid():
    for p in SCHEMAS.glob("*.json"):
        jsonschema.Draft202012Validator.check_schema(json.loads(p.read_text()))
    names = {p.stem for p in SCHEMAS.glob("*.json")}
    assert {"report", "measure", "manifest", "coeffs", "map", "kl", "batch"} <= names


def test_manifest_schema_accepts_acceptance_manifest():
    doc = json.loads((HERE.parent / "docs" / "acceptance_manifest.json").read_text())
    jsonschema.validate(doc, json.loads((SCHEMAS / "manifest.json").read_text()))
    for e in doc["entries"]:
        jsonschema.validate(e["measure"], json.loads((SCHEMAS / "measure.json").read_text()))


def test_golden_values_against_oracles():
    # frozen outputs checked against closed forms so the golden files are not self-referential
    load = lambda n: json.loads((GOLDEN / f"{n}.json").read_text())
    assert load("coeffs_verblunsky_hp")["alpha"] == pytest.approx([-0.5] * 5, abs=1e-12)
    mp = load("coeffs_jacobi_mp")
    assert mp["a"] == pytest.approx([0.5] * 6) and mp["b"] == pytest.approx([1.0] + [1.25] * 5)
    assert load("coeffs_z_mp")["z"] == pytest.approx([1, 0.25] * 3)
    # KMK(1, 1/2): odd u = (k2 - k1)/(2 + k1 + k2), even u = -(k1 + k2)/(2 + k1 + k2)
    assert load("coeffs_canonical_kmk")["u"] == pytest.approx([-1 / 7, -3 / 7] * 3)
    # alpha = (1/2, i/2, 1/4): gamma_0 = 1/2, gamma_1 = -i/2, gamma_2 = (1/4)(1 - i/2)/(1 + i/2)
    g = [complex(*z) for z in load("coeffs_deformed_bs")["gamma"]]
    assert g[:3] == pytest.approx([0.5, -0.5j, 0.25 * (1 - 0.5j) / (1 + 0.5j)], abs=1e-12)
    assert load("kl_arcsine_sc")["kl"] == pytest.approx(math.log(2), abs=1e-12)
    assert load("map_mobius_mass")["mass"] == pytest.approx(1.0, abs=1e-12)
    # Sz(HP(1)) at 0 is the KMK(2, 0) density there: sqrt(2)/(2 pi)
    dens = load("map_sz_hp_density")["density"]
    assert dens[1] == pytest.approx(math.sqrt(2) / (2 * math.pi), rel=1e-12)
    atoms = load("map_dg_atoms")["atoms"]
    c = 2 * math.cos(0.5)
    assert [v for a in atoms for v in a] == pytest.approx([-2, 0.05, -c, 0.05, c, 0.05, 2, 0.05])
    assert load("verify_ks_sc")["verdict"] == "match"
    small = load("batch_small")
    assert [r["verdict"] for r in small["reports"]] == ["match", "match", "error", "both_infinite"]
