"""End-to-end checks of the varigeo command-line tool.

usage: cli_smoke.py VARIGEO_BINARY SCHEMA_DIR WORK_DIR
"""

import filecmp
import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema

BIN, SCHEMAS, WORK = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
failures = []


def check(cond, what):
    if not cond:
        failures.append(what)
        print("FAIL:", what)


def run(*args):
    return subprocess.run([BIN, *map(str, args)], capture_output=True, text=True)


def validate(report):
    schema = json.loads((SCHEMAS / f"{report['command']}.schema.json").read_text())
    jsonschema.validate(report, schema)


shutil.rmtree(WORK, ignore_errors=True)
WORK.mkdir(parents=True)

# corpus is a pure function of the seed
a, b = WORK / "corpus_a", WORK / "corpus_b"
for d in (a, b):
    p = run("corpus", "--out", d, "--seed", 42)
    check(p.returncode == 0, f"corpus exit {p.returncode}: {p.stderr}")
    validate(json.loads(p.stdout))
manifest = json.loads((a / "manifest.json").read_text())
for rel in manifest["files"]:
    check(filecmp.cmp(a / rel, b / rel, shallow=False), f"corpus file differs between runs: {rel}")

# every suggested run: exit code, schema, byte-identical repeat
for r in manifest["runs"]:
    args = [str(a / x) if x.endswith(".json") else x for x in r["args"]]
    first = run(r["command"], "--input", a / r["input"], *args)
    second = run(r["command"], "--input", a / r["input"], *args)
    label = f"{r['command']} {r['input']} {' '.join(r['args'])}"
    check(first.returncode == r["expect_exit"], f"{label}: exit {first.returncode}, expected {r['expect_exit']} {first.stderr}")
    check(first.stdout == second.stdout, f"{label}: output differs between runs")
    try:
        report = json.loads(first.stdout)
        validate(report)
        check(report["exit_code"] == first.returncode, f"{label}: exit_code field disagrees")
        check(report["seed"] == 42, f"{label}: seed missing")
    except (json.JSONDecodeError, jsonschema.ValidationError) as e:
        check(False, f"{label}: {e}")

# documented versoc answers
expect = {("triangle", 3): (3, -1 / 6, True), ("c5", 3): (2, 0.0, False), ("empty-graph", 2): (1, None, False)}
for (name, K), (omega, lam, clique) in expect.items():
    p = run("versoc", "--input", a / "graphs" / f"{name}.json", "--K", K)
    j = json.loads(p.stdout)
    check(j["omega"] == omega and j["clique"] == clique, f"versoc {name}: {j['omega']} {j['clique']}")
    if lam is not None:
        check(abs(j["lambda_formula"] - lam) < 1e-12 and abs(j["lambda_numeric"] - lam) < 1e-9, f"versoc {name} lambda")

# input errors map to exit 3 with a location
bad = WORK / "bad.json"
bad.write_text('{"n": 3,\n "edges": [[0, 1],,]}')
p = run("versoc", "--input", bad, "--K", 3)
check(p.returncode == 3 and "bad.json:2:" in p.stderr, f"malformed JSON: {p.returncode} {p.stderr}")
p = run("tangent", "--input", a / "graphs" / "c5.json")
check(p.returncode == 3 and '"X"' in p.stderr, f"missing field: {p.returncode} {p.stderr}")
p = run("tangent", "--input", a / "tangent" / "matrix_member.json", "--rank", 9)
check(p.returncode == 3, f"rank out of range: {p.returncode}")
p = run("tangent", "--input", a / "tangent" / "matrix_member.json", "--set", "nonsense")
check(p.returncode == 3, f"bad flag value: {p.returncode}")
p = run("versoc", "--input", WORK / "missing.json")
check(p.returncode == 3, f"missing file: {p.returncode}")

# text format, --out and the decay CSV
p = run("versoc", "--input", a / "graphs" / "triangle.json", "--K", 3, "--format", "text")
check(p.returncode == 0 and "omega: 3" in p.stdout, "text format")
out = WORK / "tangent_report.json"
p = run("tangent", "--input", a / "tangent" / "matrix_member.json", "--oracle", "--emit-plots-data", "--out", out)
check(p.returncode == 0 and p.stdout == "", "report to --out")
validate(json.loads(out.read_text()))
csv = Path(str(out) + ".decay.csv").read_text().splitlines()
check(csv[0] == "t,residual" and len(csv) == 10, "decay CSV")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
