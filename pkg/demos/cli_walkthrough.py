"""
Command-line walkthrough
========================

Runs each ``mvpert`` subcommand on the matrices in ``demos/data`` and
prints the headline fields of the JSON reports.
"""

import json
import subprocess
import sys
from pathlib import Path

DATA = Path(__file__).parent / "data"


def mvpert(*args):
    cmd = [sys.executable, "-m", "mvpert.cli", *map(str, args)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    print("$ mvpert", " ".join(map(str, args)), f"  [exit {proc.returncode}]")
    return json.loads(proc.stdout) if proc.stdout else proc.stderr.strip()


rep = mvpert("gauss", "--rho", DATA / "id3.csv", "--xmax", "0,0,0")
print("  headline", rep["expansion"]["headline"])

rep = mvpert("gauss", "--rho", DATA / "equi036_5.csv", "--xmax", "0,0,0,0,0")
print("  i1, i2", rep["expansion"]["i1"], rep["expansion"]["i2"], "warnings", rep["warnings"])

rep = mvpert("gauss", "--rho", DATA / "near4.json", "--xmax", "0.5,0,inf,1", "--compare-grid", 64, "--timings")
e = rep["expansion"]
print("  headline", e["headline"], "grid", rep["oracle"]["value"])
# here i1 and i2 are nearly equal, so [1/1] sits close to its pole and drags the
# averaged second-order Pade value (and the headline) away; partial2 and [0/2] stay accurate
print("  partial2", e["partial2"], "[1/1]", e["pade2_11"], "[0/2]", e["pade2_02"])
print("  warnings", rep["warnings"])
print("  stages", [(s["name"], round(s["ms"], 2)) for s in rep["stages"]])

rep = mvpert("gauss", "--rho", DATA / "rand6.csv", "--xmax", "1,1,1,1,1,1", "--compare-mc", 200000)
print("  far from one-factor: headline", rep["expansion"]["headline"], "MC", rep["oracle"]["value"])

rep = mvpert("student-t", "--rho", DATA / "r05_2.csv", "--xmax", "0,0", "--nu", 7)
print("  headline", rep["expansion"]["headline"])

rep = mvpert("sensitivity", "--rho", DATA / "equi030_3.csv", "--rho2", DATA / "equi035_3.csv", "--xmax", "0,0,0")
print("  difference", rep["sensitivity"]["difference"])

rep = mvpert("metrics", "--rho", DATA / "rand6.csv")
print("  metrics", {k: rep["metrics"][k] for k in ("sigma2_rho_int", "r_of_n", "lambda_min")})

print(" ", mvpert("gauss", "--rho", DATA / "id3.csv", "--xmax", "0,0"))
