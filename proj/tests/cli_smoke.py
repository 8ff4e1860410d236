# Copyright 2026 The tfbell Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Command-line smoke checks: exit codes and report schema."""

import argparse
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def run(binary, *args, cwd):
    return subprocess.run([binary, *args], cwd=cwd, capture_output=True, text=True, timeout=600)


def expect_exit(binary, code, *args, cwd, needle=None):
    r = run(binary, *args, cwd=cwd)
    if r.returncode != code:
        sys.exit(f"{' '.join(args)}: exit {r.returncode}, expected {code}\n{r.stderr}")
    if needle and needle not in r.stderr:
        sys.exit(f"{' '.join(args)}: stderr lacks {needle!r}\n{r.stderr}")
    return r


def exit_codes(binary, tmp):
    (tmp / "unknown.json").write_text('{"scenario": {"d": 3, "M": 20, "oops": 1}}')
    expect_exit(binary, 2, "pipeline", "unknown.json", cwd=tmp, needle="unknown key 'oops'")
    expect_exit(binary, 2, "bell", "--d", "1", cwd=tmp)
    expect_exit(binary, 2, "simulate", "--M", "7", cwd=tmp)
    expect_exit(binary, 4, "pipeline", "--input-jsi", "absent.csv", "--out-dir", "o", cwd=tmp, needle="[ingest]")
    expect_exit(binary, 4, "pipeline", "missing_config.json", cwd=tmp)
    expect_exit(binary, 3, "wrap", "--d", "3", "--M", "20", "--visibility", "0", "--calibration", "fit",
                "--counts", "1e5", "--out-dir", "o", cwd=tmp, needle="[wrap]")
    r = expect_exit(binary, 0, "simulate", "--d", "3", "--M", "20", "--counts", "1e5", "--out-dir", "sim", cwd=tmp)
    json.loads(r.stdout)
    expect_exit(binary, 0, "bell", "--input-jsi", "sim/jsi.csv", "--d", "3", "--M", "20", "--calibration", "fit",
                "--out-dir", "b", cwd=tmp)
    expect_exit(binary, 2, "bell", "--input-jsi", "sim/jsi.csv", "--d", "3", "--M", "20", "--calibration", "truth",
                "--out-dir", "b", cwd=tmp)
    expect_exit(binary, 0, "sweep", "--d-min", "2", "--d-max", "3", "--format", "csv", "--out-dir", "s", cwd=tmp)
    if not (tmp / "s" / "sweep.csv").exists():
        sys.exit("sweep.csv missing")


def report_schema(binary, schema_path, tmp):
    schema = json.loads(Path(schema_path).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    cases = [
        ["--d", "3", "--M", "20", "--counts", "1e6", "--seed", "7", "--lhv", "--out-dir", "r1"],
        ["--d", "3", "--M", "20", "--counts", "1e6", "--visibility", "0", "--out-dir", "r2"],
        ["--d", "2", "--M", "6", "--counts", "1e6", "--lhv", "--lhv-method", "fw", "--settings", "uniform",
         "--out-dir", "r3"],
    ]
    for args in cases:
        expect_exit(binary, 0, "pipeline", *args, cwd=tmp)
        report = json.loads((tmp / args[-1] / "report.json").read_text())
        errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
        if errors:
            sys.exit(f"{args[-1]}: " + "; ".join(f"{list(e.path)}: {e.message}" for e in errors))
        for name in report["artifacts"].values():
            if not (tmp / args[-1] / name).exists():
                sys.exit(f"{args[-1]}: artifact {name} missing")
    if json.loads((tmp / "r1" / "report.json").read_text())["seed"] != 7:
        sys.exit("--seed override not applied")
    # A failed fit on white noise falls back to the known calibration.
    if json.loads((tmp / "r2" / "report.json").read_text())["pvalue"]["p_bound"] != 1.0:
        sys.exit("white noise should give p_bound = 1")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("mode", choices=["exit-codes", "report-schema"])
    ap.add_argument("binary")
    ap.add_argument("--schema")
    a = ap.parse_args()
    binary = str(Path(a.binary).resolve())
    with tempfile.TemporaryDirectory() as d:
        if a.mode == "exit-codes":
            exit_codes(binary, Path(d))
        else:
            report_schema(binary, a.schema, Path(d))
    print(f"{a.mode}: ok")


if __name__ == "__main__":
    main()
