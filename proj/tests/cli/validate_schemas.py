"""Validate sample configs and a generated adiabatic report against docs/ schemas."""
import json
import pathlib
import subprocess
import sys

import jsonschema


def load(path):
    with open(path) as f:
        return json.load(f)


def main():
    cli, source, work = sys.argv[1], pathlib.Path(sys.argv[2]), pathlib.Path(sys.argv[3])
    work.mkdir(parents=True, exist_ok=True)
    config_schema = load(source / "docs" / "run_config.schema.json")
    report_schema = load(source / "docs" / "adiabatic_report.schema.json")
    failures = 0

    for cfg in sorted((source / "configs").glob("*.json")):
        doc = load(cfg)
        if "input" not in doc and "seed" not in doc:
            continue
        try:
            jsonschema.validate(doc, config_schema)
            print(f"ok   {cfg.name}")
        except jsonschema.ValidationError as e:
            failures += 1
            print(f"FAIL {cfg.name}: {e.message}")

    bad = {"seed": 1, "spectral": {"rank_method": "largest"}}
    try:
        jsonschema.validate(bad, config_schema)
        failures += 1
        print("FAIL schema accepted an invalid rank_method")
    except jsonschema.ValidationError:
        print("ok   invalid config rejected")

    cfg = work / "adiabatic.json"
    cfg.write_text(json.dumps({"seed": 3, "adiabatic": {"etas": [0.0, 0.1, 0.01], "n": 5}}))
    out = work / "out"
    subprocess.run([cli, "adiabatic", "--config", str(cfg), "--out", str(out)], check=True)
    report = load(out / "adiabatic.json")
    try:
        jsonschema.validate(report, report_schema)
        print("ok   adiabatic.json")
    except jsonschema.ValidationError as e:
        failures += 1
        print(f"FAIL adiabatic.json: {e.message}")
    if report["sweep"][0]["ratio"] is not None:
        failures += 1
        print("FAIL ratio at eta = 0 should be null")

    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
