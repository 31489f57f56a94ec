"""Run each JSON-emitting subcommand and validate its output against the shipped schema."""
import json
import pathlib
import subprocess
import sys

import jsonschema

binary, schema_dir = sys.argv[1], pathlib.Path(sys.argv[2])

cases = [
    ("geometry_report", ["geometry", "--sigma", "1", "--alpha", "1"]),
    ("geometry_report", ["geometry", "--sigma", "1", "--alpha", "0.5", "--backend", "mc", "--mc-samples", "20000"]),
    ("geometry_report", ["geometry", "--model", "linear-gaussian", "--sigma", "2", "--backend", "closed"]),
    ("directional_bound", ["bound", "--sigma", "1", "--alpha", "1", "--v", "1,1"]),
    ("directional_bound", ["bound", "--model", "curved-gaussian-1d", "--sigma", "1", "--alpha", "2", "--v", "3"]),
    ("sos_certificate", ["sdp", "--sigma", "1", "--alpha", "1"]),
    ("sos_certificate", ["sdp", "--toy", "remark3", "--a", "1,2", "--c", "4"]),
    ("validation_report", ["validate", "--sigma", "1", "--alpha", "1", "--samples", "5000"]),
    ("validation_report", ["validate", "--model", "linear-gaussian", "--sigma", "1", "--samples", "5000"]),
]

failures = 0
for schema_name, args in cases:
    schema = json.loads((schema_dir / f"{schema_name}.schema.json").read_text())
    proc = subprocess.run([binary, *args], capture_output=True, text=True)
    label = " ".join(args)
    if proc.returncode != 0:
        print(f"FAIL {label}: exit {proc.returncode}\n{proc.stderr}")
        failures += 1
        continue
    try:
        jsonschema.validate(json.loads(proc.stdout), schema)
        print(f"ok   {label}")
    except jsonschema.ValidationError as e:
        print(f"FAIL {label}: {e.message}")
        failures += 1
sys.exit(1 if failures else 0)
