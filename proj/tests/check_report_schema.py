"""Runs the CLI on small fixtures and validates each report.json against the schema."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def run(cli, *args):
    subprocess.run([cli, *args], check=True, stdout=subprocess.DEVNULL)


def main():
    cli, schema_path = sys.argv[1], sys.argv[2]
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        circle = tmp / "circle.npy"
        run(cli, "generate", "--manifold", "circle", "--samples", "400", "--seed", "3", "--out", str(circle))
        vocab = tmp / "vocab.txt"
        vocab.write_text("".join(f"{i}\n" if i % 4 == 0 else "word\n" for i in range(400)))
        dup = tmp / "dup.csv"
        dup.write_text("".join("0,0\n" if i < 30 else f"{i},0\n" for i in range(60)))
        runs = {
            "plain": ["--input", str(circle)],
            "cohorts": ["--input", str(circle), "--vocab", str(vocab), "--cohort", "numeric",
                        "--anchors", "100", "--seed", "2"],
            "intrinsic": ["--input", str(circle), "--metric", "circle-arclength", "--kmin", "5",
                          "--kmax-regress", "40", "--ricci-window", "band"],
            "degenerate": ["--input", str(dup), "--kmin", "2", "--kmax-regress", "20"],
        }
        failures = 0
        for name, args in runs.items():
            out = tmp / name
            run(cli, "analyze", *args, "--out", str(out))
            report = json.loads((out / "report.json").read_text())
            errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
            status = "ok" if not errors else f"{len(errors)} errors"
            print(f"{name}: {len(report['records'])} records, schema {status}")
            for e in errors[:5]:
                print(f"  {list(e.path)}: {e.message}")
            failures += bool(errors)
        if failures:
            sys.exit(1)


if __name__ == "__main__":
    main()
