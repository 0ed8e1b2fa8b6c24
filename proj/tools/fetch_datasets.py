#!/usr/bin/env python3
"""Populate data/ with the archive files the experiments and tests expect.

ECG5000 comes from the ucr-datasets wheel (UCR tsv files as-is) and
ItalyPowerDemand from the aeon wheel (.ts files, converted to UCR tsv).
The MIT-BIH heartbeat CSVs are not redistributed on PyPI; pass the Kaggle
files with --mitbih-train / --mitbih-test to copy them into place.
"""

import argparse
import shutil
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

WHEELS = {
    "ucr-datasets==0.0.6": {
        "ucr_datasets/data/ECG5000_TRAIN.tsv": "ECG5000_TRAIN.tsv",
        "ucr_datasets/data/ECG5000_TEST.tsv": "ECG5000_TEST.tsv",
    },
    "aeon==1.3.0": {
        "aeon/datasets/data/ItalyPowerDemand/ItalyPowerDemand_TRAIN.ts": "ItalyPowerDemand_TRAIN.tsv",
        "aeon/datasets/data/ItalyPowerDemand/ItalyPowerDemand_TEST.ts": "ItalyPowerDemand_TEST.tsv",
    },
}


def ts_to_tsv(text: str) -> str:
    rows = []
    in_data = False
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if not in_data:
            in_data = line.lower() == "@data"
            continue
        values, label = line.rsplit(":", 1)
        rows.append("\t".join([label] + values.split(",")))
    return "\n".join(rows) + "\n"


def fetch(spec: str, members: dict, out: Path, scratch: Path) -> None:
    if all((out / name).exists() for name in members.values()):
        print(f"{spec}: already present")
        return
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "--quiet", "-d", str(scratch), spec],
        check=True,
    )
    name = spec.split("==")[0].replace("-", "_")
    wheel = next(scratch.glob(f"{name}-*.whl"))
    with zipfile.ZipFile(wheel) as z:
        for member, target in members.items():
            data = z.read(member).decode()
            if member.endswith(".ts"):
                data = ts_to_tsv(data)
            (out / target).write_text(data)
            print(f"wrote {out / target}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    parser.add_argument("--mitbih-train", type=Path, help="Kaggle mitbih_train.csv")
    parser.add_argument("--mitbih-test", type=Path, help="Kaggle mitbih_test.csv")
    args = parser.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        for spec, members in WHEELS.items():
            fetch(spec, members, args.out, Path(tmp))
    for src, name in ((args.mitbih_train, "mitbih_train.csv"), (args.mitbih_test, "mitbih_test.csv")):
        if src is not None:
            shutil.copyfile(src, args.out / name)
            print(f"copied {src} -> {args.out / name}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
