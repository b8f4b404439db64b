#!/usr/bin/env python3
"""Build data/adult.csv and data/german.csv from the raw UCI files.

The raw files are taken from the `responsibly` wheel on PyPI, which ships
unmodified copies of adult.data, adult.test and german.data. Pass --raw-dir
to use files you already have instead.
"""
import argparse
import csv
import pathlib
import subprocess
import tempfile
import zipfile

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]

GERMAN_COLUMNS = [
    "status", "duration", "credit_history", "purpose", "credit_amount",
    "savings", "employment", "installment_rate", "personal_status_sex",
    "other_debtors", "residence_since", "property", "age",
    "installment_plans", "housing", "existing_credits", "job",
    "people_liable", "telephone", "foreign_worker", "credit",
]

RAW_FILES = ["adult/adult.data", "adult/adult.test", "german/german.data"]


def fetch_raw(raw_dir: pathlib.Path) -> None:
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            ["pip", "download", "--no-deps", "--dest", tmp, "responsibly==0.1.2"],
            check=True,
        )
        wheel = next(pathlib.Path(tmp).glob("responsibly-*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            for name in RAW_FILES:
                target = raw_dir / pathlib.Path(name).name
                target.write_bytes(zf.read("responsibly/dataset/" + name))


def write_adult(raw_dir: pathlib.Path, out: pathlib.Path) -> int:
    rows = []
    for fname in ("adult.data", "adult.test"):
        for line in (raw_dir / fname).read_text().splitlines():
            if not line.strip() or line.startswith("|"):
                continue
            cells = [c.strip() for c in line.split(",")]
            cells[-1] = cells[-1].rstrip(".")
            rows.append(cells)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ADULT_COLUMNS)
        writer.writerows(rows)
    return len(rows)


def write_german(raw_dir: pathlib.Path, out: pathlib.Path) -> int:
    rows = [line.split() for line in (raw_dir / "german.data").read_text().splitlines() if line.strip()]
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(GERMAN_COLUMNS)
        writer.writerows(rows)
    return len(rows)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--raw-dir", type=pathlib.Path)
    parser.add_argument("--out-dir", type=pathlib.Path,
                        default=pathlib.Path(__file__).resolve().parent.parent / "data")
    args = parser.parse_args()

    args.out_dir.mkdir(parents=True, exist_ok=True)
    if args.raw_dir is None:
        with tempfile.TemporaryDirectory() as tmp:
            raw = pathlib.Path(tmp)
            fetch_raw(raw)
            n_adult = write_adult(raw, args.out_dir / "adult.csv")
            n_german = write_german(raw, args.out_dir / "german.csv")
    else:
        n_adult = write_adult(args.raw_dir, args.out_dir / "adult.csv")
        n_german = write_german(args.raw_dir, args.out_dir / "german.csv")
    print(f"adult.csv: {n_adult} rows, german.csv: {n_german} rows")


if __name__ == "__main__":
    main()
