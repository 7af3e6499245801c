"""Build the CSV files under data/ from the raw UCI files.

The raw Adult and German credit files ship inside the ``responsibly`` wheel,
so the script works from a pip download when the UCI site is unreachable::

    pip download --no-deps responsibly==0.1.2 -d /tmp/wheels
    python scripts/prepare_datasets.py /tmp/wheels/responsibly-0.1.2-py3-none-any.whl
"""
import csv
import io
import sys
import zipfile
from pathlib import Path

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]

GERMAN_COLUMNS = [
    "status", "month", "credit_history", "purpose", "credit_amount",
    "savings", "employment", "investment_as_income_percentage",
    "personal_status", "other_debtors", "residence_since", "property",
    "age", "installment_plans", "housing", "number_of_credits",
    "skill_level", "people_liable_for", "telephone", "foreign_worker",
    "credit",
]

# personal_status codes A91/A93/A94 are male, A92/A95 female
GERMAN_SEX = {"A91": "male", "A92": "female", "A93": "male", "A94": "male", "A95": "female"}


def _adult_rows(text):
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("|"):
            continue
        cells = [c.strip() for c in line.split(",")]
        if len(cells) != len(ADULT_COLUMNS):
            continue
        cells[-1] = cells[-1].rstrip(".")
        yield cells


def write_adult(wheel, out):
    rows = []
    for name in ("adult.data", "adult.test"):
        rows.extend(_adult_rows(wheel.read(f"responsibly/dataset/adult/{name}").decode()))
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ADULT_COLUMNS)
        w.writerows(rows)
    return len(rows)


def write_german(wheel, out):
    text = wheel.read("responsibly/dataset/german/german.data").decode()
    n = 0
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(GERMAN_COLUMNS + ["sex"])
        for line in io.StringIO(text):
            cells = line.split()
            if len(cells) != len(GERMAN_COLUMNS):
                continue
            credit = "good" if cells[-1] == "1" else "bad"
            w.writerow(cells[:-1] + [credit, GERMAN_SEX[cells[8]]])
            n += 1
    return n


def main(argv):
    if len(argv) != 2:
        print(__doc__)
        return 2
    out_dir = Path(__file__).resolve().parent.parent / "data"
    out_dir.mkdir(exist_ok=True)
    with zipfile.ZipFile(argv[1]) as wheel:
        print("adult.csv:", write_adult(wheel, out_dir / "adult.csv"), "rows")
        print("german.csv:", write_german(wheel, out_dir / "german.csv"), "rows")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
