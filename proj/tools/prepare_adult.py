#!/usr/bin/env python3
"""Convert the raw UCI ``adult.data`` file into the CSV layout used by data/adult_schema.json.

The raw file has no header, uses ", " as the separator and ends with a blank
line. The sampling weight column ``fnlwgt`` is dropped; every other column is
kept verbatim (``?`` is a regular category label in the schema).

Usage: prepare_adult.py adult.data data/adult.csv
"""
import csv
import sys

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country",
    "income",
]
DROP = {"fnlwgt"}


def main(src, dst):
    keep = [i for i, c in enumerate(COLUMNS) if c not in DROP]
    with open(src, newline="") as fin, open(dst, "w", newline="") as fout:
        writer = csv.writer(fout, lineterminator="\n")
        writer.writerow([COLUMNS[i] for i in keep])
        for row in csv.reader(fin):
            if len(row) != len(COLUMNS):
                continue
            writer.writerow([row[i].strip() for i in keep])


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
