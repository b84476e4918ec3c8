"""Merge the UCI ``adult.data`` / ``adult.test`` pair into one headered CSV.

The combined file has 48,842 rows and uses the OpenML column names, which is
the layout :func:`l0gm.datasets.load_adult` expects::

    python tools/build_adult_csv.py adult.data adult.test data/adult.csv.gz
"""
import gzip
import sys

COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education-num",
    "marital-status", "occupation", "relationship", "race", "sex",
    "capital-gain", "capital-loss", "hours-per-week", "native-country", "class",
]


def rows(path):
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("|"):
                continue
            parts = [p.strip() for p in line.split(",")]
            # adult.test labels carry a trailing period
            parts[-1] = parts[-1].rstrip(".")
            if len(parts) != len(COLUMNS):
                raise ValueError(f"{path}: expected {len(COLUMNS)} columns, got {len(parts)}")
            yield parts


def main(train_path, test_path, out_path):
    lines = [",".join(COLUMNS)]
    for path in (train_path, test_path):
        lines.extend(",".join(parts) for parts in rows(path))
    payload = ("\n".join(lines) + "\n").encode("utf-8")
    if out_path.endswith(".gz"):
        # mtime=0 keeps the bytes, and so the dataset hash, reproducible
        payload = gzip.compress(payload, mtime=0)
    with open(out_path, "wb") as fh:
        fh.write(payload)
    print(f"wrote {len(lines) - 1} rows to {out_path}")


if __name__ == "__main__":
    main(*sys.argv[1:4])
