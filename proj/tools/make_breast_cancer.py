#!/usr/bin/env python3
"""Export the scikit-learn breast cancer dataset as a plain CSV.

Rows are `label,x1,...,x30` with labels in {-1,+1} (malignant = -1).
Usage: make_breast_cancer.py OUT.csv
"""

import sys


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    try:
        from sklearn.datasets import load_breast_cancer
    except ImportError as exc:  # leave the fixture absent; tests report it
        print(f"scikit-learn unavailable: {exc}", file=sys.stderr)
        return 1
    data = load_breast_cancer()
    with open(sys.argv[1], "w", encoding="ascii") as out:
        for row, target in zip(data.data, data.target):
            label = 1 if target == 1 else -1
            cells = [str(label)] + [f"{value:.17g}" for value in row]
            out.write(",".join(cells) + "\n")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
