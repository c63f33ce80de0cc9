"""Average a sweep CSV over trials: one line per (sweep value, baseline)."""
import argparse
import csv
from collections import defaultdict

import numpy as np


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv")
    parser.add_argument("--metric", default="wsr_bps_hz")
    args = parser.parse_args()
    groups = defaultdict(list)
    order = []
    with open(args.csv) as fh:
        for row in csv.DictReader(fh):
            key = (row["sweep_value"], row["baseline"])
            if key not in groups:
                order.append(key)
            groups[key].append(float(row[args.metric]))
    for key in order:
        vals = np.array(groups[key])
        print(f"{key[0]:>10} {key[1]:<20} mean={vals.mean():.4f} std={vals.std():.4f} n={len(vals)}")


if __name__ == "__main__":
    main()
