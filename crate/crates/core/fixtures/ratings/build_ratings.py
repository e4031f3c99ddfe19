"""Synthetic guidance ratings and their reference statistics.

Three raters score 30 items on three criteria. Relevance is nearly always 5
and two raters never deviate from it, which makes their rank correlation
undefined. Statistics come from numpy, scipy and scikit-learn.

    python3 build_ratings.py
"""

import csv
import json
import math
import os

import numpy as np
from scipy import stats
from sklearn.metrics import cohen_kappa_score

HERE = os.path.dirname(os.path.abspath(__file__))
RATERS = ["R1", "R2", "R3"]
CRITERIA = ["Relevance", "Accuracy", "Usefulness"]
ITEMS = 30


def ratings(rng):
    out = {}
    for c in CRITERIA:
        if c == "Relevance":
            base = np.full(ITEMS, 5)
            out[(c, "R1")] = base.copy()
            out[(c, "R2")] = base.copy()
            r3 = base.copy()
            r3[rng.choice(ITEMS, 3, replace=False)] = 4
            out[(c, "R3")] = r3
            continue
        truth = rng.integers(3, 6, ITEMS)
        for r in RATERS:
            noise = rng.choice([-1, 0, 0, 0, 1], ITEMS)
            out[(c, r)] = np.clip(truth + noise, 1, 5)
    return out


def main():
    rng = np.random.default_rng(20240517)
    data = ratings(rng)
    with open(os.path.join(HERE, "sample_ratings.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["criterion", "rater", "item", "score"])
        for c in CRITERIA:
            for r in RATERS:
                for i, s in enumerate(data[(c, r)], start=1):
                    w.writerow([c, r, i, int(s)])

    descriptive = {}
    agreement = []
    for c in CRITERIA:
        allv = np.concatenate([data[(c, r)] for r in RATERS]).astype(float)
        descriptive[c] = {
            "mean": float(allv.mean()),
            "sd": float(allv.std(ddof=1)),
            "min": float(allv.min()),
            "max": float(allv.max()),
            "n": int(allv.size),
        }
        for i in range(len(RATERS)):
            for j in range(i + 1, len(RATERS)):
                a, b = data[(c, RATERS[i])], data[(c, RATERS[j])]
                if np.all(a == a[0]) or np.all(b == b[0]):
                    rho = p = None
                else:
                    res = stats.spearmanr(a, b)
                    rho, p = float(res.statistic), float(res.pvalue)
                kappa = cohen_kappa_score(a, b, labels=[1, 2, 3, 4, 5], weights="quadratic")
                # Identical constant raters: 0/0, reported as 0.
                kappa = 0.0 if math.isnan(kappa) else float(kappa)
                agreement.append({
                    "criterion": c, "pair": f"{RATERS[i]}-{RATERS[j]}", "rho": rho, "p": p, "kappa": kappa,
                })
    with open(os.path.join(HERE, "expected_stats.json"), "w") as f:
        json.dump({"descriptive": descriptive, "agreement": agreement}, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
