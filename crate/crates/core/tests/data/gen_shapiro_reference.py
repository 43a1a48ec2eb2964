"""Regenerates shapiro_reference.json from scipy.stats.shapiro (Royston AS R94)."""
import json

import numpy as np
from scipy import stats

rng = np.random.default_rng(20240611)
cases = []
sizes = [3, 4, 5, 6, 7, 8, 10, 11, 12, 15, 20, 25, 30, 40, 50, 75, 100, 150, 200, 500]
kinds = ["normal", "uniform", "exponential"]
i = 0
while len(cases) < 50:
    n = sizes[i % len(sizes)]
    kind = kinds[i % len(kinds)]
    if kind == "normal":
        x = rng.normal(2.0, 3.0, n)
    elif kind == "uniform":
        x = rng.uniform(-1.0, 4.0, n)
    else:
        x = rng.exponential(1.5, n)
    x = [float(round(v, 6)) for v in x]
    res = stats.shapiro(x)
    cases.append({"kind": kind, "x": x, "w": float(res.statistic), "p": float(res.pvalue)})
    i += 1

ten = list(range(1, 11))
res = stats.shapiro(ten)
out = {
    "source": "scipy.stats.shapiro",
    "one_to_ten": {"x": ten, "w": float(res.statistic), "p": float(res.pvalue)},
    "cases": cases,
}
with open("shapiro_reference.json", "w") as f:
    json.dump(out, f, indent=1)
print(out["one_to_ten"])
