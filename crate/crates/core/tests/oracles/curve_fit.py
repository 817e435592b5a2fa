"""Reference (a, b) for the low-dimensional similarity curve.

Fits 1 / (1 + a x^(2b)) to the min_dist plateau curve with scipy, the way
the reference UMAP implementation does.
"""
import json
from pathlib import Path

import numpy as np
from scipy.optimize import curve_fit

out = {}
for min_dist in (0.05, 0.1, 0.25, 0.5):
    spread = 1.0
    xv = np.linspace(0, spread * 3, 300)
    yv = np.where(xv < min_dist, 1.0, np.exp(-(xv - min_dist) / spread))
    (a, b), _ = curve_fit(lambda x, a, b: 1.0 / (1.0 + a * x ** (2 * b)), xv, yv)
    out[str(min_dist)] = {"a": float(a), "b": float(b)}
path = Path(__file__).resolve().parent.parent / "fixtures" / "curve_fit.json"
path.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n")
print(out)
