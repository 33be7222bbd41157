"""
Plot growth.csv
===============

Companion to ``python -m cornerflow simulate-growth``: draws max q(t) on
a log axis next to the admissible envelope.  Needs matplotlib, which the
package itself does not use.

    python demos/plot_growth.py out/growth.csv out/growth_report.json growth.png
"""

import json
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

csv_path, report_path, png = sys.argv[1:4]
data = np.loadtxt(csv_path, delimiter=",", skiprows=1)
report = json.load(open(report_path))

t = np.unique(data[:, 0])
qmax = np.array([data[data[:, 0] == s, 4].max() for s in t])
fig, ax = plt.subplots(figsize=(5, 3.5))
ax.semilogy(t, np.maximum(qmax, 1e-300), label="max q")
ax.semilogy(t, report["lip0"] * np.exp(report["c"] * report["sup_norm"] * t), "--", label="Lip exp(c |w0| t)")
ax.set_xlabel("t")
ax.legend()
fig.tight_layout()
fig.savefig(png, dpi=120)
