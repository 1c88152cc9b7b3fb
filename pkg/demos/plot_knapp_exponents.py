r"""
Knapp examples
==============

Three families of data whose norms scale with a parameter. A log-log fit
of each ratio reproduces the exponent that makes the smoothing estimate
sharp.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from displab.harness import run_experiment, theoretical_exponents

runs = {
    "anisotropic, |t| <= 1": run_experiment("knapp_aniso_local"),
    "anisotropic, |t| <= eps^-2": run_experiment("knapp_aniso_global"),
    "isotropic refocusing": run_experiment("knapp_iso"),
}

b = theoretical_exponents(4, 4, 2, 1)
print(b.knapp)

fig, ax = plt.subplots(figsize=(6, 4))
for label, res in runs.items():
    s = np.array([r[0] for r in res.records])
    v = np.array([r[-1] for r in res.records])
    ax.loglog(s, v, "o-", base=2, label=f"{label}: slope {res.slope:.3f}")
    print(f"{label:30s} slope {res.slope:.4f}  passed={res.passed}")
ax.set_xlabel("scale")
ax.set_ylabel("norm ratio")
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig("knapp_exponents.png", dpi=120)
