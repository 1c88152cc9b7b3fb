r"""
Cubic NLS: split-step solver and Picard series
==============================================

Strang splitting conserves mass to rounding and energy to the splitting
error. For small data ``a f`` the Picard series matches the solution up to
a remainder of size ``a^{M+1}``.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from displab.fields import Field, gaussian, make_grid
from displab.harness import run_experiment
from displab.nls import NlsRun, energy_monitors, splitstep_solve

g = make_grid(1, 1024, 64.0)

# %%
# A focusing soliton keeps its modulus.
prof = np.sqrt(2) / np.cosh(g.x1)
u = splitstep_solve(NlsRun(Field(g, prof), sign=-1, T=1.0, dt=1 / 1024, record_every=64))
dev = max(np.max(np.abs(np.abs(s.samples) - prof)) for s in u.slices)
print(f"soliton modulus drift {dev:.2e}")

# %%
# Defocusing Gaussian: conservation laws.
u = splitstep_solve(NlsRun(gaussian(g, 2.0), T=1.0, dt=1 / 512))
mon = energy_monitors(u)
print(f"mass drift {np.max(np.abs(mon.mass / mon.mass[0] - 1)):.1e}")
print(f"energy drift {np.max(np.abs(mon.E / mon.E[0] - 1)):.1e}")

# %%
# Remainder of the Picard series.
res = run_experiment("nls_picard")
print(f"Picard remainder slope {res.slope:.3f} (expected {res.config['M_max'] + 1})")

fig, ax = plt.subplots(figsize=(6, 4))
a = np.array([r[0] for r in res.records])
err = np.array([r[-1] for r in res.records])
ax.loglog(a, err, "o-", base=2)
ax.set_xlabel("amplitude a")
ax.set_ylabel("relative remainder")
fig.tight_layout()
fig.savefig("nls_picard.png", dpi=120)
