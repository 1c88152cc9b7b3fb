r"""
Decoupling for the parabola
===========================

The extension of a density on ``[-1, 1]`` is compared with the square sum
of its pieces on caps of length ``R^{-1/2}``. For ``p = 4`` the normalised
ratio stays bounded as ``R`` grows; a density on a single cap gives
exactly one.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from displab.decoupling import CapSet, DecouplingSetup, cap_density, decoupling_ratio, random_density

setup = DecouplingSetup(p=4.0)
Rs = [16, 32, 64, 128]
rng = np.random.default_rng(0)
D = [decoupling_ratio(setup, random_density(R, rng), R).D for R in Rs]
single = [decoupling_ratio(setup, cap_density(CapSet(R), (1,)), R).ratio for R in Rs]
for R, a, b in zip(Rs, D, single):
    print(f"R={R:4d}  D(R)={a:.3f}  single cap={b:.15f}")

# %%
# The caps form a partition of unity on the interval.
caps = CapSet(64)
xi = np.linspace(-1, 1, 2001)
fig, ax = plt.subplots(figsize=(7, 3))
for idx in caps.indices():
    ax.plot(xi, caps.window(xi, idx), lw=1)
ax.plot(xi, sum(caps.window(xi, idx) for idx in caps.indices()), "k--", lw=1)
ax.set_xlabel("xi")
fig.tight_layout()
fig.savefig("decoupling_caps.png", dpi=120)
