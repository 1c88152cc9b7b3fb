r"""
Uniform frequency windows
=========================

A field is split into unit frequency boxes with a smooth partition of
unity. The modulation norm sums the ``L^p`` sizes of the pieces, and for
``p = q = 2`` it is comparable to the plain ``L^2`` norm.
"""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from displab.fields import lp_norm, make_grid, random_wavepackets
from displab.modspace import ModNormSpec, WindowFamily, box_decompose, modulation_norm, partition_residual

g = make_grid(1, 1024, 64.0)
f = random_wavepackets(g, np.random.default_rng(7), kmax=6.0)

# %%
# The windows telescope to one up to rounding.
print(f"partition residual {partition_residual(g, WindowFamily(1)):.1e}")

pieces = box_decompose(f)
total = sum(p.samples for p in pieces.values())
print(f"{len(pieces)} boxes, reconstruction error {np.max(np.abs(total - f.samples)):.1e}")

# %%
# M_{2,2} against L^2 on a small random corpus.
rng = np.random.default_rng(1)
ratios = []
for _ in range(20):
    h = random_wavepackets(g, rng, kmax=8.0)
    ratios.append(modulation_norm(h, ModNormSpec(0, 2, 2)) / lp_norm(h, 2))
print(f"M22 / L2 in [{min(ratios):.3f}, {max(ratios):.3f}]")

fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 5))
ax0.plot(g.x1, np.abs(f.samples), "k", lw=1)
ax0.set_xlabel("x")
ax0.set_ylabel("|f|")
xi = np.fft.fftshift(g.xi1)
for k, piece in pieces.items():
    ax1.plot(xi, np.fft.fftshift(np.abs(piece.spectrum)), lw=1, label=f"k={k[0]}")
ax1.set_xlim(-8, 8)
ax1.set_xlabel("frequency")
ax1.set_ylabel("|box piece|")
fig.tight_layout()
fig.savefig("modulation_windows.png", dpi=120)
