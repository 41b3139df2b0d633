"""Why the fused density keeps the cardinality distribution of the local ones.

Run:  python demos/first_vs_second_order.py [output_dir]

A node that is sure there are either two targets or none has the
cardinality distribution [0.5, 0, 0.5]. Its multi-Bernoulli (first-order)
approximation keeps the PHD but treats the two tracks as independent, so it
puts half of the mass on "exactly one target". The second-order
approximation keeps both the PHD and the cardinality distribution.

The second half fuses that node with a second node holding the same belief
and shows that the second-order fusion still rules out a single target.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gmbfusion.approx import to_fogmb, to_sogmb
from gmbfusion.densities import GmbDensity, GmbHypothesis, sogmb_cardinality, sogmb_phd
from gmbfusion.fusion import fuse_pair
from gmbfusion.gaussian import GaussianMixture

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)


def gauss(mean, var=1.0):
    return GaussianMixture.single(np.array([mean]), np.array([[var]]))


belief = GmbDensity((GmbHypothesis((1, 2), 0, 0.5, (gauss(0.0), gauss(4.0))),
                     GmbHypothesis((), 0, 0.5, ())))
so, fo = to_sogmb(belief), to_fogmb(belief)
print("second order rho:", sogmb_cardinality(so))
print("first order rho: ", sogmb_cardinality(fo))

x = np.linspace(-4, 8, 400)[:, None]
print("largest PHD difference:", np.abs(sogmb_phd(so, x) - sogmb_phd(fo, x)).max())

# fuse with a second node that saw the same two targets slightly shifted
other = GmbDensity((GmbHypothesis((1, 2), 0, 0.5, (gauss(0.3), gauss(4.2))),
                    GmbHypothesis((), 0, 0.5, ())))
fused_so = to_sogmb(fuse_pair(so, to_sogmb(other)))
fused_fo = to_sogmb(fuse_pair(fo, to_fogmb(other)))

fig, axes = plt.subplots(1, 2, figsize=(10, 4))
n = np.arange(3)
for ax, title, a, b in [(axes[0], "local node", so, fo), (axes[1], "fused", fused_so, fused_fo)]:
    ra, rb = sogmb_cardinality(a), sogmb_cardinality(b)
    ax.bar(n - 0.2, np.pad(ra, (0, 3 - len(ra))), 0.4, label="second order")
    ax.bar(n + 0.2, np.pad(rb, (0, 3 - len(rb))), 0.4, label="first order")
    ax.set_xticks(n)
    ax.set_xlabel("number of targets")
    ax.set_title(title)
axes[0].set_ylabel("probability")
axes[0].legend()
fig.tight_layout()
fig.savefig(out / "first_vs_second_order.png", dpi=120)
print("fused second order rho:", np.round(sogmb_cardinality(fused_so), 4))
print("fused first order rho: ", np.round(sogmb_cardinality(fused_fo), 4))
print(f"wrote {out / 'first_vs_second_order.png'}")
