"""Ground truth and one scan stream of the two reference scenarios.

Run:  python demos/scenarios.py [output_dir]

Scenario 1 spreads five targets over the region: two cross early, three
converge on a common point later on. Scenario 2 packs four targets into a
narrow eastbound band, which is where cardinality errors of the fused
estimate show up first.
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gmbfusion.scenario import generate_scans, generate_truth, scenario1, scenario2

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output")
out.mkdir(exist_ok=True)

fig, axes = plt.subplots(1, 2, figsize=(12, 5.5))
for ax, config in zip(axes, (scenario1(), scenario2())):
    truth = generate_truth(config)
    scans = generate_scans(config, truth, sensor=0, seed=0)

    # clutter dominates every scan: about 15 false points against at most 5 targets
    pts = np.vstack([s.points for s in scans])
    ax.scatter(pts[:, 0], pts[:, 1], s=1, c="0.8", label="scans (node 1)")

    for track in config.tracks:
        xy = np.array([s[:2] for truth_k in truth for s, tid in truth_k if tid == track.id])
        ax.plot(xy[:, 0], xy[:, 1], lw=2, label=f"track {track.id}")
        ax.plot(*xy[0], "o", c="k", ms=4)
        ax.plot(*xy[-1], "s", c="k", ms=4)

    for m in config.birth_means:
        ax.plot(m[0], m[1], "x", c="r", ms=9)
    ax.set_title(f"{config.name}: {len(config.tracks)} targets, {config.duration} steps")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.set_xlim(*config.region[0])
    ax.set_ylim(*config.region[1])
    ax.legend(fontsize=7, loc="upper left")

    counts = [len(t) for t in truth]
    print(f"{config.name}: true cardinality ranges {min(counts)}..{max(counts)}, "
          f"mean scan size {np.mean([len(s) for s in scans]):.1f}")

fig.tight_layout()
fig.savefig(out / "scenarios.png", dpi=120)
print(f"wrote {out / 'scenarios.png'}")
