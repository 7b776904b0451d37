"""Empirical radial histograms against the analytic density, one panel per snapshot."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .runio import load_run  # noqa: E402


@dataclass(frozen=True)
class PlotJob:
    run_dir: str
    out_path: str
    snapshots: tuple[int, ...] = ()   # empty = all
    bins: int = 80


def plot_density_evolution(job: PlotJob) -> str:
    """Render the panel figure; returns the output path.

    Histogram uses density normalization in the radial coordinate, so the bin
    areas sum to one; the analytic curve comes from the constants echoed in
    the run metadata.
    """
    run = load_run(job.run_dir)
    indices = job.snapshots or tuple(range(len(run.snapshots)))
    if len(indices) == 0 or any(i < 0 or i >= len(run.snapshots) for i in indices):
        raise ValueError(f"empty or out-of-range snapshot selection {job.snapshots} "
                         f"(run has {len(run.snapshots)} snapshots)")

    fig, axes = plt.subplots(1, len(indices), figsize=(5.2 * len(indices), 4.0),
                             squeeze=False)
    for ax, idx in zip(axes[0], indices):
        snap = run.snapshots[idx]
        radius = run.support_radius(snap.t)
        edges = np.linspace(0.0, radius * 1.08, job.bins + 1)
        heights, edges = np.histogram(snap.radii, bins=edges, density=True)
        centers = 0.5 * (edges[:-1] + edges[1:])
        ax.bar(centers, heights, width=np.diff(edges), alpha=0.45,
               color="steelblue", label=f"empirical, N={snap.radii.size}")
        rr = np.linspace(0.0, radius * 1.08, 600)
        ax.plot(rr, run.radial_density(snap.t, rr), "k-", lw=1.6, label="analytic")
        ax.axvline(radius, color="crimson", ls="--", lw=1.0, label="support radius")
        ax.set_title(f"t = {snap.t:g}")
        ax.set_xlabel("radius")
        ax.set_ylabel("radial density")
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(job.out_path, dpi=130)
    plt.close(fig)
    return job.out_path


def histogram_mass(radii: np.ndarray, bins: int, rmax: float) -> float:
    """Sum of bin areas of the density-normalized radial histogram
    (equals the sample fraction inside [0, rmax])."""
    heights, edges = np.histogram(radii, bins=np.linspace(0.0, rmax, bins + 1),
                                  density=True)
    return float(np.sum(heights * np.diff(edges)))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="leibenson-plot-density",
        description="plot empirical radial histograms vs the analytic density")
    parser.add_argument("--run", required=True, help="simulation run directory")
    parser.add_argument("--out", required=True, help="output image path (png/svg)")
    parser.add_argument("--snapshots", default="",
                        help="comma-separated snapshot indices (default: all)")
    parser.add_argument("--bins", type=int, default=80)
    args = parser.parse_args(argv)
    sel = tuple(int(tok) for tok in args.snapshots.split(",") if tok.strip())
    try:
        out = plot_density_evolution(PlotJob(run_dir=args.run, out_path=args.out,
                                             snapshots=sel, bins=args.bins))
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
