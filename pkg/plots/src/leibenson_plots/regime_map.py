"""Heat-tile figure of the theorem-predicate flags over a (p, q) grid."""

from __future__ import annotations

import argparse
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FLAG_COLUMNS = [
    "barenblatt_ok",
    "superposition_ok",
    "markov_ok",
    "strong_solution_ok",
    "uniqueness_i_ok",
    "uniqueness_ii_ok",
]


def plot_regime_map(csv_path: str, out_path: str) -> str:
    import io

    with open(csv_path) as fh:
        # the CLI prepends a config-echo comment line; strip all comments
        body = "".join(line for line in fh if not line.lstrip().startswith("#"))
    data = np.genfromtxt(io.StringIO(body), delimiter=",", names=True)
    if data.dtype.names is None or any(c not in data.dtype.names
                                       for c in ("p", "q", *FLAG_COLUMNS)):
        raise ValueError(f"regime CSV missing required columns; found {data.dtype.names}")
    ps = np.unique(data["p"])
    qs = np.unique(data["q"])
    if len(ps) * len(qs) != data.shape[0]:
        raise ValueError("regime CSV is not a full rectangular grid")

    fig, axes = plt.subplots(2, 3, figsize=(13, 7.5))
    for ax, col in zip(axes.ravel(), FLAG_COLUMNS):
        grid = np.full((len(qs), len(ps)), np.nan)
        pi = np.searchsorted(ps, data["p"])
        qi = np.searchsorted(qs, data["q"])
        grid[qi, pi] = data[col]
        ax.imshow(grid, origin="lower", aspect="auto", cmap="RdYlGn",
                  vmin=0.0, vmax=1.0,
                  extent=(ps[0], ps[-1], qs[0], qs[-1]))
        ax.set_title(col)
        ax.set_xlabel("p")
        ax.set_ylabel("q")
    d = int(data["d"][0])
    fig.suptitle(f"theorem predicates, d = {d}")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return out_path


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="leibenson-plot-regimes",
        description="render one heat tile per predicate column of a regimes CSV")
    parser.add_argument("--csv", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        out = plot_regime_map(args.csv, args.out)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
