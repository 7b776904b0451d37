"""Read-only report figures for simulation runs.

These scripts consume the run directory written by the `leibenson` CLI
(snapshot CSVs plus `metadata.json`, schema ``leibenson-run/1``) and the
regime-map CSV. They never recompute model constants: the analytic curves are
evaluated from the constants echoed in the run metadata.
"""

from .density import PlotJob, plot_density_evolution
from .regime_map import plot_regime_map
from .runio import RunData, SchemaMismatch, load_run

__version__ = "0.1.0"

__all__ = [
    "PlotJob",
    "RunData",
    "SchemaMismatch",
    "load_run",
    "plot_density_evolution",
    "plot_regime_map",
    "__version__",
]
