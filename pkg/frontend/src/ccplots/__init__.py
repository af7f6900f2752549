"""ccplots: render threshold-sweep CSV results as log-scale figures."""

from .render import PlotSpec, estimate_crossing, load_records, render_threshold_plot

__all__ = ["PlotSpec", "render_threshold_plot", "load_records", "estimate_crossing"]

__version__ = "0.1.0"
