"""Figure rendering for the CSV outputs of the ``mimo`` simulation CLI.

A pure CSV-to-image transformation: nothing is recomputed, every plotted
number comes straight out of the file.
"""

from .render import PlotSpec, SchemaError, render_curves, render_llr_hist

__all__ = ["PlotSpec", "SchemaError", "render_curves", "render_llr_hist"]
