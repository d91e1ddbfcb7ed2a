from .render import PLOT_KINDS, PlotSpec, RenderError, load_spec, render

__version__ = "0.1.0"
