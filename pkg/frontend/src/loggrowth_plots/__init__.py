"""Figure rendering for the loggrowth experiment CSV artifacts."""

from .figures import FIGURE_IDS, FigureSpec, SchemaError, render, slope_label

__all__ = ["FIGURE_IDS", "FigureSpec", "SchemaError", "render", "slope_label"]

__version__ = "0.1.0"
