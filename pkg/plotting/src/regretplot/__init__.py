"""Regret-curve figures from benchmark summary CSVs.

Consumes only the summary schema (agent, task, mean_cumulative_regret,
stderr); it knows nothing about how the numbers were produced.
"""

from .plot import PlotSpec, SchemaError, load_summary, plot_summary

__all__ = ["PlotSpec", "SchemaError", "load_summary", "plot_summary"]
