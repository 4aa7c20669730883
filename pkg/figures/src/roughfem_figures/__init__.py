"""Figure renderers for roughfem run directories: rate plots, ratio
histograms, indicator bars, and field heatmaps, all driven purely by the
CSV artifacts of the experiment CLI."""

__version__ = "0.1.0"
