"""pdsim: pairwise-interaction point-process models of persistence diagrams."""

__version__ = "0.1.0"
