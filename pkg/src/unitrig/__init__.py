"""Unit distances, polynomial partitioning and planar rigidity at desk scale."""

from __future__ import annotations

__version__ = "0.1.0"

from .geometry import EXACT, FLOAT, Point
from .unit_graph import PointSet, build_unit_graph, count_unit_distances, incidences

__all__ = ["EXACT", "FLOAT", "Point", "PointSet", "build_unit_graph", "count_unit_distances",
           "incidences", "__version__"]
