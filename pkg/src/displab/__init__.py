"""displab: a numerical laboratory for dispersive estimates in modulation spaces."""

from displab.fields import Field, Grid, SpaceTimeField, lp_norm, make_grid, spacetime_norm

__version__ = "0.1.0"

__all__ = ["Field", "Grid", "SpaceTimeField", "lp_norm", "make_grid", "spacetime_norm"]
