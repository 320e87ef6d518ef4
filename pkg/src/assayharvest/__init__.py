"""Harvest, normalize, consolidate and serve rapid drug-residue assay data."""

__version__ = "0.1.0"
