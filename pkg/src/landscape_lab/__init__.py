"""Critical points of the torsion (landscape) function on planar domains."""
__version__ = "0.1.0"
