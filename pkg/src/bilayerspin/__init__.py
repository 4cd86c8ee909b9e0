"""bilayerspin: mediator-induced spin-spin couplings in 1D bilayer lattices."""

__version__ = "0.1.0"
