"""Design and verification of fast two-qubit entangling gates built from
state-dependent momentum kicks on the radial modes of a two-ion crystal,
with the RF micromotion of the trap treated exactly."""

__version__ = "0.1.0"
