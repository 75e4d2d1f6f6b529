"""Co-simulation of spin-qubit control/readout electronics and spin dynamics."""

__version__ = "0.1.0"
