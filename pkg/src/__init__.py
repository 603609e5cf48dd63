"""fracsys - Fractional Laplacians, indefinite block spectra and saddle solutions of fractional Hamiltonian systems."""

__version__ = "0.1.0"
