"""Joint and separable numerical ranges of Hermitian observables."""

__version__ = "0.1.0"
