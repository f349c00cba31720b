"""Array-response analog beamsteering for mmWave hybrid beamforming.

Simulation library for a single-user ULA link with a sparse geometric
channel: SVD digital reference, exact and codebook-quantized analog
beamsteering, Monte Carlo achievable rates and the closed-form
finite-codebook rate-loss model.
"""

__version__ = "0.1.0"


class ConfigurationError(ValueError):
    """Invalid or inconsistent configuration / parameter set."""


class DimensionError(ValueError):
    """Non-conformable matrix or vector dimensions."""


class NumericError(ArithmeticError):
    """A computed quantity came out non-finite."""

    def __init__(self, message, **context):
        super().__init__(message)
        self.context = context
