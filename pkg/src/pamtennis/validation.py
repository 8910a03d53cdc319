"""Input validation helpers shared by all modules.

Every public entry point funnels array-like inputs through these so that
shape and finiteness errors surface with the offending argument's name
instead of deep inside numpy.
"""

import numpy as np


class PamTennisError(Exception):
    """Base class for all package errors."""


class NonFiniteError(PamTennisError):
    """An input or intermediate state contains NaN or Inf."""


class ShapeMismatchError(PamTennisError):
    """An array argument has the wrong dimensionality."""


class ConfigError(PamTennisError):
    """A configuration value is out of range or unknown."""


def as_vector(x, dim, name):
    """Coerce to a float64 vector of length ``dim``; reject bad shapes."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape != (dim,):
        raise ShapeMismatchError(f"{name}: expected shape ({dim},), got {arr.shape}")
    return arr


def require_finite(arr, name):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite values")
    return arr


def finite_vector(x, dim, name):
    return require_finite(as_vector(x, dim, name), name)


def require_unit(v, name, tol=1e-6):
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > tol:
        raise PamTennisError(f"{name} must be a unit vector, got norm {norm!r}")
    return v
