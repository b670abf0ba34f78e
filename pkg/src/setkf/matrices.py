"""Dense symmetric-matrix helpers shared across the package."""

import numpy as np

from .errors import NotPositiveDefinite


def sym(X):
    """Explicit symmetrization (X + X') / 2, suppresses asymmetric drift."""
    return 0.5 * (X + X.T)


def spectral_norm(X):
    return float(np.linalg.norm(np.atleast_2d(X), 2))


def smallest_eigenvalue(X):
    return float(np.linalg.eigvalsh(sym(np.atleast_2d(np.asarray(X, dtype=float))))[0])


def is_spd(X, floor=0.0):
    """Positive-definiteness test via triangular factorization of X - floor*I.

    Succeeds iff X is square, symmetric to a scale-relative tolerance, and
    its smallest eigenvalue exceeds ``floor``.  Model covariances pass an
    explicit floor; trigger weights may be arbitrarily small but positive.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        return False
    scale = max(1.0, float(np.abs(X).max()))
    if float(np.abs(X - X.T).max()) > 1e-8 * scale:
        return False
    try:
        np.linalg.cholesky(sym(X) - floor * np.eye(X.shape[0]))
    except np.linalg.LinAlgError:
        return False
    return True


def require_spd(X, name, floor=0.0):
    """Return the symmetrized matrix or raise NotPositiveDefinite."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise NotPositiveDefinite(name, "not a square matrix")
    if not is_spd(X, floor=floor):
        raise NotPositiveDefinite(name, f"smallest eigenvalue <= {floor:g} or asymmetric")
    return sym(X)
