"""Dense linear-algebra helpers shared by the posterior updates.

All covariance-like matrices in the package go through :func:`chol_pd`,
which enforces the symmetrize-then-factor policy: symmetrize, attempt a
Cholesky factorization, and on failure add one shot of trace-scaled jitter
before giving up. The update algebra preserves definiteness in exact
arithmetic, so jitter only ever has to absorb roundoff.
"""

from __future__ import annotations

import numpy as np

SYM_TOL = 1e-10


class NumericalError(RuntimeError):
    """A matrix that must be positive definite failed to factor, even
    after the single jitter retry."""


def symmetrize(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2.0


def max_asymmetry(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.T))) if a.size else 0.0


def chol_pd(
    a: np.ndarray, what: str = "matrix", assume_symmetric: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Lower Cholesky factor of a symmetric positive-definite matrix.

    Returns ``(L, a_used)`` where ``a_used`` is the symmetrized (and, after
    a failed first attempt, jittered) matrix that actually factored.
    Callers that already hold an exactly symmetric matrix may skip the
    symmetrization pass.
    """
    a = np.asarray(a, dtype=float)
    if not assume_symmetric:
        a = symmetrize(a)
    try:
        return np.linalg.cholesky(a), a
    except np.linalg.LinAlgError:
        d = a.shape[0]
        jitter = 1e-12 * (float(np.trace(a)) / max(d, 1))
        if jitter <= 0.0:
            jitter = 1e-12
        patched = a + jitter * np.eye(d)
        try:
            return np.linalg.cholesky(patched), patched
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"{what} is not positive definite") from exc


def solve_pd(a: np.ndarray, rhs: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Solve ``a x = rhs`` for symmetric PD ``a`` under the jitter policy."""
    _, used = chol_pd(a, what=what)
    return np.linalg.solve(used, rhs)


def inv_pd(a: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Symmetric PD inverse, symmetrized on the way out."""
    _, used = chol_pd(a, what=what)
    return symmetrize(np.linalg.solve(used, np.eye(used.shape[0])))


def min_eigenvalue(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(symmetrize(a))[0])


def max_eigenvalue(a: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(symmetrize(a))[-1])
