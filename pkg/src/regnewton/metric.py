"""Fixed-metric geometry: primal/dual norms and shifted linear solves.

All points and search directions live in the primal space and are measured
by ``||v|| = <Bv, v>^(1/2)``; gradients and subgradients live in the dual
space and are measured by ``||s||_* = <s, B^-1 s>^(1/2)``.  Vectors are
plain float64 arrays; which norm applies is determined by how a quantity is
used, and every operation checks dimensions against the metric.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite, NumericalBreakdown


class Metric:
    """Geometry induced by a symmetric positive-definite operator B.

    The operator is either the identity (fast path, nothing is stored) or a
    dense symmetric positive-definite matrix whose Cholesky factorization is
    computed once at construction.  Instances are immutable and safe to share
    across concurrent solver runs.
    """

    def __init__(self, b=None, *, n=None):
        if b is None:
            if n is None or n <= 0:
                raise ValueError("identity metric requires a positive dimension n")
            self.n = int(n)
            self.b = None
            self._chol = None
            return
        b = np.asarray(b, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError(f"metric operator must be square, got shape {b.shape}")
        if not np.array_equal(b, b.T):
            raise NotPositiveDefinite("metric operator must be stored exactly symmetric")
        try:
            chol = scipy.linalg.cho_factor(b, lower=True, check_finite=False)
        except scipy.linalg.LinAlgError as exc:
            raise NotPositiveDefinite(f"metric operator is not positive definite: {exc}") from exc
        self.n = b.shape[0]
        self.b = b
        self._chol = chol

    @classmethod
    def identity(cls, n):
        return cls(n=n)

    @property
    def is_identity(self):
        return self.b is None

    def _check_dim(self, v, what="vector"):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise DimensionMismatch(f"{what} has shape {v.shape}, metric dimension is {self.n}")
        return v

    def apply(self, v):
        """B v, mapping a primal vector to the dual space."""
        v = self._check_dim(v)
        if self.b is None:
            return v.copy()
        return self.b @ v

    def inv_apply(self, s):
        """B^-1 s, mapping a dual vector back to the primal space."""
        s = self._check_dim(s, "dual vector")
        if self.b is None:
            return s.copy()
        return scipy.linalg.cho_solve(self._chol, s, check_finite=False)

    def primal_norm(self, v):
        """<Bv, v>^(1/2)."""
        v = self._check_dim(v)
        if self.b is None:
            return float(np.linalg.norm(v))
        return float(np.sqrt(max(float(v @ (self.b @ v)), 0.0)))

    def dual_norm(self, s):
        """<s, B^-1 s>^(1/2)."""
        s = self._check_dim(s, "dual vector")
        if self.b is None:
            return float(np.linalg.norm(s))
        return float(np.sqrt(max(float(s @ self.inv_apply(s)), 0.0)))

    def shifted_solver(self, h_mat, lam):
        """Factorize ``H + lam * B`` once; returns a solve callable.

        A factorization failure with ``lam > 0`` means H was not PSD and
        raises :class:`NumericalBreakdown`.
        """
        if lam <= 0:
            raise ValueError(f"shift must be positive, got {lam}")
        h_mat = np.asarray(h_mat, dtype=float)
        if h_mat.shape != (self.n, self.n):
            raise DimensionMismatch(
                f"operator has shape {h_mat.shape}, metric dimension is {self.n}"
            )
        if self.b is None:
            shifted = h_mat + lam * np.eye(self.n)
        else:
            shifted = h_mat + lam * self.b
        try:
            chol = scipy.linalg.cho_factor(shifted, lower=True, check_finite=False)
        except scipy.linalg.LinAlgError as exc:
            raise NumericalBreakdown(
                f"factorization of (H + {lam} * B) failed; Hessian is likely indefinite"
            ) from exc

        def solve(rhs):
            rhs = self._check_dim(rhs, "right-hand side")
            h = scipy.linalg.cho_solve(chol, rhs, check_finite=False)
            residual = rhs - shifted @ h
            return h + scipy.linalg.cho_solve(chol, residual, check_finite=False)

        return solve

    def solve_shifted(self, h_mat, lam, rhs):
        """Solve ``(H + lam * B) h = rhs`` for a symmetric PSD operator H.

        Factorizes the shifted operator per call and applies one step of
        iterative refinement, so the residual stays far below the contract
        bound of ``1e-10 * (1 + ||rhs||_*)``.
        """
        return self.shifted_solver(h_mat, lam)(rhs)
