"""Generic second-order model with explicit quadratic/cubic force tensors.

Covers desk-scale mechanical systems of the form

    M U'' + C U' + Kt U + Gt(U, U) + H(U, U, U) - p Rt - p Ru U = 0

with parameter-independent nonlinear forces, the shape handled by the
halved second-order reduction engine.  Used directly in tests (the
dual-engine cross-check) and as the small-system reference for the
quadrature-backed finite element model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..polytensor import SparseBilinearForm, SparseTrilinearForm


@dataclass
class PolynomialSecondOrderModel:
    n: int
    M: np.ndarray
    C: np.ndarray
    Kt: np.ndarray
    Rt: np.ndarray
    Ru: np.ndarray
    Gt: SparseBilinearForm | None = None
    H: SparseTrilinearForm | None = None
    p0: float = 0.0
    U0: np.ndarray | None = None

    def __post_init__(self):
        if self.U0 is None:
            self.U0 = np.zeros(self.n)

    @property
    def ndof(self):
        return self.n

    def mass(self):
        return self.M

    def damping(self):
        return self.C

    def tangent_stiffness(self):
        return self.Kt

    def rt(self):
        return self.Rt

    def ru(self):
        return self.Ru

    def nonlinear_force(self, U):
        """LHS nonlinear force Gt(U,U) + H(U,U,U)."""
        f = np.zeros(self.n, dtype=np.result_type(float, U.dtype))
        if self.Gt is not None:
            f = f + self.Gt.apply(U, U)
        if self.H is not None:
            f = f + self.H.apply(U, U, U)
        return f

    def nl_rhs_series(self, table, U_coeffs, p):
        """Order-p monomial coefficients of the nonlinear RHS force.

        With the equations written M U'' + C U' + Kt U = p Rt + p Ru U + F,
        F = -Gt(U,U) - H(U,U,U); returns {monomial id: coefficient vector}
        assembled from all lower-order mapping coefficients in U_coeffs.
        """
        out = {mid: np.zeros(self.n, dtype=complex) for mid in table.ids_of_order(p)}
        exps = table.exponents
        if self.Gt is not None:
            for p1 in range(1, p):
                for k1 in table.ids_of_order(p1):
                    for k2 in table.ids_of_order(p - p1):
                        mid = table.index_of(exps[k1] + exps[k2])
                        out[mid] -= self.Gt.apply(U_coeffs[k1], U_coeffs[k2])
        if self.H is not None and p >= 3:
            for p1 in range(1, p - 1):
                for p2 in range(1, p - p1):
                    p3 = p - p1 - p2
                    for k1 in table.ids_of_order(p1):
                        for k2 in table.ids_of_order(p2):
                            for k3 in table.ids_of_order(p3):
                                mid = table.index_of(exps[k1] + exps[k2] + exps[k3])
                                out[mid] -= self.H.apply(U_coeffs[k1], U_coeffs[k2],
                                                         U_coeffs[k3])
        return out

    def fom_rhs(self, p):
        Minv = np.linalg.inv(self.M)

        def rhs(t, x):
            U, V = x[:self.n], x[self.n:]
            force = (p * self.Rt + p * self.Ru @ U - self.Kt @ U - self.C @ V
                     - self.nonlinear_force(U))
            return np.concatenate([V, Minv @ force])

        return rhs
