"""Finite-difference plumbing shared by the simulator and the BVP solvers.

Cell-centered grid x_i = (i + 1/2) h on [0, L].  The invasion-box boundary
conditions (all odd derivatives zero at x = 0, all even derivatives zero at
x = L) are imposed by stencil folding: an even half-sample mirror at the
left edge and an odd half-sample mirror at the right edge.  Central
stencils of order 4 are generated from Vandermonde systems, so arbitrary
derivative orders come out consistent.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

BC_INVASION = "invasion"
BC_PERIODIC = "periodic"


@lru_cache(maxsize=None)
def central_weights(deriv: int, halfwidth: int) -> tuple:
    """Weights of the central finite-difference stencil for d^deriv/dx^deriv
    on offsets -halfwidth..halfwidth (unit spacing)."""
    offs = np.arange(-halfwidth, halfwidth + 1, dtype=float)
    n = len(offs)
    if deriv >= n:
        raise ValueError("stencil too narrow for this derivative")
    V = np.vander(offs, n, increasing=True).T  # V[t, s] = offs[s]^t
    rhs = np.zeros(n)
    rhs[deriv] = math.factorial(deriv)
    return tuple(np.linalg.solve(V, rhs))


def _halfwidth(deriv: int, order: int = 4) -> int:
    # minimal symmetric stencil achieving the target order: central stencils
    # gain one order from symmetry, so 2p+1 points give order 2p+2-deriv for
    # even deriv and 2p+1-deriv+1 for odd
    if order <= 2:
        return max((deriv + 1) // 2, 1)
    return (deriv + 3) // 2


def diff_matrix(n: int, h: float, deriv: int, bc: str = BC_INVASION,
                order: int = 4) -> sp.csr_matrix:
    """Sparse differentiation matrix on the cell-centered grid with the
    requested boundary folding."""
    if deriv == 0:
        return sp.identity(n, format="csr")
    p = _halfwidth(deriv, order)
    if n < 2 * p + 1:
        raise ValueError(f"grid too small: n={n} < {2 * p + 1}")
    w = np.asarray(central_weights(deriv, p)) / h ** deriv
    mat = sp.lil_matrix((n, n))
    for i in range(n):
        for s, ws in zip(range(-p, p + 1), w):
            if ws == 0.0:
                continue
            q = i + s
            sign = 1.0
            if bc == BC_PERIODIC:
                q %= n
            else:
                # half-sample mirrors; double reflection cannot occur for
                # n >= 2p+1
                if q < 0:
                    q = -1 - q          # even at x = 0
                elif q >= n:
                    q = 2 * n - 1 - q   # odd at x = L
                    sign = -1.0
            mat[i, q] += sign * ws
    return mat.tocsr()


class Discretization:
    """Grid, differentiation matrices, and assembled operators for one
    model on [0, L]."""

    def __init__(self, model, L: float, n: int, bc: str = BC_INVASION,
                 order: int = 4):
        self.model = model
        self.L = float(L)
        self.n = int(n)
        self.bc = bc
        self.order = order
        self.h = self.L / self.n
        self.x = (np.arange(self.n) + 0.5) * self.h
        self._D: dict[int, sp.csr_matrix] = {}

    def D(self, deriv: int) -> sp.csr_matrix:
        if deriv not in self._D:
            self._D[deriv] = diff_matrix(self.n, self.h, deriv, self.bc, self.order)
        return self._D[deriv]

    def linear_operator(self, c: float = 0.0) -> sp.csr_matrix:
        """kron-assembled P(d/dx) + c d/dx + J over all components."""
        m = self.model
        N = m.dim
        L = sp.kron(np.asarray(m.jac0), sp.identity(self.n), format="csr")
        for j, P in enumerate(m.pcoeffs):
            if j == 0:
                P0 = np.asarray(P)
                if np.any(P0):
                    L = L + sp.kron(P0, sp.identity(self.n), format="csr")
                continue
            P = np.asarray(P)
            if not np.any(P):
                continue
            L = L + sp.kron(P, self.D(j), format="csr")
        if c:
            L = L + c * sp.kron(np.eye(N), self.D(1), format="csr")
        return L.tocsr()

    def nonlin_op(self) -> sp.csr_matrix | None:
        """Derivative wrapping applied to the pointwise nonlinearity, or
        None when the nonlinearity enters directly."""
        p = self.model.nonlin_deriv
        if not p:
            return None
        return sp.kron(np.eye(self.model.dim), self.D(p), format="csr")

    def nonlinear(self, U: np.ndarray) -> np.ndarray:
        """Explicit part f(u) - J u (possibly derivative-wrapped), flattened."""
        g = self.model.nonlin(U.reshape(self.model.dim, self.n))
        vec = g.reshape(-1)
        op = self.nonlin_op()
        return vec if op is None else op @ vec

    def nonlinear_jacobian(self, U: np.ndarray) -> sp.csr_matrix:
        """Sparse Jacobian of the explicit part."""
        m = self.model
        fp = m.nonlin_prime(U.reshape(m.dim, self.n))
        blocks = [[sp.diags(fp[a, b]) for b in range(m.dim)] for a in range(m.dim)]
        Jnl = sp.bmat(blocks, format="csr")
        op = self.nonlin_op()
        return Jnl if op is None else (op @ Jnl).tocsr()
