"""Dense Schrodinger operator, spectral inverse square root, Riesz
transforms with adjoints, commutators, and kernel extraction.

The gradient is discretized on direction faces: forward differences plus
the two Dirichlet wall faces, giving rectangular stencils D_j with

    sum_j D_j^T D_j = -Delta_h        (exactly, the (2d+1)-point stencil)

so the energy identity

    sum_j ||R_j f||^2 + ||V^{1/2} L^{-1/2} f||^2 = ||f||^2

is an algebraic fact, not an approximation.  Everything downstream of the
identity (commutators, kernels, norm experiments) uses the cell-collocated
components: the face average of D_j L^{-1/2}, which reduces to the centered
difference of L^{-1/2} with zero ghost values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InternalInconsistencyError, PreconditionError
from .grid import Domain, GridFunction

MAX_DENSE_CELLS = 4096


@dataclass(frozen=True)
class DiscreteOperator:
    """Dense square matrix over cells."""

    matrix: np.ndarray
    domain: Domain
    symmetric: bool = True

    def __post_init__(self) -> None:
        A = np.asarray(self.matrix, dtype=float)
        N = self.domain.num_cells
        if A.shape != (N, N):
            raise PreconditionError(f"operator shape {A.shape} != ({N}, {N})")
        if not np.all(np.isfinite(A)):
            raise PreconditionError("operator has non-finite entries")
        if self.symmetric:
            scale = float(np.max(np.abs(A)))
            if float(np.max(np.abs(A - A.T))) > 1e-12 * scale:
                raise InternalInconsistencyError("symmetry flag violated")
        object.__setattr__(self, "matrix", A)


def _face_difference_1d(n: int, h: float) -> sp.csr_matrix:
    """(n+1) x n forward differences with zero ghosts at both walls."""
    rows, cols, data = [], [], []
    for k in range(n + 1):
        if k < n:
            rows.append(k)
            cols.append(k)
            data.append(1.0 / h)
        if k > 0:
            rows.append(k)
            cols.append(k - 1)
            data.append(-1.0 / h)
    return sp.csr_matrix((data, (rows, cols)), shape=(n + 1, n))


def _axis_operator(core: sp.spmatrix, axis: int, domain: Domain) -> sp.csr_matrix:
    # C-order flattening: axis 0 is slowest
    pre = sp.identity(domain.n**axis, format="csr")
    post = sp.identity(domain.n ** (domain.d - 1 - axis), format="csr")
    return sp.kron(sp.kron(pre, core), post).tocsr()


def face_stencils(domain: Domain) -> list:
    """The rectangular gradient stencils D_j (faces x cells)."""
    core = _face_difference_1d(domain.n, domain.h)
    return [_axis_operator(core, j, domain) for j in range(domain.d)]


def _collocated_gradient(domain: Domain) -> list:
    """Centered differences with zero ghosts: the face average of D_j."""
    n, h = domain.n, domain.h
    core = sp.diags([np.full(n - 1, 0.5 / h), np.full(n - 1, -0.5 / h)], [1, -1]).tocsr()
    return [_axis_operator(core, j, domain) for j in range(domain.d)]


def dirichlet_laplacian(domain: Domain) -> sp.csr_matrix:
    """-Delta_h, the (2d+1)-point stencil with Dirichlet closure, as the
    exact Gram matrix of the face stencils."""
    N = domain.num_cells
    out = sp.csr_matrix((N, N))
    for D in face_stencils(domain):
        out = out + D.T @ D
    return out.tocsr()


def assemble_schrodinger(domain: Domain, V: GridFunction) -> DiscreteOperator:
    """L = -Delta_h + diag(V), symmetric positive definite."""
    if V.domain != domain:
        raise PreconditionError("potential sampled on a different domain")
    if V.is_vector:
        raise PreconditionError("potential must be a scalar field")
    if np.any(V.values < 0):
        raise PreconditionError("potential must be >= 0")
    if domain.num_cells > MAX_DENSE_CELLS:
        raise PreconditionError(
            f"{domain.num_cells} cells exceeds the dense cap {MAX_DENSE_CELLS}"
        )
    A = dirichlet_laplacian(domain).toarray()
    A[np.diag_indices_from(A)] += V.values
    A = 0.5 * (A + A.T)
    return DiscreteOperator(matrix=A, domain=domain, symmetric=True)


@dataclass(frozen=True)
class SpectralFactorization:
    """Eigendecomposition L = U diag(lam) U^T with lam ascending > 0."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    domain: Domain

    def apply_power(self, f: np.ndarray, power: float) -> np.ndarray:
        return self.eigenvectors @ (
            self.eigenvalues**power * (self.eigenvectors.T @ f)
        )

    def matrix_power(self, power: float) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues**power) @ self.eigenvectors.T


def factorize(op: DiscreteOperator) -> SpectralFactorization:
    lam, U = np.linalg.eigh(op.matrix)
    if lam[0] <= 0:
        raise PreconditionError(
            f"operator is not positive definite (min eigenvalue {lam[0]})"
        )
    scale = float(np.max(np.abs(op.matrix)))
    err = float(np.max(np.abs((U * lam) @ U.T - op.matrix)))
    if err > 1e-8 * scale:
        raise InternalInconsistencyError(f"eigendecomposition residual {err:.3e}")
    return SpectralFactorization(eigenvalues=lam, eigenvectors=U, domain=op.domain)


@dataclass(frozen=True)
class RieszOperator:
    """Components R_j = grad_j L^{-1/2}; adjoints are exact transposes.

    ``components`` are the square cell-collocated matrices used by
    commutators and kernel extraction; ``stencils`` are the rectangular
    face differences that make the energy identity exact.
    """

    components: list
    stencils: list
    factorization: SpectralFactorization
    V: GridFunction
    domain: Domain

    def adjoint_component(self, j: int) -> np.ndarray:
        return self.components[j].T

    def apply(self, f: GridFunction) -> GridFunction:
        if f.is_vector:
            raise PreconditionError("apply expects a scalar field")
        out = np.stack([C @ f.values for C in self.components])
        return GridFunction(self.domain, out)

    def apply_adjoint(self, g: GridFunction) -> GridFunction:
        if not g.is_vector:
            raise PreconditionError("apply_adjoint expects a vector field")
        out = np.zeros(self.domain.num_cells)
        for j, C in enumerate(self.components):
            out += C.T @ g.values[j]
        return GridFunction(self.domain, out)


def riesz_transforms(fact: SpectralFactorization, V: GridFunction) -> RieszOperator:
    if np.any(fact.eigenvalues <= 0):
        raise PreconditionError("factorization has nonpositive eigenvalues")
    dom = fact.domain
    if V.domain != dom:
        raise PreconditionError("potential domain mismatch")
    Lmh = fact.matrix_power(-0.5)
    comps = [np.asarray(G @ Lmh) for G in _collocated_gradient(dom)]
    return RieszOperator(
        components=comps,
        stencils=face_stencils(dom),
        factorization=fact,
        V=V,
        domain=dom,
    )


def energy_residual(R: RieszOperator, f: np.ndarray) -> float:
    """Relative defect of sum_j ||D_j g||^2 + ||V^{1/2} g||^2 = ||f||^2
    for g = L^{-1/2} f, evaluated with the face stencils."""
    f = np.asarray(f, dtype=float)
    rhs = float(f @ f)
    if rhs == 0.0:
        raise PreconditionError("energy identity needs a nonzero f")
    g = R.factorization.apply_power(f, -0.5)
    lhs = float(np.sum(R.V.values * g * g))
    for D in R.stencils:
        Dg = D @ g
        lhs += float(Dg @ Dg)
    return abs(lhs - rhs) / rhs


@dataclass(frozen=True)
class CommutatorOperator:
    """T_{b,j} = R_j diag(b) - diag(b) R_j, entrywise (b(y) - b(x)) R_j(x,y)."""

    symbol: GridFunction
    components: list
    adjoint: bool
    domain: Domain

    def apply(self, f: GridFunction) -> GridFunction:
        if f.is_vector:
            raise PreconditionError("apply expects a scalar field")
        out = np.stack([T @ f.values for T in self.components])
        return GridFunction(self.domain, out)


def commutator(R: RieszOperator, b: GridFunction, adjoint: bool = False) -> CommutatorOperator:
    if b.is_vector:
        raise PreconditionError("symbol must be a scalar field")
    if b.domain != R.domain:
        raise PreconditionError("symbol domain mismatch")
    bv = b.values
    comps = []
    for j in range(R.domain.d):
        M = R.adjoint_component(j) if adjoint else R.components[j]
        comps.append(M * (bv[None, :] - bv[:, None]))
    return CommutatorOperator(symbol=b, components=comps, adjoint=adjoint, domain=R.domain)


def kernel_matrix(R: RieszOperator, j: int, adjoint: bool = False) -> np.ndarray:
    """K_j(x_i, y_m) = (R_j e_m)(x_i) / h^d, so that R_j f reconstructs as
    sum_m K_j(., y_m) f(y_m) h^d exactly.  The adjoint kernel is the
    transpose: K*_j(x, y) = K_j(y, x)."""
    if not 0 <= j < R.domain.d:
        raise PreconditionError(f"component {j} out of range for d={R.domain.d}")
    M = R.adjoint_component(j) if adjoint else R.components[j]
    return M / R.domain.h**R.domain.d


def kernel_stack(R: RieszOperator, adjoint: bool = False) -> np.ndarray:
    """All d kernel components, shape (d, N, N)."""
    return np.stack([kernel_matrix(R, j, adjoint) for j in range(R.domain.d)])
