"""Smallest eigenpairs of symmetric pencils and a 1D weighted oracle problem."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem2d import DofMap, FEFunction
from .geometry import TriMesh


class EigenSolveError(RuntimeError):
    """Factorisation failure or non-convergence of the eigensolver."""


@dataclass(frozen=True, eq=False)
class EigenResult:
    """Eigenpairs of a discretised Laplacian pencil.

    Attributes
    ----------
    eigenvalues : ndarray
        Ascending.
    eigenvectors : ndarray
        Columns are M-orthonormal, expressed on the free dofs.
    bc : str
        Boundary-condition record.
    residuals : ndarray
        Relative residuals ``||K u - lam M u|| / ||K u||``.
    h, T : float or None
        Mesh size and port truncation length, when known.
    extrapolated : ndarray or None
        Richardson estimate from two refinement levels.  Informational only.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    bc: str = "unspecified"
    residuals: Optional[np.ndarray] = None
    h: Optional[float] = None
    T: Optional[float] = None
    extrapolated: Optional[np.ndarray] = None
    mesh: Optional[TriMesh] = None
    dofs: Optional[DofMap] = None
    upper_bound: bool = True
    notes: tuple = ()
    extras: dict = field(default_factory=dict)

    def function(self, i: int = 0) -> FEFunction:
        if self.mesh is None or self.dofs is None:
            raise ValueError("result carries no mesh")
        return FEFunction.from_dofs(self.mesh, self.dofs, self.eigenvectors[:, i])

    def with_(self, **kw) -> "EigenResult":
        return replace(self, **kw)

    def summary(self) -> dict:
        d = {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "bc": self.bc,
            "h": self.h,
            "T": self.T,
            "upper_bound": self.upper_bound,
            "max_residual": None if self.residuals is None else float(np.max(self.residuals)),
        }
        if self.extrapolated is not None:
            d["extrapolated"] = [float(v) for v in self.extrapolated]
        d.update({k: v for k, v in self.extras.items()})
        if self.notes:
            d["notes"] = list(self.notes)
        return d


def _normalise_signs(V: np.ndarray) -> np.ndarray:
    # make the largest-magnitude entry of each vector positive
    idx = np.argmax(np.abs(V), axis=0)
    s = np.sign(V[idx, np.arange(V.shape[1])])
    s[s == 0] = 1.0
    return V * s


def _rayleigh_ritz(K, M, V):
    Kr = V.T @ (K @ V)
    Mr = V.T @ (M @ V)
    Kr = 0.5 * (Kr + Kr.T)
    Mr = 0.5 * (Mr + Mr.T)
    w, Y = sla.eigh(Kr, Mr)
    return w, V @ Y


def smallest_eigenpairs(
    K,
    M,
    k: int = 1,
    tol: float = 1e-10,
    deflate_constants: bool = False,
    maxiter: Optional[int] = None,
) -> EigenResult:
    """Compute the ``k`` smallest eigenpairs of ``K u = lam M u``.

    Parameters
    ----------
    K, M : sparse or dense symmetric matrices
        ``K`` positive semidefinite, ``M`` positive definite.
    k : int
    tol : float
        Relative residual target.
    deflate_constants : bool
        Remove the constant vector (Neumann kernel) so the first returned
        eigenvalue is the first positive one.

    Returns
    -------
    EigenResult
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    K = sp.csr_matrix(K, dtype=float)
    M = sp.csr_matrix(M, dtype=float)
    n = K.shape[0]
    if K.shape != (n, n) or M.shape != (n, n):
        raise ValueError("K and M must be square and of equal size")
    need = k + (1 if deflate_constants else 0)
    if need > n:
        raise ValueError(f"requested {k} eigenpairs from a pencil of size {n}")

    if n <= max(64, 3 * need):
        w, V = sla.eigh(K.toarray(), M.toarray())
        if deflate_constants:
            V = V[:, 1:]
            w = w[1:]
        w, V = w[:k], V[:, :k]
    else:
        sigma = 1e-8 * K.diagonal().sum() / M.diagonal().sum()
        try:
            lu = spla.splu((K + sigma * M).tocsc())
        except RuntimeError as exc:
            raise EigenSolveError(f"factorisation of K + sigma M failed: {exc}") from exc

        ones = np.ones(n)
        Mones = M @ ones
        c_norm = float(ones @ Mones)

        def solve(x):
            y = lu.solve(np.asarray(x, float).ravel())
            if deflate_constants:
                y = y - ones * (Mones @ y) / c_norm
            return y

        op = spla.LinearOperator((n, n), matvec=solve, dtype=float)
        rng = np.random.default_rng(20240101)
        v0 = rng.standard_normal(n)
        if deflate_constants:
            v0 -= ones * (Mones @ v0) / c_norm
        ncv = min(n, max(2 * k + 1, 20))
        try:
            vals, V = spla.eigsh(
                K,
                k=k,
                M=M,
                sigma=-sigma,
                which="LM",
                OPinv=op,
                v0=v0,
                ncv=ncv,
                tol=tol * 1e-2,
                maxiter=maxiter or 500 * k,
            )
        except spla.ArpackNoConvergence as exc:
            raise EigenSolveError(
                f"eigensolver did not converge: {len(exc.eigenvalues)} of {k} pairs"
            ) from exc
        w, V = _rayleigh_ritz(K, M, V)

    order = np.argsort(w)
    w, V = w[order], V[:, order]
    V = _normalise_signs(V)
    KV = K @ V
    res = np.linalg.norm(KV - (M @ V) * w, axis=0) / np.maximum(np.linalg.norm(KV, axis=0), 1e-300)
    if np.any(res > max(tol, 1e-8) * 1e3):
        raise EigenSolveError(f"residuals too large: {res}")
    return EigenResult(np.asarray(w), V, residuals=res)


def richardson(coarse: float, fine: float, order: int = 2) -> float:
    """Richardson extrapolation from sizes ``h`` and ``h/2``."""
    r = 2.0**order
    return (r * fine - coarse) / (r - 1.0)


def fem1d_weighted_eigs(a: float, T: float = 8.0, h: float = 1e-3) -> float:
    """Smallest eigenvalue of the weighted 1D problem on ``(0, T)``.

    Discretises ``-phi'' + a^2 1_{(1/2,T)} phi = lam 1_{(0,1/2)} phi`` with
    P1 elements, natural condition at 0 and ``phi(T) = 0``.  The right-hand
    mass is singular, so the solve uses the shifted pencil
    ``(K + a^2 M) phi = (lam + a^2) M_in phi`` whose left matrix is
    positive definite.

    Returns
    -------
    float
        An upper bound (up to truncation in ``T``) for the optimal constant.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if not T > 0.5:
        raise ValueError("T must exceed 1/2")
    n_in = max(2, int(math.ceil(0.5 / h)))
    hh = 0.5 / n_in
    n_out = max(2, int(math.ceil((T - 0.5) / hh)))
    x = np.concatenate([np.linspace(0.0, 0.5, n_in + 1), np.linspace(0.5, T, n_out + 1)[1:]])
    le = np.diff(x)
    ne = len(le)
    inner = (0.5 * (x[:-1] + x[1:])) < 0.5

    def tri(diag_e, off_e):
        d = np.zeros(ne + 1)
        d[:-1] += diag_e
        d[1:] += diag_e
        return sp.diags([off_e, d, off_e], [-1, 0, 1], format="csr")

    K = tri(1.0 / le, -1.0 / le)
    Mall = tri(le / 3.0, le / 6.0)
    Min = tri(np.where(inner, le / 3.0, 0.0), np.where(inner, le / 6.0, 0.0))
    keep = np.arange(ne)  # drop the node at T
    A = (K + a * a * Mall)[keep][:, keep].tocsc()
    B = Min[keep][:, keep].tocsc()
    # largest nu of B v = nu A v gives lam + a^2 = 1/nu
    lu = spla.splu(A)
    op = spla.LinearOperator(A.shape, matvec=lambda v: lu.solve(B @ v), dtype=float)
    v0 = np.ones(A.shape[0])
    nu = spla.eigs(op, k=1, which="LR", v0=v0, tol=1e-13)[0]
    return float(1.0 / nu[0].real - a * a)
