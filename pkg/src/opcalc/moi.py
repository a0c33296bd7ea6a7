"""Multiple operator integrals on finite Hermitian matrices.

The exact eigenprojection (Schur) form, the binned discretization over
intervals [l/m, (l+1)/m), the Loewner identity, the anchor-perturbation
formula and Hoelder-tuple selection for the chain-rule estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (ComplexityExceeded, DegenerateInput, DimensionMismatch,
                     InfeasibleExponents, NonUnitary)
from .linalg import (HermitianOperator, SpectralDecomposition, eig_hermitian,
                     func_calc, schatten_norm)
from .symbols import SmoothSymbol, divided_diff_tensor

DEFAULT_COST_CAP = 32 ** 5  # N^(n+2) flop proxy; default admits n<=3 at N<=32


@dataclass(frozen=True)
class HoelderTuple:
    """Exponents (p_1..p_n; p) with sum 1/p_j = 1/p (1/inf = 0)."""

    p_list: tuple
    p: float

    def __post_init__(self):
        recs = [0.0 if math.isinf(q) else 1.0 / q for q in self.p_list]
        target = 0.0 if math.isinf(self.p) else 1.0 / self.p
        for q in tuple(self.p_list) + (self.p,):
            if not q >= 1:
                raise ValueError(f"Hoelder exponents must be >= 1, got {q}")
        if abs(sum(recs) - target) > 1e-12:
            raise ValueError(
                f"not a Hoelder tuple: sum 1/p_j = {sum(recs)} vs 1/p = {target}"
            )


@dataclass(frozen=True)
class MOIOperands:
    """Anchors A_0..A_n and arguments X_1..X_n of one MOI evaluation."""

    anchors: tuple
    arguments: tuple

    def __post_init__(self):
        anchors = tuple(a if isinstance(a, HermitianOperator) else HermitianOperator(a)
                        for a in self.anchors)
        object.__setattr__(self, "anchors", anchors)
        args = tuple(np.asarray(x, dtype=np.complex128) for x in self.arguments)
        object.__setattr__(self, "arguments", args)
        if len(anchors) != len(args) + 1:
            raise DimensionMismatch(
                f"order-n MOI needs n+1 anchors: got {len(anchors)} anchors, {len(args)} arguments"
            )
        n = anchors[0].n
        for a in anchors:
            if a.n != n:
                raise DimensionMismatch("anchors have different dimensions")
        for x in args:
            if x.shape != (n, n):
                raise DimensionMismatch(f"argument shape {x.shape} != ({n}, {n})")

    @property
    def order(self) -> int:
        return len(self.arguments)

    @property
    def dim(self) -> int:
        return self.anchors[0].n


def _check_cost(order: int, dim: int, cost_cap: Optional[int]):
    cap = DEFAULT_COST_CAP if cost_cap is None else cost_cap
    if dim ** (order + 2) > cap:
        raise ComplexityExceeded(
            f"MOI order {order} at dimension {dim} costs ~{dim ** (order + 2):.2e} "
            f"> cap {cap:.2e}; raise cost_cap to override"
        )


def _contract(phi: np.ndarray, rotated: Sequence[np.ndarray]) -> np.ndarray:
    """Sum phi(i_0..i_n) X~_1[i_0,i_1] ... X~_n[i_{n-1},i_n] over inner indices."""
    n = len(rotated)
    if n == 1:
        return phi * rotated[0]
    if n == 2:
        return np.einsum("ijk,ij,jk->ik", phi, rotated[0], rotated[1])
    if n == 3:
        return np.einsum("ijkl,ij,jk,kl->il", phi, rotated[0], rotated[1], rotated[2])
    raise ComplexityExceeded("MOI orders above 3 are not supported")


def moi_schur(F, ops: MOIOperands, order: Optional[int] = None,
              decompositions: Optional[Sequence[SpectralDecomposition]] = None,
              phi: Optional[np.ndarray] = None, cost_cap: Optional[int] = None) -> np.ndarray:
    """Exact finite-dimensional MOI in the eigenprojection (Schur) form.

    T(X_1..X_n) = sum F^[n](lam0_{i0},..,lamn_{in}) P0_{i0} X_1 P1_{i1} ... X_n Pn_{in}.

    ``phi`` overrides the divided-difference tensor (expert path, used by the
    binned form and the constant-symbol tests).  ``decompositions`` supplies
    precomputed spectra, e.g. to test basis independence under degeneracy.
    """
    n = ops.order if order is None else order
    if n != ops.order:
        raise DimensionMismatch(f"order {n} != argument count {ops.order}")
    _check_cost(n, ops.dim, cost_cap)
    decs = list(decompositions) if decompositions is not None else [eig_hermitian(a) for a in ops.anchors]
    if len(decs) != n + 1:
        raise DimensionMismatch("need one spectral decomposition per anchor")
    if phi is None:
        phi = divided_diff_tensor(F, [d.eigenvalues for d in decs])
    phi = np.asarray(phi, dtype=np.complex128)
    if phi.shape != tuple(len(d.eigenvalues) for d in decs):
        raise DimensionMismatch(f"phi tensor shape {phi.shape} mismatches spectra")
    if n == 0:
        v = decs[0].eigenvectors
        return (v * phi) @ v.conj().T
    rotated = [decs[j].eigenvectors.conj().T @ ops.arguments[j] @ decs[j + 1].eigenvectors
               for j in range(n)]
    core = _contract(phi, rotated)
    return decs[0].eigenvectors @ core @ decs[-1].eigenvectors.conj().T


def moi_binned(F, ops: MOIOperands, order: Optional[int] = None, m: int = 32,
               phi_fn=None, cost_cap: Optional[int] = None) -> np.ndarray:
    """Binned MOI S_{phi,m}: spectral projections onto [l/m, (l+1)/m).

    phi = F^[n] evaluated at the bin left endpoints l/m; eigenvalues on a bin
    boundary belong to the left-closed bin.  ``phi_fn`` overrides the symbol:
    it receives the list of occupied-bin endpoint vectors and returns the
    tensor (expert path, e.g. the constant symbol phi = 1).
    """
    n = ops.order if order is None else order
    if n != ops.order:
        raise DimensionMismatch(f"order {n} != argument count {ops.order}")
    if m < 1:
        raise ValueError("bin resolution m must be >= 1")
    _check_cost(n, ops.dim, cost_cap)
    binned = []
    for a in ops.anchors:
        dec = eig_hermitian(a)
        t = dec.eigenvalues * m
        r = np.round(t)
        # left-closed bins [l/m, (l+1)/m); values within fp noise of a
        # boundary are snapped onto it so they land in their own bin
        labels = np.where(np.abs(t - r) < 1e-9, r, np.floor(t)).astype(int)
        uniq = np.unique(labels)
        binned.append((dec, labels, uniq))
    spectra = [u / m for (_, _, u) in binned]
    phi = phi_fn(spectra) if phi_fn is not None else divided_diff_tensor(F, spectra)
    # eigenvector columns grouped per occupied bin give the bin projectors
    projL = []
    for (dec, lab, uniq) in binned:
        blocks = [dec.eigenvectors[:, lab == b] for b in uniq]
        projL.append(blocks)
    if n == 0:
        total = np.zeros((ops.dim, ops.dim), dtype=np.complex128)
        for bi, block in enumerate(projL[0]):
            total += phi[bi] * (block @ block.conj().T)
        return total
    # rotated argument between bin-blocks: R_j[b, b'] = B_{j,b}^* X_j B_{j+1,b'}
    rot = []
    for j in range(n):
        left, right = projL[j], projL[j + 1]
        mat = np.empty((len(left), len(right)), dtype=object)
        for a_i, bl in enumerate(left):
            xb = bl.conj().T @ ops.arguments[j]
            for b_i, br in enumerate(right):
                mat[a_i, b_i] = xb @ br
        rot.append(mat)
    dims_first = [b.shape[1] for b in projL[0]]
    dims_last = [b.shape[1] for b in projL[-1]]
    if n == 1:
        core_blocks = [[phi[i, k] * rot[0][i, k] for k in range(len(dims_last))]
                       for i in range(len(dims_first))]
    elif n == 2:
        nb1 = len(projL[1])
        core_blocks = [[sum(phi[i, j, k] * (rot[0][i, j] @ rot[1][j, k]) for j in range(nb1))
                        for k in range(len(dims_last))] for i in range(len(dims_first))]
    elif n == 3:
        nb1, nb2 = len(projL[1]), len(projL[2])
        core_blocks = [[sum(phi[i, j, l, k] * (rot[0][i, j] @ rot[1][j, l] @ rot[2][l, k])
                            for j in range(nb1) for l in range(nb2))
                        for k in range(len(dims_last))] for i in range(len(dims_first))]
    else:
        raise ComplexityExceeded("binned MOI orders above 3 are not supported")
    v0 = np.concatenate([b for b in projL[0]], axis=1)
    vn = np.concatenate([b for b in projL[-1]], axis=1)
    core = np.block([[np.asarray(core_blocks[i][k]) for k in range(len(dims_last))]
                     for i in range(len(dims_first))])
    return v0 @ core @ vn.conj().T


def loewner_residual(F: SmoothSymbol, X: HermitianOperator, Y: HermitianOperator, p=2) -> float:
    """|| F(X) - F(Y) - T^{X,Y}_{F^[1]}(X - Y) ||_p."""
    X = X if isinstance(X, HermitianOperator) else HermitianOperator(X)
    Y = Y if isinstance(Y, HermitianOperator) else HermitianOperator(Y, trace_mode=X.trace_mode)
    if X.n != Y.n:
        raise DimensionMismatch("X and Y must share dimension")
    fx = func_calc(X, F).data
    fy = func_calc(Y, F).data
    ops = MOIOperands(anchors=(X, Y), arguments=(X.data - Y.data,))
    t = moi_schur(F, ops)
    return schatten_norm(fx - fy - t, p, X.trace_mode)


def perturbation_residual(F: SmoothSymbol, slot: int, A: HermitianOperator, B: HermitianOperator,
                          anchors: Sequence, arguments: Sequence, p=2) -> float:
    """Residual of the anchor-perturbation formula at the given slot.

    || T^{..A..}(X) - T^{..B..}(X) - T^{..A,B..}(X_1..X_slot, A-B, X_{slot+1}..X_n) ||_p
    with A placed at anchor position ``slot`` (0-based among n+1 anchors).
    """
    A = A if isinstance(A, HermitianOperator) else HermitianOperator(A)
    B = B if isinstance(B, HermitianOperator) else HermitianOperator(B)
    anchors = list(anchors)
    n = len(arguments)
    if not 0 <= slot <= n:
        raise DimensionMismatch(f"slot must be in 0..{n}")
    if len(anchors) != n:
        raise DimensionMismatch("need n unperturbed anchors for an order-n formula")
    anchors_a = anchors[:slot] + [A] + anchors[slot:]
    anchors_b = anchors[:slot] + [B] + anchors[slot:]
    lhs = (moi_schur(F, MOIOperands(tuple(anchors_a), tuple(arguments)))
           - moi_schur(F, MOIOperands(tuple(anchors_b), tuple(arguments))))
    anchors_ab = anchors[:slot] + [A, B] + anchors[slot:]
    args_ab = list(arguments[:slot]) + [A.data - B.data] + list(arguments[slot:])
    rhs = moi_schur(F, MOIOperands(tuple(anchors_ab), tuple(args_ab)))
    trace_mode = anchors_a[0].trace_mode
    return schatten_norm(lhs - rhs, p, trace_mode)


def lipschitz_ratio(F, X: HermitianOperator, Y: HermitianOperator, p=2) -> float:
    """|| F(X) - F(Y) ||_p / || X - Y ||_p."""
    X = X if isinstance(X, HermitianOperator) else HermitianOperator(X)
    Y = Y if isinstance(Y, HermitianOperator) else HermitianOperator(Y, trace_mode=X.trace_mode)
    denom = schatten_norm(X.data - Y.data, p, X.trace_mode)
    if denom == 0.0:
        raise DegenerateInput("X == Y")
    num = schatten_norm(func_calc(X, F).data - func_calc(Y, F).data, p, X.trace_mode)
    return num / denom


def homomorphism_commutation_residual(F, order: int, W: np.ndarray, ops: MOIOperands,
                                      p=2) -> float:
    """|| W T(ops) W* - T(conjugated ops) ||_p for the *-endomorphism W . W*."""
    W = np.asarray(W, dtype=np.complex128)
    if np.linalg.norm(W.conj().T @ W - np.eye(W.shape[0])) > 1e-10:
        raise NonUnitary("W is not unitary to 1e-10")
    t = moi_schur(F, ops, order)
    conj_ops = MOIOperands(
        anchors=tuple(HermitianOperator(W @ a.data @ W.conj().T, a.trace_mode) for a in ops.anchors),
        arguments=tuple(W @ x @ W.conj().T for x in ops.arguments),
    )
    t2 = moi_schur(F, conj_ops, order)
    mode = ops.anchors[0].trace_mode
    return schatten_norm(W @ t @ W.conj().T - t2, p, mode)


def select_hoelder_exponents(s: float, p: float, d: int, multiindices: Sequence[Sequence[int]]):
    """Hoelder tuple (p_0..p_l; p) splitting derivative orders across slots.

    p_0 = Kp/delta and p_k = Kp/(|a_k| - delta_k) with delta_k chosen so each
    auxiliary smoothness s_k = |a_k| + eps_k + d/p - d/p_k stays below s.
    Returns (HoelderTuple, report dict with delta_k, eps_k, s_k).
    """
    alphas = [np.asarray(a, dtype=int) for a in multiindices]
    if any((a < 0).any() or a.sum() == 0 for a in alphas):
        raise InfeasibleExponents("multi-indices must be nonzero and nonnegative")
    K = int(sum(int(a.sum()) for a in alphas))
    if math.isinf(p):
        tup = HoelderTuple(tuple([math.inf] * (len(alphas) + 1)), math.inf)
        return tup, {"delta": [0.0] * len(alphas), "eps": [0.0] * len(alphas),
                     "s_aux": [s - 1] * len(alphas)}
    if not s > d / p:
        raise InfeasibleExponents(f"need s > d/p, got s={s}, d/p={d / p}")
    if K > math.floor(s):
        raise InfeasibleExponents(f"total order K={K} exceeds floor(s)={math.floor(s)}")
    deltas, epss, s_aux = [], [], []
    for a in alphas:
        ak = float(a.sum())
        cap = ak + (s - ak) * K * p / d - K
        if cap <= 0:
            raise InfeasibleExponents(f"no admissible delta for |alpha|={ak}")
        delta_k = 0.5 * min(ak, cap)
        # headroom for eps_k from the exact requirement s_k < s
        head = s - ak - (K - ak + delta_k) * d / (K * p)
        if head <= 0:
            raise InfeasibleExponents(f"no admissible eps for |alpha|={ak}")
        eps_k = 0.5 * head
        deltas.append(delta_k)
        epss.append(eps_k)
    delta = sum(deltas)
    p0 = K * p / delta
    p_list = [p0] + [K * p / (float(a.sum()) - dk) for a, dk in zip(alphas, deltas)]
    for a, dk, ek in zip(alphas, deltas, epss):
        ak = float(a.sum())
        pk = K * p / (ak - dk)
        s_aux.append(ak + ek + d / p - d / pk)
    tup = HoelderTuple(tuple(p_list), float(p))
    return tup, {"delta": deltas, "eps": epss, "s_aux": s_aux}
