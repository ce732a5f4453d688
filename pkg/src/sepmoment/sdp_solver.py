"""Interior-point solver for moment SDPs with certified infeasibility.

The problem is ``min c @ y`` over moment vectors with linear equalities,
zero blocks (linear matrix equalities) and PSD blocks.  Solving proceeds in
three stages:

1. The zero blocks are homogeneous, so their solution set is a subspace
   ``y = Z w``.  ``Z`` comes from Gauss-Jordan elimination that prefers the
   pivots listed first in ``problem.pivot_order``.
2. Facial reduction: vectors in the kernel of ``M(Z w)`` for *every* ``w``
   are removed by restricting each PSD block to a principal submatrix.
3. The reduced conic program ``min c'w, A'w = b', M_S(Zw) >= 0`` is solved
   with a primal-dual method on the homogeneous self-dual embedding using
   Nesterov-Todd scaling and Mehrotra predictor-corrector steps.

Infeasibility is reported with a certificate ``(X, lam)`` over the full
problem data that :func:`verify_certificate` checks independently.
"""

from __future__ import annotations

import csv
import enum
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .moment_relaxation import SdpProblem, SymbolicMatrix

log = logging.getLogger(__name__)


class SdpStatus(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNKNOWN = "unknown"


@dataclass
class SolverOptions:
    feas_tol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.98
    elimination_tol: float = 1e-9
    log_path: str | Path | None = None
    verbose: bool = False


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Dual ray: ``X[i] >= 0`` per PSD block and multipliers ``lam`` over
    the rows of :func:`equality_system`.

    For every feasible ``y``, ``<M(y), X> = lam @ b_full`` up to the residual
    ``M*(X) - A_full^T lam``; a negative right-hand side proves infeasibility.
    """

    X: tuple[np.ndarray, ...]
    lam: np.ndarray
    kind: str = "conic"


@dataclass
class SdpSolution:
    status: SdpStatus
    y: np.ndarray | None = None
    objective_value: float = float("nan")
    certificate: InfeasibilityCertificate | None = None
    margin: float | None = None
    iterations: int = 0
    residuals: dict[str, float] = field(default_factory=dict)
    message: str = ""
    info: dict[str, Any] = field(default_factory=dict)


# --- problem data ---------------------------------------------------------------


def _zero_rows(problem: SdpProblem) -> sp.csr_matrix:
    """Distinct scalar equations contained in the zero blocks."""
    N = problem.num_moments
    seen: dict[tuple, None] = {}
    for blk in problem.zero_blocks:
        op = blk.operator(N).tocsr()
        op.sum_duplicates()
        n = blk.size
        for r in range(n):
            for c in range(r, n):
                lo, hi = op.indptr[r * n + c], op.indptr[r * n + c + 1]
                if lo == hi:
                    continue
                idx, val = op.indices[lo:hi], op.data[lo:hi]
                keep = val != 0
                if not keep.any():
                    continue
                idx, val = idx[keep], val[keep]
                order = np.argsort(idx)
                # normalize sign and scale so that duplicates collapse
                idx, val = idx[order], val[order] / val[order][0]
                seen.setdefault((tuple(idx), tuple(np.round(val, 14))), None)
    if not seen:
        return sp.csr_matrix((0, N))
    data, indices, indptr = [], [], [0]
    for idx, val in seen:
        indices.extend(idx)
        data.extend(val)
        indptr.append(len(indices))
    return sp.csr_matrix((data, indices, indptr), shape=(len(seen), N))


def equality_system(problem: SdpProblem) -> tuple[sp.csr_matrix, np.ndarray]:
    """All scalar equalities: the problem's rows followed by distinct zero-block rows."""
    Z = _zero_rows(problem)
    A = sp.vstack([problem.A, Z], format="csr")
    return A, np.concatenate([problem.b, np.zeros(Z.shape[0])])


def _adjoint(blocks: list[SymbolicMatrix], X, N: int) -> np.ndarray:
    out = np.zeros(N)
    for blk, Xi in zip(blocks, X):
        out += blk.adjoint(Xi, N)
    return out


# --- stage 1: subspace of the zero blocks ---------------------------------------


def _eliminate(rows: sp.csr_matrix, pivot_order: np.ndarray, tol: float) -> sp.csc_matrix:
    """Basis ``Z`` of ``{y : rows @ y = 0}`` in normal form.

    Gauss-Jordan elimination visits columns in ``pivot_order``; each pivot
    column is expressed through the columns that never become pivots, so the
    free coordinates of ``w`` are moments themselves.
    """
    R, N = rows.shape
    if R == 0:
        return sp.identity(N, format="csc")
    M = rows.toarray()
    scale = np.abs(M).max()
    free_rows = np.ones(R, dtype=bool)
    pivot_of_col = {}
    for col in pivot_order:
        column = M[:, col]
        cand = np.flatnonzero(free_rows & (np.abs(column) > tol * scale))
        if cand.size == 0:
            continue
        r = cand[np.argmax(np.abs(column[cand]))]
        M[r] /= M[r, col]
        others = np.flatnonzero(np.abs(M[:, col]) > 0)
        others = others[others != r]
        if others.size:
            M[others] -= np.outer(M[others, col], M[r])
            M[others, col] = 0.0
        free_rows[r] = False
        pivot_of_col[col] = r
        if not free_rows.any():
            break
    pivots = np.array(sorted(pivot_of_col), dtype=int)
    free = np.setdiff1d(np.arange(N), pivots)
    E = M[[pivot_of_col[c] for c in pivots]][:, free] if pivots.size else np.zeros((0, free.size))
    E[np.abs(E) < 1e-13] = 0.0
    Z = sp.lil_matrix((N, free.size))
    Z[free, np.arange(free.size)] = 1.0
    Zc = sp.csr_matrix(Z)
    if pivots.size:
        Zp = sp.csr_matrix(-E)
        perm = np.concatenate([free, pivots])
        stacked = sp.vstack([sp.identity(free.size, format="csr"), Zp], format="csr")
        inv = np.empty(N, dtype=int)
        inv[perm] = np.arange(N)
        Zc = stacked[inv]
    return sp.csc_matrix(Zc)


# --- stage 2: facial reduction ----------------------------------------------------


def _restrict(blk: SymbolicMatrix, keep: np.ndarray) -> SymbolicMatrix:
    pos = np.full(blk.size, -1)
    pos[keep] = np.arange(keep.size)
    mask = (pos[blk.rows] >= 0) & (pos[blk.cols] >= 0)
    labels = tuple(blk.labels[i] for i in keep) if len(blk.labels) == blk.size else ()
    return SymbolicMatrix(keep.size, labels, pos[blk.rows[mask]], pos[blk.cols[mask]], blk.moments[mask], blk.coefs[mask])


def _common_kernel_keep(blk: SymbolicMatrix, Z: sp.csc_matrix) -> np.ndarray:
    """Indices of a principal submatrix carrying all of ``M(Z w)``.

    ``K`` spans the vectors ``p`` with ``M(Z w) p = 0`` for all ``w`` (the
    kernel of ``sum_j M(Z e_j)^2``).  Rows at pivot positions of ``K`` are
    linear combinations of the others for every ``w``, so dropping them
    leaves a congruent PSD condition.
    """
    n = blk.size
    T = (blk.operator(Z.shape[0]) @ Z).tocoo()
    a, b = np.divmod(T.row, n)
    T2 = sp.csr_matrix((T.data, (a, b * Z.shape[1] + T.col)), shape=(n, n * Z.shape[1]))
    gram = (T2 @ T2.T).toarray()
    w, U = np.linalg.eigh(gram)
    top = max(w[-1], 1e-300)
    K = U[:, w <= 1e-10 * top]
    if K.shape[1] == 0:
        return np.arange(n)
    _, _, piv = la.qr(K.T, mode="economic", pivoting=True)
    return np.sort(piv[K.shape[1]:])


# --- stage 3: the reduced conic program -----------------------------------------


@dataclass
class _Reduced:
    Z: sp.csc_matrix
    blocks: list[SymbolicMatrix]
    ops: list[sp.csr_matrix]  # vec(M_S(y)) = op @ y
    A: np.ndarray  # orthonormal rows over w
    b: np.ndarray
    c: np.ndarray
    bscale: float
    cscale: float
    Ur: np.ndarray  # combination of original rows used for A
    N: int
    keeps: list[np.ndarray] = field(default_factory=list)

    def G(self, w: np.ndarray) -> list[np.ndarray]:
        y = self.Z @ w
        return [-(op @ y).reshape(blk.size, blk.size) for op, blk in zip(self.ops, self.blocks)]

    def GT(self, zs: list[np.ndarray]) -> np.ndarray:
        return -(self.Z.T @ _adjoint(self.blocks, zs, self.N))


def _schur(red: _Reduced, Vs: list[np.ndarray]) -> np.ndarray:
    """``G^T (V x V) G`` over ``w``: entry ``(a, b) = <V B_a V, B_b>`` mapped through ``Z``."""
    N = red.N
    Hy = np.zeros((N, N))
    for blk, op, V in zip(red.blocks, red.ops, Vs):
        order = np.argsort(blk.moments, kind="stable")
        mom = blk.moments[order]
        rows, cols, coefs = blk.rows[order], blk.cols[order], blk.coefs[order]
        starts = np.flatnonzero(np.r_[True, mom[1:] != mom[:-1]])
        ends = np.r_[starts[1:], mom.size]
        opT = op.T.tocsr()
        chunk = 256
        for lo in range(0, starts.size, chunk):
            sel = range(lo, min(lo + chunk, starts.size))
            Ys = np.empty((len(sel), blk.size * blk.size))
            cols_out = np.empty(len(sel), dtype=int)
            for t, g in enumerate(sel):
                s, e = starts[g], ends[g]
                Ys[t] = ((V[:, rows[s:e]] * coefs[s:e]) @ V[cols[s:e], :]).ravel()
                cols_out[t] = mom[s]
            Hy[:, cols_out] += opT @ Ys.T
    Zt = red.Z.T.tocsr()
    HZ = (Zt @ Hy).T  # N x nw
    H = Zt @ HZ
    return (H + H.T) / 2


def _chol(H: np.ndarray) -> tuple[np.ndarray, bool]:
    shift = 0.0
    base = max(np.abs(np.diag(H)).max(initial=0.0), 1e-300)
    for _ in range(8):
        try:
            return la.cho_factor(H + shift * np.eye(H.shape[0]), lower=True, check_finite=False), shift == 0.0
        except la.LinAlgError:
            shift = base * (1e-14 if shift == 0.0 else shift / base * 100)
    raise la.LinAlgError("KKT matrix not positive definite")


def _nt_scaling(s: np.ndarray, z: np.ndarray):
    """``R`` with ``R^T z R = diag(lam) = R^-1 s R^-T``; returns ``R``, ``R^-1`` and ``lam``."""
    Ls = la.cholesky(s, lower=True)
    Lz = la.cholesky(z, lower=True)
    U, lam, Vt = la.svd(Lz.T @ Ls)
    sq = np.sqrt(lam)
    R = (Ls @ Vt.T) / sq
    Rinv = (sq[:, None] * Vt) @ la.solve_triangular(Ls, np.eye(s.shape[0]), lower=True)
    return R, Rinv, lam


def _jordan(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return (a @ b + b @ a) / 2


def _max_step(lam: np.ndarray, d: np.ndarray) -> float:
    """Largest ``a`` with ``diag(lam) + a d >= 0``."""
    isq = 1 / np.sqrt(lam)
    m = np.linalg.eigvalsh(isq[:, None] * d * isq[None, :])[0]
    return np.inf if m >= 0 else -1.0 / m


def _ipm(red: _Reduced, opts: SolverOptions, writer=None) -> dict[str, Any]:
    nw, p = red.c.size, red.b.size
    A, b, c = red.A, red.b, red.c
    sizes = [blk.size for blk in red.blocks]
    nu = sum(sizes)
    x, y = np.zeros(nw), np.zeros(p)
    s = [np.eye(n) for n in sizes]
    z = [np.eye(n) for n in sizes]
    tau = kappa = 1.0
    tol = opts.feas_tol
    cn, bn = max(1.0, np.linalg.norm(c)), max(1.0, np.linalg.norm(b))
    res: dict[str, Any] = {"status": SdpStatus.UNKNOWN, "message": "iteration limit"}

    for it in range(opts.max_iter + 1):
        Gx = red.G(x)
        GTz = red.GT(z)
        rx = A.T @ y + GTz + c * tau
        ry = A @ x - b * tau
        rz = [g + si for g, si in zip(Gx, s)]
        rt = c @ x + b @ y + kappa
        sz = sum(float(np.sum(si * zi)) for si, zi in zip(s, z))
        mu = (sz + tau * kappa) / (nu + 1)

        pobj, dobj = c @ x / tau, -(b @ y) / tau
        pres = max(np.linalg.norm(ry) / bn, np.sqrt(sum(np.sum(r * r) for r in rz))) / tau
        dres = np.linalg.norm(rx) / cn / tau
        gap = sz / tau**2
        relgap = abs(pobj - dobj) / max(1.0, abs(pobj))
        if writer is not None:
            writer.writerow([it, mu, pres, dres, relgap])
        if opts.verbose:
            log.info("it %3d mu %.2e pres %.2e dres %.2e gap %.2e tau %.2e kappa %.2e", it, mu, pres, dres, relgap, tau, kappa)
        res.update(iterations=it, pres=pres, dres=dres, gap=relgap, x=x, y=y, z=z, s=s, tau=tau, pobj=pobj, dobj=dobj)
        if pres <= tol:
            res["primal_x"] = x / tau
        if pres <= tol and dres <= tol and (gap <= tol or relgap <= tol):
            res.update(status=SdpStatus.OPTIMAL, message="converged")
            return res
        by = b @ y
        if by < 0:
            pinf = np.linalg.norm(A.T @ y + GTz) / (-by)
            if pinf <= tol:
                res.update(status=SdpStatus.INFEASIBLE, message="primal infeasible", pinf=pinf)
                return res
        cx = c @ x
        if cx < 0:
            dinf = max(np.linalg.norm(A @ x), np.sqrt(sum(np.sum((g + si) ** 2) for g, si in zip(Gx, s)))) / (-cx)
            if dinf <= tol:
                res.update(status=SdpStatus.UNKNOWN, message="dual infeasible (unbounded relaxation)")
                return res
        if it == opts.max_iter:
            break

        try:
            scal = [_nt_scaling(si, zi) for si, zi in zip(s, z)]
            Vs = [Ri.T @ Ri for _, Ri, _ in scal]
            Hc, _ = _chol(_schur(red, Vs))
            if p:
                AHA = A @ la.cho_solve(Hc, A.T)
                Sc, _ = _chol((AHA + AHA.T) / 2)
        except (la.LinAlgError, ValueError) as exc:
            res.update(message=f"numerical breakdown: {exc}")
            return res

        Ps = [R @ R.T for R, _, _ in scal]

        def kkt_once(bx, by_, bz):
            g = bx + red.GT([V @ r @ V for V, r in zip(Vs, bz)])
            Hg = la.cho_solve(Hc, g)
            dy = la.cho_solve(Sc, A @ Hg - by_) if p else np.zeros(0)
            dx = la.cho_solve(Hc, g - A.T @ dy) if p else Hg
            Gd = red.G(dx)
            dz = [V @ (gd - r) @ V for V, gd, r in zip(Vs, Gd, bz)]
            return dx, dy, dz

        def kkt(bx, by_, bz, refine=2):
            dx, dy, dz = kkt_once(bx, by_, bz)
            for _ in range(refine):
                ex = bx - A.T @ dy - red.GT(dz)
                ey = by_ - A @ dx
                ez = [r - gd + P @ d @ P for r, gd, P, d in zip(bz, red.G(dx), Ps, dz)]
                ux, uy, uz = kkt_once(ex, ey, ez)
                dx, dy = dx + ux, dy + uy
                dz = [d + u for d, u in zip(dz, uz)]
            return dx, dy, dz

        x2, y2, z2 = kkt(-c, b, [np.zeros((n, n)) for n in sizes])
        denom2 = c @ x2 + b @ y2 - kappa / tau

        def direction(eta, Xc, rkappa):
            # Xc: scaled complementarity right-hand side (ds~ + dz~) per block
            bz = [-eta * r - R @ X @ R.T for r, (R, _, _), X in zip(rz, scal, Xc)]
            x1, y1, z1 = kkt(-eta * rx, -eta * ry, bz)
            dtau = (-eta * rt - rkappa / tau - c @ x1 - b @ y1) / denom2
            dx, dy = x1 + dtau * x2, y1 + dtau * y2
            dz = [a + dtau * b_ for a, b_ in zip(z1, z2)]
            dzt = [R.T @ d @ R for (R, _, _), d in zip(scal, dz)]
            # ds from the primal row keeps G x + s consistent with its residual
            ds = [-eta * r - gd for r, gd in zip(rz, red.G(dx))]
            dst = [Ri @ d @ Ri.T for (_, Ri, _), d in zip(scal, ds)]
            dkappa = (rkappa - kappa * dtau) / tau
            return dx, dy, dz, dzt, dst, dtau, dkappa

        def step(dzt, dst, dtau, dkappa):
            a = np.inf
            for (_, _, lam), d1, d2 in zip(scal, dzt, dst):
                a = min(a, _max_step(lam, d1), _max_step(lam, d2))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if dkappa < 0:
                a = min(a, -kappa / dkappa)
            return a

        lams = [lam for _, _, lam in scal]
        Xa = [-np.diag(lam) for lam in lams]
        aff = direction(1.0, Xa, -tau * kappa)
        a_aff = min(1.0, step(*aff[3:]))
        sigma = (1 - a_aff) ** 3
        eta = 1 - sigma
        Xc = []
        for lam, dzt, dst in zip(lams, aff[3], aff[4]):
            rc = -np.diag(lam**2) - _jordan(dst, dzt) + sigma * mu * np.eye(lam.size)
            Xc.append(2 * rc / (lam[:, None] + lam[None, :]))
        rkappa = -tau * kappa - aff[5] * aff[6] + sigma * mu
        dx, dy, dz, dzt, dst, dtau, dkappa = direction(eta, Xc, rkappa)
        alpha = min(1.0, opts.step_fraction * step(dzt, dst, dtau, dkappa))

        x = x + alpha * dx
        y = y + alpha * dy
        tau += alpha * dtau
        kappa += alpha * dkappa
        new_s, new_z = [], []
        for (R, Ri, lam), a1, a2 in zip(scal, dzt, dst):
            zt = np.diag(lam) + alpha * a1
            st = np.diag(lam) + alpha * a2
            new_z.append(_sym(Ri.T @ zt @ Ri))
            new_s.append(_sym(R @ st @ R.T))
        s, z = new_s, new_z
        if not (tau > 0 and kappa > 0) or not np.isfinite(x).all():
            res.update(message="numerical breakdown: lost interiority")
            return res
    return res


def _sym(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2


# --- driver ------------------------------------------------------------------------


def _linear_certificate(problem: SdpProblem, lam_rows: np.ndarray) -> InfeasibilityCertificate:
    A_full, _ = equality_system(problem)
    lam = np.zeros(A_full.shape[0])
    lam[: problem.A.shape[0]] = lam_rows
    X = tuple(np.zeros((blk.size, blk.size)) for blk in problem.psd_blocks)
    return InfeasibilityCertificate(X, _fold(A_full, lam, np.zeros(problem.num_moments)), kind="linear")


def _fold(A_full: sp.csr_matrix, lam: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Shift ``lam`` so that ``A_full^T lam`` is the projection of ``target`` onto range(A_full^T)
    along the part ``lam`` already explains."""
    r = target - A_full.T @ lam
    if not np.any(r):
        return lam
    delta, *_ = la.lstsq(A_full.T.toarray(), r, lapack_driver="gelsd")
    return lam + delta


def verify_certificate(problem: SdpProblem, certificate: InfeasibilityCertificate) -> float:
    """Normalized infeasibility margin; positive means the certificate proves infeasibility.

    With ``r = M*(X) - A_full^T lam`` reduced to its component outside the
    row space of ``A_full`` and ``B`` a bound on ``|y_alpha|`` over feasible
    moments, every feasible ``y`` would satisfy
    ``0 <= lam @ b_full + B |r|_1 + sum_i n_i B max(0, -lambda_min(X_i))``.
    The margin is the violation of that inequality divided by
    ``max(sum_i tr X_i, |lam|_inf)``.
    """
    X = certificate.X
    if len(X) != len(problem.psd_blocks):
        raise ValueError(f"certificate has {len(X)} PSD blocks, problem has {len(problem.psd_blocks)}")
    for Xi, blk in zip(X, problem.psd_blocks):
        if np.shape(Xi) != (blk.size, blk.size):
            raise ValueError(f"certificate block shape {np.shape(Xi)} != ({blk.size}, {blk.size})")
    A_full, b_full = equality_system(problem)
    lam = np.asarray(certificate.lam, dtype=float)
    if lam.shape != (A_full.shape[0],):
        raise ValueError(f"multiplier length {lam.shape} != {A_full.shape[0]} rows")
    if not (np.all(np.isfinite(lam)) and all(np.all(np.isfinite(Xi)) for Xi in X)):
        raise ValueError("certificate contains non-finite values")
    Xs = [_sym(np.asarray(Xi, dtype=float)) for Xi in X]
    target = _adjoint(problem.psd_blocks, Xs, problem.num_moments)
    lam = _fold(A_full, lam, target)
    r = target - A_full.T @ lam
    B = 1.0 if problem.moment_bound is None else float(problem.moment_bound)
    neg = sum(blk.size * max(0.0, -float(np.linalg.eigvalsh(Xi)[0])) for blk, Xi in zip(problem.psd_blocks, Xs))
    slack = -(lam @ b_full) - B * np.abs(r).sum() - B * neg
    scale = max(sum(float(np.trace(Xi)) for Xi in Xs), float(np.abs(lam).max(initial=0.0)))
    if scale == 0.0:
        return 0.0
    return float(slack / scale)


def _reduce(problem: SdpProblem, opts: SolverOptions, info: dict):
    N = problem.num_moments
    zrows = _zero_rows(problem)
    order = problem.pivot_order if problem.pivot_order is not None else np.arange(N)[::-1]
    Z = _eliminate(zrows, np.asarray(order), opts.elimination_tol)
    blocks, ops, keeps = [], [], []
    for blk in problem.psd_blocks:
        keep = _common_kernel_keep(blk, Z)
        rb = _restrict(blk, keep)
        keeps.append(keep)
        blocks.append(rb)
        ops.append(rb.operator(N))
    info.update(free_moments=Z.shape[1], zero_rows=zrows.shape[0], reduced_blocks=[b.size for b in blocks])

    AZ = np.asarray((problem.A @ Z).todense()) if problem.A.shape[0] else np.zeros((0, Z.shape[1]))
    if AZ.shape[0]:
        U, sv, _ = la.svd(AZ, full_matrices=True)
        rank = int(np.sum(sv > opts.elimination_tol * max(sv[0], 1.0))) if sv.size else 0
        Ur, Un = U[:, :rank], U[:, rank:]
        leak = Un.T @ problem.b
        if np.linalg.norm(leak) > opts.feas_tol * max(1.0, np.linalg.norm(problem.b)):
            return None, -(Un @ leak)
        A_red, b_red = Ur.T @ AZ, Ur.T @ problem.b
    else:
        Ur, A_red, b_red = np.zeros((0, 0)), AZ, np.zeros(0)
    c = Z.T @ problem.c
    bscale = max(np.abs(b_red).max(initial=0.0), 1e-300) if b_red.size else 1.0
    cscale = max(np.abs(c).max(initial=0.0), 1e-300)
    red = _Reduced(Z, blocks, ops, A_red, b_red / bscale, c / cscale, bscale, cscale, Ur, N, keeps)
    return red, None


def _primal_check(problem: SdpProblem, y: np.ndarray, feas_tol: float) -> tuple[bool, float, float]:
    A_full, b_full = equality_system(problem)
    eq_res = float(np.abs(A_full @ y - b_full).max(initial=0.0))
    min_eig = min(float(np.linalg.eigvalsh(blk.evaluate(y))[0]) for blk in problem.psd_blocks)
    tol = feas_tol * max(1.0, abs(float(y[0])))
    return eq_res <= tol and min_eig >= -10 * tol, eq_res, min_eig


def solve(problem: SdpProblem, options: SolverOptions | None = None) -> SdpSolution:
    opts = options or SolverOptions()
    if not problem.psd_blocks:
        raise ValueError("problem has no PSD blocks")
    if problem.num_moments == 0:
        raise ValueError("problem has no moments")
    t0 = time.perf_counter()
    info: dict[str, Any] = {"sizes": problem.sizes}
    red, lin = _reduce(problem, opts, info)
    info["reduce_seconds"] = time.perf_counter() - t0
    if red is None:
        cert = _linear_certificate(problem, lin)
        margin = verify_certificate(problem, cert)
        return SdpSolution(SdpStatus.INFEASIBLE, certificate=cert, margin=margin, message="inconsistent linear equalities", info=info)

    fh = open(opts.log_path, "w", newline="") if opts.log_path else None
    try:
        writer = None
        if fh is not None:
            writer = csv.writer(fh)
            writer.writerow(["iter", "mu", "primal_res", "dual_res", "gap"])
        out = _ipm(red, opts, writer)
    finally:
        if fh is not None:
            fh.close()
    info["solve_seconds"] = time.perf_counter() - t0
    status = out["status"]
    sol = SdpSolution(status, iterations=out["iterations"], message=out["message"], info=info)
    sol.residuals = {"primal": float(out["pres"]), "dual": float(out["dres"]), "gap": float(out["gap"])}

    if status is SdpStatus.OPTIMAL:
        y = red.bscale * (red.Z @ (out["x"] / out["tau"]))
        ok, eq_res, min_eig = _primal_check(problem, y, opts.feas_tol)
        sol.residuals.update(equality=eq_res, min_eig=min_eig)
        if not ok:
            sol.status = SdpStatus.UNKNOWN
            sol.message = f"converged but post-check failed (equality {eq_res:.2e}, min eigenvalue {min_eig:.2e})"
            return sol
        sol.y = y
        sol.objective_value = float(problem.c @ y)
        sol.info["dual_objective"] = float(red.cscale * red.bscale * out["dobj"])
    elif status is SdpStatus.UNKNOWN and "primal_x" in out:
        # typical when the feasible set has no interior: the dual optimum is not
        # attained, yet the primal iterates converge to a feasible point
        y = red.bscale * (red.Z @ out["primal_x"])
        ok, eq_res, min_eig = _primal_check(problem, y, opts.feas_tol)
        sol.residuals.update(equality=eq_res, min_eig=min_eig)
        if ok:
            sol.y = y
            sol.objective_value = float(problem.c @ y)
            sol.info["primal_feasible"] = True
    elif status is SdpStatus.INFEASIBLE:
        Xs = []
        for blk_full, keep, zi in zip(problem.psd_blocks, red.keeps, out["z"]):
            X = np.zeros((blk_full.size, blk_full.size))
            X[np.ix_(keep, keep)] = zi
            Xs.append(X)
        A_full, _ = equality_system(problem)
        lam = np.zeros(A_full.shape[0])
        if red.Ur.size:
            lam[: problem.A.shape[0]] = red.Ur @ out["y"]
        lam = _fold(A_full, lam, _adjoint(problem.psd_blocks, Xs, problem.num_moments))
        cert = InfeasibilityCertificate(tuple(Xs), lam)
        sol.certificate = cert
        sol.margin = verify_certificate(problem, cert)
        if not sol.margin > 0:
            sol.status = SdpStatus.UNKNOWN
            sol.message = f"infeasibility ray did not verify (margin {sol.margin:.3e})"
    return sol
