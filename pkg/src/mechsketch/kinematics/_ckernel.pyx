# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled constraint kernel.

Same contract as ``_pykernel``: residual layout, Jacobian entries and the
Newton policy are identical; only the execution is C.  The linear solve is
an in-place dense LU with partial pivoting, which is plenty for the system
sizes this package targets (tens of unknowns).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin, sqrt, isfinite, INFINITY

COMPILED = True

cdef int CONVERGED = 0
cdef int STALLED = 1
cdef int DIVERGED = 2

cdef double BLOWUP = 1e12


cdef inline void _gather(double[::1] q, int idx, double* x, double* y,
                         double* c, double* s) noexcept nogil:
    if idx < 0:
        x[0] = 0.0; y[0] = 0.0; c[0] = 1.0; s[0] = 0.0
    else:
        x[0] = q[3 * idx]
        y[0] = q[3 * idx + 1]
        c[0] = cos(q[3 * idx + 2])
        s[0] = sin(q[3 * idx + 2])


cdef void _residual(double[::1] q, double[::1] targets, int[::1] jkind,
                    int[::1] ja, int[::1] jb, double[::1] pax, double[::1] pay,
                    double[::1] pbx, double[::1] pby, double[::1] axx,
                    double[::1] axy, double[::1] rel0, int[::1] djnt,
                    double[::1] out) noexcept nogil:
    cdef int nj = jkind.shape[0]
    cdef int nd = djnt.shape[0]
    cdef int k, i, ia, ib, base
    cdef double xa, ya, ca, sa, xb, yb, cb, sb
    cdef double wax, way, wbx, wby, ta, tb, nx, ny, nwx, nwy, uwx, uwy
    for k in range(nj):
        ia = ja[k]; ib = jb[k]
        _gather(q, ia, &xa, &ya, &ca, &sa)
        _gather(q, ib, &xb, &yb, &cb, &sb)
        wax = xa + ca * pax[k] - sa * pay[k]
        way = ya + sa * pax[k] + ca * pay[k]
        wbx = xb + cb * pbx[k] - sb * pby[k]
        wby = yb + sb * pbx[k] + cb * pby[k]
        if jkind[k] == 0:
            out[2 * k] = wax - wbx
            out[2 * k + 1] = way - wby
        else:
            ta = q[3 * ia + 2] if ia >= 0 else 0.0
            tb = q[3 * ib + 2] if ib >= 0 else 0.0
            out[2 * k] = ta - tb - rel0[k]
            nx = -axy[k]; ny = axx[k]
            nwx = cb * nx - sb * ny
            nwy = sb * nx + cb * ny
            out[2 * k + 1] = nwx * (wax - wbx) + nwy * (way - wby)
    base = 2 * nj
    for i in range(nd):
        k = djnt[i]
        ia = ja[k]; ib = jb[k]
        if jkind[k] == 0:
            ta = q[3 * ia + 2] if ia >= 0 else 0.0
            tb = q[3 * ib + 2] if ib >= 0 else 0.0
            out[base + i] = tb - ta - targets[i]
        else:
            _gather(q, ia, &xa, &ya, &ca, &sa)
            _gather(q, ib, &xb, &yb, &cb, &sb)
            wax = xa + ca * pax[k] - sa * pay[k]
            way = ya + sa * pax[k] + ca * pay[k]
            wbx = xb + cb * pbx[k] - sb * pby[k]
            wby = yb + sb * pbx[k] + cb * pby[k]
            uwx = cb * axx[k] - sb * axy[k]
            uwy = sb * axx[k] + cb * axy[k]
            out[base + i] = uwx * (wax - wbx) + uwy * (way - wby) - targets[i]


cdef void _jacobian(double[::1] q, int[::1] jkind, int[::1] ja, int[::1] jb,
                    double[::1] pax, double[::1] pay, double[::1] pbx,
                    double[::1] pby, double[::1] axx, double[::1] axy,
                    double[::1] rel0, int[::1] djnt,
                    double[:, ::1] out) noexcept nogil:
    cdef int nj = jkind.shape[0]
    cdef int nd = djnt.shape[0]
    cdef int k, i, ia, ib, r, base
    cdef double xa, ya, ca, sa, xb, yb, cb, sb
    cdef double wax, way, wbx, wby, dx, dy
    cdef double nx, ny, nwx, nwy, dnx, dny, ux, uy, uwx, uwy, dux, duy
    out[:, :] = 0.0
    for k in range(nj):
        ia = ja[k]; ib = jb[k]
        _gather(q, ia, &xa, &ya, &ca, &sa)
        _gather(q, ib, &xb, &yb, &cb, &sb)
        r = 2 * k
        if jkind[k] == 0:
            if ia >= 0:
                out[r, 3 * ia] = 1.0
                out[r, 3 * ia + 2] = -sa * pax[k] - ca * pay[k]
                out[r + 1, 3 * ia + 1] = 1.0
                out[r + 1, 3 * ia + 2] = ca * pax[k] - sa * pay[k]
            if ib >= 0:
                out[r, 3 * ib] = -1.0
                out[r, 3 * ib + 2] = sb * pbx[k] + cb * pby[k]
                out[r + 1, 3 * ib + 1] = -1.0
                out[r + 1, 3 * ib + 2] = -(cb * pbx[k] - sb * pby[k])
        else:
            if ia >= 0:
                out[r, 3 * ia + 2] = 1.0
            if ib >= 0:
                out[r, 3 * ib + 2] = -1.0
            nx = -axy[k]; ny = axx[k]
            nwx = cb * nx - sb * ny
            nwy = sb * nx + cb * ny
            wax = xa + ca * pax[k] - sa * pay[k]
            way = ya + sa * pax[k] + ca * pay[k]
            wbx = xb + cb * pbx[k] - sb * pby[k]
            wby = yb + sb * pbx[k] + cb * pby[k]
            dx = wax - wbx; dy = way - wby
            if ia >= 0:
                out[r + 1, 3 * ia] = nwx
                out[r + 1, 3 * ia + 1] = nwy
                out[r + 1, 3 * ia + 2] = (nwx * (-sa * pax[k] - ca * pay[k])
                                          + nwy * (ca * pax[k] - sa * pay[k]))
            if ib >= 0:
                dnx = -sb * nx - cb * ny
                dny = cb * nx - sb * ny
                out[r + 1, 3 * ib] = -nwx
                out[r + 1, 3 * ib + 1] = -nwy
                out[r + 1, 3 * ib + 2] = (dnx * dx + dny * dy
                                          - nwx * (-sb * pbx[k] - cb * pby[k])
                                          - nwy * (cb * pbx[k] - sb * pby[k]))
    base = 2 * nj
    for i in range(nd):
        k = djnt[i]
        ia = ja[k]; ib = jb[k]
        r = base + i
        if jkind[k] == 0:
            if ia >= 0:
                out[r, 3 * ia + 2] = -1.0
            if ib >= 0:
                out[r, 3 * ib + 2] = 1.0
        else:
            _gather(q, ia, &xa, &ya, &ca, &sa)
            _gather(q, ib, &xb, &yb, &cb, &sb)
            ux = axx[k]; uy = axy[k]
            uwx = cb * ux - sb * uy
            uwy = sb * ux + cb * uy
            wax = xa + ca * pax[k] - sa * pay[k]
            way = ya + sa * pax[k] + ca * pay[k]
            wbx = xb + cb * pbx[k] - sb * pby[k]
            wby = yb + sb * pbx[k] + cb * pby[k]
            dx = wax - wbx; dy = way - wby
            if ia >= 0:
                out[r, 3 * ia] = uwx
                out[r, 3 * ia + 1] = uwy
                out[r, 3 * ia + 2] = (uwx * (-sa * pax[k] - ca * pay[k])
                                      + uwy * (ca * pax[k] - sa * pay[k]))
            if ib >= 0:
                dux = -sb * ux - cb * uy
                duy = cb * ux - sb * uy
                out[r, 3 * ib] = -uwx
                out[r, 3 * ib + 1] = -uwy
                out[r, 3 * ib + 2] = (dux * dx + duy * dy
                                      - uwx * (-sb * pbx[k] - cb * pby[k])
                                      - uwy * (cb * pbx[k] - sb * pby[k]))


cdef int _lu_solve(double[:, ::1] A, double[::1] b, int n,
                   int[::1] piv, double[::1] x) noexcept nogil:
    """In-place LU with partial pivoting; returns 0 on success, 1 singular."""
    cdef int i, j, k, p, tmp
    cdef double maxv, v, factor
    for i in range(n):
        piv[i] = i
    for k in range(n):
        p = k
        maxv = A[k, k]
        if maxv < 0: maxv = -maxv
        for i in range(k + 1, n):
            v = A[i, k]
            if v < 0: v = -v
            if v > maxv:
                maxv = v; p = i
        if maxv == 0.0 or not isfinite(maxv):
            return 1
        if p != k:
            for j in range(n):
                v = A[k, j]; A[k, j] = A[p, j]; A[p, j] = v
            v = b[k]; b[k] = b[p]; b[p] = v
            tmp = piv[k]; piv[k] = piv[p]; piv[p] = tmp
        for i in range(k + 1, n):
            factor = A[i, k] / A[k, k]
            A[i, k] = factor
            for j in range(k + 1, n):
                A[i, j] -= factor * A[k, j]
            b[i] -= factor * b[k]
    for i in range(n - 1, -1, -1):
        v = b[i]
        for j in range(i + 1, n):
            v -= A[i, j] * x[j]
        x[i] = v / A[i, i]
        if not isfinite(x[i]):
            return 1
    return 0


def eval_residual(q, targets, jkind, ja, jb, pax, pay, pbx, pby, axx, axy,
                  rel0, djnt, out):
    _residual(q, targets, jkind, ja, jb, pax, pay, pbx, pby, axx, axy,
              rel0, djnt, out)


def eval_jacobian(q, jkind, ja, jb, pax, pay, pbx, pby, axx, axy, rel0,
                  djnt, out):
    _jacobian(q, jkind, ja, jb, pax, pay, pbx, pby, axx, axy, rel0, djnt, out)


def newton(double[::1] q, double[::1] targets, int[::1] jkind, int[::1] ja,
           int[::1] jb, double[::1] pax, double[::1] pay, double[::1] pbx,
           double[::1] pby, double[::1] axx, double[::1] axy,
           double[::1] rel0, int[::1] djnt, double tol_accept,
           double tol_polish, int max_iter):
    """Solve F(q) = 0 in place.  Returns (code, iterations, residual_norm)."""
    cdef int nj = jkind.shape[0]
    cdef int nd = djnt.shape[0]
    cdef int neq = 2 * nj + nd
    cdef int nq = q.shape[0]
    cdef cnp.ndarray F_arr = np.empty(neq)
    cdef cnp.ndarray J_arr = np.zeros((neq, nq))
    cdef cnp.ndarray x_arr = np.empty(nq)
    cdef cnp.ndarray piv_arr = np.empty(neq, dtype=np.int32)
    cdef double[::1] F = F_arr
    cdef double[:, ::1] J = J_arr
    cdef double[::1] x = x_arr
    cdef int[::1] piv = piv_arr
    cdef double prev = INFINITY
    cdef double rn = INFINITY
    cdef double acc
    cdef int stall = 0
    cdef int it = 0
    cdef int i, fail
    cdef int code = -1
    if neq != nq:
        raise ValueError(f"system is not square: {neq} equations, {nq} unknowns")
    for it in range(max_iter + 1):
        _residual(q, targets, jkind, ja, jb, pax, pay, pbx, pby,
                  axx, axy, rel0, djnt, F)
        acc = 0.0
        for i in range(neq):
            acc += F[i] * F[i]
        rn = sqrt(acc)
        if not isfinite(rn) or rn > BLOWUP:
            code = DIVERGED
            break
        if rn <= tol_polish:
            code = CONVERGED
            break
        if rn >= prev * 0.999:
            stall += 1
            if stall >= 3:
                code = CONVERGED if rn <= tol_accept else STALLED
                break
        else:
            stall = 0
        if it == max_iter:
            break
        _jacobian(q, jkind, ja, jb, pax, pay, pbx, pby, axx, axy,
                  rel0, djnt, J)
        fail = _lu_solve(J, F, neq, piv, x)
        if fail:
            code = CONVERGED if rn <= tol_accept else STALLED
            break
        for i in range(nq):
            q[i] -= x[i]
        prev = rn
    if code < 0:
        code = CONVERGED if rn <= tol_accept else STALLED
    return code, it, rn
