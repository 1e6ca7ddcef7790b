"""Pure-Python constraint kernel (numpy).

Fallback implementation of the hot evaluation/solve path; the compiled
kernel in ``_ckernel`` mirrors these semantics exactly.  Residual layout and
Newton policy are shared contracts, documented in :mod:`.system`.

Newton: full steps, dense LU solve, convergence on the residual 2-norm.
Iteration stops early at ``tol_polish`` (machine-level polish) and reports
success as long as the final norm is at or below ``tol_accept``.  A stall
(three consecutive non-improving iterations) or a singular linear solve
ends the iteration; blow-ups report divergence.
"""

from __future__ import annotations

import math

import numpy as np

COMPILED = False

_CONVERGED = 0
_STALLED = 1
_DIVERGED = 2

_BLOWUP = 1e12


def _gather(q, idx):
    """Pose components for one joint side; ground (-1) is the identity."""
    if idx < 0:
        return 0.0, 0.0, 1.0, 0.0  # x, y, cos, sin
    x = q[3 * idx]
    y = q[3 * idx + 1]
    th = q[3 * idx + 2]
    return x, y, math.cos(th), math.sin(th)


def eval_residual(q, targets, jkind, ja, jb, pax, pay, pbx, pby, axx, axy,
                  rel0, djnt, out):
    nj = len(jkind)
    for k in range(nj):
        ia, ib = ja[k], jb[k]
        xa, ya, ca, sa = _gather(q, ia)
        xb, yb, cb, sb = _gather(q, ib)
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
            nx, ny = -axy[k], axx[k]
            nwx = cb * nx - sb * ny
            nwy = sb * nx + cb * ny
            out[2 * k + 1] = nwx * (wax - wbx) + nwy * (way - wby)
    base = 2 * nj
    for i in range(len(djnt)):
        k = djnt[i]
        ia, ib = ja[k], jb[k]
        if jkind[k] == 0:
            ta = q[3 * ia + 2] if ia >= 0 else 0.0
            tb = q[3 * ib + 2] if ib >= 0 else 0.0
            out[base + i] = tb - ta - targets[i]
        else:
            xa, ya, ca, sa = _gather(q, ia)
            xb, yb, cb, sb = _gather(q, ib)
            wax = xa + ca * pax[k] - sa * pay[k]
            way = ya + sa * pax[k] + ca * pay[k]
            wbx = xb + cb * pbx[k] - sb * pby[k]
            wby = yb + sb * pbx[k] + cb * pby[k]
            uwx = cb * axx[k] - sb * axy[k]
            uwy = sb * axx[k] + cb * axy[k]
            out[base + i] = uwx * (wax - wbx) + uwy * (way - wby) - targets[i]


def eval_jacobian(q, jkind, ja, jb, pax, pay, pbx, pby, axx, axy, rel0,
                  djnt, out):
    out[:, :] = 0.0
    nj = len(jkind)
    for k in range(nj):
        ia, ib = ja[k], jb[k]
        xa, ya, ca, sa = _gather(q, ia)
        xb, yb, cb, sb = _gather(q, ib)
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
            nx, ny = -axy[k], axx[k]
            nwx = cb * nx - sb * ny
            nwy = sb * nx + cb * ny
            wax = xa + ca * pax[k] - sa * pay[k]
            way = ya + sa * pax[k] + ca * pay[k]
            wbx = xb + cb * pbx[k] - sb * pby[k]
            wby = yb + sb * pbx[k] + cb * pby[k]
            dx, dy = wax - wbx, way - wby
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
    for i in range(len(djnt)):
        k = djnt[i]
        ia, ib = ja[k], jb[k]
        r = base + i
        if jkind[k] == 0:
            if ia >= 0:
                out[r, 3 * ia + 2] = -1.0
            if ib >= 0:
                out[r, 3 * ib + 2] = 1.0
        else:
            xa, ya, ca, sa = _gather(q, ia)
            xb, yb, cb, sb = _gather(q, ib)
            ux, uy = axx[k], axy[k]
            uwx = cb * ux - sb * uy
            uwy = sb * ux + cb * uy
            wax = xa + ca * pax[k] - sa * pay[k]
            way = ya + sa * pax[k] + ca * pay[k]
            wbx = xb + cb * pbx[k] - sb * pby[k]
            wby = yb + sb * pbx[k] + cb * pby[k]
            dx, dy = wax - wbx, way - wby
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


def newton(q, targets, jkind, ja, jb, pax, pay, pbx, pby, axx, axy, rel0,
           djnt, tol_accept, tol_polish, max_iter):
    """Solve F(q) = 0 in place.  Returns (code, iterations, residual_norm)."""
    neq = 2 * len(jkind) + len(djnt)
    nq = len(q)
    if neq != nq:
        raise ValueError(f"system is not square: {neq} equations, {nq} unknowns")
    F = np.empty(neq)
    J = np.zeros((neq, nq))
    prev = math.inf
    stall = 0
    rn = math.inf
    it = 0
    for it in range(max_iter + 1):
        eval_residual(q, targets, jkind, ja, jb, pax, pay, pbx, pby,
                      axx, axy, rel0, djnt, F)
        rn = float(np.linalg.norm(F))
        if not math.isfinite(rn) or rn > _BLOWUP:
            return _DIVERGED, it, rn
        if rn <= tol_polish:
            return _CONVERGED, it, rn
        if rn >= prev * 0.999:
            stall += 1
            if stall >= 3:
                code = _CONVERGED if rn <= tol_accept else _STALLED
                return code, it, rn
        else:
            stall = 0
        if it == max_iter:
            break
        eval_jacobian(q, jkind, ja, jb, pax, pay, pbx, pby, axx, axy,
                      rel0, djnt, J)
        try:
            delta = np.linalg.solve(J, F)
        except np.linalg.LinAlgError:
            code = _CONVERGED if rn <= tol_accept else _STALLED
            return code, it, rn
        if not np.isfinite(delta).all():
            code = _CONVERGED if rn <= tol_accept else _STALLED
            return code, it, rn
        q -= delta
        prev = rn
    code = _CONVERGED if rn <= tol_accept else _STALLED
    return code, it, rn
