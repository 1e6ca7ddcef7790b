"""Packing a mechanism into flat constraint arrays.

Unknowns: one (x, y, theta) triple per non-ground link, ordered by link id
ascending; the ground link is pinned at the identity pose.  Equations, in
order: two per joint (revolute: anchor co-location; prismatic: relative
angle lock + anchor-on-line), then one per driver (driven coordinate equals
its build value plus rate * t).  With driver count equal to mobility the
system is square.

Driver coordinates are relative to the build pose: a revolute driver's
coordinate is theta_b - theta_a (zero at build), a prismatic driver's is the
axis-projection of (anchor_a_world - anchor_b_world).  Positive revolute
rate turns link b counter-clockwise relative to link a; positive prismatic
rate advances link a along +axis relative to link b.
"""

from __future__ import annotations

import numpy as np

from .. import geometry
from ..errors import UnknownEntity
from ..mechanism import JointKind, Mechanism
from . import backend


class ConstraintSystem:
    """Flat, kernel-ready form of one mechanism instance."""

    def __init__(self, mech: Mechanism, kernel=None):
        self.mechanism = mech
        self.kernel = kernel if kernel is not None else backend.kernel()

        scene = mech.scene
        ground = mech.ground_link()
        if ground is None:
            raise ValueError("cannot pack a mechanism without a ground link")
        self.ground_id = ground.id
        self.movable: list[int] = [lid for lid in mech.link_ids if lid != ground.id]
        self._index = {lid: i for i, lid in enumerate(self.movable)}

        joints = sorted(mech.joints(), key=lambda j: j.id)
        self.joint_ids = [j.id for j in joints]
        nj = len(joints)
        self.jkind = np.zeros(nj, dtype=np.int32)
        self.ja = np.zeros(nj, dtype=np.int32)
        self.jb = np.zeros(nj, dtype=np.int32)
        self.pax = np.zeros(nj)
        self.pay = np.zeros(nj)
        self.pbx = np.zeros(nj)
        self.pby = np.zeros(nj)
        self.axx = np.zeros(nj)
        self.axy = np.zeros(nj)
        self.rel0 = np.zeros(nj)
        for k, j in enumerate(joints):
            self.jkind[k] = 0 if j.kind is JointKind.REVOLUTE else 1
            self.ja[k] = self._index.get(j.a, -1)
            self.jb[k] = self._index.get(j.b, -1)
            self.pax[k], self.pay[k] = j.anchor_a
            self.pbx[k], self.pby[k] = j.anchor_b
            if j.axis_b is not None:
                self.axx[k], self.axy[k] = j.axis_b
            # reference poses are identity at build, so locked relative
            # angles and driver build values are zero
            self.rel0[k] = 0.0

        drivers = [j for j in joints if j.driver is not None]
        self.driver_joint_ids = [j.id for j in drivers]
        self.djnt = np.array(
            [self.joint_ids.index(j.id) for j in drivers], dtype=np.int32)
        self.rates = np.array([j.driver.rate for j in drivers], dtype=np.float64)

        self.nq = 3 * len(self.movable)
        self.neq = 2 * nj + len(drivers)
        scale = mech.scene_diagonal()
        self.scale = scale if scale > 0 else 1.0

    # -- evaluation --------------------------------------------------------

    def _kernel_args(self):
        return (self.jkind, self.ja, self.jb, self.pax, self.pay,
                self.pbx, self.pby, self.axx, self.axy, self.rel0, self.djnt)

    def targets_at(self, t: float) -> np.ndarray:
        return self.rates * t

    def residual(self, q: np.ndarray, t: float | None = None,
                 targets: np.ndarray | None = None) -> np.ndarray:
        if targets is None:
            targets = self.targets_at(0.0 if t is None else t)
        out = np.empty(self.neq)
        self.kernel.eval_residual(np.asarray(q, dtype=np.float64), targets,
                                  *self._kernel_args(), out)
        return out

    def jacobian(self, q: np.ndarray) -> np.ndarray:
        out = np.zeros((self.neq, self.nq))
        self.kernel.eval_jacobian(np.asarray(q, dtype=np.float64),
                                  *self._kernel_args(), out)
        return out

    def condition_number(self, q: np.ndarray) -> float:
        if self.nq == 0:
            return 1.0
        return float(np.linalg.cond(self.jacobian(q)))

    def attempt(self, q_from: np.ndarray, targets: np.ndarray,
                tol_accept: float, tol_polish: float, max_iter: int):
        """One Newton solve from ``q_from``; returns (code, q, iters, resnorm)
        with code 0 converged / 1 stalled / 2 diverged."""
        q = np.array(q_from, dtype=np.float64)
        code, iters, rn = self.kernel.newton(
            q, np.asarray(targets, dtype=np.float64), *self._kernel_args(),
            tol_accept, tol_polish, max_iter)
        return code, q, iters, rn

    # -- pose helpers -------------------------------------------------------

    def pose_of(self, q: np.ndarray, link_id: int) -> tuple[float, float, float]:
        if link_id == self.ground_id:
            return (0.0, 0.0, 0.0)
        try:
            i = self._index[link_id]
        except KeyError:
            raise UnknownEntity(f"link {link_id} is not part of this mechanism") from None
        return (float(q[3 * i]), float(q[3 * i + 1]), float(q[3 * i + 2]))

    def poses(self, q: np.ndarray) -> dict[int, tuple[float, float, float]]:
        out = {self.ground_id: (0.0, 0.0, 0.0)}
        for lid in self.movable:
            out[lid] = self.pose_of(q, lid)
        return out

    def world_point(self, q: np.ndarray, link_id: int, local) -> np.ndarray:
        return geometry.transform_point(self.pose_of(q, link_id), local)

    def joint_world_anchor(self, q: np.ndarray, joint_id: int) -> np.ndarray:
        j = self.mechanism.scene.joints[joint_id]
        return self.world_point(q, j.a, j.anchor_a)

    def driver_index(self, joint_id: int) -> int:
        try:
            return self.driver_joint_ids.index(joint_id)
        except ValueError:
            raise UnknownEntity(f"joint {joint_id} has no driver") from None
