"""Stepping a constraint system through time.

Each step is a Newton solve warm-started from the previous pose, which is
what keeps the assembly on one branch: the nearest solution to the last
pose is the same circuit of the mechanism.  During a run the initial guess
is improved to a secant extrapolation of the last two poses, a first-order
continuation predictor; it changes nothing away from singular zones and
keeps the branch stable when a trajectory passes close to a bifurcation
(e.g. a parallelogram moving through its collinear pose).

Step failures retry with a halved time step, up to 8 halvings.  A step that
still cannot be reached with bounded iterates is a lock (rocker limit); the
run then bisects the driver coordinate between the last good state and the
failed target so the reported blocking coordinate is tight, and halts at
the last reachable state.  A converged pose whose constraint Jacobian has
condition estimate above 1e12 halts the run as singular.  Both halts are
graceful; the distinction is diagnostic.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import (InvalidInput, NoGround, NotSimulatable, Overdriven,
                      Underdriven)
from ..mechanism import JointKind, Mechanism, TrackedPoint
from .system import ConstraintSystem

TOL_FRACTION = 1e-9          # Ok requires |F| <= this fraction of scene diagonal
POLISH_FRACTION = 1e-13      # Newton keeps iterating down to here when it can
MAX_ITERATIONS = 50
MAX_HALVINGS = 8
COND_LIMIT = 1e12
LOCK_TOLERANCE = 1e-9        # driver-coordinate width of the lock bracket


class Status(enum.Enum):
    OK = "ok"
    LOCKED = "locked"
    SINGULAR = "singular"
    DIVERGED = "diverged"


@dataclass
class SimState:
    """One solved configuration: time, pose vector, solve diagnostics and
    the driver coordinates this pose satisfies."""

    t: float
    q: np.ndarray
    status: Status
    iterations: int
    residual_norm: float
    targets: np.ndarray

    def copy(self) -> "SimState":
        return replace(self, q=self.q.copy(), targets=self.targets.copy())


@dataclass
class Trace:
    """Sampled world path of one link-local point."""

    id: int
    link: int
    local: np.ndarray
    samples: list[tuple[float, float, float]] = field(default_factory=list)
    closed: bool = False


@dataclass
class RunResult:
    states: list[SimState]
    traces: list[Trace]
    status: Status
    blocking: dict[int, float] | None = None

    @property
    def final(self) -> SimState:
        return self.states[-1]

    @property
    def steps(self) -> int:
        return len(self.states) - 1


def assemble(mech: Mechanism, kernel=None) -> ConstraintSystem:
    """Validate and pack a mechanism instance for simulation.

    Requires a ground link, at least one degree of freedom, and exactly as
    many drivers as the mobility; the resulting system is square.
    """
    if mech.ground_link() is None:
        raise NoGround(f"instance {mech.id} has no ground link")
    mobility = mech.mobility()
    if mobility < 1:
        raise NotSimulatable(mobility)
    drivers = mech.driver_joints()
    if len(drivers) < mobility:
        raise Underdriven(mobility, len(drivers))
    if len(drivers) > mobility:
        raise Overdriven(mobility, len(drivers))
    system = ConstraintSystem(mech, kernel=kernel)
    assert system.neq == system.nq, "driver count equals mobility, so the system is square"
    return system


def initial_state(system: ConstraintSystem) -> SimState:
    """The build pose at t=0.  Satisfies all constraints by construction."""
    q = np.zeros(system.nq)
    targets = np.zeros(len(system.rates))
    rn = float(np.linalg.norm(system.residual(q, targets=targets)))
    return SimState(0.0, q, Status.OK, 0, rn, targets)


def _attempt(system: ConstraintSystem, q_from: np.ndarray, targets: np.ndarray):
    """Single Newton solve.  Returns (ok, diverged, q, iters, resnorm)."""
    code, q, iters, rn = system.attempt(
        q_from, targets,
        tol_accept=TOL_FRACTION * system.scale,
        tol_polish=POLISH_FRACTION * system.scale,
        max_iter=MAX_ITERATIONS)
    return code == 0, code == 2, q, iters, rn


def solve_step(system: ConstraintSystem, state: SimState, t_next: float,
               guess: np.ndarray | None = None) -> SimState:
    """Advance one step to the driver targets implied by ``t_next``."""
    return advance_to_targets(system, state, system.targets_at(t_next), t_next, guess)


def advance_to_targets(system: ConstraintSystem, state: SimState,
                       targets: np.ndarray, t_next: float,
                       guess: np.ndarray | None = None) -> SimState:
    """Newton step toward explicit driver targets, with step bisection.

    On failure of the full step, the step is retried in halves (up to
    ``MAX_HALVINGS``), marching sub-steps from the last reachable pose.  The
    returned state is Ok at the requested targets, Singular at a converged
    but ill-conditioned pose, or Locked/Diverged positioned at the furthest
    reachable sub-step.
    """
    targets = np.asarray(targets, dtype=np.float64)
    ok, diverged, q, iters, rn = _attempt(
        system, state.q if guess is None else guess, targets)
    if ok:
        return _classify_converged(system, t_next, q, iters, rn, targets)

    cur_q = state.q
    cur_t = state.t
    cur_tg = state.targets
    cur_rn = state.residual_norm
    total_iters = iters
    saw_divergence = diverged
    frac = 1.0
    level = 0
    reached = 0.0
    span_tg = targets - state.targets
    span_t = t_next - state.t
    while reached < 1.0:
        while True:
            step_frac = min(frac, 1.0 - reached)
            trial = reached + step_frac
            trial_tg = state.targets + span_tg * trial
            ok, diverged, q, iters, rn = _attempt(system, cur_q, trial_tg)
            total_iters += iters
            if ok:
                break
            saw_divergence = saw_divergence or diverged
            level += 1
            frac *= 0.5
            if level > MAX_HALVINGS:
                status = Status.DIVERGED if saw_divergence else Status.LOCKED
                return SimState(cur_t, cur_q.copy(), status, total_iters,
                                cur_rn, cur_tg.copy())
        reached = trial
        cur_q, cur_rn = q, rn
        cur_t = state.t + span_t * reached
        cur_tg = trial_tg
    return _classify_converged(system, t_next, cur_q, total_iters, cur_rn, targets)


def _classify_converged(system, t, q, iters, rn, targets) -> SimState:
    cond = system.condition_number(q)
    status = Status.OK if cond <= COND_LIMIT else Status.SINGULAR
    return SimState(float(t), q, status, iters, rn, targets.copy())


def localize_limit(system: ConstraintSystem, ok_state: SimState,
                   fail_targets: np.ndarray, t_fail: float,
                   tolerance: float = LOCK_TOLERANCE) -> SimState | None:
    """Bisect the driver coordinate toward an unreachable target.

    Returns a refined Ok state whose targets are within ``tolerance`` of the
    motion limit, or None when no progress beyond ``ok_state`` is possible.
    """
    lo_q = ok_state.q
    lo_tg = ok_state.targets.astype(np.float64)
    hi_tg = np.asarray(fail_targets, dtype=np.float64)
    lo_t, hi_t = ok_state.t, t_fail
    iters, rn = 0, ok_state.residual_norm
    progressed = False
    guard = 0
    while float(np.max(np.abs(hi_tg - lo_tg))) > tolerance and guard < 80:
        guard += 1
        mid_tg = 0.5 * (lo_tg + hi_tg)
        mid_t = 0.5 * (lo_t + hi_t)
        ok, _, q, its, r = _attempt(system, lo_q, mid_tg)
        if ok:
            lo_q, lo_tg, lo_t = q, mid_tg, mid_t
            iters, rn = its, r
            progressed = True
        else:
            hi_tg, hi_t = mid_tg, mid_t
    if not progressed:
        return None
    return SimState(float(lo_t), lo_q, Status.OK, iters, rn, lo_tg)


def _make_traces(system: ConstraintSystem, points) -> list[Trace]:
    traces = []
    for i, p in enumerate(points or ()):
        if isinstance(p, Trace):
            traces.append(p)  # caller-owned trace, appended to in place
        elif isinstance(p, TrackedPoint):
            traces.append(Trace(p.id, p.link, np.asarray(p.local, dtype=np.float64)))
        else:
            link, local = p
            traces.append(Trace(i + 1, link, np.asarray(local, dtype=np.float64)))
    return traces


def _sample(system: ConstraintSystem, traces: list[Trace], state: SimState,
            skip_duplicate: bool = False) -> None:
    for tr in traces:
        w = system.world_point(state.q, tr.link, tr.local)
        sample = (float(state.t), float(w[0]), float(w[1]))
        # persistent traces already end with the pose a resumed march starts from
        if skip_duplicate and tr.samples and tr.samples[-1] == sample:
            continue
        tr.samples.append(sample)


def _finish(system, states, traces, status, blocking) -> RunResult:
    if status is Status.OK and len(system.rates):
        advance = np.abs(states[-1].targets - states[0].targets)
        full_turn = False
        for i, jid in enumerate(system.driver_joint_ids):
            j = system.mechanism.scene.joints[jid]
            if j.kind is JointKind.REVOLUTE and advance[i] >= 2 * math.pi * (1 - 1e-9):
                full_turn = True
        if full_turn:
            for tr in traces:
                tr.closed = True
    return RunResult(states, traces, status, blocking)


def _march(system: ConstraintSystem, state: SimState, schedule,
           traces: list[Trace], on_state=None) -> RunResult:
    """Drive through a schedule of (t, targets) waypoints.

    Keeps the last two Ok poses for the secant predictor.  Appends every Ok
    state; on a lock, refines the limit before halting.
    """
    states = [state]
    _sample(system, traces, state, skip_duplicate=True)
    if on_state:
        on_state(state)
    prev2: SimState | None = None
    prev = state
    for t_next, targets in schedule:
        guess = None
        if prev2 is not None:
            guess = 2.0 * prev.q - prev2.q
        st = advance_to_targets(system, prev, targets, t_next, guess)
        if st.status is Status.OK:
            states.append(st)
            _sample(system, traces, st)
            if on_state:
                on_state(st)
            prev2, prev = prev, st
            continue
        if st.status is Status.LOCKED:
            base = st if st.t != prev.t else prev
            refined = localize_limit(system, base, np.asarray(targets, dtype=np.float64), t_next)
            if refined is not None:
                states.append(refined)
                _sample(system, traces, refined)
                if on_state:
                    on_state(refined)
            blocking = {
                jid: float(states[-1].targets[i])
                for i, jid in enumerate(system.driver_joint_ids)
            }
            return _finish(system, states, traces, Status.LOCKED, blocking)
        return _finish(system, states, traces, st.status, None)
    return _finish(system, states, traces, Status.OK, None)


def default_dt(system: ConstraintSystem, duration: float) -> float:
    """One degree of driver motion per step for revolute drivers; otherwise
    1/360 of the requested duration."""
    dts = []
    for i, jid in enumerate(system.driver_joint_ids):
        j = system.mechanism.scene.joints[jid]
        rate = abs(float(system.rates[i]))
        if j.kind is JointKind.REVOLUTE and rate > 0:
            dts.append(math.radians(1.0) / rate)
    if dts:
        return min(dts)
    return duration / 360.0


def run(system: ConstraintSystem, state: SimState, duration: float,
        dt: float | None = None, trace_points=None, on_state=None) -> RunResult:
    """March the drivers forward for ``duration`` seconds of driver time.

    Driver targets advance from the state's current coordinates at the
    configured rates, so a run resumes cleanly after a scrub.  Ends early
    with Locked/Singular/Diverged status when the motion cannot continue.
    """
    if duration <= 0:
        raise InvalidInput("run duration must be positive")
    if dt is None:
        dt = default_dt(system, duration)
    if dt <= 0:
        raise InvalidInput("time step must be positive")
    n = max(1, int(round(duration / dt)))
    traces = _make_traces(system, trace_points)

    def schedule():
        for k in range(1, n + 1):
            tk = state.t + k * dt
            yield tk, state.targets + system.rates * (k * dt)

    return _march(system, state, schedule(), traces, on_state)


def scrub(system: ConstraintSystem, state: SimState, joint_id: int,
          target: float, trace_points=None, on_state=None) -> RunResult:
    """Drag one driver coordinate to ``target`` while time stands still.

    The travel is split into sub-steps no larger than 5 degrees (revolute)
    and no larger than 5% of the total travel, so the continuation cannot
    jump branches on large drags.  Hitting a motion limit mid-drag locks at
    the limit exactly like a run.
    """
    didx = system.driver_index(joint_id)
    joint = system.mechanism.scene.joints[joint_id]
    travel = float(target) - float(state.targets[didx])
    traces = _make_traces(system, trace_points)
    if travel == 0.0:
        return RunResult([state], traces, Status.OK)
    cap = 0.05 * abs(travel)
    if joint.kind is JointKind.REVOLUTE:
        cap = min(cap, math.radians(5.0))
    n = max(1, int(math.ceil(abs(travel) / cap)))

    def schedule():
        for k in range(1, n + 1):
            tg = state.targets.copy()
            tg[didx] += travel * (k / n)
            yield state.t, tg

    return _march(system, state, schedule(), traces, on_state)


def reassemble(system: ConstraintSystem, state: SimState) -> SimState:
    """Re-close the loops at the state's driver coordinates.

    Used after geometry edits (joint moves) that leave the recorded pose
    slightly inconsistent; Newton from the old pose finds the nearby
    configuration of the same branch.
    """
    ok, _, q, iters, rn = _attempt(system, state.q, state.targets)
    if not ok:
        raise InvalidInput("mechanism cannot be re-assembled at the current pose")
    return _classify_converged(system, state.t, q, iters, rn, state.targets)
