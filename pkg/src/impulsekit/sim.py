"""Event-aligned simulation of impulsive systems.

The flow is integrated with classical fixed-step RK4 on each inter-impulse
interval; the last step of an interval is shortened so the integrator lands
exactly on the impulse time.  There the pre-jump state is recorded, the
owning jump map is applied to it (same arithmetic as ``exprlang.eval``, no
interpolation), and integration restarts from the post-jump state.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import timegrid
from . import _kernels as K
from .errors import DomainError
from .model import InputSignal

__all__ = ["Trajectory", "simulate", "check_iss_envelope"]

TAG_FLOW = "flow"
TAG_PRE = "pre"


def _post_tag(i):
    return "post:%d" % i


@dataclass
class Trajectory:
    """Sampled trajectory; rows are (t, tag, state).  At an impulse time the
    pre row and the post row carry the same t."""

    times: np.ndarray
    states: np.ndarray
    tags: list
    t0: float
    T: float
    aborted: bool = False
    abort_reason: str = ""

    def __len__(self):
        return len(self.tags)

    @property
    def n(self):
        return self.states.shape[1]

    @property
    def samples(self):
        return [
            (float(self.times[i]), self.states[i].copy(), self.tags[i])
            for i in range(len(self.tags))
        ]

    def final_state(self):
        return self.states[-1].copy()

    def at(self, t, post=True):
        """State at time t (post-jump row when both exist and post is set)."""
        idx = np.flatnonzero(np.abs(self.times - t) <= timegrid.TIME_TOL)
        if idx.size == 0:
            raise ValueError("no sample at t=%r" % t)
        return self.states[idx[-1] if post else idx[0]].copy()

    def to_csv(self, path=None):
        header = "t,tag," + ",".join("x%d" % (j + 1) for j in range(self.n))
        lines = [header]
        for i in range(len(self.tags)):
            cells = [repr(float(self.times[i])), self.tags[i]]
            cells.extend(repr(float(v)) for v in self.states[i])
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _segments(sys, T):
    """(start, end, jump index or None) pieces covering [t0, T]."""
    merged = timegrid.merge(sys.sequences, sys.t0, T)
    segs = []
    prev = sys.t0
    for t, idx in merged:
        segs.append((prev, t, idx))
        prev = t
    if T > prev:
        segs.append((prev, T, None))
    return segs, merged


def simulate(sys, x0, u=None, T=None, dt=1e-3):
    if T is None:
        raise ValueError("horizon T is required")
    if not (dt > 0.0):
        raise ValueError("dt must be positive")
    if T < sys.t0:
        raise ValueError("horizon end %r precedes t0 %r" % (T, sys.t0))
    if u is None:
        u = InputSignal.zero(sys.m)
    if u.m != sys.m:
        raise ValueError("input has dimension %d, system expects %d" % (u.m, sys.m))

    segs, merged = _segments(sys, T)
    times = [t for t, _ in merged]
    for a, b in zip(times, times[1:]):
        if dt > (b - a) * (1.0 + 1e-12):
            raise ValueError(
                "dt=%r exceeds the gap %r between impulse times %r and %r"
                % (dt, b - a, a, b)
            )

    x = np.ascontiguousarray(x0, dtype=np.float64)
    if x.shape != (sys.n,):
        raise ValueError("x0 has length %d, expected %d" % (x.size, sys.n))
    code, operand, offsets, stack_need = sys.flow.packed()

    out_times = [sys.t0]
    out_states = [x.copy()]
    tags = [TAG_FLOW]
    aborted = False
    reason = ""

    for a, b, jidx in segs:
        seglen = b - a
        n_steps = max(1, int(math.ceil(seglen / dt - 1e-12)))
        hs = np.full(n_steps, dt)
        hs[-1] = seglen - (n_steps - 1) * dt
        starts = a + dt * np.arange(n_steps)
        t_end = starts + hs
        t_end[-1] = b
        if sys.m:
            u_stages = np.empty((n_steps, 3, sys.m))
            u_stages[:, 0, :] = u.values_at(starts)
            u_stages[:, 1, :] = u.values_at(starts + 0.5 * hs)
            u_stages[:, 2, :] = u.values_at(t_end)
            u_stages[-1, 2, :] = u.left_limit(b)
            u_stages = np.ascontiguousarray(u_stages)
        else:
            u_stages = np.zeros((n_steps, 3, 0))

        rows, err, errstep = K.rk4_segment(
            code, operand, offsets, stack_need, x, hs, u_stages
        )
        if err != K.ERR_NONE:
            keep = max(0, int(errstep))
            out_times.extend(t_end[:keep])
            out_states.extend(rows[:keep])
            tags.extend([TAG_FLOW] * keep)
            aborted = True
            last_t = t_end[keep - 1] if keep else a
            reason = "flow integration failed near t=%r: %s" % (
                float(last_t), K.ERR_MESSAGES[err])
            break

        out_times.extend(t_end)
        out_states.extend(rows)
        tags.extend([TAG_FLOW] * n_steps)
        x = rows[-1].copy()

        if jidx is not None:
            tags[-1] = TAG_PRE
            u_minus = u.left_limit(b) if sys.m else np.zeros(0)
            rule = sys.jumps[jidx - 1]
            try:
                x_post = rule.map.eval(x, u_minus)
            except DomainError as exc:
                aborted = True
                reason = "jump map %d failed at t=%r: %s" % (jidx, float(b), exc)
                break
            if not np.all(np.isfinite(x_post)):
                aborted = True
                reason = "jump map %d produced non-finite state at t=%r" % (
                    jidx, float(b))
                break
            out_times.append(b)
            out_states.append(x_post)
            tags.append(_post_tag(jidx))
            x = np.ascontiguousarray(x_post)

    traj = Trajectory(
        times=np.array(out_times),
        states=np.vstack(out_states) if out_states else np.zeros((0, sys.n)),
        tags=tags,
        t0=sys.t0,
        T=T,
        aborted=aborted,
        abort_reason=reason,
    )
    return traj


def check_iss_envelope(traj, u, beta, gamma):
    """Check |x(t)| <= max{M |x(t0)| e^{-a (t-t0)}, gamma * sup |u|} at every
    sample.  Returns None when the envelope holds, else the first violation
    time.  beta is the pair (M, a); gamma is a linear coefficient.

    For expression inputs the running sup of |u| is approximated at the
    trajectory's own sample times; the other input kinds are handled exactly.
    """
    M, a = beta
    if M < 0 or not (a > 0) or gamma < 0:
        raise ValueError("need M >= 0, a > 0, gamma >= 0")
    if len(traj) == 0:
        return None
    t0 = traj.t0
    x0_norm = float(np.linalg.norm(traj.states[0]))
    norms = np.linalg.norm(traj.states, axis=1)

    if u is None or u.kind == "zero" or u.m == 0:
        sup_u = np.zeros(len(traj))
    elif u.kind == "constant":
        sup_u = np.full(len(traj), float(np.linalg.norm(u.constant)))
    elif u.kind == "piecewise":
        sup_u = np.array([u.sup_norm(t0, float(t)) for t in traj.times])
    else:
        vals = np.linalg.norm(u.values_at(traj.times), axis=1)
        sup_u = np.maximum.accumulate(vals)

    decay = M * x0_norm * np.exp(-a * (traj.times - t0))
    bound = np.maximum(decay, gamma * sup_u)
    bad = norms > bound + 1e-12 * (1.0 + bound)
    if np.any(bad):
        return float(traj.times[int(np.argmax(bad))])
    return None
