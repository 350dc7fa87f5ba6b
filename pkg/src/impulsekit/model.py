"""System models: flow + per-sequence jump maps, input signals, subsystems.

State conventions: trajectories are right-continuous with left limits.  The
flow ``x' = f(x, u)`` acts between impulses; at a time of sequence i the state
is reset to ``g_i(x^-, u^-)``.  A two-subsystem interconnection addresses the
stacked state everywhere: subsystem expressions are written over
``x1..x_{n1}`` (first subsystem) and ``x_{n1+1}..x_{n1+n2}`` (second), each
with its own inputs ``u1..u_{m_i}``.
"""

import bisect
from dataclasses import dataclass, field

import numpy as np

from . import exprlang, timegrid
from .errors import ConfigError, DisjointnessError, DomainError
from .exprlang import Expr, Var, VectorExpr

__all__ = [
    "JumpRule",
    "ImpulsiveSystem",
    "InputSignal",
    "Subsystem",
    "validate",
    "interconnect",
]


@dataclass(frozen=True)
class JumpRule:
    """One impulse sequence together with its jump map."""

    sequence: timegrid.ImpulseSequence
    map: VectorExpr
    slot: str = ""


@dataclass(frozen=True)
class ImpulsiveSystem:
    n: int
    m: int
    flow: VectorExpr
    jumps: tuple = ()
    t0: float = 0.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "jumps", tuple(self.jumps))
        if self.n < 1:
            raise ConfigError("state dimension must be at least 1")
        if self.m < 0:
            raise ConfigError("input dimension must be nonnegative")
        _check_vector(self.flow, self.n, self.m, self.n, "flow")
        for i, rule in enumerate(self.jumps, start=1):
            _check_vector(rule.map, self.n, self.m, self.n, "jump map %d" % i)

    @property
    def sequences(self):
        return [rule.sequence for rule in self.jumps]

    @staticmethod
    def from_strings(flow, jumps=(), m=0, t0=0.0, label=""):
        """Build a system from expression text.

        ``flow`` is a list of n expressions; ``jumps`` is a list of
        (sequence, [n expressions]) pairs.
        """
        n = len(flow)
        fv = exprlang.parse_vector(flow, n, m)
        rules = []
        for seq, texts in jumps:
            rules.append(JumpRule(seq, exprlang.parse_vector(texts, n, m)))
        return ImpulsiveSystem(n, m, fv, tuple(rules), t0=t0, label=label)


def _check_vector(vec, n, m, expected_len, what):
    if not isinstance(vec, VectorExpr):
        raise ConfigError("%s must be a VectorExpr" % what)
    if len(vec) != expected_len:
        raise ConfigError(
            "%s has %d components, expected %d" % (what, len(vec), expected_len)
        )
    if vec.n != n or vec.m != m:
        raise ConfigError(
            "%s is over (n=%d, m=%d) variables, expected (n=%d, m=%d)"
            % (what, vec.n, vec.m, n, m)
        )


class InputSignal:
    """Exogenous input: zero, constant, piecewise constant, or expressions
    of t.  Piecewise-constant signals are right-continuous; their left limit
    at a breakpoint is the value of the interval ending there."""

    def __init__(self, kind, m, constant=None, breakpoints=None, values=None,
                 exprs=None):
        self.kind = kind
        self.m = m
        self.constant = constant
        self.breakpoints = breakpoints
        self.values = values
        self.exprs = exprs

    @staticmethod
    def zero(m=0):
        return InputSignal("zero", m)

    @staticmethod
    def const(values):
        arr = np.atleast_1d(np.asarray(values, dtype=np.float64))
        return InputSignal("constant", arr.size, constant=arr)

    @staticmethod
    def piecewise_constant(breakpoints, values):
        bps = [float(b) for b in breakpoints]
        for a, b in zip(bps, bps[1:]):
            if not (b > a):
                raise ConfigError("breakpoints must be strictly increasing")
        vals = np.atleast_2d(np.asarray(values, dtype=np.float64))
        if vals.shape[0] != len(bps) + 1:
            raise ConfigError(
                "need %d value rows for %d breakpoints" % (len(bps) + 1, len(bps))
            )
        return InputSignal("piecewise", vals.shape[1], breakpoints=bps, values=vals)

    @staticmethod
    def from_expressions(texts):
        exprs = [exprlang.parse_scalar(t, "t") for t in texts]
        return InputSignal("expression", len(exprs), exprs=exprs)

    def value(self, t):
        if self.kind == "zero":
            return np.zeros(self.m)
        if self.kind == "constant":
            return self.constant.copy()
        if self.kind == "piecewise":
            idx = bisect.bisect_right(self.breakpoints, t)
            return self.values[idx].copy()
        return np.array([e.eval([t]) for e in self.exprs])

    def left_limit(self, t):
        if self.kind == "piecewise":
            idx = bisect.bisect_left(self.breakpoints, t)
            return self.values[idx].copy()
        return self.value(t)

    def values_at(self, times):
        """Vectorized right-continuous values, shape (len(times), m)."""
        times = np.asarray(times, dtype=np.float64)
        if self.kind == "zero":
            return np.zeros((times.size, self.m))
        if self.kind == "constant":
            return np.tile(self.constant, (times.size, 1))
        if self.kind == "piecewise":
            idx = np.searchsorted(self.breakpoints, times, side="right")
            return self.values[idx]
        cols = []
        T = times.reshape(-1, 1)
        for e in self.exprs:
            vals, errs = e.eval_many(T)
            if np.any(errs):
                bad = int(np.argmax(errs != 0))
                raise DomainError(
                    "input expression failed at t=%r" % float(times[bad])
                )
            cols.append(vals)
        return np.column_stack(cols)

    def sup_norm(self, t0, t, sample_times=None):
        """Sup of |u(s)| over [t0, t] (Euclidean norm).

        Exact for zero/constant/piecewise signals; for expression signals the
        sup is approximated over ``sample_times``.
        """
        if self.kind == "zero" or self.m == 0:
            return 0.0
        if self.kind == "constant":
            return float(np.linalg.norm(self.constant))
        if self.kind == "piecewise":
            lo = bisect.bisect_left(self.breakpoints, t0)
            hi = bisect.bisect_right(self.breakpoints, t)
            rows = self.values[lo:hi + 1]
            return float(max(np.linalg.norm(r) for r in rows))
        if sample_times is None:
            sample_times = [t0, t]
        pts = [s for s in sample_times if t0 <= s <= t]
        vals = self.values_at(pts)
        return float(np.max(np.linalg.norm(vals, axis=1))) if len(pts) else 0.0


def validate(sys, horizon):
    """Check a system on [t0, horizon]; returns a list of violation strings
    (empty when the system is well formed)."""
    violations = []
    try:
        timegrid.merge(sys.sequences, sys.t0, horizon)
    except DisjointnessError as exc:
        violations.append(str(exc))
    x0 = np.zeros(sys.n)
    u0 = np.zeros(sys.m)
    for j, comp in enumerate(sys.flow, start=1):
        try:
            comp.eval(x0, u0)
        except DomainError as exc:
            violations.append("flow component %d not evaluable at the origin: %s"
                              % (j, exc))
    for i, rule in enumerate(sys.jumps, start=1):
        for j, comp in enumerate(rule.map, start=1):
            try:
                comp.eval(x0, u0)
            except DomainError as exc:
                violations.append(
                    "jump map %d component %d not evaluable at the origin: %s"
                    % (i, j, exc))
    return violations


@dataclass(frozen=True)
class Subsystem:
    """One half of a two-subsystem interconnection.

    ``flow`` and ``jump`` have n_self components and are written over the
    stacked state (n_self + n_other variables, own block first for the first
    subsystem and second for the second) and the subsystem's own inputs.
    """

    n_self: int
    n_other: int
    m: int
    flow: VectorExpr
    jump: VectorExpr
    sequence: timegrid.ImpulseSequence
    label: str = ""

    def __post_init__(self):
        n_total = self.n_self + self.n_other
        _check_vector(self.flow, n_total, self.m, self.n_self, "subsystem flow")
        _check_vector(self.jump, n_total, self.m, self.n_self, "subsystem jump")

    @staticmethod
    def from_strings(n_self, n_other, m, flow, jump, sequence, label=""):
        n_total = n_self + n_other
        return Subsystem(
            n_self, n_other, m,
            exprlang.parse_vector(flow, n_total, m),
            exprlang.parse_vector(jump, n_total, m),
            sequence, label=label,
        )


def interconnect(sub1, sub2, horizon, t0=0.0):
    """Compose two subsystems into one impulsive system on [t0, horizon].

    The raw impulse sequences are split into times hit only by the first
    subsystem, only by the second, and by both; each surviving (nonempty on
    the horizon) part becomes one jump rule, tagged with slot "only1",
    "only2" or "both".  Jump maps pad the untouched block with the identity.
    """
    if sub1.n_other != sub2.n_self or sub2.n_other != sub1.n_self:
        raise ConfigError(
            "subsystem dimensions disagree: (%d,%d) versus (%d,%d)"
            % (sub1.n_self, sub1.n_other, sub2.n_self, sub2.n_other)
        )
    n1, n2 = sub1.n_self, sub2.n_self
    n = n1 + n2
    m1, m2 = sub1.m, sub2.m
    m = m1 + m2

    def lift1(e):
        return exprlang.remap(e, n, m, x_offset=0, u_offset=0)

    def lift2(e):
        return exprlang.remap(e, n, m, x_offset=0, u_offset=m1)

    flow = VectorExpr([lift1(c) for c in sub1.flow] + [lift2(c) for c in sub2.flow])
    g1 = [lift1(c) for c in sub1.jump]
    g2 = [lift2(c) for c in sub2.jump]
    ident1 = [Expr(Var("x", i), n, m) for i in range(1, n1 + 1)]
    ident2 = [Expr(Var("x", i), n, m) for i in range(n1 + 1, n + 1)]

    only1, only2, both = timegrid.partition(sub1.sequence, sub2.sequence, t0, horizon)
    rules = []
    if not both.times:
        # no coincident times: keep the original sequence objects, so a
        # periodic structure survives for dwell-time classification
        if only1.times:
            rules.append(JumpRule(sub1.sequence, VectorExpr(g1 + ident2), slot="only1"))
        if only2.times:
            rules.append(JumpRule(sub2.sequence, VectorExpr(ident1 + g2), slot="only2"))
    else:
        if only1.times:
            rules.append(JumpRule(only1, VectorExpr(g1 + ident2), slot="only1"))
        if only2.times:
            rules.append(JumpRule(only2, VectorExpr(ident1 + g2), slot="only2"))
        rules.append(JumpRule(both, VectorExpr(g1 + g2), slot="both"))

    label = "+".join(filter(None, [sub1.label, sub2.label]))
    return ImpulsiveSystem(n, m, flow, tuple(rules), t0=t0, label=label)
