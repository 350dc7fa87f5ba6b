"""Grid-based numerical verification of exponential ISS-Lyapunov conditions.

A candidate consists of V, a decay rate c for the flow, one coefficient d_i
per jump sequence, and a gain gamma gating the checks: a sampled pair (x, u)
participates only when V(x) >= gamma(|u|).  All verdicts are grid verdicts
("grid-verified on the region"), never proofs: passing means zero violations
over the sampled pairs at the region tolerance.

Points within rho of a kink of V (arguments of abs/sign/sqrt near zero,
min/max arguments near ties) are skipped by the flow check, since the
finite-difference gradient is meaningless there; the jump checks need no
gradient and sample every point.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import exprlang
from .errors import ConfigError
from .exprlang import Expr

__all__ = [
    "SamplingRegion",
    "LyapunovCandidate",
    "SubsystemCertificate",
    "CheckReport",
    "check_flow_condition",
    "check_jump_condition",
    "check_subsystem_conditions",
    "validate_candidate",
    "validate_certificate",
]


@dataclass(frozen=True)
class SamplingRegion:
    """Symmetric sampling box: states in [-X, X]^n, inputs in [-U, U]^m,
    k points per axis."""

    X: float
    U: float = 0.0
    k: int = 21
    rho: float = -1.0
    tol: float = 1e-7

    def __post_init__(self):
        if not (self.X > 0):
            raise ConfigError("state radius X must be positive")
        if self.U < 0:
            raise ConfigError("input radius U must be nonnegative")
        if self.k < 3:
            raise ConfigError("need at least 3 grid points per axis")
        if self.rho < 0:
            object.__setattr__(self, "rho", 1e-3 * self.X)
        if not (self.rho < self.X):
            raise ConfigError("kink-exclusion radius must be below X")
        if not (self.tol > 0):
            raise ConfigError("tolerance must be positive")

    def state_axis(self):
        return np.linspace(-self.X, self.X, self.k)

    def input_axis(self):
        return np.linspace(-self.U, self.U, self.k)

    def to_dict(self):
        return {"X": self.X, "U": self.U, "k": self.k,
                "rho": self.rho, "tol": self.tol}


@dataclass(frozen=True)
class LyapunovCandidate:
    """Whole-system candidate: V over the n states, flow rate c, one jump
    coefficient per jump rule, and the gating gain gamma(r)."""

    V: Expr
    c: float
    d: tuple
    gamma: Expr

    def __post_init__(self):
        object.__setattr__(self, "d", tuple(float(v) for v in self.d))

    @staticmethod
    def from_strings(V, n, c, d, gamma="r"):
        return LyapunovCandidate(
            exprlang.parse(V, n, 0), float(c), tuple(d),
            exprlang.parse_scalar(gamma, "r"),
        )


@dataclass(frozen=True)
class SubsystemCertificate:
    """Per-subsystem certificate: V over the subsystem's own n_i states,
    flow rate c, jump coefficient d_hat, linear internal gain on the partner
    value V_j, and input gain gamma_i(r)."""

    V: Expr
    c: float
    d_hat: float
    gain_internal: float
    gain_input: Expr

    @staticmethod
    def from_strings(V, n_self, c, d_hat, gain_internal, gain_input="r"):
        gi = float(gain_internal)
        if gi < 0:
            raise ConfigError("internal gain must be nonnegative")
        return SubsystemCertificate(
            exprlang.parse(V, n_self, 0), float(c), float(d_hat),
            gi, exprlang.parse_scalar(gain_input, "r"),
        )


@dataclass
class CheckReport:
    condition: str
    verdict: str
    region: dict
    counterexamples: list = field(default_factory=list)
    unverifiable: list = field(default_factory=list)
    pairs_checked: int = 0
    skipped_kink: int = 0
    notes: str = ""

    @property
    def ok(self):
        return self.verdict == "ok"

    def to_dict(self):
        return {
            "condition": self.condition,
            "verdict": self.verdict,
            "region": self.region,
            "counterexamples": self.counterexamples,
            "unverifiable": self.unverifiable,
            "pairs_checked": self.pairs_checked,
            "skipped_kink": self.skipped_kink,
            "notes": self.notes,
        }


def _grid(axis, dims):
    """Cartesian product of one axis over dims dimensions, row-major."""
    if dims == 0:
        return np.zeros((1, 0))
    mesh = np.meshgrid(*([axis] * dims), indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _pair_up(Xg, Ug):
    nx, nu = Xg.shape[0], Ug.shape[0]
    XX = np.repeat(Xg, nu, axis=0)
    UU = np.tile(Ug, (nx, 1))
    return XX, UU


def _kink_mask(V, Xg, rho):
    """True where a point sits within rho of a kink locus of V."""
    mask = np.zeros(Xg.shape[0], dtype=bool)
    if rho <= 0:
        return mask
    for arg in exprlang.kink_arguments(V):
        vals, errs = arg.eval_many(Xg)
        mask |= (np.abs(vals) < rho) | (errs != 0)
    return mask


def _grad_many(V, Xg):
    """Vectorized central differences, same stencil as Expr.grad_fd."""
    rows, n = Xg.shape
    grads = np.empty((rows, n))
    bad = np.zeros(rows, dtype=bool)
    for j in range(n):
        h = 1e-6 * (1.0 + np.abs(Xg[:, j]))
        Xp = Xg.copy()
        Xm = Xg.copy()
        Xp[:, j] += h
        Xm[:, j] -= h
        vp, ep = V.eval_many(Xp)
        vm, em = V.eval_many(Xm)
        grads[:, j] = (vp - vm) / (2.0 * h)
        bad |= (ep != 0) | (em != 0)
    return grads, bad


def _cex(x, u, lhs, rhs, **extra):
    rec = {"x": [float(v) for v in np.atleast_1d(x)],
           "u": [float(v) for v in np.atleast_1d(u)],
           "lhs": float(lhs), "rhs": float(rhs)}
    rec.update(extra)
    return rec


def _unv(x, u, reason):
    return {"x": [float(v) for v in np.atleast_1d(x)],
            "u": [float(v) for v in np.atleast_1d(u)], "reason": reason}


def check_flow_condition(sys, cand, region):
    """Verify grad V . f(x,u) <= -c V(x) + tol on every gated grid pair."""
    Xg = _grid(region.state_axis(), sys.n)
    Ug = _grid(region.input_axis(), sys.m) if sys.m else np.zeros((1, 0))

    Vx, Verr = cand.V.eval_many(Xg)
    kinks = _kink_mask(cand.V, Xg, region.rho)
    grads, gerr = _grad_many(cand.V, Xg)
    state_bad = (Verr != 0) | gerr

    XX, UU = _pair_up(Xg, Ug)
    rows = XX.shape[0]
    unorm = np.linalg.norm(UU, axis=1) if sys.m else np.zeros(rows)
    gvals, gerrs = cand.gamma.eval_many(unorm.reshape(-1, 1))

    fvals = np.zeros((rows, sys.n))
    ferr = np.zeros(rows, dtype=bool)
    for j, comp in enumerate(sys.flow):
        vals, errs = comp.eval_many(XX, UU)
        fvals[:, j] = vals
        ferr |= errs != 0

    nu = Ug.shape[0]
    Vp = np.repeat(Vx, nu)
    Gp = np.repeat(grads, nu, axis=0)
    skip = np.repeat(kinks, nu)
    bad = np.repeat(state_bad, nu) | (gerrs != 0) | ferr

    gate = Vp >= gvals
    lhs = np.einsum("ij,ij->i", Gp, fvals)
    rhs = -cand.c * Vp + region.tol * (1.0 + np.abs(Vp))

    report = CheckReport("flow", "ok", region.to_dict())
    active = gate & ~skip
    report.pairs_checked = int(np.count_nonzero(active & ~bad))
    report.skipped_kink = int(np.count_nonzero(gate & skip))
    for i in np.flatnonzero(active & bad):
        report.unverifiable.append(_unv(XX[i], UU[i], "expression domain error"))
    for i in np.flatnonzero(active & ~bad & (lhs > rhs)):
        report.counterexamples.append(_cex(XX[i], UU[i], lhs[i], rhs[i]))
    if report.counterexamples:
        report.verdict = "fail"
    return report


def check_jump_condition(sys, cand, region):
    """Verify V(g_i(x,u)) <= e^{-d_i} V(x) + tol on every gated grid pair,
    for every jump rule i."""
    if len(cand.d) != len(sys.jumps):
        raise ConfigError(
            "candidate carries %d jump coefficients, system has %d jump rules"
            % (len(cand.d), len(sys.jumps)))
    Xg = _grid(region.state_axis(), sys.n)
    Ug = _grid(region.input_axis(), sys.m) if sys.m else np.zeros((1, 0))
    Vx, Verr = cand.V.eval_many(Xg)

    XX, UU = _pair_up(Xg, Ug)
    rows = XX.shape[0]
    unorm = np.linalg.norm(UU, axis=1) if sys.m else np.zeros(rows)
    gvals, gerrs = cand.gamma.eval_many(unorm.reshape(-1, 1))

    nu = Ug.shape[0]
    Vp = np.repeat(Vx, nu)
    bad_base = np.repeat(Verr != 0, nu) | (gerrs != 0)
    gate = Vp >= gvals
    tol = region.tol * (1.0 + np.abs(Vp))

    report = CheckReport("jump", "ok", region.to_dict())
    for idx, rule in enumerate(sys.jumps):
        Gmat = np.zeros((rows, sys.n))
        jerr = np.zeros(rows, dtype=bool)
        for j, comp in enumerate(rule.map):
            vals, errs = comp.eval_many(XX, UU)
            Gmat[:, j] = vals
            jerr |= errs != 0
        Vg, Vgerr = cand.V.eval_many(Gmat)
        bad = bad_base | jerr | (Vgerr != 0)
        rhs = math.exp(-cand.d[idx]) * Vp + tol
        active = gate & ~bad
        report.pairs_checked += int(np.count_nonzero(active))
        for i in np.flatnonzero(gate & bad):
            report.unverifiable.append(
                _unv(XX[i], UU[i], "expression domain error (jump %d)" % (idx + 1)))
        for i in np.flatnonzero(active & (Vg > rhs)):
            report.counterexamples.append(
                _cex(XX[i], UU[i], Vg[i], rhs[i], jump=idx + 1))
    if report.counterexamples:
        report.verdict = "fail"
    return report


def _subsystem_report(which, sub, certs, Xg, Ug, region):
    """Flow and jump check for one side of an interconnection.

    ``which`` is 0 or 1; Xg spans the stacked state, Ug the subsystem's own
    inputs.  The flow decay is gated by
    V_i(x_i) >= max{gain_internal * V_j(x_j), gain_input(|u_i|)}; the jump
    bound is the ungated max-form against the same quantities.
    """
    cert = certs[which]
    other = certs[1 - which]
    n1 = certs[0].V.n
    own = slice(0, n1) if which == 0 else slice(n1, Xg.shape[1])
    oth = slice(n1, Xg.shape[1]) if which == 0 else slice(0, n1)

    Xown = np.ascontiguousarray(Xg[:, own])
    Xoth = np.ascontiguousarray(Xg[:, oth])
    Vi, Vierr = cert.V.eval_many(Xown)
    Vj, Vjerr = other.V.eval_many(Xoth)
    kinks = _kink_mask(cert.V, Xown, region.rho)
    grads, gerr = _grad_many(cert.V, Xown)
    state_bad = (Vierr != 0) | (Vjerr != 0)

    XX, UU = _pair_up(Xg, Ug)
    rows = XX.shape[0]
    unorm = np.linalg.norm(UU, axis=1) if UU.shape[1] else np.zeros(rows)
    ginp, ginperr = cert.gain_input.eval_many(unorm.reshape(-1, 1))

    nu = Ug.shape[0]
    Vip = np.repeat(Vi, nu)
    Vjp = np.repeat(Vj, nu)
    bad_base = np.repeat(state_bad, nu) | (ginperr != 0)
    internal = cert.gain_internal * Vjp
    gate = Vip >= np.maximum(internal, ginp)
    tol = region.tol * (1.0 + np.abs(Vip))

    report = CheckReport("subsystem", "ok", region.to_dict(),
                         notes="subsystem %d" % (which + 1))

    # flow part
    fvals = np.zeros((rows, len(sub.flow)))
    ferr = np.zeros(rows, dtype=bool)
    for j, comp in enumerate(sub.flow):
        vals, errs = comp.eval_many(XX, UU)
        fvals[:, j] = vals
        ferr |= errs != 0
    Gp = np.repeat(grads, nu, axis=0)
    skip = np.repeat(kinks, nu)
    fbad = bad_base | np.repeat(gerr, nu) | ferr
    lhs = np.einsum("ij,ij->i", Gp, fvals)
    rhs = -cert.c * Vip + tol
    active = gate & ~skip
    report.pairs_checked += int(np.count_nonzero(active & ~fbad))
    report.skipped_kink = int(np.count_nonzero(gate & skip))
    for i in np.flatnonzero(active & fbad):
        report.unverifiable.append(_unv(XX[i], UU[i], "expression domain error"))
    for i in np.flatnonzero(active & ~fbad & (lhs > rhs)):
        report.counterexamples.append(
            _cex(XX[i], UU[i], lhs[i], rhs[i], part="flow"))

    # jump part (ungated max-form)
    Gmat = np.zeros((rows, len(sub.jump)))
    jerr = np.zeros(rows, dtype=bool)
    for j, comp in enumerate(sub.jump):
        vals, errs = comp.eval_many(XX, UU)
        Gmat[:, j] = vals
        jerr |= errs != 0
    Vg, Vgerr = cert.V.eval_many(Gmat)
    jbad = bad_base | jerr | (Vgerr != 0)
    jrhs = np.maximum(
        np.maximum(math.exp(-cert.d_hat) * Vip, internal), ginp) + tol
    report.pairs_checked += int(np.count_nonzero(~jbad))
    for i in np.flatnonzero(jbad):
        report.unverifiable.append(_unv(XX[i], UU[i], "expression domain error (jump)"))
    for i in np.flatnonzero(~jbad & (Vg > jrhs)):
        report.counterexamples.append(
            _cex(XX[i], UU[i], Vg[i], jrhs[i], part="jump"))

    if report.counterexamples:
        report.verdict = "fail"
    return report


def check_subsystem_conditions(sub1, sub2, cert1, cert2, region):
    """Verify both subsystem certificates on a shared stacked-state grid;
    returns one report per subsystem."""
    if cert1.V.n != sub1.n_self or cert2.V.n != sub2.n_self:
        raise ConfigError("certificate V dimensions disagree with subsystems")
    n_total = sub1.n_self + sub1.n_other
    Xg = _grid(region.state_axis(), n_total)
    Ug1 = _grid(region.input_axis(), sub1.m) if sub1.m else np.zeros((1, 0))
    Ug2 = _grid(region.input_axis(), sub2.m) if sub2.m else np.zeros((1, 0))
    certs = (cert1, cert2)
    return (
        _subsystem_report(0, sub1, certs, Xg, Ug1, region),
        _subsystem_report(1, sub2, certs, Xg, Ug2, region),
    )


def _positivity_violations(V, gamma, region, label="V"):
    out = []
    n = V.n
    try:
        v0 = V.eval(np.zeros(n))
        if abs(v0) > region.tol:
            out.append("%s(0) = %r, expected 0" % (label, v0))
    except Exception as exc:
        out.append("%s not evaluable at the origin: %s" % (label, exc))
    Xg = _grid(region.state_axis(), n)
    vals, errs = V.eval_many(Xg)
    nonzero = np.any(Xg != 0.0, axis=1)
    bad = nonzero & (errs == 0) & (vals <= 0.0)
    for i in np.flatnonzero(bad)[:10]:
        out.append("%s not positive at %s (value %r)"
                   % (label, [float(v) for v in Xg[i]], float(vals[i])))
    if gamma is not None:
        r_hi = region.U if region.U > 0 else max(region.X, 1.0)
        r = np.linspace(0.0, r_hi, region.k).reshape(-1, 1)
        gv, gerrs = gamma.eval_many(r)
        if np.any(gerrs):
            out.append("gain not evaluable on [0, %r]" % r_hi)
        else:
            if abs(gv[0]) > region.tol:
                out.append("gain(0) = %r, expected 0" % float(gv[0]))
            # identically-zero gain means the input gate is vacuous (the
            # conditions are claimed for every input); that is sound, so
            # only a nonzero gain must be strictly increasing
            if np.any(gv != 0.0) and np.any(np.diff(gv) <= 0.0):
                out.append("gain not strictly increasing on sampled points")
    return out


def validate_candidate(cand, region):
    """Positive-definiteness of V and class-K checks on gamma, sampled on
    the region grid; returns a list of violation strings."""
    return _positivity_violations(cand.V, cand.gamma, region)


def validate_certificate(cert, region):
    return _positivity_violations(cert.V, cert.gain_input, region)
