"""Small-gain composition of two subsystem certificates.

Given certificates (V1, c1, d_hat1, gamma12, gamma1) and (V2, c2, d_hat2,
gamma21, gamma2) whose linear internal gains satisfy gamma12 * gamma21 < 1,
the composed candidate is

    V(x) = max{(1/s1) V1(x1), V2(x2)}

with a scaling s1 strictly between gamma12 and 1/gamma21; that placement is
what lets each branch of the max fall back on its subsystem's gated decay.
The composed rate coefficients are

    c  = min{c1, c2}
    d1 = min{d_hat1, -ln((1/s1) gamma12), -eps}      (sequence-1-only times)
    d2 = min{d_hat2, -ln(gamma21), -eps}             (sequence-2-only times)
    d3 = min{d_hat1, d_hat2, -ln((1/s1) gamma12), -ln(gamma21)}  (coincident)

and the composed input gain is
gamma(r) = max{e^{d1}, e^{d2}, e^{d3}, 1} * max{(1/s1) gamma1(r), gamma2(r)}.
"""

import dataclasses
import math
from dataclasses import dataclass

from . import certify, dwell, exprlang, model
from .certify import LyapunovCandidate
from .errors import CompositionError
from .exprlang import BinOp, Call, Expr, Num

__all__ = [
    "check_small_gain",
    "CompositionResult",
    "compose",
    "verify_composition",
    "PipelineReport",
    "iss_pipeline",
]


def check_small_gain(gamma12, gamma21):
    """Strict loop-gain contraction gamma12 * gamma21 < 1."""
    if gamma12 < 0 or gamma21 < 0:
        raise CompositionError("internal gains must be nonnegative")
    return gamma12 * gamma21 < 1.0


@dataclass(frozen=True)
class CompositionResult:
    s1: float
    sigma: float
    V: Expr
    c: float
    d1: float
    d2: float
    d3: float
    gamma: Expr
    epsilon: float
    n1: int
    n2: int

    def d_for_slot(self, slot):
        table = {"only1": self.d1, "only2": self.d2, "both": self.d3}
        if slot not in table:
            raise CompositionError("jump rule with unknown slot %r" % slot)
        return table[slot]

    def to_dict(self):
        return {
            "s1": self.s1,
            "sigma": self.sigma,
            "c": self.c,
            "d1": self.d1,
            "d2": self.d2,
            "d3": self.d3,
            "epsilon": self.epsilon,
            "V": self.V.pretty(),
            "gamma": self.gamma.pretty(),
        }


def _default_sigma(g12, g21):
    if g12 == 0.0 and g21 == 0.0:
        return 1.0
    if g12 == 0.0:
        return min(1.0, 0.5 / g21)
    if g21 == 0.0:
        return max(1.0, 2.0 * g12)
    return math.sqrt(g12 / g21)


def compose(cert1, cert2, epsilon=1e-3, sigma=None):
    """Build the composed candidate from two subsystem certificates."""
    if not (epsilon > 0):
        raise CompositionError("epsilon must be strictly positive")
    if cert1.d_hat == 0.0 or cert2.d_hat == 0.0:
        raise CompositionError("subsystem jump coefficients must be nonzero")
    g12, g21 = cert1.gain_internal, cert2.gain_internal
    if not check_small_gain(g12, g21):
        raise CompositionError(
            "small-gain condition fails: %r * %r = %r >= 1"
            % (g12, g21, g12 * g21))
    upper = math.inf if g21 == 0.0 else 1.0 / g21
    if sigma is None:
        sigma = _default_sigma(g12, g21)
    if not (g12 < sigma < upper):
        raise CompositionError(
            "sigma %r outside the admissible interval (%r, %r)"
            % (sigma, g12, upper))
    s1 = sigma
    inv = 1.0 / s1

    n1, n2 = cert1.V.n, cert2.V.n
    n = n1 + n2
    V1r = exprlang.remap(cert1.V, n, 0, x_offset=0)
    V2r = exprlang.remap(cert2.V, n, 0, x_offset=n1)
    V = Expr(Call("max", (BinOp("*", Num(inv), V1r.root), V2r.root)), n, 0)

    c = min(cert1.c, cert2.c)
    loop1 = -math.log(inv * g12) if g12 > 0.0 else math.inf
    loop2 = -math.log(g21) if g21 > 0.0 else math.inf
    d1 = min(cert1.d_hat, loop1, -epsilon)
    d2 = min(cert2.d_hat, loop2, -epsilon)
    d3 = min(cert1.d_hat, cert2.d_hat, loop1, loop2)

    pref = max(math.exp(d1), math.exp(d2), math.exp(d3), 1.0)
    groot = BinOp(
        "*", Num(pref),
        Call("max", (BinOp("*", Num(inv), cert1.gain_input.root),
                     cert2.gain_input.root)))
    gamma = Expr(groot, 1, 0, scalar_symbol="r")

    return CompositionResult(s1, sigma, V, c, d1, d2, d3, gamma,
                             float(epsilon), n1, n2)


def candidate_for(sys, result):
    """The composed LyapunovCandidate with one d per jump rule of sys,
    selected by the rule's interconnection slot."""
    d = tuple(result.d_for_slot(rule.slot) for rule in sys.jumps)
    return LyapunovCandidate(result.V, result.c, d, result.gamma)


def verify_composition(sys, result, region):
    """Independent grid audit of the composed candidate on the composed
    system; returns (flow report, jump report)."""
    if sys.n != result.n1 + result.n2:
        raise CompositionError(
            "system has %d states, composition expects %d"
            % (sys.n, result.n1 + result.n2))
    cand = candidate_for(sys, result)
    flow = certify.check_flow_condition(sys, cand, region)
    jump = certify.check_jump_condition(sys, cand, region)
    return flow, jump


@dataclass
class PipelineReport:
    status: str
    composition: CompositionResult
    dwell_verdict: dwell.DwellTimeVerdict
    audit_flow: certify.CheckReport = None
    audit_jump: certify.CheckReport = None
    horizon: float = 0.0
    lam: float = 0.0

    @property
    def ok(self):
        return self.status == "iss-certified"

    def to_dict(self):
        audit = None
        if self.audit_flow is not None:
            audit = {"flow": self.audit_flow.to_dict(),
                     "jump": self.audit_jump.to_dict()}
        return {
            "status": self.status,
            "horizon": self.horizon,
            "lambda": self.lam,
            "composition": self.composition.to_dict(),
            "audit": audit,
            "dwell": self.dwell_verdict.to_dict(),
        }


def iss_pipeline(sub1, sub2, cert1, cert2, epsilon=1e-3, lam=0.05,
                 horizon=100.0, region=None, t0=0.0):
    """interconnect -> compose -> grid audit (when a region is given) ->
    dwell-time evaluation -> overall status.

    Status is "iss-certified" when the audit (if any) is clean and the
    timeline is not divergent; "composition-audit-failed" or
    "dwell-divergent" otherwise.
    """
    if cert1.c < 0 or cert2.c < 0:
        raise CompositionError(
            "negative flow rates are not supported: unstable continuous "
            "dynamics would need a rescaled certificate first")
    sys = model.interconnect(sub1, sub2, horizon, t0=t0)
    result = compose(cert1, cert2, epsilon)

    flow_rep = jump_rep = None
    if region is not None:
        flow_rep, jump_rep = verify_composition(sys, result, region)

    sequences = [rule.sequence for rule in sys.jumps]
    d = [result.d_for_slot(rule.slot) for rule in sys.jumps]
    prob = dwell.DwellTimeProblem.from_sequences(sequences, d, result.c,
                                                 lam, t0, horizon)
    verdict = dwell.minimal_mu(prob)

    if flow_rep is not None and not (flow_rep.ok and jump_rep.ok):
        status = "composition-audit-failed"
    elif verdict.classification == "divergent":
        status = "dwell-divergent"
    else:
        status = "iss-certified"
    return PipelineReport(status, result, verdict, flow_rep, jump_rep,
                          horizon=float(horizon), lam=float(lam))


def perturbed(result, **changes):
    """A copy of a composition result with fields overridden; used to show
    the audit catching a wrong coefficient."""
    return dataclasses.replace(result, **changes)
