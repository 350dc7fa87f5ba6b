"""Exact finite-horizon evaluation of the dwell-time condition.

For a merged event timeline with per-event coefficients, define

    F(s, t) = sum over events in (s, t] of (-d_i)  -  (c - lambda) (t - s)

for t0 <= s <= t <= T.  The condition with budget mu holds iff sup F <= mu.
The supremum is computed exactly by one scan of the right-continuous
cumulative G(t) = sum_{events <= t} (-d_i) - (c - lambda)(t - t0), using
sup F = max over t-candidates of G(t) minus the running minimum over
s-candidates of G(s).  Both candidate sets must include the pre-jump left
limits at event times: s just below an event captures the single-jump window
(F = -d_i there), and t just below an event matters when -d_i < 0.  The
supremum may be attained only in the limit; witnesses carry left-limit flags
so they can be re-evaluated exactly.
"""

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import timegrid
from .errors import ConfigError, SamplingError
from .timegrid import ImpulseSequence, SequenceFamily

__all__ = [
    "DwellEvent",
    "DwellTimeProblem",
    "Witness",
    "DwellTimeVerdict",
    "DwellCheck",
    "minimal_mu",
    "check",
    "feasible_lambda",
    "sample_in_class",
]

# events closer than this are considered coincident when sampling
_DEDUPE_GAP = 2e-9


@dataclass(frozen=True)
class DwellEvent:
    """One impulse event; rise is the contribution -d_i added to the sum."""

    time: float
    rise: float


@dataclass(frozen=True)
class Witness:
    """The window (s, t] attaining (or approaching) the supremum.  A set
    left-limit flag moves that endpoint infinitesimally below the stored
    time: s_left_limit pulls the event at s into the window, t_left_limit
    pushes the event at t out of it."""

    s: float
    t: float
    s_left_limit: bool = False
    t_left_limit: bool = False

    def evaluate(self, prob):
        total = 0.0
        for ev in prob.events:
            after_s = ev.time > self.s or (ev.time == self.s and self.s_left_limit)
            before_t = ev.time < self.t or (ev.time == self.t and not self.t_left_limit)
            if after_s and before_t:
                total += ev.rise
        return total - (prob.c - prob.lam) * (self.t - self.s)

    def to_dict(self):
        return {"s": self.s, "t": self.t,
                "s_left_limit": self.s_left_limit,
                "t_left_limit": self.t_left_limit}


@dataclass(frozen=True)
class DwellTimeProblem:
    events: tuple
    c: float
    lam: float
    t0: float
    T: float
    period: float = None
    period_rise: float = None

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if self.T < self.t0:
            raise ConfigError("horizon end precedes start")
        if not (self.lam > 0):
            raise ConfigError("lambda must be strictly positive")
        if self.lam >= self.c:
            warnings.warn(
                "lambda >= c: the dwell-time condition may hold but no ISS "
                "decay rate follows from it", stacklevel=2)
        prev = None
        for ev in self.events:
            if not math.isfinite(ev.rise) or not math.isfinite(ev.time):
                raise ConfigError("event times and coefficients must be finite")
            if not (self.t0 < ev.time <= self.T):
                raise ConfigError("event %r outside (t0, T]" % ev.time)
            if prev is not None and not (ev.time > prev):
                raise ConfigError("event times must be strictly increasing")
            prev = ev.time

    @property
    def drift(self):
        return self.c - self.lam

    @staticmethod
    def from_sequences(sequences, d, c, lam, t0, T):
        """Merged problem from one coefficient d_i per sequence; detects a
        common period for the boundedness classification."""
        if isinstance(sequences, SequenceFamily):
            sequences = list(sequences)
        if len(sequences) != len(d):
            raise ConfigError("need one coefficient per sequence")
        merged = timegrid.merge(sequences, t0, T)
        events = tuple(DwellEvent(t, -float(d[idx - 1])) for t, idx in merged)
        period, rise = _common_period(sequences, d)
        return DwellTimeProblem(events, float(c), float(lam), float(t0),
                                float(T), period=period, period_rise=rise)

    @staticmethod
    def from_events(times, d, c, lam, t0, T):
        """Per-event coefficient form: d[i] belongs to times[i]."""
        if len(times) != len(d):
            raise ConfigError("need one coefficient per event time")
        events = tuple(DwellEvent(float(t), -float(v))
                       for t, v in zip(times, d))
        return DwellTimeProblem(events, float(c), float(lam), float(t0), float(T))


def _common_period(sequences, d):
    """(period, rise per period) when every sequence is periodic with a
    rational common period; (None, None) otherwise."""
    if not sequences:
        return None, None
    fracs = []
    for seq in sequences:
        if seq.kind != "periodic":
            return None, None
        frac = Fraction(seq.period).limit_denominator(10 ** 6)
        if abs(float(frac) - seq.period) > 1e-9:
            return None, None
        fracs.append(frac)
    common = fracs[0]
    for frac in fracs[1:]:
        num = math.lcm(common.numerator, frac.numerator)
        den = math.gcd(common.denominator, frac.denominator)
        common = Fraction(num, den)
    period = float(common)
    rise = 0.0
    for seq, frac, di in zip(sequences, fracs, d):
        rise += float(common / frac) * (-float(di))
    return period, rise


@dataclass(frozen=True)
class DwellTimeVerdict:
    mu_star: float
    witness: Witness
    per_period_budget: float = None
    classification: str = None

    def to_dict(self):
        return {
            "mu_star": self.mu_star,
            "witness": self.witness.to_dict(),
            "per_period_budget": self.per_period_budget,
            "classification": self.classification,
        }


def minimal_mu(prob):
    """Exact supremum of F over the horizon, with an attaining witness."""
    drift = prob.drift
    best = 0.0
    best_wit = Witness(prob.t0, prob.t0)
    run_min = 0.0
    run_min_at = (prob.t0, False)
    G = 0.0
    prev_t = prob.t0
    for ev in prob.events:
        g_pre = G - drift * (ev.time - prev_t)
        # t just below the event: the event itself is excluded
        if g_pre - run_min > best:
            best = g_pre - run_min
            best_wit = Witness(run_min_at[0], ev.time, run_min_at[1], True)
        # s just below the event: the event is included in later windows
        if g_pre < run_min:
            run_min = g_pre
            run_min_at = (ev.time, True)
        g_post = g_pre + ev.rise
        if g_post - run_min > best:
            best = g_post - run_min
            best_wit = Witness(run_min_at[0], ev.time, run_min_at[1], False)
        if g_post < run_min:
            run_min = g_post
            run_min_at = (ev.time, False)
        G = g_post
        prev_t = ev.time
    g_end = G - drift * (prob.T - prev_t)
    if g_end - run_min > best:
        best = g_end - run_min
        best_wit = Witness(run_min_at[0], prob.T, run_min_at[1], False)

    budget, label = classify(prob)
    return DwellTimeVerdict(best, best_wit, budget, label)


def classify(prob):
    """(per-period budget, classification) for periodic timelines; the
    budget is the net change of G over one period."""
    if prob.period is None:
        return None, None
    budget = prob.period_rise - prob.drift * prob.period
    if budget > 1e-12:
        return budget, "divergent"
    if budget < -1e-12:
        return budget, "contractive"
    return budget, "critical"


@dataclass(frozen=True)
class DwellCheck:
    passed: bool
    mu: float
    verdict: DwellTimeVerdict

    def __bool__(self):
        return self.passed


def check(prob, mu):
    """Does sup F <= mu hold on the horizon?  Equality passes (a small
    floating-point guard keeps witnesses reproducible)."""
    if mu < 0:
        raise ConfigError("mu must be nonnegative")
    verdict = minimal_mu(prob)
    guard = 1e-12 * max(1.0, abs(mu))
    return DwellCheck(verdict.mu_star <= mu + guard, float(mu), verdict)


def feasible_lambda(sequences, d, c, t0, T, mu, resolution=1e-6):
    """Largest lambda in (0, c) passing the check, to the given resolution;
    None when even lambda at the resolution fails.  mu_star grows with
    lambda, so bisection applies."""
    if mu < 0:
        raise ConfigError("mu must be nonnegative")
    if not (c > 0):
        return None

    def passes(lam):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prob = DwellTimeProblem.from_sequences(sequences, d, c, lam, t0, T)
        return check(prob, mu).passed

    hi_probe = c - resolution
    if hi_probe <= 0:
        return None
    if passes(hi_probe):
        return hi_probe
    lo = resolution
    if not passes(lo):
        return None
    hi = hi_probe
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if passes(mid):
            lo = mid
        else:
            hi = mid
    return lo


def sample_in_class(seed, mu, lam, c, d, t0, T, intensity):
    """Rejection-sample a family of labeled impulse sequences whose merged
    timeline satisfies the dwell-time condition with the given mu.

    Draws a Poisson number of uniform event times at the given rate, labels
    each uniformly with one of the len(d) sequences, and accepts the first
    family that passes the check.  Deterministic for a fixed seed.
    """
    if not (intensity > 0):
        raise ConfigError("intensity must be positive")
    p = len(d)
    if p < 1:
        raise ConfigError("need at least one coefficient")
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        count = int(rng.poisson(intensity * (T - t0)))
        times = np.sort(rng.uniform(t0, T, size=count))
        labels = rng.integers(0, p, size=count)
        kept_t, kept_l = [], []
        for t, lab in zip(times, labels):
            if t <= t0:
                continue
            if kept_t and t - kept_t[-1] < _DEDUPE_GAP:
                continue
            kept_t.append(float(t))
            kept_l.append(int(lab))
        seqs = []
        for i in range(p):
            seqs.append(ImpulseSequence.explicit(
                [t for t, lab in zip(kept_t, kept_l) if lab == i],
                label="sampled-%d" % (i + 1)))
        family = SequenceFamily(tuple(seqs))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            prob = DwellTimeProblem.from_sequences(family, d, c, lam, t0, T)
        if check(prob, mu).passed:
            return family
    raise SamplingError(
        "no admissible family found in 1000 attempts; lower the intensity "
        "or raise mu")
