"""Impulse time sequences and operations on bounded horizons.

All horizon arguments follow the semi-open convention: ``realize(seq, t0, T)``
returns the times in ``(t0, T]``, so an impulse exactly at the horizon start
is excluded and one exactly at the end is included.  Two times are considered
coincident when they differ by at most :data:`TIME_TOL`; coincidences across
different sequences are rejected (the sequences of one system must be
pairwise disjoint) or matched (by :func:`partition`).
"""

import math
from dataclasses import dataclass, field

from .errors import ConfigError, DisjointnessError

__all__ = [
    "TIME_TOL",
    "ImpulseSequence",
    "SequenceFamily",
    "realize",
    "count",
    "partition",
    "merge",
]

TIME_TOL = 1e-9


@dataclass(frozen=True)
class ImpulseSequence:
    """Either a periodic sequence {start + k*period : k >= 0} or an explicit
    strictly increasing list of times."""

    kind: str
    start: float = 0.0
    period: float = 0.0
    times: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.kind == "periodic":
            if not (self.period > 0.0):
                raise ConfigError("periodic sequence needs a positive period")
        elif self.kind == "explicit":
            times = tuple(float(t) for t in self.times)
            for a, b in zip(times, times[1:]):
                if not (b > a):
                    raise ConfigError("explicit times must be strictly increasing")
            object.__setattr__(self, "times", times)
        else:
            raise ConfigError("unknown sequence kind %r" % self.kind)

    @staticmethod
    def periodic(start, period, label=""):
        return ImpulseSequence("periodic", start=float(start), period=float(period),
                               label=label)

    @staticmethod
    def explicit(times, label=""):
        return ImpulseSequence("explicit", times=tuple(times), label=label)

    def realize(self, t0, T):
        """Times of this sequence inside (t0, T], strictly increasing."""
        if T < t0:
            raise ValueError("horizon end %r precedes start %r" % (T, t0))
        if self.kind == "explicit":
            return [t for t in self.times if t0 < t <= T]
        k = 0
        if self.start <= t0:
            k = max(0, math.ceil((t0 - self.start) / self.period))
        out = []
        while True:
            t = self.start + k * self.period
            if t > T:
                break
            if t > t0:
                out.append(t)
            k += 1
        return out

    def describe(self, index=None):
        if self.label:
            return self.label
        if index is not None:
            return "#%d" % index
        return "<unlabeled>"


@dataclass(frozen=True)
class SequenceFamily:
    """An ordered, pairwise-disjoint collection of impulse sequences."""

    sequences: tuple = field(default_factory=tuple)

    def __post_init__(self):
        seqs = tuple(self.sequences)
        if not seqs:
            raise ConfigError("a sequence family needs at least one sequence")
        object.__setattr__(self, "sequences", seqs)

    def __len__(self):
        return len(self.sequences)

    def __iter__(self):
        return iter(self.sequences)

    def __getitem__(self, i):
        return self.sequences[i]


def realize(seq, t0, T):
    return seq.realize(t0, T)


def count(seq, s, t):
    """Number of impulses of ``seq`` in (s, t]."""
    if t < s:
        raise ValueError("interval end %r precedes start %r" % (t, s))
    return len(seq.realize(s, t))


def partition(seq_a, seq_b, t0, T):
    """Split two sequences into (only A, only B, coincident) on (t0, T].

    Returns three explicit sequences; coincident times (within TIME_TOL) are
    represented by the first sequence's value.
    """
    a = seq_a.realize(t0, T)
    b = seq_b.realize(t0, T)
    only_a, only_b, both = [], [], []
    i = j = 0
    while i < len(a) and j < len(b):
        if abs(a[i] - b[j]) <= TIME_TOL:
            both.append(a[i])
            i += 1
            j += 1
        elif a[i] < b[j]:
            only_a.append(a[i])
            i += 1
        else:
            only_b.append(b[j])
            j += 1
    only_a.extend(a[i:])
    only_b.extend(b[j:])
    la = seq_a.describe() if seq_a.label else "a"
    lb = seq_b.describe() if seq_b.label else "b"
    return (
        ImpulseSequence.explicit(only_a, label="%s-only" % la),
        ImpulseSequence.explicit(only_b, label="%s-only" % lb),
        ImpulseSequence.explicit(both, label="%s&%s" % (la, lb)),
    )


def merge(sequences, t0, T):
    """Merged timeline [(time, 1-based sequence index)] on (t0, T].

    Raises DisjointnessError if two different sequences produce coincident
    times (within TIME_TOL).
    """
    if isinstance(sequences, SequenceFamily):
        sequences = sequences.sequences
    entries = []
    for idx, seq in enumerate(sequences, start=1):
        for t in seq.realize(t0, T):
            entries.append((t, idx))
    entries.sort()
    for (ta, ia), (tb, ib) in zip(entries, entries[1:]):
        if ia != ib and tb - ta <= TIME_TOL:
            raise DisjointnessError(
                "impulse time %r shared by sequences %s and %s"
                % (ta, sequences[ia - 1].describe(ia), sequences[ib - 1].describe(ib))
            )
    return entries
