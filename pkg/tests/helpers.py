"""Shared builders for the worked examples used across the test modules."""

import math

import impulsekit as ik


def doubling_damped():
    """Scalar system: decay at rate 0.2, doubled at odd times, scaled by 0.6
    at even times."""
    return ik.ImpulsiveSystem.from_strings(
        flow=["-0.2*x1"],
        jumps=[
            (ik.ImpulseSequence.periodic(1.0, 2.0, "odd"), ["2*x1"]),
            (ik.ImpulseSequence.periodic(2.0, 2.0, "even"), ["0.6*x1"]),
        ],
        label="doubling_damped",
    )


def doubling_damped_input():
    """Same skeleton with an additive input in the flow and both jump maps."""
    return ik.ImpulsiveSystem.from_strings(
        flow=["-0.2*x1 + u1"],
        jumps=[
            (ik.ImpulseSequence.periodic(1.0, 2.0, "odd"), ["2*x1 + u1"]),
            (ik.ImpulseSequence.periodic(2.0, 2.0, "even"), ["0.6*x1 + u1"]),
        ],
        m=1,
        label="doubling_damped_input",
    )


def coupled_subsystems():
    sub1 = ik.Subsystem.from_strings(
        flow=["-1.1*x1*(1 + exp(1.1*abs(x1))) + abs(x2)*exp(abs(x2))"],
        jump=["3*x1"],
        sequence=ik.ImpulseSequence.periodic(1.0, 2.0, "odd"),
        n_self=1, n_other=1, m=0, label="coupled_x",
    )
    sub2 = ik.Subsystem.from_strings(
        flow=["-x2*(1 + exp(abs(x2))) + abs(x1)*exp(abs(x1))"],
        jump=["2*x2"],
        sequence=ik.ImpulseSequence.periodic(2.0, 2.0, "even"),
        n_self=1, n_other=1, m=0, label="coupled_y",
    )
    return sub1, sub2


def coupled_certificates():
    cert1 = ik.SubsystemCertificate.from_strings(
        "abs(x1)", 1, 1.1, -math.log(3.0), 1.0 / 1.1, "0")
    cert2 = ik.SubsystemCertificate.from_strings(
        "abs(x1)", 1, 1.0, -math.log(2.0), 1.0, "0")
    return cert1, cert2


def odd_even():
    return [ik.ImpulseSequence.periodic(1.0, 2.0, "odd"),
            ik.ImpulseSequence.periodic(2.0, 2.0, "even")]


def brute_force_mu(prob):
    """Quadratic reference for the scan: maximize the windowed sum over every
    candidate pair, where each boundary is an event time taken from the left
    or the right, the window start t0, or the horizon end T.

    A boundary is (time, left_limit).  An event at tau is inside the window
    (s, t] iff tau > s, or tau == s taken as a left limit; and tau < t, or
    tau == t not taken as a left limit.
    """
    rate = prob.c - prob.lam
    starts = [(prob.t0, False)]
    ends = [(prob.T, False)]
    for ev in prob.events:
        starts.append((ev.time, True))
        starts.append((ev.time, False))
        ends.append((ev.time, True))
        ends.append((ev.time, False))

    def width_key(b):
        # left limit sits infinitesimally before the time itself
        return (b[0], not b[1])

    best = 0.0
    for s, sll in starts:
        for t, tll in ends:
            if width_key((t, tll)) < width_key((s, sll)):
                continue
            total = -rate * (t - s)
            for ev in prob.events:
                inside_left = ev.time > s or (ev.time == s and sll)
                inside_right = ev.time < t or (ev.time == t and not tll)
                if inside_left and inside_right:
                    total += ev.rise
            if total > best:
                best = total
    return best
