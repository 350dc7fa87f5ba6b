import numpy as np
import pytest

import impulsekit as ik
from impulsekit import (
    ImpulseSequence, ImpulsiveSystem, InputSignal, JumpRule, Subsystem,
    interconnect, validate,
)
from impulsekit.exprlang import parse_vector

import helpers


def test_from_strings_builds_example():
    sys = helpers.doubling_damped()
    assert sys.n == 1
    assert sys.m == 0
    assert len(sys.jumps) == 2
    assert [s.label for s in sys.sequences] == ["odd", "even"]
    assert sys.flow.eval([3.0])[0] == pytest.approx(-0.6, abs=1e-15)


def test_dimension_checks():
    with pytest.raises(ValueError):
        ImpulsiveSystem(2, 0, parse_vector(["x1"], 2))  # one component for n=2
    flow = parse_vector(["-x1", "-x2"], 2)
    bad_map = parse_vector(["x1"], 2)
    seq = ImpulseSequence.periodic(1.0, 1.0)
    with pytest.raises(ValueError):
        ImpulsiveSystem(2, 0, flow, (JumpRule(seq, bad_map),))


def test_input_signal_zero_and_const():
    z = InputSignal.zero(2)
    assert z.value(3.0).tolist() == [0.0, 0.0]
    assert z.sup_norm(0.0, 10.0) == 0.0
    c = InputSignal.const([1.0, -2.0])
    assert c.m == 2
    assert c.value(0.0).tolist() == [1.0, -2.0]
    assert c.left_limit(5.0).tolist() == [1.0, -2.0]
    assert c.sup_norm(0.0, 1.0) == pytest.approx(np.sqrt(5.0), abs=1e-15)


def test_piecewise_constant_is_right_continuous():
    u = InputSignal.piecewise_constant([1.0, 2.0], [[0.0], [5.0], [1.0]])
    assert u.value(0.5)[0] == 0.0
    # at a breakpoint the new value holds, the old one is the left limit
    assert u.value(1.0)[0] == 5.0
    assert u.left_limit(1.0)[0] == 0.0
    assert u.value(1.5)[0] == 5.0
    assert u.value(2.0)[0] == 1.0
    assert u.left_limit(2.0)[0] == 5.0
    np.testing.assert_array_equal(
        u.values_at([0.0, 1.0, 1.5, 3.0]).ravel(), [0.0, 5.0, 5.0, 1.0])
    assert u.sup_norm(0.0, 0.5) == 0.0
    assert u.sup_norm(0.0, 10.0) == 5.0


def test_piecewise_validation():
    with pytest.raises(ValueError):
        InputSignal.piecewise_constant([2.0, 1.0], [[0.0], [1.0], [2.0]])
    with pytest.raises(ValueError):
        InputSignal.piecewise_constant([1.0], [[0.0]])


def test_expression_signal():
    u = InputSignal.from_expressions(["sin(t)", "2*t"])
    assert u.m == 2
    np.testing.assert_allclose(u.value(0.5), [np.sin(0.5), 1.0], atol=1e-15)
    vals = u.values_at([0.0, 0.25, 0.5])
    assert vals.shape == (3, 2)
    assert vals[1, 1] == 0.5


def test_validate_reports_shared_impulse_times():
    sys = ImpulsiveSystem.from_strings(
        flow=["-x1"],
        jumps=[
            (ImpulseSequence.periodic(1.0, 2.0, "odd"), ["2*x1"]),
            (ImpulseSequence.explicit([3.0], "solo"), ["0.5*x1"]),
        ],
    )
    violations = validate(sys, 10.0)
    assert len(violations) == 1
    assert "3.0" in violations[0]


def test_validate_reports_origin_domain_errors():
    sys = ImpulsiveSystem.from_strings(
        flow=["1/x1"],
        jumps=[(ImpulseSequence.periodic(1.0, 2.0), ["ln(x1)"])],
    )
    violations = validate(sys, 5.0)
    assert len(violations) == 2
    assert any("flow" in v for v in violations)
    assert any("jump" in v for v in violations)


def test_validate_clean_system():
    assert validate(helpers.doubling_damped(), 20.0) == []


def test_interconnect_pads_with_identity():
    sub1, sub2 = helpers.coupled_subsystems()
    sys = interconnect(sub1, sub2, horizon=10.0)
    assert sys.n == 2
    assert sys.m == 0
    assert len(sys.jumps) == 2
    slots = {r.slot: r for r in sys.jumps}
    assert set(slots) == {"only1", "only2"}
    # first rule rescales x1 and must leave x2 alone, and vice versa
    np.testing.assert_array_equal(slots["only1"].map.eval([2.0, 5.0]), [6.0, 5.0])
    np.testing.assert_array_equal(slots["only2"].map.eval([2.0, 5.0]), [2.0, 10.0])


def test_interconnect_disjoint_keeps_periodic_sequences():
    sub1, sub2 = helpers.coupled_subsystems()
    sys = interconnect(sub1, sub2, horizon=10.0)
    for rule in sys.jumps:
        assert rule.sequence.kind == "periodic"
    assert sys.jumps[0].sequence is sub1.sequence
    assert sys.jumps[1].sequence is sub2.sequence


def test_interconnect_counts_preserved():
    sub1, sub2 = helpers.coupled_subsystems()
    horizon = 37.0
    sys = interconnect(sub1, sub2, horizon=horizon)
    merged = ik.timegrid.merge(sys.sequences, 0.0, horizon)
    expected = (len(sub1.sequence.realize(0.0, horizon))
                + len(sub2.sequence.realize(0.0, horizon)))
    assert len(merged) == expected


def test_interconnect_coincident_times_fire_both_maps():
    seq = ImpulseSequence.periodic(1.0, 1.0, "tick")
    sub1 = Subsystem.from_strings(
        flow=["-x1"], jump=["3*x1"], sequence=seq,
        n_self=1, n_other=1, m=0)
    sub2 = Subsystem.from_strings(
        flow=["-x2"], jump=["2*x2"], sequence=seq,
        n_self=1, n_other=1, m=0)
    sys = interconnect(sub1, sub2, horizon=5.0)
    assert len(sys.jumps) == 1
    rule = sys.jumps[0]
    assert rule.slot == "both"
    np.testing.assert_array_equal(rule.map.eval([1.0, 1.0]), [3.0, 2.0])
    assert rule.sequence.times == (1.0, 2.0, 3.0, 4.0, 5.0)


def test_interconnect_offsets_second_subsystem_inputs():
    sub1 = Subsystem.from_strings(
        flow=["-x1 + u1"], jump=["x1"],
        sequence=ImpulseSequence.periodic(1.0, 2.0),
        n_self=1, n_other=1, m=1)
    sub2 = Subsystem.from_strings(
        flow=["-x2 + 10*u1"], jump=["x2"],
        sequence=ImpulseSequence.periodic(2.0, 2.0),
        n_self=1, n_other=1, m=1)
    sys = interconnect(sub1, sub2, horizon=5.0)
    assert sys.m == 2
    # u1 feeds the first block, u2 the second
    np.testing.assert_allclose(
        sys.flow.eval([0.0, 0.0], [1.0, 2.0]), [1.0, 20.0], atol=1e-15)


def test_interconnect_dimension_mismatch():
    sub1 = Subsystem.from_strings(
        flow=["-x1"], jump=["x1"],
        sequence=ImpulseSequence.periodic(1.0, 2.0),
        n_self=1, n_other=2, m=0)
    sub2 = Subsystem.from_strings(
        flow=["-x2"], jump=["x2"],
        sequence=ImpulseSequence.periodic(2.0, 2.0),
        n_self=1, n_other=1, m=0)
    with pytest.raises(ik.ConfigError):
        interconnect(sub1, sub2, horizon=5.0)
