"""Batch front end: run simulate/certify/dwell/compose/pipeline tasks from a
JSON job file.

Exit codes: 0 all tasks succeeded, 1 a task failed (a machine-readable error
report is still written to the task's output path), 2 the job file or the
command line could not be parsed, 3 the job parsed but did not validate
(dangling references, bad expressions, dimension mismatches).

Artifacts are deterministic: JSON is emitted with sorted keys, floats use
repr round-tripping, and nothing time- or host-dependent is written, so a
rerun of the same job (and seed) is byte-identical.
"""

import argparse
import json
import sys
from importlib import resources
from pathlib import Path

from . import certify, dwell, exprlang, sim, smallgain
from .certify import LyapunovCandidate, SamplingRegion, SubsystemCertificate
from .errors import ConfigError, DomainError, ImpulsekitError, SimulationError
from .model import ImpulsiveSystem, InputSignal, Subsystem
from .timegrid import ImpulseSequence

__all__ = ["run", "main"]


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _num(value, what="value"):
    """A JSON number, or a constant expression string like "-ln(2)"."""
    if isinstance(value, bool):
        raise ConfigError("%s must be a number, got a boolean" % what)
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(exprlang.parse(value, 0, 0).eval([]))
        except DomainError as exc:
            raise ConfigError("%s: %s" % (what, exc))
    raise ConfigError("%s must be a number or a constant expression" % what)


def _sequence(cfg, what="sequence"):
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("%s must be an object with a \"kind\"" % what)
    label = cfg.get("label", "")
    if cfg["kind"] == "periodic":
        return ImpulseSequence.periodic(
            _num(cfg["start"], what + ".start"),
            _num(cfg["period"], what + ".period"), label=label)
    if cfg["kind"] == "explicit":
        return ImpulseSequence.explicit(
            [_num(t, what + ".times") for t in cfg["times"]], label=label)
    raise ConfigError("%s has unknown kind %r" % (what, cfg["kind"]))


def _input_signal(cfg, what="input"):
    kind = cfg.get("kind")
    if kind == "zero":
        return InputSignal.zero(int(cfg.get("m", 0)))
    if kind == "constant":
        return InputSignal.const([_num(v, what) for v in cfg["values"]])
    if kind == "piecewise":
        return InputSignal.piecewise_constant(
            [_num(b, what + ".breakpoints") for b in cfg["breakpoints"]],
            [[_num(v, what + ".values") for v in row] for row in cfg["values"]])
    if kind == "expression":
        return InputSignal.from_expressions(cfg["exprs"])
    raise ConfigError("%s has unknown kind %r" % (what, kind))


def _region(cfg, what="region"):
    if not isinstance(cfg, dict) or "X" not in cfg:
        raise ConfigError("%s must be an object with at least \"X\"" % what)
    return SamplingRegion(
        X=_num(cfg["X"], what + ".X"),
        U=_num(cfg.get("U", 0.0), what + ".U"),
        k=int(cfg.get("k", 21)),
        rho=_num(cfg["rho"], what + ".rho") if "rho" in cfg else -1.0,
        tol=_num(cfg.get("tol", 1e-7), what + ".tol"),
    )


def _system(name, cfg):
    jumps = []
    for i, jcfg in enumerate(cfg.get("jumps", []), start=1):
        seq = _sequence(jcfg["sequence"], "system %r jump %d sequence" % (name, i))
        jumps.append((seq, list(jcfg["map"])))
    return ImpulsiveSystem.from_strings(
        list(cfg["flow"]), jumps, m=int(cfg.get("m", 0)),
        t0=_num(cfg.get("t0", 0.0), "t0"), label=name)


def _subsystem(name, cfg):
    return Subsystem.from_strings(
        int(cfg["n_self"]), int(cfg["n_other"]), int(cfg.get("m", 0)),
        list(cfg["flow"]), list(cfg["jump"]),
        _sequence(cfg["sequence"], "subsystem %r sequence" % name),
        label=cfg.get("label", name))


def _certificate(name, cfg):
    kind = cfg.get("type")
    if kind == "candidate":
        return LyapunovCandidate.from_strings(
            cfg["V"], int(cfg["n"]), _num(cfg["c"], "c"),
            [_num(v, "d") for v in cfg["d"]], cfg.get("gamma", "r"))
    if kind == "subsystem":
        return SubsystemCertificate.from_strings(
            cfg["V"], int(cfg["n"]), _num(cfg["c"], "c"),
            _num(cfg["d_hat"], "d_hat"),
            _num(cfg["gain_internal"], "gain_internal"),
            cfg.get("gain_input", "r"))
    raise ConfigError("certificate %r has unknown type %r" % (name, kind))


_TASK_KINDS = ("simulate", "certify", "dwell", "compose", "pipeline")


class Job:
    """Parsed and reference-checked job file."""

    def __init__(self, data):
        if not isinstance(data, dict):
            raise ConfigError("job root must be a JSON object")
        self.systems = {n: _system(n, c)
                        for n, c in data.get("systems", {}).items()}
        self.subsystems = {n: _subsystem(n, c)
                           for n, c in data.get("subsystems", {}).items()}
        self.inputs = {n: _input_signal(c, "input %r" % n)
                       for n, c in data.get("inputs", {}).items()}
        self.certificates = {n: _certificate(n, c)
                             for n, c in data.get("certificates", {}).items()}
        self.tasks = data.get("tasks", [])
        if not isinstance(self.tasks, list):
            raise ConfigError("\"tasks\" must be a list")
        seen_out = set()
        for i, task in enumerate(self.tasks, start=1):
            if not isinstance(task, dict):
                raise ConfigError("task %d must be an object" % i)
            kind = task.get("kind")
            if kind not in _TASK_KINDS:
                raise ConfigError("task %d has unknown kind %r" % (i, kind))
            out = task.get("out")
            if not out or not isinstance(out, str):
                raise ConfigError("task %d needs an \"out\" path" % i)
            if out in seen_out:
                raise ConfigError("output path collision on %r" % out)
            seen_out.add(out)
            self._check_refs(i, task)

    def _lookup(self, table, key, name, where):
        if name not in table:
            raise ConfigError("unknown %s %r in %s" % (key, name, where))
        return table[name]

    def system(self, name, where):
        return self._lookup(self.systems, "system", name, where)

    def subsystem(self, name, where):
        return self._lookup(self.subsystems, "subsystem", name, where)

    def input(self, name, where):
        return self._lookup(self.inputs, "input", name, where)

    def certificate(self, name, where):
        return self._lookup(self.certificates, "certificate", name, where)

    def _check_refs(self, i, task):
        where = "task %d" % i
        kind = task["kind"]
        if kind == "simulate":
            self.system(task["system"], where)
            if "input" in task:
                self.input(task["input"], where)
        elif kind == "certify":
            self.system(task["system"], where)
            cand = self.certificate(task["certificate"], where)
            if not isinstance(cand, LyapunovCandidate):
                raise ConfigError(
                    "certificate %r in %s is not a whole-system candidate"
                    % (task["certificate"], where))
            _region(task["region"], where + " region")
        elif kind == "dwell":
            if "sample" not in task and "times" not in task and \
                    "sequences" not in task:
                raise ConfigError("%s needs sequences, times or a sample block"
                                  % where)
        elif kind == "compose":
            for key in ("cert1", "cert2"):
                cert = self.certificate(task[key], where)
                if not isinstance(cert, SubsystemCertificate):
                    raise ConfigError(
                        "certificate %r in %s is not a subsystem certificate"
                        % (task[key], where))
        elif kind == "pipeline":
            self.subsystem(task["sub1"], where)
            self.subsystem(task["sub2"], where)
            for key in ("cert1", "cert2"):
                cert = self.certificate(task[key], where)
                if not isinstance(cert, SubsystemCertificate):
                    raise ConfigError(
                        "certificate %r in %s is not a subsystem certificate"
                        % (task[key], where))
            if "region" in task:
                _region(task["region"], where + " region")


def _task_simulate(job, task, seed):
    where = "simulate task"
    sys_ = job.system(task["system"], where)
    u = job.input(task["input"], where) if "input" in task else None
    x0 = [_num(v, "x0") for v in task["x0"]]
    traj = sim.simulate(sys_, x0, u=u,
                        T=_num(task["T"], "T"),
                        dt=_num(task.get("dt", 1e-3), "dt"))
    if traj.aborted:
        raise SimulationError(traj.abort_reason)
    return traj.to_csv()


def _task_certify(job, task, seed):
    where = "certify task"
    sys_ = job.system(task["system"], where)
    cand = job.certificate(task["certificate"], where)
    region = _region(task["region"])
    which = task.get("check", "both")
    if which not in ("flow", "jump", "both"):
        raise ConfigError("certify check must be flow, jump or both")
    artifact = {"candidate_violations": certify.validate_candidate(cand, region),
                "reports": {}}
    if which in ("flow", "both"):
        artifact["reports"]["flow"] = \
            certify.check_flow_condition(sys_, cand, region).to_dict()
    if which in ("jump", "both"):
        artifact["reports"]["jump"] = \
            certify.check_jump_condition(sys_, cand, region).to_dict()
    return _dump(artifact)


def _task_dwell(job, task, seed):
    d = [_num(v, "d") for v in task["d"]]
    c = _num(task["c"], "c")
    lam = _num(task["lambda"], "lambda")
    t0 = _num(task.get("t0", 0.0), "t0")
    T = _num(task["T"], "T")

    if "sample" in task:
        if "mu" not in task:
            raise ConfigError("a dwell sample block needs \"mu\"")
        mu = _num(task["mu"], "mu")
        intensity = _num(task["sample"]["intensity"], "sample.intensity")
        family = dwell.sample_in_class(seed, mu, lam, c, d, t0, T, intensity)
        prob = dwell.DwellTimeProblem.from_sequences(family, d, c, lam, t0, T)
        chk = dwell.check(prob, mu)
        return _dump({
            "sampled": [{"label": s.label, "times": list(s.times)}
                        for s in family],
            "seed": seed,
            "check": {"mu": chk.mu, "passed": chk.passed},
            "verdict": chk.verdict.to_dict(),
        })

    if "times" in task:
        times = [_num(t, "times") for t in task["times"]]
        prob = dwell.DwellTimeProblem.from_events(times, d, c, lam, t0, T)
    else:
        seqs = [_sequence(s, "dwell sequence") for s in task["sequences"]]
        prob = dwell.DwellTimeProblem.from_sequences(seqs, d, c, lam, t0, T)
    verdict = dwell.minimal_mu(prob)
    artifact = {
        "problem": {"c": c, "lambda": lam, "t0": t0, "T": T,
                    "n_events": len(prob.events)},
        "verdict": verdict.to_dict(),
    }
    if "mu" in task:
        chk = dwell.check(prob, _num(task["mu"], "mu"))
        artifact["check"] = {"mu": chk.mu, "passed": chk.passed}
    return _dump(artifact)


def _task_compose(job, task, seed):
    where = "compose task"
    cert1 = job.certificate(task["cert1"], where)
    cert2 = job.certificate(task["cert2"], where)
    result = smallgain.compose(cert1, cert2,
                               epsilon=_num(task.get("epsilon", 1e-3), "epsilon"))
    return _dump({
        "small_gain_product": cert1.gain_internal * cert2.gain_internal,
        "composition": result.to_dict(),
    })


def _task_pipeline(job, task, seed):
    where = "pipeline task"
    report = smallgain.iss_pipeline(
        job.subsystem(task["sub1"], where),
        job.subsystem(task["sub2"], where),
        job.certificate(task["cert1"], where),
        job.certificate(task["cert2"], where),
        epsilon=_num(task.get("epsilon", 1e-3), "epsilon"),
        lam=_num(task.get("lambda", 0.05), "lambda"),
        horizon=_num(task.get("horizon", 100.0), "horizon"),
        region=_region(task["region"]) if "region" in task else None,
        t0=_num(task.get("t0", 0.0), "t0"),
    )
    return _dump(report.to_dict())


_RUNNERS = {
    "simulate": _task_simulate,
    "certify": _task_certify,
    "dwell": _task_dwell,
    "compose": _task_compose,
    "pipeline": _task_pipeline,
}


def _execute(job, out_dir, seed, quiet):
    failures = 0
    for i, task in enumerate(job.tasks, start=1):
        kind = task["kind"]
        out_path = Path(out_dir) / task["out"]
        try:
            text = _RUNNERS[kind](job, task, seed)
            out_path.parent.mkdir(parents=True, exist_ok=True)
            out_path.write_text(text)
            if not quiet:
                print("task %d (%s) -> %s" % (i, kind, out_path))
        except Exception as exc:
            failures += 1
            print("task %d (%s) failed: %s" % (i, kind, exc), file=sys.stderr)
            try:
                out_path.parent.mkdir(parents=True, exist_ok=True)
                out_path.write_text(_dump(
                    {"error": str(exc), "task": i, "kind": kind}))
            except OSError:
                pass
    return 1 if failures else 0


def _resolve_job(arg):
    """A filesystem path, or bundled:<name> for a packaged example job."""
    if arg.startswith("bundled:"):
        name = arg[len("bundled:"):]
        if not name.endswith(".json"):
            name += ".json"
        return resources.files("impulsekit").joinpath("jobs", name)
    return Path(arg)


def run(argv=None):
    parser = argparse.ArgumentParser(
        prog="impulsekit",
        description="Simulate impulsive systems and verify ISS-Lyapunov "
                    "certificates from a JSON job file.")
    parser.add_argument("--job", required=True,
                        help="job file path, or bundled:<name> "
                             "(example1, example1_revisited, "
                             "example2_pipeline, example2_majorant)")
    parser.add_argument("--out-dir", default=".",
                        help="directory for artifacts (default: current)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for dwell-time sequence sampling")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress per-task progress lines")
    args = parser.parse_args(argv)

    source = _resolve_job(args.job)
    try:
        text = source.read_text()
    except OSError as exc:
        print("cannot read job file %s: %s" % (args.job, exc), file=sys.stderr)
        return 2
    try:
        data = json.loads(text)
    except ValueError as exc:
        print("job file is not valid JSON: %s" % exc, file=sys.stderr)
        return 2
    try:
        job = Job(data)
    except (ImpulsekitError, AttributeError, KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, KeyError) and exc.args:
            detail = "missing required key %r" % exc.args[0]
        else:
            detail = exc
        print("invalid job: %s" % (detail,), file=sys.stderr)
        return 3
    return _execute(job, args.out_dir, args.seed, args.quiet)


def main(argv=None):
    raise SystemExit(run(argv))


if __name__ == "__main__":
    main()
