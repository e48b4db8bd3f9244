"""Command-line surface: `stash <subcommand>` wiring all modules together.

Exit codes: 0 success, 1 domain error, 2 usage error. All randomness is
controlled by --seed; given identical inputs and seed, every subcommand is
deterministic.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import evaluation, imu, pathmodel, repository, trajectory
from .alignment import needleman_wunsch
from .config import Config
from .errors import StashError
from .movement import LogRegModel, movement_primitives, train_default_model
from .protocol import CHALLENGE, RESPONSE, ACCEPT, REJECT, static_source, verify_proximity
from .scenarios import SCENARIO_NAMES, run_scenario
from .turns import TurnEvent, condition_gyro, detect_turns, integrate_heading, project_to_ground

FRAME_NAMES = {CHALLENGE: "CHALLENGE", RESPONSE: "RESPONSE", ACCEPT: "ACCEPT", REJECT: "REJECT"}


def _load_config(args) -> Config:
    return Config.from_file(args.config) if args.config else Config()


def _load_resampled(path, fmt, rate_hz):
    stream = imu.load_recording(path, format=fmt)
    return imu.resample(stream, rate_hz)


def _events_to_jsonl(events) -> str:
    lines = []
    for ev in events:
        lines.append(json.dumps({
            "t_begin_ns": ev.t_begin_ns,
            "t_end_ns": ev.t_end_ns,
            "angle_deg": ev.angle_deg,
            "count": ev.count,
            "direction": ev.direction,
        }))
    return "\n".join(lines) + ("\n" if lines else "")


def _events_from_jsonl(path) -> list[TurnEvent]:
    events = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            events.append(TurnEvent(
                t_begin_ns=obj["t_begin_ns"], t_end_ns=obj["t_end_ns"],
                angle_deg=obj["angle_deg"], count=obj["count"],
                direction=obj["direction"],
            ))
    return events


def _write_or_print(text: str, out) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_ingest(args):
    cfg = _load_config(args)
    rate = args.rate if args.rate is not None else cfg.ingest.rate_hz
    stream = imu.load_recording(args.file, format=args.format)
    resampled = imu.resample(stream, rate)
    imu.save_recording(resampled, args.out, format=args.out_format)
    print(f"{len(stream)} samples -> {len(resampled)} at {rate} Hz")
    return 0


def cmd_turns(args):
    cfg = _load_config(args)
    stream = _load_resampled(args.file, args.format, cfg.ingest.rate_hz)
    gravity = imu.estimate_gravity(stream)
    yaw = project_to_ground(stream, gravity, stability_gate=cfg.detector.stability_gate)
    conditioned = condition_gyro(yaw, cfg.detector, rate_hz=cfg.ingest.rate_hz)
    trace = integrate_heading(conditioned, window_s=cfg.detector.window_s)
    events = detect_turns(trace, cfg.detector, rate_hz=cfg.ingest.rate_hz)
    _write_or_print(_events_to_jsonl(events), args.out)
    return 0


def cmd_classify(args):
    cfg = _load_config(args)
    stream = _load_resampled(args.file, args.format, cfg.ingest.rate_hz)
    if args.model:
        model, hmm = LogRegModel.load(args.model)
    else:
        model, hmm = train_default_model(seed=args.seed)
    prims = movement_primitives(stream, model, hmm)
    _write_or_print(trajectory.serialize(trajectory.PrimitiveSequence(tuple(prims))), args.out)
    return 0


def cmd_seq(args):
    if args.action == "merge":
        ms = trajectory.load(args.file)
        events = _events_from_jsonl(args.turns)
        result = trajectory.merge_streams(ms, events)
    elif args.action == "strip":
        result = trajectory.strip_stationary(trajectory.load(args.file))
    else:
        result = trajectory.trim_to_duration(trajectory.load(args.file), args.length_s)
    _write_or_print(trajectory.serialize(result), args.out)
    return 0


def cmd_compare(args):
    cfg = _load_config(args)
    a = trajectory.strip_stationary(trajectory.load(args.seq_a))
    b = trajectory.strip_stationary(trajectory.load(args.seq_b))
    print(needleman_wunsch(a, b, cfg.scoring).value)
    return 0


def cmd_synth(args):
    cfg = _load_config(args)
    routes = pathmodel.synthesize_corpus(
        n_routes=args.routes,
        instances_per_route=args.instances,
        route_length_s=args.route_length,
        noise=cfg.noise,
        seed=args.seed,
    )
    pathmodel.save_corpus(routes, args.out)
    print(f"wrote {len(routes)} routes x {args.instances} instances to {args.out}")
    return 0


def cmd_enroll(args):
    cfg = _load_config(args)
    try:
        repo = repository.load(args.repo)
    except FileNotFoundError:
        repo = repository.Repository()
    seq = trajectory.load(args.seq)
    repository.enroll(repo, args.verifier, seq, args.length_min, alpha=cfg.decision.alpha)
    repository.save(repo, args.repo)
    state = repo.paths[args.verifier][0].threshold_state
    print(f"enrolled {args.verifier}: n={state.n} d={state.d:.3f}")
    return 0


def cmd_repo_show(args):
    repo = repository.load(args.repo)
    for vid, paths in sorted(repo.paths.items()):
        for i, rp in enumerate(paths):
            st = rp.threshold_state
            print(
                f"{vid}[{i}] L={rp.length_min}min instances={len(rp.instances)} "
                f"medoid={rp.medoid_index} d_i={st.d_initial} "
                f"d_l={st.d_local} lambda={st.lam:.3f} d={st.d:.3f}"
            )
    return 0


def cmd_verify(args):
    cfg = _load_config(args)
    repo = repository.load(args.repo)
    ref = repo.reference_paths(args.verifier)[0]
    candidate = trajectory.load(args.seq)
    decision = verify_proximity(
        ref, static_source(candidate), max_attempts=cfg.decision.max_attempts
    )
    verdict = "PASS" if decision.passed else "FAIL"
    print(f"{verdict} score={decision.best_score} threshold={ref.threshold_state.d:.3f} "
          f"attempts={decision.attempts_used}")
    return 0


def cmd_simulate(args):
    world = None
    if args.keys:
        from .protocol import load_keys
        from .scenarios import build_world

        world = build_world(seed=args.seed)
        keys = load_keys(args.keys)
        if world.verifier_id in keys:
            world.keys = {world.verifier_id: keys[world.verifier_id]}
    results = run_scenario(
        args.scenario,
        transport=args.transport,
        seed=args.seed,
        sessions=args.sessions,
        relay_latency_s=args.latency,
        user_confirms=args.confirm,
        world=world,
    )
    for i, (outcome, transcript) in enumerate(results):
        for side, way, raw in transcript:
            if way != "send" and len(raw) < 3:
                continue
            ftype = raw[2] if len(raw) > 2 else None
            name = FRAME_NAMES.get(ftype, f"0x{ftype:02x}" if ftype is not None else "?")
            arrow = "->" if way == "send" else "<-"
            print(f"session {i}: prover {arrow} {name} ({len(raw)} bytes)")
        print(
            f"session {i}: outcome={outcome.result.value} "
            f"attempts={outcome.attempts_used} gate_score={outcome.gate_score}"
        )
    return 0


def cmd_eval(args):
    corpus = pathmodel.load_corpus(args.corpus)
    axis = {"length": "length", "instances": "n_instances", "alpha": "alpha"}[args.sweep]
    reports = evaluation.sweep(
        corpus, axis, alpha=args.alpha, length_min=args.length_min, seed=args.seed
    )
    evaluation.emit_report(reports, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML config file")
    common.add_argument("--seed", type=int, default=0, help="master RNG seed")

    parser = argparse.ArgumentParser(prog="stash", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="load, validate, resample a recording")
    p.add_argument("file")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--rate", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--out-format", choices=("csv", "jsonl"), default="csv")
    p.set_defaults(fn=cmd_ingest)

    p = sub.add_parser("turns", parents=[common], help="detect turn events")
    p.add_argument("file")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_turns)

    p = sub.add_parser("classify", parents=[common], help="movement M/S primitives")
    p.add_argument("file")
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--model", help="model JSON (defaults to a seeded built-in)")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("seq", parents=[common], help="sequence file operations")
    p.add_argument("action", choices=("merge", "strip", "trim"))
    p.add_argument("file")
    p.add_argument("--turns", help="turn events JSONL (merge)")
    p.add_argument("--length-s", type=float, help="window seconds (trim)")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_seq)

    p = sub.add_parser("compare", parents=[common], help="NW similarity of two sequences")
    p.add_argument("seq_a")
    p.add_argument("seq_b")
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("synth", parents=[common], help="synthesize a route corpus")
    p.add_argument("--routes", type=int, default=20)
    p.add_argument("--instances", type=int, default=8)
    p.add_argument("--route-length", type=float, default=360.0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("enroll", parents=[common], help="enroll a reference path")
    p.add_argument("--repo", required=True)
    p.add_argument("--verifier", required=True)
    p.add_argument("--seq", required=True)
    p.add_argument("--length-min", type=float, default=2.0)
    p.set_defaults(fn=cmd_enroll)

    p = sub.add_parser("repo", parents=[common], help="inspect the repository")
    p.add_argument("action", choices=("show",))
    p.add_argument("--repo", required=True)
    p.set_defaults(fn=cmd_repo_show)

    p = sub.add_parser("verify", parents=[common], help="gate decision for a candidate")
    p.add_argument("--repo", required=True)
    p.add_argument("--verifier", required=True)
    p.add_argument("--seq", required=True)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("simulate", parents=[common], help="challenge-response simulation")
    p.add_argument("--scenario", choices=SCENARIO_NAMES, required=True)
    p.add_argument("--transport", choices=("inproc", "tcp"), default="inproc")
    p.add_argument("--sessions", type=int, default=1)
    p.add_argument("--latency", type=float, default=0.0)
    p.add_argument("--confirm", action="store_true",
                   help="simulated user confirms proximity on gate failure")
    p.add_argument("--keys", help="key file: one `verifier_id hex32` line per verifier")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("eval", parents=[common], help="FAR/FRR sweeps over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--sweep", choices=("length", "instances", "alpha"), required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--length-min", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except StashError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
