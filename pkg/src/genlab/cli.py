"""Command-line operator surface.

Environment variable GENLAB_CONFIG points at a JSON settings file used when
--config is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .agents import BASELINE_KINDS, baseline_agent
from .envs import (
    EnvConfig,
    InvalidDesignError,
    config_schema,
    default_config,
    env_ids,
    goal_ids,
    make_env,
    registry_table,
)
from .evaluation import ei_regret, eig_nmc
from .harness import agent_handle, replay_discovery, replay_trial, run_trial
from .protocol import EngineSettings, load_settings
from .records import aggregate_table, load_record, save_record
from .rng import RngState


def _settings(args) -> EngineSettings:
    path = getattr(args, "config", None) or os.environ.get("GENLAB_CONFIG")
    return load_settings(path)


def _parse_design(env, text: str) -> dict:
    """Designs as JSON or comma-separated key=value pairs."""
    text = text.strip()
    if text.startswith("{"):
        raw = json.loads(text)
    else:
        raw = {}
        for part in text.split(","):
            if not part.strip():
                continue
            key, _, val = part.partition("=")
            try:
                raw[key.strip()] = json.loads(val.strip())
            except json.JSONDecodeError:
                raw[key.strip()] = val.strip()
    return raw


def _env_config(args) -> EnvConfig:
    params = json.loads(args.params) if getattr(args, "params", None) else {}
    return default_config(args.env, variant=getattr(args, "variant", None),
                          params=params,
                          prior_framing=not getattr(args, "no_prior", False))


def cmd_list_envs(args) -> int:
    for env_id, goals in registry_table():
        print(f"{env_id}: {', '.join(goals)}")
    return 0


def cmd_config(args) -> int:
    print(json.dumps(config_schema(args.env), indent=2, default=str))
    return 0


def cmd_eig(args) -> int:
    config = _env_config(args)
    env = make_env(config)
    design = env.parse_design(_parse_design(env, args.design))
    est = eig_nmc(config, design, args.n_outer, args.m_inner,
                  RngState(args.seed).substream("cli_eig"))
    print(json.dumps({"design": design, "eig": est.value, "std_error": est.std_error,
                      "n_outer": est.n_outer, "m_inner": est.m_inner,
                      "degenerate_count": est.degenerate_count}, default=str))
    return 0


def cmd_regret(args) -> int:
    config = _env_config(args)
    env = make_env(config)
    chosen = [env.parse_design(_parse_design(env, d)) for d in args.design]
    value = ei_regret(config, chosen, args.n_random, RngState(args.seed).substream("cli_regret"),
                      n_outer=args.n_outer, m_inner=args.m_inner)
    print(json.dumps({"ei_regret": value, "n_random": args.n_random}))
    return 0


def cmd_run_trial(args) -> int:
    config = _env_config(args)
    goal = args.goal or goal_ids(args.env)[0]
    settings = _settings(args)
    checkpoints = tuple(int(c) for c in args.checkpoints.split(",")) \
        if args.checkpoints else settings.checkpoints
    records = []
    for r in range(args.runs):
        handle = agent_handle(baseline_agent(args.agent))
        rec = run_trial(config, goal, handle, checkpoints=checkpoints,
                        queries_per_checkpoint=args.queries,
                        master_seed=args.seed, run_index=r, settings=settings)
        records.append(rec)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            save_record(os.path.join(args.out, f"trial_{args.env}_{goal}_{args.seed}_{r}.json"), rec)
    first = min(checkpoints)
    last = max(checkpoints)
    print(aggregate_table(records, first_label=f"Error@{first}", last_label=f"Error@{last}"))
    return 0


def cmd_run_discovery(args) -> int:
    from .harness import run_discovery
    config = _env_config(args)
    goal = args.goal or goal_ids(args.env)[0]
    settings = _settings(args)
    trials, discs = [], []
    for r in range(args.runs):
        sci = agent_handle(baseline_agent(args.scientist))
        nov = agent_handle(baseline_agent(args.novice))
        disc = run_discovery(config, goal, sci, nov, steps=args.steps,
                             budget_chars=args.budget, queries_per_checkpoint=args.queries,
                             master_seed=args.seed, run_index=r, settings=settings)
        trials.append(disc.scientist)
        discs.append(disc)
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            save_record(os.path.join(args.out, f"discovery_{args.env}_{goal}_{args.seed}_{r}.json"), disc)
    print(aggregate_table(trials, discs, last_label=f"Error@{args.steps}"))
    return 0


def cmd_replay(args) -> int:
    obj = load_record(args.record)
    if "scientist" in obj:
        rec, ok = replay_discovery(obj)
    else:
        rec, ok = replay_trial(obj)
    print(json.dumps({"record": args.record, "replay_matches": ok}))
    return 0 if ok else 1


def cmd_serve_stdio(args) -> int:
    from .stdio_server import serve_stdio
    return serve_stdio(args.config or os.environ.get("GENLAB_CONFIG"))


def cmd_serve_http(args) -> int:
    from .http_server import serve_http
    serve_http(args.config or os.environ.get("GENLAB_CONFIG"), bind=args.bind)
    return 0


def cmd_repl(args) -> int:
    """Interactive human-as-agent loop over the same session engine."""
    from .protocol import SessionEngine, WireMessage
    from .records import jsonable
    settings = _settings(args)
    engine = SessionEngine(settings)
    hello = WireMessage("hello", "", 0, jsonable({
        "env": args.env, "goal": args.goal or goal_ids(args.env)[0],
        "seed": args.seed, "identity": "human",
        "prior_mode": not args.no_prior, "mode": "trial"}))
    msgs = engine.handle(hello)
    try:
        while not engine.done:
            reply = None
            for m in msgs:
                print(f"<- {m.type}: {json.dumps(m.payload)[:2000]}")
                if m.type == "query_batch":
                    preds = []
                    for q in m.payload["queries"]:
                        preds.append(json.loads(input(f"prediction for {json.dumps(q)}: ")))
                    reply = WireMessage("prediction_batch", engine.session_id, 0,
                                        jsonable({"checkpoint": m.payload["checkpoint"],
                                                  "predictions": preds}))
                elif m.type == "trial_done":
                    return 0
            if reply is None:
                raw = input("design (key=value,...): ")
                env = make_env(engine.record.config)
                reply = WireMessage("experiment_request", engine.session_id, 0,
                                    jsonable({"design": _parse_design(env, raw)}))
            msgs = engine.handle(reply)
        return 0
    except (EOFError, KeyboardInterrupt):
        print("\nsession abandoned", file=sys.stderr)
        return 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="genlab",
                                description="deterministic generative environments "
                                            "with information-gain scoring")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list-envs", help="print environments and their goals") \
       .set_defaults(fn=cmd_list_envs)

    sp = sub.add_parser("config", help="print an environment's full config schema")
    sp.add_argument("--env", required=True, choices=env_ids())
    sp.set_defaults(fn=cmd_config)

    def common_env(sp, goal=True):
        sp.add_argument("--env", required=True, choices=env_ids())
        if goal:
            sp.add_argument("--goal")
        sp.add_argument("--variant")
        sp.add_argument("--params", help="env parameter overrides as JSON")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--prior", dest="no_prior", action="store_false",
                        help="domain-rich framing (default)")
        sp.add_argument("--no-prior", dest="no_prior", action="store_true",
                        help="domain-scrubbed framing")
        sp.set_defaults(no_prior=False)

    sp = sub.add_parser("eig", help="estimate the EIG of one design")
    common_env(sp, goal=False)
    sp.add_argument("--design", required=True, help="JSON or key=value,...")
    sp.add_argument("--n-outer", type=int, default=1000)
    sp.add_argument("--m-inner", type=int, default=1000)
    sp.set_defaults(fn=cmd_eig)

    sp = sub.add_parser("regret", help="EI regret of chosen designs vs a random pool")
    common_env(sp, goal=False)
    sp.add_argument("--design", action="append", required=True,
                    help="chosen design (repeatable)")
    sp.add_argument("--n-random", type=int, default=100)
    sp.add_argument("--n-outer", type=int, default=500)
    sp.add_argument("--m-inner", type=int, default=500)
    sp.set_defaults(fn=cmd_regret)

    sp = sub.add_parser("run-trial", help="run checkpointed trials with a baseline agent")
    common_env(sp)
    sp.add_argument("--agent", default="random", choices=BASELINE_KINDS)
    sp.add_argument("--runs", type=int, default=5)
    sp.add_argument("--checkpoints", help="comma-separated, default 0,1,3,5,7,10")
    sp.add_argument("--queries", type=int, default=10)
    sp.add_argument("--out", help="directory for trial records")
    sp.add_argument("--config", help="engine settings JSON")
    sp.set_defaults(fn=cmd_run_trial)

    sp = sub.add_parser("run-discovery", help="scientist/novice discovery episodes")
    common_env(sp)
    sp.add_argument("--scientist", default="random", choices=BASELINE_KINDS)
    sp.add_argument("--novice", default="mu0_predictor", choices=BASELINE_KINDS)
    sp.add_argument("--steps", type=int, default=10)
    sp.add_argument("--budget", type=int, default=2000)
    sp.add_argument("--runs", type=int, default=5)
    sp.add_argument("--queries", type=int, default=10)
    sp.add_argument("--out", help="directory for discovery records")
    sp.add_argument("--config", help="engine settings JSON")
    sp.set_defaults(fn=cmd_run_discovery)

    sp = sub.add_parser("replay", help="re-execute a persisted record and verify")
    sp.add_argument("record")
    sp.set_defaults(fn=cmd_replay)

    sp = sub.add_parser("repl", help="interactive human-as-agent session")
    common_env(sp)
    sp.add_argument("--config", help="engine settings JSON")
    sp.set_defaults(fn=cmd_repl)

    sp = sub.add_parser("serve-stdio", help="speak the wire protocol on stdin/stdout")
    sp.add_argument("--config", help="engine settings JSON")
    sp.set_defaults(fn=cmd_serve_stdio)

    sp = sub.add_parser("serve-http", help="session-scoped HTTP service")
    sp.add_argument("--config", help="engine settings JSON")
    sp.add_argument("--bind", default="127.0.0.1:8800")
    sp.set_defaults(fn=cmd_serve_http)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InvalidDesignError as e:
        print(f"invalid design: {e.reason}", file=sys.stderr)
        return 2
    except (KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
