"""Command-line entry point.

Every verb runs in-process by default; passing --server delegates the work to
a running service instance (see the `serve` verb) over HTTP.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .config import ConfigError, load_config
from .runner import emit_figure_data, load_artifacts, run, train_then_eval

POLL_INTERVAL_S = 0.5


def _print_summary(summary: dict, out_dir: str | None) -> None:
    pooled = summary["pooled"]
    print(
        f"policy={summary['policy']} seed={summary['seed']} "
        f"vehicles={summary['n_vehicles']} mechanism={summary['mechanism']}"
    )
    qoe = pooled["mean_qoe"]
    prr = pooled["mean_prr"]
    reward = pooled["mean_reward"]
    print(
        f"windows={pooled['windows_observed']}"
        + (f" meanQoE={qoe:.4f}" if qoe is not None else "")
        + (f" meanPRR={prr:.4f}" if prr is not None else "")
        + (f" meanReward={reward:.4f}" if reward is not None else "")
    )
    delay = pooled["delay_ms"]
    if delay is not None:
        print(
            f"delay ms: mean={delay['mean']:.2f} p25={delay['p25']:.2f} "
            f"p50={delay['p50']:.2f} p75={delay['p75']:.2f} p95={delay['p95']:.2f}"
        )
    print(f"bursts: {pooled['bursts_sent']} sent, {pooled['bursts_completed']} completed")
    if out_dir:
        print(f"artifacts: {out_dir}")


def _load(args: argparse.Namespace):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.model_copy(update={"seed": args.seed})
    return cfg


def _cmd_run(args: argparse.Namespace) -> int:
    if args.server:
        return _remote_job(args, kind="run")
    cfg = _load(args)
    artifacts = run(cfg, out_dir=args.out)
    _print_summary(artifacts.summary, args.out or cfg.output_dir)
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    if args.server:
        return _remote_job(args, kind="train")
    cfg = _load(args)
    agent_update = {"mode": "train"}
    if args.model_out is not None:
        agent_update["model_out"] = args.model_out
    cfg = cfg.model_copy(update={"agent": cfg.agent.model_copy(update=agent_update)})
    artifacts = train_then_eval(cfg, args.episodes, out_dir=args.out)
    _print_summary(artifacts.summary, args.out or cfg.output_dir)
    if cfg.agent.model_out:
        print(f"model: {cfg.agent.model_out}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    if args.server:
        return _remote_job(args, kind="run", force_eval=True)
    cfg = _load(args)
    model_in = args.model or cfg.agent.model_in
    if cfg.policy == "dql" and model_in is None:
        print("eval needs a trained model: pass --model or set agent.model_in", file=sys.stderr)
        return 1
    cfg = cfg.model_copy(
        update={"agent": cfg.agent.model_copy(update={"mode": "evaluate", "model_in": model_in})}
    )
    artifacts = run(cfg, out_dir=args.out)
    _print_summary(artifacts.summary, args.out or cfg.output_dir)
    return 0


def _cmd_figdata(args: argparse.Namespace) -> int:
    if args.server:
        import httpx

        resp = httpx.post(
            f"{args.server.rstrip('/')}/figdata",
            json={"job_ids": args.runs, "out_dir": args.out},
            timeout=60.0,
        )
        if resp.status_code != 200:
            print(f"figdata failed: {resp.status_code} {resp.text}", file=sys.stderr)
            return 2
        body = resp.json()
        print(f"delays: {body['delays']}")
        print(f"prr: {body['prr']}")
        return 0
    artifact_sets = [load_artifacts(run_dir) for run_dir in args.runs]
    paths = emit_figure_data(artifact_sets, args.out)
    print(f"delays: {paths['delays']}")
    print(f"prr: {paths['prr']}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    if args.server:
        import httpx

        data = json.loads(Path(args.config).read_text())
        resp = httpx.post(
            f"{args.server.rstrip('/')}/validate-config", json={"config": data}, timeout=30.0
        )
        body = resp.json()
        if body["valid"]:
            print("config OK")
            return 0
        for problem in body["problems"]:
            print(f"  - {problem}", file=sys.stderr)
        return 1
    cfg = load_config(args.config)
    print(
        f"config OK: policy={cfg.policy} vehicles={cfg.scenario.n_vehicles} "
        f"duration={cfg.scenario.duration_s}s mechanism={cfg.controller.mechanism}"
    )
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def _remote_job(args: argparse.Namespace, kind: str, force_eval: bool = False) -> int:
    import httpx

    server = args.server.rstrip("/")
    data = json.loads(Path(args.config).read_text())
    if force_eval:
        agent = data.setdefault("agent", {})
        agent["mode"] = "evaluate"
        if getattr(args, "model", None):
            agent["model_in"] = args.model
    payload = {"config": data, "kind": kind, "out_dir": args.out}
    if getattr(args, "seed", None) is not None:
        payload["seed"] = args.seed
    if kind == "train":
        payload["episodes"] = args.episodes
    resp = httpx.post(f"{server}/runs", json=payload, timeout=30.0)
    if resp.status_code != 202:
        print(f"submit failed: {resp.status_code} {resp.text}", file=sys.stderr)
        return 2
    job_id = resp.json()["job_id"]
    print(f"job {job_id} submitted")
    while True:
        status = httpx.get(f"{server}/runs/{job_id}", timeout=30.0).json()
        if status["state"] == "done":
            _print_summary(status["summary"], args.out)
            return 0
        if status["state"] == "error":
            print(f"job failed:\n{status['error']}", file=sys.stderr)
            return 2
        time.sleep(POLL_INTERVAL_S)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pqos-sim",
        description="Teleoperated-driving cell simulator with a learning mode controller.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_common(p: argparse.ArgumentParser, with_seed: bool = True) -> None:
        p.add_argument("config", help="path to a run config JSON file")
        if with_seed:
            p.add_argument("--seed", type=int, default=None, help="override config.seed")
        p.add_argument("--out", default=None, help="artifact output directory")
        p.add_argument("--server", default=None, help="delegate to a service at this base URL")

    p_run = sub.add_parser("run", help="execute one configured simulation run")
    add_common(p_run)
    p_run.set_defaults(fn=_cmd_run)

    p_train = sub.add_parser("train", help="train the agent over repeated episodes, then evaluate")
    add_common(p_train)
    p_train.add_argument("--episodes", type=int, default=50, help="training episodes (default 50)")
    p_train.add_argument("--model-out", default=None, help="where to save the trained model")
    p_train.set_defaults(fn=_cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a saved model greedily (no exploration)")
    add_common(p_eval)
    p_eval.add_argument("--model", default=None, help="model file (overrides agent.model_in)")
    p_eval.set_defaults(fn=_cmd_eval)

    p_fig = sub.add_parser("figdata", help="export long-format delay/PRR distribution data")
    p_fig.add_argument("runs", nargs="+", help="completed artifact directories (or job ids with --server)")
    p_fig.add_argument("--out", required=True, help="output directory for the CSV bundle")
    p_fig.add_argument("--server", default=None, help="delegate to a service at this base URL")
    p_fig.set_defaults(fn=_cmd_figdata)

    p_val = sub.add_parser("validate-config", help="check a config file and report every problem")
    p_val.add_argument("config", help="path to a run config JSON file")
    p_val.add_argument("--server", default=None, help="delegate to a service at this base URL")
    p_val.set_defaults(fn=_cmd_validate)

    p_serve = sub.add_parser("serve", help="start the HTTP job-runner service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8176)
    p_serve.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
