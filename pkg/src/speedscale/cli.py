"""Command-line front end: a thin client of the FastAPI service.

By default requests run against the service in-process (no network); pass
--server to talk to a running instance instead.  Single artifacts print as
JSON, sweeps (bench, gap-experiment) print as CSV.

Exit codes: 0 success, 1 parse error, 2 infeasible or over the size cap,
3 internal contract violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import httpx

from . import __version__
from .oracle import DEFAULT_CAP

_EXIT_BY_KIND = {"parse": 1, "infeasible": 2, "size": 2, "contract": 3, "internal": 3}


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    # no server: mount the ASGI app in-process (identical request/response path)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        from starlette.testclient import TestClient

        from .service import app

        return TestClient(app, raise_server_exceptions=False)


def _load_json(path: str, what: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        print(f"error: {what} file not found: {path}", file=sys.stderr)
        raise SystemExit(1)
    except json.JSONDecodeError as exc:
        print(f"error: {what} file is not valid JSON: {exc}", file=sys.stderr)
        raise SystemExit(1)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        print(text, end="" if text.endswith("\n") else "\n")


def _post(args, path: str, payload: dict) -> dict:
    with _client(args.server) as client:
        response = client.post(path, json=payload)
    if response.status_code >= 400:
        try:
            error = response.json().get("error", {})
        except Exception:
            error = {}
        kind = error.get("kind", "internal")
        message = error.get("message", response.text)
        where = f" at {error['path']}" if error.get("path") else ""
        print(f"error ({kind}){where}: {message}", file=sys.stderr)
        raise SystemExit(_EXIT_BY_KIND.get(kind, 3))
    return response.json()


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--server", help="base URL of a running service (default: in-process)")
    parser.add_argument("--out", help="write the result to this file instead of stdout")
    parser.add_argument("--alpha", type=float, help="exponent of the power function")
    parser.add_argument("--epsilon", type=float, help="landmark density parameter")
    parser.add_argument("--seed", type=int, default=0, help="random seed")
    parser.add_argument(
        "--strategy", choices=["lp", "greedy"], default="lp", help="window assignment strategy"
    )
    parser.add_argument(
        "--no-constraint-3",
        action="store_true",
        help="drop the non-preemption constraint family from the relaxation",
    )
    parser.add_argument("--cap", type=int, default=DEFAULT_CAP, help="brute-force state cap")


def build_parser() -> argparse.ArgumentParser:
    root = argparse.ArgumentParser(prog="speedscale", description=__doc__)
    root.add_argument("--version", action="version", version=f"speedscale {__version__}")
    sub = root.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="schedule an instance end to end")
    _common(p)
    p.add_argument("-i", "--instance", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("lp", help="relaxation operations")
    lp_sub = p.add_subparsers(dest="lp_command", required=True)
    q = lp_sub.add_parser("solve", help="solve the interval LP relaxation")
    _common(q)
    q.add_argument("-i", "--instance", required=True)
    q.set_defaults(func=cmd_lp_solve)

    p = sub.add_parser("round", help="solve the relaxation and round to a schedule")
    _common(p)
    p.add_argument("-i", "--instance", required=True)
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("oracle", help="exact baselines")
    o_sub = p.add_subparsers(dest="oracle_command", required=True)
    q = o_sub.add_parser("yds", help="preemptive single-processor optimum")
    _common(q)
    q.add_argument("-i", "--instance", required=True)
    q.set_defaults(func=cmd_oracle_yds)
    q = o_sub.add_parser("brute", help="exhaustive landmark-aligned optimum")
    _common(q)
    q.add_argument("-i", "--instance", required=True)
    q.set_defaults(func=cmd_oracle_brute)

    p = sub.add_parser("discretize", help="landmark grid of an instance")
    _common(p)
    p.add_argument("-i", "--instance", required=True)
    p.add_argument("--dump", action="store_true", help="print the grid as a JSON array")
    p.set_defaults(func=cmd_discretize)

    p = sub.add_parser("gap-experiment", help="integrality-gap sweep (CSV)")
    _common(p)
    p.add_argument("--ns", default="2,4,8", help="comma-separated family sizes")
    p.set_defaults(func=cmd_gap_experiment)

    p = sub.add_parser("reduce-3dm", help="map a 3DM instance to a scheduling instance")
    _common(p)
    p.add_argument("--input", required=True, help="3DM JSON file")
    p.set_defaults(func=cmd_reduce_3dm)

    p = sub.add_parser("check-gap", help="verify the reduction's gap inequality")
    _common(p)
    p.add_argument("--tdm", required=True, help="3DM JSON file")
    p.add_argument("--schedule", required=True, help="schedule JSON file")
    p.set_defaults(func=cmd_check_gap)

    p = sub.add_parser("bench", help="benchmark a corpus directory (CSV)")
    _common(p)
    p.add_argument("--corpus", required=True, help="directory of instance JSON files")
    p.add_argument("--strategies", default="lp,greedy")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="instance generators")
    g_sub = p.add_subparsers(dest="gen_command", required=True)
    q = g_sub.add_parser("random", help="seeded random instance")
    _common(q)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--m", type=int, default=1)
    q.add_argument("--work-range", default="1,3")
    q.add_argument("--horizon", type=int, default=3)
    q.set_defaults(func=cmd_gen_random)
    q = g_sub.add_parser("gap-family", help="the integrality-gap family")
    _common(q)
    q.add_argument("--n", type=int, required=True)
    q.set_defaults(func=cmd_gen_gap)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)
    return root


def cmd_solve(args) -> int:
    payload = {
        "instance": _load_json(args.instance, "instance"),
        "strategy": args.strategy,
        "include_nonpreemption": not args.no_constraint_3,
        "cap": args.cap,
    }
    if args.epsilon is not None:
        payload["epsilon"] = args.epsilon
    reply = _post(args, "/solve", payload)
    _emit(json.dumps(reply, indent=2), args.out)
    return 0


def cmd_lp_solve(args) -> int:
    payload = {
        "instance": _load_json(args.instance, "instance"),
        "include_nonpreemption": not args.no_constraint_3,
    }
    if args.epsilon is not None:
        payload["epsilon"] = args.epsilon
    reply = _post(args, "/lp/solve", payload)
    _emit(json.dumps(reply, indent=2), args.out)
    return 0


def cmd_round(args) -> int:
    payload = {"instance": _load_json(args.instance, "instance")}
    if args.epsilon is not None:
        payload["epsilon"] = args.epsilon
    reply = _post(args, "/round", payload)
    _emit(json.dumps(reply, indent=2), args.out)
    return 0


def cmd_oracle_yds(args) -> int:
    reply = _post(args, "/oracle/yds", {"instance": _load_json(args.instance, "instance")})
    _emit(json.dumps(reply, indent=2), args.out)
    return 0


def cmd_oracle_brute(args) -> int:
    payload = {"instance": _load_json(args.instance, "instance"), "cap": args.cap}
    if args.epsilon is not None:
        payload["epsilon"] = args.epsilon
    reply = _post(args, "/oracle/brute", payload)
    _emit(json.dumps(reply, indent=2), args.out)
    return 0


def cmd_discretize(args) -> int:
    payload = {"instance": _load_json(args.instance, "instance")}
    if args.epsilon is not None:
        payload["epsilon"] = args.epsilon
    reply = _post(args, "/discretize", payload)
    text = json.dumps(reply["points"] if args.dump else reply, indent=2)
    _emit(text, args.out)
    return 0


def cmd_gap_experiment(args) -> int:
    payload = {"ns": [int(x) for x in args.ns.split(",") if x]}
    if args.alpha is not None:
        payload["alpha"] = args.alpha
    if args.epsilon is not None:
        payload["epsilon"] = args.epsilon
    payload["cap"] = args.cap
    reply = _post(args, "/gap-experiment", payload)
    _emit(reply["csv"], args.out)
    return 0


def cmd_reduce_3dm(args) -> int:
    payload = {"tdm": _load_json(args.input, "3DM")}
    if args.alpha is not None:
        payload["alpha"] = args.alpha
    reply = _post(args, "/reduce-3dm", payload)
    _emit(json.dumps(reply, indent=2), args.out)
    return 0


def cmd_check_gap(args) -> int:
    payload = {
        "tdm": _load_json(args.tdm, "3DM"),
        "schedule": _load_json(args.schedule, "schedule"),
        "cap": args.cap,
    }
    if args.alpha is not None:
        payload["alpha"] = args.alpha
    reply = _post(args, "/check-gap", payload)
    _emit(json.dumps(reply, indent=2), args.out)
    return 0


def cmd_bench(args) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        print(f"error: corpus directory not found: {corpus}", file=sys.stderr)
        return 1
    instances = []
    for path in sorted(corpus.glob("*.json")):
        instances.append({"name": path.stem, "instance": _load_json(str(path), "instance")})
    payload = {"instances": instances, "strategies": args.strategies.split(","), "cap": args.cap}
    if args.epsilon is not None:
        payload["epsilon"] = args.epsilon
    reply = _post(args, "/bench", payload)
    _emit(reply["csv"], args.out)
    return 0


def cmd_gen_random(args) -> int:
    lo, hi = args.work_range.split(",")
    payload = {
        "n": args.n,
        "m": args.m,
        "seed": args.seed,
        "work_range": (float(lo), float(hi)),
        "horizon": args.horizon,
    }
    if args.alpha is not None:
        payload["alpha"] = args.alpha
    reply = _post(args, "/gen/random", payload)
    _emit(json.dumps(reply["instance"], indent=2), args.out)
    return 0


def cmd_gen_gap(args) -> int:
    payload = {"n": args.n}
    if args.alpha is not None:
        payload["alpha"] = args.alpha
    reply = _post(args, "/gen/gap-family", payload)
    _emit(json.dumps(reply["instance"], indent=2), args.out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("speedscale.service:app", host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
