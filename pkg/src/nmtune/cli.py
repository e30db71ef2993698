"""Command-line entry point: a thin client of the tuning service.

By default each invocation instantiates the FastAPI app in-process and talks
to it over an ASGI transport (no socket); pass --server to target a running
instance instead. Every successful run prints the machine-readable response
JSON on stdout; failures print one line on stderr and exit with 1 (usage),
2 (data error), or 3 (numeric error).
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

_EXIT_BY_KIND = {"usage": EXIT_USAGE, "data": EXIT_DATA, "numeric": EXIT_NUMERIC}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error[usage]: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class ServiceClient:
    def __init__(self, server: str | None = None):
        self._server = server

    def post(self, path: str, payload: dict) -> tuple[int, dict]:
        if self._server is not None:
            with httpx.Client(base_url=self._server, timeout=None) as client:
                resp = client.post(path, json=payload)
            return resp.status_code, resp.json()
        from .service import create_app

        app = create_app()

        async def call():
            transport = httpx.ASGITransport(app=app)
            async with httpx.AsyncClient(
                transport=transport, base_url="http://nmtune", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(call())
        return resp.status_code, resp.json()


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok != ""]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from err


def _head_list(text: str) -> list[str]:
    heads = [tok for tok in text.split(",") if tok != ""]
    for head in heads:
        if head not in ("lp", "mlp", "nmtune"):
            raise argparse.ArgumentTypeError(f"unknown head {head!r}")
    return heads


def build_parser() -> _Parser:
    parser = _Parser(prog="nmtune", description=__doc__)
    parser.add_argument("--server", default=None, help="URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="singular-spectrum diagnostics of a feature file")
    p.add_argument("--features", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("train", help="train one head and evaluate it")
    p.add_argument("--features", required=True)
    p.add_argument("--head", required=True, choices=["lp", "mlp", "nmtune"])
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--wd", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--lambda-mse", type=float, default=None)
    p.add_argument("--lambda-cov", type=float, default=None)
    p.add_argument("--lambda-svd", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-fraction", type=float, default=0.75)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--mse-normalization", choices=["row", "frobenius"], default="row")
    p.add_argument("--out", default=None)

    p = sub.add_parser("sweep", help="noise-ratio x head x seed grid")
    p.add_argument("--features", required=True)
    p.add_argument("--ratios", required=True, type=_float_list)
    p.add_argument("--heads", required=True, type=_head_list)
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--wd", type=float, default=None)
    p.add_argument("--lambda-mse", type=float, default=None)
    p.add_argument("--lambda-cov", type=float, default=None)
    p.add_argument("--lambda-svd", type=float, default=None)
    p.add_argument("--split-fraction", type=float, default=0.75)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None)

    p = sub.add_parser("synth", help="write a synthetic Gaussian-mixture feature file")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True)
    p.add_argument("--center-scale", type=float, default=5.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("inject-noise", help="flip a fraction of labels symmetrically")
    p.add_argument("--features", required=True)
    p.add_argument("--ratio", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("validate", help="check every feature-file invariant")
    p.add_argument("--features", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8321)
    return parser


def _request_payload(args: argparse.Namespace) -> tuple[str, dict]:
    cmd = args.command
    if cmd == "analyze":
        return "/analyze", {
            "features": args.features,
            "subsample": args.subsample,
            "seed": args.seed,
            "out": args.out,
        }
    if cmd == "train":
        return "/train", {
            "features": args.features,
            "head": args.head,
            "epochs": args.epochs,
            "lr": args.lr,
            "wd": args.wd,
            "batch": args.batch,
            "lambda_mse": args.lambda_mse,
            "lambda_cov": args.lambda_cov,
            "lambda_svd": args.lambda_svd,
            "seed": args.seed,
            "split_fraction": args.split_fraction,
            "split_seed": args.split_seed,
            "mse_normalization": args.mse_normalization,
            "out": args.out,
        }
    if cmd == "sweep":
        return "/sweep", {
            "features": args.features,
            "ratios": args.ratios,
            "heads": args.heads,
            "seeds": args.seeds,
            "epochs": args.epochs,
            "batch": args.batch,
            "lr": args.lr,
            "wd": args.wd,
            "lambda_mse": args.lambda_mse,
            "lambda_cov": args.lambda_cov,
            "lambda_svd": args.lambda_svd,
            "split_fraction": args.split_fraction,
            "split_seed": args.split_seed,
            "jobs": args.jobs,
            "out": args.out,
        }
    if cmd == "synth":
        return "/synth", {
            "classes": args.classes,
            "dim": args.dim,
            "per_class": args.per_class,
            "center_scale": args.center_scale,
            "sigma": args.sigma,
            "seed": args.seed,
            "out": args.out,
        }
    if cmd == "inject-noise":
        return "/inject-noise", {
            "features": args.features,
            "ratio": args.ratio,
            "seed": args.seed,
            "out": args.out,
        }
    if cmd == "validate":
        return "/validate", {"features": args.features}
    raise AssertionError(f"unhandled command {cmd}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits for usage errors and --help
        return int(exc.code or 0)

    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return EXIT_OK

    if args.command == "sweep" and (not args.ratios or not args.heads or args.seeds < 1):
        print("error[usage]: sweep grids must be nonempty", file=sys.stderr)
        return EXIT_USAGE
    if args.command == "inject-noise" and not 0.0 <= args.ratio <= 1.0:
        print("error[usage]: --ratio must lie in [0, 1]", file=sys.stderr)
        return EXIT_USAGE

    path, payload = _request_payload(args)
    try:
        status, body = ServiceClient(args.server).post(path, payload)
    except httpx.HTTPError as err:
        print(f"error[usage]: cannot reach service: {err}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as err:  # last resort: keep the single-line stderr contract
        print(f"error[numeric]: internal failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    if status == 200:
        print(json.dumps(body, indent=2))
        return EXIT_OK
    detail = body.get("detail") if isinstance(body, dict) else None
    if isinstance(detail, dict) and detail.get("kind") in _EXIT_BY_KIND:
        print(f"error[{detail['kind']}]: {detail['message']}", file=sys.stderr)
        return _EXIT_BY_KIND[detail["kind"]]
    # FastAPI request-validation failures and anything else unrecognized
    print(f"error[usage]: service rejected the request: {json.dumps(detail or body)}", file=sys.stderr)
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
