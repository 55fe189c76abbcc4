"""Command-line client for the HTTP service.

Runs against an in-process app by default, or a remote server via
``--server``.  Exit codes: 0 success, 2 bad input, 3 malformed
file/container, 4 train/eval configuration mismatch.
"""

from __future__ import annotations

import argparse
import base64
import json
import sys
from pathlib import Path

from .params import NUM_PARAMS

EXIT_FOR_KIND = {"input": 2, "format": 3, "manifest": 4}

# operational presets; "paper" matches the published full-scale runs and
# "desk" fits in minutes on one CPU core
PROFILE_DEFAULTS = {
    "desk": {"sampling": "desk", "n": 4000, "width_scale": 0.25,
             "epochs": 30, "patience": 30, "bow_k": 256, "lr": 5e-3},
    "paper": {"sampling": "full", "n": 200000, "width_scale": 1.0,
              "epochs": 100, "patience": 10, "bow_k": 1000, "lr": 1e-3},
}


class ClientError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind
        self.message = message

    @property
    def exit_code(self) -> int:
        return EXIT_FOR_KIND.get(self.kind, 1)


class Client:
    """Minimal JSON-over-HTTP wrapper hiding local vs remote transport."""

    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=None)
        else:
            import warnings

            # the test client import warns about its own internals
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def close(self):
        self._client.close()

    def _finish(self, resp) -> dict:
        body = resp.json()
        if resp.status_code == 200:
            return body
        if isinstance(body, dict) and "error" in body:
            raise ClientError(body["error"]["kind"], body["error"]["message"])
        # request-schema rejections arrive as FastAPI "detail" payloads
        raise ClientError("input", json.dumps(body.get("detail", body)))

    def get(self, path: str, **params) -> dict:
        return self._finish(self._client.get(path, params=params or None))

    def post(self, path: str, payload: dict) -> dict:
        return self._finish(self._client.post(path, json=payload))


def _read_wav_b64(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        raise ClientError("input", f"no such file: {path}")
    return base64.b64encode(p.read_bytes()).decode()


def _write_b64(path: str, b64: str) -> None:
    Path(path).write_bytes(base64.b64decode(b64))


def _print_patch(entries: list[dict]) -> None:
    print(f"{'parameter':<10} {'class':>5} {'value':>14} unit")
    for e in entries:
        print(f"{e['id']:<10} {e['class_index']:>5} {e['value']:>14.6g} {e['unit']}")


def _trailer(manifest_hash: str, seed) -> None:
    print(f"manifest {manifest_hash}  seed {'-' if seed is None else seed}")


def cmd_gen_dataset(client: Client, args) -> int:
    prof = PROFILE_DEFAULTS[args.profile]
    n = args.n if args.n is not None else prof["n"]
    body = client.post(
        "/datasets/generate",
        {"stem": args.out, "n": n, "seed": args.seed, "profile": prof["sampling"]},
    )
    print(f"raw  {body['raw_path']}  sha256 {body['content_hashes']['raw']}")
    print(f"stft {body['stft_path']}  sha256 {body['content_hashes']['stft']}")
    _trailer(body["config_hash"], body["seed"])
    return 0


def cmd_train(client: Client, args) -> int:
    prof = PROFILE_DEFAULTS[args.profile]
    payload = {
        "dataset_path": args.data,
        "out_path": args.out,
        "model": args.model,
        "width_scale": args.width_scale if args.width_scale is not None else prof["width_scale"],
        "max_epochs": args.epochs if args.epochs is not None else prof["epochs"],
        "patience": args.patience if args.patience is not None else prof["patience"],
        "batch_size": args.batch_size,
        "lr": args.lr if args.lr is not None else prof["lr"],
        "seed": args.seed,
        "bow_k": args.bow_k if args.bow_k is not None else prof["bow_k"],
    }
    body = client.post("/train", payload)
    for i, (tr, va) in enumerate(zip(body["train_curve"], body["val_curve"]), start=1):
        print(f"epoch {i:>3}  train {tr:.5f}  val {va:.5f}")
    print(f"best epoch {body['best_epoch'] + 1}  val {body['val_curve'][body['best_epoch']]:.5f}")
    print(f"checkpoint {body['checkpoint_path']}")
    _trailer(body["config_hash"], body["seed"])
    return 0


def cmd_evaluate(client: Client, args) -> int:
    payload = {
        "dataset_path": args.data,
        "checkpoint_path": args.checkpoint,
        "oracle": args.oracle,
        "limit": args.limit,
        "tie_seed": args.tie_seed,
    }
    body = client.post("/evaluate", payload)
    print(body["text"])
    if args.json:
        Path(args.json).write_text(json.dumps(body["report"], indent=2) + "\n")
        print(f"report written to {args.json}")
    _trailer(body["config_hash"], body["tie_seed"])
    return 0


def cmd_infer(client: Client, args) -> int:
    body = client.post(
        "/infer",
        {"wav_base64": _read_wav_b64(args.wav), "checkpoint_path": args.checkpoint},
    )
    print(f"model {body['model']}  trained on config {body['config_hash']}")
    _print_patch(body["patch"])
    _trailer(body["table_hash"], None)
    return 0


def cmd_render(client: Client, args) -> int:
    payload: dict = {"profile": PROFILE_DEFAULTS[args.profile]["sampling"]}
    if args.classes:
        try:
            classes = [int(v) for v in args.classes.split(",")]
        except ValueError:
            raise ClientError("input", "--classes must be comma-separated integers") from None
        if len(classes) != NUM_PARAMS:
            raise ClientError("input", f"--classes needs {NUM_PARAMS} values")
        payload["classes"] = classes
    else:
        payload["seed"] = args.seed
    body = client.post("/render", payload)
    _write_b64(args.out, body["wav_base64"])
    _print_patch(body["patch"])
    print(f"wrote {args.out}")
    _trailer(body["table_hash"], body["seed"])
    return 0


def cmd_reconstruct(client: Client, args) -> int:
    body = client.post(
        "/reconstruct",
        {"wav_base64": _read_wav_b64(args.wav), "checkpoint_path": args.checkpoint},
    )
    _write_b64(args.out, body["wav_base64"])
    _print_patch(body["patch"])
    m = body["metrics"]

    def fmt(v):
        return "degenerate" if v is None else f"{v:.6f}"

    print(f"F_delta {m['fdelta']:.6f}  PCC(STFT) {fmt(m['pcc_stft'])}  PCC(FT) {fmt(m['pcc_ft'])}")
    print(f"wrote {args.out}")
    _trailer(body["config_hash"], None)
    return 0


def cmd_export_spectrogram(client: Client, args) -> int:
    fmt = args.format
    if fmt is None:
        fmt = "pgm" if args.out.endswith(".pgm") else "csv"
    body = client.post(
        "/spectrogram", {"wav_base64": _read_wav_b64(args.wav), "format": fmt}
    )
    Path(args.out).write_text(body["content"])
    print(f"wrote {args.out} ({fmt})")
    _trailer("-", None)
    return 0


def cmd_audit_params(client: Client, args) -> int:
    names = [args.model]
    if args.model == "all":
        names = client.get("/models")["models"]
    for name in names:
        body = client.get(f"/models/{name}/audit", width_scale=args.width_scale)
        print(f"{name} (width_scale {args.width_scale}):")
        for row in body["layers"]:
            if row["params"]:
                print(f"  {row['layer']:<28} {row['params']:>10}")
        print(f"  {'total':<28} {body['total']:>10}")
    _trailer("-", None)
    return 0


def cmd_serve(client: Client, args) -> int:
    import uvicorn

    uvicorn.run("synthfit.service.app:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthfit",
        description="Estimate synthesizer parameters from audio and back again.",
    )
    parser.add_argument("--server", default=None,
                        help="URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="render a labelled corpus")
    p.add_argument("--out", required=True, help="output stem for the corpus files")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--profile", choices=sorted(PROFILE_DEFAULTS), default="desk")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("train", help="fit a model on a corpus")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default="Conv3")
    p.add_argument("--width-scale", type=float, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bow-k", type=int, default=None)
    p.add_argument("--profile", choices=sorted(PROFILE_DEFAULTS), default="desk")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint against a corpus")
    p.add_argument("--data", required=True, help="raw-audio corpus path")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--oracle", action="store_true",
                   help="echo true labels instead of a model (plumbing check)")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--tie-seed", type=int, default=0)
    p.add_argument("--json", default=None, help="also write the report as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("infer", help="predict the patch behind a WAV")
    p.add_argument("--wav", required=True)
    p.add_argument("--checkpoint", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("render", help="render a patch to WAV")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", default=None,
                   help="23 comma-separated class indices in canonical order")
    p.add_argument("--seed", type=int, default=0, help="sample a patch when no classes given")
    p.add_argument("--profile", choices=sorted(PROFILE_DEFAULTS), default="paper")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("reconstruct", help="infer a patch and re-render it")
    p.add_argument("--wav", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("export-spectrogram", help="write the 257x64 grid to csv/pgm")
    p.add_argument("--wav", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "pgm"), default=None)
    p.set_defaults(func=cmd_export_spectrogram)

    p = sub.add_parser("audit-params", help="print per-layer weight counts")
    p.add_argument("--model", default="all")
    p.add_argument("--width-scale", type=float, default=1.0)
    p.set_defaults(func=cmd_audit_params)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.func is cmd_serve:
        return cmd_serve(None, args)
    client = Client(args.server)
    try:
        return args.func(client, args)
    except ClientError as e:
        print(f"error: {e.message}", file=sys.stderr)
        return e.exit_code
    finally:
        client.close()


if __name__ == "__main__":
    sys.exit(main())
