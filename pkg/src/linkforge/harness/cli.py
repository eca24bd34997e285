"""Command-line interface: gen-code / train / sweep / compare / selftest.

Exit codes: 0 success, 1 runtime or config failure (one diagnostic line
on stderr), 2 usage errors (argparse).
"""

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from dataclasses import asdict

from linkforge import adnn, ldpc
from linkforge.harness.compare import compare as compare_curves
from linkforge.harness.sweep import (
    RECEIVER_TAGS,
    format_row,
    read_curve,
    sweep as run_sweep,
)
from linkforge.harness.config import effective_seed, load_config
from linkforge.harness.dataset import generate_dataset
from linkforge.harness.selftest import run_selftest

HISTORY_HEADER = "epoch,train_mse,val_mse,train_ber,val_ber,train_acc,val_acc"


def _atomic_write_text(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _history_csv(history: adnn.TrainingHistory) -> str:
    lines = [HISTORY_HEADER]
    for r in history.records:
        lines.append(
            f"{r.epoch},{r.train_mse:.6e},{r.val_mse:.6e},"
            f"{r.train_ber:.6e},{r.val_ber:.6e},{r.train_acc:.6e},{r.val_acc:.6e}"
        )
    return "\n".join(lines) + "\n"


def cmd_gen_code(args) -> int:
    code = ldpc.build_code(args.k, args.n, args.seed)
    out = args.out or f"ldpc_{args.k}_{args.n}.txt"
    _atomic_write_text(out, ldpc.serialize_code(code))
    print(f"wrote {out} (rate {code.k}/{code.n})")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    seed = effective_seed(cfg, args.seed)
    out_dir = args.output_dir or cfg.output_dir
    code = cfg.load_code()
    bits, blocks = generate_dataset(cfg, code, seed=seed)
    acfg = cfg.adnn_config(seed=seed)
    model = adnn.build_model(acfg, seed)
    history = adnn.train(model, blocks, bits, acfg)

    os.makedirs(out_dir, exist_ok=True)
    model_path = os.path.join(out_dir, "adnn_model.bin")
    adnn.save_model(model, model_path)
    history_path = os.path.join(out_dir, "history.csv")
    _atomic_write_text(history_path, _history_csv(history))
    code_text = ldpc.serialize_code(code)
    manifest = {
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "seed": seed,
        "adnn_config": asdict(acfg),
        "code": {
            "k": code.k,
            "n": code.n,
            "seed": code.seed,
            "sha256": hashlib.sha256(code_text.encode("ascii")).hexdigest(),
        },
        "model_path": model_path,
        "history_path": history_path,
        "parameter_count": model.parameter_count(),
        "finished_unix": time.time(),
    }
    _atomic_write_text(
        os.path.join(out_dir, "train_manifest.json"),
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n",
    )
    last = history.records[-1]
    print(
        f"trained {cfg.epochs} epochs: val_mse={last.val_mse:.4e} "
        f"val_ber={last.val_ber:.4e} -> {model_path}"
    )
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    seed = effective_seed(cfg, args.seed)
    if args.receiver == "adnn" and args.model is None:
        print("error: --model is required for the adnn receiver", file=sys.stderr)
        return 2
    model = adnn.load_model(args.model) if args.receiver == "adnn" else None
    points = run_sweep(
        args.receiver, cfg, model=model, base_seed=seed, out_path=args.out
    )
    out = args.out or os.path.join(
        cfg.output_dir, f"{RECEIVER_TAGS[args.receiver]}.csv"
    )
    for p in points:
        print(format_row(p))
    print(f"wrote {out} ({len(points)} points)")
    return 0


def cmd_compare(args) -> int:
    curve_a = read_curve(args.curve_a)
    curve_b = read_curve(args.curve_b)
    gain = compare_curves(curve_a, curve_b, args.target)
    if gain is None:
        print("not_crossed")
    else:
        print(f"gain_db={gain:.6g}")
    return 0


def cmd_selftest(args) -> int:
    return run_selftest()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="linkforge",
        description="Link-level simulation toolkit: LDPC/BP baseline vs "
        "learned autoencoder receiver over AWGN.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-code", help="build an LDPC code and write its asset")
    p.add_argument("--k", type=int, required=True, help="message length in bits")
    p.add_argument("--n", type=int, required=True, help="codeword length in bits")
    p.add_argument("--seed", type=int, default=1, help="construction seed")
    p.add_argument("--out", help="output path (default ldpc_<k>_<n>.txt)")
    p.set_defaults(func=cmd_gen_code)

    p = sub.add_parser("train", help="generate a dataset and train the receiver")
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--seed", type=int, help="override config/env seed")
    p.add_argument("--output-dir", help="override config output_dir")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="measure a BER-vs-SNR curve")
    p.add_argument(
        "--receiver", required=True, choices=sorted(RECEIVER_TAGS)
    )
    p.add_argument("--config", required=True, help="experiment config JSON")
    p.add_argument("--model", help="trained model path (adnn receiver)")
    p.add_argument("--seed", type=int, help="override config/env seed")
    p.add_argument("--out", help="output CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="SNR gain between two curves at a BER target")
    p.add_argument("curve_a", help="first curve CSV")
    p.add_argument("curve_b", help="second curve CSV")
    p.add_argument("--target", type=float, default=1e-3, help="BER target")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("selftest", help="run the built-in verification battery")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse handles usage errors with code 2
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
