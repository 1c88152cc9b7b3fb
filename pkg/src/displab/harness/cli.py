"""Command-line entry point ``displab``.

``displab <experiment> --config cfg.yaml --out dir`` runs one sweep and
writes its report; ``displab table --p 4 --q 2 --d 1 --k 0`` prints the
exponent bundle. The exit status is zero iff every asserted check passes.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from displab.harness.experiments import EXPERIMENTS, run_experiment
from displab.harness.exponents import theoretical_exponents
from displab.harness.report import write_report

__all__ = ["load_config", "main"]

# nested sections of a config document that are flattened into the sweep parameters
_SECTIONS = ("exponents", "family", "params")


def _parse_number(text: str) -> float:
    return float("inf") if text.strip().lower() in ("inf", "infinity") else float(text)


def load_config(path: str | Path | None) -> dict:
    """Read a JSON or YAML config document and flatten its nested sections.

    ``grid`` is kept as a section and interpreted by the experiment; the
    keys of ``exponents``, ``family`` and ``params`` are lifted to the top
    level.
    """
    if path is None:
        return {}
    text = Path(path).read_text()
    doc = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    if doc is None:
        return {}
    if not isinstance(doc, dict):
        raise ValueError(f"config {path} must be a mapping, got {type(doc).__name__}")
    out = {}
    for key, val in doc.items():
        if key in _SECTIONS and isinstance(val, dict):
            out.update(val)
        elif key in ("experiment", "kind"):
            continue
        else:
            out[key] = val
    return out


def _table(argv: list[str]) -> int:
    ap = argparse.ArgumentParser(prog="displab table", description="Print the theoretical exponent bundle as JSON.")
    ap.add_argument("--p", type=_parse_number, required=True)
    ap.add_argument("--q", type=_parse_number, default=2.0)
    ap.add_argument("--r", type=_parse_number, default=2.0)
    ap.add_argument("--d", type=int, default=1)
    ap.add_argument("--k", type=int, default=0)
    args = ap.parse_args(argv)
    try:
        bundle = theoretical_exponents(args.p, args.q, args.r, args.d, args.k)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(bundle.as_dict(), sort_keys=True, indent=2))
    return 0


def _run(argv: list[str]) -> int:
    ap = argparse.ArgumentParser(prog="displab", description="Run one dyadic sweep and write its report.")
    ap.add_argument("experiment", choices=sorted(EXPERIMENTS))
    ap.add_argument("--config", default=None, help="JSON or YAML config (defaults are used when omitted)")
    ap.add_argument("--out", default=None, help="output directory (default: ./out/<experiment>)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--no-plot", action="store_true", help="skip plot.svg")
    args = ap.parse_args(argv)
    if not 0 <= args.seed < 2**64:
        ap.error("seed must be an unsigned 64-bit integer")
    try:
        cfg = load_config(args.config)
        result = run_experiment(args.experiment, cfg, seed=args.seed, workers=max(1, args.workers))
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else Path("out") / args.experiment
    write_report(result, out, plot=not args.no_plot)
    if result.slope is not None:
        print(f"{result.kind}: slope {result.slope:.4f} (stderr {result.stderr:.2g}, r2 {result.r2:.4f})")
    for c in result.checks:
        print(c.line())
    for n in result.notes:
        print(f"note: {n}")
    print(f"fingerprint {result.fingerprint}")
    print(f"wrote {out}")
    return 0 if result.passed else 1


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    if argv and argv[0] == "table":
        return _table(argv[1:])
    return _run(argv)


if __name__ == "__main__":
    sys.exit(main())
