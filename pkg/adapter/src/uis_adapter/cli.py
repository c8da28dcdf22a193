"""Command line: select a mode, then serve frames on stdin/stdout."""

from __future__ import annotations

import argparse
import sys

from .modes import AdapterMode
from .server import serve


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uis-adapter",
        description="Reference denoiser child process speaking the UIS1 frame protocol.",
    )
    parser.add_argument("--mode", choices=("identity", "wiener", "external"), default="identity")
    parser.add_argument("--mean", type=float, default=0.0, help="Wiener prior mean.")
    parser.add_argument("--prior-var", type=float, default=1.0, help="Wiener prior variance.")
    parser.add_argument("--sigma", type=float, default=1.0, help="Wiener noise level (fixed; the protocol carries none).")
    parser.add_argument("--model", type=str, default=None, help="Path to a module defining denoise(values, shape).")
    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    mode = AdapterMode(
        kind=args.mode,
        mean=args.mean,
        prior_var=args.prior_var,
        sigma=args.sigma,
        model_path=args.model,
    )
    sys.exit(serve(mode.transform()))


if __name__ == "__main__":
    main()
