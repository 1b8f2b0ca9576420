"""``polariton-bh`` command line entry point."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .experiment import EXIT_ERROR, KINDS, PRESETS, ConfigError, parse_config, run_experiment

log = logging.getLogger("polariton_bh")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="polariton-bh",
        description="Dark-polariton Bose-Hubbard experiments on coupled atom-cavity arrays.",
    )
    ap.add_argument("kind", choices=KINDS, help="experiment to run")
    ap.add_argument("--config", metavar="PATH", help="key = value config file (default: preset only)")
    ap.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    ap.add_argument("--format", choices=("csv", "json"), help="table format for scan/ramp output")
    ap.add_argument("--preset", default="toroidal-2005", choices=sorted(PRESETS),
                    help="parameter defaults for keys absent from the config")
    ap.add_argument("--strict-validity", action="store_true",
                    help="exit with status 2 when the polariton mapping fails its validity checks")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        text = ""
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        cfg = parse_config(text, args.kind, args.preset)
        if args.out:
            cfg = replace(cfg, output=args.out)
        if args.format:
            cfg = replace(cfg, format=args.format)
        return run_experiment(cfg, strict_validity=args.strict_validity)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError, RuntimeError) as exc:
        log.debug("experiment failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
