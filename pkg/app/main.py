"""
Command line entry point.

Run: python -m app.main --scene fixtures/scenes/contact_r3.json --out reports/
Exit code 0 iff every task passed, 1 if any task failed or errored, 2 when
the scene itself could not be loaded or the reports could not be written.
"""
import argparse
import logging
import sys
from typing import Optional, Sequence

from app import __version__
from app.core.config import settings
from app.core.exceptions import SceneError
from app.schemas.schemas import RunFlags
from app.services.scene_service import run_scene

logger = logging.getLogger("app")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jetforge",
        description="Run a scene of exact structure checks and numeric contact-flow experiments",
    )
    parser.add_argument("--scene", required=True, help="Scene file (JSON)")
    parser.add_argument("--out", default=None, help="Directory for report.json and task CSVs")
    parser.add_argument("--grid", type=int, default=None, help="Grid nodes per axis")
    parser.add_argument("--tol", type=float, default=None, help=f"Residual threshold (default {settings.TOL:g})")
    parser.add_argument("--seed", type=int, default=None, help="Seed for random exact samples")
    parser.add_argument("--max-steps", type=int, default=None, help="Cap on the decomposition time subdivision")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper())
    logger.setLevel(logging.DEBUG if settings.DEBUG else args.log_level.upper())

    try:
        flags = RunFlags(out=args.out, grid=args.grid, tol=args.tol, seed=args.seed, max_steps=args.max_steps)
        report = run_scene(args.scene, flags)
    except SceneError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: invalid flags: {exc}", file=sys.stderr)
        return 2

    if args.out is None:
        print(report.model_dump_json(indent=2, exclude_none=True))
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
