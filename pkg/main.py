#!/usr/bin/env python3
"""
MagnetoSense - spectral Galerkin solver and verification suite for
periodic electromagnetoelastic diffraction.

    python main.py run --config data/configs/heat_test.json
    python main.py study --config data/configs/study_convergence.json --threads 4
    python main.py reconstruct --trajectory data/runs/<hash>/trajectory.csv --times 0 0.5 --resolution 64
"""

import argparse
import logging
import os
import sys
import traceback
from datetime import datetime

from colorama import Fore, Style, init
from dotenv import load_dotenv

load_dotenv()

init(autoreset=True)

logging.basicConfig(
    level=os.getenv("MAGNETOSENSE_LOG_LEVEL", "INFO").upper(),
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(os.getenv("MAGNETOSENSE_LOG_FILE", "magnetosense.log")),
        logging.StreamHandler()
    ]
)
logger = logging.getLogger("MagnetoSense")


class MagnetoSenseCLI:
    def __init__(self):
        """Initialize the CLI: resolve paths and prepare the artifact tree"""
        try:
            self._fix_path_issues()

            from src.utils.path_helper import fix_path_issues

            fix_path_issues()
            self.parser = self.build_parser()
            logger.info("MagnetoSense initialized successfully")
        except Exception as e:
            print(f"{Fore.RED}Error initializing the application: {str(e)}{Style.RESET_ALL}")
            logger.error(f"Initialization error: {str(e)}")
            logger.error(traceback.format_exc())
            sys.exit(1)

    def _fix_path_issues(self):
        """Make the project root importable"""
        current_dir = os.path.abspath(os.path.dirname(__file__))
        if current_dir not in sys.path:
            sys.path.insert(0, current_dir)

    def display_header(self, command):
        current_time = datetime.now().strftime('%Y-%m-%d %H:%M:%S')
        print(f"\n{Fore.CYAN}{Style.BRIGHT}=== MagnetoSense: {command} ==={Style.RESET_ALL}")
        print(f"Started: {current_time}")
        print("=" * 50)

    def build_parser(self):
        parser = argparse.ArgumentParser(
            prog="magnetosense",
            description="Spectral Galerkin solver and verification suite for periodic electromagnetoelastic diffraction",
        )
        sub = parser.add_subparsers(dest="command", required=True)

        run = sub.add_parser("run", help="Solve one configuration and write trajectory, ledger and diagnostics")
        run.add_argument("--config", required=True, help="run config JSON, or a run report to reproduce")
        run.add_argument("--out", help="output directory (default data/runs/<config hash>)")

        study = sub.add_parser("study", help="Run a convergence, stability, uniqueness, oracle or inequality study")
        study.add_argument("--config", required=True, help="study manifest JSON")
        study.add_argument("--out", help="output directory (default data/studies/<manifest hash>)")
        study.add_argument("--seed", type=int, help="base seed for randomized studies")
        study.add_argument("--threads", type=int, default=int(os.getenv("MAGNETOSENSE_THREADS", "1")),
                           help="independent solves run concurrently")

        rec = sub.add_parser("reconstruct", help="Evaluate a stored trajectory on a uniform spatial grid")
        rec.add_argument("--trajectory", required=True, help="trajectory CSV written by 'run'")
        rec.add_argument("--times", required=True, nargs="+", type=float, help="evaluation times")
        rec.add_argument("--resolution", required=True, type=int, help="number of uniform points in [0,1)")
        rec.add_argument("--out", help="output CSV (default fields.csv next to the trajectory)")
        return parser

    def run(self, argv=None):
        args = self.parser.parse_args(argv)
        from src.cli.commands import cmd_reconstruct, cmd_run, cmd_study

        self.display_header(args.command)
        logger.info(f"Command: {args.command}")
        if args.command == "run":
            return cmd_run(args.config, out=args.out)
        if args.command == "study":
            return cmd_study(args.config, out=args.out, seed=args.seed, threads=args.threads)
        return cmd_reconstruct(args.trajectory, args.times, args.resolution, out=args.out)


def main(argv=None):
    try:
        cli = MagnetoSenseCLI()
        return cli.run(argv)
    except KeyboardInterrupt:
        print(f"\n{Fore.YELLOW}Interrupted by user{Style.RESET_ALL}")
        return 130


if __name__ == "__main__":
    sys.exit(main())
