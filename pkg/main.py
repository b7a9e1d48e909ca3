#!/usr/bin/env python3
"""
DRUM Magnetometry CLI
Fringe scans, sensitivity reports, Allan deviation and operating-point
optimization for a rotating-diamond NV magnetometer.
"""

import argparse
import logging
import sys
from datetime import datetime

from dotenv import load_dotenv

from src.analysis.stability import NOISE_KINDS
from src.core.errors import ConfigError, DrumError, InvalidParameter, SeriesFormatError, UsageError
from src.jobs.drum_jobs import AdevJob, FringeJob, OptimizeJob, SensitivityJob
from src.jobs.oracle_check import OracleCheckJob
from src.utils.file_io import schema_text
from src.utils.job_logger import log_dir
from src.utils.run_config import FORMATS, load_run_config

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def configure_logging():
    """File + console logging under $DRUM_LOG_DIR"""
    logs = log_dir()
    logs.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=logging.INFO,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=[
            logging.FileHandler(logs / f'drum_{datetime.now().strftime("%Y%m%d_%H%M%S")}.log'),
            logging.StreamHandler()
        ]
    )


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument('--config', help="INI run config (default: $DRUM_CONFIG, else built-in defaults)")
    common.add_argument('--set', action='append', default=[], metavar='SECTION.KEY=VALUE',
                        help="override a config key; repeatable")
    common.add_argument('--output', help="output path stem")
    common.add_argument('--format', choices=FORMATS)
    common.add_argument('--seed', type=int, help="random seed (overrides run.rng_seed)")

    parser = _Parser(prog='main.py', description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument('--schema', action='store_true', help="print the CSV schemas and exit")
    commands = parser.add_subparsers(dest='command', parser_class=_Parser)

    fringe = commands.add_parser('fringe', parents=[common], help="DRUM and Ramsey fringe scans")
    fringe.add_argument('--points', type=int, default=201)
    fringe.add_argument('--span', type=float, help="field span (T); default two fringe periods")
    fringe.add_argument('--mc-periods', type=int, default=0, help="Monte Carlo periods per point; 0 disables")
    fringe.add_argument('--ramsey-tau', type=float, help="Ramsey free precession time (s); default T2*")

    sensitivity = commands.add_parser('sensitivity', parents=[common], help="sensitivity report")
    sensitivity.add_argument('--mc-seconds', type=float, default=0.0,
                             help="simulated measurement time for the operational estimate; 0 omits it")
    sensitivity.add_argument('--shots', action='store_true', help="also write the Monte Carlo shot records")

    adev = commands.add_parser('adev', parents=[common], help="Allan deviation of a contrast series")
    adev.add_argument('--input', help="CSV with time_s,contrast")
    adev.add_argument('--synthesize', choices=NOISE_KINDS)
    adev.add_argument('--samples', type=int, default=100000)
    adev.add_argument('--magnitude', type=float, default=1e-3)
    adev.add_argument('--poll', type=float, default=1.0, help="poll interval (s)")

    optimize = commands.add_parser('optimize', parents=[common], help="optimal tau across rotation speeds")
    optimize.add_argument('--speeds', type=float, nargs='+', help="rotation speeds (Hz)")
    optimize.add_argument('--speed-range', type=float, nargs=3, metavar=('START', 'STOP', 'STEP'))
    optimize.add_argument('--profile', help="CSV with speed_hz,t2_s; default linear profile")

    oracle = commands.add_parser('oracle-check', parents=[common], help="run the oracle suites")
    oracle.add_argument('--grid-size', type=int, default=1000)
    return parser


def build_job(args, config):
    common = {'output': args.output, 'fmt': args.format}
    if args.command == 'fringe':
        return FringeJob(config, points=args.points, span=args.span, mc_periods=args.mc_periods,
                         ramsey_tau=args.ramsey_tau, **common)
    if args.command == 'sensitivity':
        return SensitivityJob(config, mc_seconds=args.mc_seconds, shots=args.shots, **common)
    if args.command == 'adev':
        return AdevJob(config, input_path=args.input, synthesize=args.synthesize, samples=args.samples,
                       magnitude=args.magnitude, poll=args.poll, **common)
    if args.command == 'optimize':
        return OptimizeJob(config, speeds=args.speeds, speed_range=args.speed_range,
                           profile_path=args.profile, **common)
    return OracleCheckJob(config, grid_size=args.grid_size, **common)


def main(argv=None):
    """Main entry point; returns the process exit code"""
    load_dotenv()

    try:
        args = build_parser().parse_args(argv)
        if args.schema:
            sys.stdout.write(schema_text())
            return EXIT_OK
        if not args.command:
            raise UsageError("a subcommand is required (fringe, sensitivity, adev, optimize, oracle-check)")
    except UsageError as e:
        sys.stderr.write(f"usage error: {e}\n")
        return EXIT_USAGE

    configure_logging()
    try:
        overrides = list(args.set)
        if args.seed is not None:
            overrides.append(f"run.rng_seed={args.seed}")
        config = load_run_config(args.config, overrides)
        build_job(args, config).run()
    except (ConfigError, SeriesFormatError, InvalidParameter, UsageError) as e:
        logging.error(f"❌ {e}")
        return EXIT_USAGE
    except DrumError as e:
        logging.error(f"❌ {e}")
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
