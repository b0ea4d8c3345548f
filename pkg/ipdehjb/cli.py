"""
Command line entry point `ipde-hjb`.

    ipde-hjb solve --config run.cfg --out results
    ipde-hjb study --case first_order_1d --out results
    ipde-hjb check --out results

Without --config the run uses the built-in constant problem.
"""

import argparse
import logging
import pathlib
import sys
import traceback

import ipdehjb
import ipdehjb.base
import ipdehjb.config
import ipdehjb.constants
import ipdehjb.errors
import ipdehjb.master

logger = logging.getLogger(__name__)


def parse_args(argv=None):
    parser = argparse.ArgumentParser(
        prog='ipde-hjb',
        description='Semi-Lagrangian solver and analysis harness for HJB integro-PDEs with Levy jumps.')
    parser.add_argument('command', choices=ipdehjb.constants.COMMANDS)
    parser.add_argument('--config', metavar='PATH', help='run configuration (key = value lines)')
    parser.add_argument('--out', metavar='DIR', help='output directory; overrides output.dir')
    parser.add_argument('--threads', type=int, metavar='N',
                        help=f'worker count; defaults to ${ipdehjb.constants.ENV_THREADS}, then the CPU count')
    parser.add_argument('--case', metavar='NAME', help='manufactured case of a study; overrides study.case')
    parser.add_argument('--version', action='version', version=f'%(prog)s {ipdehjb.__version__}')
    return parser.parse_args(argv)


def _load(args):
    if args.config is not None:
        config = ipdehjb.config.load_config(args.config, args.command)
    else:
        config = ipdehjb.config.parse_config('', args.command)
    if args.case is not None:
        config.set('study.case', args.case)
    return config


def _raising_module(exc):
    frames = traceback.extract_tb(exc.__traceback__)
    return pathlib.Path(frames[-1].filename).stem if frames else 'ipdehjb'


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        config = _load(args)
        out_dir = args.out or config.get('output.dir')
        ipdehjb.base.setup_logger(out_dir)
        master = ipdehjb.master.Master(config, out_dir=out_dir, threads=args.threads)
        status = master.run()
    except ipdehjb.errors.ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return ipdehjb.constants.EXIT_CONFIG_ERROR
    except ipdehjb.errors.IpdeHjbError as exc:
        module = _raising_module(exc)
        logger.warning('%s failed in %s: %s', args.command, module, exc)
        print(f'{module}: {exc.__class__.__name__}: {exc}', file=sys.stderr)
        return ipdehjb.constants.EXIT_GATE_FAILED

    for line in master.summary:
        print(line)
    return status


if __name__ == '__main__':
    sys.exit(main())
