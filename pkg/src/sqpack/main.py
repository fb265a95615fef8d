import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import yaml

from sqpack.application.use_cases import (
    FitSweep,
    LayoutStats,
    PackQuadrilateral,
    PackSquare,
    PackTrapezoid,
    RenderLayout,
    RunSweep,
    VerifyLayout,
)
from sqpack.domain.errors import LayoutFormatError, SqpackError
from sqpack.domain.models import DEFAULT_SHRINK, DEFAULT_SLACK, TrapezoidSpec
from sqpack.infrastructure.adapters.render.svg_renderer import SvgLayoutRenderer
from sqpack.infrastructure.adapters.storage.csv_sweep_store import CsvSweepStore
from sqpack.infrastructure.adapters.storage.json_layout_store import JsonLayoutRepository

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s [%(levelname)s] %(message)s',
)

DEFAULT_CONFIG = 'config.yaml'
EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_ERROR = 2


def load_config(path: Optional[str] = None) -> Dict[str, Any]:
    """Read config.yaml (or --config / SQPACK_CONFIG); a missing default file means built-in defaults."""
    explicit = path or os.environ.get('SQPACK_CONFIG')
    target = Path(explicit or DEFAULT_CONFIG)
    if not target.exists():
        if explicit:
            raise LayoutFormatError('config', f"file not found: {target}")
        return {}
    with open(target, 'r') as f:
        try:
            config = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise LayoutFormatError('config', f"invalid YAML in {target}: {e}") from e
    if not isinstance(config, dict):
        raise LayoutFormatError('config', f"{target} must hold a mapping")
    return config


def section(config: Dict[str, Any], key: str) -> Dict[str, Any]:
    value = config.get(key, {}) or {}
    if not isinstance(value, dict):
        raise LayoutFormatError(key, "expected a mapping")
    return value


def effective_threads(config: Dict[str, Any]) -> int:
    threads = int(config.get('threads', 1))
    cap = os.environ.get('SQPACK_THREADS')
    if cap:
        try:
            threads = min(threads, int(cap))
        except ValueError as e:
            raise LayoutFormatError('SQPACK_THREADS', f"not an integer: {cap!r}") from e
    return max(1, threads)


def parse_xs(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise LayoutFormatError('xs', f"expected comma-separated numbers, got {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='sqpack',
        description="""
╔═══════════════════════════════════════════════════════════════════╗
║                    ▣  SQPACK  ▣                                   ║
║        Unit squares in large containers, with little waste        ║
╚═══════════════════════════════════════════════════════════════════╝
        """,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

💡 EXAMPLES:

  Build and check a tilted-row quadrilateral:
    $ sqpack pack-quad --m 100 --theta 0.1 --sigma1 0.01 --out q.json
    $ sqpack verify --layout q.json

  Pack a square of side 1024.5 and draw it:
    $ sqpack pack-square --x 1024.5 --out s.json
    $ sqpack render --layout s.json --svg s.svg

  Measure the waste exponent of the trivial packing:
    $ sqpack sweep --method trivial --xs 100.5,200.5,400.5 --out t.csv
    $ sqpack fit --csv t.csv

━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━━

⚙️  Configuration: config.yaml (or --config, SQPACK_CONFIG)
🧵  Threads: config 'threads', capped by SQPACK_THREADS
🚦  Exit codes: 0 ok | 1 verification failed | 2 bad input or construction error
        """
    )
    parser.add_argument('--config', help='Path to config.yaml')
    sub = parser.add_subparsers(dest='command', required=True)

    def _command(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument('--config', default=argparse.SUPPRESS, help='Path to config.yaml')
        return p

    p = _command('pack-quad', 'Build the tilted-row quadrilateral')
    p.add_argument('--m', type=int, required=True)
    p.add_argument('--theta', type=float, required=True)
    p.add_argument('--sigma1', type=float, required=True)
    p.add_argument('--out', required=True)

    p = _command('pack-trapezoid', 'Pack a right trapezoid with stacked quadrilaterals')
    p.add_argument('--height', type=float, required=True)
    p.add_argument('--base', type=float, required=True)
    p.add_argument('--slope', type=float, required=True)
    p.add_argument('--beta', type=float)
    p.add_argument('--gamma', type=float)
    p.add_argument('--out', required=True)

    p = _command('pack-square', 'Pack an x by x square')
    p.add_argument('--x', type=float, required=True)
    p.add_argument('--beta', type=float)
    p.add_argument('--epsilon', type=float)
    p.add_argument('--nu', type=float)
    p.add_argument('--out', required=True)

    p = _command('verify', 'Check a layout for overlaps and containment')
    p.add_argument('--layout', required=True)
    p.add_argument('--shrink', type=float)
    p.add_argument('--slack', type=float)

    p = _command('stats', 'Print square count and waste as JSON')
    p.add_argument('--layout', required=True)

    p = _command('render', 'Draw a layout as SVG')
    p.add_argument('--layout', required=True)
    p.add_argument('--svg', required=True)
    p.add_argument('--stroke-width', type=float)

    p = _command('sweep', 'Run one method over several sizes and write a CSV')
    p.add_argument('--method', required=True, choices=['trivial', 'strip', 'quad', 'trapezoid', 'square'])
    sizes = p.add_mutually_exclusive_group(required=True)
    sizes.add_argument('--xs', help='Comma-separated sizes, strictly increasing')
    sizes.add_argument('--ks', help="Comma-separated integers k; sizes are k plus the configured 'sweep.fraction'")
    p.add_argument('--out', required=True)

    p = _command('fit', 'Fit the log-log waste exponent of a sweep CSV')
    p.add_argument('--csv', required=True)
    return parser


def _pick(value: Optional[float], config: Dict[str, Any], key: str, default: float) -> float:
    return value if value is not None else float(config.get(key, default))


def run(args: argparse.Namespace) -> int:
    config = load_config(getattr(args, 'config', None))
    logging.getLogger().setLevel(str(config.get('log_level', 'INFO')).upper())
    workers = effective_threads(config)
    tolerances = section(config, 'tolerances')
    repo = JsonLayoutRepository()

    if args.command == 'pack-quad':
        stats = PackQuadrilateral(repo).execute(args.m, args.theta, args.sigma1, Path(args.out))
        print(f"✅ {stats.square_count} squares, waste {stats.waste:.6f}")

    elif args.command == 'pack-trapezoid':
        trap = section(config, 'trapezoid')
        spec = TrapezoidSpec(
            args.height,
            args.base,
            args.slope,
            beta=_pick(args.beta, trap, 'beta', 0.75),
            gamma=_pick(args.gamma, trap, 'gamma', 0.5),
        )
        stats = PackTrapezoid(repo).execute(spec, Path(args.out))
        print(f"✅ {stats.square_count} squares, waste {stats.waste:.6f}, flags {list(stats.flags)}")

    elif args.command == 'pack-square':
        sq = section(config, 'square')
        stats = PackSquare(repo, workers).execute(
            args.x,
            _pick(args.beta, sq, 'beta', 0.75),
            _pick(args.epsilon, sq, 'epsilon', 0.0),
            _pick(args.nu, sq, 'nu', 0.75),
            Path(args.out),
        )
        print(f"✅ {stats.square_count} squares, waste {stats.waste:.6f}, flags {list(stats.flags)}")

    elif args.command == 'verify':
        violations = VerifyLayout(repo, workers).execute(
            Path(args.layout),
            _pick(args.shrink, tolerances, 'shrink', DEFAULT_SHRINK),
            _pick(args.slack, tolerances, 'slack', DEFAULT_SLACK),
        )
        if violations:
            print(f"❌ {len(violations)} violations")
            for v in violations:
                print(f"  {v.kind} {','.join(str(i) for i in v.indices)} by {v.magnitude:.6g}")
            return EXIT_VIOLATIONS
        print("✅ layout verified")

    elif args.command == 'stats':
        print(json.dumps(LayoutStats(repo, workers).execute(Path(args.layout)), indent=2, sort_keys=True))

    elif args.command == 'render':
        render = section(config, 'render')
        RenderLayout(repo, SvgLayoutRenderer()).execute(
            Path(args.layout),
            Path(args.svg),
            _pick(args.stroke_width, render, 'stroke_width', 0.05),
            float(render.get('scale', 10.0)),
        )

    elif args.command == 'sweep':
        if args.xs is not None:
            xs = parse_xs(args.xs)
        else:
            fraction = float(section(config, 'sweep').get('fraction', 0.5))
            xs = [k + fraction for k in parse_xs(args.ks)]
        params = section(config, args.method) if args.method in ('quad', 'trapezoid', 'square') else {}
        timed = bool(section(config, 'sweep').get('timed', True))
        records = RunSweep(CsvSweepStore(), workers, timed).execute(args.method, xs, Path(args.out), params)
        failed = [r.x for r in records if not r.verified]
        if failed:
            logging.warning(f"Sweep points without a verified layout: {failed}")
        print(f"✅ {len(records) - len(failed)} of {len(records)} points verified")

    elif args.command == 'fit':
        result = FitSweep(CsvSweepStore()).execute(Path(args.csv))
        print(f"slope={result.slope:.6f} intercept={result.intercept:.6f} r2={result.r2:.6f} n={result.n}")

    return EXIT_OK


def cli(argv: Optional[Sequence[str]] = None):
    """Entry point for the sqpack CLI command."""
    args = build_parser().parse_args(argv)
    try:
        code = run(args)
    except LayoutFormatError as e:
        logging.error(f"Bad input: {e}")
        code = EXIT_ERROR
    except SqpackError as e:
        logging.error(f"{args.command} failed: {e}")
        code = EXIT_ERROR
    except OSError as e:
        logging.error(f"{args.command}: cannot write output ({e})")
        code = EXIT_ERROR
    sys.exit(code)


if __name__ == "__main__":
    cli()
