import os
import sys
import csv
import json
import argparse
from pathlib import Path
from dotenv import load_dotenv

# Add project root to Python path
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from src.models.config import load_config
from src.simulation.runner import run_simulation
from src.simulation.artifacts import artifact_spectrum, render_artifact, write_spectrum
from src.diagnostics.convergence import self_convergence
from src.utils.logger import setup_logging
from src.utils.validators import parse_overrides, parse_window


def cmd_run(args, logger) -> int:
    config = load_config(args.config, parse_overrides(args.set))
    logger.info(f"Running {config.ic} to t={config.t_end} into {config.output_dir}")
    return run_simulation(config, resume=args.resume)


def cmd_render(args, logger) -> int:
    output = args.output or str(Path(args.artifact).with_suffix('')) + '.pgm'
    path = render_artifact(args.artifact, output, parse_window(args.window), args.px)
    logger.info(f"Image saved to {path}")
    return 0


def cmd_spectrum(args, logger) -> int:
    spectrum, t = artifact_spectrum(args.artifact, args.n_eval)
    output = args.output or str(Path(args.artifact).with_suffix('')) + '_spectrum.csv'
    write_spectrum(spectrum, output)
    logger.info(f"Spectrum at t={t:.6g} saved to {output}")
    return 0


def cmd_converge(args, logger) -> int:
    config = load_config(args.config, parse_overrides(args.set))
    report = self_convergence(config, args.mode, args.levels, args.n_eval)

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / 'convergence.csv', 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(["level", "resolution", "map_error", "vorticity_error", "enstrophy_error", "energy_error"])
        writer.writerows(report.to_rows())
    with open(out_dir / 'convergence.json', 'w') as f:
        json.dump({"mode": report.mode, "orders": report.orders}, f, indent=2)

    for name, order in report.orders.items():
        print(f"{name}: observed order {order:.3f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Characteristic mapping solver for 2D incompressible Euler.')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Run a simulation from a key=value config file')
    run.add_argument('config', type=str, help='Path to the run configuration')
    run.add_argument('--resume', type=str, help='Saved stack directory to continue from')
    run.add_argument('--set', nargs='*', metavar='KEY=VALUE', help='Override config keys')
    run.set_defaults(handler=cmd_run)

    render = sub.add_parser('render', help='Render a field dump or saved stack to a 16-bit PGM')
    render.add_argument('artifact', type=str, help='Field dump (.bin/.json) or saved stack directory')
    render.add_argument('--window', type=str, help='x0,y0,x1,y1 (saved stacks only)')
    render.add_argument('--px', type=int, help='Pixels per side (default 512 for stacks, the dump size for field dumps)')
    render.add_argument('--output', type=str, help='Image path')
    render.set_defaults(handler=cmd_render)

    spectrum = sub.add_parser('spectrum', help='Vorticity shell spectrum of a saved artifact')
    spectrum.add_argument('artifact', type=str, help='Field dump or saved stack directory')
    spectrum.add_argument('--n-eval', type=int, help='Evaluation grid for saved stacks')
    spectrum.add_argument('--output', type=str, help='CSV path')
    spectrum.set_defaults(handler=cmd_spectrum)

    converge = sub.add_parser('converge', help='Self-convergence study')
    converge.add_argument('config', type=str, help='Path to the run configuration')
    converge.add_argument('--mode', choices=['dt', 'dx'], default='dt', help='Refine the time step or the map grid')
    converge.add_argument('--levels', type=int, default=3, help='Number of ladder levels')
    converge.add_argument('--n-eval', type=int, help='Grid on which errors are measured')
    converge.add_argument('--set', nargs='*', metavar='KEY=VALUE', help='Override config keys')
    converge.set_defaults(handler=cmd_converge)
    return parser


def main():
    args = build_parser().parse_args()

    # Load environment variables
    load_dotenv()

    # Set up logging
    logger = setup_logging()

    try:
        status = args.handler(args, logger)
    except Exception as e:
        logger.error(f"{args.command} failed: {str(e)}")
        sys.exit(1)
    sys.exit(status)


if __name__ == "__main__":
    main()
