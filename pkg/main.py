"""
squidsim - Entry Point

Simulates multiphoton transitions and population inversion in a
microwave-driven rf-SQUID flux qubit: level diagrams, no-MW step curves,
bias x power population maps and the verification suites.
"""

import argparse
import importlib
import json
import logging
import sys

from squidsim.config import load_config, with_overrides
from squidsim.errors import ParseError, SquidSimError, ValidationError
from squidsim.orchestrator import COMMANDS, Orchestrator

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SIMULATION = 4
EXIT_INTERRUPTED = 130

HOOK_REGISTRY = {
    "progress": "squidsim.hooks.progress.ProgressLogHook",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="squidsim",
        description="squidsim - driven rf-SQUID flux qubit simulator",
    )
    parser.add_argument("command", choices=COMMANDS, help="What to run")
    parser.add_argument(
        "--config",
        default="config.json",
        help="Path to configuration file (default: config.json)",
    )
    parser.add_argument("--out", help="Override output directory from config")
    parser.add_argument("--seed", type=int, help="Override sweep seed from config")
    parser.add_argument("--solver", choices=["full", "rate"], help="Override sweep solver from config")
    parser.add_argument(
        "--json-errors",
        action="store_true",
        help="Print errors as one JSON line on stdout; logs go to stderr",
    )
    parser.add_argument(
        "--verbose", "-v",
        action="store_true",
        help="Enable debug logging",
    )
    return parser


def register_hooks(orchestrator: Orchestrator, hook_names: list[str]) -> None:
    """Instantiate hooks named in the config through HOOK_REGISTRY."""
    logger = logging.getLogger("squidsim")
    for hook_name in hook_names:
        if hook_name in HOOK_REGISTRY:
            module_path, class_name = HOOK_REGISTRY[hook_name].rsplit(".", 1)
            mod = importlib.import_module(module_path)
            hook_class = getattr(mod, class_name)
            orchestrator.register_hook(hook_class())
        else:
            logger.warning(f"Unknown hook: {hook_name}")


def _report(error: SquidSimError, json_errors: bool) -> None:
    if json_errors:
        print(json.dumps(error.to_dict(), sort_keys=True, default=str))


def main(argv: list[str] | None = None) -> int:
    """Parse arguments, load configuration, and run one command."""
    args = build_parser().parse_args(argv)

    log_level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(
        level=log_level,
        format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=[
            logging.StreamHandler(sys.stderr if args.json_errors else sys.stdout),
        ],
    )
    logger = logging.getLogger("squidsim")

    orchestrator = None
    try:
        config = load_config(args.config)
        config = with_overrides(config, out=args.out, seed=args.seed, solver=args.solver)
        logger.info(
            f"squidsim starting: command={args.command}, solver={config.sweep.solver.value}, "
            f"out={config.output_dir}"
        )

        orchestrator = Orchestrator(config)
        register_hooks(orchestrator, config.hooks)
        ok = orchestrator.run(args.command)
        return EXIT_OK if ok else EXIT_FAILED

    except ParseError as e:
        logger.error(f"Configuration parse error: {e}")
        _report(e, args.json_errors)
        return EXIT_PARSE
    except ValidationError as e:
        logger.error(f"Invalid configuration: {e}")
        _report(e, args.json_errors)
        return EXIT_VALIDATION
    except SquidSimError as e:
        logger.error(f"{e.__class__.__name__}: {e}")
        _report(e, args.json_errors)
        return EXIT_SIMULATION
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return EXIT_INTERRUPTED
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        if args.json_errors:
            print(json.dumps({"error": e.__class__.__name__, "message": str(e)}))
        return EXIT_FAILED
    finally:
        if orchestrator is not None:
            orchestrator.close()


if __name__ == "__main__":
    sys.exit(main())
