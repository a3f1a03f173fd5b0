#!/usr/bin/env python3
"""
Command line for the viscous-limit lab.

    python -m visclimit classify --c 1,1,0
    python -m visclimit solve --nu 0.02 --c 2.7777777777777777,0.1111111111111111,-2 --branch interior --xk 0
    python -m visclimit rates --c 1,1,0 --branch upper --nu-grid 1e-1:3e-4:8

Results go to stdout as JSON unless --out names a file (written in --format).
Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 region or precondition error.
"""
import argparse
import logging
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .errors import UsageError, VisclimitError
from .eulerlim import EulerSign, SignKind, euler_profile
from .export import dumps, write_single
from .fields import field_sample, streamlines
from .figures import fig1_dataset, figure_datasets
from .layers import edge_jumps, layer_error, layer_spec
from .polyparams import Coeffs, classify, in_J, in_interior_J0, in_partial_prime_J0
from .riccati import Branch, BranchKind, solve
from .settings import (
    LabSettings,
    build_settings,
    configure_logging,
    parse_nu_grid,
    read_config_file,
    settings_fields,
)
from .vanish import (
    Metric,
    Reference,
    full_window,
    nonconv_search,
    parse_window,
    rate_sweep,
    table1_check,
)

# Try to import colorama for colored output
try:
    from colorama import Fore, Style, init
    init()
    COLOR_AVAILABLE = True
except ImportError:
    COLOR_AVAILABLE = False

    class DummyFore:
        GREEN = ""
        YELLOW = ""
        RED = ""
        BLUE = ""
        RESET = ""

    class DummyStyle:
        BRIGHT = ""
        RESET_ALL = ""

    Fore = DummyFore()
    Style = DummyStyle()

logger = logging.getLogger("ViscLimitCLI")

COMMANDS = ("classify", "solve", "limit", "layer", "rates", "nonconv", "table", "field", "fig1", "figures")
METRICS = {"supU": Metric.SUP_U, "supH": Metric.SUP_H, "supDeriv": Metric.SUP_DERIV}
SIGNS = {
    "plus": SignKind.PLUS,
    "minus": SignKind.MINUS,
    "glued": SignKind.GLUED,
    "smoothplus": SignKind.SMOOTH_PLUS,
    "smoothminus": SignKind.SMOOTH_MINUS,
}
# settings that also exist as flags; the flag wins over the config file
SETTINGS_FLAGS = ("threads", "log_level")


class LabArgumentParser(argparse.ArgumentParser):
    """argparse with usage problems raised as UsageError (exit code 1)"""

    def __init__(self, *args, **kwargs):
        # --c must never be read as a prefix of --config
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        raise UsageError(message)


def _common_flags() -> argparse.ArgumentParser:
    common = LabArgumentParser(add_help=False)
    common.add_argument("--c", type=str, help="Coefficients c1,c2,c3 as decimals")
    common.add_argument("--nu", type=float, help="Viscosity")
    common.add_argument("--branch", choices=["upper", "lower", "star", "interior", "anchored"],
                        default="upper", help="Solution branch")
    common.add_argument("--xk", type=float, help="Zero of an interior solution (or layer centre)")
    common.add_argument("--xa", type=float, help="Anchor point of an anchored solution")
    common.add_argument("--Ua", type=float, help="Value at the anchor point")
    common.add_argument("--K", type=float, help="Layer window constant")
    common.add_argument("--nu-grid", type=str, help="Viscosities START:STOP:COUNT, log-spaced")
    common.add_argument("--window", type=str, help="Error window A,B or A,B;C,D")
    common.add_argument("--metric", choices=sorted(METRICS), default="supU", help="Error functional")
    common.add_argument("--reference", choices=["plus", "minus", "glued", "layer"],
                        help="Limit profile for rates (default follows the branch)")
    common.add_argument("--sign", choices=sorted(SIGNS), default="plus", help="Euler branch for limit")
    common.add_argument("--x0", type=float, help="Glue point of a glued Euler profile")
    common.add_argument("--side", choices=["right", "left"], default="right", help="Endpoint for nonconv")
    common.add_argument("--eps", type=float, default=0.1, help="Endpoint window width for nonconv")
    common.add_argument("--theta", type=float, help="Polar angle for field")
    common.add_argument("--r", type=float, default=1.0, help="Radius for field")
    common.add_argument("--out", type=str, help="Output file (directory for fig1/figures)")
    common.add_argument("--format", choices=["csv", "json", "svg"], default="json", help="Output format")
    common.add_argument("--config", type=str, help="Flat key=value config file")
    common.add_argument("--threads", type=int, help="Worker threads for sweeps")
    common.add_argument("--log-level", type=str, help="Logging level")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = LabArgumentParser(prog="visclimit", description="Numerical lab for the vanishing-viscosity limit")
    sub = parser.add_subparsers(dest="command", parser_class=LabArgumentParser)
    common = _common_flags()
    helps = {
        "classify": "Regime of c with its rate exponents",
        "solve": "Solve the reduced equation for one branch",
        "limit": "Sample an Euler limit profile",
        "layer": "Transition-layer description and its error",
        "rates": "Vanishing-viscosity rate sweep",
        "nonconv": "Search for non-convergent upper solutions",
        "table": "Check the convergence-table cells that hold for c",
        "field": "Velocity and pressure at one point",
        "fig1": "Write the fig1 dataset",
        "figures": "Write all four figure datasets",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> Dict[str, str]:
    """Read --config before the real parse; flag keys become subparser defaults, the rest settings"""
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config", type=str)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    values = read_config_file(Path(known.config))
    fields = set(settings_fields())
    flag_dests = set()
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in subparsers.choices.values():
        flag_dests.update(a.dest for a in sp._actions)
    unknown = [k for k in values if k not in fields and k not in flag_dests]
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    flag_values = {k: v for k, v in values.items() if k in flag_dests and k not in fields}
    for sp in subparsers.choices.values():
        sp.set_defaults(**flag_values)
    return {k: v for k, v in values.items() if k in fields}


def _coeffs(args) -> Coeffs:
    if not args.c:
        raise UsageError("--c is required")
    return Coeffs.from_cli(args.c)


def _nu(args) -> float:
    if args.nu is None:
        raise UsageError("--nu is required")
    return float(args.nu)


def _branch(args) -> Branch:
    if args.branch == "interior":
        if args.xk is None:
            raise UsageError("--branch interior needs --xk")
        return Branch.interior(float(args.xk))
    if args.branch == "anchored":
        if args.xa is None or args.Ua is None:
            raise UsageError("--branch anchored needs --xa and --Ua")
        return Branch.anchored(float(args.xa), float(args.Ua))
    return Branch(kind={"upper": BranchKind.UPPER, "lower": BranchKind.LOWER, "star": BranchKind.STAR}[args.branch])


def _nu_grid(args, settings: LabSettings) -> List[float]:
    return parse_nu_grid(args.nu_grid) if args.nu_grid else settings.nu_values()


def _reference(args, branch: Branch) -> Reference:
    kind = args.reference
    if kind is None:
        if branch.kind == BranchKind.LOWER:
            kind = "minus"
        elif branch.kind == BranchKind.INTERIOR:
            kind = "glued"
        else:
            kind = "plus"
    if kind == "glued":
        x0 = args.x0 if args.x0 is not None else branch.x_k
        if x0 is None:
            raise UsageError("a glued reference needs --x0 (or an interior branch)")
        return Reference.glued(float(x0))
    if kind == "layer":
        return Reference.layer(args.K)
    return Reference.plus() if kind == "plus" else Reference.minus()


def _emit(result: Any, args, plot_profiles=()) -> None:
    if args.out:
        path = write_single(result, args.out, args.format, plot_profiles)
        print(f"{Fore.GREEN}Wrote {path}{Style.RESET_ALL}", file=sys.stderr)
    else:
        print(dumps(result))


def _print_rates_table(report) -> None:
    """Fixed-width per-viscosity table on stderr"""
    color = Fore.GREEN if report.verdict else (Fore.YELLOW if report.bound_holds else Fore.RED)
    print(f"{'nu':>14} {'error':>14} {'local slope':>12}", file=sys.stderr)
    for (nu, err), local in zip(report.fit.points, report.fit.local_slopes()):
        local_text = "" if local is None else f"{local:12.4f}"
        print(f"{nu:14.6e} {err:14.6e} {local_text:>12}", file=sys.stderr)
    print(f"{color}slope {report.fit.slope:.4f} (r2 {report.fit.r2:.4f}), predicted {report.predicted_alpha:.4f}, "
          f"verdict {report.verdict}, bound_holds {report.bound_holds}{Style.RESET_ALL}", file=sys.stderr)


def cmd_classify(args, settings: LabSettings) -> Any:
    c = _coeffs(args)
    regime = classify(c, settings)
    alpha = regime.alpha
    if alpha is not None and float(alpha).is_integer():
        alpha = int(alpha)
    fraction = regime.alpha_fraction()
    return {
        "kind": regime.kind.value,
        "alpha": alpha,
        "alpha_fraction": None if fraction is None else str(fraction),
        "kappa": regime.kappa,
        "xbar": regime.xbar,
        "in_J0": in_J(0.0, c, settings),
        "interior_J0": in_interior_J0(c),
        "partial_prime_J0": in_partial_prime_J0(c),
    }


def cmd_solve(args, settings: LabSettings) -> Any:
    return solve(_nu(args), _coeffs(args), _branch(args), settings=settings)


def cmd_limit(args, settings: LabSettings) -> Any:
    kind = SIGNS[args.sign]
    if kind == SignKind.GLUED:
        if args.x0 is None:
            raise UsageError("--sign glued needs --x0")
        sign = EulerSign.glued(float(args.x0))
    else:
        sign = EulerSign(kind=kind)
    e = euler_profile(_coeffs(args), sign, settings=settings)
    if args.out and args.format != "json":
        return e
    return {"c": e.c.model_dump(), "sign": e.sign.label(), "x": e.grid, "V": e.values,
            "dVdx": e.deriv, "flagged": e.flagged}


def cmd_layer(args, settings: LabSettings) -> Any:
    if args.xk is None:
        raise UsageError("layer needs --xk")
    nu, c = _nu(args), _coeffs(args)
    spec = layer_spec(nu, c, float(args.xk), args.K, settings)
    profile = solve(nu, c, Branch.interior(float(args.xk)), settings=settings)
    return {
        "spec": spec,
        "window": list(spec.window),
        "edge_jumps": list(edge_jumps(spec)),
        "layer_error": layer_error(profile, spec),
    }


def cmd_rates(args, settings: LabSettings) -> Any:
    c = _coeffs(args)
    branch = _branch(args)
    window = parse_window(args.window) if args.window else full_window()
    report = rate_sweep(c, branch, _reference(args, branch), METRICS[args.metric], window,
                        _nu_grid(args, settings), settings, strict=False)
    _print_rates_table(report)
    return report


def cmd_nonconv(args, settings: LabSettings) -> Any:
    c = _coeffs(args)
    return nonconv_search(c.c1, c.c2, args.eps, _nu_grid(args, settings), args.side, settings)


def cmd_table(args, settings: LabSettings) -> Any:
    nu_grid = parse_nu_grid(args.nu_grid) if args.nu_grid else None
    return table1_check(_coeffs(args), nu_grid, settings)


def cmd_field(args, settings: LabSettings) -> Any:
    nu, c = _nu(args), _coeffs(args)
    profile = solve(nu, c, _branch(args), settings=settings)
    if args.out and args.format != "json":
        return streamlines(profile, settings=settings)
    if args.theta is None:
        raise UsageError("field needs --theta (or --out with csv/svg for streamlines)")
    return field_sample(profile, float(args.theta), float(args.r), settings)


def cmd_figures(args, settings: LabSettings, everything: bool) -> Any:
    out_dir = Path(args.out or "figures_out")
    manifest = (figure_datasets if everything else fig1_dataset)(out_dir, settings)
    print(dumps(manifest))
    return None


def run(args, settings: LabSettings) -> Any:
    handlers = {
        "classify": cmd_classify,
        "solve": cmd_solve,
        "limit": cmd_limit,
        "layer": cmd_layer,
        "rates": cmd_rates,
        "nonconv": cmd_nonconv,
        "table": cmd_table,
        "field": cmd_field,
    }
    if args.command == "fig1":
        return cmd_figures(args, settings, everything=False)
    if args.command == "figures":
        return cmd_figures(args, settings, everything=True)
    return handlers[args.command](args, settings)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        file_settings = _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if not args.command:
            raise UsageError(f"a subcommand is required: {', '.join(COMMANDS)}")
        overrides = {name: getattr(args, name) for name in SETTINGS_FLAGS}
        settings = build_settings(file_settings, overrides)
    except UsageError as e:
        configure_logging("INFO")
        logger.error(f"{Fore.RED}{e}{Style.RESET_ALL}")
        return e.exit_code

    configure_logging(settings.log_level)
    start_time = time.time()
    try:
        result = run(args, settings)
        if result is not None:
            _emit(result, args)
    except VisclimitError as e:
        logger.error(f"{args.command} failed: {e}")
        return e.exit_code
    except OSError as e:
        logger.error(f"{args.command} failed: {e}")
        return 2
    logger.info(f"{args.command} finished in {time.time() - start_time:.2f} seconds")
    return 0


if __name__ == "__main__":
    sys.exit(main())
