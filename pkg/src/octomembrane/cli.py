"""Command-line entry point.

    octomembrane verify-algebra [--out DIR]
    octomembrane flow --dim 3 --preset collapse --grid 32x32 --out runs/collapse
    octomembrane batch --config runs.ini --jobs 4 --out runs/

Parameters come from the schema defaults, then the ``[<kind>]`` section of
``--config`` (key = value), then command-line flags.
"""
from __future__ import annotations

import argparse
import configparser
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .scenarios import (EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_TOLERANCE, KINDS, SCHEMAS,
                        ConfigError, Scenario, run)

HELP = {
    "verify-algebra": "exact checks of the octonion tables, beta matrices and G2",
    "flow": "integrate a self-dual flow and monitor residuals and charges",
    "nahm": "integrate the 7x7 matrix ODE or its diagonal top",
    "solutions": "evaluate a closed-form solution and its residuals",
    "susy": "count preserved supersymmetries of a snapshot",
    "convergence": "fuzzy-sphere, RK4 and grid-refinement convergence table",
}


def _add_params(sp: argparse.ArgumentParser, kind: str) -> None:
    for name, (_, default) in SCHEMAS[kind].items():
        sp.add_argument("--" + name.replace("_", "-"), dest=name, default=argparse.SUPPRESS,
                        metavar=name.upper(), help=f"default: {default!r}")
    sp.add_argument("--config", dest="_config", default=None, metavar="FILE",
                    help="key = value file with a [%s] section" % kind)
    sp.add_argument("--out", dest="_out", default=None, metavar="DIR",
                    help="output directory (default runs/%s)" % kind)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="octomembrane", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in KINDS:
        _add_params(sub.add_parser(kind, help=HELP[kind]), kind)
    v = sub.add_parser("verify", help="alias: verify algebra")
    v.add_argument("target", choices=["algebra"])
    _add_params(v, "verify-algebra")
    b = sub.add_parser("batch", help="run every section of a config file as a scenario")
    b.add_argument("--config", dest="_config", required=True, metavar="FILE")
    b.add_argument("--out", dest="_out", default="runs", metavar="DIR")
    b.add_argument("--jobs", type=int, default=1)
    return ap


def _read_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from None
    return cp


def scenario_from_args(ns: argparse.Namespace) -> Scenario:
    kind = "verify-algebra" if ns.command == "verify" else ns.command
    raw = {}
    if ns._config:
        cp = _read_config(ns._config)
        if cp.has_section(kind):
            raw.update(dict(cp.items(kind)))
    raw.update({k: v for k, v in vars(ns).items() if k in SCHEMAS[kind]})
    return Scenario.build(kind, raw, ns._out or Path("runs") / kind)


def batch_scenarios(config, out) -> list[Scenario]:
    """Sections named ``kind`` or ``kind:label``; each gets out/<section>."""
    cp = _read_config(config)
    if not cp.sections():
        raise ConfigError(f"{config} defines no scenarios")
    scenarios = []
    for section in cp.sections():
        kind = section.split(":", 1)[0].strip()
        label = section.replace(":", "-").replace(" ", "")
        scenarios.append(Scenario.build(kind, dict(cp.items(section)), Path(out) / label))
    return scenarios


def _worst(codes) -> int:
    for code in (EXIT_CONFIG, EXIT_NUMERIC, EXIT_TOLERANCE):
        if code in codes:
            return code
    return EXIT_OK


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        if ns.command == "batch":
            scenarios = batch_scenarios(ns._config, ns._out)
            if ns.jobs > 1:
                with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
                    codes = list(pool.map(run, scenarios))
            else:
                codes = [run(sc) for sc in scenarios]
            for sc, code in zip(scenarios, codes):
                print(f"{sc.out}: exit {code}")
            return _worst(codes)
        sc = scenario_from_args(ns)
        code = run(sc)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{sc.kind}: exit {code}, report at {sc.out / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
