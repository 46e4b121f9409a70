"""Command-line interface: ``zenocz {ev,sign,lm-cz,photon-cz,sweep,selftest}``.

Exit status: 0 on success, 2 for configuration errors, 3 when a numerical
invariant (probability conservation, oracle agreement) is breached.
"""

from __future__ import annotations

import argparse
import sys
import traceback
from pathlib import Path

from ..interrogation import ConfigError, InvariantError
from .config import load_config_file, parse_config
from .records import build_record, write_records
from .selftest import run_selftest
from .sweep import SweepSpec, default_jobs, parse_axis, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3

# flag dest -> config key
RUN_FLAGS = {
    "n": "n",
    "theta": "theta",
    "mode": "mode",
    "theta_schedule": "theta_schedule",
    "p_abs": "p_abs",
    "p_leak": "p_leak",
    "absorber_phase": "absorber_phase",
    "loss": "loss",
    "detour_phase": "detour_phase",
    "bomb": "bomb",
    "control": "control",
    "target": "target",
    "feed_forward": "feed_forward",
    "oracle": "oracle",
    "seed": "seed",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--n", help="number of beamsplitter cycles N")
    p.add_argument("--theta", help="beamsplitter angle in radians (conflicts with --mode)")
    p.add_argument("--mode", choices=["detection", "sign"], help="detection: theta=pi/2N, sign: theta=pi/N")
    p.add_argument("--theta-schedule", help="comma-separated per-cycle angles (length N)")
    p.add_argument("--p-abs", help="ensemble absorption probability per pass (atom in g)")
    p.add_argument("--p-leak", help="residual absorption probability per pass under blockade")
    p.add_argument("--absorber-phase", help="phase on amplitude transmitted past the absorber")
    p.add_argument("--loss", help="per-cycle photon loss probability per arm")
    p.add_argument("--detour-phase", help="phase error of the detour path")
    p.add_argument("--bomb", help="ev/sign: present|absent; lm-cz: bomb state '0', '1', '+' or 'a,b'")
    p.add_argument("--control", help="control photon (lm-cz: the photon) as 'a,b' or 0/1/+/-")
    p.add_argument("--target", help="target photon as 'a,b' or 0/1/+/-")
    p.add_argument("--feed-forward", choices=["on", "off"], help="pi correction after an r readout")
    p.add_argument("--oracle", action="store_const", const=True, help="density-operator cross-check (N <= 50)")
    p.add_argument("--seed", help="seed for the Monte-Carlo shot")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", help="write records to FILE instead of standard output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zenocz", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "ev": "Elitzur-Vaidman detection run with a classical bomb",
        "sign": "sign-mode interrogation (theta = pi/N)",
        "lm-cz": "light-matter CZ between a Rydberg bomb and one photon",
        "photon-cz": "six-stage photon-photon CZ",
    }
    for name, text in helps.items():
        _add_run_flags(sub.add_parser(name, help=text))
    sw = sub.add_parser("sweep", help="run a command over a parameter grid")
    sw.add_argument("--command", dest="sweep_command", required=True, choices=list(helps))
    sw.add_argument("--axis", action="append", default=[], help="name=v1,v2 | name=lin:a:b:k | name=log:a:b:k")
    sw.add_argument("--jobs", type=int, help=f"worker processes (default: ${'{'}ZENOCZ_JOBS{'}'} or 1)")
    sw.add_argument("--allow-oversize", action="store_true")
    _add_run_flags(sw)
    st = sub.add_parser("selftest", help="run the randomized invariant suite")
    st.add_argument("--configs", type=int, default=500)
    st.add_argument("--seed", type=int, default=2024)
    return parser


def _flag_values(args: argparse.Namespace) -> dict:
    return {key: getattr(args, dest) for dest, key in RUN_FLAGS.items() if getattr(args, dest, None) is not None}


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            report = run_selftest(args.configs, args.seed)
            print(f"runs: {report.runs}  oracle runs: {report.oracle_runs}")
            print(f"worst conservation error: {report.worst_conservation:.3e}")
            print(f"worst oracle delta: {report.worst_oracle:.3e}")
            for f in report.failures:
                print(f"FAIL {f}")
            print("selftest " + ("passed" if report.ok else "FAILED"))
            return EXIT_OK if report.ok else EXIT_INVARIANT

        file_values = load_config_file(args.config) if args.config else {}
        flags = _flag_values(args)
        if args.command == "sweep":
            file_values.pop("command", None)
            spec = SweepSpec(
                command=args.sweep_command,
                axes=tuple(parse_axis(a) for a in args.axis),
                fixed={**file_values, **{k: v for k, v in flags.items() if k not in ("oracle", "seed")}},
                format=args.format,
                oracle=bool(args.oracle),
                seed=int(args.seed) if args.seed is not None else None,
                allow_oversize=args.allow_oversize,
            )
            records = run_sweep(spec, args.jobs or default_jobs())
        else:
            cfg = parse_config(file_values, {"command": args.command, **flags})
            records = [build_record(cfg)]
        _emit(write_records(records, args.format), args.out)
        return EXIT_OK
    except ConfigError as exc:
        print(f"zenocz: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"zenocz: numerical invariant failure: {exc}", file=sys.stderr)
        traceback.print_exc(file=sys.stderr)
        return EXIT_INVARIANT


__all__ = ["EXIT_CONFIG", "EXIT_INVARIANT", "EXIT_OK", "build_parser", "main"]
