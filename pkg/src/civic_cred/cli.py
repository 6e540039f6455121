"""civic-cred command line: key generation, scenario runs and audits.

Usage:
    civic-cred keygen --issuer tax --attribute taxpayer:region-X --bits 16 --seed 7 --out dir.json
    civic-cred demo-transit --citizens 10 --rps 2 --per-citizen 3 --seed 1 --out run1/
    civic-cred demo-tracing --agents 50 --seed 3 --out trace1/
    civic-cred audit run1/ --strict

Exit codes: 0 on success, 1 on a domain error or a failed --strict audit,
2 on usage errors.
"""

import argparse
import random
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv

from .auditor import MODES, audit_run, format_summary
from .credentials import AttributeKeyDirectory, keyring_from_records, keyring_to_records
from .errors import CivicCredError
from .scenarios.tracing import run_contact_tracing_scenario, write_tracing_run
from .scenarios.transit import issue_attribute_keys, run_transit_scenario, write_transit_run
from .utils.config import REPLAY_TARGETS, LogConfig, ScenarioConfig, load_config_from_file
from .utils.file_utils import directory_exists
from .utils.logger import get_logger, setup_logger
from .utils.serialization import load_json, pretty_dumps, save_json

try:
    import rich_argparse

    rich_argparse.RichHelpFormatter.styles["argparse.groups"] = "bold yellow"
except ImportError:
    rich_argparse = None

logger = get_logger(__name__)


def _scenario_config(args: argparse.Namespace, **flags) -> ScenarioConfig:
    """defaults < environment < --config file < explicit flags."""
    config = ScenarioConfig.from_env()
    if args.config:
        config = load_config_from_file(args.config, base=config)
    return config.merged(seed=args.seed, **flags).validate()


def _emit(doc, out: Optional[str]) -> None:
    if out:
        save_json(doc, out)
    else:
        sys.stdout.write(pretty_dumps(doc))


def cmd_keygen(args: argparse.Namespace) -> int:
    attributes = args.attribute or ["taxpayer:region-X"]
    config = ScenarioConfig.from_env().merged(
        seed=args.seed,
        key_bits=args.bits,
        public_exponent=args.exponent,
        issuer=args.issuer,
        attributes=tuple(attributes),
    ).validate()

    keys = issue_attribute_keys(config, random.Random(config.seed))
    directory = AttributeKeyDirectory()
    for attribute, key in keys.items():
        directory.publish(config.issuer, attribute, key.public_key())

    _emit(directory.to_records(), args.out)
    if args.keyring:
        save_json(keyring_to_records({(config.issuer, a): k for a, k in keys.items()}), args.keyring)
    logger.info("Published %d key(s) for %s", len(directory), config.issuer)
    return 0


def cmd_demo_transit(args: argparse.Namespace) -> int:
    config = _scenario_config(
        args,
        citizens=args.citizens,
        relying_parties=args.rps,
        credentials_per_citizen=args.per_citizen,
        cheaters=args.cheaters,
        forgers=args.forgers,
        gossip_every=args.gossip_every,
        replay_at=args.replay_at,
        quota=args.quota,
        key_bits=args.bits,
    )
    report = run_transit_scenario(config, progress=args.progress)
    if args.out:
        write_transit_run(report, args.out, export_keyring=args.export_keyring)
        print(
            f"✓ {report.accepts} accepted, {report.rejects} rejected "
            f"({report.double_spend_rejects} double spends) -> {args.out}",
            file=sys.stderr,
        )
    else:
        _emit(report.to_dict(), None)
    return 0


def cmd_demo_tracing(args: argparse.Namespace) -> int:
    config = _scenario_config(
        args,
        citizens=args.agents,
        epochs=args.epochs,
        proximity_events=args.proximity_events,
        infected=args.infected,
        infectious_window=args.window,
    )
    report = run_contact_tracing_scenario(config, progress=args.progress)
    if args.out:
        write_tracing_run(report, args.out)
        print(f"✓ {len(report.exposed)} exposed agent(s) -> {args.out}", file=sys.stderr)
    else:
        _emit(report.to_dict(), None)
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    run_dir = Path(args.run_dir)
    if not directory_exists(run_dir):
        raise FileNotFoundError(f"Run directory not found: {run_dir}")
    signers = keyring_from_records(load_json(args.keyring)) if args.keyring else None
    seed = args.seed if args.seed is not None else ScenarioConfig.from_env().seed

    report = audit_run(
        run_dir,
        mode=args.mode,
        trials=args.trials,
        seed=seed,
        signers=signers,
        workers=args.workers,
        progress=args.progress,
    )
    if args.out:
        save_json(report.to_dict(), args.out)
        print(format_summary(report))
    else:
        _emit(report.to_dict(), None)
        print(format_summary(report), file=sys.stderr)

    failures = report.strict_failures()
    if args.strict and failures:
        for failure in failures:
            print(f"✗ {failure}", file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    formatter_class = (
        rich_argparse.RichHelpFormatter if rich_argparse else argparse.HelpFormatter
    )
    parser = argparse.ArgumentParser(
        prog="civic-cred",
        description="Attribute-scoped blind-signature credentials: "
        "key generation, deterministic scenario runs and transcript audits",
        formatter_class=formatter_class,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="More logging (-v info, -vv debug)")
    parser.add_argument("--log-file", help="Also write logs to this file")
    parser.add_argument("--progress", action="store_true",
                        help="Show progress bars on stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    keygen = sub.add_parser("keygen", help="Generate attribute keys and a directory file",
                            formatter_class=formatter_class)
    keygen.add_argument("--issuer", default="tax-office", help="Issuer name (default: tax-office)")
    keygen.add_argument("--attribute", action="append",
                        help="Attribute to key; repeat for several (default: taxpayer:region-X)")
    keygen.add_argument("--bits", type=int,
                        help="Modulus size in bits (default: $CIVIC_CRED_KEY_BITS or 16)")
    keygen.add_argument("--exponent", type=int, default=3, help="Public exponent (default: 3)")
    keygen.add_argument("--seed", type=int, help="Seed (default: $CIVIC_CRED_SEED or 0)")
    keygen.add_argument("--out", help="Directory file to write (default: stdout)")
    keygen.add_argument("--keyring", help="Also write the private keyring here")
    keygen.set_defaults(func=cmd_keygen)

    transit = sub.add_parser("demo-transit", help="Run the transit-discount scenario",
                             formatter_class=formatter_class)
    transit.add_argument("--citizens", type=int, help="Number of citizens")
    transit.add_argument("--rps", type=int, help="Number of transit relying parties")
    transit.add_argument("--per-citizen", type=int, help="Credentials per citizen")
    transit.add_argument("--cheaters", type=int, help="Citizens who replay a presentation")
    transit.add_argument("--forgers", type=int, help="Citizens who present a forged signature")
    transit.add_argument("--gossip-every", type=int,
                         help="Gossip round after every N-th presentation (0 disables)")
    transit.add_argument("--replay-at", choices=REPLAY_TARGETS,
                         help="Where cheaters replay")
    transit.add_argument("--quota", type=int, help="Issuer quota per citizen and period")
    transit.add_argument("--bits", type=int, help="Modulus size in bits")
    transit.add_argument("--seed", type=int, help="Seed (default: $CIVIC_CRED_SEED or 0)")
    transit.add_argument("--config", help="JSON (or YAML) scenario config; flags override it")
    transit.add_argument("--out", help="Run directory (default: report JSON on stdout)")
    transit.add_argument("--export-keyring", action="store_true",
                         help="Write the private keyring to the run directory")
    transit.set_defaults(func=cmd_demo_transit)

    tracing = sub.add_parser("demo-tracing", help="Run the contact-tracing scenario",
                             formatter_class=formatter_class)
    tracing.add_argument("--agents", type=int, help="Number of agents")
    tracing.add_argument("--epochs", type=int, help="Timeline length")
    tracing.add_argument("--proximity-events", type=int, help="Sampled proximity events")
    tracing.add_argument("--infected", type=int, help="Number of infected agents")
    tracing.add_argument("--window", type=int, help="Infectious window in epochs")
    tracing.add_argument("--seed", type=int, help="Seed (default: $CIVIC_CRED_SEED or 0)")
    tracing.add_argument("--config", help="JSON (or YAML) scenario config; flags override it")
    tracing.add_argument("--out", help="Output directory (default: report JSON on stdout)")
    tracing.set_defaults(func=cmd_demo_tracing)

    audit = sub.add_parser("audit", help="Audit the transcripts of a run directory",
                           formatter_class=formatter_class)
    audit.add_argument("run_dir", metavar="RUN_DIR", help="Directory with <node>.jsonl files")
    audit.add_argument("--mode", choices=MODES, default="exhaustive",
                       help="Linkage search mode (default: exhaustive)")
    audit.add_argument("--strict", action="store_true",
                       help="Exit 1 on leaks, shared moduli, linkage or recount errors")
    audit.add_argument("--trials", type=int, default=1000,
                       help="Key-separation trials per key pair (default: 1000)")
    audit.add_argument("--keyring", help="Private keyring enabling the statistical key check")
    audit.add_argument("--seed", type=int, help="Seed for the key-separation trials")
    audit.add_argument("--workers", type=int, default=1, help="Worker processes (default: 1)")
    audit.add_argument("--out", help="Audit JSON file (default: stdout)")
    audit.set_defaults(func=cmd_audit)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the civic-cred console script."""
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    log_config = LogConfig.from_env()
    level = {0: log_config.level, 1: "INFO"}.get(args.verbose, "DEBUG")
    setup_logger("civic_cred", log_file=args.log_file or log_config.log_file, level=level)

    try:
        return args.func(args)
    except (CivicCredError, FileNotFoundError) as exc:
        print(f"✗ {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
