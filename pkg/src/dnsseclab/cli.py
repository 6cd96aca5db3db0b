"""Command-line front end: forge keys, generate zones, validate, simulate.

Every command writes a manifest next to its outputs recording the exact
configuration, seed, and output digests; re-running with the same flags
reproduces the primary outputs byte for byte.

This tool generates and analyzes attack inputs entirely in process, for
isolated lab analysis and resolver hardening work.  It has no network
mode and never sends a packet.

Exit codes: 0 validation Secure / command success, 1 operational error,
2 usage error, 3 Bogus, 4 PolicyServfail, 5 ChainBroken.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from importlib import resources
from pathlib import Path

from . import __version__, ciphers
from .costmodel import get_profile
from .keyforge import forge_colliding_set
from .simharness import ScenarioError, run_scenario, scenario_from_dict
from .validator import (
    MitigationPolicy,
    Status,
    ValidatorOptions,
    resolve_and_validate,
)
from .wire import DnsName, type_from_text
from .zonegen import (
    AttackVectorSpec,
    FitError,
    VECTORS,
    ZoneBuildError,
    build_zone_graph,
    emit_zonefile,
    fit_report,
    graph_from_dict,
    graph_to_dict,
)

STATUS_EXIT_CODES = {
    Status.SECURE: 0,
    Status.BOGUS: 3,
    Status.POLICY_SERVFAIL: 4,
    Status.CHAIN_BROKEN: 5,
}


def _write_manifest(command: str, config: dict, seed: int,
                    outputs: list[Path], manifest_path: Path) -> None:
    digests = {}
    for path in outputs:
        digests[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "outputs": digests,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def cmd_forge(args) -> int:
    try:
        keys = forge_colliding_set(args.alg, args.tag, args.count,
                                   DnsName.from_text(args.owner),
                                   flags=args.flags, seed=args.seed, mode=args.mode)
    except (ciphers.UnsupportedAlgorithm, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.write_text("".join(k.presentation() + "\n" for k in keys))
    config = {"alg": args.alg, "tag": args.tag, "count": args.count,
              "owner": args.owner, "flags": args.flags, "mode": args.mode}
    _write_manifest("forge", config, args.seed, [out],
                    out.with_suffix(out.suffix + ".manifest.json"))
    print(f"wrote {args.count} DNSKEY records to {out}")
    return 0


def cmd_genzone(args) -> int:
    if args.spec_json:
        spec_data = json.loads(Path(args.spec_json).read_text())
        try:
            spec = AttackVectorSpec.from_dict(spec_data)
        except ZoneBuildError as err:
            print(f"error: {err}", file=sys.stderr)
            return 1
    else:
        spec = AttackVectorSpec(
            vector=args.vector, algorithm=args.alg, key_count=args.k,
            sig_count=args.s, ds_count=args.d, rrset_count=args.rrsets,
            key_tag_target=args.tag, seed=args.seed,
            **({"apex": args.apex} if args.apex else {}),
        )
    try:
        graph = build_zone_graph(spec)
    except FitError as err:
        print(f"fit error: {err}", file=sys.stderr)
        return 1
    except ZoneBuildError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1

    prefix = Path(args.out_prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    outputs = []
    for apex in sorted(graph.zones):
        path = prefix.with_name(f"{prefix.name}.{apex.to_text().rstrip('.')}.zone")
        path.write_text(emit_zonefile(graph.zones[apex]))
        outputs.append(path)
    graph_path = prefix.with_name(prefix.name + ".graph.json")
    graph_path.write_text(json.dumps(graph_to_dict(graph), indent=2, sort_keys=True) + "\n")
    outputs.append(graph_path)
    fit_path = prefix.with_name(prefix.name + ".fit.json")
    fit_path.write_text(json.dumps(fit_report(graph), indent=2, sort_keys=True) + "\n")
    outputs.append(fit_path)
    _write_manifest("genzone", spec.to_dict(), spec.seed, outputs,
                    prefix.with_name(prefix.name + ".manifest.json"))
    print(f"wrote {len(outputs)} files with prefix {prefix}")
    return 0


def _parse_policy(text: str | None) -> MitigationPolicy | None:
    if text is None or text == "none":
        return None
    names = {"failures": "max_validation_failures",
             "collisions": "max_colliding_keys",
             "total": "max_total_validations"}
    fields = {}
    for part in text.split(","):
        key, _, value = part.partition("=")
        key = key.strip()
        if key not in names or not value:
            raise argparse.ArgumentTypeError(
                f"policy must be comma-separated {sorted(names)}=N pairs, got {text!r}"
            )
        fields[names[key]] = int(value)
    return MitigationPolicy(**fields)


def cmd_validate(args) -> int:
    try:
        graph = graph_from_dict(json.loads(Path(args.graph).read_text()))
    except (OSError, json.JSONDecodeError, ZoneBuildError, KeyError) as err:
        print(f"error reading graph: {err}", file=sys.stderr)
        return 1
    if args.profile:
        profile = get_profile(args.profile)
        options = ValidatorOptions(
            null_crypto=not args.real_crypto,
            requery_count=profile.requery_count,
            rescan_key_selection=profile.key_selection == "rescan",
            max_keys_per_response=profile.max_keys_per_response,
        )
    else:
        options = ValidatorOptions(
            null_crypto=not args.real_crypto,
            requery_count=args.requery,
            rescan_key_selection=args.rescan,
            max_keys_per_response=args.max_keys,
        )
    qname = DnsName.from_text(args.qname) if args.qname else None
    qtype = type_from_text(args.qtype) if args.qtype else None
    outcome = resolve_and_validate(graph, qname, qtype,
                                   policy=args.policy, options=options)
    text = json.dumps(outcome.as_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return STATUS_EXIT_CODES[outcome.status]


def _load_scenario(ref: str) -> dict:
    path = Path(ref)
    if path.exists():
        return json.loads(path.read_text())
    bundled = resources.files("dnsseclab") / "scenarios" / f"{ref}.json"
    if bundled.is_file():
        return json.loads(bundled.read_text())
    raise FileNotFoundError(
        f"{ref!r} is neither a file nor a bundled scenario; bundled: "
        + ", ".join(sorted(p.name.removesuffix(".json")
                           for p in (resources.files("dnsseclab") / "scenarios").iterdir()))
    )


def cmd_simulate(args) -> int:
    try:
        data = _load_scenario(args.scenario)
        config = scenario_from_dict(data)
    except (FileNotFoundError, json.JSONDecodeError, ScenarioError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    report = run_scenario(config, backend=args.backend)
    prefix = Path(args.out_prefix) if args.out_prefix \
        else Path(config.name or "scenario")
    prefix.parent.mkdir(parents=True, exist_ok=True)
    report_path = prefix.with_name(prefix.name + ".report.json")
    report_path.write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n")
    csv_path = prefix.with_name(prefix.name + ".timeseries.csv")
    csv_path.write_text(report.timeseries_csv())
    _write_manifest("simulate", data, config.seed, [report_path, csv_path],
                    prefix.with_name(prefix.name + ".manifest.json"))
    print(f"loss {report.loss_fraction:.4f} "
          f"({report.benign_answered}/{report.benign_sent} benign answered), "
          f"max stall {report.max_attack_stall_s:.1f}s; wrote {report_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnsseclab",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    forge = sub.add_parser("forge", help="forge colliding-tag DNSKEY records")
    forge.add_argument("--alg", type=int, default=14, help="algorithm code")
    forge.add_argument("--tag", type=int, default=5353, help="target key tag")
    forge.add_argument("--count", type=_positive_int, required=True)
    forge.add_argument("--owner", default="attack.er.")
    forge.add_argument("--flags", type=int, default=256)
    forge.add_argument("--seed", type=int, default=0)
    forge.add_argument("--mode", choices=["patch", "bruteforce", "oncurve"],
                       default="patch")
    forge.add_argument("--out", required=True, help="output file for DNSKEY lines")
    forge.set_defaults(func=cmd_forge)

    genzone = sub.add_parser("genzone", help="build an attack-vector zone graph")
    genzone.add_argument("vector", choices=VECTORS, nargs="?", default="benign")
    genzone.add_argument("--k", type=_positive_int, default=1,
                         help="colliding key count")
    genzone.add_argument("--s", type=_positive_int, default=1,
                         help="invalid signature count")
    genzone.add_argument("--d", type=_positive_int, default=1,
                         help="invalid DS count per sub-zone")
    genzone.add_argument("--rrsets", type=_positive_int, default=1,
                         help="record-set count for the ANY-type vector")
    genzone.add_argument("--alg", type=int, default=14)
    genzone.add_argument("--tag", type=int, default=5353)
    genzone.add_argument("--apex", default=None)
    genzone.add_argument("--seed", type=int, default=0)
    genzone.add_argument("--spec-json", default=None,
                         help="read the full vector spec from a JSON file")
    genzone.add_argument("--out-prefix", required=True)
    genzone.set_defaults(func=cmd_genzone)

    validate = sub.add_parser("validate", help="resolve and validate a zone graph")
    validate.add_argument("--graph", required=True, help="graph JSON from genzone")
    validate.add_argument("--policy", type=_parse_policy, default=None,
                          help="e.g. failures=16,collisions=4,total=8")
    validate.add_argument("--profile", default=None,
                          help="take requery/rescan/key-cap behavior from a profile")
    validate.add_argument("--requery", type=int, default=0)
    validate.add_argument("--rescan", action="store_true")
    validate.add_argument("--max-keys", type=int, default=None)
    validate.add_argument("--real-crypto", action="store_true",
                          help="run public-key cryptography instead of ground truth")
    validate.add_argument("--qname", default=None)
    validate.add_argument("--qtype", default=None)
    validate.add_argument("--out", default=None, help="also write outcome JSON here")
    validate.set_defaults(func=cmd_validate)

    simulate = sub.add_parser("simulate", help="run a scenario simulation")
    simulate.add_argument("--scenario", required=True,
                          help="scenario JSON path or bundled scenario name")
    simulate.add_argument("--backend", choices=["numba", "numpy"], default=None)
    simulate.add_argument("--out-prefix", default=None)
    simulate.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
