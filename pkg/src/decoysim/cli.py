"""Command-line front end: single runs, sweeps, adversary analyses, replay checks.

Exit codes: 0 protocol success, 1 config/usage error, 2 protocol-level
failure (timeout, rejected recovery, successful disruption or secret
compromise).  Machine-readable mode (--format records) emits one JSON
record per line; every report carries the tool version and the fully
resolved scenario so a run can be replayed from its report alone.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import os
import sys
import time
from typing import Optional, TextIO

from . import __version__
from . import adversary as adversary_mod
from .config import load_scenario
from .decoy import DecoyOutcome
from .engine import Protocol, Scenario, replay_digest
from .errors import (
    ConfigError,
    DecoySimError,
    InsufficientSamples,
    InvalidScenario,
    OutOfDomain,
    ProtocolTimeout,
    VesselEmpty,
    VesselOverflow,
)
from .millionaires import ComparisonOutcome
from .runner import RunOutcome, run_scenario

log = logging.getLogger("decoysim")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PROTOCOL = 2


def _configure_logging() -> None:
    level_name = os.environ.get("DECOYSIM_LOG", "warning").upper()
    level = getattr(logging, level_name, logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _emit(stream: TextIO, text: str) -> None:
    stream.write(text)
    if not text.endswith("\n"):
        stream.write("\n")


def _meta_record(scenario: Scenario) -> dict:
    return {
        "record": "meta",
        "version": __version__,
        "scenario": scenario.as_mapping(),
    }


def _outcome_summary(result) -> dict:
    if isinstance(result, DecoyOutcome):
        return {
            "kind": "decoy",
            "recovered": result.recovered,
            "sender_secret": result.sender_secret,
            "success": result.success,
            "detected_tick": result.detected_tick,
            "announce_tick": result.announce_tick,
        }
    if isinstance(result, ComparisonOutcome):
        return {
            "kind": "comparison",
            "ordering": result.ordering.value,
            "alice_knows": result.alice_knows,
            "bob_knows": result.bob_knows,
            "notes": list(result.notes),
        }
    return {
        "kind": "attack",
        "attack": result.kind,
        "disrupted": result.disrupted,
        "adversary_learned": result.adversary_learned,
        "adversary_recovered": result.adversary_recovered,
        "receiver_recovered": result.receiver_recovered,
        "receiver_error": result.receiver_error,
        "timeout": result.timeout,
    }


def _run_flags(outcome: RunOutcome, findings) -> list[str]:
    flags: list[str] = []
    result = outcome.result
    if isinstance(result, DecoyOutcome) and not result.success:
        flags.append("recovery-mismatch")
    if isinstance(result, adversary_mod.AttackOutcome):
        if result.disrupted:
            flags.append("disrupted")
        if result.adversary_learned:
            flags.append("adversary-learned-secret")
        if result.timeout:
            flags.append("timeout")
    for finding in findings:
        if finding.exceeds_comparison_bit:
            flags.append(f"leak:{finding.quantity}")
    return flags


def _exit_code_for(outcome: RunOutcome) -> int:
    result = outcome.result
    if isinstance(result, DecoyOutcome):
        return EXIT_OK if result.success else EXIT_PROTOCOL
    if isinstance(result, adversary_mod.AttackOutcome):
        compromised = result.disrupted or result.adversary_learned or result.timeout
        return EXIT_PROTOCOL if compromised else EXIT_OK
    return EXIT_OK


def _findings_for(outcome: RunOutcome):
    if isinstance(outcome.result, ComparisonOutcome):
        return adversary_mod.audit_comparison(
            outcome.result, outcome.scenario.protocol, dt=outcome.scenario.dt
        )
    return []


def _run_record(run_id: int, outcome: RunOutcome, digest: int, flags) -> dict:
    return {
        "record": "run",
        "run_id": run_id,
        "protocol": outcome.scenario.protocol.value,
        "seed": outcome.scenario.seed,
        "outcome": _outcome_summary(outcome.result),
        "digest": f"{digest:016x}",
        "flags": list(flags),
    }


def _error_record(run_id: int, scenario: Scenario, error: str, digest: Optional[int]) -> dict:
    return {
        "record": "run",
        "run_id": run_id,
        "protocol": scenario.protocol.value,
        "seed": scenario.seed,
        "outcome": {"kind": "error", "error": error},
        "digest": f"{digest:016x}" if digest is not None else None,
        "flags": [error],
    }


def _print_text_report(
    stream: TextIO, outcome: RunOutcome, digest: int, findings, flags, wall_ms: float
) -> None:
    scenario = outcome.scenario
    _emit(stream, f"decoysim {__version__}")
    _emit(stream, "scenario: " + json.dumps(scenario.as_mapping(), sort_keys=True))
    _emit(stream, "outcome: " + json.dumps(_outcome_summary(outcome.result)))
    _emit(stream, f"digest: {digest:016x}")
    if findings:
        _emit(stream, "findings:")
        for finding in findings:
            _emit(stream, f"  - {finding.description}")
    if flags:
        _emit(stream, "flags: " + ", ".join(flags))
    _emit(stream, f"ticks: {len(outcome.transcript)}  wall_ms: {wall_ms:.2f}")


def cmd_run(args, stream: TextIO) -> int:
    scenario = _load(args)
    started = time.perf_counter()
    try:
        outcome = run_scenario(scenario)
    except (ProtocolTimeout, OutOfDomain, VesselEmpty, VesselOverflow) as exc:
        reason = type(exc).__name__
        log.warning("protocol failed: %s", exc)
        if args.format == "records":
            _emit(stream, json.dumps(_meta_record(scenario)))
            transcript = getattr(exc, "transcript", None)
            digest = replay_digest(transcript) if transcript is not None else None
            _emit(stream, json.dumps(_error_record(0, scenario, reason, digest)))
        else:
            _emit(stream, f"decoysim {__version__}")
            _emit(stream, "scenario: " + json.dumps(scenario.as_mapping(), sort_keys=True))
            _emit(stream, f"protocol failure: {reason}: {exc}")
        return EXIT_PROTOCOL
    wall_ms = (time.perf_counter() - started) * 1e3
    digest = replay_digest(outcome.transcript)
    findings = _findings_for(outcome)
    flags = _run_flags(outcome, findings)
    if args.format == "records":
        _emit(stream, json.dumps(_meta_record(scenario)))
        _emit(stream, json.dumps(_run_record(0, outcome, digest, flags)))
    else:
        _print_text_report(stream, outcome, digest, findings, flags, wall_ms)
    return _exit_code_for(outcome)


def _parse_vary(spec: Optional[str]) -> list[tuple[Optional[str], Optional[str]]]:
    if not spec:
        return [(None, None)]
    if "=" not in spec:
        raise ConfigError(f"--vary must look like key=v1,v2,..., got {spec!r}")
    key, values = spec.split("=", 1)
    variants = [value.strip() for value in values.split(",") if value.strip()]
    if not variants:
        raise ConfigError(f"--vary {spec!r} lists no values")
    return [(key.strip(), value) for value in variants]


def cmd_sweep(args, stream: TextIO) -> int:
    if args.runs < 1:
        raise ConfigError(f"--runs must be >= 1, got {args.runs}")
    base = _load(args)
    variants = _parse_vary(args.vary)
    for vary_key, vary_value in variants:
        scenario = base
        if vary_key is not None:
            scenario = _load(args, extra_overrides=[f"{vary_key}={vary_value}"])
        successes = 0
        failures = 0
        abs_errors: list[float] = []
        digests: list[str] = []
        for index in range(args.runs):
            run_scenario_i = dataclasses.replace(scenario, seed=scenario.seed + index)
            try:
                outcome = run_scenario(run_scenario_i)
            except (ProtocolTimeout, OutOfDomain, VesselEmpty, VesselOverflow) as exc:
                failures += 1
                if args.format == "records":
                    transcript = getattr(exc, "transcript", None)
                    digest = replay_digest(transcript) if transcript is not None else None
                    _emit(
                        stream,
                        json.dumps(
                            _error_record(index, run_scenario_i, type(exc).__name__, digest)
                        ),
                    )
                continue
            digest = replay_digest(outcome.transcript)
            digests.append(f"{digest:016x}")
            result = outcome.result
            if isinstance(result, DecoyOutcome):
                if result.success:
                    successes += 1
                abs_errors.append(abs(result.recovered - result.sender_secret))
            else:
                successes += 1
            if args.format == "records":
                findings = _findings_for(outcome)
                _emit(
                    stream,
                    json.dumps(
                        _run_record(index, outcome, digest, _run_flags(outcome, findings))
                    ),
                )
        sorted_errors = sorted(abs_errors)

        def percentile(q: float) -> Optional[float]:
            if not sorted_errors:
                return None
            position = min(len(sorted_errors) - 1, int(q * (len(sorted_errors) - 1)))
            return sorted_errors[position]

        aggregate = {
            "record": "aggregate",
            "vary": {vary_key: vary_value} if vary_key else None,
            "runs": args.runs,
            "success_rate": successes / args.runs,
            "failures": failures,
            "mean_abs_error": (
                math.fsum(abs_errors) / len(abs_errors) if abs_errors else None
            ),
            "p50_abs_error": percentile(0.50),
            "p90_abs_error": percentile(0.90),
            "distinct_digests": len(set(digests)),
        }
        if args.format == "records":
            _emit(stream, json.dumps(aggregate))
        else:
            label = f"{vary_key}={vary_value} " if vary_key else ""
            _emit(
                stream,
                f"sweep {label}runs={args.runs} success_rate={aggregate['success_rate']:.4f} "
                f"failures={failures} mean_abs_error={aggregate['mean_abs_error']}",
            )
    return EXIT_OK


def _analyze_decoy(args, scenario: Scenario, stream: TextIO) -> int:
    if args.samples < 1000:
        raise ConfigError(f"--samples must be >= 1000, got {args.samples}")
    features = adversary_mod.TranscriptFeatures.for_scenario(scenario)
    samples = adversary_mod.collect_transmission_samples(scenario, args.samples)
    observed = adversary_mod.transcript_of(scenario)
    domain = scenario.secret_domain
    report = adversary_mod.estimate_posterior(samples, observed, features, domain)
    analytic = adversary_mod.analytic_sum_mi(domain)
    excess = report.mi_bits - analytic
    leak_detected = excess > 0.1

    lines = [
        f"decoysim {__version__} analysis",
        "scenario: " + json.dumps(scenario.as_mapping(), sort_keys=True),
        f"samples: {report.samples_used}",
        f"feature quantization: stable total rounded to integers; "
        f"ramp duration in buckets of {features.bucket_width} ticks",
        f"observed feature: {report.observed_feature}",
        f"analytic sum-channel reference: {analytic:.6f} bits",
        f"estimated mi: {report.mi_bits:.6f} bits (excess {excess:+.6f})",
    ]
    if report.observed_feature and isinstance(report.observed_feature[0], int):
        total = report.observed_feature[0]
        analytic_posterior = adversary_mod.analytic_split_posterior(
            total, domain, max_key=domain[1]
        )
        if analytic_posterior:
            expected_max = max(analytic_posterior.values())
            # 3-sigma multinomial bound around the analytic conditional maximum
            sigma = math.sqrt(
                expected_max * (1.0 - expected_max) / max(1, report.matched_samples)
            )
            bound = expected_max + 3.0 * sigma
            status = "PASS" if report.max_prob <= bound else "FAIL"
            lines.append(
                f"posterior max_prob: {report.max_prob:.4f} "
                f"(analytic {expected_max:.4f}, 3-sigma bound {bound:.4f}) -> {status}"
            )
    verdict = (
        f"FAIL (leakage detected: {excess:+.3f} bits over the analytic reference)"
        if leak_detected
        else "PASS (no leakage beyond the analytic sum-channel reference)"
    )
    lines.append(f"verdict: {verdict}")

    if args.format == "records":
        _emit(stream, json.dumps(_meta_record(scenario)))
        _emit(
            stream,
            json.dumps(
                {
                    "record": "analysis",
                    "samples": report.samples_used,
                    "observed_feature": list(map(str, report.observed_feature)),
                    "mi_bits": report.mi_bits,
                    "analytic_bits": analytic,
                    "max_prob": report.max_prob,
                    "verdict": "FAIL" if leak_detected else "PASS",
                }
            ),
        )
    else:
        for line in lines:
            _emit(stream, line)
    return EXIT_OK


def _analyze_comparison(args, scenario: Scenario, stream: TextIO) -> int:
    outcome = run_scenario(scenario)
    findings = _findings_for(outcome)
    if args.format == "records":
        _emit(stream, json.dumps(_meta_record(scenario)))
        _emit(
            stream,
            json.dumps(
                {
                    "record": "analysis",
                    "ordering": outcome.result.ordering.value,
                    "findings": [
                        {
                            "quantity": finding.quantity,
                            "value": str(finding.value),
                            "description": finding.description,
                            "exceeds_comparison_bit": finding.exceeds_comparison_bit,
                        }
                        for finding in findings
                    ],
                }
            ),
        )
    else:
        _emit(stream, f"decoysim {__version__} analysis")
        _emit(stream, "scenario: " + json.dumps(scenario.as_mapping(), sort_keys=True))
        _emit(stream, f"ordering: {outcome.result.ordering.value}")
        if findings:
            _emit(stream, "leakage findings:")
            for finding in findings:
                marker = " [exceeds one bit]" if finding.exceeds_comparison_bit else ""
                _emit(stream, f"  - {finding.description}{marker}")
        else:
            _emit(stream, "leakage findings: none")
    return EXIT_OK


def cmd_analyze(args, stream: TextIO) -> int:
    scenario = _load(args)
    if scenario.protocol in (Protocol.DECOY_FORCE, Protocol.DECOY_WAVE):
        return _analyze_decoy(args, scenario, stream)
    return _analyze_comparison(args, scenario, stream)


def cmd_replay_check(args, stream: TextIO) -> int:
    scenario = _load(args)
    digests = []
    for _ in range(2):
        try:
            outcome = run_scenario(scenario)
            digests.append(replay_digest(outcome.transcript))
        except (ProtocolTimeout, OutOfDomain) as exc:
            transcript = getattr(exc, "transcript", None)
            digests.append(replay_digest(transcript) if transcript is not None else None)
    matched = digests[0] is not None and digests[0] == digests[1]
    rendered = ["none" if d is None else f"{d:016x}" for d in digests]
    if args.format == "records":
        _emit(
            stream,
            json.dumps(
                {
                    "record": "replay-check",
                    "digests": rendered,
                    "match": matched,
                    "version": __version__,
                }
            ),
        )
    else:
        _emit(stream, f"replay digests: {rendered[0]} {rendered[1]}")
        _emit(stream, "replay: MATCH" if matched else "replay: MISMATCH")
    return EXIT_OK if matched else EXIT_PROTOCOL


def _load(args, extra_overrides: Optional[list[str]] = None) -> Scenario:
    overrides = list(args.set or [])
    if extra_overrides:
        overrides.extend(extra_overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    return load_scenario(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="decoysim",
        description="Deterministic simulator for physics-based secure comparison "
        "and decoy-based secret transmission, with adversary analysis.",
    )
    parser.add_argument("--version", action="version", version=f"decoysim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="scenario config file")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override a scenario field (repeatable)",
        )
        p.add_argument("--out", default=None, help="write the report to this path")
        p.add_argument(
            "--format", choices=("text", "records"), default="text", help="output format"
        )

    p_run = sub.add_parser("run", help="execute one scenario")
    common(p_run)

    p_sweep = sub.add_parser("sweep", help="run many scenarios with derived seeds")
    common(p_sweep)
    p_sweep.add_argument("--runs", type=int, required=True, help="number of runs")
    p_sweep.add_argument(
        "--vary",
        default=None,
        metavar="KEY=V1,V2",
        help="repeat the sweep for each value of one scenario field",
    )

    p_analyze = sub.add_parser("analyze", help="posterior/MI or leakage analysis")
    common(p_analyze)
    p_analyze.add_argument(
        "--samples", type=int, default=2000, help="sample runs for the estimators"
    )

    p_replay = sub.add_parser("replay-check", help="run twice and compare digests")
    common(p_replay)

    return parser


_COMMANDS = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
    "replay-check": cmd_replay_check,
}


def main(argv: Optional[list[str]] = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = _COMMANDS[args.command]
    out_stream: TextIO = sys.stdout
    opened = None
    if args.out:
        opened = open(args.out, "w", encoding="utf-8")
        out_stream = opened
    try:
        return handler(args, out_stream)
    except (ConfigError, InvalidScenario, InsufficientSamples, FileNotFoundError) as exc:
        print(f"decoysim: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DecoySimError as exc:
        print(f"decoysim: protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    finally:
        if opened is not None:
            opened.close()


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
