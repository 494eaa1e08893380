#!/usr/bin/env python3
"""
Proximal Shift Toolkit command line.

Each subcommand reads its parameters from flags, a KEY=VALUE config file and
the environment (see run_config.py), runs one operation and writes a data
file plus a report. Exit codes: 0 success, 1 property violation,
2 usage/config/format error, 3 inconclusive after truncation.
"""

import argparse
import hashlib
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from configuration import CoverageError, WindowConfiguration, from_ones
from file_formats import (
    FileFormatError,
    Report,
    decode_configuration,
    decode_packing,
    decode_witness_plan,
    encode_configuration,
    encode_packing,
    encode_proximal_plan,
    encode_report,
    encode_witness_plan,
    read_text,
    sidecar_path,
    write_text,
)
from groups import ball, identity, inverse_set, radius_of, set_product
from packing import (
    COARSE,
    Shape,
    glue_packings,
    greedy_saturate,
    is_saturated,
    merge_phi,
    packing_interior,
)
from proximal_lab import (
    MissingConjugatesError,
    all_x_patterns,
    build_proximal_plan,
    build_t_prime,
    check_eps_minimal,
    check_eps_proximal,
    faithfulness_check,
    obstruction_certificate,
    random_full_shift_config,
)
from random_field import RandomField, count_event_hits, local_max_config
from run_config import DEFAULT_CONFIG_FILE, RunConfig, RunConfigError, resolve_run_config, run_digest
from run_store import RunRecord, init_db, upsert_run
from shift_glue import (
    check_ones_apart,
    default_window_radius,
    draw_shift_packing,
    locate_common_one,
    shuffled_order,
    stamp_psi,
)
from witness_construct import (
    NoSwitchingElementError,
    WitnessExhaustedError,
    WitnessParams,
    build_plan,
    failure_bound,
    minimal_admissible_size,
    sample_witness_config,
    verify_witness_properties,
)

logger = logging.getLogger("proxlab")

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3

STATUS_BY_EXIT = {
    EXIT_OK: "pass",
    EXIT_VIOLATION: "violation",
    EXIT_USAGE: "error",
    EXIT_INCONCLUSIVE: "inconclusive",
}

DEFAULT_FIELD_RADIUS = 3
DEFAULT_PACK_RADIUS = 6
DEFAULT_SAMPLE_RADIUS = 4


class UsageError(ValueError):
    """Raised for missing inputs or flags a subcommand needs."""


@dataclass
class Outcome:
    exit_code: int
    fields: Dict[str, object] = field(default_factory=dict)
    # (suffix, text): suffix None is the main output, anything else a sidecar
    outputs: List[Tuple[Optional[str], str]] = field(default_factory=list)


def _inputs(args, count: int, what: str) -> List[str]:
    paths = args.input or []
    if len(paths) < count:
        raise UsageError(f"{args.op} needs {count} --input file(s): {what}")
    return paths


def _load_config(path: str) -> WindowConfiguration:
    return decode_configuration(read_text(path))


def _witness_plan(cfg: RunConfig, args):
    if args.plan:
        return decode_witness_plan(read_text(args.plan))
    return build_plan(WitnessParams(cfg.x_set(), cfg.k), cfg.y1_size, cfg.switch_radius)


def _required_element(cfg: RunConfig):
    g = cfg.element_value()
    if g is None:
        raise UsageError("--element is required")
    return g


def _pairs(violations) -> str:
    return " ".join(f"{a.encode()}:{b.encode()}" for a, b in violations[:5])


def op_sample_field(cfg: RunConfig, args) -> Outcome:
    backend = cfg.backend
    X = cfg.x_set()
    radius = DEFAULT_FIELD_RADIUS if cfg.window_radius is None else cfg.window_radius
    c = local_max_config(RandomField(cfg.seed, backend), X, ball(backend, radius))
    fields = {"sites": len(c), "ones": len(c.ones()), "x_size": len(X)}
    sites = cfg.site_list()
    if sites:
        hits = count_event_hits(X, sites, cfg.trials, cfg.seed, cfg.workers)
        p = hits / cfg.trials
        fields.update(
            event_sites=" ".join(g.encode() for g in sites),
            trials=cfg.trials,
            hits=hits,
            probability=f"{p:.6f}",
            std_error=f"{math.sqrt(p * (1 - p) / cfg.trials):.6f}",
            single_site_expected=f"{1 / len(X):.6f}",
        )
    return Outcome(EXIT_OK, fields, [(None, encode_configuration(c))])


def _plan_fields(plan) -> Dict[str, object]:
    return {
        "g_s": plan.g_s.encode(),
        "y1_size": len(plan.Y1),
        "y_size": len(plan.Y),
        "y_pow_k_size": plan.y_pow_k_size,
        "y_pow_k_exact": str(plan.y_pow_k_exact).lower(),
        "bound_exact": f"{plan.bound.exact:.6g}",
        "bound_coarse": f"{plan.bound.coarse:.6g}",
        "admissible": str(plan.admissible).lower(),
    }


def op_witness_sample(cfg: RunConfig, args) -> Outcome:
    try:
        plan = _witness_plan(cfg, args)
    except NoSwitchingElementError as e:
        return Outcome(EXIT_INCONCLUSIVE, {"reason": str(e), "switch_radius": cfg.switch_radius})
    fields = _plan_fields(plan)
    if not plan.admissible:
        logger.warning("Plan bound %.4g >= 1; sampling empirically", plan.bound.exact)
    try:
        s = sample_witness_config(plan, cfg.seed, cfg.max_attempts, cfg.workers, allow_inadmissible=True)
    except WitnessExhaustedError as e:
        fields["reason"] = str(e)
        return Outcome(EXIT_INCONCLUSIVE, fields, [("plan", encode_witness_plan(plan))])
    report = verify_witness_properties(s, plan)
    fields.update(
        seed_found=s.seed,
        attempts=s.seed - cfg.seed + 1,
        sites=len(s),
        ones=len(s.ones()),
        apart_violations=len(report.apart_violations),
        uncovered=len(report.uncovered),
    )
    exit_code = EXIT_OK if report.passed else EXIT_VIOLATION
    return Outcome(exit_code, fields, [(None, encode_configuration(s)), ("plan", encode_witness_plan(plan))])


def op_witness_verify(cfg: RunConfig, args) -> Outcome:
    (path, *_) = _inputs(args, 1, "the witness configuration")
    s = _load_config(path)
    plan = _witness_plan(cfg, args)
    report = verify_witness_properties(s, plan)
    fields = {
        "apart_violations": len(report.apart_violations),
        "uncovered": len(report.uncovered),
    }
    if report.apart_violations:
        fields["first_violations"] = _pairs(report.apart_violations)
    if report.uncovered:
        fields["first_uncovered"] = _pairs(report.uncovered)
    return Outcome(EXIT_OK if report.passed else EXIT_VIOLATION, fields)


def op_pack_saturate(cfg: RunConfig, args) -> Outcome:
    backend = cfg.backend
    radius = DEFAULT_PACK_RADIUS if cfg.window_radius is None else cfg.window_radius
    window = ball(backend, radius).elements
    shape = Shape(COARSE, cfg.x_set().elements)
    p = greedy_saturate(backend, window, [shape], order=shuffled_order(window, cfg.seed, "pack"))
    interior = packing_interior(window, p.shapes)
    saturated = is_saturated(p, interior)
    fields = {"window": len(window), "interior": len(interior), "blocks": len(p.assignment),
              "saturated": str(saturated).lower()}
    return Outcome(EXIT_OK if saturated else EXIT_VIOLATION, fields, [(None, encode_packing(p))])


def op_pack_glue(cfg: RunConfig, args) -> Outcome:
    first, second = _inputs(args, 2, "two packing files")[:2]
    p1 = decode_packing(read_text(first))
    p2 = decode_packing(read_text(second))
    E1, E2 = cfg.site_list("e1"), cfg.site_list("e2")
    if not E1 or not E2:
        raise UsageError("pack glue needs --e1 and --e2")
    q = glue_packings(p1, p2, E1, E2)
    mismatches = [c for c in E1 if q.assignment.get(c) != p1.assignment.get(c)]
    mismatches += [c for c in E2 if q.assignment.get(c) != p2.assignment.get(c)]
    saturated = is_saturated(q)
    fields = {
        "blocks": len(q.assignment),
        "restriction_mismatches": len(mismatches),
        "saturated": str(saturated).lower(),
    }
    if mismatches:
        fields["first_mismatch"] = mismatches[0].encode()
    ok = not mismatches and saturated
    return Outcome(EXIT_OK if ok else EXIT_VIOLATION, fields, [(None, encode_packing(q))])


def op_pack_merge(cfg: RunConfig, args) -> Outcome:
    coarse, fine = _inputs(args, 2, "a coarse and a fine packing")[:2]
    merged = merge_phi(decode_packing(read_text(coarse)), decode_packing(read_text(fine)))
    fields = {
        "coarse_blocks": sum(1 for v in merged.assignment.values() if v == COARSE),
        "fine_blocks": sum(1 for v in merged.assignment.values() if v != COARSE),
        "saturated": str(is_saturated(merged)).lower(),
    }
    return Outcome(EXIT_OK, fields, [(None, encode_packing(merged))])


def op_glue_sample(cfg: RunConfig, args) -> Outcome:
    plan = _witness_plan(cfg, args)
    if args.s_config:
        s = _load_config(args.s_config)
    else:
        s = sample_witness_config(plan, cfg.seed, cfg.max_attempts, cfg.workers, allow_inadmissible=True)
    backend = plan.params.backend
    radius = default_window_radius(plan) if cfg.window_radius is None else cfg.window_radius
    seeds = cfg.seed_pair() or (cfg.seed, cfg.seed + 1)
    packing = draw_shift_packing(plan, seeds, ball(backend, radius).elements)
    t = stamp_psi(packing, s, plan)
    t = WindowConfiguration(t.backend, t.values, t.alphabet, seed=cfg.seed)
    violations = check_ones_apart(t, plan.X)
    fields = {"window_radius": radius, "seeds": f"{seeds[0]},{seeds[1]}", "sites": len(t),
              "ones": len(t.ones()), "blocks": len(packing.assignment), "apart_violations": len(violations)}
    outputs = [(None, encode_configuration(t)), ("packing", encode_packing(packing)),
               ("plan", encode_witness_plan(plan))]
    return Outcome(EXIT_VIOLATION if violations else EXIT_OK, fields, outputs)


def op_glue_verify(cfg: RunConfig, args) -> Outcome:
    paths = _inputs(args, 2, "two witness-shift configurations")
    t1, t2 = _load_config(paths[0]), _load_config(paths[1])
    packing1 = decode_packing(read_text(paths[2])) if len(paths) > 2 else None
    plan = _witness_plan(cfg, args)
    violations = check_ones_apart(t1, plan.X) + check_ones_apart(t2, plan.X)
    fields = {"apart_violations": len(violations)}
    if violations:
        fields["first_violations"] = _pairs(violations)
        return Outcome(EXIT_VIOLATION, fields)
    hit = locate_common_one(t1, t2, plan, packing1)
    fields.update(path=hit.path, searched=hit.searched)
    if not hit.found:
        return Outcome(EXIT_INCONCLUSIVE, fields)
    fields["common_one"] = hit.element.encode()
    return Outcome(EXIT_OK, fields)


def _search_outcome(result) -> Outcome:
    fields = {"search_radius": result.search_radius, "depth": result.depth}
    if not result.found:
        return Outcome(EXIT_INCONCLUSIVE, fields)
    fields["element"] = result.element.encode()
    fields["distance"] = "<=1/%d" % (result.depth + 1) if result.distance.is_bound else f"1/{result.distance.index}"
    return Outcome(EXIT_OK, fields)


def op_prox_check(cfg: RunConfig, args) -> Outcome:
    first, second = _inputs(args, 2, "two configurations")[:2]
    result = check_eps_proximal(_load_config(first), _load_config(second), cfg.epsilon, cfg.search_radius, cfg.depth)
    return _search_outcome(result)


def op_prox_minimal(cfg: RunConfig, args) -> Outcome:
    first, second = _inputs(args, 2, "two configurations")[:2]
    result = check_eps_minimal(_load_config(first), _load_config(second), cfg.epsilon, cfg.search_radius, cfg.depth)
    return _search_outcome(result)


def op_prox_tprime(cfg: RunConfig, args) -> Outcome:
    backend = cfg.backend
    plan = build_proximal_plan(backend, cfg.x_radius, cfg.epsilon_inv, cfg.alphabet_size)
    paths = args.input or []
    if paths:
        t = _load_config(paths[0])
    else:
        radius = radius_of(plan.V) if cfg.window_radius is None else cfg.window_radius
        t = random_full_shift_config(backend, ball(backend, radius), plan.u_library.alphabet, cfg.seed)
    if len(paths) > 1:
        s = _load_config(paths[1])
    else:
        # a single 1 at the identity is Z-apart on any window
        s_window = set_product(t.window, inverse_set(plan.VU2))
        s = from_ones(backend, s_window, [identity(backend)] if identity(backend) in s_window else [])
    t_prime = build_t_prime(plan, s, t)
    found = all_x_patterns(t_prime, plan.X)
    fields = {
        "x_size": len(plan.X),
        "v_radius": radius_of(plan.V),
        "sites": len(t_prime),
        "x_patterns_found": len(found),
        "x_patterns_total": len(plan.u_library.alphabet) ** len(plan.X),
    }
    return Outcome(EXIT_OK, fields, [(None, encode_configuration(t_prime)), ("plan", encode_proximal_plan(plan))])


def _samples(cfg: RunConfig, args, X) -> List[WindowConfiguration]:
    if args.input:
        return [_load_config(path) for path in args.input]
    backend = cfg.backend
    radius = DEFAULT_SAMPLE_RADIUS if cfg.window_radius is None else cfg.window_radius
    window = ball(backend, radius).elements
    return [local_max_config(RandomField(cfg.seed + i, backend), X, window) for i in range(cfg.trials)]


def op_prox_obstruct(cfg: RunConfig, args) -> Outcome:
    g = _required_element(cfg)
    X = cfg.x_set()
    samples = _samples(cfg, args, X)
    certified = 0
    for i, u in enumerate(samples):
        try:
            result = obstruction_certificate(g, X, u)
        except MissingConjugatesError as e:
            return Outcome(EXIT_INCONCLUSIVE, {"checked": i, "reason": str(e)})
        if not result.certificate:
            a, b = result.violation
            return Outcome(EXIT_VIOLATION, {"checked": i + 1, "sample": i, "refutation": f"{a.encode()}:{b.encode()}"})
        certified += 1
    return Outcome(EXIT_OK, {"element": g.encode(), "certified": certified})


def op_prox_faithful(cfg: RunConfig, args) -> Outcome:
    g = _required_element(cfg)
    result = faithfulness_check(g, _samples(cfg, args, cfg.x_set()))
    fields = {"element": g.encode(), "checked_sites": result.checked_sites, "moved": str(result.moved).lower()}
    if not result.moved:
        return Outcome(EXIT_INCONCLUSIVE, fields)
    fields.update(sample=result.sample_index, site=result.site.encode())
    return Outcome(EXIT_OK, fields)


def op_bound_eval(cfg: RunConfig, args) -> Outcome:
    params = WitnessParams(cfg.x_set(), cfg.k)
    fields = {
        "x_size": len(params.X),
        "x2_size": len(params.x_squared),
        "k": params.k,
        "c_exp": params.c_exp,
        "c_den": params.c_den,
        "minimal_size_exact": minimal_admissible_size(params, "exact"),
        "minimal_size_coarse": minimal_admissible_size(params, "coarse"),
    }
    if cfg.size_floor > 0:
        bound = failure_bound(params, cfg.size_floor)
        fields.update(
            y_size=cfg.size_floor,
            bound_exact=repr(bound.exact),
            bound_coarse=repr(bound.coarse),
            admissible=str(bound.admissible).lower(),
        )
    return Outcome(EXIT_OK, fields)


HANDLERS: Dict[str, Callable[[RunConfig, argparse.Namespace], Outcome]] = {
    "sample-field": op_sample_field,
    "witness-sample": op_witness_sample,
    "witness-verify": op_witness_verify,
    "pack-saturate": op_pack_saturate,
    "pack-glue": op_pack_glue,
    "pack-merge": op_pack_merge,
    "glue-sample": op_glue_sample,
    "glue-verify": op_glue_verify,
    "prox-check": op_prox_check,
    "prox-minimal": op_prox_minimal,
    "prox-tprime": op_prox_tprime,
    "prox-obstruct": op_prox_obstruct,
    "prox-faithful": op_prox_faithful,
    "bound-eval": op_bound_eval,
}

SUBCOMMANDS = {
    "sample-field": None,
    "witness": ("sample", "verify"),
    "pack": ("saturate", "glue", "merge"),
    "glue": ("sample", "verify"),
    "prox": ("check", "minimal", "tprime", "obstruct", "faithful"),
    "bound": ("eval",),
}

# flag dest -> run config key
CONFIG_FLAGS = (
    "group", "seed", "seeds", "x_radius", "x", "k", "y1_size", "size_floor", "switch_radius", "window_radius",
    "epsilon_inv", "max_attempts", "trials", "search_radius", "depth", "alphabet_size",
    "element", "sites", "e1", "e2", "workers", "out", "db",
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=str, default=None,
                        help=f"KEY=VALUE config file (default: {DEFAULT_CONFIG_FILE} if present)")
    parser.add_argument("--group", type=str, help="Group: Z, Z<d>, F<k>, heisenberg, lamplighter")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--seeds", type=str, help="Packing seeds s1,s2 (glue sample)")
    parser.add_argument("--x-ball", dest="x_radius", type=int, help="X = ball(r) (default: 1)")
    parser.add_argument("--x", type=str, help="Explicit symmetric X, space separated encodings")
    parser.add_argument("--k", type=int, help="Exponent k of Y^k")
    parser.add_argument("--y1-size", type=int, help="Target size of Y1 (default: |X|)")
    parser.add_argument("--size-floor", type=int, help="|Y| to evaluate the bound at (bound eval)")
    parser.add_argument("--switch-radius", type=int, help="Search radius for the switching element")
    parser.add_argument("--window-radius", type=int)
    parser.add_argument("--epsilon-inv", type=int, help="m, meaning epsilon = 1/m")
    parser.add_argument("--max-attempts", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--search-radius", type=int)
    parser.add_argument("--depth", type=int)
    parser.add_argument("--alphabet-size", type=int)
    parser.add_argument("--element", type=str, help="Group element g")
    parser.add_argument("--sites", type=str, help="Event sites, space separated encodings")
    parser.add_argument("--e1", type=str, help="Glue region E1")
    parser.add_argument("--e2", type=str, help="Glue region E2")
    parser.add_argument("--workers", type=int, help="Parallel workers (default: 1)")
    parser.add_argument("--out", type=str, help="Output file, - for stdout (default: -)")
    parser.add_argument("--db", type=str, help="Run ledger database")
    parser.add_argument("--input", "-i", action="append", help="Input file (repeatable)")
    parser.add_argument("--plan", type=str, help="Witness plan file")
    parser.add_argument("--s-config", type=str, help="Witness configuration s (glue sample)")
    parser.add_argument("--record", action="store_true", help="Record the run in the ledger")
    parser.add_argument("--verbose", "-v", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proxlab", description="Proximal Shift Toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, actions in SUBCOMMANDS.items():
        cmd = sub.add_parser(command)
        if actions is None:
            _add_common(cmd)
            cmd.set_defaults(op=command)
            continue
        actions_parser = cmd.add_subparsers(dest="action", required=True)
        for action in actions:
            leaf = actions_parser.add_parser(action)
            _add_common(leaf)
            leaf.set_defaults(op=f"{command}-{action}")
    return parser


def _digest(cfg: RunConfig, args) -> str:
    digest = run_digest(cfg)
    paths = list(args.input or []) + [p for p in (args.plan, args.s_config) if p]
    if not paths:
        return digest
    h = hashlib.sha256(digest.encode())
    for path in paths:
        h.update(hashlib.sha256(read_text(path).encode()).hexdigest().encode())
    return h.hexdigest()


def _config_file(args) -> Optional[str]:
    if args.config:
        return args.config
    return DEFAULT_CONFIG_FILE if Path(DEFAULT_CONFIG_FILE).exists() else None


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    flags = {key: getattr(args, key) for key in CONFIG_FLAGS}
    flags["op"] = args.op
    try:
        cfg = resolve_run_config(flags, _config_file(args), os.environ)
        outcome = HANDLERS[args.op](cfg, args)
        digest = _digest(cfg, args)
    except RunConfigError as e:
        for error in e.errors:
            print(f"ERROR: {error}", file=sys.stderr)
        return EXIT_USAGE
    except (FileFormatError, UsageError, CoverageError, ValueError) as e:
        print(f"ERROR: {e}", file=sys.stderr)
        return EXIT_USAGE

    status = STATUS_BY_EXIT[outcome.exit_code]
    report = Report(args.op, status, {"digest": digest, "group": cfg.group, "seed": str(cfg.seed),
                                      **{k: str(v) for k, v in outcome.fields.items()}})
    report_text = encode_report(report)
    data = [text for suffix, text in outcome.outputs if suffix is None]
    if data:
        write_text(cfg.out, data[0])
        sidecars = [(suffix, text) for suffix, text in outcome.outputs if suffix is not None]
        sidecars.append(("report", report_text))
        for suffix, text in sidecars:
            path = sidecar_path(cfg.out, suffix)
            if path is not None:
                write_text(path, text)
    else:
        write_text(cfg.out, report_text)

    # keep stdout clean when it carries the data file
    console = sys.stderr if cfg.out == "-" else sys.stdout
    print("Summary:", file=console)
    print(f"  Op: {args.op}", file=console)
    print(f"  Status: {status} (exit {outcome.exit_code})", file=console)
    for key, value in outcome.fields.items():
        print(f"  {key}: {value}", file=console)

    if args.record:
        init_db(cfg.db)
        upsert_run(RunRecord(digest, args.op, cfg.group, cfg.seed, status, outcome.exit_code, report_text), cfg.db)
        print(f"  Recorded run {digest[:12]} in {cfg.db}", file=console)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
