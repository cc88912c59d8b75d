"""Command-line interface.

Exit codes: solve returns 0 when the game is certified ergodic, 2 when a
non-ergodicity witness is certified, 3 when inconclusive; verify returns 0
on pass and 1 on fail; usage errors exit 64 and I/O errors 66.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import documents, generators
from .driver import ERGODIC, INCONCLUSIVE, NON_ERGODIC, DriverConfig, decide_ergodicity
from .markov import OracleBudgetError, evaluate_stationary_pair
from .oracle import enumerate_pure_bounds

EX_USAGE = 64
EX_IOERR = 66


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EX_USAGE)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        sys.exit(EX_IOERR)


def _write(path: str, text: str):
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        print(f"cannot write {path}: {exc}", file=sys.stderr)
        sys.exit(EX_IOERR)


def _load_game(path: str):
    try:
        return documents.parse_game(_read(path))
    except documents.DocumentError as exc:
        print(f"{path}: invalid game document:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        sys.exit(EX_USAGE)


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def _solve_one(game_path: str, eps: float, cap: int | None, exact: bool,
               trace_path: str | None, out_path: str):
    game = _load_game(game_path)
    config = DriverConfig(pump_cap=cap, exact=exact, collect_trace=trace_path is not None)
    verdict, stats = decide_ergodicity(game, eps, config)
    _write(out_path, documents.serialize_certificate(game, verdict, stats))
    if trace_path is not None:
        lines = []
        for record in stats.phases:
            for phase in ("phase1", "phase2"):
                for entry in record.get(phase, {}).get("trace") or []:
                    lines.append(json.dumps({"h": record["h"], "phase": phase, **entry},
                                            sort_keys=True))
        _write(trace_path, "\n".join(lines) + ("\n" if lines else ""))
    return verdict, stats


def _cmd_solve(args) -> int:
    if len(args.game) > 1 and args.out is not None:
        out_dir = Path(args.out)
        if not out_dir.is_dir():
            print("--out must be a directory when solving multiple games",
                  file=sys.stderr)
            return EX_USAGE
    jobs = []
    for game_path in args.game:
        if args.out is None:
            out_path = str(Path(game_path).with_suffix(".cert.json"))
        elif len(args.game) > 1:
            out_path = str(Path(args.out) / (Path(game_path).stem + ".cert.json"))
        else:
            out_path = args.out
        jobs.append((game_path, args.epsilon, args.cap, args.exact,
                     args.trace if len(args.game) == 1 else None, out_path))

    if len(jobs) > 1 and args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_solve_one_star, jobs))
    else:
        results = [_solve_one(*job) for job in jobs]

    code = 0
    for job, (verdict, stats) in zip(jobs, results):
        game_path, out_path = job[0], job[-1]
        if verdict.kind == ERGODIC:
            print(f"{game_path}: ergodic within 24*eps; local values in "
                  f"[{_fmt(verdict.m_minus)}, {_fmt(verdict.m_plus)}] "
                  f"(normalized units, offset {_fmt(verdict.value_offset)}); "
                  f"certificate: {out_path}")
            this = 0
        elif verdict.kind == NON_ERGODIC:
            game = _load_game(game_path)
            high = ", ".join(game.states[v] for v in sorted(verdict.high_states))
            low = ", ".join(game.states[v] for v in sorted(verdict.low_states))
            print(f"{game_path}: NOT ergodic; values from {{{high}}} stay >= "
                  f"{_fmt(verdict.floor)} while values from {{{low}}} stay <= "
                  f"{_fmt(verdict.ceiling)}; certificate: {out_path}")
            this = 2
        else:
            print(f"{game_path}: inconclusive ({verdict.reason}); "
                  f"certificate: {out_path}")
            this = 3
        if len(jobs) == 1:
            code = this
        elif this == 3:
            code = 3
    return code


def _solve_one_star(job):
    return _solve_one(*job)


def _cmd_verify(args) -> int:
    game = _load_game(args.game)
    try:
        bundle = documents.parse_certificate(_read(args.certificate), game)
    except documents.DocumentError as exc:
        print(f"{args.certificate}: invalid certificate document:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return 1
    ok, problems = documents.recheck_certificate(game, bundle)
    if ok:
        print(f"{args.certificate}: PASS ({bundle.verdict_kind})")
        return 0
    print(f"{args.certificate}: FAIL")
    for problem in problems:
        print(f"  - {problem}")
    return 1


def _cmd_eval(args) -> int:
    game = _load_game(args.game)
    try:
        profile = documents.parse_profile(_read(args.profile), game)
    except documents.DocumentError as exc:
        print(f"{args.profile}: invalid profile document:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return EX_USAGE
    evaluation = evaluate_stationary_pair(game, profile)
    for v, name in enumerate(game.states):
        print(f"{name}: {_fmt(evaluation.gain[v])}")
    return 0


def _cmd_oracle(args) -> int:
    game = _load_game(args.game)
    try:
        report = enumerate_pure_bounds(game, budget=args.budget)
    except OracleBudgetError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print(f"pure stationary profiles enumerated: {report.enumerated}")
    for v, name in enumerate(game.states):
        print(f"{name}: [{_fmt(report.lo[v])}, {_fmt(report.hi[v])}]")
    return 0


def _parse_param(token: str):
    if "=" not in token:
        raise ValueError(f"expected key=value, got {token!r}")
    key, raw = token.split("=", 1)
    if raw.startswith("["):
        return key, json.loads(raw)
    for cast in (int, float):
        try:
            return key, cast(raw)
        except ValueError:
            continue
    return key, raw


def _cmd_gen(args) -> int:
    try:
        params = dict(_parse_param(tok) for tok in args.param)
        text = generators.generate(args.kind, params, seed=args.seed)
    except (ValueError, TypeError) as exc:
        print(f"generator error: {exc}", file=sys.stderr)
        return EX_USAGE
    if args.out is None:
        sys.stdout.write(text)
    else:
        _write(args.out, text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ergopump",
                     description="Certify (non-)ergodicity of zero-sum stochastic games.")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run the solver and write a certificate")
    solve.add_argument("game", nargs="+", help="game document path(s)")
    solve.add_argument("--epsilon", type=float, required=True)
    solve.add_argument("--cap", type=int, default=None,
                       help="override the pump step cap (for experiments)")
    solve.add_argument("--exact", action="store_true",
                       help="store exact rational witness strategies")
    solve.add_argument("--trace", default=None,
                       help="write per-iteration trace records to this file")
    solve.add_argument("--out", default=None,
                       help="certificate path (or directory for multiple games)")
    solve.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for multi-file batches")
    solve.set_defaults(func=_cmd_solve)

    verify = sub.add_parser("verify", help="recheck a certificate from scratch")
    verify.add_argument("game")
    verify.add_argument("certificate")
    verify.set_defaults(func=_cmd_verify)

    evaluate = sub.add_parser("eval", help="mean payoff of a stationary profile")
    evaluate.add_argument("game")
    evaluate.add_argument("profile")
    evaluate.set_defaults(func=_cmd_eval)

    oracle = sub.add_parser("oracle", help="pure-strategy value intervals (small games)")
    oracle.add_argument("game")
    oracle.add_argument("--budget", type=int, default=10_000)
    oracle.set_defaults(func=_cmd_oracle)

    gen = sub.add_parser("gen", help="generate a game document")
    gen.add_argument("kind", choices=generators.KINDS)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=None)
    gen.add_argument("-p", "--param", action="append", default=[],
                     help="generator parameter as key=value (repeatable)")
    gen.set_defaults(func=_cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
