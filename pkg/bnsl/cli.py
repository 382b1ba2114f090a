"""
BNSL - Command Line Interface
Subcommands: score (data -> local score file), learn (optimal network[s]),
verify (oracle and validity audits).
"""

import argparse
import logging
import sys
import time
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, TextIO

from pydantic import BaseModel, ValidationError, field_validator

from . import __version__
from .audit import InstanceAuditor
from .config import (
    DEFAULT_ESS,
    DEFAULT_LOG_LEVEL,
    DEFAULT_NODE_LIMIT,
    DEFAULT_PALIM,
    DEFAULT_TIME_LIMIT,
    DEFAULT_WORKERS,
    SolverParams,
)
from .errors import BnslError, InfeasibleConstraintError, ParseError
from .formats.constraints import EdgeConstraint, parse_constraints
from .formats.dataset import parse_dataset
from .formats.networks import OutputFormat, write_dot, write_flat
from .formats.scores import parse_scores, write_scores
from .ip_model import build_ip
from .scoring import ScoreTable, build_score_table
from .solver import SolveResult, solve_kbest

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class Subcommand(str, Enum):
    SCORE = "score"
    LEARN = "learn"
    VERIFY = "verify"


class InputFormat(str, Enum):
    AUTO = "auto"
    DATA = "data"
    SCORES = "scores"


class UsageError(BnslError):
    """Bad invocation: missing file, invalid option value."""


class RunConfig(BaseModel):
    """Everything one invocation needs."""
    command: Subcommand
    input: Optional[Path] = None
    output: Optional[Path] = None
    input_format: InputFormat = InputFormat.AUTO
    palim: int = DEFAULT_PALIM
    ess: float = DEFAULT_ESS
    pruning: bool = True
    workers: int = DEFAULT_WORKERS
    time_limit: float = DEFAULT_TIME_LIMIT
    node_limit: Optional[int] = DEFAULT_NODE_LIMIT
    kbest: int = 1
    set_packing: bool = True
    sink_heuristic: bool = True
    propagation: bool = True
    gomory: bool = True
    convex4b: bool = False
    static_convex4b: bool = False
    audit: bool = False
    format: OutputFormat = OutputFormat.FLAT
    constraints: Optional[Path] = None
    seed: int = 0
    trials: int = 20
    count_p5: bool = False
    log_level: str = DEFAULT_LOG_LEVEL

    @field_validator('palim')
    @classmethod
    def validate_palim(cls, v):
        if v < 0:
            raise ValueError('palim must be non-negative')
        return v

    @field_validator('ess')
    @classmethod
    def validate_ess(cls, v):
        if v <= 0:
            raise ValueError('ess must be positive')
        return v

    @field_validator('kbest', 'workers', 'trials')
    @classmethod
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError('must be at least 1')
        return v

    @field_validator('time_limit')
    @classmethod
    def validate_time_limit(cls, v):
        if v <= 0:
            raise ValueError('time limit must be positive')
        return v

    @field_validator('log_level')
    @classmethod
    def validate_log_level(cls, v):
        level = v.upper()
        if level not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f'unknown log level {v}')
        return level

    def solver_params(self) -> SolverParams:
        return SolverParams(
            time_limit=self.time_limit,
            node_limit=self.node_limit,
            set_packing=self.set_packing,
            sink_heuristic=self.sink_heuristic,
            propagation=self.propagation,
            gomory=self.gomory,
            convex4b=self.convex4b,
            static_convex4b=self.static_convex4b,
            audit=self.audit,
        )

    def flag_summary(self) -> str:
        flags = ("set_packing", "sink_heuristic", "propagation", "gomory", "convex4b", "static_convex4b")
        return " ".join(f"{name}={'on' if getattr(self, name) else 'off'}" for name in flags)


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="bnsl", description="Exact BDeu Bayesian network structure learning")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=DEFAULT_LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    def scoring_options(p):
        p.add_argument("--palim", type=int, default=DEFAULT_PALIM, help="maximum parent set size")
        p.add_argument("--ess", type=float, default=DEFAULT_ESS, help="BDeu effective sample size")
        p.add_argument("--pruning", action=argparse.BooleanOptionalAction, default=True)
        p.add_argument("--workers", type=int, default=DEFAULT_WORKERS)
        p.add_argument("--input-format", choices=[f.value for f in InputFormat], default="auto")

    def solver_options(p):
        p.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
        p.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT)
        p.add_argument("--set-packing", action=argparse.BooleanOptionalAction, default=True)
        p.add_argument("--sink-heuristic", action=argparse.BooleanOptionalAction, default=True)
        p.add_argument("--propagation", action=argparse.BooleanOptionalAction, default=True)
        p.add_argument("--gomory", action=argparse.BooleanOptionalAction, default=True)
        p.add_argument("--convex4b", action=argparse.BooleanOptionalAction, default=False)
        p.add_argument("--static-convex4b", action=argparse.BooleanOptionalAction, default=False)

    score = sub.add_parser("score", help="compute a local score file from data")
    score.add_argument("input", type=Path)
    score.add_argument("-o", "--output", type=Path)
    scoring_options(score)

    learn = sub.add_parser("learn", help="learn the best network(s)")
    learn.add_argument("input", type=Path, help="dataset or score file")
    learn.add_argument("-o", "--output", type=Path)
    learn.add_argument("--kbest", type=int, default=1)
    learn.add_argument("--format", choices=[f.value for f in OutputFormat], default="flat")
    learn.add_argument("--constraints", type=Path, help="edge presence/absence file")
    learn.add_argument("--audit", action="store_true", help="check every cut against all DAGs (p ≤ 4)")
    scoring_options(learn)
    solver_options(learn)

    verify = sub.add_parser("verify", help="run the oracle and validity audits")
    verify.add_argument("input", type=Path, nargs="?", help="instance to audit; seeded corpus if omitted")
    verify.add_argument("--seed", type=int, default=0)
    verify.add_argument("--trials", type=int, default=20)
    verify.add_argument("--count-p5", action="store_true", help="also count the 5-node DAGs")
    scoring_options(verify)
    solver_options(verify)
    return parser


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    args = {k: v for k, v in args.items() if v is not None or k in ("node_limit",)}
    return RunConfig(**args)


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from exc


def detect_format(text: str) -> InputFormat:
    """Score files open with a lone node count followed by a 'name k' header."""
    lines = [line.split() for line in text.splitlines() if line.strip()]
    if len(lines) >= 2 and len(lines[0]) == 1 and len(lines[1]) == 2 and lines[0][0].isdigit():
        return InputFormat.SCORES
    return InputFormat.DATA


def load_table(config: RunConfig, pruning: bool) -> ScoreTable:
    text = _read(config.input)
    fmt = config.input_format
    if fmt == InputFormat.AUTO:
        fmt = detect_format(text)
    if fmt == InputFormat.SCORES:
        table = parse_scores(text)
        logger.info("Read %d candidate families for %d nodes", table.n, table.p)
        return table
    data = parse_dataset(text)
    logger.info("Read %d observations over %d nodes", data.n_rows, data.p)
    return build_score_table(data, config.palim, config.ess, pruning, config.workers)


def _emit(config: RunConfig, text: str, stdout: TextIO):
    if config.output is None:
        stdout.write(text)
        return
    try:
        config.output.write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {config.output}: {exc.strerror or exc}") from exc


def run_score(config: RunConfig, stdout: TextIO, stderr: TextIO) -> int:
    table = load_table(config.model_copy(update={"input_format": InputFormat.DATA}), config.pruning)
    _emit(config, write_scores(table), stdout)
    return EXIT_OK


def _render_learn(config: RunConfig, table: ScoreTable, constraints: List[EdgeConstraint],
                  results: List[SolveResult], model_table: ScoreTable) -> str:
    out = [
        "# bnsl learn",
        f"# input: {config.input}",
        f"# palim: {config.palim} ess: {config.ess} pruning: {'on' if config.pruning else 'off'}",
        f"# constraints: {config.constraints if config.constraints else 'none'}",
    ]
    out += [f"#   {c.describe(table.names)}" for c in constraints]
    out.append(f"# flags: {config.flag_summary()}")
    out.append(f"# kbest: {config.kbest} time_limit: {config.time_limit:g} "
               f"node_limit: {config.node_limit if config.node_limit else 'none'}")

    for rank, result in enumerate(results, start=1):
        net = result.best
        if net is None:
            out.append(f"# rank {rank}: no network found before the limit")
        elif OutputFormat(config.format) == OutputFormat.DOT:
            out.append(write_dot(net, model_table.names, graph_name=f"bn{rank}").rstrip("\n"))
        else:
            local = [model_table.families[i].score for i in net.family_ids(model_table)]
            out.append(f"# rank {rank}")
            out.append(write_flat(net, model_table.names, local).rstrip("\n"))

    out.append("# rank score gap status nodes")
    for rank, result in enumerate(results, start=1):
        score = f"{result.best_score:.6f}" if result.best is not None else "none"
        out.append(f"# {rank} {score} {100.0 * result.gap:.2f}% "
                   f"{result.status.value} {result.stats.nodes}")
    return "\n".join(out) + "\n"


def run_learn(config: RunConfig, stdout: TextIO, stderr: TextIO) -> int:
    pruning = config.pruning and config.kbest == 1 and config.constraints is None
    table = load_table(config, pruning)
    constraints: List[EdgeConstraint] = []
    if config.constraints is not None:
        constraints = parse_constraints(_read(config.constraints), table.names)

    started = time.monotonic()
    model = build_ip(table, config.set_packing, config.static_convex4b, constraints)
    results = solve_kbest(model, config.kbest, config.solver_params())
    elapsed = time.monotonic() - started
    if not results:
        stderr.write("bnsl: infeasible: no acyclic network satisfies the constraints\n")
        return EXIT_INFEASIBLE

    _emit(config, _render_learn(config, table, constraints, results, model.table), stdout)
    stats = results[0].stats
    stderr.write(f"bnsl: {len(results)} network(s) in {elapsed:.2f}s, "
                 f"{sum(r.stats.nodes for r in results)} nodes, {stats.lp_solves} LP solves "
                 f"(first), cuts {dict(stats.cuts)}\n")
    if any(r.stats.audit_violations for r in results):
        stderr.write("bnsl: cut audit found invalid cuts\n")
        return EXIT_INTERNAL
    return EXIT_OK


def run_verify(config: RunConfig, stdout: TextIO, stderr: TextIO) -> int:
    table = load_table(config, config.pruning) if config.input is not None else None
    auditor = InstanceAuditor(table, seed=config.seed, trials=config.trials,
                              params=config.solver_params(), count_p5=config.count_p5)
    auditor.run()
    _emit(config.model_copy(update={"output": None}), auditor.report(), stdout)
    return EXIT_OK if auditor.all_passed else EXIT_INTERNAL


def run(config: RunConfig, stdout: TextIO = sys.stdout, stderr: TextIO = sys.stderr) -> int:
    """Execute one configured command; returns the process exit status."""
    handlers = {
        Subcommand.SCORE: run_score,
        Subcommand.LEARN: run_learn,
        Subcommand.VERIFY: run_verify,
    }
    try:
        return handlers[config.command](config, stdout, stderr)
    except UsageError as exc:
        stderr.write(f"bnsl: {exc}\n")
        return EXIT_USAGE
    except ParseError as exc:
        stderr.write(f"bnsl: parse error: {exc}\n")
        return EXIT_PARSE
    except InfeasibleConstraintError as exc:
        stderr.write(f"bnsl: infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    except Exception as exc:
        logger.exception("Internal failure")
        stderr.write(f"bnsl: internal error: {exc}\n")
        return EXIT_INTERNAL


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        config = parse_config(argv)
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(part) for part in first.get("loc", ()))
        sys.stderr.write(f"bnsl: invalid {field}: {first.get('msg')}\n")
        return EXIT_USAGE

    logging.basicConfig(level=getattr(logging, config.log_level), format=LOG_FORMAT, stream=sys.stderr)
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
