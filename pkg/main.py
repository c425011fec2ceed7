import argparse
import contextlib
import io
import logging
import os
import sys
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, TextIO, Union

from canonical import decide, minimize_first, minimize_second, second_canonical
from projection import kernel_check, pgla2pga
from spi_model import CanonSpi, NotInK, canon_to_kernel, canon_to_pga, to_canon_l, to_canon_pga, unfold
from syntax import Dialect, detect_dialect, format_program, parse_l, parse_pga
from threads import extract, minimize, to_dot, to_equations


logger = logging.getLogger(__name__)

FORMS = ("first", "first-min", "second", "second-min")
RELATIONS = ("spc", "sc", "thread")
EQUATION_STYLES = ("unicode", "ascii")


@dataclass
class WorkbenchConfig:
    log_level: str = "WARNING"
    unfold_length: int = 16
    equation_style: str = "unicode"
    default_form: str = "second-min"

    @classmethod
    def from_env(cls) -> "WorkbenchConfig":
        config = cls()
        level = os.getenv("PGA_WORKBENCH_LOG_LEVEL")
        if level:
            if level.upper() in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
                config.log_level = level.upper()
            else:
                logger.warning(f"Ignoring unknown log level {level!r}")
        length = os.getenv("PGA_WORKBENCH_UNFOLD_LENGTH")
        if length:
            if length.isdigit():
                config.unfold_length = int(length)
            else:
                logger.warning(f"Ignoring invalid unfold length {length!r}")
        style = os.getenv("PGA_WORKBENCH_EQUATION_STYLE")
        if style:
            if style in EQUATION_STYLES:
                config.equation_style = style
            else:
                logger.warning(f"Ignoring unknown equation style {style!r}")
        form = os.getenv("PGA_WORKBENCH_DEFAULT_FORM")
        if form:
            if form in FORMS:
                config.default_form = form
            else:
                logger.warning(f"Ignoring unknown canonical form {form!r}")
        return config


class CliError(Exception):
    pass


class _ParserExit(Exception):
    def __init__(self, status: int):
        self.status = status


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)

    def exit(self, status=0, message=None):
        if message:
            raise CliError(message.strip())
        raise _ParserExit(status)


@dataclass
class Command:
    verb: str
    expressions: List[str]
    dialect: Optional[Dialect] = None
    options: Dict[str, Union[str, int]] = field(default_factory=dict)


@dataclass
class CommandResult:
    exit_code: int
    stdout: str = ""
    stderr: str = ""


def build_parser(config: WorkbenchConfig) -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="pga-workbench",
        description="Canonical forms, congruences and thread extraction for PGA and PGLA programs.",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    def add(verb: str, help_text: str, count: int = 1, dialect: bool = True) -> argparse.ArgumentParser:
        sub = verbs.add_parser(verb, help=help_text)
        names = ["expr"] if count == 1 else ["expr1", "expr2"]
        for name in names:
            sub.add_argument(name, help="program text, or - to read it from stdin")
        if dialect:
            sub.add_argument("--dialect", choices=("pga", "pgla"), default=None)
        return sub

    add("parse", "echo the program in canonical printing")
    add("normalize", "print a canonical form").add_argument("--form", choices=FORMS, default=config.default_form)
    add("eq", "decide equality of two programs", count=2).add_argument("--relation", choices=RELATIONS, default="spc")
    extract_parser = add("extract", "print the extracted thread")
    extract_parser.add_argument("--format", choices=("equations", "dot"), default="equations")
    extract_parser.add_argument("--style", choices=EQUATION_STYLES, default=config.equation_style)
    add("project", "project an L-sequence to PGA", dialect=False).add_argument(
        "--format", choices=("text", "json"), default="text"
    )
    add("member", "check membership of the kernel K", dialect=False)
    add("unfold", "print the first instructions of the denoted sequence").add_argument(
        "--length", type=int, default=config.unfold_length
    )
    return parser


def parse_command(argv: Sequence[str], config: WorkbenchConfig) -> Command:
    args = build_parser(config).parse_args(list(argv))
    expressions = [args.expr] if hasattr(args, "expr") else [args.expr1, args.expr2]
    options = {
        key: value
        for key, value in vars(args).items()
        if key not in ("verb", "expr", "expr1", "expr2", "dialect")
    }
    return Command(args.verb, expressions, getattr(args, "dialect", None), options)


def _read(expression: str, stdin: Optional[TextIO]) -> str:
    if expression != "-":
        return expression
    if stdin is None:
        raise CliError("no standard input to read the program from")
    return stdin.read().strip()


def _load(text: str, dialect: Optional[Dialect]) -> CanonSpi:
    dialect = dialect or detect_dialect(text)
    if dialect == "pga":
        return to_canon_pga(parse_pga(text))
    canon = to_canon_l(parse_l(text))
    if isinstance(canon, NotInK):
        raise CliError(
            f"not a K-program: \\##{canon.counter} preceded by {canon.preceding} instruction(s)"
            f" (deficit {canon.deficit}); use 'project' for the padded PGA program"
        )
    return canon


def _render(c: CanonSpi, dialect: Dialect) -> str:
    if dialect == "pgla":
        return format_program(canon_to_kernel(c))
    return format_program(canon_to_pga(c))


def execute(command: Command, stdin: Optional[TextIO] = None) -> CommandResult:
    texts = [_read(expression, stdin) for expression in command.expressions]
    text = texts[0]
    verb = command.verb

    if verb == "parse":
        dialect = command.dialect or detect_dialect(text)
        program = parse_l(text) if dialect == "pgla" else parse_pga(text)
        return CommandResult(0, format_program(program) + "\n")

    if verb == "normalize":
        dialect = command.dialect or detect_dialect(text)
        c = _load(text, dialect)
        form = command.options["form"]
        if form == "first-min":
            c = minimize_first(c)
        elif form == "second":
            c = second_canonical(c)
        elif form == "second-min":
            c = minimize_second(c)
        return CommandResult(0, _render(c, dialect) + "\n")

    if verb == "eq":
        left = _load(texts[0], command.dialect)
        right = _load(texts[1], command.dialect)
        verdict = decide(left, right, command.options["relation"])
        logger.info(f"Decided {verdict.relation}: equal={verdict.equal}")
        return CommandResult(0 if verdict.equal else 1, verdict.summary() + "\n")

    if verb == "extract":
        thread = minimize(extract(_load(text, command.dialect)))
        if command.options["format"] == "dot":
            return CommandResult(0, to_dot(thread))
        return CommandResult(0, to_equations(thread).render(command.options["style"]) + "\n")

    if verb == "project":
        report = pgla2pga(parse_l(text))
        if command.options["format"] == "json":
            return CommandResult(0, report.to_document().model_dump_json(indent=2) + "\n")
        return CommandResult(0, report.to_text() + "\n")

    if verb == "member":
        diagnosis = kernel_check(parse_l(text))
        return CommandResult(0 if diagnosis.in_kernel else 1, diagnosis.describe() + "\n")

    length = command.options["length"]
    if length < 0:
        raise CliError(f"--length must be >= 0, got {length}")
    c = _load(text, command.dialect)
    tokens = [str(instruction) for instruction in unfold(c, length)]
    if not c.is_finite or c.prefix_length > length:
        tokens.append("...")
    return CommandResult(0, " ".join(tokens) + "\n")


def run(argv: Sequence[str], stdin: Optional[TextIO] = None, config: Optional[WorkbenchConfig] = None) -> CommandResult:
    """Run one command line; never raises, reporting failures with exit code 2."""
    config = config or WorkbenchConfig()
    captured = io.StringIO()
    try:
        with contextlib.redirect_stdout(captured):
            command = parse_command(argv, config)
    except _ParserExit as e:
        return CommandResult(e.status, captured.getvalue())
    except CliError as e:
        return CommandResult(2, captured.getvalue(), f"error: {e}\n")
    except Exception as e:
        logger.error(f"Unexpected failure reading arguments: {e}", exc_info=True)
        return CommandResult(2, "", f"internal error: {e}\n")

    try:
        return execute(command, stdin)
    except (ValueError, CliError) as e:
        return CommandResult(2, "", f"error: {e}\n")
    except Exception as e:
        logger.error(f"Unexpected failure running {command.verb}: {e}", exc_info=True)
        return CommandResult(2, "", f"internal error: {e}\n")


def main():
    config = WorkbenchConfig.from_env()
    logging.basicConfig(
        level=getattr(logging, config.log_level),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        stream=sys.stderr,
    )
    result = run(sys.argv[1:], sys.stdin, config)
    sys.stdout.write(result.stdout)
    sys.stderr.write(result.stderr)
    sys.exit(result.exit_code)


if __name__ == "__main__":
    main()
