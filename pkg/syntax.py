import logging
import re
from dataclasses import dataclass
from enum import Enum
from typing import List, Literal, Optional, Sequence, Tuple, Union

import pyparsing as pp


logger = logging.getLogger(__name__)

Dialect = Literal["pga", "pgla"]

_NAME_RE = re.compile(r"[a-z][a-z0-9.]*")


class PgaSyntaxError(ValueError):
    """Raised for concrete text that is not a program of the requested notation."""

    def __init__(self, message: str, position: int = 0):
        self.message = message
        self.position = position
        super().__init__(f"syntax error at column {self.column}: {message}")

    @property
    def column(self) -> int:
        return self.position + 1


class InstructionKind(Enum):
    BASIC = "basic"
    POS_TEST = "pos_test"
    NEG_TEST = "neg_test"
    JUMP = "jump"
    HALT = "halt"
    REPEAT = "repeat"


_NAMED_KINDS = (InstructionKind.BASIC, InstructionKind.POS_TEST, InstructionKind.NEG_TEST)


@dataclass(frozen=True)
class Instruction:
    kind: InstructionKind
    name: Optional[str] = None
    counter: Optional[int] = None

    def __post_init__(self):
        if self.kind in _NAMED_KINDS:
            if self.name is None or not _NAME_RE.fullmatch(self.name):
                raise ValueError(f"invalid instruction name: {self.name!r}")
            if self.counter is not None:
                raise ValueError(f"{self.kind.value} instruction takes no counter")
        elif self.kind is InstructionKind.HALT:
            if self.name is not None or self.counter is not None:
                raise ValueError("halt instruction takes no operands")
        else:
            if self.name is not None:
                raise ValueError(f"{self.kind.value} instruction takes no name")
            lowest = 1 if self.kind is InstructionKind.REPEAT else 0
            if not isinstance(self.counter, int) or self.counter < lowest:
                raise ValueError(
                    f"{self.kind.value} counter must be an integer >= {lowest}, got {self.counter!r}"
                )

    @classmethod
    def basic(cls, name: str) -> "Instruction":
        return cls(InstructionKind.BASIC, name=name)

    @classmethod
    def pos_test(cls, name: str) -> "Instruction":
        return cls(InstructionKind.POS_TEST, name=name)

    @classmethod
    def neg_test(cls, name: str) -> "Instruction":
        return cls(InstructionKind.NEG_TEST, name=name)

    @classmethod
    def jump(cls, counter: int) -> "Instruction":
        return cls(InstructionKind.JUMP, counter=counter)

    @classmethod
    def halt(cls) -> "Instruction":
        return cls(InstructionKind.HALT)

    @classmethod
    def repeat(cls, counter: int) -> "Instruction":
        return cls(InstructionKind.REPEAT, counter=counter)

    @property
    def is_jump(self) -> bool:
        return self.kind is InstructionKind.JUMP

    @property
    def is_repeat(self) -> bool:
        return self.kind is InstructionKind.REPEAT

    @property
    def is_primitive(self) -> bool:
        return self.kind is not InstructionKind.REPEAT

    def __str__(self) -> str:
        if self.kind is InstructionKind.BASIC:
            return self.name
        if self.kind is InstructionKind.POS_TEST:
            return f"+{self.name}"
        if self.kind is InstructionKind.NEG_TEST:
            return f"-{self.name}"
        if self.kind is InstructionKind.JUMP:
            return f"#{self.counter}"
        if self.kind is InstructionKind.HALT:
            return "!"
        return f"\\##{self.counter}"


@dataclass(frozen=True)
class Prim:
    instruction: Instruction

    def __post_init__(self):
        if not self.instruction.is_primitive:
            raise ValueError("repeat instructions cannot occur in a PGA term")


@dataclass(frozen=True)
class Concat:
    left: "PgaTerm"
    right: "PgaTerm"


@dataclass(frozen=True)
class Omega:
    body: "PgaTerm"


PgaTerm = Union[Prim, Concat, Omega]


@dataclass(frozen=True)
class LSeq:
    items: Tuple[Instruction, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ValueError("an L-sequence has at least one instruction")

    def __len__(self) -> int:
        return len(self.items)

    def __str__(self) -> str:
        return format_program(self)


def sequence_term(parts: Sequence[PgaTerm]) -> PgaTerm:
    """Concatenate terms into a right-leaning tree."""
    if not parts:
        raise ValueError("a PGA term has at least one instruction")
    term = parts[-1]
    for part in reversed(parts[:-1]):
        term = Concat(part, term)
    return term


def flatten(term: PgaTerm) -> List[Union[Instruction, Omega]]:
    """Concatenation leaves in program order; repetitions are kept whole."""
    leaves: List[Union[Instruction, Omega]] = []
    stack: List[PgaTerm] = [term]
    while stack:
        node = stack.pop()
        if isinstance(node, Concat):
            stack.append(node.right)
            stack.append(node.left)
        elif isinstance(node, Prim):
            leaves.append(node.instruction)
        else:
            leaves.append(node)
    return leaves


def reassociate(term: PgaTerm) -> PgaTerm:
    parts: List[PgaTerm] = []
    for leaf in flatten(term):
        if isinstance(leaf, Instruction):
            parts.append(Prim(leaf))
        else:
            parts.append(Omega(reassociate(leaf.body)))
    return sequence_term(parts)


def format_program(program: Union[PgaTerm, LSeq, Instruction]) -> str:
    if isinstance(program, Instruction):
        return str(program)
    if isinstance(program, LSeq):
        return ";".join(str(item) for item in program.items)
    return _format_term(program)


def _format_term(term: PgaTerm) -> str:
    rendered = []
    for leaf in flatten(term):
        if isinstance(leaf, Instruction):
            rendered.append(str(leaf))
        elif isinstance(leaf.body, Prim):
            rendered.append(f"{leaf.body.instruction}^w")
        else:
            rendered.append(f"({_format_term(leaf.body)})^w")
    return ";".join(rendered)


# Grammar


def _reject(message: str):
    def action(s, loc, toks):
        raise pp.ParseFatalException(s, loc, message)

    return action


def _to_instruction(toks) -> Instruction:
    token = toks[0]
    if token == "!":
        return Instruction.halt()
    if token.startswith("#"):
        return Instruction.jump(int(token[1:]))
    if token.startswith("+"):
        return Instruction.pos_test(token[1:])
    if token.startswith("-"):
        return Instruction.neg_test(token[1:])
    return Instruction.basic(token)


def _to_repeat(s, loc, toks) -> Instruction:
    digits = toks[0].lstrip("\\").lstrip("#")
    if digits.startswith("0"):
        raise pp.ParseFatalException(s, loc, "repeat counter must be at least 1")
    return Instruction.repeat(int(digits))


def _to_repetition(toks) -> PgaTerm:
    if len(toks) == 2:
        return Omega(toks[0])
    return toks[0]


def _build_grammar() -> Tuple[pp.ParserElement, pp.ParserElement]:
    primitive = pp.Regex(r"!|#(?:0|[1-9][0-9]*)|[+-]?[a-z][a-z0-9.]*")
    primitive.set_name("primitive instruction")
    primitive.set_parse_action(_to_instruction)

    repeater = pp.Regex(r"\\?##[0-9]+")
    repeater.set_name("repeat instruction")
    omega_marker = pp.Literal("^w")

    # PGA: seq := rep (";" rep)* ; rep := atom ["^w"] ; atom := prim | "(" seq ")"
    pga_seq = pp.Forward()
    pga_atom = (
        repeater.copy().set_parse_action(_reject("repeat instructions are not part of PGA"))
        | primitive.copy().add_parse_action(lambda toks: Prim(toks[0]))
        | pp.Suppress("(") - pga_seq - pp.Suppress(")")
    ).set_name("instruction")
    pga_rep = (pga_atom + pp.Opt(omega_marker)).set_parse_action(_to_repetition)
    pga_seq <<= (pga_rep + pp.ZeroOrMore(pp.Suppress(";") - pga_rep)).set_parse_action(
        lambda toks: sequence_term(list(toks))
    )

    # L: lseq := item (";" item)* ; item := prim | repeater
    l_item = (
        repeater.copy().set_parse_action(_to_repeat) | primitive
    ).set_name("instruction") + pp.Opt(
        omega_marker.copy().set_parse_action(_reject("repetition ^w is not part of the L notation"))
    )
    l_seq = (l_item + pp.ZeroOrMore(pp.Suppress(";") - l_item)).set_parse_action(
        lambda toks: LSeq(tuple(toks))
    )
    return pga_seq, l_seq


_PGA_PROGRAM, _L_PROGRAM = _build_grammar()


def _parse(grammar: pp.ParserElement, text: str):
    if not text or not text.strip():
        raise PgaSyntaxError("empty program", 0)
    try:
        return grammar.parse_string(text, parse_all=True)[0]
    except pp.ParseBaseException as e:
        raise PgaSyntaxError(e.msg, e.loc) from None
    except RecursionError:
        raise PgaSyntaxError("parentheses nested too deeply", 0) from None


def parse_pga(text: str) -> PgaTerm:
    term = _parse(_PGA_PROGRAM, text)
    logger.debug(f"Parsed PGA term: {format_program(term)}")
    return term


def parse_l(text: str) -> LSeq:
    seq = _parse(_L_PROGRAM, text)
    logger.debug(f"Parsed L-sequence of {len(seq)} instructions")
    return seq


def detect_dialect(text: str) -> Dialect:
    omega_at = text.find("^w")
    repeat_at = text.find("##")
    if omega_at >= 0 and repeat_at >= 0:
        raise PgaSyntaxError(
            "conflicting dialect markers: both ^w and a repeat instruction",
            max(omega_at, repeat_at),
        )
    return "pgla" if repeat_at >= 0 else "pga"


def parse(text: str, dialect: Optional[Dialect] = None) -> Union[PgaTerm, LSeq]:
    dialect = dialect or detect_dialect(text)
    if dialect == "pgla":
        return parse_l(text)
    return parse_pga(text)
