import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

from syntax import (
    Instruction,
    LSeq,
    Omega,
    PgaTerm,
    Prim,
    flatten,
    format_program,
    sequence_term,
)


logger = logging.getLogger(__name__)


def _word(instructions: Sequence[Instruction], label: str) -> Tuple[Instruction, ...]:
    word = tuple(instructions)
    for instruction in word:
        if not isinstance(instruction, Instruction) or not instruction.is_primitive:
            raise ValueError(f"{label} may only hold primitive instructions, got {instruction!r}")
    return word


@dataclass(frozen=True)
class CanonSpi:
    """Eventually periodic instruction sequence: preperiod followed by the period repeated forever.

    A missing period means the sequence is finite and consists of the preperiod alone.
    """

    preperiod: Tuple[Instruction, ...] = ()
    period: Optional[Tuple[Instruction, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "preperiod", _word(self.preperiod, "preperiod"))
        if self.period is not None:
            object.__setattr__(self, "period", _word(self.period, "period"))
            if not self.period:
                raise ValueError("a period must be nonempty")
        elif not self.preperiod:
            raise ValueError("a program has at least one instruction")

    @property
    def is_finite(self) -> bool:
        return self.period is None

    @property
    def prefix_length(self) -> int:
        return len(self.preperiod)

    @property
    def period_length(self) -> int:
        return 0 if self.period is None else len(self.period)

    @property
    def word(self) -> Tuple[Instruction, ...]:
        """All stored instructions: preperiod then one copy of the period."""
        return self.preperiod + (self.period or ())

    def __str__(self) -> str:
        return format_program(canon_to_pga(self))


@dataclass(frozen=True)
class NotInK:
    """An L-sequence whose repeater is preceded by fewer instructions than its counter."""

    first_canonical: LSeq

    @property
    def counter(self) -> int:
        return self.first_canonical.items[-1].counter

    @property
    def preceding(self) -> int:
        return len(self.first_canonical) - 1

    @property
    def deficit(self) -> int:
        return self.counter - self.preceding


@dataclass(frozen=True)
class KForm:
    body: CanonSpi

    def __post_init__(self):
        if self.body.period is None:
            raise ValueError("a K-form with a repeater needs a period")

    def to_lseq(self) -> LSeq:
        return LSeq(self.body.word + (Instruction.repeat(self.body.period_length),))


def to_canon_pga(term: PgaTerm) -> CanonSpi:
    preperiod: List[Instruction] = []
    for leaf in flatten(term):
        if isinstance(leaf, Instruction):
            preperiod.append(leaf)
            continue
        body = to_canon_pga(leaf.body)
        # Everything after a repetition is unreachable: X^w;Y = X^w.
        if body.period is None:
            return CanonSpi(tuple(preperiod), body.preperiod)
        return CanonSpi(tuple(preperiod) + body.preperiod, body.period)
    return CanonSpi(tuple(preperiod), None)


def first_canonical_l(seq: LSeq) -> LSeq:
    for position, item in enumerate(seq.items):
        if item.is_repeat:
            return LSeq(seq.items[: position + 1])
    return seq


def to_canon_l(seq: LSeq) -> Union[CanonSpi, NotInK]:
    form = first_canonical_l(seq)
    last = form.items[-1]
    if not last.is_repeat:
        return CanonSpi(form.items, None)
    body = form.items[:-1]
    if last.counter > len(body):
        logger.debug(f"{form} is outside the kernel (deficit {last.counter - len(body)})")
        return NotInK(form)
    split = len(body) - last.counter
    return CanonSpi(body[:split], body[split:])


def to_canon(program: Union[PgaTerm, LSeq]) -> Union[CanonSpi, NotInK]:
    if isinstance(program, LSeq):
        return to_canon_l(program)
    return to_canon_pga(program)


def canon_to_pga(c: CanonSpi) -> PgaTerm:
    parts: List[PgaTerm] = [Prim(instruction) for instruction in c.preperiod]
    if c.period is not None:
        parts.append(Omega(sequence_term([Prim(instruction) for instruction in c.period])))
    return sequence_term(parts)


def canon_to_kernel(c: CanonSpi) -> LSeq:
    if c.period is None:
        return LSeq(c.preperiod)
    return KForm(c).to_lseq()


def canonical_index(c: CanonSpi, position: int) -> Optional[int]:
    """Index into ``c.word`` holding the instruction at ``position``; None past a finite end."""
    if position < c.prefix_length:
        return position
    if c.period is None:
        return None
    return c.prefix_length + (position - c.prefix_length) % c.period_length


def instruction_at(c: CanonSpi, position: int) -> Optional[Instruction]:
    index = canonical_index(c, position)
    return None if index is None else c.word[index]


def unfold(c: CanonSpi, length: int) -> List[Instruction]:
    if length < 0:
        raise ValueError(f"unfold length must be >= 0, got {length}")
    if c.period is None:
        return list(c.preperiod[:length])
    word = c.word
    return [word[canonical_index(c, position)] for position in range(length)]


def oracle_bound(c1: CanonSpi, c2: CanonSpi) -> int:
    if c1.is_finite or c2.is_finite:
        finite = [c.prefix_length for c in (c1, c2) if c.is_finite]
        return max(finite) + 1
    return (
        c1.prefix_length
        + c2.prefix_length
        + 2 * math.lcm(c1.period_length, c2.period_length)
    )


def first_difference(c1: CanonSpi, c2: CanonSpi, scale: int = 1) -> Optional[int]:
    """1-based first position where the denoted sequences differ, or None if they are equal.

    A finite sequence ending where the other continues counts as a difference at the
    first missing position.
    """
    bound = oracle_bound(c1, c2) * scale
    for position in range(bound):
        u = instruction_at(c1, position)
        v = instruction_at(c2, position)
        if u != v:
            return position + 1
        if u is None:
            return None
    return None


def spi_equal_oracle(c1: CanonSpi, c2: CanonSpi, scale: int = 1) -> bool:
    return first_difference(c1, c2, scale) is None
