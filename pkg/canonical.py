import logging
from typing import List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, Field, model_validator

from spi_model import (
    CanonSpi,
    canon_to_pga,
    canonical_index,
    first_difference,
    instruction_at,
)
from syntax import Instruction, format_program


logger = logging.getLogger(__name__)

Relation = Literal["spc", "sc", "thread"]


class PositionWitness(BaseModel):
    kind: Literal["position"] = "position"
    position: int = Field(description="1-based position where the instruction sequences differ")
    left: str = Field(description="Instruction of the left program there, or 'end'")
    right: str = Field(description="Instruction of the right program there, or 'end'")


class NormalFormWitness(BaseModel):
    kind: Literal["normal-forms"] = "normal-forms"
    left: str = Field(description="Minimal second canonical form of the left program")
    right: str = Field(description="Minimal second canonical form of the right program")


class ReplyWitness(BaseModel):
    kind: Literal["replies"] = "replies"
    replies: List[bool] = Field(
        default_factory=list, description="Replies to the actions performed before the threads part ways"
    )
    left: str = Field(description="What the left thread does next: S, D or an action")
    right: str = Field(description="What the right thread does next: S, D or an action")


class Verdict(BaseModel):
    equal: bool
    relation: Relation
    witness: Optional[Union[PositionWitness, NormalFormWitness, ReplyWitness]] = Field(
        None, description="Why the programs differ; absent when they are equal"
    )

    @model_validator(mode="after")
    def _witness_iff_unequal(self) -> "Verdict":
        if self.equal == (self.witness is not None):
            raise ValueError("a witness is given exactly when the programs are not equal")
        return self

    def summary(self) -> str:
        if self.equal:
            return f"equal ({self.relation})"
        witness = self.witness
        if isinstance(witness, PositionWitness):
            detail = f"position {witness.position}: {witness.left} vs {witness.right}"
        elif isinstance(witness, NormalFormWitness):
            detail = f"normal forms {witness.left} vs {witness.right}"
        else:
            replies = " ".join("true" if reply else "false" for reply in witness.replies)
            detail = f"after replies [{replies}]: {witness.left} vs {witness.right}"
        return f"not equal ({self.relation}): {detail}"


def primitive_root(word: Tuple[Instruction, ...]) -> Tuple[Instruction, ...]:
    """Shortest w with word = w^m."""
    size = len(word)
    for length in range(1, size + 1):
        if size % length == 0 and word[:length] * (size // length) == word:
            return word[:length]
    return word


def minimize_first(c: CanonSpi) -> CanonSpi:
    if c.period is None:
        return c
    period = primitive_root(c.period)
    preperiod = list(c.preperiod)
    # Y;u;(Z;u)^w = Y;(u;Z)^w
    while preperiod and preperiod[-1] == period[-1]:
        preperiod.pop()
        period = (period[-1],) + period[:-1]
    return CanonSpi(tuple(preperiod), period)


def resolve_jump(c: CanonSpi, position: int) -> Optional[int]:
    """Follow the jump chain starting at ``position``.

    Returns the position of the first non-jump instruction reached, the position just
    past the end of a finite program if the chain leaves it, or None when the chain
    meets #0 or loops among jumps.
    """
    seen = set()
    current = position
    while True:
        index = canonical_index(c, current)
        if index is None:
            return current
        instruction = c.word[index]
        if not instruction.is_jump:
            return current
        if instruction.counter == 0 or index in seen:
            return None
        seen.add(index)
        current += instruction.counter


def jump_targets(c: CanonSpi) -> Tuple[Optional[int], ...]:
    """Resolved jump chain for every index of ``c.word`` in one pass.

    A periodic program maps each index to the index of the instruction the chain
    reaches. A finite program maps it to a position, which lies past the end when
    the chain leaves the program. None marks a chain that meets #0 or loops.
    """
    word = c.word
    k = c.prefix_length
    targets: List[Optional[int]] = [None if instruction.is_jump else index for index, instruction in enumerate(word)]
    resolved = [not instruction.is_jump or instruction.counter == 0 for instruction in word]

    # Period chains stay in the period and may cycle.
    for start in range(k, len(word)):
        trail: List[int] = []
        on_trail = set()
        index = start
        while not resolved[index] and index not in on_trail:
            trail.append(index)
            on_trail.add(index)
            index = canonical_index(c, index + word[index].counter)
        target = targets[index] if resolved[index] else None
        for visited in trail:
            targets[visited] = target
            resolved[visited] = True

    # Preperiod chains only run forward.
    for index in range(k - 1, -1, -1):
        if resolved[index]:
            continue
        landing = index + word[index].counter
        following = canonical_index(c, landing)
        targets[index] = landing if following is None else targets[following]
    return tuple(targets)


def second_canonical(c: CanonSpi) -> CanonSpi:
    word = list(c.word)
    k = c.prefix_length
    n = c.period_length
    targets = jump_targets(c)
    for position, instruction in enumerate(c.word):
        if not instruction.is_jump or instruction.counter == 0:
            continue
        target = targets[position]
        if target is None:
            counter = 0
        elif c.is_finite or position < k:
            counter = target - position
        else:
            counter = (target - position) % n
        word[position] = Instruction.jump(counter)
    if c.period is None:
        return CanonSpi(tuple(word), None)
    return CanonSpi(tuple(word[:k]), tuple(word[k:]))


def minimize_second(c: CanonSpi) -> CanonSpi:
    current = minimize_first(c)
    rounds = 0
    while True:
        rounds += 1
        following = minimize_first(second_canonical(current))
        if following == current:
            break
        current = following
    logger.debug(f"Minimal second canonical form {current} after {rounds} round(s)")
    return current


def _observed(c: CanonSpi, position: int) -> str:
    instruction = instruction_at(c, position - 1)
    return "end" if instruction is None else str(instruction)


def decide_spc(a: CanonSpi, b: CanonSpi) -> Verdict:
    if minimize_first(a) == minimize_first(b):
        return Verdict(equal=True, relation="spc")
    position = first_difference(a, b)
    if position is None:
        raise RuntimeError(f"minimal first canonical forms of {a} and {b} disagree with unfolding")
    return Verdict(
        equal=False,
        relation="spc",
        witness=PositionWitness(position=position, left=_observed(a, position), right=_observed(b, position)),
    )


def decide_sc(a: CanonSpi, b: CanonSpi) -> Verdict:
    left = minimize_second(a)
    right = minimize_second(b)
    if left == right:
        return Verdict(equal=True, relation="sc")
    return Verdict(
        equal=False,
        relation="sc",
        witness=NormalFormWitness(
            left=format_program(canon_to_pga(left)), right=format_program(canon_to_pga(right))
        ),
    )


def decide(a: CanonSpi, b: CanonSpi, relation: Relation) -> Verdict:
    if relation == "spc":
        return decide_spc(a, b)
    if relation == "sc":
        return decide_sc(a, b)
    from threads import extract, thread_equal

    return thread_equal(extract(a), extract(b))
