"""Sound single-step rewrites of instruction sequences by axiom instances.

Each scheme maps a program to every program reachable by one instance of the
scheme. Schemes of the ``spc`` family preserve the denoted instruction sequence;
schemes of the ``sc`` family only rewrite jump counters and preserve structural
congruence. Rewriting happens on the denoted sequence, so a change to a period
instruction changes every occurrence of it.
"""

import logging
import random
from dataclasses import dataclass
from typing import Callable, Dict, List, Literal, Optional, Tuple

from canonical import primitive_root
from spi_model import CanonSpi, instruction_at
from syntax import Concat, Instruction, LSeq, Omega, PgaTerm, Prim, flatten, sequence_term


logger = logging.getLogger(__name__)

Family = Literal["spc", "sc"]

# Periods are not grown past this length by period-power.
MAX_PERIOD = 24


@dataclass(frozen=True)
class AxiomScheme:
    name: str
    family: Family
    description: str
    rewrite: Callable[[CanonSpi], List[CanonSpi]]


def _replaced(c: CanonSpi, index: int, instruction: Instruction) -> CanonSpi:
    word = list(c.word)
    word[index] = instruction
    if c.period is None:
        return CanonSpi(tuple(word), None)
    k = c.prefix_length
    return CanonSpi(tuple(word[:k]), tuple(word[k:]))


def _jumps(c: CanonSpi, least: int = 1):
    for index, instruction in enumerate(c.word):
        if instruction.is_jump and instruction.counter >= least:
            yield index, instruction.counter


def _period_power(c: CanonSpi) -> List[CanonSpi]:
    if c.period is None:
        return []
    variants = []
    root = primitive_root(c.period)
    if root != c.period:
        variants.append(CanonSpi(c.preperiod, root))
    for power in (2, 3):
        if len(c.period) * power <= MAX_PERIOD:
            variants.append(CanonSpi(c.preperiod, c.period * power))
    return variants


def _unroll(c: CanonSpi) -> List[CanonSpi]:
    if c.period is None:
        return []
    period = c.period
    variants = [
        CanonSpi(c.preperiod + period[:count], period[count:] + period[:count])
        for count in range(1, len(period) + 1)
    ]
    if c.preperiod and c.preperiod[-1] == period[-1]:
        variants.append(CanonSpi(c.preperiod[:-1], (period[-1],) + period[:-1]))
    return variants


def _in_range(c: CanonSpi, position: int) -> Optional[Instruction]:
    # Patterns in a finite program must fit inside the word.
    return instruction_at(c, position)


def _jump_to_abort(c: CanonSpi) -> List[CanonSpi]:
    variants = []
    abort = Instruction.jump(0)
    for index, counter in _jumps(c):
        if _in_range(c, index + counter) == abort:
            variants.append(_replaced(c, index, abort))
    for index, _ in _jumps(c, least=0):
        if c.word[index].counter:
            continue
        horizon = len(c.word) - index if c.is_finite else len(c.word)
        for step in range(1, horizon):
            if _in_range(c, index + step) == abort:
                variants.append(_replaced(c, index, Instruction.jump(step)))
                break
    return variants


def _jump_chain(c: CanonSpi) -> List[CanonSpi]:
    variants = []
    for index, counter in _jumps(c):
        target = _in_range(c, index + counter)
        if target is not None and target.is_jump and target.counter >= 1:
            variants.append(_replaced(c, index, Instruction.jump(counter + target.counter)))
        for step in range(1, counter):
            if _in_range(c, index + step) == Instruction.jump(counter - step):
                variants.append(_replaced(c, index, Instruction.jump(step)))
    return variants


def _period_jump(c: CanonSpi) -> List[CanonSpi]:
    if c.period is None:
        return []
    n = c.period_length
    variants = []
    for index, counter in _jumps(c, least=0):
        if index < c.prefix_length:
            continue
        variants.append(_replaced(c, index, Instruction.jump(counter + n)))
        if counter >= n:
            variants.append(_replaced(c, index, Instruction.jump(counter - n)))
    return variants


def _preperiod_jump(c: CanonSpi) -> List[CanonSpi]:
    if c.period is None:
        return []
    k = c.prefix_length
    n = c.period_length
    variants = []
    for index, counter in _jumps(c):
        if index >= k or index + counter < k:
            continue
        variants.append(_replaced(c, index, Instruction.jump(counter + n)))
        if index + counter - n >= k:
            variants.append(_replaced(c, index, Instruction.jump(counter - n)))
    return variants


AXIOMS: Dict[str, AxiomScheme] = {
    scheme.name: scheme
    for scheme in (
        AxiomScheme("period-power", "spc", "(X^n)^w = X^w", _period_power),
        AxiomScheme("unroll", "spc", "(X;Y)^w = X;(Y;X)^w", _unroll),
        AxiomScheme("jump-to-abort", "sc", "#n+1;u1..un;#0 = #0;u1..un;#0", _jump_to_abort),
        AxiomScheme("jump-chain", "sc", "#n+1;u1..un;#m = #n+m+1;u1..un;#m", _jump_chain),
        AxiomScheme("period-jump", "sc", "(#k+n+1;u1..un)^w = (#k;u1..un)^w", _period_jump),
        AxiomScheme(
            "preperiod-jump", "sc", "#n+m+k+2;u1..un;(v1..vm+1)^w = #n+k+1;u1..un;(v1..vm+1)^w", _preperiod_jump
        ),
    )
}


def instances(c: CanonSpi, family: Optional[Family] = None) -> List[Tuple[str, CanonSpi]]:
    found = []
    for scheme in AXIOMS.values():
        if family is not None and scheme.family != family:
            continue
        found.extend((scheme.name, variant) for variant in scheme.rewrite(c))
    return found


def derive_variant(
    c: CanonSpi, steps: int, rng: random.Random, family: Optional[Family] = None
) -> Tuple[CanonSpi, List[str]]:
    """Apply up to ``steps`` random axiom instances; returns the variant and the schemes used."""
    applied = []
    for _ in range(steps):
        candidates = instances(c, family)
        if not candidates:
            break
        name, c = rng.choice(candidates)
        applied.append(name)
    logger.debug(f"Derived {c} via {applied}")
    return c, applied


def l_sequence_variant(seq: LSeq, rng: random.Random, junk: Tuple[Instruction, ...] = ()) -> LSeq:
    """Append instructions after the leftmost repeater: \\##n;X = \\##n."""
    if not any(item.is_repeat for item in seq.items):
        return seq
    if not junk:
        pool = [Instruction.basic("z"), Instruction.jump(rng.randrange(4)), Instruction.repeat(rng.randrange(1, 4))]
        junk = tuple(rng.choice(pool) for _ in range(rng.randrange(1, 4)))
    return LSeq(seq.items + junk)


def pga_term_variant(term: PgaTerm, rng: random.Random) -> PgaTerm:
    """Re-associate concatenations randomly and append junk after the first repetition."""
    leaves: List[PgaTerm] = []
    for leaf in flatten(term):
        if isinstance(leaf, Instruction):
            leaves.append(Prim(leaf))
            continue
        leaves.append(Omega(pga_term_variant(leaf.body, rng)))
        leaves.append(Prim(Instruction.basic("z")))
        break
    return _random_tree(leaves, rng)


def _random_tree(parts: List[PgaTerm], rng: random.Random) -> PgaTerm:
    if len(parts) == 1:
        return parts[0]
    if len(parts) > 64:
        return sequence_term(parts)
    split = rng.randrange(1, len(parts))
    return Concat(_random_tree(parts[:split], rng), _random_tree(parts[split:], rng))
