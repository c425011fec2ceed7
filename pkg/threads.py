import logging
from collections import Counter, deque
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Literal, Optional, Tuple, Union

from canonical import ReplyWitness, Verdict, jump_targets
from spi_model import CanonSpi, canonical_index, first_canonical_l
from syntax import Instruction, InstructionKind, LSeq


logger = logging.getLogger(__name__)

# Inlined chains longer than this get their own equation variable.
MAX_INLINE_DEPTH = 32


class StateKind(Enum):
    STOP = "S"
    DEADLOCK = "D"
    POST = "post"


@dataclass(frozen=True)
class ThreadState:
    kind: StateKind
    action: Optional[str] = None
    on_true: Optional[int] = None
    on_false: Optional[int] = None

    @property
    def successors(self) -> Tuple[int, ...]:
        if self.kind is not StateKind.POST:
            return ()
        if self.on_true == self.on_false:
            return (self.on_true,)
        return (self.on_true, self.on_false)

    def observe(self) -> str:
        return self.action if self.kind is StateKind.POST else self.kind.value


STOP_STATE = ThreadState(StateKind.STOP)
DEADLOCK_STATE = ThreadState(StateKind.DEADLOCK)


@dataclass(frozen=True)
class RegularThread:
    """Finite pointed state system of S, D and postconditional states."""

    states: Tuple[ThreadState, ...]
    root: int = 0

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        size = len(self.states)
        if not 0 <= self.root < size:
            raise ValueError(f"root {self.root} out of range for {size} states")
        for index, state in enumerate(self.states):
            if state.kind is StateKind.POST:
                if state.action is None:
                    raise ValueError(f"state {index} performs no action")
                for successor in (state.on_true, state.on_false):
                    if successor is None or not 0 <= successor < size:
                        raise ValueError(f"state {index} refers to missing state {successor}")

    @classmethod
    def from_table(cls, root: str, table: Dict[str, Tuple[str, str, str]]) -> "RegularThread":
        """Build a thread from ``name -> (action, true-name, false-name)``; S and D are reserved."""
        names = [root] + [name for name in table if name != root]
        for reserved in ("S", "D"):
            if reserved in table:
                raise ValueError(f"{reserved} is reserved")
        order = {name: index for index, name in enumerate(names)}
        extra: List[ThreadState] = []

        def index_of(name: str) -> int:
            if name in order:
                return order[name]
            if name not in ("S", "D"):
                raise ValueError(f"undefined state {name!r}")
            order[name] = len(names) + len(extra)
            extra.append(STOP_STATE if name == "S" else DEADLOCK_STATE)
            return order[name]

        states: List[ThreadState] = []
        for name in names:
            if name in ("S", "D"):
                states.append(STOP_STATE if name == "S" else DEADLOCK_STATE)
                continue
            action, on_true, on_false = table[name]
            states.append(ThreadState(StateKind.POST, action, index_of(on_true), index_of(on_false)))
        return cls(tuple(states) + tuple(extra), 0)

    def reachable(self) -> List[int]:
        """Reachable states in breadth-first order from the root, true branch first."""
        order = [self.root]
        seen = {self.root}
        queue = deque([self.root])
        while queue:
            for successor in self.states[queue.popleft()].successors:
                if successor not in seen:
                    seen.add(successor)
                    order.append(successor)
                    queue.append(successor)
        return order


class _ThreadBuilder:
    def __init__(self):
        self._states: List[Optional[ThreadState]] = []
        self._stop: Optional[int] = None
        self._deadlock: Optional[int] = None

    def reserve(self) -> int:
        self._states.append(None)
        return len(self._states) - 1

    def fill(self, index: int, state: ThreadState) -> None:
        self._states[index] = state

    def stop(self) -> int:
        if self._stop is None:
            self._stop = self.reserve()
            self.fill(self._stop, STOP_STATE)
        return self._stop

    def deadlock(self) -> int:
        if self._deadlock is None:
            self._deadlock = self.reserve()
            self.fill(self._deadlock, DEADLOCK_STATE)
        return self._deadlock

    def build(self, root: int) -> RegularThread:
        return RegularThread(tuple(self._states), root)


def _post(instruction: Instruction, next_state: int, skip_state: int) -> ThreadState:
    if instruction.kind is InstructionKind.BASIC:
        return ThreadState(StateKind.POST, instruction.name, next_state, next_state)
    if instruction.kind is InstructionKind.POS_TEST:
        return ThreadState(StateKind.POST, instruction.name, next_state, skip_state)
    return ThreadState(StateKind.POST, instruction.name, skip_state, next_state)


def extract(c: CanonSpi) -> RegularThread:
    # |u1;...;un| = |u1;...;un;(#0)^w|
    spi = c if c.period is not None else CanonSpi(c.preperiod, (Instruction.jump(0),))
    builder = _ThreadBuilder()
    state_of: Dict[int, int] = {}
    pending: deque = deque()
    targets = jump_targets(spi)

    def state_for(position: int) -> int:
        index = targets[canonical_index(spi, position)]
        if index is None:
            return builder.deadlock()
        if index not in state_of:
            if spi.word[index].kind is InstructionKind.HALT:
                state_of[index] = builder.stop()
            else:
                state_of[index] = builder.reserve()
                pending.append(index)
        return state_of[index]

    root = state_for(0)
    while pending:
        index = pending.popleft()
        next_state = state_for(index + 1)
        skip_state = state_for(index + 2)
        builder.fill(state_of[index], _post(spi.word[index], next_state, skip_state))
    thread = builder.build(root)
    logger.debug(f"Extracted {len(thread.states)} states from {c}")
    return thread


def extract_kernel(seq: LSeq) -> RegularThread:
    """Position-indexed extraction on the literal K-program (1-based positions)."""
    form = first_canonical_l(seq)
    items = list(form.items)
    if items[-1].is_repeat:
        n = items.pop().counter
        if n > len(items):
            raise ValueError(f"{form} is not a K-program: repeater exceeds {len(items)} instructions")
    else:
        items.append(Instruction.jump(0))
        n = 1
    total = len(items)

    def wrap(j: int) -> int:
        # |j, X| = |j-n, X| if j > n+k
        if j > total:
            j -= -(-(j - total) // n) * n
        return j

    builder = _ThreadBuilder()
    state_of: Dict[int, int] = {}
    pending: deque = deque()

    def state_for(j: int) -> int:
        seen = set()
        j = wrap(j)
        while items[j - 1].is_jump:
            if items[j - 1].counter == 0 or j in seen:
                return builder.deadlock()
            seen.add(j)
            j = wrap(j + items[j - 1].counter)
        if j not in state_of:
            if items[j - 1].kind is InstructionKind.HALT:
                state_of[j] = builder.stop()
            else:
                state_of[j] = builder.reserve()
                pending.append(j)
        return state_of[j]

    root = state_for(1)
    while pending:
        j = pending.popleft()
        builder.fill(state_of[j], _post(items[j - 1], state_for(j + 1), state_for(j + 2)))
    return builder.build(root)


def stop() -> RegularThread:
    return RegularThread((STOP_STATE,), 0)


def deadlock() -> RegularThread:
    return RegularThread((DEADLOCK_STATE,), 0)


def _shifted(thread: RegularThread, offset: int) -> List[ThreadState]:
    shifted = []
    for state in thread.states:
        if state.kind is StateKind.POST:
            state = ThreadState(StateKind.POST, state.action, state.on_true + offset, state.on_false + offset)
        shifted.append(state)
    return shifted


def postconditional(action: str, on_true: RegularThread, on_false: RegularThread) -> RegularThread:
    """P <| a |> Q as a new root over disjoint copies of both threads."""
    true_offset = 1
    false_offset = 1 + len(on_true.states)
    root = ThreadState(StateKind.POST, action, on_true.root + true_offset, on_false.root + false_offset)
    states = [root] + _shifted(on_true, true_offset) + _shifted(on_false, false_offset)
    return RegularThread(tuple(states), 0)


def action_prefix(action: str, thread: RegularThread) -> RegularThread:
    root = ThreadState(StateKind.POST, action, thread.root + 1, thread.root + 1)
    return RegularThread(tuple([root] + _shifted(thread, 1)), 0)


def minimize(thread: RegularThread) -> RegularThread:
    order = thread.reachable()
    states = thread.states

    def initial(index: int) -> Tuple:
        state = states[index]
        return (state.kind.value, state.action)

    block = _number(order, {index: initial(index) for index in order})
    while True:
        signatures = {}
        for index in order:
            state = states[index]
            if state.kind is StateKind.POST:
                signatures[index] = (block[index], block[state.on_true], block[state.on_false])
            else:
                signatures[index] = (block[index],)
        refined = _number(order, signatures)
        if len(set(refined.values())) == len(set(block.values())):
            break
        block = refined

    # Renumber classes breadth-first over the quotient so equal inputs give equal outputs.
    representative: Dict[int, int] = {}
    for index in order:
        representative.setdefault(block[index], index)
    quotient_order: List[int] = []
    position: Dict[int, int] = {}
    queue = deque([block[thread.root]])
    position[block[thread.root]] = 0
    while queue:
        current = queue.popleft()
        quotient_order.append(current)
        for successor in states[representative[current]].successors:
            successor_block = block[successor]
            if successor_block not in position:
                position[successor_block] = len(position)
                queue.append(successor_block)

    minimal = []
    for current in quotient_order:
        state = states[representative[current]]
        if state.kind is StateKind.POST:
            state = ThreadState(
                StateKind.POST, state.action, position[block[state.on_true]], position[block[state.on_false]]
            )
        minimal.append(state)
    logger.debug(f"Minimized thread from {len(order)} to {len(minimal)} states")
    return RegularThread(tuple(minimal), 0)


def _number(order: List[int], keys: Dict[int, Tuple]) -> Dict[int, int]:
    numbering: Dict[Tuple, int] = {}
    return {index: numbering.setdefault(keys[index], len(numbering)) for index in order}


def thread_equal(t1: RegularThread, t2: RegularThread) -> Verdict:
    """Bisimilarity of the roots; on inequality the shortest distinguishing reply path."""
    start = (t1.root, t2.root)
    parent: Dict[Tuple[int, int], Optional[Tuple[Tuple[int, int], bool]]] = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        left = t1.states[pair[0]]
        right = t2.states[pair[1]]
        if left.kind is not right.kind or left.action != right.action:
            replies: List[bool] = []
            step = parent[pair]
            while step is not None:
                previous, reply = step
                replies.append(reply)
                step = parent[previous]
            replies.reverse()
            return Verdict(
                equal=False,
                relation="thread",
                witness=ReplyWitness(replies=replies, left=left.observe(), right=right.observe()),
            )
        if left.kind is not StateKind.POST:
            continue
        for reply, following in ((True, (left.on_true, right.on_true)), (False, (left.on_false, right.on_false))):
            if following not in parent:
                parent[following] = (pair, reply)
                queue.append(following)
    return Verdict(equal=True, relation="thread")


# Recursive equations


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class Deadlock:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Prefix:
    action: str
    body: "ThreadExpr"


@dataclass(frozen=True)
class Postconditional:
    action: str
    on_true: "ThreadExpr"
    on_false: "ThreadExpr"


ThreadExpr = Union[Stop, Deadlock, Var, Prefix, Postconditional]

EquationStyle = Literal["unicode", "ascii"]

_SYMBOLS = {
    "unicode": ("∘", " ⊴ ", " ⊵ "),
    "ascii": (".", " <|", "|> "),
}


def _render(expr: ThreadExpr, style: EquationStyle, operand: bool) -> str:
    prefix, left_bracket, right_bracket = _SYMBOLS[style]
    if isinstance(expr, Stop):
        return "S"
    if isinstance(expr, Deadlock):
        return "D"
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Prefix):
        return f"{expr.action}{prefix}{_render(expr.body, style, True)}"
    text = (
        f"{_render(expr.on_true, style, True)}{left_bracket}{expr.action}"
        f"{right_bracket}{_render(expr.on_false, style, True)}"
    )
    return f"({text})" if operand else text


@dataclass(frozen=True)
class Equation:
    variable: str
    rhs: ThreadExpr

    def render(self, style: EquationStyle = "unicode") -> str:
        return f"{self.variable} = {_render(self.rhs, style, False)}"


@dataclass(frozen=True)
class EquationSystem:
    equations: Tuple[Equation, ...]

    def __post_init__(self):
        object.__setattr__(self, "equations", tuple(self.equations))
        if not self.equations:
            raise ValueError("an equation system defines at least one variable")

    @property
    def first_variable(self) -> str:
        return self.equations[0].variable

    def render(self, style: EquationStyle = "unicode") -> str:
        return "\n".join(equation.render(style) for equation in self.equations)

    def __str__(self) -> str:
        return self.render()


def to_equations(thread: RegularThread) -> EquationSystem:
    order = thread.reachable()
    states = thread.states
    references = Counter({thread.root: 1})
    for index in order:
        for successor in states[index].successors:
            references[successor] += 1

    named = {thread.root}
    depth = {thread.root: 0}
    for index in order:
        for successor in states[index].successors:
            if successor in depth or states[successor].kind is not StateKind.POST:
                continue
            if references[successor] >= 2:
                named.add(successor)
                depth[successor] = 0
                continue
            depth[successor] = 0 if index in named else depth[index] + 1
            if depth[successor] > MAX_INLINE_DEPTH:
                named.add(successor)
                depth[successor] = 0

    names = {index: f"X{number}" for number, index in enumerate(i for i in order if i in named)}

    def expression(index: int, head: bool) -> ThreadExpr:
        state = states[index]
        if state.kind is StateKind.STOP:
            return Stop()
        if state.kind is StateKind.DEADLOCK:
            return Deadlock()
        if index in names and not head:
            return Var(names[index])
        if state.on_true == state.on_false:
            return Prefix(state.action, expression(state.on_true, False))
        return Postconditional(state.action, expression(state.on_true, False), expression(state.on_false, False))

    return EquationSystem(tuple(Equation(names[index], expression(index, True)) for index in names))


def _gvquote(text: str) -> str:
    return '"{}"'.format(text.replace('"', r"\""))


def to_dot(thread: RegularThread) -> str:
    lines = ["digraph thread {", "  start [shape=point];", f"  start -> s{thread.root};"]
    for index in thread.reachable():
        state = thread.states[index]
        if state.kind is StateKind.POST:
            lines.append(f"  s{index} [label={_gvquote(state.action)}];")
        else:
            lines.append(f"  s{index} [label={_gvquote(state.kind.value)}, shape=box];")
    for index in thread.reachable():
        state = thread.states[index]
        if state.kind is not StateKind.POST:
            continue
        if state.on_true == state.on_false:
            lines.append(f"  s{index} -> s{state.on_true};")
        else:
            lines.append(f'  s{index} -> s{state.on_true} [label="true"];')
            lines.append(f'  s{index} -> s{state.on_false} [label="false", style=dashed];')
    lines.append("}")
    return "\n".join(lines) + "\n"
