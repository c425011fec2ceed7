import random
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings

sys.path.insert(0, str(Path(__file__).parent.parent))

from canonical import ReplyWitness, minimize_second
from generators import canons, random_word, terms
from spi_model import CanonSpi, to_canon, to_canon_pga
from syntax import Concat, Instruction, LSeq, Prim, parse
from threads import (
    DEADLOCK_STATE,
    RegularThread,
    StateKind,
    ThreadState,
    action_prefix,
    deadlock,
    extract,
    extract_kernel,
    minimize,
    postconditional,
    stop,
    thread_equal,
    to_dot,
    to_equations,
)


def canon(text: str) -> CanonSpi:
    return to_canon(parse(text))


def thread_of(text: str) -> RegularThread:
    return extract(canon(text))


A_THEN_D = RegularThread.from_table("X", {"X": ("a", "D", "D")})
A_FOREVER = RegularThread.from_table("X", {"X": ("a", "X", "X")})
PICTURE = RegularThread.from_table(
    "Q",
    {
        "Q": ("a", "R", "R"),
        "R": ("b", "C", "T"),
        "C": ("c", "R", "R"),
        "T": ("d", "S", "Q"),
    },
)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("+a;#3", A_THEN_D),
        ("+a;#3;(#0)^w", A_THEN_D),
        ("#4;a;(#2;b;+c)^w", RegularThread.from_table("P", {"P": ("c", "P", "B"), "B": ("b", "P", "P")})),
        ("+a;#0;(b;#0;-c;#0)^w", RegularThread.from_table("X", {"X": ("a", "D", "B"), "B": ("b", "D", "D")})),
        (
            "+a;#0;(+b;#0;-c;#0)^w",
            RegularThread.from_table(
                "X", {"X": ("a", "D", "P"), "P": ("b", "D", "C"), "C": ("c", "P", "D")}
            ),
        ),
        ("a;(+b;#2;#3;c;#4;+d;!;a)^w", PICTURE),
        ("a;\\##1", A_FOREVER),
        ("!", stop()),
        ("#0", deadlock()),
        ("(#1;#1)^w", deadlock()),
    ],
)
def test_extraction_examples(text, expected):
    assert thread_equal(thread_of(text), expected).equal


def test_picture_equations():
    system = to_equations(minimize(thread_of("a;(+b;#2;#3;c;#4;+d;!;a)^w")))
    assert system.render() == "X0 = a∘X1\nX1 = c∘X1 ⊴ b ⊵ (S ⊴ d ⊵ X0)"
    assert system.first_variable == "X0"


def test_equations_inline_single_use_states():
    system = to_equations(minimize(thread_of("#4;a;(#2;b;+c)^w")))
    assert str(system) == "X0 = X0 ⊴ c ⊵ b∘X0"
    assert system.render("ascii") == "X0 = X0 <|c|> b.X0"


def test_trivial_equations():
    assert to_equations(stop()).render() == "X0 = S"
    assert to_equations(minimize(thread_of("a;\\##1"))).render() == "X0 = a∘X0"
    assert to_equations(A_THEN_D).render() == "X0 = a∘D"


def test_minimize_merges_deadlocks():
    thread = RegularThread((ThreadState(StateKind.POST, "a", 1, 2), DEADLOCK_STATE, DEADLOCK_STATE), 0)
    minimal = minimize(thread)
    assert len(minimal.states) == 2
    assert thread_equal(minimal, A_THEN_D).equal


def test_minimize_a_forever_is_one_state():
    minimal = minimize(thread_of("a;\\##1"))
    assert minimal.states == (ThreadState(StateKind.POST, "a", 0, 0),)


def test_minimize_picture_merges_equal_a_states():
    assert len(minimize(thread_of("a;(+b;#2;#3;c;#4;+d;!;a)^w")).states) == 5


def test_thread_equal_witness():
    a_then_s = RegularThread.from_table("X", {"X": ("a", "S", "S")})
    verdict = thread_equal(a_then_s, A_THEN_D)
    assert not verdict.equal
    assert verdict.witness == ReplyWitness(replies=[True], left="S", right="D")
    assert verdict.summary() == "not equal (thread): after replies [true]: S vs D"


def test_from_table_validation():
    with pytest.raises(ValueError):
        RegularThread.from_table("X", {"X": ("a", "Y", "S")})
    with pytest.raises(ValueError):
        RegularThread.from_table("S", {"S": ("a", "S", "S")})
    with pytest.raises(ValueError):
        RegularThread((ThreadState(StateKind.POST, "a", 0, 3),), 0)


def test_dot_output():
    assert to_dot(stop()) == 'digraph thread {\n  start [shape=point];\n  start -> s0;\n  s0 [label="S", shape=box];\n}\n'
    dot = to_dot(A_THEN_D)
    assert dot.count(" -> s") == 2
    assert "  s0 -> s1;" in dot
    picture = to_dot(minimize(thread_of("a;(+b;#2;#3;c;#4;+d;!;a)^w")))
    nodes = [line for line in picture.splitlines() if line.startswith("  s") and "->" not in line]
    assert len(nodes) == 5
    assert '[label="false", style=dashed]' in picture


def test_extract_kernel_rejects_non_kernel_input():
    with pytest.raises(ValueError):
        extract_kernel(LSeq((Instruction.basic("a"), Instruction.repeat(2))))


def test_correspondence_of_kernel_and_pga_extraction():
    rng = random.Random(1805)
    for _ in range(1000):
        u = random_word(rng, rng.randint(0, 6))
        v = random_word(rng, rng.randint(1, 5))
        kernel = extract_kernel(LSeq(u + v + (Instruction.repeat(len(v)),)))
        assert thread_equal(kernel, extract(CanonSpi(u, v))).equal
        if u:
            assert thread_equal(extract_kernel(LSeq(u)), extract(CanonSpi(u, None))).equal


@settings(deadline=None)
@given(terms)
def test_test_instructions_split_on_reply(x):
    plain = extract(to_canon_pga(x))
    skipped = extract(to_canon_pga(Concat(Prim(Instruction.jump(2)), x)))
    positive = extract(to_canon_pga(Concat(Prim(Instruction.pos_test("a")), x)))
    negative = extract(to_canon_pga(Concat(Prim(Instruction.neg_test("a")), x)))
    basic = extract(to_canon_pga(Concat(Prim(Instruction.basic("a")), x)))
    assert thread_equal(positive, postconditional("a", plain, skipped)).equal
    assert thread_equal(negative, postconditional("a", skipped, plain)).equal
    assert thread_equal(basic, action_prefix("a", plain)).equal


@settings(deadline=None)
@given(canons())
def test_minimize_is_idempotent_and_bisimilar(c):
    thread = extract(c)
    minimal = minimize(thread)
    assert minimize(minimal) == minimal
    assert thread_equal(minimal, thread).equal


@settings(deadline=None)
@given(canons())
def test_structural_normal_form_keeps_behavior(c):
    assert thread_equal(extract(c), extract(minimize_second(c))).equal


@settings(deadline=None)
@given(canons())
def test_extraction_state_count_is_bounded(c):
    assert len(extract(c).states) <= c.prefix_length + max(c.period_length, 1) + 2
