import io
import json
import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent.parent))

from main import WorkbenchConfig, run


def test_eq_spc_equal():
    result = run(["eq", "+a;-b;#4;-b;#4;\\##4", "+a;-b;#4;\\##2", "--relation", "spc"])
    assert result.exit_code == 0
    assert result.stdout == "equal (spc)\n"


def test_eq_not_equal_prints_witness():
    result = run(["eq", "a", "a;!"])
    assert result.exit_code == 1
    assert result.stdout == "not equal (spc): position 2: end vs !\n"


def test_eq_relations_differ_on_deadlock_padding():
    assert run(["eq", "#0", "#0;#0", "--relation", "sc"]).exit_code == 1
    assert run(["eq", "#0", "#0;#0", "--relation", "thread"]).exit_code == 0
    assert run(["eq", "#2;a;(#5;b;+c)^w", "#4;a;(#2;b;+c)^w", "--relation", "sc"]).exit_code == 0


def test_extract_equations():
    result = run(["extract", "#4;a;(#2;b;+c)^w", "--format", "equations"])
    assert result.exit_code == 0
    assert result.stdout == "X0 = X0 ⊴ c ⊵ b∘X0\n"
    ascii_result = run(["extract", "#4;a;(#2;b;+c)^w", "--style", "ascii"])
    assert ascii_result.stdout == "X0 = X0 <|c|> b.X0\n"


def test_extract_dot():
    result = run(["extract", "+a;#3", "--format", "dot"])
    assert result.exit_code == 0
    assert result.stdout.startswith("digraph thread {\n")
    assert result.stdout.endswith("}\n")


def test_project_text():
    result = run(["project", "a;#2;\\##3"])
    assert result.exit_code == 0
    assert "padding added: 1\n" in result.stdout
    assert "result: (a;#2;#0)^w\n" in result.stdout


def test_project_json():
    result = run(["project", "a;#2;\\##3", "--format", "json"])
    document = json.loads(result.stdout)
    assert document["padding_added"] == 1
    assert document["result"] == "(a;#2;#0)^w"
    assert document["in_kernel"] is False


def test_member():
    assert run(["member", "a;b;\\##2"]).exit_code == 0
    result = run(["member", "a;\\##2"])
    assert result.exit_code == 1
    assert "deficit 1" in result.stdout


@pytest.mark.parametrize(
    "argv, output",
    [
        (["normalize", "+a;#2;(+b;#2;-c;#2)^w"], "+a;(#0;+b;#0;-c)^w\n"),
        (["normalize", "+a;#2;+b;#2;-c;#2;\\##4"], "+a;#0;+b;#0;-c;\\##4\n"),
        (["normalize", "+a;#2;(+b;#2;-c;#2)^w", "--form", "second"], "+a;#0;(+b;#0;-c;#0)^w\n"),
        (["normalize", "a;\\##1;b", "--form", "first"], "a;\\##1\n"),
        (["normalize", "+a;-b;#4;-b;#4;\\##4", "--form", "first-min"], "+a;-b;#4;\\##2\n"),
        (["parse", "(a;b);c"], "a;b;c\n"),
        (["parse", "a;##1"], "a;\\##1\n"),
        (["parse", "a;b", "--dialect", "pgla"], "a;b\n"),
        (["unfold", "a;\\##1", "--length", "4"], "a a a a ...\n"),
        (["unfold", "a;b", "--length", "5"], "a b\n"),
        (["unfold", "a;b;c", "--length", "2"], "a b ...\n"),
        (["parse", "--", "-a;b"], "-a;b\n"),
    ],
)
def test_golden_outputs(argv, output):
    result = run(argv)
    assert result.exit_code == 0, result.stderr
    assert result.stdout == output


def test_default_unfold_length_comes_from_config():
    result = run(["unfold", "a^w"], config=WorkbenchConfig(unfold_length=3))
    assert result.stdout == "a a a ...\n"


def test_stdin_expression():
    result = run(["parse", "-"], stdin=io.StringIO("a;(b)^w\n"))
    assert result.stdout == "a;b^w\n"


@pytest.mark.parametrize(
    "argv, message",
    [
        (["parse", "a;;b"], "error: syntax error at column 3: Expected instruction\n"),
        (["project", "a;\\##99999999"], "error: resource limit: "),
        (["parse", "a^w;\\##1"], "error: syntax error"),
        (["eq", "a;\\##2", "a"], "error: not a K-program"),
        (["unfold", "a", "--length", "-1"], "error: --length"),
        (["frobnicate", "a"], "error:"),
        (["eq", "a"], "error:"),
        (["parse", "-"], "error: no standard input"),
    ],
)
def test_errors_exit_two(argv, message):
    result = run(argv)
    assert result.exit_code == 2
    assert result.stderr.startswith(message)
    assert result.stdout == ""


def test_help_is_not_an_error():
    result = run(["--help"])
    assert result.exit_code == 0
    assert "usage:" in result.stdout


def test_output_is_deterministic():
    argv = ["extract", "a;(+b;#2;#3;c;#4;+d;!;a)^w"]
    assert run(argv) == run(argv)
    assert run(argv).stdout == "X0 = a∘X1\nX1 = c∘X1 ⊴ b ⊵ (S ⊴ d ⊵ X0)\n"


def test_random_input_never_crashes():
    rng = random.Random(10)
    alphabet = "ab+-#!;()^w\\0123 \t"
    verbs = ["parse", "normalize", "extract", "member", "project", "unfold"]
    for _ in range(10_000):
        if rng.random() < 0.5:
            text = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 20)))
        else:
            text = bytes(rng.randrange(1, 256) for _ in range(rng.randint(0, 20))).decode("latin-1")
        result = run([rng.choice(verbs), "--", text])
        assert result.exit_code in (0, 1, 2)
        if result.exit_code == 2:
            assert result.stderr.startswith("error:"), (text, result.stderr)


def test_config_from_env(monkeypatch):
    monkeypatch.setenv("PGA_WORKBENCH_LOG_LEVEL", "debug")
    monkeypatch.setenv("PGA_WORKBENCH_UNFOLD_LENGTH", "8")
    monkeypatch.setenv("PGA_WORKBENCH_EQUATION_STYLE", "ascii")
    monkeypatch.setenv("PGA_WORKBENCH_DEFAULT_FORM", "bogus")
    config = WorkbenchConfig.from_env()
    assert config.log_level == "DEBUG"
    assert config.unfold_length == 8
    assert config.equation_style == "ascii"
    assert config.default_form == "second-min"


def test_normalize_long_jump_chain():
    result = run(["normalize", ";".join(["#1"] * 5000) + ";a^w"])
    assert result.exit_code == 0
    assert result.stdout.startswith("#5000;#4999;")
    assert result.stdout.endswith(";#2;#1;a^w\n")
