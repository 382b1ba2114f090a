"""Command-line surface: score, learn and verify."""

import io

import pytest

from bnsl.cli import (
    EXIT_INFEASIBLE,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_USAGE,
    InputFormat,
    detect_format,
    main,
    parse_config,
    run,
)
from bnsl.formats.scores import parse_scores
from bnsl.instances import InstanceConfig, InstanceGenerator
from bnsl.oracle import dp_best


def invoke(*argv):
    stdout, stderr = io.StringIO(), io.StringIO()
    code = run(parse_config(list(argv)), stdout, stderr)
    return code, stdout.getvalue(), stderr.getvalue()


def dataset_text(data):
    lines = [" ".join(data.names), " ".join(str(a) for a in data.arities)]
    lines += [" ".join(str(int(v)) for v in row) for row in data.rows]
    return "\n".join(lines) + "\n"


def network_scores(output):
    return [float(line.split()[1]) for line in output.splitlines() if line.startswith("score ")]


@pytest.fixture
def score_file(tmp_path, three_node_scores):
    path = tmp_path / "three.scores"
    path.write_text(three_node_scores)
    return path


@pytest.fixture
def data_file(tmp_path):
    data = InstanceGenerator(42).dataset(InstanceConfig(p=4, rows=120))
    path = tmp_path / "four.dat"
    path.write_text(dataset_text(data))
    return path


def test_format_detection(three_node_scores):
    assert detect_format(three_node_scores) == InputFormat.SCORES
    assert detect_format("A B\n2 2\n0 1\n") == InputFormat.DATA


def test_learn_from_score_file(score_file, three_node_scores):
    code, out, err = invoke("learn", str(score_file))
    assert code == EXIT_OK
    assert network_scores(out) == [pytest.approx(dp_best(parse_scores(three_node_scores))[1])]
    assert network_scores(out) == [-26.0]
    assert "A <- {B} -8.000000" in out
    assert "# rank score gap status nodes" in out
    assert "# 1 -26.000000 0.00% optimal" in out
    assert "network(s) in" in err


def test_learn_is_deterministic(score_file):
    assert invoke("learn", str(score_file))[1] == invoke("learn", str(score_file))[1]


def test_kbest_scores_do_not_increase(score_file):
    code, out, _ = invoke("learn", str(score_file), "--kbest", "3")
    assert code == EXIT_OK
    scores = network_scores(out)
    assert len(scores) == 3
    assert scores == sorted(scores, reverse=True)
    assert "# rank 3" in out


def test_dot_output(score_file, tmp_path):
    target = tmp_path / "net.dot"
    code, out, _ = invoke("learn", str(score_file), "--format", "dot", "-o", str(target))
    assert code == EXIT_OK
    assert out == ""
    text = target.read_text()
    assert "digraph bn1 {" in text
    assert '"B" -> "A";' in text


def test_learn_from_dataset(data_file):
    code, out, _ = invoke("learn", str(data_file), "--palim", "2", "--no-gomory")
    assert code == EXIT_OK
    assert "# flags: set_packing=on sink_heuristic=on propagation=on gomory=off" in out
    assert len(network_scores(out)) == 1


def test_score_then_learn_agree(data_file, tmp_path):
    scores = tmp_path / "four.scores"
    assert invoke("score", str(data_file), "--palim", "2", "-o", str(scores))[0] == EXIT_OK
    table = parse_scores(scores.read_text())
    assert table.p == 4
    from_scores = network_scores(invoke("learn", str(scores))[1])
    from_data = network_scores(invoke("learn", str(data_file), "--palim", "2")[1])
    assert from_scores[0] == pytest.approx(from_data[0], abs=1e-6)
    assert from_scores[0] == pytest.approx(dp_best(table)[1], abs=1e-6)


def test_constraints_file(score_file, tmp_path):
    constraints = tmp_path / "edges.txt"
    constraints.write_text("edge B A forbidden\n")
    code, out, _ = invoke("learn", str(score_file), "--constraints", str(constraints))
    assert code == EXIT_OK
    assert "#   edge B A forbidden" in out
    assert "A <- {B}" not in out


def test_contradictory_constraints_exit_infeasible(score_file, tmp_path):
    constraints = tmp_path / "edges.txt"
    constraints.write_text("edge A B required\nedge B A required\n")
    code, _, err = invoke("learn", str(score_file), "--constraints", str(constraints))
    assert code == EXIT_INFEASIBLE
    assert "infeasible" in err


def test_time_limit_before_any_network_is_not_infeasible(score_file):
    code, out, err = invoke("learn", str(score_file), "--time-limit", "1e-9")
    assert code == EXIT_OK
    assert "infeasible" not in err
    assert "# rank 1: no network found before the limit" in out
    assert out.splitlines()[-1] == "# 1 none inf% feasible-timeout 0"
    assert network_scores(out) == []


def test_parse_error_exit_code(tmp_path):
    bad = tmp_path / "bad.dat"
    bad.write_text("A B\n2 2\n0 2\n")
    code, _, err = invoke("learn", str(bad))
    assert code == EXIT_PARSE
    assert "entry 2 ≥ arity 2 at line 3" in err


def test_missing_input_is_a_usage_error(tmp_path):
    code, _, err = invoke("learn", str(tmp_path / "nowhere.dat"))
    assert code == EXIT_USAGE
    assert "cannot read" in err


def test_invalid_option_values(score_file):
    assert main(["learn", str(score_file), "--palim", "-1"]) == EXIT_USAGE
    assert main(["learn", str(score_file), "--time-limit", "0"]) == EXIT_USAGE


def test_unknown_subcommand_exits_with_usage_code():
    with pytest.raises(SystemExit) as exc:
        parse_config(["transmogrify"])
    assert exc.value.code == EXIT_USAGE


def test_verify_instance(score_file):
    code, out, _ = invoke("verify", str(score_file))
    assert code == EXIT_OK
    assert "PASS instance_optimum" in out
    assert out.rstrip().endswith("0 failed")
