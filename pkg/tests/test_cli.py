import json

import pytest
from click.testing import CliRunner
from faker import Faker

from main import EXIT_ASSUMPTION, EXIT_BUDGET, EXIT_UNSUPPORTED, EXIT_USAGE, cli

fake = Faker()

def run(runner: CliRunner, *args: str):
    return runner.invoke(cli, [str(a) for a in args])

# --- Successful commands ---

def test_slope_needs_no_config(runner):
    result = run(runner, "slope", "--dim", "1:0,0")
    assert result.exit_code == 0
    assert result.output.strip() == "1/1"

def test_euler_against(runner, config_path):
    result = run(runner, "euler", "--quiver", config_path, "--dim", "2:4,1", "--against", "1:1,0")
    assert result.exit_code == 0
    assert result.output.strip() == "0"

def test_dims_as_json(runner, config_path):
    result = run(runner, "dims", "--quiver", config_path, "--dim", "2:4,1", "--format", "json")
    assert result.exit_code == 0
    assert json.loads(result.stdout) == {"dim": "2:4,1", "dim_rep_q": 4, "dim_rep_full": 24, "dim_moduli": 4}

def test_hn_types_one_per_line(runner, config_path):
    result = run(runner, "hn-types", "--quiver", config_path, "--dim", "2:4,1")
    assert result.exit_code == 0
    assert result.output.splitlines() == ["(1|1,0) > (1|3,1)", "(1|1,1) > (1|3,0)", "(1|2,0) > (1|2,1)"]

def test_codim_of_one_type(runner, config_path):
    result = run(runner, "codim", "--quiver", config_path, "--dim", "2:4,1", "--step", "1:1,1", "--step", "1:3,0")
    assert result.exit_code == 0
    assert result.output.strip() == "(1|1,1) > (1|3,0): 5"

def test_semistable_text(runner, config_path):
    result = run(runner, "semistable", "--quiver", config_path, "--dim", "2:2,0")
    assert result.exit_code == 0
    assert result.output.splitlines() == ["true", "stable = semistable: false"]

def test_poincare(runner, config_path):
    result = run(runner, "poincare", "--quiver", config_path, "--dim", "2:4,1")
    assert result.exit_code == 0
    assert result.output.strip() == "L^4 + L^3 + L^2 + L + 1"

def test_motive_with_user_table(runner, config_path, tmp_path):
    table = tmp_path / "table.json"
    table.write_text(json.dumps({"1:1,0": "L^3 - 1"}), encoding="utf-8")
    result = run(runner, "motive", "rep-full", "--quiver", config_path, "--dim", "1:1,0", "--user-table", table)
    assert result.exit_code == 0
    assert result.output.strip() == "L^3 - 1"

def test_count(runner, config_path):
    result = run(runner, "count", "--quiver", config_path, "--dim", "1:2,1", "--prime", "3", "--format", "json")
    assert result.exit_code == 0
    answer = json.loads(result.stdout)
    assert (answer["count"], answer["predicted"]) == (384, "384")

def test_census_text(runner, config_path):
    result = run(runner, "census", "--quiver", config_path, "--dim", "2:2,0", "--prime", "2")
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert "(1|0,0) > (1|2,0): 126 (predicted 126)" in lines
    assert lines[-1] == "total: 3906 (predicted 3906)"

def test_output_is_deterministic(runner, config_path):
    seed = str(fake.random_int(0, 10**6))
    args = ("si-eval", "--quiver", config_path, "--dim", "2:4,1", "--seed", seed)
    first, second = run(runner, *args), run(runner, *args)
    assert first.exit_code == 0
    assert first.output == second.output

def test_check_suite_passes_on_the_running_example(runner, config_path):
    result = run(runner, "check", "--quiver", config_path, "--format", "json")
    assert result.exit_code == 0
    results = json.loads(result.stdout)["results"]
    assert all(r["passed"] for r in results)
    assert not any(r["skipped"] for r in results)

# --- Exit codes ---

def test_usage_errors(runner, config_path, tmp_path, write_config):
    missing = tmp_path / f"{fake.word()}.json"
    assert run(runner, "dims", "--quiver", missing, "--dim", "1:0,0").exit_code == EXIT_USAGE
    assert run(runner, "dims", "--quiver", config_path, "--dim", "1:x,0").exit_code == EXIT_USAGE
    assert run(runner, "dims", "--quiver", config_path, "--dim", "1:1,0,0").exit_code == EXIT_USAGE
    assert run(runner, "dims", "--dim", "1:1,0").exit_code == EXIT_USAGE
    assert run(runner, "count", "--quiver", config_path, "--dim", "1:2,1", "--prime", "4").exit_code == EXIT_USAGE
    assert run(runner, "slope").exit_code == EXIT_USAGE

    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    assert run(runner, "dims", "--quiver", broken, "--dim", "1:0,0").exit_code == EXIT_USAGE

    schema = write_config({"quiver": {"vertices": ["1"]}, "extension": {"t": [1, 2]}}, name="schema.json")
    result = run(runner, "dims", "--quiver", schema, "--dim", "1:0")
    assert result.exit_code == EXIT_USAGE
    assert "invalid config" in result.output

def test_unsemistable_poincare_is_an_assumption_error(runner, config_path):
    result = run(runner, "poincare", "--quiver", config_path, "--dim", "1:4,0")
    assert result.exit_code == EXIT_ASSUMPTION

def test_symbolic_engine_is_unsupported_for_two_arrows(runner, write_config, kronecker_config):
    path = write_config(kronecker_config)
    result = run(runner, "motive", "rep-full", "--quiver", path, "--dim", "1:1,0")
    assert result.exit_code == EXIT_UNSUPPORTED

@pytest.mark.parametrize("budget", [1, 10])
def test_enumeration_over_budget(runner, write_config, running_config, budget):
    data = running_config.model_dump(exclude_none=True)
    data["budgets"] = {"max_enumeration": budget}
    path = write_config(data)
    result = run(runner, "count", "--quiver", path, "--dim", "1:2,1", "--prime", "2")
    assert result.exit_code == EXIT_BUDGET
