"""CLI: config schema, exit codes, frozen output formats."""

import json
import math
import os
from pathlib import Path

import pytest

from bell_lab.cli import (
    ExperimentConfig,
    config_digest,
    main,
    parse_config_text,
    serialize_config,
)
from bell_lab.errors import ConfigError
from bell_lab.models import DiscreteSource, ModelKind, UniformAngleSource
from bell_lab.simulate import TrialLog

DATA = Path(__file__).parent / "data"

MINIMAL = """
model.kind = bell_deterministic
quad.a_deg = 0
quad.b_deg = 45
quad.c_deg = 135
quad.d_deg = 90
n_trials = 1000
seed = 7
"""


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# --- parsing -------------------------------------------------------------------


def test_parse_minimal():
    cfg = parse_config_text(MINIMAL)
    assert cfg.model.kind is ModelKind.BELL_DETERMINISTIC
    assert isinstance(cfg.model.source, UniformAngleSource)
    assert cfg.quad_deg == (0.0, 45.0, 135.0, 90.0)
    assert cfg.n_trials == 1000
    assert cfg.seed == 7
    assert cfg.outputs == {}


def test_parse_discrete_source_and_outputs():
    text = MINIMAL + "\nmodel.source.kind = discrete\nmodel.source.size = 16\noutputs.report = r.json\n"
    cfg = parse_config_text(text)
    assert cfg.model.source == DiscreteSource.uniform(16)
    assert cfg.outputs == {"report": "r.json"}


def test_parse_comments_and_blank_lines():
    cfg = parse_config_text("# header\n\n" + MINIMAL + "seed_comment_test = nothing".replace("seed_comment_test = nothing", "# trailing"))
    assert cfg.seed == 7


@pytest.mark.parametrize(
    "mutation,needle",
    [
        ("typo.key = 1", "typo.key"),
        ("n_trials = -5", "n_trials"),
        ("n_trials = many", "n_trials"),
        ("seed = -1", "seed"),
        ("quad.a_deg = inf", "quad.a_deg"),
        ("model.epsilon = 0.5", "model.epsilon"),  # not factorizable
        ("model.source.size = 4", "model.source.size"),  # without discrete kind
    ],
)
def test_parse_rejections_name_the_key(mutation, needle):
    lines = [ln for ln in MINIMAL.splitlines() if ln.strip()]
    if mutation.startswith(("n_trials", "seed")):
        lines = [ln for ln in lines if not ln.startswith(mutation.split(" ")[0])]
    if mutation.startswith("quad.a_deg"):
        lines = [ln for ln in lines if not ln.startswith("quad.a_deg")]
    text = "\n".join(lines + [mutation])
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert needle in str(exc.value)


def test_parse_duplicate_key():
    with pytest.raises(ConfigError) as exc:
        parse_config_text(MINIMAL + "\nseed = 8\n")
    assert "duplicate" in str(exc.value)
    assert "seed" in str(exc.value)


def test_parse_missing_required():
    text = "\n".join(ln for ln in MINIMAL.splitlines() if not ln.startswith("seed"))
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert "seed" in str(exc.value)


def test_parse_discrete_needs_exactly_one_of_size_weights():
    base = MINIMAL + "\nmodel.source.kind = discrete\n"
    with pytest.raises(ConfigError):
        parse_config_text(base)
    with pytest.raises(ConfigError):
        parse_config_text(base + "model.source.size = 4\nmodel.source.weights = 0.5 0.5\n")
    with pytest.raises(ConfigError):
        parse_config_text(base + "model.source.weights = 0.5 0.6\n")


def test_parse_epsilon_for_factorizable():
    text = MINIMAL.replace("bell_deterministic", "factorizable_instrument") + "\nmodel.epsilon = 0.25\n"
    cfg = parse_config_text(text)
    assert cfg.model.epsilon == 0.25
    with pytest.raises(ConfigError):
        parse_config_text(text.replace("0.25", "1.5"))


def test_round_trip_is_fixed_point():
    texts = [
        MINIMAL,
        MINIMAL + "\nmodel.source.kind = discrete\nmodel.source.weights = 0.125 0.375 0.5\noutputs.table = t.json\n",
        MINIMAL.replace("bell_deterministic", "factorizable_instrument") + "\nmodel.epsilon = 0.3\n",
        MINIMAL.replace("quad.a_deg = 0", "quad.a_deg = 33.125"),
    ]
    for text in texts:
        cfg = parse_config_text(text)
        cfg2 = parse_config_text(serialize_config(cfg))
        assert cfg2 == cfg
        assert serialize_config(cfg2) == serialize_config(cfg)
        assert config_digest(cfg2) == config_digest(cfg)


# --- exit codes ------------------------------------------------------------------


def test_simulate_minimal_exit_zero(tmp_path, capsys):
    cfg = write_cfg(tmp_path, MINIMAL)
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path / "out")]) == 0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert len(report["estimates"]) == 4
    assert report["seed"] == 7
    assert report["version"]
    assert report["config_digest"].startswith("sha256:")


def test_config_error_exit_two(tmp_path, capsys):
    cfg = write_cfg(tmp_path, MINIMAL.replace("n_trials = 1000", "n_trials = -1"))
    assert main(["simulate", "--config", cfg]) == 2
    err = capsys.readouterr().err
    assert "n_trials" in err


def test_missing_config_file_exit_two(tmp_path):
    assert main(["simulate", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_check_premise_failure_exit_three(tmp_path, capsys):
    text = MINIMAL.replace("bell_deterministic", "factorizable_instrument") + "\nmodel.epsilon = 0.5\n"
    cfg = write_cfg(tmp_path, text)
    assert main(["check", "--config", cfg]) == 3
    assert "anticorrelation" in capsys.readouterr().err


def test_tables_continuous_lambda_exit_four(tmp_path, capsys):
    cfg = write_cfg(tmp_path, MINIMAL)
    assert main(["tables", "--config", cfg, "--key-mode", "lambda"]) == 4
    err = capsys.readouterr().err
    assert "much smaller" in err  # quotes the cardinality precondition


def test_oracle_guard_exit_five(capsys):
    assert main(["oracle", "enumerate", "--m", "1000000"]) == 5


# --- command outputs -----------------------------------------------------------------


def test_setting_pair_dependent_report(tmp_path):
    text = MINIMAL.replace("bell_deterministic", "setting_pair_dependent").replace(
        "n_trials = 1000", "n_trials = 64"
    )
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / "out"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["chsh"]["value"] == 4.0
    assert report["chsh"]["std_error"] == 0.0
    assert report["chsh"]["flags"]["setting_dependent_distribution"] is True


def test_check_deterministic_model_passes(tmp_path, capsys):
    cfg = write_cfg(tmp_path, MINIMAL.replace("n_trials = 1000", "n_trials = 20000"))
    out = tmp_path / "out"
    assert main(["check", "--config", cfg, "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert stdout.count("PASS") == 2
    report = json.loads((out / "check.json").read_text())
    assert report["bell"]["verdict"] == "PASS"
    assert report["chsh"]["verdict"] == "PASS"


def test_check_quantum_reference_violates(tmp_path, capsys):
    cfg = write_cfg(tmp_path, MINIMAL)
    out = tmp_path / "out"
    assert main(["check", "--config", cfg, "--quantum-reference", "--out", str(out)]) == 0
    report = json.loads((out / "check.json").read_text())
    assert report["chsh"]["verdict"] == "VIOLATION"
    assert report["chsh"]["value"] == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert report["bell"]["verdict"] == "VIOLATION"


def test_tables_command_discrete(tmp_path, capsys):
    text = MINIMAL + "\nmodel.source.kind = discrete\nmodel.source.size = 4\n"
    cfg = write_cfg(tmp_path, text)
    out = tmp_path / "out"
    assert main(["tables", "--config", cfg, "--key-mode", "lambda", "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "row-sum histogram" in stdout
    assert "balance check: max |z|" in stdout
    obj = json.loads((out / "table.json").read_text())
    assert obj["table"]["schema"] == "bell-lab.outcome-table.v1"
    assert obj["lln_balance"] is not None
    assert set(obj["row_sum_histogram"]) <= {"-2", "2"}


def test_tables_command_lambda_time(tmp_path, capsys):
    cfg = write_cfg(tmp_path, MINIMAL)
    out = tmp_path / "out"
    assert main(["tables", "--config", cfg, "--key-mode", "lambda-time", "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "undefined row sums: 1000" in stdout
    obj = json.loads((out / "table.json").read_text())
    assert obj["table"]["complete_rows"] == 0
    assert obj["undefined_row_sums"] == 1000


def test_oracle_enumerate_certificate(capsys):
    assert main(["oracle", "enumerate", "--m", "4"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["operation"] == "enumerate"
    assert record["value"] == 2.0
    assert record["inputs_digest"].startswith("sha256:")
    assert record["certificate"]["total_strategies"] == 2**16


def test_oracle_quantum_certificate(capsys):
    assert main(["oracle", "quantum", "--quad-deg", "0", "45", "135", "90"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["value"] == pytest.approx(2 * math.sqrt(2), abs=1e-12)


def test_oracle_exact_with_model_file(tmp_path, capsys):
    from bell_lab.core import SettingQuad
    from bell_lab.models import bell_deterministic
    from bell_lab.oracle import discretize_model, finite_model_to_json_obj

    quad = SettingQuad.from_degrees(0, 45, 135, 90)
    fm = discretize_model(bell_deterministic(), [quad.a, quad.b, quad.c, quad.d], grid=360)
    path = tmp_path / "fm.json"
    path.write_text(json.dumps(finite_model_to_json_obj(fm)))
    assert main(["oracle", "exact", "--model", str(path), "--quad-deg", "0", "45", "135", "90"]) == 0
    record = json.loads(capsys.readouterr().out)
    assert record["value"] == 2.0


def test_plot_data_emission(tmp_path, capsys):
    cfg = write_cfg(tmp_path, MINIMAL.replace("n_trials = 1000", "n_trials = 4000"))
    sweep = tmp_path / "sweep.csv"
    conv = tmp_path / "conv.csv"
    assert main(["simulate", "--config", cfg, "--sweep", str(sweep), "--convergence", str(conv)]) == 0
    sweep_lines = sweep.read_text().splitlines()
    assert sweep_lines[0] == "angle_deg,mc_mean,mc_std_error,classical_closed_form,singlet_reference"
    assert len(sweep_lines) == 1 + 37  # 0..180 step 5
    conv_lines = conv.read_text().splitlines()
    assert conv_lines[0] == "n_trials,chsh_value,chsh_std_error"
    assert conv_lines[-1].startswith("4000,")


# --- reproducibility and golden formats ---------------------------------------------


def test_byte_identical_outputs_across_runs_and_threads(tmp_path):
    text = (
        MINIMAL
        + "\nmodel.source.kind = discrete\nmodel.source.size = 8\n"
        + "outputs.report = report.json\noutputs.trial_log = trials.csv\n"
    )
    cfg = write_cfg(tmp_path, text)
    blobs = []
    for sub, threads in (("r1", "1"), ("r2", "1"), ("r4", "4")):
        out = tmp_path / sub
        assert main(["simulate", "--config", cfg, "--out", str(out), "--threads", threads]) == 0
        blobs.append(((out / "report.json").read_bytes(), (out / "trials.csv").read_bytes()))
    assert blobs[0] == blobs[1] == blobs[2]


def test_golden_report_and_log(tmp_path):
    """Freeze the report schema and CSV column order against tests/data."""
    out = tmp_path / "out"
    rc = main(["simulate", "--config", str(DATA / "golden.cfg"), "--out", str(out)])
    assert rc == 0
    got_report = (out / "golden-report.json").read_bytes()
    got_csv = (out / "golden-trials.csv").read_bytes()
    if os.environ.get("REGEN_GOLDEN"):
        (DATA / "golden-report.json").write_bytes(got_report)
        (DATA / "golden-trials.csv").write_bytes(got_csv)
    assert got_report == (DATA / "golden-report.json").read_bytes()
    assert got_csv == (DATA / "golden-trials.csv").read_bytes()


def test_csv_reload_matches_cli_output(tmp_path):
    out = tmp_path / "out"
    main(["simulate", "--config", str(DATA / "golden.cfg"), "--out", str(out)])
    log = TrialLog.from_csv(out / "golden-trials.csv")
    assert len(log) == 64
    assert log.lambda_kind == "discrete"
    again = tmp_path / "again.csv"
    log.to_csv(again)
    assert again.read_bytes() == (out / "golden-trials.csv").read_bytes()


def test_experiment_config_quad_property():
    cfg = parse_config_text(MINIMAL)
    assert isinstance(cfg, ExperimentConfig)
    quad = cfg.quad
    assert quad.b.degrees == pytest.approx(45.0)
